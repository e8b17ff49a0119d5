//! Build MST-kNN similarity graphs from document vectors and see how
//! sparsification changes with k.
//!
//! cargo run --example build_graph [EMBEDDINGS.tsv]

use multiscale_topics::embeddings::{load_embeddings, Format};
use multiscale_topics::similarity::build_mst_knn;
use multiscale_topics::synthetic::CorpusSpec;

fn main() -> multiscale_topics::Result<()> {
    let e = match std::env::args().nth(1) {
        Some(path) => load_embeddings(&path, Format::from_path(path.as_ref()))?,
        None => CorpusSpec::default().generate(7)?.embeddings,
    };
    println!("{} documents, {} dimensions", e.len(), e.dim());
    println!("{:>3} {:>7} {:>10} {:>9}", "k", "edges", "connected", "mean deg");
    for k in [0, 1, 5, 13, 17] {
        if k >= e.len() {
            break;
        }
        let g = build_mst_knn(&e, k)?;
        let mean_degree = 2.0 * g.edges().len() as f64 / g.n() as f64;
        println!("{k:>3} {:>7} {:>10} {mean_degree:>9.2}", g.edges().len(), g.is_connected());
    }
    Ok(())
}
