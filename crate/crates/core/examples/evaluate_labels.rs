//! Compare partitions with hand-coded categories: uncertainty coefficient,
//! contingency z-scores and the centroid benchmark.
//!
//! cargo run --release --example evaluate_labels

use multiscale_topics::metrics::{centroid_benchmark, contingency, uncertainty_coefficient};
use multiscale_topics::similarity::build_mst_knn;
use multiscale_topics::stability::{louvain_optimize, SpectralKernel};
use multiscale_topics::synthetic::CorpusSpec;

fn main() -> multiscale_topics::Result<()> {
    let corpus = CorpusSpec::default().generate(7)?;
    let e = &corpus.embeddings;
    let graph = build_mst_knn(e, 5)?;
    let kernel = SpectralKernel::from_graph(&graph)?;

    println!("{:>7} {:>6} {:>9} {:>9}", "t", "comms", "U(level1)", "U(level2)");
    for t in [0.05, 0.3, 2.0, 80.0] {
        let r = kernel.stability_matrix(t)?;
        let best = (0..20)
            .map(|seed| louvain_optimize(&r, seed))
            .max_by(|a, b| a.stability.total_cmp(&b.stability))
            .expect("at least one run");
        let u1 = uncertainty_coefficient(&corpus.level1, e.ids(), &best.partition)?;
        let u2 = uncertainty_coefficient(&corpus.level2, e.ids(), &best.partition)?;
        println!("{t:>7.2} {:>6} {:>9.3} {:>9.3}", best.partition.n_communities(), u1.value, u2.value);

        if t == 80.0 {
            let table = contingency(&corpus.level1, e.ids(), &best.partition)?;
            println!("\nz-scores, level 1 categories x clusters at t={t}:");
            for (cat, row) in table.categories.iter().zip(&table.z_scores) {
                let cells: Vec<String> = row.iter().map(|z| format!("{z:>7.2}")).collect();
                println!("  {cat:<12}{}", cells.join(""));
            }
        }
    }

    let score = centroid_benchmark(e, &corpus.level2, 15)?;
    println!("\ncentroid benchmark on level 2: {} of {}", score.score, score.max_score);
    Ok(())
}
