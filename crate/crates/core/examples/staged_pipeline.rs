//! The file-based pipeline the `mstopics` binary drives: generate a corpus,
//! then run every stage and list what each one wrote.
//!
//! cargo run --release --example staged_pipeline [OUT_DIR]

use std::path::PathBuf;

use multiscale_topics::pipeline::{self, RunConfig};
use multiscale_topics::synthetic::CorpusSpec;

fn main() -> multiscale_topics::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("mstopics-staged-example"));
    let conf = pipeline::generate_corpus(&dir, &CorpusSpec::default(), 7)?;

    let mut cfg = RunConfig::default();
    cfg.apply_file(&conf)?;
    cfg.set("n_runs", "20")?;
    cfg.set("n_top", "8")?;

    println!("graph     {}", pipeline::build_graph(&cfg)?);
    println!("scan      {}", pipeline::scan(&cfg)?);
    for s in pipeline::select(&cfg)? {
        println!("scale     {} communities at t={:.3}", s.n_communities, s.t_star);
    }
    println!("evaluate  {}", pipeline::evaluate(&cfg)?);
    println!("summarize {}", pipeline::summarize(&cfg)?);

    for stage in ["graph", "scan", "select", "evaluate", "summarize"] {
        let n = walk(&cfg.out.join(stage));
        println!("{stage:<10} {n} files under {}", cfg.out.join(stage).display());
    }
    Ok(())
}

fn walk(dir: &std::path::Path) -> usize {
    std::fs::read_dir(dir)
        .map(|entries| {
            entries
                .flatten()
                .map(|e| if e.path().is_dir() { walk(&e.path()) } else { 1 })
                .sum()
        })
        .unwrap_or(0)
}
