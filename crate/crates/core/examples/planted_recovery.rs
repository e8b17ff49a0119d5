//! Benchmark: do both planted levels of a hierarchical block model come back
//! as robust scales, and does the worker count change any artifact?
//!
//! cargo run --release --example planted_recovery [SEED]

use multiscale_topics::pipeline::bench_recovery;

fn main() -> multiscale_topics::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let base = std::env::temp_dir().join("mstopics-recovery-example");
    for workers in [1, 4] {
        let out = base.join(format!("workers-{workers}"));
        let r = bench_recovery(&out, seed, 100, 50, workers)?;
        let found: Vec<String> = r.scales.iter().map(|s| format!("{}@{:.3}", s.n_communities, s.t_star)).collect();
        println!(
            "{workers} worker(s): scales [{}], 16 blocks: {}, 4 super-blocks: {}, {:.1?}",
            found.join(", "),
            r.fine_found,
            r.coarse_found,
            r.elapsed
        );
    }
    let a = std::fs::read(base.join("workers-1/select/report.tsv")).expect("report written");
    let b = std::fs::read(base.join("workers-4/select/report.tsv")).expect("report written");
    println!("reports identical across worker counts: {}", a == b);
    Ok(())
}
