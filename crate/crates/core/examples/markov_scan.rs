//! Scan Markov time on a planted two-level block model and watch the
//! optimal partition coarsen.
//!
//! cargo run --release --example markov_scan

use multiscale_topics::metrics::variation_of_information;
use multiscale_topics::stability::{scan_markov_times, ScanParams, TimeGrid};
use multiscale_topics::synthetic::HierarchicalSbm;

fn main() -> multiscale_topics::Result<()> {
    let planted = HierarchicalSbm::default().generate(1)?;
    let grid = TimeGrid::Log {
        lo: 0.01,
        hi: 100.0,
        points: 25,
    };
    let scan = scan_markov_times(&planted.graph, &ScanParams::new(grid.times(), 40, 20, 1))?;

    println!("{:>9} {:>5} {:>9} {:>7} {:>8} {:>8}", "t", "comms", "r(t)", "VI(t)", "VI fine", "VI coarse");
    for rec in &scan.records {
        println!(
            "{:>9.4} {:>5} {:>9.5} {:>7.3} {:>8.3} {:>8.3}",
            rec.t,
            rec.n_communities(),
            rec.stability,
            rec.vi,
            variation_of_information(&rec.partition, &planted.fine)?,
            variation_of_information(&rec.partition, &planted.coarse)?,
        );
    }
    Ok(())
}
