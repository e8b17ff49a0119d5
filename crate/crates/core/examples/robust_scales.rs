//! Pick robust partitions out of a scan: plateaux of cross-time VI, dips of
//! VI(t), and how the chosen scales nest (Sankey flows).
//!
//! cargo run --release --example robust_scales

use multiscale_topics::metrics::cross_time_vi;
use multiscale_topics::selection::{find_robust_scales, quasi_hierarchy_score, sankey_flows, SelectionParams};
use multiscale_topics::stability::{scan_markov_times, ScanParams, TimeGrid};
use multiscale_topics::synthetic::HierarchicalSbm;

fn main() -> multiscale_topics::Result<()> {
    let planted = HierarchicalSbm::default().generate(3)?;
    let grid = TimeGrid::Log {
        lo: 0.01,
        hi: 100.0,
        points: 50,
    };
    let scan = scan_markov_times(&planted.graph, &ScanParams::new(grid.times(), 60, 20, 3))?;
    let cross = cross_time_vi(&scan)?;
    let params = SelectionParams::default();
    println!("plateau threshold: {:.4} nats", params.resolve_threshold(&cross));

    let scales = find_robust_scales(&scan, &cross, &params)?;
    for s in &scales {
        println!(
            "{:>3} communities at t*={:.3}, plateau [{:.3}, {:.3}], dip {:.3}, mean VI {:.4}",
            s.n_communities, s.t_star, s.t_lo, s.t_hi, s.dip_depth, s.plateau_score
        );
    }
    for pair in scales.windows(2) {
        let (fine, coarse) = (&pair[0].partition, &pair[1].partition);
        println!(
            "\n{} -> {} communities, nesting score {:.3}",
            fine.n_communities(),
            coarse.n_communities(),
            quasi_hierarchy_score(fine, coarse)?
        );
        for f in sankey_flows(fine, coarse)?.iter().take(8) {
            println!("  {} -> {}: {}", f.source, f.target, f.count);
        }
    }
    Ok(())
}
