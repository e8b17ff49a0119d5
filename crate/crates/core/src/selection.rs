//! Picking robust partitions out of a Markov time scan, and membership flows
//! between partitions at different resolutions.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::embeddings::LabelSet;
use crate::error::{Error, Result};
use crate::metrics::{variation_of_information, CrossTimeVI};
use crate::partition::Partition;
use crate::stability::StabilityScan;

/// Thresholds for plateau and dip detection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionParams {
    /// Mean cross-time VI a plateau must stay below. `None` means
    /// 10% of the largest cross-time VI in the scan.
    pub plateau_threshold: Option<f64>,
    /// Minimum plateau length, in grid points.
    pub min_plateau_len: usize,
    /// Width of the centered window used for dip prominence.
    pub dip_window: usize,
}

impl Default for SelectionParams {
    fn default() -> Self {
        SelectionParams {
            plateau_threshold: None,
            min_plateau_len: 5,
            dip_window: 3,
        }
    }
}

/// Floor on the automatic threshold so that a scan with identical
/// partitions everywhere (all VI exactly 0) still forms a plateau.
const MIN_AUTO_THRESHOLD: f64 = 1e-12;

impl SelectionParams {
    pub fn resolve_threshold(&self, cross: &CrossTimeVI) -> f64 {
        self.plateau_threshold
            .unwrap_or_else(|| (0.1 * cross.max()).max(MIN_AUTO_THRESHOLD))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustScale {
    pub t_star: f64,
    pub index: usize,
    pub partition: Partition,
    pub n_communities: usize,
    /// Grid index interval `[lo, hi]` of the plateau.
    pub plateau: (usize, usize),
    pub t_lo: f64,
    pub t_hi: f64,
    /// Peak of VI(t) in the dip window minus VI(t_star).
    pub dip_depth: f64,
    /// Mean VI(t, t′) over the plateau block.
    pub plateau_score: f64,
}

/// Prefix sums over a square matrix for O(1) block means.
struct BlockSums {
    g: usize,
    sums: Vec<f64>,
}

impl BlockSums {
    fn new(cross: &CrossTimeVI) -> Self {
        let g = cross.len();
        let mut sums = vec![0.0; (g + 1) * (g + 1)];
        for i in 0..g {
            for j in 0..g {
                sums[(i + 1) * (g + 1) + j + 1] = cross.get(i, j) + sums[i * (g + 1) + j + 1]
                    + sums[(i + 1) * (g + 1) + j]
                    - sums[i * (g + 1) + j];
            }
        }
        BlockSums { g, sums }
    }

    /// Mean over the square block `[i, j] × [i, j]`.
    fn mean(&self, i: usize, j: usize) -> f64 {
        let w = self.g + 1;
        let s = self.sums[(j + 1) * w + j + 1] - self.sums[i * w + j + 1] - self.sums[(j + 1) * w + i]
            + self.sums[i * w + i];
        let len = (j - i + 1) as f64;
        s / (len * len)
    }
}

/// Greedy left-to-right plateau detection: from each start, take the longest
/// block whose mean VI(t, t′) is below `threshold`; keep it if it spans at
/// least `min_len` points and resume after it. Intervals are disjoint.
pub fn find_plateaux(cross: &CrossTimeVI, threshold: f64, min_len: usize) -> Vec<(usize, usize, f64)> {
    let g = cross.len();
    let sums = BlockSums::new(cross);
    let mut out = Vec::new();
    let mut i = 0;
    while i < g {
        let end = (i..g).rev().find(|&j| sums.mean(i, j) < threshold);
        match end {
            Some(j) if j + 1 - i >= min_len => {
                out.push((i, j, sums.mean(i, j).max(0.0)));
                i = j + 1;
            }
            _ => i += 1,
        }
    }
    out
}

/// Robust partitions: plateaux of VI(t, t′), each represented by the time of
/// lowest ensemble VI(t) inside it (ties: the plateau medoid, then earlier
/// t). Candidates whose partitions coincide are merged (the longer plateau
/// wins). Sorted by community count, finest first.
pub fn find_robust_scales(scan: &StabilityScan, cross: &CrossTimeVI, params: &SelectionParams) -> Result<Vec<RobustScale>> {
    let g = scan.len();
    if cross.len() != g || scan.times() != cross.times {
        return Err(Error::invalid("scan and cross-time VI use different time grids"));
    }
    if params.min_plateau_len == 0 || g < params.min_plateau_len {
        return Err(Error::invalid(format!(
            "grid of {g} points is shorter than the minimum plateau length {}",
            params.min_plateau_len
        )));
    }
    let threshold = params.resolve_threshold(cross);
    let vi: Vec<f64> = scan.records.iter().map(|r| r.vi).collect();
    let half = params.dip_window / 2;

    let mut candidates: Vec<RobustScale> = Vec::new();
    for (lo, hi, score) in find_plateaux(cross, threshold, params.min_plateau_len) {
        // Equal VI(t) is common inside a plateau (often exactly zero), so
        // ties go to the point closest on average to the rest of the plateau.
        let centrality = |a: usize| (lo..=hi).map(|b| cross.get(a, b)).sum::<f64>();
        let star = (lo..=hi)
            .min_by(|&a, &b| {
                vi[a]
                    .total_cmp(&vi[b])
                    .then(centrality(a).total_cmp(&centrality(b)))
                    .then(a.cmp(&b))
            })
            .expect("non-empty plateau");
        let window = star.saturating_sub(half)..=(star + half).min(g - 1);
        let peak = vi[window].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let record = &scan.records[star];
        let candidate = RobustScale {
            t_star: record.t,
            index: star,
            partition: record.partition.clone(),
            n_communities: record.n_communities(),
            plateau: (lo, hi),
            t_lo: scan.records[lo].t,
            t_hi: scan.records[hi].t,
            dip_depth: (peak - vi[star]).max(0.0),
            plateau_score: score,
        };
        let duplicate = candidates
            .iter()
            .position(|c| variation_of_information(&c.partition, &candidate.partition).unwrap_or(1.0) == 0.0);
        match duplicate {
            Some(k) => {
                let len = |s: &RobustScale| s.plateau.1 - s.plateau.0;
                if len(&candidate) > len(&candidates[k]) {
                    candidates[k] = candidate;
                }
            }
            None => candidates.push(candidate),
        }
    }
    candidates.sort_by(|a, b| b.n_communities.cmp(&a.n_communities).then(a.index.cmp(&b.index)));
    Ok(candidates)
}

/// One band of a Sankey diagram.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Flow {
    pub source: String,
    pub target: String,
    pub count: usize,
}

/// Count identical pairs; output follows the key order (numeric cluster
/// indices sort numerically).
fn flows_from_pairs<S: Ord + ToString, T: Ord + ToString>(pairs: impl Iterator<Item = (S, T)>) -> Vec<Flow> {
    let mut counts: BTreeMap<(S, T), usize> = BTreeMap::new();
    for p in pairs {
        *counts.entry(p).or_default() += 1;
    }
    counts
        .into_iter()
        .map(|((source, target), count)| Flow {
            source: source.to_string(),
            target: target.to_string(),
            count,
        })
        .collect()
}

/// Membership flows from a fine partition to a coarse one over the same nodes.
pub fn sankey_flows(fine: &Partition, coarse: &Partition) -> Result<Vec<Flow>> {
    if fine.len() != coarse.len() {
        return Err(Error::LengthMismatch {
            expected: fine.len(),
            got: coarse.len(),
        });
    }
    if fine.is_empty() {
        return Err(Error::invalid("no documents to flow"));
    }
    Ok(flows_from_pairs(
        fine.membership()
            .iter()
            .zip(coarse.membership())
            .map(|(&a, &b)| (a, b)),
    ))
}

/// Flows from clusters to hand-coded categories on the co-labeled subset.
pub fn sankey_flows_to_labels(fine: &Partition, ids: &[String], labels: &LabelSet) -> Result<Vec<Flow>> {
    if ids.len() != fine.len() {
        return Err(Error::LengthMismatch {
            expected: fine.len(),
            got: ids.len(),
        });
    }
    let flows = flows_from_pairs(
        ids.iter()
            .zip(fine.membership())
            .filter_map(|(id, &c)| labels.get(id).map(|l| (c, l))),
    );
    if flows.is_empty() {
        return Err(Error::invalid("partition and label set share no documents"));
    }
    Ok(flows)
}

/// Fraction of fine clusters with at least 90% of their members in a single
/// coarse cluster. A diagnostic only.
pub fn quasi_hierarchy_score(fine: &Partition, coarse: &Partition) -> Result<f64> {
    let flows = sankey_flows(fine, coarse)?;
    let mut per_source: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for f in &flows {
        let e = per_source.entry(f.source.as_str()).or_default();
        e.0 += f.count;
        e.1 = e.1.max(f.count);
    }
    let nested = per_source
        .values()
        .filter(|(total, top)| *top as f64 >= 0.9 * *total as f64)
        .count();
    Ok(nested as f64 / per_source.len() as f64)
}

/// Write flows between consecutive levels as `level<TAB>source<TAB>target<TAB>count`.
/// Sources and targets are prefixed with their level so nodes stay distinct.
pub fn write_sankey(path: impl AsRef<Path>, levels: &[(String, Vec<Flow>)], preamble: &str) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from(preamble);
    out.push_str("level\tsource\ttarget\tcount\n");
    for (name, flows) in levels {
        for f in flows {
            writeln!(out, "{name}\t{}\t{}\t{}", f.source, f.target, f.count).unwrap();
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
