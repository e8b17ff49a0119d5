//! Markov time scan: an ensemble of Louvain runs at every grid time.

use std::fmt;
use std::str::FromStr;

use log::debug;
use rayon::prelude::*;

use super::diffusion::SpectralKernel;
use super::louvain::{derive_seed, louvain_optimize, LouvainOutcome};
use crate::error::{Error, Result};
use crate::metrics::ensemble_vi_pairs;
use crate::partition::Partition;
use crate::similarity::SparseGraph;

/// Grid of Markov times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeGrid {
    /// `points` times evenly spaced in log10 between `lo` and `hi`.
    Log { lo: f64, hi: f64, points: usize },
    /// `lo, lo + step, ...` up to `hi` inclusive.
    Linear { lo: f64, hi: f64, step: f64 },
}

impl TimeGrid {
    /// 100 log-spaced points over 10⁻²..10².
    pub const DEFAULT: TimeGrid = TimeGrid::Log {
        lo: 0.01,
        hi: 100.0,
        points: 100,
    };

    /// 0.01..100 in steps of 0.01 (10⁴ points).
    pub const DENSE_LINEAR: TimeGrid = TimeGrid::Linear {
        lo: 0.01,
        hi: 100.0,
        step: 0.01,
    };

    pub fn times(&self) -> Vec<f64> {
        match *self {
            TimeGrid::Log { lo, hi, points } => {
                if points == 1 {
                    return vec![lo];
                }
                let (a, b) = (lo.log10(), hi.log10());
                let step = (b - a) / (points - 1) as f64;
                (0..points)
                    .map(|i| if i == points - 1 { hi } else { 10f64.powf(a + step * i as f64) })
                    .collect()
            }
            TimeGrid::Linear { lo, hi, step } => {
                let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
                (0..count).map(|i| lo + step * i as f64).collect()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            TimeGrid::Log { lo, hi, points } => lo > 0.0 && hi >= lo && points >= 1 && hi.is_finite(),
            TimeGrid::Linear { lo, hi, step } => lo >= 0.0 && hi >= lo && step > 0.0 && hi.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid time grid {self}")))
        }
    }
}

impl fmt::Display for TimeGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeGrid::Log { lo, hi, points } => write!(f, "log:{lo}:{hi}:{points}"),
            TimeGrid::Linear { lo, hi, step } => write!(f, "linear:{lo}:{hi}:{step}"),
        }
    }
}

impl FromStr for TimeGrid {
    type Err = Error;

    /// `log:LO:HI:POINTS` or `linear:LO:HI:STEP`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let bad = || Error::invalid(format!("cannot parse time grid {s:?}; expected log:LO:HI:POINTS or linear:LO:HI:STEP"));
        if parts.len() != 4 {
            return Err(bad());
        }
        let lo: f64 = parts[1].parse().map_err(|_| bad())?;
        let hi: f64 = parts[2].parse().map_err(|_| bad())?;
        let grid = match parts[0] {
            "log" => TimeGrid::Log {
                lo,
                hi,
                points: parts[3].parse().map_err(|_| bad())?,
            },
            "linear" => TimeGrid::Linear {
                lo,
                hi,
                step: parts[3].parse().map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        grid.validate()?;
        Ok(grid)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanParams {
    pub times: Vec<f64>,
    pub n_runs: usize,
    pub n_top: usize,
    pub master_seed: u64,
}

impl ScanParams {
    pub fn new(times: Vec<f64>, n_runs: usize, n_top: usize, master_seed: u64) -> Self {
        ScanParams {
            times,
            n_runs,
            n_top,
            master_seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.times.is_empty() {
            return Err(Error::invalid("empty Markov time grid"));
        }
        if self.times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::invalid("Markov times must be finite and non-negative"));
        }
        if self.times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("Markov time grid must be strictly ascending"));
        }
        if self.n_runs == 0 || self.n_top == 0 || self.n_top > self.n_runs {
            return Err(Error::invalid(format!(
                "need 1 <= n_top <= n_runs, got n_top={} n_runs={}",
                self.n_top, self.n_runs
            )));
        }
        Ok(())
    }
}

/// Outcome at one Markov time.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRecord {
    pub t: f64,
    /// Highest-stability partition of the ensemble, `H*(t)`.
    pub partition: Partition,
    pub stability: f64,
    /// Mean pairwise variation of information over the top runs.
    pub vi: f64,
    /// Every pairwise VI among the top runs, in (a, b) order with a < b.
    pub ensemble_vi: Vec<f64>,
}

impl ScanRecord {
    pub fn n_communities(&self) -> usize {
        self.partition.n_communities()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityScan {
    pub records: Vec<ScanRecord>,
}

impl StabilityScan {
    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn partitions(&self) -> Vec<&Partition> {
        self.records.iter().map(|r| &r.partition).collect()
    }
}

/// Scan every grid time on `graph`; see [`scan_with_kernel`].
pub fn scan_markov_times(graph: &SparseGraph, params: &ScanParams) -> Result<StabilityScan> {
    params.validate()?;
    let kernel = SpectralKernel::from_graph(graph)?;
    scan_with_kernel(&kernel, params)
}

/// At each time: build `R(t)`, run Louvain `n_runs` times with derived
/// seeds, keep the best partition and the mean VI over the `n_top` best.
/// Output does not depend on the rayon thread count.
pub fn scan_with_kernel(kernel: &SpectralKernel, params: &ScanParams) -> Result<StabilityScan> {
    params.validate()?;
    let records = params
        .times
        .par_iter()
        .enumerate()
        .map(|(ti, &t)| scan_one(kernel, params, ti, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(StabilityScan { records })
}

fn scan_one(kernel: &SpectralKernel, params: &ScanParams, ti: usize, t: f64) -> Result<ScanRecord> {
    let r = kernel.stability_matrix(t)?;
    let runs: Vec<LouvainOutcome> = (0..params.n_runs)
        .into_par_iter()
        .map(|run| louvain_optimize(&r, derive_seed(params.master_seed, ti, run)))
        .collect();

    let mut ranked: Vec<usize> = (0..runs.len()).collect();
    ranked.sort_by(|&a, &b| runs[b].stability.total_cmp(&runs[a].stability).then(a.cmp(&b)));
    let top: Vec<&Partition> = ranked[..params.n_top].iter().map(|&k| &runs[k].partition).collect();
    let ensemble_vi = ensemble_vi_pairs(&top);
    let vi = if ensemble_vi.is_empty() {
        0.0
    } else {
        ensemble_vi.iter().sum::<f64>() / ensemble_vi.len() as f64
    };
    let best = &runs[ranked[0]];
    debug!(
        "t={t:.4}: {} communities, r={:.6}, VI={vi:.4}",
        best.partition.n_communities(),
        best.stability
    );
    Ok(ScanRecord {
        t,
        partition: best.partition.clone(),
        stability: best.stability,
        vi,
        ensemble_vi,
    })
}
