//! Louvain heuristic generalized to a dense signed quality matrix.
//!
//! For a symmetric matrix `Q` the quality of a partition is the sum of `Q`
//! over within-community pairs. Moving node `i` from community `a` to `b`
//! changes it by `2 (s_ib − s_ia)`, where `s_ic` sums `Q_ij` over the other
//! members `j` of `c`. The diagonal term travels with the node and cancels.

use std::borrow::Cow;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::diffusion::{stability_score, StabilityMatrix};
use crate::partition::Partition;

const MAX_SWEEPS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LouvainOutcome {
    pub partition: Partition,
    pub stability: f64,
    pub levels: usize,
}

/// SplitMix64 finalizer; used to derive independent run seeds.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one Louvain run, a pure function of (master seed, time index, run index).
pub fn derive_seed(master: u64, t_index: usize, run: usize) -> u64 {
    mix64(mix64(mix64(master) ^ t_index as u64) ^ (run as u64).rotate_left(32))
}

/// Run the two-phase heuristic on `R(t)`. Node visit order at every level is
/// a shuffle drawn from `seed`; identical inputs and seed give identical output.
pub fn louvain_optimize(r: &StabilityMatrix, seed: u64) -> LouvainOutcome {
    let n = r.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = r.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let tol = scale * 1e-13;

    let mut membership: Vec<usize> = (0..n).collect();
    let mut matrix: Cow<[f64]> = Cow::Borrowed(r.values());
    let mut m = n;
    let mut levels = 0;
    while m > 1 {
        let assign = local_moves(&matrix, m, tol, &mut rng);
        let c = assign.iter().max().map_or(0, |&x| x + 1);
        if c == m {
            break;
        }
        levels += 1;
        for x in membership.iter_mut() {
            *x = assign[*x];
        }
        matrix = Cow::Owned(aggregate(&matrix, m, &assign, c));
        m = c;
    }
    let partition = Partition::new(&membership);
    let stability = stability_score(r, &partition).expect("partition sized to matrix");
    LouvainOutcome {
        partition,
        stability,
        levels,
    }
}

/// Phase one: greedy single-node moves until a full sweep makes none.
/// Returns canonical community labels for the `m` (super-)nodes.
fn local_moves(q: &[f64], m: usize, tol: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut comm: Vec<usize> = (0..m).collect();
    let mut size = vec![1usize; m];
    let mut free: Vec<usize> = Vec::new();
    let mut sums = vec![0.0; m];
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(rng);

    for _ in 0..MAX_SWEEPS {
        let mut moved = false;
        for &i in &order {
            let row = &q[i * m..(i + 1) * m];
            sums.fill(0.0);
            for (j, &v) in row.iter().enumerate() {
                if j != i {
                    sums[comm[j]] += v;
                }
            }
            let a = comm[i];
            let own = sums[a];
            let mut best = a;
            let mut best_gain = tol;
            for c in 0..m {
                if c != a && size[c] > 0 {
                    let gain = 2.0 * (sums[c] - own);
                    if gain > best_gain {
                        best_gain = gain;
                        best = c;
                    }
                }
            }
            // Leaving for an empty community.
            if size[a] > 1 {
                let gain = -2.0 * own;
                if gain > best_gain {
                    best_gain = gain;
                    best = *free.last().expect("a free slot exists when a community has 2+ members");
                }
            }
            if best != a {
                debug_assert!(best_gain >= 0.0);
                if size[best] == 0 {
                    free.pop();
                }
                size[a] -= 1;
                if size[a] == 0 {
                    free.push(a);
                }
                size[best] += 1;
                comm[i] = best;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    Partition::new(&comm).membership().to_vec()
}

/// Phase two: sum `q` into a `c × c` matrix over community blocks.
fn aggregate(q: &[f64], m: usize, assign: &[usize], c: usize) -> Vec<f64> {
    let mut out = vec![0.0; c * c];
    for i in 0..m {
        let ci = assign[i] * c;
        for (j, &v) in q[i * m..(i + 1) * m].iter().enumerate() {
            out[ci + assign[j]] += v;
        }
    }
    for a in 0..c {
        for b in a + 1..c {
            let avg = 0.5 * (out[a * c + b] + out[b * c + a]);
            out[a * c + b] = avg;
            out[b * c + a] = avg;
        }
    }
    out
}
