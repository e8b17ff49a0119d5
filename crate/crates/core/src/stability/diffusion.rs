//! Random-walk diffusion on a weighted graph and the Markov Stability
//! autocovariance kernel.
//!
//! The random-walk Laplacian `L = I - D⁻¹A` is similar to the symmetric
//! normalized Laplacian `L_sym = D^{1/2} L D^{-1/2}`, so
//!
//! ```text
//! exp(-tL)        = D^{-1/2} U exp(-tΛ) Uᵀ D^{1/2}
//! Π exp(-tL)      = V exp(-tΛ) Vᵀ,   V = diag(√π) U
//! ```
//!
//! where `L_sym = U Λ Uᵀ`. One eigendecomposition per graph then serves
//! every Markov time.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::similarity::SparseGraph;

/// Entries of the kernel down to this value are clamped to zero; anything
/// more negative is reported as a numerical failure.
pub const NEGATIVE_CLAMP: f64 = 1e-10;

/// Modes with `exp(-tλ)` below this factor are dropped from the kernel.
const MODE_CUTOFF: f64 = 1e-18;

/// Random-walk Laplacian and stationary distribution of a graph.
#[derive(Debug, Clone)]
pub struct DiffusionOperators {
    pub laplacian: DMatrix<f64>,
    pub stationary: Vec<f64>,
}

pub fn diffusion_operators(graph: &SparseGraph) -> Result<DiffusionOperators> {
    let n = graph.n();
    let strengths = graph.strengths();
    if let Some(i) = strengths.iter().position(|&s| s <= 0.0) {
        return Err(Error::invalid(format!("node {i} is isolated")));
    }
    let total: f64 = strengths.iter().sum();
    let stationary = strengths.iter().map(|s| s / total).collect();

    let mut laplacian = DMatrix::identity(n, n);
    for e in graph.edges() {
        laplacian[(e.u, e.v)] = -e.weight / strengths[e.u];
        laplacian[(e.v, e.u)] = -e.weight / strengths[e.v];
    }
    Ok(DiffusionOperators {
        laplacian,
        stationary,
    })
}

/// Eigendecomposition of the symmetric normalized Laplacian, reused for
/// every Markov time.
#[derive(Debug, Clone)]
pub struct SpectralKernel {
    eigenvalues: Vec<f64>,
    /// Columns are the eigenvectors `U`, ascending eigenvalue order.
    vectors: DMatrix<f64>,
    stationary: Vec<f64>,
    sqrt_stationary: Vec<f64>,
}

impl SpectralKernel {
    pub fn new(ops: &DiffusionOperators) -> Result<Self> {
        let n = ops.stationary.len();
        let sqrt_pi: Vec<f64> = ops.stationary.iter().map(|p| p.sqrt()).collect();
        let lap = &ops.laplacian;
        let sym = DMatrix::from_fn(n, n, |i, j| {
            let a = sqrt_pi[i] * lap[(i, j)] / sqrt_pi[j];
            let b = sqrt_pi[j] * lap[(j, i)] / sqrt_pi[i];
            0.5 * (a + b)
        });
        let eig = SymmetricEigen::new(sym);
        if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("eigendecomposition produced non-finite values".into()));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
        let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(n, n, |i, k| eig.eigenvectors[(i, order[k])]);
        Ok(SpectralKernel {
            eigenvalues,
            vectors,
            stationary: ops.stationary.clone(),
            sqrt_stationary: sqrt_pi,
        })
    }

    pub fn from_graph(graph: &SparseGraph) -> Result<Self> {
        Self::new(&diffusion_operators(graph)?)
    }

    pub fn n(&self) -> usize {
        self.stationary.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    /// `U_k · diag(exp(-tλ/2))` over the modes that survive the cutoff,
    /// with each row optionally scaled by `row_scale`.
    fn half_kernel(&self, t: f64, row_scale: Option<&[f64]>) -> DMatrix<f64> {
        let n = self.n();
        let kept: Vec<(usize, f64)> = self
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(k, &lambda)| (k, (-t * lambda).exp()))
            .filter(|&(_, f)| f > MODE_CUTOFF)
            .map(|(k, f)| (k, f.sqrt()))
            .collect();
        DMatrix::from_fn(n, kept.len(), |i, c| {
            let (k, f) = kept[c];
            let s = row_scale.map_or(1.0, |r| r[i]);
            s * self.vectors[(i, k)] * f
        })
    }

    /// Symmetric product `W Wᵀ`, with both triangles averaged so the result
    /// is exactly symmetric.
    fn gram(w: &DMatrix<f64>) -> Vec<f64> {
        let n = w.nrows();
        let prod = w * w.transpose();
        let mut values: Vec<f64> = prod.as_slice().to_vec();
        for i in 0..n {
            for j in i + 1..n {
                let avg = 0.5 * (values[i * n + j] + values[j * n + i]);
                values[i * n + j] = avg;
                values[j * n + i] = avg;
            }
        }
        values
    }

    /// The transition kernel `exp(-tL)`, rows summing to one. Small negative
    /// entries from rounding are clamped to zero.
    pub fn kernel(&self, t: f64) -> Result<DMatrix<f64>> {
        check_time(t)?;
        let n = self.n();
        if t == 0.0 {
            return Ok(DMatrix::identity(n, n));
        }
        let m = Self::gram(&self.half_kernel(t, None));
        let sp = &self.sqrt_stationary;
        let mut out = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let v = m[i * n + j] * sp[j] / sp[i];
                out[(i, j)] = clamp_entry(v, i, j)?;
            }
        }
        Ok(out)
    }

    /// The unclustered autocovariance `Π exp(-tL) − ππᵀ` at Markov time `t`.
    pub fn stability_matrix(&self, t: f64) -> Result<StabilityMatrix> {
        check_time(t)?;
        let n = self.n();
        let pi = &self.stationary;
        let mut values = if t == 0.0 {
            let mut v = vec![0.0; n * n];
            for i in 0..n {
                v[i * n + i] = pi[i];
            }
            v
        } else {
            Self::gram(&self.half_kernel(t, Some(&self.sqrt_stationary)))
        };
        values.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for (j, v) in row.iter_mut().enumerate() {
                *v -= pi[i] * pi[j];
            }
        });
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite stability matrix at t={t}")));
        }
        Ok(StabilityMatrix { t, n, values })
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("Markov time must be finite and >= 0, got {t}")));
    }
    Ok(())
}

fn clamp_entry(v: f64, i: usize, j: usize) -> Result<f64> {
    if v >= 0.0 {
        Ok(v)
    } else if v >= -NEGATIVE_CLAMP {
        Ok(0.0)
    } else {
        Err(Error::Numerical(format!("kernel entry ({i}, {j}) = {v:e} is negative")))
    }
}

/// `exp(-tL)` for a single Markov time. For many times, build a
/// [`SpectralKernel`] once and call [`SpectralKernel::kernel`].
pub fn diffusion_kernel(ops: &DiffusionOperators, t: f64) -> Result<DMatrix<f64>> {
    check_time(t)?;
    SpectralKernel::new(ops)?.kernel(t)
}

/// Dense symmetric quality matrix `R(t) = Π exp(-tL) − ππᵀ`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityMatrix {
    t: f64,
    n: usize,
    values: Vec<f64>,
}

impl StabilityMatrix {
    /// Wrap an arbitrary symmetric matrix, e.g. for testing the optimizer on
    /// a hand-made quality function.
    pub fn from_values(t: f64, n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::LengthMismatch {
                expected: n * n,
                got: values.len(),
            });
        }
        Ok(StabilityMatrix { t, n, values })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_row_sum(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).iter().sum::<f64>().abs())
            .fold(0.0, f64::max)
    }

    pub fn max_col_sum(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.get(i, j)).sum::<f64>().abs())
            .fold(0.0, f64::max)
    }
}

/// Markov Stability `r(t, H)`: the sum of `R(t)` over within-community pairs,
/// i.e. `trace(Hᵀ R H)` without forming `H`.
pub fn stability_score(r: &StabilityMatrix, partition: &Partition) -> Result<f64> {
    if partition.len() != r.n {
        return Err(Error::LengthMismatch {
            expected: r.n,
            got: partition.len(),
        });
    }
    Ok(partition
        .communities()
        .iter()
        .map(|members| {
            members
                .iter()
                .map(|&i| {
                    let row = r.row(i);
                    members.iter().map(|&j| row[j]).sum::<f64>()
                })
                .sum::<f64>()
        })
        .sum())
}
