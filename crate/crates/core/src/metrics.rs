//! Information-theoretic comparison of partitions and label sets.
//!
//! Entropies are in nats. Joint counts are accumulated through sorted
//! vectors rather than hash maps so every sum runs in a fixed order and
//! results are bitwise reproducible.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::embeddings::{EmbeddingMatrix, LabelSet};
use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::stability::StabilityScan;

fn check_len(a: &Partition, b: &Partition) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(())
}

/// Sorted (label_a, label_b, count) triples of the joint distribution.
fn joint_counts(a: &[usize], b: &[usize]) -> Vec<(usize, usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = a.iter().copied().zip(b.iter().copied()).collect();
    pairs.sort_unstable();
    let mut out: Vec<(usize, usize, usize)> = Vec::new();
    for p in pairs {
        match out.last_mut() {
            Some(last) if (last.0, last.1) == p => last.2 += 1,
            _ => out.push((p.0, p.1, 1)),
        }
    }
    out
}

fn marginal(labels: &[usize]) -> Vec<usize> {
    let mut counts = vec![0; labels.iter().max().map_or(0, |m| m + 1)];
    for &l in labels {
        counts[l] += 1;
    }
    counts
}

/// Shannon entropy (nats) of a count vector.
pub fn entropy(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let c = c as f64;
            c / n * (n / c).ln()
        })
        .sum()
}

fn vi_from_labels(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as f64;
    if a.is_empty() {
        return 0.0;
    }
    let (ma, mb) = (marginal(a), marginal(b));
    // Σ p_ij ln(p_i p_j / p_ij²): every term is non-negative.
    joint_counts(a, b)
        .into_iter()
        .map(|(i, j, c)| {
            let c = c as f64;
            c / n * ((ma[i] as f64 / c) * (mb[j] as f64 / c)).ln()
        })
        .sum::<f64>()
        .max(0.0)
}

/// `VI = H(A) + H(B) − 2 I(A; B)` in nats.
pub fn variation_of_information(a: &Partition, b: &Partition) -> Result<f64> {
    check_len(a, b)?;
    Ok(vi_from_labels(a.membership(), b.membership()))
}

/// VI divided by `ln N`, bounded in [0, 1].
pub fn normalized_variation_of_information(a: &Partition, b: &Partition) -> Result<f64> {
    let vi = variation_of_information(a, b)?;
    let n = a.len();
    Ok(if n > 1 { vi / (n as f64).ln() } else { 0.0 })
}

/// VI for every unordered pair `(a, b)`, `a < b`, in lexicographic order.
pub fn ensemble_vi_pairs(partitions: &[&Partition]) -> Vec<f64> {
    let k = partitions.len();
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b))).collect();
    pairs
        .par_iter()
        .map(|&(a, b)| vi_from_labels(partitions[a].membership(), partitions[b].membership()))
        .collect()
}

/// Mean VI over all unordered pairs of the ensemble.
pub fn ensemble_vi(partitions: &[&Partition]) -> Result<f64> {
    if partitions.len() < 2 {
        return Err(Error::invalid("ensemble VI needs at least 2 partitions"));
    }
    let n = partitions[0].len();
    if let Some(p) = partitions.iter().find(|p| p.len() != n) {
        return Err(Error::LengthMismatch {
            expected: n,
            got: p.len(),
        });
    }
    let pairs = ensemble_vi_pairs(partitions);
    Ok(pairs.iter().sum::<f64>() / pairs.len() as f64)
}

/// VI between optimized partitions at every pair of scan times.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossTimeVI {
    pub times: Vec<f64>,
    values: Vec<f64>,
}

impl CrossTimeVI {
    pub fn from_partitions(times: Vec<f64>, partitions: &[&Partition]) -> Result<Self> {
        let g = partitions.len();
        if times.len() != g {
            return Err(Error::LengthMismatch {
                expected: g,
                got: times.len(),
            });
        }
        if let Some(p) = partitions.iter().find(|p| p.len() != partitions[0].len()) {
            return Err(Error::LengthMismatch {
                expected: partitions[0].len(),
                got: p.len(),
            });
        }
        let mut values = vec![0.0; g * g];
        values.par_chunks_mut(g.max(1)).enumerate().for_each(|(i, row)| {
            for (j, slot) in row.iter_mut().enumerate().skip(i + 1) {
                *slot = vi_from_labels(partitions[i].membership(), partitions[j].membership());
            }
        });
        for i in 0..g {
            for j in i + 1..g {
                values[j * g + i] = values[i * g + j];
            }
        }
        Ok(CrossTimeVI { times, values })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.times.len() + j]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn write(&self, path: impl AsRef<Path>, preamble: &str) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::from(preamble);
        out.push('t');
        for t in &self.times {
            write!(out, "\t{t:?}").unwrap();
        }
        out.push('\n');
        for (i, t) in self.times.iter().enumerate() {
            write!(out, "{t:?}").unwrap();
            for j in 0..self.len() {
                write!(out, "\t{:?}", self.get(i, j)).unwrap();
            }
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

pub fn cross_time_vi(scan: &StabilityScan) -> Result<CrossTimeVI> {
    CrossTimeVI::from_partitions(scan.times(), &scan.partitions())
}

/// How many documents took part in a label/cluster comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Coverage {
    pub used: usize,
    pub dropped: usize,
}

impl Coverage {
    pub fn fraction(&self) -> f64 {
        let total = self.used + self.dropped;
        if total == 0 {
            0.0
        } else {
            self.used as f64 / total as f64
        }
    }
}

/// Categories × clusters count matrix over the co-labeled documents.
#[derive(Debug, Clone, PartialEq)]
pub struct ContingencyTable {
    pub categories: Vec<String>,
    pub clusters: Vec<usize>,
    pub counts: Vec<Vec<u64>>,
    /// Standardized Pearson residuals, same shape as `counts`.
    pub z_scores: Vec<Vec<f64>>,
    pub coverage: Coverage,
}

/// Build the contingency of `labels` against `partition` (rows aligned to `ids`).
/// Documents without a label are dropped and counted in the coverage.
pub fn contingency(labels: &LabelSet, ids: &[String], partition: &Partition) -> Result<ContingencyTable> {
    if ids.len() != partition.len() {
        return Err(Error::LengthMismatch {
            expected: partition.len(),
            got: ids.len(),
        });
    }
    let mut cells: BTreeMap<(&str, usize), u64> = BTreeMap::new();
    let mut coverage = Coverage::default();
    for (id, &c) in ids.iter().zip(partition.membership()) {
        match labels.get(id) {
            Some(cat) => {
                *cells.entry((cat, c)).or_default() += 1;
                coverage.used += 1;
            }
            None => coverage.dropped += 1,
        }
    }
    if coverage.used == 0 {
        return Err(Error::invalid(format!(
            "no document carries both a {:?} label and a cluster",
            labels.name
        )));
    }
    let categories: Vec<String> = {
        let mut v: Vec<&str> = cells.keys().map(|k| k.0).collect();
        v.dedup();
        v.into_iter().map(String::from).collect()
    };
    let clusters: Vec<usize> = {
        let mut v: Vec<usize> = cells.keys().map(|k| k.1).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let counts: Vec<Vec<u64>> = categories
        .iter()
        .map(|cat| {
            clusters
                .iter()
                .map(|&c| cells.get(&(cat.as_str(), c)).copied().unwrap_or(0))
                .collect()
        })
        .collect();
    let z_scores = standardized_residuals(&counts);
    Ok(ContingencyTable {
        categories,
        clusters,
        counts,
        z_scores,
        coverage,
    })
}

/// `(n_ij − E_ij) / sqrt(E_ij (1 − r_i/n)(1 − c_j/n))` with `E_ij = r_i c_j / n`.
/// Cells whose variance vanishes (a row or column holding everything) get 0.
pub fn standardized_residuals(counts: &[Vec<u64>]) -> Vec<Vec<f64>> {
    let rows: Vec<f64> = counts.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let ncols = counts.first().map_or(0, Vec::len);
    let cols: Vec<f64> = (0..ncols)
        .map(|j| counts.iter().map(|r| r[j]).sum::<u64>() as f64)
        .collect();
    let n: f64 = rows.iter().sum();
    counts
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, &obs)| {
                    let expected = rows[i] * cols[j] / n;
                    let var = expected * (1.0 - rows[i] / n) * (1.0 - cols[j] / n);
                    if var > 0.0 {
                        (obs as f64 - expected) / var.sqrt()
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// `U(T|C) = I(T; C) / H(T)` from a categories × clusters count matrix.
pub fn uncertainty_from_counts(counts: &[Vec<u64>]) -> Result<f64> {
    let rows: Vec<usize> = counts.iter().map(|r| r.iter().sum::<u64>() as usize).collect();
    let ncols = counts.first().map_or(0, Vec::len);
    let cols: Vec<f64> = (0..ncols)
        .map(|j| counts.iter().map(|r| r[j]).sum::<u64>() as f64)
        .collect();
    let h_t = entropy(&rows);
    if h_t.is_nan() || h_t <= 0.0 {
        return Err(Error::invalid("uncertainty coefficient undefined: labels have zero entropy"));
    }
    let n: f64 = rows.iter().sum::<usize>() as f64;
    let mut mutual = 0.0;
    for (i, row) in counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                mutual += c / n * (c * n / (rows[i] as f64 * cols[j])).ln();
            }
        }
    }
    Ok((mutual / h_t).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uncertainty {
    pub value: f64,
    pub coverage: Coverage,
}

/// Fraction of label entropy explained by the clustering, over co-labeled documents.
pub fn uncertainty_coefficient(labels: &LabelSet, ids: &[String], partition: &Partition) -> Result<Uncertainty> {
    let table = contingency(labels, ids, partition)?;
    if table.categories.len() < 2 {
        return Err(Error::invalid(
            "uncertainty coefficient undefined: fewer than 2 categories on the co-labeled subset",
        ));
    }
    Ok(Uncertainty {
        value: uncertainty_from_counts(&table.counts)?,
        coverage: table.coverage,
    })
}

impl ContingencyTable {
    fn write_matrix<T: std::fmt::Debug>(&self, path: &Path, preamble: &str, cells: &[Vec<T>]) -> Result<()> {
        let mut out = String::from(preamble);
        out.push_str("category");
        for c in &self.clusters {
            write!(out, "\tc{c}").unwrap();
        }
        out.push('\n');
        for (cat, row) in self.categories.iter().zip(cells) {
            out.push_str(cat);
            for v in row {
                write!(out, "\t{v:?}").unwrap();
            }
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn write_counts(&self, path: impl AsRef<Path>, preamble: &str) -> Result<()> {
        self.write_matrix(path.as_ref(), preamble, &self.counts)
    }

    pub fn write_z_scores(&self, path: impl AsRef<Path>, preamble: &str) -> Result<()> {
        self.write_matrix(path.as_ref(), preamble, &self.z_scores)
    }
}

/// Per-category result of the centroid benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidHits {
    pub category: String,
    pub hits: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentroidScore {
    pub score: usize,
    pub max_score: usize,
    pub per_category: Vec<CentroidHits>,
}

/// For each category, average its documents into a centroid, take the
/// `n_nearest` labeled documents by cosine similarity (ties to the lower
/// row) and count how many carry that category.
pub fn centroid_benchmark(e: &EmbeddingMatrix, labels: &LabelSet, n_nearest: usize) -> Result<CentroidScore> {
    let aligned = labels.aligned(e);
    let labeled: Vec<usize> = (0..e.len()).filter(|&i| aligned[i].is_some()).collect();
    if n_nearest == 0 || n_nearest > labeled.len() {
        return Err(Error::invalid(format!(
            "n_nearest must lie in 1..={}, got {n_nearest}",
            labeled.len()
        )));
    }
    let categories = labels.categories();
    let norms: Vec<f64> = e.rows().map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();

    let per_category = categories
        .par_iter()
        .map(|&cat| {
            let members: Vec<usize> = labeled
                .iter()
                .copied()
                .filter(|&i| aligned[i].as_deref() == Some(cat))
                .collect();
            if members.is_empty() {
                return Err(Error::invalid(format!("category {cat:?} has no documents")));
            }
            let mut centroid = vec![0.0; e.dim()];
            for &i in &members {
                for (c, v) in centroid.iter_mut().zip(e.row(i)) {
                    *c += v;
                }
            }
            let m = members.len() as f64;
            centroid.iter_mut().for_each(|c| *c /= m);
            let cnorm = centroid.iter().map(|v| v * v).sum::<f64>().sqrt();
            if cnorm == 0.0 {
                return Err(Error::Numerical(format!("centroid of {cat:?} has zero norm")));
            }
            let mut ranked: Vec<(f64, usize)> = labeled
                .iter()
                .map(|&i| {
                    let dot: f64 = centroid.iter().zip(e.row(i)).map(|(a, b)| a * b).sum();
                    (dot / (cnorm * norms[i]), i)
                })
                .collect();
            ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            let hits = ranked[..n_nearest]
                .iter()
                .filter(|(_, i)| aligned[*i].as_deref() == Some(cat))
                .count();
            Ok(CentroidHits {
                category: cat.to_string(),
                hits,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CentroidScore {
        score: per_category.iter().map(|h| h.hits).sum(),
        max_score: per_category.len() * n_nearest,
        per_category,
    })
}
