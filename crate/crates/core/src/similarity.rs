//! Dense pairwise similarity/distance matrices and the MST-kNN graph.
//!
//! The sparsified graph is the union of the minimum spanning tree of the
//! max-normalized cosine distance and each node's k nearest neighbours,
//! weighted by normalized similarity. It is connected by construction.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::embeddings::EmbeddingMatrix;
use crate::error::{Error, Result};

/// Largest cosine distance still treated as "identical documents".
const DEGENERATE_DISTANCE: f64 = 1e-12;

/// Floor applied to edge weights so no edge carries zero similarity.
pub const MIN_EDGE_WEIGHT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairwiseKind {
    CosineSimilarity,
    CosineDistance,
    NormalizedDistance,
    NormalizedSimilarity,
}

/// Symmetric N×N matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseMatrix {
    kind: PairwiseKind,
    n: usize,
    values: Vec<f64>,
}

impl PairwiseMatrix {
    /// Wrap a row-major buffer, checking shape and exact symmetry.
    pub fn from_values(kind: PairwiseKind, n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::LengthMismatch {
                expected: n * n,
                got: values.len(),
            });
        }
        for i in 0..n {
            for j in i + 1..n {
                if values[i * n + j] != values[j * n + i] {
                    return Err(Error::invalid(format!("matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(PairwiseMatrix { kind, n, values })
    }

    pub fn kind(&self) -> PairwiseKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn map(&self, kind: PairwiseKind, f: impl Fn(f64) -> f64 + Sync) -> PairwiseMatrix {
        PairwiseMatrix {
            kind,
            n: self.n,
            values: self.values.par_iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Fill an N×N buffer from an upper-triangle rule, mirroring it so the
/// result is exactly symmetric whatever the thread schedule.
fn symmetric_fill(n: usize, diag: f64, f: impl Fn(usize, usize) -> f64 + Sync) -> Vec<f64> {
    let mut values = vec![0.0; n * n];
    values.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        row[i] = diag;
        for (j, slot) in row.iter_mut().enumerate().skip(i + 1) {
            *slot = f(i, j);
        }
    });
    for i in 0..n {
        for j in i + 1..n {
            values[j * n + i] = values[i * n + j];
        }
    }
    values
}

/// Cosine similarity between every pair of rows; diagonal exactly 1 and
/// off-diagonal entries clamped to [-1, 1].
pub fn cosine_similarity_matrix(e: &EmbeddingMatrix) -> Result<PairwiseMatrix> {
    let norms: Vec<f64> = e.rows().map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    if let Some(i) = norms.iter().position(|&n| n == 0.0) {
        return Err(Error::invalid(format!("zero-norm vector at row {}", i + 1)));
    }
    let n = e.len();
    let values = symmetric_fill(n, 1.0, |i, j| {
        let dot: f64 = e.row(i).iter().zip(e.row(j)).map(|(a, b)| a * b).sum();
        (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0)
    });
    Ok(PairwiseMatrix {
        kind: PairwiseKind::CosineSimilarity,
        n,
        values,
    })
}

/// From cosine similarity to the max-normalized distance D̂ = (1 − S)/max(1 − S)
/// and the normalized similarity Ŝ = 1 − D̂.
pub fn normalize_distance(s: &PairwiseMatrix) -> Result<(PairwiseMatrix, PairwiseMatrix)> {
    if s.kind != PairwiseKind::CosineSimilarity {
        return Err(Error::invalid("normalize_distance expects a cosine similarity matrix"));
    }
    let dist = s.map(PairwiseKind::CosineDistance, |v| 1.0 - v);
    let max = dist.values.iter().copied().fold(0.0_f64, f64::max);
    if max.is_nan() || max <= DEGENERATE_DISTANCE {
        return Err(Error::invalid("degenerate distance matrix: all pairwise distances are 0"));
    }
    let d_hat = dist.map(PairwiseKind::NormalizedDistance, |v| v / max);
    let s_hat = d_hat.map(PairwiseKind::NormalizedSimilarity, |v| 1.0 - v);
    Ok((d_hat, s_hat))
}

/// Undirected edge with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

impl Edge {
    pub fn new(a: usize, b: usize, weight: f64) -> Edge {
        let (u, v) = if a < b { (a, b) } else { (b, a) };
        Edge { u, v, weight }
    }
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
    components: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
            components: n,
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merge the sets holding `a` and `b`; false if already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        self.components -= 1;
        true
    }

    pub fn components(&self) -> usize {
        self.components
    }
}

fn edge_order(a: &Edge, b: &Edge) -> Ordering {
    a.weight
        .total_cmp(&b.weight)
        .then(a.u.cmp(&b.u))
        .then(a.v.cmp(&b.v))
}

/// Kruskal's algorithm on the complete graph of `d`. Edges are considered
/// in (weight, u, v) order, so ties resolve deterministically.
pub fn minimum_spanning_tree(d: &PairwiseMatrix) -> Result<Vec<Edge>> {
    let n = d.n;
    if n < 2 {
        return Err(Error::invalid("minimum spanning tree needs at least 2 nodes"));
    }
    let mut candidates: Vec<Edge> = (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .map(|(u, v)| Edge { u, v, weight: d.get(u, v) })
        .collect();
    candidates.par_sort_unstable_by(edge_order);

    let mut uf = UnionFind::new(n);
    let mut tree = Vec::with_capacity(n - 1);
    for e in candidates {
        if uf.union(e.u, e.v) {
            tree.push(e);
            if tree.len() == n - 1 {
                break;
            }
        }
    }
    Ok(tree)
}

/// Each node's `k` nearest other nodes under `d`, ties to the lower index,
/// returned as a deduplicated undirected edge list sorted by (u, v).
pub fn knn_edges(d: &PairwiseMatrix, k: usize) -> Result<Vec<Edge>> {
    let n = d.n;
    if k == 0 || k >= n {
        return Err(Error::invalid(format!("k must lie in 1..={}, got {k}", n.saturating_sub(1))));
    }
    let per_node: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let row = d.row(i);
            let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            let cmp = |a: &usize, b: &usize| row[*a].total_cmp(&row[*b]).then(a.cmp(b));
            if k < others.len() {
                others.select_nth_unstable_by(k - 1, cmp);
                others.truncate(k);
            }
            others
        })
        .collect();

    let mut pairs: Vec<(usize, usize)> = per_node
        .iter()
        .enumerate()
        .flat_map(|(i, nbrs)| nbrs.iter().map(move |&j| if i < j { (i, j) } else { (j, i) }))
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    Ok(pairs
        .into_iter()
        .map(|(u, v)| Edge { u, v, weight: d.get(u, v) })
        .collect())
}

/// Weighted undirected graph over documents; edges sorted by (u, v).
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGraph {
    n: usize,
    edges: Vec<Edge>,
    ids: Vec<String>,
}

impl SparseGraph {
    /// Validate and canonicalize an edge list: no self-loops, no duplicate
    /// pairs, strictly positive finite weights.
    pub fn new(n: usize, edges: Vec<Edge>, ids: Option<Vec<String>>) -> Result<Self> {
        let ids = ids.unwrap_or_else(|| (0..n).map(|i| i.to_string()).collect());
        if ids.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: ids.len() });
        }
        let mut edges: Vec<Edge> = edges.into_iter().map(|e| Edge::new(e.u, e.v, e.weight)).collect();
        for e in &edges {
            if e.v >= n {
                return Err(Error::invalid(format!("edge ({}, {}) out of range for n={n}", e.u, e.v)));
            }
            if e.u == e.v {
                return Err(Error::invalid(format!("self-loop on node {}", e.u)));
            }
            if !(e.weight > 0.0 && e.weight.is_finite()) {
                return Err(Error::invalid(format!(
                    "edge ({}, {}) has non-positive weight {}",
                    e.u, e.v, e.weight
                )));
            }
        }
        edges.sort_unstable_by_key(|e| (e.u, e.v));
        if let Some(w) = edges.windows(2).find(|w| (w[0].u, w[0].v) == (w[1].u, w[1].v)) {
            return Err(Error::invalid(format!("duplicate edge ({}, {})", w[0].u, w[0].v)));
        }
        Ok(SparseGraph { n, edges, ids })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn n_components(&self) -> usize {
        let mut uf = UnionFind::new(self.n);
        for e in &self.edges {
            uf.union(e.u, e.v);
        }
        uf.components()
    }

    pub fn is_connected(&self) -> bool {
        self.n_components() == 1
    }

    /// Node strengths (weighted degrees).
    pub fn strengths(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n];
        for e in &self.edges {
            s[e.u] += e.weight;
            s[e.v] += e.weight;
        }
        s
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    /// Dense symmetric adjacency matrix, row-major.
    pub fn dense_adjacency(&self) -> Vec<f64> {
        let n = self.n;
        let mut a = vec![0.0; n * n];
        for e in &self.edges {
            a[e.u * n + e.v] = e.weight;
            a[e.v * n + e.u] = e.weight;
        }
        a
    }

    /// Write `u<TAB>v<TAB>weight` rows with exactly round-tripping weights.
    pub fn write_edge_list(&self, path: impl AsRef<Path>, preamble: &str) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::from(preamble);
        out.push_str("u\tv\tweight\n");
        for e in &self.edges {
            writeln!(out, "{}\t{}\t{:?}", e.u, e.v, e.weight).unwrap();
        }
        fs::write(path, out).map_err(|err| Error::io(path, err))
    }

    /// Read an edge list written by [`SparseGraph::write_edge_list`].
    pub fn read_edge_list(path: impl AsRef<Path>, n: usize, ids: Option<Vec<String>>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut edges = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.starts_with('#') || line.trim().is_empty() || line.starts_with("u\t") {
                continue;
            }
            let mut f = line.split('\t');
            let mut next = |what: &str| {
                f.next()
                    .ok_or_else(|| Error::parse(path, i + 1, format!("missing {what}")))
            };
            let u: usize = next("u")?.parse().map_err(|_| Error::parse(path, i + 1, "bad u"))?;
            let v: usize = next("v")?.parse().map_err(|_| Error::parse(path, i + 1, "bad v"))?;
            let w: f64 = next("weight")?
                .parse()
                .map_err(|_| Error::parse(path, i + 1, "bad weight"))?;
            edges.push(Edge::new(u, v, w));
        }
        SparseGraph::new(n, edges, ids)
    }
}

/// Union of the MST and the kNN edges, weighted by normalized similarity
/// floored at [`MIN_EDGE_WEIGHT`]. `k = 0` yields the MST alone.
pub fn mst_knn_from_distance(d_hat: &PairwiseMatrix, s_hat: &PairwiseMatrix, k: usize, ids: Vec<String>) -> Result<SparseGraph> {
    let n = d_hat.n;
    if k >= n {
        return Err(Error::invalid(format!("k must lie in 0..={}, got {k}", n - 1)));
    }
    let mut pairs: Vec<(usize, usize)> = minimum_spanning_tree(d_hat)?
        .into_iter()
        .map(|e| (e.u, e.v))
        .collect();
    if k > 0 {
        pairs.extend(knn_edges(d_hat, k)?.into_iter().map(|e| (e.u, e.v)));
    }
    pairs.sort_unstable();
    pairs.dedup();
    let edges = pairs
        .into_iter()
        .map(|(u, v)| Edge {
            u,
            v,
            weight: s_hat.get(u, v).max(MIN_EDGE_WEIGHT),
        })
        .collect();
    SparseGraph::new(n, edges, Some(ids))
}

/// Full construction from document vectors: cosine similarity, max-norm
/// distance, then the MST-kNN union.
pub fn build_mst_knn(e: &EmbeddingMatrix, k: usize) -> Result<SparseGraph> {
    if k >= e.len() {
        return Err(Error::invalid(format!("k must lie in 0..={}, got {k}", e.len() - 1)));
    }
    let s = cosine_similarity_matrix(e)?;
    let (d_hat, s_hat) = normalize_distance(&s)?;
    mst_knn_from_distance(&d_hat, &s_hat, k, e.ids().to_vec())
}
