//! Independent reference implementations used as test oracles. None of
//! these share code with the library beyond its plain data types.

#![allow(dead_code)]

use multiscale_topics::similarity::SparseGraph;
use multiscale_topics::Partition;

/// Row-major dense square matrix product.
pub fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                c[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    c
}

fn norm1(a: &[f64], n: usize) -> f64 {
    (0..n).map(|j| (0..n).map(|i| a[i * n + j].abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// `exp(a)` by scaling and squaring around a truncated Taylor series.
pub fn taylor_expm(a: &[f64], n: usize) -> Vec<f64> {
    let norm = norm1(a, n);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scale = 0.5_f64.powi(squarings as i32);
    let scaled: Vec<f64> = a.iter().map(|v| v * scale).collect();

    let mut result = vec![0.0; n * n];
    let mut term = vec![0.0; n * n];
    for i in 0..n {
        result[i * n + i] = 1.0;
        term[i * n + i] = 1.0;
    }
    for k in 1..=40 {
        term = matmul(&term, &scaled, n);
        let inv = 1.0 / k as f64;
        term.iter_mut().for_each(|v| *v *= inv);
        for (r, t) in result.iter_mut().zip(&term) {
            *r += t;
        }
        if term.iter().all(|v| v.abs() < 1e-20) {
            break;
        }
    }
    for _ in 0..squarings {
        result = matmul(&result, &result, n);
    }
    result
}

/// Dense random-walk Laplacian `I − D⁻¹A` and strength-proportional π.
pub fn random_walk_laplacian(g: &SparseGraph) -> (Vec<f64>, Vec<f64>) {
    let n = g.n();
    let mut a = vec![0.0; n * n];
    for e in g.edges() {
        a[e.u * n + e.v] += e.weight;
        a[e.v * n + e.u] += e.weight;
    }
    let strength: Vec<f64> = (0..n).map(|i| a[i * n..(i + 1) * n].iter().sum()).collect();
    let total: f64 = strength.iter().sum();
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            l[i * n + j] = if i == j { 1.0 } else { 0.0 } - a[i * n + j] / strength[i];
        }
    }
    (l, strength.iter().map(|s| s / total).collect())
}

/// `exp(−tL)` via the Taylor oracle.
pub fn oracle_kernel(g: &SparseGraph, t: f64) -> Vec<f64> {
    let (l, _) = random_walk_laplacian(g);
    let n = g.n();
    let minus_tl: Vec<f64> = l.iter().map(|v| -t * v).collect();
    taylor_expm(&minus_tl, n)
}

/// `trace(Hᵀ (Π e^{−tL} − ππᵀ) H)` with `H` materialized as a one-hot matrix.
pub fn oracle_stability(g: &SparseGraph, p: &Partition, t: f64) -> f64 {
    let n = g.n();
    let (_, pi) = random_walk_laplacian(g);
    let k = oracle_kernel(g, t);
    let c = p.n_communities();
    let mut h = vec![0.0; n * c];
    for i in 0..n {
        h[i * c + p.community_of(i)] = 1.0;
    }
    let mut r = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            r[i * n + j] = pi[i] * k[i * n + j] - pi[i] * pi[j];
        }
    }
    // (Hᵀ R H)_{aa}
    let mut trace = 0.0;
    for a in 0..c {
        for i in 0..n {
            for j in 0..n {
                trace += h[i * c + a] * r[i * n + j] * h[j * c + a];
            }
        }
    }
    trace
}

/// Every set partition of `0..n` as a restricted growth string.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn extend(prefix: &mut Vec<usize>, max: usize, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for label in 0..=max + 1 {
            prefix.push(label);
            extend(prefix, max.max(label), n, out);
            prefix.pop();
        }
    }
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    let mut prefix = vec![0];
    extend(&mut prefix, 0, n, &mut out);
    out
}

/// Within-community sum of a row-major matrix for membership labels.
pub fn block_sum(r: &[f64], n: usize, labels: &[usize]) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if labels[i] == labels[j] {
                s += r[i * n + j];
            }
        }
    }
    s
}

/// Minimum spanning tree weight by enumerating every (n−1)-edge subset.
pub fn brute_force_mst_weight(d: &[f64], n: usize) -> f64 {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    let m = pairs.len();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << m) {
        if mask.count_ones() as usize != n - 1 {
            continue;
        }
        let mut parent: Vec<usize> = (0..n).collect();
        fn root(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                x = p[x];
            }
            x
        }
        let mut acyclic = true;
        let mut w = 0.0;
        for (k, &(u, v)) in pairs.iter().enumerate() {
            if mask & (1 << k) != 0 {
                let (a, b) = (root(&mut parent, u), root(&mut parent, v));
                if a == b {
                    acyclic = false;
                    break;
                }
                parent[a] = b;
                w += d[u * n + v];
            }
        }
        if acyclic {
            best = best.min(w);
        }
    }
    best
}

/// VI from first principles: joint and marginal frequencies in nats.
pub fn direct_vi(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as f64;
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut joint = vec![0.0; ka * kb];
    let mut pa = vec![0.0; ka];
    let mut pb = vec![0.0; kb];
    for (&x, &y) in a.iter().zip(b) {
        joint[x * kb + y] += 1.0 / n;
        pa[x] += 1.0 / n;
        pb[y] += 1.0 / n;
    }
    let h = |p: &[f64]| -p.iter().filter(|&&v| v > 0.0).map(|v| v * v.ln()).sum::<f64>();
    let mut mi = 0.0;
    for x in 0..ka {
        for y in 0..kb {
            let p = joint[x * kb + y];
            if p > 0.0 {
                mi += p * (p / (pa[x] * pb[y])).ln();
            }
        }
    }
    h(&pa) + h(&pb) - 2.0 * mi
}
