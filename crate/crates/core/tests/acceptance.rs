//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test --release --test acceptance`; pass criterion numbers
//! as arguments (`-- 1 4 7`) to run a subset.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use multiscale_topics::embeddings::LabelSet;
use multiscale_topics::metrics::{uncertainty_coefficient, uncertainty_from_counts, variation_of_information};
use multiscale_topics::pipeline::{bench_recovery, bench_throughput};
use multiscale_topics::similarity::{
    build_mst_knn, cosine_similarity_matrix, minimum_spanning_tree, normalize_distance,
};
use multiscale_topics::stability::{
    diffusion_kernel, diffusion_operators, louvain_optimize, stability_score, SpectralKernel, TimeGrid,
};
use multiscale_topics::synthetic::{
    gaussian_embeddings, random_connected_graph, random_partition, CorpusSpec, HierarchicalSbm,
};
use multiscale_topics::Partition;

use common::*;

type Criterion = (u32, &'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn cores() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn scratch_path(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("mstopics-acceptance-{}-{name}", std::process::id()))
}

/// A fresh, empty scratch location.
fn scratch(name: &str) -> PathBuf {
    let dir = scratch_path(name);
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

fn same_tree(a: &Path, b: &Path) -> (bool, usize) {
    let (x, y) = (snapshot(a), snapshot(b));
    (x == y, x.len())
}

fn within(elapsed: Duration, budget: Duration) -> bool {
    elapsed <= budget
}

fn kernel_correctness() -> Outcome {
    let started = Instant::now();
    let mut worst_entry = 0.0_f64;
    let mut worst_row = 0.0_f64;
    for g in 0..20 {
        let graph = random_connected_graph(30, 0.15, 1000 + g);
        let ops = diffusion_operators(&graph).unwrap();
        for t in [0.1, 1.0, 10.0] {
            let ours = diffusion_kernel(&ops, t).unwrap();
            let oracle = oracle_kernel(&graph, t);
            for i in 0..30 {
                for j in 0..30 {
                    worst_entry = worst_entry.max((ours[(i, j)] - oracle[i * 30 + j]).abs());
                }
                worst_row = worst_row.max((ours.row(i).sum() - 1.0).abs());
            }
        }
    }
    let elapsed = started.elapsed();
    outcome(
        worst_entry <= 1e-8 && worst_row <= 1e-10 && within(elapsed, Duration::from_secs(10)),
        format!("max |kernel - taylor| {worst_entry:.2e} (tol 1e-8), max |row sum - 1| {worst_row:.2e} (tol 1e-10), {elapsed:.2?} (budget 10s)"),
    )
}

fn trace_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0_f64;
    for k in 0..100 {
        let n = rng.random_range(5..25);
        let graph = random_connected_graph(n, rng.random_range(0.05..0.5), 2000 + k);
        let partition = random_partition(n, rng.random_range(1..n + 1), &mut rng);
        let t = 10f64.powf(rng.random_range(-2.0..2.0));
        let r = SpectralKernel::from_graph(&graph).unwrap().stability_matrix(t).unwrap();
        let ours = stability_score(&r, &partition).unwrap();
        worst = worst.max((ours - oracle_stability(&graph, &partition, t)).abs());
    }
    outcome(worst <= 1e-10, format!("100 triples, max deviation {worst:.2e} (tol 1e-10)"))
}

fn optimizer_oracle() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut hits = 0;
    let mut instances = 0;
    let mut enumerations: BTreeMap<usize, Vec<Vec<usize>>> = BTreeMap::new();
    for g in 0..50 {
        let n = rng.random_range(4..=8);
        let graph = random_connected_graph(n, rng.random_range(0.1..0.6), 3000 + g);
        let kernel = SpectralKernel::from_graph(&graph).unwrap();
        let all = enumerations.entry(n).or_insert_with(|| set_partitions(n));
        for t in [0.5, 1.0, 2.0] {
            let r = kernel.stability_matrix(t).unwrap();
            let optimum = all
                .iter()
                .map(|labels| block_sum(r.values(), n, labels))
                .fold(f64::NEG_INFINITY, f64::max);
            let best = (0..100)
                .map(|s| louvain_optimize(&r, s).stability)
                .fold(f64::NEG_INFINITY, f64::max);
            instances += 1;
            if (best - optimum).abs() <= 1e-9 {
                hits += 1;
            }
        }
    }
    let elapsed = started.elapsed();
    let rate = hits as f64 / instances as f64;
    outcome(
        rate >= 0.95 && within(elapsed, Duration::from_secs(120)),
        format!("{hits}/{instances} instances at the exhaustive optimum ({:.1}%, need 95%), {elapsed:.2?} (budget 2 min)", 100.0 * rate),
    )
}

fn recovery_dir() -> PathBuf {
    scratch_path("recovery")
}

fn multiscale_recovery() -> Outcome {
    let dir = scratch("recovery");
    let planted = HierarchicalSbm::default().generate(1).unwrap();
    let r = bench_recovery(&dir, 1, 100, 50, 0).unwrap();
    let find = |target: &Partition| {
        r.scales
            .iter()
            .position(|s| variation_of_information(&s.partition, target).unwrap() == 0.0)
    };
    let (fine, coarse) = (find(&planted.fine), find(&planted.coarse));
    let distinct = match (fine, coarse) {
        (Some(a), Some(b)) => {
            let (pa, pb) = (r.scales[a].plateau, r.scales[b].plateau);
            pa.1 < pb.0 || pb.1 < pa.0
        }
        _ => false,
    };
    let budget = Duration::from_secs(300);
    let scales: Vec<String> = r.scales.iter().map(|s| format!("{}@t={:.3}", s.n_communities, s.t_star)).collect();
    outcome(
        r.passed() && distinct && within(r.elapsed, budget),
        format!(
            "scales [{}], 16-block level found: {}, 4-block level found: {}, disjoint plateaux: {distinct}, {:.2?} (budget 5 min)",
            scales.join(", "),
            r.fine_found,
            r.coarse_found,
            r.elapsed
        ),
    )
}

fn conservation() -> Outcome {
    let times = TimeGrid::DEFAULT.times();
    let mut graphs: Vec<_> = (0..20).map(|g| random_connected_graph(30, 0.15, 1000 + g)).collect();
    graphs.push(HierarchicalSbm::default().generate(1).unwrap().graph);
    for s in 0..5 {
        graphs.push(build_mst_knn(&gaussian_embeddings(60, 8, 50 + s), 5).unwrap());
    }
    let mut worst_r = 0.0_f64;
    let mut worst_sum = 0.0_f64;
    for g in &graphs {
        let kernel = SpectralKernel::from_graph(g).unwrap();
        for &t in &times {
            let r = kernel.stability_matrix(t).unwrap();
            worst_r = worst_r.max(stability_score(&r, &Partition::all_in_one(g.n())).unwrap().abs());
            worst_sum = worst_sum.max(r.max_row_sum()).max(r.max_col_sum());
        }
    }
    outcome(
        worst_r <= 1e-10 && worst_sum <= 1e-10,
        format!(
            "{} graphs x {} times: max |r(all-in-one)| {worst_r:.2e}, max |row/col sum| {worst_sum:.2e} (tol 1e-10)",
            graphs.len(),
            times.len()
        ),
    )
}

fn vi_axioms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut violations = 0;
    let mut worst_triangle = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let mut draw = || {
            let k = rng.random_range(1..=50);
            random_partition(50, k, &mut rng)
        };
        let (a, b, c) = (draw(), draw(), draw());
        let vi = |x: &Partition, y: &Partition| variation_of_information(x, y).unwrap();
        let (ab, ba, bc, ac) = (vi(&a, &b), vi(&b, &a), vi(&b, &c), vi(&a, &c));
        worst_triangle = worst_triangle.max(ac - ab - bc);
        let ok = ab >= -1e-10 && (ab - ba).abs() <= 1e-10 && vi(&a, &a).abs() <= 1e-10 && ac <= ab + bc + 1e-10;
        if !ok {
            violations += 1;
        }
    }
    outcome(
        violations == 0,
        format!("1000 triples on N=50, {violations} violations, worst triangle slack {worst_triangle:.2e} (tol 1e-10)"),
    )
}

fn uncertainty() -> Outcome {
    let ids: Vec<String> = (0..6).map(|i| format!("d{i}")).collect();
    let labels = LabelSet::new(
        "t",
        ids.iter().cloned().zip(["a", "a", "b", "b", "c", "c"].map(String::from)).collect(),
    );
    let identical = uncertainty_coefficient(&labels, &ids, &Partition::new(&[0, 0, 1, 1, 2, 2])).unwrap().value;
    let independent = uncertainty_from_counts(&[vec![2, 4], vec![1, 2], vec![3, 6]]).unwrap();

    // [[2,0],[1,1]] by direct entropy summation.
    let p: [[f64; 2]; 2] = [[0.5, 0.0], [0.25, 0.25]];
    let pt = [0.5, 0.5];
    let pc: [f64; 2] = [0.75, 0.25];
    let h_t = -pt.iter().map(|v: &f64| v * v.ln()).sum::<f64>();
    let mut h_cond = 0.0;
    for row in &p {
        for (j, &v) in row.iter().enumerate() {
            if v > 0.0 {
                h_cond -= v * (v / pc[j]).ln();
            }
        }
    }
    let expected = (h_t - h_cond) / h_t;
    let ours = uncertainty_from_counts(&[vec![2, 0], vec![1, 1]]).unwrap();
    let pass = (identical - 1.0).abs() <= 1e-12 && independent.abs() <= 1e-12 && (ours - expected).abs() <= 1e-12;
    outcome(
        pass,
        format!(
            "U(C=T) = {identical}, U(independent) = {independent:.2e}, 2x2 example {ours:.15} vs {expected:.15} (tol 1e-12)"
        ),
    )
}

fn graph_construction() -> Outcome {
    let ks = [1, 5, 13, 17];
    let mut disconnected = 0;
    let mut non_monotone = 0;
    let mut mst_mismatch = 0;
    for s in 0..100 {
        let e = gaussian_embeddings(200, 16, 8000 + s);
        let mut previous: Option<BTreeSet<(usize, usize)>> = None;
        for &k in &ks {
            let g = build_mst_knn(&e, k).unwrap();
            if !g.is_connected() {
                disconnected += 1;
            }
            let edges: BTreeSet<(usize, usize)> = g.edges().iter().map(|e| (e.u, e.v)).collect();
            if let Some(prev) = &previous {
                if !prev.is_subset(&edges) {
                    non_monotone += 1;
                }
            }
            previous = Some(edges);
        }

        // Brute-force MST on a small subcase of the same vectors.
        let n = 3 + (s as usize % 4);
        let sub = multiscale_topics::embeddings::EmbeddingMatrix::new(
            e.ids()[..n].to_vec(),
            (0..n).map(|i| e.row(i).to_vec()).collect(),
        )
        .unwrap();
        let (d, _) = normalize_distance(&cosine_similarity_matrix(&sub).unwrap()).unwrap();
        let w: f64 = minimum_spanning_tree(&d).unwrap().iter().map(|e| e.weight).sum();
        if (w - brute_force_mst_weight(d.values(), n)).abs() > 1e-12 {
            mst_mismatch += 1;
        }
    }
    outcome(
        disconnected == 0 && non_monotone == 0 && mst_mismatch == 0,
        format!(
            "100 sets N=200 d=16, k in {ks:?}: {disconnected} disconnected, {non_monotone} non-monotone steps, {mst_mismatch}/100 MST mismatches on N<=6"
        ),
    )
}

fn full_scale_throughput() -> Outcome {
    let spec = CorpusSpec {
        docs: 3229,
        dim: 300,
        ..CorpusSpec::default()
    };
    let grid = TimeGrid::Log {
        lo: 0.01,
        hi: 100.0,
        points: 100,
    };
    // The stated budget is 60 minutes on 8 cores; scale it to the cores present.
    let budget = Duration::from_secs(60 * 60 * 8 / cores().min(8) as u64);
    let (a, b) = (scratch("throughput-a"), scratch("throughput-b"));
    let first = bench_throughput(&a, &spec, 9, 13, grid, 100, 0).unwrap();
    let second = bench_throughput(&b, &spec, 9, 13, grid, 100, 0).unwrap();
    let (identical, files) = same_tree(&a, &b);
    let elapsed = first.graph_time + first.scan_time;
    let _ = fs::remove_dir_all(&a);
    let _ = fs::remove_dir_all(&b);
    outcome(
        identical && within(elapsed, budget),
        format!(
            "N={} edges={}: graph {:.1?} + scan {:.1?} = {:.1?} on {} core(s) (budget {:.0?}), second run {:.1?}, {files} files identical: {identical}",
            first.n,
            first.edges,
            first.graph_time,
            first.scan_time,
            elapsed,
            cores(),
            budget,
            second.graph_time + second.scan_time
        ),
    )
}

fn parallel_determinism() -> Outcome {
    let (one, eight) = (scratch("workers-1"), scratch("workers-8"));
    bench_recovery(&one, 1, 100, 50, 1).unwrap();
    bench_recovery(&eight, 1, 100, 50, 8).unwrap();
    let (identical, files) = same_tree(&one, &eight);
    let (matches_default, _) = same_tree(&one, &recovery_dir());
    let _ = fs::remove_dir_all(&one);
    let _ = fs::remove_dir_all(&eight);
    outcome(
        identical && matches_default,
        format!("{files} artifact files, 1 vs 8 workers identical: {identical}, identical to default pool: {matches_default}"),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "kernel correctness", kernel_correctness),
        (2, "trace equivalence", trace_equivalence),
        (3, "optimizer vs exhaustive search", optimizer_oracle),
        (4, "multiscale recovery", multiscale_recovery),
        (5, "conservation", conservation),
        (6, "VI metric axioms", vi_axioms),
        (7, "uncertainty coefficient", uncertainty),
        (8, "graph construction", graph_construction),
        (9, "full-scale throughput", full_scale_throughput),
        (10, "determinism under parallelism", parallel_determinism),
    ];
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    // Criterion 10 compares against criterion 4's artifacts.
    let mut selected: Vec<u32> = criteria.iter().map(|c| c.0).filter(|n| wanted.is_empty() || wanted.contains(n)).collect();
    if selected.contains(&10) && !selected.contains(&4) {
        selected.insert(0, 4);
    }

    let mut failed = Vec::new();
    for (n, name, run) in criteria {
        if !selected.contains(&n) {
            continue;
        }
        let result = run();
        println!("criterion {n:>2} {name}: {} | {}", if result.pass { "PASS" } else { "FAIL" }, result.detail);
        if !result.pass {
            failed.push(n);
        }
    }
    let _ = fs::remove_dir_all(recovery_dir());
    if failed.is_empty() {
        println!("acceptance: all {} selected criteria passed", selected.len());
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
