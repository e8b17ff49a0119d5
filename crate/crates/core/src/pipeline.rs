//! Staged, file-based pipeline runs.
//!
//! Each stage reads the previous stage's artifacts from the output
//! directory and writes its own:
//!
//! ```text
//! out/graph/      edges.tsv  nodes.tsv  graph.meta
//! out/scan/       scan.tsv   partitions/t00000.tsv ...  scan.meta
//! out/select/     report.tsv cross_vi.tsv sankey.tsv partitions/scale_00.tsv ... select.meta
//! out/evaluate/   <labels>/uncertainty.tsv <labels>/scale_00.{counts,zscores}.tsv ... evaluate.meta
//! out/summarize/  scale_00/cluster_000.tsv ... summarize.meta
//! ```
//!
//! Every file starts with a `#` line carrying the stage's config hash and
//! seed. Hashes chain: the scan hash covers the graph hash, the selection
//! hash covers the scan hash, so downstream stages can detect stale inputs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use log::info;
use sha2::{Digest, Sha256};

use crate::embeddings::{self, EmbeddingMatrix, Format, LabelSet};
use crate::error::{Error, Result};
use crate::metrics::{self, centroid_benchmark, contingency, uncertainty_from_counts, CrossTimeVI};
use crate::partition::Partition;
use crate::selection::{self, find_robust_scales, RobustScale, SelectionParams};
use crate::similarity::{build_mst_knn, SparseGraph};
use crate::stability::{scan_markov_times, ScanParams, ScanRecord, StabilityScan, TimeGrid};
use crate::summary::{cluster_terms, LemmaTable, TermWeighting};
use crate::synthetic::{CorpusSpec, HierarchicalSbm};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_MISSING_ARTIFACT: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

/// Process exit code for a pipeline error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::MissingArtifact(_) => EXIT_MISSING_ARTIFACT,
        Error::Numerical(_) => EXIT_NUMERICAL,
        Error::Io { .. } | Error::Parse { .. } | Error::Invalid(_) | Error::LengthMismatch { .. } => EXIT_USAGE,
    }
}

/// All knobs of a run. Defaults follow the reference protocol except the
/// time grid, which defaults to 100 log-spaced points.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub embeddings: Option<PathBuf>,
    pub format: Option<Format>,
    pub labels: Vec<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub lemmas: Option<PathBuf>,
    pub k: usize,
    pub grid: TimeGrid,
    pub n_runs: usize,
    pub n_top: usize,
    pub seed: u64,
    pub selection: SelectionParams,
    pub out: PathBuf,
    pub workers: usize,
    pub force: bool,
    pub strict_labels: bool,
    pub top_terms: usize,
    pub n_nearest: usize,
    pub stem: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            embeddings: None,
            format: None,
            labels: Vec::new(),
            corpus: None,
            stopwords: None,
            lemmas: None,
            k: 13,
            grid: TimeGrid::DEFAULT,
            n_runs: 500,
            n_top: 50,
            seed: 42,
            selection: SelectionParams::default(),
            out: PathBuf::from("out"),
            workers: 0,
            force: false,
            strict_labels: false,
            top_terms: 30,
            n_nearest: 100,
            stem: false,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::invalid(format!("bad value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(Error::invalid(format!("bad boolean {value:?} for {key}"))),
    }
}

impl RunConfig {
    /// Set one option by name. Names match the config-file keys; dashes and
    /// underscores are interchangeable.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim().replace('-', "_").as_str() {
            "embeddings" => self.embeddings = Some(value.into()),
            "format" => {
                self.format = Some(match value {
                    "tsv" => Format::Tsv,
                    "csv" => Format::Csv,
                    _ => return Err(Error::invalid(format!("unknown format {value:?}"))),
                })
            }
            "labels" => self
                .labels
                .extend(value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(PathBuf::from)),
            "corpus" => self.corpus = Some(value.into()),
            "stopwords" => self.stopwords = Some(value.into()),
            "lemmas" => self.lemmas = Some(value.into()),
            "k" => self.k = parse_value("k", value)?,
            "grid" => self.grid = value.parse()?,
            "n_runs" => self.n_runs = parse_value("n_runs", value)?,
            "n_top" => self.n_top = parse_value("n_top", value)?,
            "seed" => self.seed = parse_value("seed", value)?,
            "theta" => {
                self.selection.plateau_threshold = match value {
                    "auto" => None,
                    v => Some(parse_value("theta", v)?),
                }
            }
            "min_plateau" => self.selection.min_plateau_len = parse_value("min_plateau", value)?,
            "dip_window" => self.selection.dip_window = parse_value("dip_window", value)?,
            "out" => self.out = value.into(),
            "workers" => self.workers = parse_value("workers", value)?,
            "force" => self.force = parse_bool("force", value)?,
            "strict_labels" => self.strict_labels = parse_bool("strict_labels", value)?,
            "top_terms" => self.top_terms = parse_value("top_terms", value)?,
            "n_nearest" => self.n_nearest = parse_value("n_nearest", value)?,
            "stem" => self.stem = parse_bool("stem", value)?,
            other => return Err(Error::invalid(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Apply a plain-text `key = value` file. Blank lines and `#` comments
    /// are ignored. Relative paths are taken relative to the file's directory.
    pub fn apply_file(&mut self, path: impl AsRef<Path>) -> Result<()> {
        const PATH_KEYS: [&str; 6] = ["embeddings", "labels", "corpus", "stopwords", "lemmas", "out"];
        let path = path.as_ref();
        let base = path.parent().unwrap_or(Path::new(""));
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(path, i + 1, "expected `key = value`"))?;
            let value = if PATH_KEYS.contains(&key.trim()) {
                value
                    .split(',')
                    .map(|v| base.join(v.trim()).display().to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            } else {
                value.to_string()
            };
            self.set(key, &value)
                .map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        }
        Ok(())
    }

    fn embeddings_path(&self) -> Result<&Path> {
        self.embeddings
            .as_deref()
            .ok_or_else(|| Error::invalid("no embeddings file given (--embeddings)"))
    }

    pub fn load_embeddings(&self) -> Result<EmbeddingMatrix> {
        let path = self.embeddings_path()?;
        let format = self.format.unwrap_or_else(|| Format::from_path(path));
        embeddings::load_embeddings(path, format)
    }

    fn stage_dir(&self, stage: &str) -> PathBuf {
        self.out.join(stage)
    }

    fn scan_params(&self) -> ScanParams {
        ScanParams::new(self.grid.times(), self.n_runs, self.n_top, self.seed)
    }

    fn theta_repr(&self) -> String {
        self.selection
            .plateau_threshold
            .map_or_else(|| "auto".to_string(), |t| format!("{t:?}"))
    }
}

/// Run `f` on a dedicated rayon pool with `workers` threads (0 = rayon default).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

fn short_hash(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0u8]);
    }
    hex::encode(h.finalize())[..16].to_string()
}

pub fn graph_hash(corpus_hash: &str, k: usize) -> String {
    short_hash(&["graph", corpus_hash, &k.to_string()])
}

pub fn scan_hash(graph_hash: &str, params: &ScanParams) -> String {
    let mut times = String::new();
    for t in &params.times {
        write!(times, "{:016x}", t.to_bits()).unwrap();
    }
    short_hash(&[
        "scan",
        graph_hash,
        &times,
        &params.n_runs.to_string(),
        &params.n_top.to_string(),
        &params.master_seed.to_string(),
    ])
}

pub fn select_hash(scan_hash: &str, theta: &str, params: &SelectionParams) -> String {
    short_hash(&[
        "select",
        scan_hash,
        theta,
        &params.min_plateau_len.to_string(),
        &params.dip_window.to_string(),
    ])
}

/// Sorted `key=value` sidecar metadata.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Meta(pub BTreeMap<String, String>);

impl Meta {
    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.0.insert(key.to_string(), value.to_string());
        self
    }

    pub fn get(&self, key: &str) -> Result<&str> {
        self.0
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::invalid(format!("metadata lacks key {key:?}")))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for (k, v) in &self.0 {
            writeln!(out, "{k}={v}").unwrap();
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = require(path.as_ref())?;
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(path, i + 1, "expected key=value"))?;
            map.insert(k.to_string(), v.to_string());
        }
        Ok(Meta(map))
    }
}

fn require(path: &Path) -> Result<&Path> {
    if path.exists() {
        Ok(path)
    } else {
        Err(Error::MissingArtifact(path.to_path_buf()))
    }
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Remove stale numbered files from an earlier run before rewriting a directory.
fn reset_dir(path: &Path) -> Result<()> {
    if path.exists() {
        fs::remove_dir_all(path).map_err(|e| Error::io(path, e))?;
    }
    create_dir(path)
}

fn preamble(stage: &str, hash: &str, seed: u64) -> String {
    format!("# mstopics stage={stage} config_hash={hash} seed={seed}\n")
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Graph stage artifacts as loaded by later stages.
#[derive(Debug, Clone)]
pub struct GraphArtifact {
    pub graph: SparseGraph,
    pub meta: Meta,
}

/// Write a graph into `<out>/graph`. `corpus_hash` identifies its source.
pub fn write_graph(out: &Path, graph: &SparseGraph, corpus_hash: &str, k: usize, seed: u64) -> Result<String> {
    let dir = out.join("graph");
    create_dir(&dir)?;
    let hash = graph_hash(corpus_hash, k);
    let pre = preamble("graph", &hash, seed);
    graph.write_edge_list(dir.join("edges.tsv"), &pre)?;
    let mut nodes = pre.clone();
    nodes.push_str("index\tid\n");
    for (i, id) in graph.ids().iter().enumerate() {
        writeln!(nodes, "{i}\t{id}").unwrap();
    }
    write_text(&dir.join("nodes.tsv"), &nodes)?;
    let mut meta = Meta::default();
    meta.set("config_hash", &hash)
        .set("corpus_hash", corpus_hash)
        .set("k", k)
        .set("n", graph.n())
        .set("edges", graph.edges().len())
        .set("components", graph.n_components())
        .set("seed", seed);
    meta.write(dir.join("graph.meta"))?;
    Ok(hash)
}

pub fn read_graph(out: &Path) -> Result<GraphArtifact> {
    let dir = out.join("graph");
    let meta = Meta::read(dir.join("graph.meta"))?;
    let nodes_path = dir.join("nodes.tsv");
    let text = fs::read_to_string(require(&nodes_path)?).map_err(|e| Error::io(&nodes_path, e))?;
    let ids: Vec<String> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("index\t") && !l.is_empty())
        .map(|l| l.split_once('\t').map_or(l, |(_, id)| id).to_string())
        .collect();
    let n: usize = parse_value("n", meta.get("n")?)?;
    let graph = SparseGraph::read_edge_list(require(&dir.join("edges.tsv"))?, n, Some(ids))?;
    Ok(GraphArtifact { graph, meta })
}

/// `build-graph`: embeddings → MST-kNN graph files.
pub fn build_graph(cfg: &RunConfig) -> Result<String> {
    let e = cfg.load_embeddings()?;
    if cfg.k >= e.len() {
        return Err(Error::invalid(format!("k must lie in 0..={}, got {}", e.len() - 1, cfg.k)));
    }
    info!("building MST-kNN graph: N={}, d={}, k={}", e.len(), e.dim(), cfg.k);
    let graph = with_workers(cfg.workers, || build_mst_knn(&e, cfg.k))??;
    let hash = write_graph(&cfg.out, &graph, &e.content_hash(), cfg.k, cfg.seed)?;
    info!("graph: {} edges, hash {hash}", graph.edges().len());
    Ok(hash)
}

/// `scan`: graph → per-time optimized partitions, stability and VI(t).
pub fn scan(cfg: &RunConfig) -> Result<String> {
    let GraphArtifact { graph, meta } = read_graph(&cfg.out)?;
    let params = cfg.scan_params();
    let hash = scan_hash(meta.get("config_hash")?, &params);
    info!(
        "scanning {} Markov times ({}) with {} runs each on N={}",
        params.times.len(),
        cfg.grid,
        params.n_runs,
        graph.n()
    );
    let started = Instant::now();
    let result = with_workers(cfg.workers, || scan_markov_times(&graph, &params))??;
    info!("scan finished in {:.1?}", started.elapsed());

    let dir = cfg.stage_dir("scan");
    reset_dir(&dir)?;
    create_dir(&dir.join("partitions"))?;
    let pre = preamble("scan", &hash, cfg.seed);
    let mut table = pre.clone();
    table.push_str("t\tn_communities\tstability\tvi\tpartition\n");
    for (i, rec) in result.records.iter().enumerate() {
        let name = format!("partitions/t{i:05}.tsv");
        rec.partition.write(dir.join(&name), graph.ids(), &pre)?;
        writeln!(
            table,
            "{:?}\t{}\t{:?}\t{:?}\t{name}",
            rec.t,
            rec.n_communities(),
            rec.stability,
            rec.vi
        )
        .unwrap();
    }
    write_text(&dir.join("scan.tsv"), &table)?;
    let mut m = Meta::default();
    m.set("config_hash", &hash)
        .set("graph_hash", meta.get("config_hash")?)
        .set("grid", cfg.grid)
        .set("points", params.times.len())
        .set("n_runs", params.n_runs)
        .set("n_top", params.n_top)
        .set("seed", cfg.seed)
        .set("vi_statistic", "mean over unordered pairs of the top runs, nats");
    m.write(dir.join("scan.meta"))?;
    Ok(hash)
}

pub struct ScanArtifact {
    pub scan: StabilityScan,
    pub ids: Vec<String>,
    pub meta: Meta,
}

pub fn read_scan(out: &Path) -> Result<ScanArtifact> {
    let graph = read_graph(out)?;
    let ids = graph.graph.ids().to_vec();
    let dir = out.join("scan");
    let meta = Meta::read(dir.join("scan.meta"))?;
    let table_path = dir.join("scan.tsv");
    let text = fs::read_to_string(require(&table_path)?).map_err(|e| Error::io(&table_path, e))?;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.starts_with("t\t") || line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 5 {
            return Err(Error::parse(&table_path, i + 1, "expected 5 columns"));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::parse(&table_path, i + 1, format!("bad number {s:?}")))
        };
        let partition_path = dir.join(f[4]);
        let partition = Partition::read(require(&partition_path)?, &ids)?;
        records.push(ScanRecord {
            t: num(f[0])?,
            partition,
            stability: num(f[2])?,
            vi: num(f[3])?,
            ensemble_vi: Vec::new(),
        });
    }
    if records.is_empty() {
        return Err(Error::invalid(format!("{} holds no scan records", table_path.display())));
    }
    Ok(ScanArtifact {
        scan: StabilityScan { records },
        ids,
        meta,
    })
}

/// `select`: scan → robust scales, cross-time VI and Sankey flows.
pub fn select(cfg: &RunConfig) -> Result<Vec<RobustScale>> {
    let ScanArtifact { scan, ids, meta } = read_scan(&cfg.out)?;
    let hash = select_hash(meta.get("config_hash")?, &cfg.theta_repr(), &cfg.selection);
    let (cross, scales) = with_workers(cfg.workers, || -> Result<(CrossTimeVI, Vec<RobustScale>)> {
        let cross = metrics::cross_time_vi(&scan)?;
        let scales = find_robust_scales(&scan, &cross, &cfg.selection)?;
        Ok((cross, scales))
    })??;
    info!("selected {} robust scale(s)", scales.len());

    let dir = cfg.stage_dir("select");
    reset_dir(&dir)?;
    create_dir(&dir.join("partitions"))?;
    let pre = preamble("select", &hash, cfg.seed);
    cross.write(dir.join("cross_vi.tsv"), &pre)?;

    let mut report = pre.clone();
    report.push_str("rank\tt_star\tn_communities\tt_lo\tt_hi\tplateau_lo\tplateau_hi\tdip_depth\tplateau_score\tpartition\n");
    for (rank, s) in scales.iter().enumerate() {
        let name = format!("partitions/scale_{rank:02}.tsv");
        s.partition.write(dir.join(&name), &ids, &pre)?;
        writeln!(
            report,
            "{rank}\t{:?}\t{}\t{:?}\t{:?}\t{}\t{}\t{:?}\t{:?}\t{name}",
            s.t_star, s.n_communities, s.t_lo, s.t_hi, s.plateau.0, s.plateau.1, s.dip_depth, s.plateau_score
        )
        .unwrap();
    }
    write_text(&dir.join("report.tsv"), &report)?;

    let mut levels = Vec::new();
    let mut m = Meta::default();
    for (a, pair) in scales.windows(2).enumerate() {
        levels.push((format!("{a}->{}", a + 1), selection::sankey_flows(&pair[0].partition, &pair[1].partition)?));
        m.set(
            &format!("quasi_hierarchy_{a}_{}", a + 1),
            format!("{:?}", selection::quasi_hierarchy_score(&pair[0].partition, &pair[1].partition)?),
        );
    }
    selection::write_sankey(dir.join("sankey.tsv"), &levels, &pre)?;

    m.set("config_hash", &hash)
        .set("scan_hash", meta.get("config_hash")?)
        .set("theta", cfg.theta_repr())
        .set("theta_effective", format!("{:?}", cfg.selection.resolve_threshold(&cross)))
        .set("min_plateau", cfg.selection.min_plateau_len)
        .set("dip_window", cfg.selection.dip_window)
        .set("scales", scales.len())
        .set("seed", cfg.seed);
    m.write(dir.join("select.meta"))?;
    Ok(scales)
}

pub struct SelectArtifact {
    pub scales: Vec<(f64, Partition)>,
    pub ids: Vec<String>,
    pub meta: Meta,
}

pub fn read_selection(out: &Path) -> Result<SelectArtifact> {
    let dir = out.join("select");
    let meta = Meta::read(dir.join("select.meta"))?;
    let graph = read_graph(out)?;
    let ids = graph.graph.ids().to_vec();
    let report_path = dir.join("report.tsv");
    let text = fs::read_to_string(require(&report_path)?).map_err(|e| Error::io(&report_path, e))?;
    let mut scales = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.starts_with("rank\t") || line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 10 {
            return Err(Error::parse(&report_path, i + 1, "expected 10 columns"));
        }
        let t: f64 = f[1]
            .parse()
            .map_err(|_| Error::parse(&report_path, i + 1, "bad t_star"))?;
        let p = dir.join(f[9]);
        scales.push((t, Partition::read(require(&p)?, &ids)?));
    }
    Ok(SelectArtifact { scales, ids, meta })
}

/// Recompute the selection hash the current configuration would produce
/// and refuse to proceed on a mismatch unless forced.
fn check_lineage(cfg: &RunConfig, e: &EmbeddingMatrix, recorded: &str) -> Result<()> {
    let g = graph_hash(&e.content_hash(), cfg.k);
    let s = scan_hash(&g, &cfg.scan_params());
    let expected = select_hash(&s, &cfg.theta_repr(), &cfg.selection);
    if expected != recorded {
        if cfg.force {
            log::warn!("config hash mismatch ({expected} vs recorded {recorded}); continuing because of --force");
        } else {
            return Err(Error::invalid(format!(
                "selection artifacts were produced by config {recorded}, current config is {expected}; rerun upstream stages or pass --force"
            )));
        }
    }
    Ok(())
}

/// `evaluate`: selected scales vs each label set.
pub fn evaluate(cfg: &RunConfig) -> Result<String> {
    if cfg.labels.is_empty() {
        return Err(Error::invalid("evaluate needs at least one labels file (--labels)"));
    }
    let sel = read_selection(&cfg.out)?;
    let e = cfg.load_embeddings()?;
    let recorded = sel.meta.get("config_hash")?;
    check_lineage(cfg, &e, recorded)?;
    if e.ids() != sel.ids.as_slice() {
        return Err(Error::invalid("embeddings ids do not match the graph's node ids"));
    }
    let label_sets: Vec<LabelSet> = cfg
        .labels
        .iter()
        .map(|p| {
            let l = embeddings::load_labels(p)?;
            l.validate_against(&e, cfg.strict_labels)?;
            Ok(l)
        })
        .collect::<Result<_>>()?;

    let mut hash_parts = vec![recorded.to_string()];
    hash_parts.extend(label_sets.iter().map(|l| {
        let mut s = l.name.clone();
        for (id, lab) in &l.assignments {
            write!(s, "\0{id}\t{lab}").unwrap();
        }
        s
    }));
    hash_parts.push(cfg.n_nearest.to_string());
    let hash = short_hash(&hash_parts.iter().map(String::as_str).collect::<Vec<_>>());
    let pre = preamble("evaluate", &hash, cfg.seed);

    let dir = cfg.stage_dir("evaluate");
    reset_dir(&dir)?;
    let mut meta = Meta::default();
    for labels in &label_sets {
        let ldir = dir.join(&labels.name);
        create_dir(&ldir)?;
        let mut curve = pre.clone();
        curve.push_str("rank\tt_star\tn_communities\tuncertainty\tcoverage_used\tcoverage_dropped\n");
        let mut flows = Vec::new();
        for (rank, (t, partition)) in sel.scales.iter().enumerate() {
            let table = contingency(labels, &sel.ids, partition)?;
            let u = if table.categories.len() >= 2 {
                format!("{:?}", uncertainty_from_counts(&table.counts)?)
            } else {
                "nan".to_string()
            };
            writeln!(
                curve,
                "{rank}\t{t:?}\t{}\t{u}\t{}\t{}",
                partition.n_communities(),
                table.coverage.used,
                table.coverage.dropped
            )
            .unwrap();
            table.write_counts(ldir.join(format!("scale_{rank:02}.counts.tsv")), &pre)?;
            table.write_z_scores(ldir.join(format!("scale_{rank:02}.zscores.tsv")), &pre)?;
            flows.push((format!("scale_{rank:02}"), selection::sankey_flows_to_labels(partition, &sel.ids, labels)?));
            meta.set(&format!("{}.coverage", labels.name), format!("{:?}", table.coverage.fraction()));
        }
        write_text(&ldir.join("uncertainty.tsv"), &curve)?;
        selection::write_sankey(ldir.join("sankey.tsv"), &flows, &pre)?;

        let n_nearest = cfg.n_nearest.min(labels.assignments.len());
        match centroid_benchmark(&e, labels, n_nearest) {
            Ok(score) => {
                let mut out = pre.clone();
                out.push_str("category\thits\n");
                for h in &score.per_category {
                    writeln!(out, "{}\t{}", h.category, h.hits).unwrap();
                }
                writeln!(out, "# total {} of {}", score.score, score.max_score).unwrap();
                write_text(&ldir.join("centroid.tsv"), &out)?;
                meta.set(&format!("{}.centroid_score", labels.name), format!("{}/{}", score.score, score.max_score));
            }
            Err(err) => log::warn!("centroid benchmark skipped for {}: {err}", labels.name),
        }
    }
    meta.set("config_hash", &hash)
        .set("select_hash", recorded)
        .set("seed", cfg.seed)
        .set("entropy_units", "nats")
        .set("uncertainty", "U(T|C) = I(T;C)/H(T) on co-labeled documents")
        .set("z_score", "standardized Pearson residual (n-E)/sqrt(E(1-r/n)(1-c/n))")
        .set("n_nearest", cfg.n_nearest);
    meta.write(dir.join("evaluate.meta"))?;
    Ok(hash)
}

/// `summarize`: ranked lemma weights per cluster of every selected scale.
pub fn summarize(cfg: &RunConfig) -> Result<String> {
    let sel = read_selection(&cfg.out)?;
    let e = cfg.load_embeddings()?;
    let recorded = sel.meta.get("config_hash")?;
    check_lineage(cfg, &e, recorded)?;
    let corpus_path = cfg
        .corpus
        .as_deref()
        .ok_or_else(|| Error::invalid("summarize needs a corpus (--corpus)"))?;
    let docs = embeddings::load_corpus(corpus_path)?;
    let stopwords = match &cfg.stopwords {
        Some(p) => embeddings::load_word_list(p)?,
        None => Default::default(),
    };
    let lemmas = match &cfg.lemmas {
        Some(p) => LemmaTable::load(p)?,
        None => LemmaTable::default(),
    };
    let stemmer = embeddings::SuffixStemmer;
    let transform: Option<&dyn embeddings::TokenTransform> = if cfg.stem { Some(&stemmer) } else { None };
    let corpus = embeddings::tokenize_corpus(&docs, &stopwords, transform);
    let weighting = TermWeighting::default();
    let hash = short_hash(&[recorded, &cfg.top_terms.to_string(), weighting.name(), &cfg.stem.to_string()]);
    let pre = preamble("summarize", &hash, cfg.seed);

    let dir = cfg.stage_dir("summarize");
    reset_dir(&dir)?;
    let mut meta = Meta::default();
    for (rank, (_, partition)) in sel.scales.iter().enumerate() {
        let sdir = dir.join(format!("scale_{rank:02}"));
        create_dir(&sdir)?;
        let summaries = with_workers(cfg.workers, || {
            cluster_terms(&corpus, &sel.ids, partition, &lemmas, cfg.top_terms, weighting)
        })??;
        let mut empty = Vec::new();
        for s in &summaries {
            s.write(sdir.join(format!("cluster_{:03}.tsv", s.cluster)), &pre)?;
            if s.empty {
                empty.push(s.cluster.to_string());
            }
        }
        meta.set(&format!("scale_{rank:02}.empty_clusters"), empty.join(","));
    }
    meta.set("config_hash", &hash)
        .set("select_hash", recorded)
        .set("weighting", weighting.name())
        .set("top_terms", cfg.top_terms)
        .set("empty_documents", corpus.empty.len())
        .set("seed", cfg.seed);
    meta.write(dir.join("summarize.meta"))?;
    Ok(hash)
}

/// Write the bundled synthetic corpus plus a ready-to-use config file.
pub fn generate_corpus(dir: &Path, spec: &CorpusSpec, seed: u64) -> Result<PathBuf> {
    create_dir(dir)?;
    let c = spec.generate(seed)?;
    embeddings::write_embeddings(dir.join("embeddings.tsv"), &c.embeddings, Format::Tsv)?;
    embeddings::write_labels(dir.join("level1.tsv"), &c.level1)?;
    embeddings::write_labels(dir.join("level2.tsv"), &c.level2)?;
    let mut corpus = String::from("id\ttext\n");
    for (id, text) in &c.documents {
        writeln!(corpus, "{id}\t{}", embeddings::escape_text(text)).unwrap();
    }
    write_text(&dir.join("corpus.tsv"), &corpus)?;
    write_text(&dir.join("stopwords.txt"), &(c.stopwords.join("\n") + "\n"))?;
    let mut lemmas: Vec<(String, String)> = c
        .documents
        .values()
        .flat_map(|t| t.split(|ch: char| !ch.is_alphanumeric()))
        .map(str::to_lowercase)
        .filter(|w| !w.is_empty())
        .map(|w| (w.clone(), c.lemmas.lemmatise(&w).to_string()))
        .filter(|(a, b)| a != b)
        .collect();
    lemmas.sort();
    lemmas.dedup();
    let mut table = String::new();
    for (a, b) in lemmas {
        writeln!(table, "{a}\t{b}").unwrap();
    }
    write_text(&dir.join("lemmas.tsv"), &table)?;

    let config = dir.join("pipeline.conf");
    let text = format!(
        "# synthetic corpus: {} documents, {} super-topics x {} topics\n\
         embeddings = embeddings.tsv\nlabels = level1.tsv,level2.tsv\ncorpus = corpus.tsv\n\
         stopwords = stopwords.txt\nlemmas = lemmas.tsv\nout = out\n\
         k = 5\ngrid = log:0.01:1000:60\nn_runs = 40\nn_top = 10\nseed = {seed}\n",
        spec.docs, spec.super_topics, spec.topics_per_super,
    );
    write_text(&config, &text)?;
    Ok(config)
}

/// Outcome of the planted two-level recovery benchmark.
#[derive(Debug, Clone)]
pub struct RecoveryReport {
    pub scales: Vec<RobustScale>,
    pub fine_found: bool,
    pub coarse_found: bool,
    pub elapsed: Duration,
}

impl RecoveryReport {
    pub fn passed(&self) -> bool {
        self.fine_found && self.coarse_found
    }
}

/// Scan the hierarchical SBM (16 blocks of 8 in 4 super-blocks), select
/// robust scales and check both planted levels come back exactly. Artifacts
/// are written under `out` through the regular stage functions.
pub fn bench_recovery(out: &Path, seed: u64, n_runs: usize, points: usize, workers: usize) -> Result<RecoveryReport> {
    let started = Instant::now();
    let planted = HierarchicalSbm::default().generate(seed)?;
    let cfg = RunConfig {
        out: out.to_path_buf(),
        grid: TimeGrid::Log {
            lo: 0.01,
            hi: 100.0,
            points,
        },
        n_runs,
        n_top: n_runs.min(50),
        seed,
        workers,
        ..RunConfig::default()
    };
    write_graph(out, &planted.graph, &format!("hierarchical-sbm:{seed}"), 0, seed)?;
    scan(&cfg)?;
    let scales = select(&cfg)?;
    let hit = |target: &Partition| {
        scales
            .iter()
            .any(|s| metrics::variation_of_information(&s.partition, target).is_ok_and(|v| v == 0.0))
    };
    Ok(RecoveryReport {
        fine_found: hit(&planted.fine),
        coarse_found: hit(&planted.coarse),
        scales,
        elapsed: started.elapsed(),
    })
}

#[derive(Debug, Clone)]
pub struct ThroughputReport {
    pub n: usize,
    pub edges: usize,
    pub graph_time: Duration,
    pub scan_time: Duration,
}

/// Paper-scale timing: synthetic embeddings, `build-graph` then `scan`.
pub fn bench_throughput(out: &Path, spec: &CorpusSpec, seed: u64, k: usize, grid: TimeGrid, n_runs: usize, workers: usize) -> Result<ThroughputReport> {
    let c = spec.generate(seed)?;
    create_dir(out)?;
    let path = out.join("embeddings.tsv");
    embeddings::write_embeddings(&path, &c.embeddings, Format::Tsv)?;
    let cfg = RunConfig {
        embeddings: Some(path),
        out: out.to_path_buf(),
        k,
        grid,
        n_runs,
        n_top: n_runs.min(50),
        seed,
        workers,
        ..RunConfig::default()
    };
    let t0 = Instant::now();
    build_graph(&cfg)?;
    let graph_time = t0.elapsed();
    let t1 = Instant::now();
    scan(&cfg)?;
    let scan_time = t1.elapsed();
    let g = read_graph(out)?;
    Ok(ThroughputReport {
        n: g.graph.n(),
        edges: g.graph.edges().len(),
        graph_time,
        scan_time,
    })
}
