use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;

use multiscale_topics::pipeline::{self, RunConfig};
use multiscale_topics::stability::TimeGrid;
use multiscale_topics::synthetic::CorpusSpec;
use multiscale_topics::Result;

#[derive(Parser)]
#[command(name = "mstopics", version, about = "Multiscale topic clustering of document embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the MST-kNN similarity graph from embeddings
    BuildGraph(Common),
    /// Optimize Markov Stability over the time grid
    Scan(Common),
    /// Detect robust scales from a finished scan
    Select(Common),
    /// Compare selected scales against label sets
    Evaluate(Common),
    /// Write ranked terms for every cluster of every selected scale
    Summarize(Common),
    /// Synthetic data and benchmarks
    Bench {
        #[command(subcommand)]
        which: Bench,
    },
}

#[derive(Subcommand)]
enum Bench {
    /// Write a small synthetic corpus and a matching config file
    Generate {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 180)]
        docs: usize,
    },
    /// Recover both levels of a planted two-level block model
    Recovery {
        #[arg(long, default_value = "bench-recovery")]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        n_runs: usize,
        #[arg(long, default_value_t = 50)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Time graph construction and a full scan on synthetic embeddings
    Throughput {
        #[arg(long, default_value = "bench-throughput")]
        out: PathBuf,
        #[arg(long, default_value_t = 3229)]
        docs: usize,
        #[arg(long, default_value_t = 300)]
        dim: usize,
        #[arg(long, default_value_t = 13)]
        k: usize,
        #[arg(long, default_value = "log:0.01:100:100")]
        grid: TimeGrid,
        #[arg(long, default_value_t = 100)]
        n_runs: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
}

/// Options shared by the pipeline stages. Values given here override the
/// config file.
#[derive(Args)]
struct Common {
    /// Plain-text `key = value` config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory holding all stage artifacts
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// tsv or csv (default: from the file extension)
    #[arg(long)]
    format: Option<String>,
    /// Label file; repeat for several label sets
    #[arg(long)]
    labels: Vec<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    stopwords: Option<PathBuf>,
    #[arg(long)]
    lemmas: Option<PathBuf>,
    /// Nearest neighbours added to the spanning tree
    #[arg(long)]
    k: Option<usize>,
    /// log:LO:HI:POINTS or linear:LO:HI:STEP
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    n_runs: Option<usize>,
    #[arg(long)]
    n_top: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Plateau threshold on mean cross-time VI, or `auto`
    #[arg(long)]
    theta: Option<String>,
    #[arg(long)]
    min_plateau: Option<usize>,
    #[arg(long)]
    dip_window: Option<usize>,
    #[arg(long)]
    top_terms: Option<usize>,
    #[arg(long)]
    n_nearest: Option<usize>,
    /// Worker threads (0 = all cores)
    #[arg(long)]
    workers: Option<usize>,
    /// Reject label files naming unknown documents
    #[arg(long)]
    strict_labels: bool,
    /// Apply the built-in suffix stemmer before lemmatising
    #[arg(long)]
    stem: bool,
    /// Proceed even when upstream artifacts came from a different config
    #[arg(long)]
    force: bool,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        let paths = [
            ("out", &self.out),
            ("embeddings", &self.embeddings),
            ("corpus", &self.corpus),
            ("stopwords", &self.stopwords),
            ("lemmas", &self.lemmas),
        ];
        for (key, value) in paths {
            if let Some(v) = value {
                cfg.set(key, &v.display().to_string())?;
            }
        }
        if !self.labels.is_empty() {
            cfg.labels = self.labels.clone();
        }
        let strings = [("format", &self.format), ("grid", &self.grid), ("theta", &self.theta)];
        for (key, value) in strings {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        let numbers = [
            ("k", self.k),
            ("n_runs", self.n_runs),
            ("n_top", self.n_top),
            ("min_plateau", self.min_plateau),
            ("dip_window", self.dip_window),
            ("top_terms", self.top_terms),
            ("n_nearest", self.n_nearest),
            ("workers", self.workers),
        ];
        for (key, value) in numbers {
            if let Some(v) = value {
                cfg.set(key, &v.to_string())?;
            }
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg.force |= self.force;
        cfg.strict_labels |= self.strict_labels;
        cfg.stem |= self.stem;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::BuildGraph(c) => {
            let hash = pipeline::build_graph(&c.resolve()?)?;
            println!("graph {hash}");
        }
        Command::Scan(c) => {
            let hash = pipeline::scan(&c.resolve()?)?;
            println!("scan {hash}");
        }
        Command::Select(c) => {
            for (rank, s) in pipeline::select(&c.resolve()?)?.iter().enumerate() {
                println!(
                    "scale {rank}: t*={:.4} communities={} plateau=[{:.4}, {:.4}] dip={:.4}",
                    s.t_star, s.n_communities, s.t_lo, s.t_hi, s.dip_depth
                );
            }
        }
        Command::Evaluate(c) => {
            let hash = pipeline::evaluate(&c.resolve()?)?;
            println!("evaluate {hash}");
        }
        Command::Summarize(c) => {
            let hash = pipeline::summarize(&c.resolve()?)?;
            println!("summarize {hash}");
        }
        Command::Bench { which } => bench(which)?,
    }
    Ok(())
}

fn bench(which: Bench) -> Result<()> {
    match which {
        Bench::Generate { dir, seed, docs } => {
            let spec = CorpusSpec {
                docs,
                ..CorpusSpec::default()
            };
            let config = pipeline::generate_corpus(&dir, &spec, seed)?;
            println!("wrote {}", config.display());
        }
        Bench::Recovery {
            out,
            seed,
            n_runs,
            points,
            workers,
        } => {
            let r = pipeline::bench_recovery(&out, seed, n_runs, points, workers)?;
            for s in &r.scales {
                println!("t*={:.4} communities={} dip={:.4}", s.t_star, s.n_communities, s.dip_depth);
            }
            println!(
                "fine level recovered: {}, coarse level recovered: {}, {:.1?}",
                r.fine_found, r.coarse_found, r.elapsed
            );
        }
        Bench::Throughput {
            out,
            docs,
            dim,
            k,
            grid,
            n_runs,
            seed,
            workers,
        } => {
            let spec = CorpusSpec {
                docs,
                dim,
                ..CorpusSpec::default()
            };
            let r = pipeline::bench_throughput(&out, &spec, seed, k, grid, n_runs, workers)?;
            println!(
                "N={} edges={} graph {:.1?} scan {:.1?}",
                r.n, r.edges, r.graph_time, r.scan_time
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(pipeline::exit_code(&e) as u8)
        }
    }
}
