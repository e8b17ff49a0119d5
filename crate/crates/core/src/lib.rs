//! Multiscale topic clustering for embedded document collections.
//!
//! The pipeline turns document vectors into a sparsified similarity graph,
//! scans Markov Stability over a range of Markov times to find partitions
//! at many resolutions, picks out the robust ones and compares them to
//! hand-coded categories.
//!
//! | Stage | Module |
//! |-------|--------|
//! | load vectors, labels and text | [`embeddings`] |
//! | cosine distance, MST-kNN graph | [`similarity`] |
//! | diffusion kernel, stability, Louvain, time scan | [`stability`] |
//! | VI, uncertainty coefficient, contingency, centroid benchmark | [`metrics`] |
//! | plateaux/dips, Sankey flows | [`selection`] |
//! | per-cluster term weights | [`summary`] |
//! | staged file-based runs | [`pipeline`] |
//!
//! ```no_run
//! use multiscale_topics::{embeddings, similarity, stability, metrics, selection};
//!
//! let e = embeddings::load_embeddings("vectors.tsv", embeddings::Format::Tsv)?;
//! let graph = similarity::build_mst_knn(&e, 13)?;
//! let params = stability::ScanParams::new(stability::TimeGrid::DEFAULT.times(), 100, 20, 42);
//! let scan = stability::scan_markov_times(&graph, &params)?;
//! let cross = metrics::cross_time_vi(&scan)?;
//! for scale in selection::find_robust_scales(&scan, &cross, &Default::default())? {
//!     println!("t={:.3}: {} communities", scale.t_star, scale.n_communities);
//! }
//! # Ok::<(), multiscale_topics::Error>(())
//! ```

pub mod embeddings;
mod error;
pub mod metrics;
pub mod partition;
pub mod pipeline;
pub mod selection;
pub mod similarity;
pub mod stability;
pub mod summary;
pub mod synthetic;

pub use error::{Error, Result};
pub use partition::Partition;
