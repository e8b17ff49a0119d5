//! Markov Stability: diffusion operators, the stability quality matrix,
//! its Louvain optimization and the multiscale scan over Markov time.

mod diffusion;
mod louvain;
mod scan;

pub use diffusion::{
    diffusion_kernel, diffusion_operators, stability_score, DiffusionOperators, SpectralKernel,
    StabilityMatrix, NEGATIVE_CLAMP,
};
pub use louvain::{derive_seed, louvain_optimize, mix64, LouvainOutcome};
pub use scan::{scan_markov_times, scan_with_kernel, ScanParams, ScanRecord, StabilityScan, TimeGrid};
