//! Anisotropic white-matter graph filtering for fMRI.
//!
//! The crate builds voxel graphs whose edge weights follow diffusion ODFs,
//! smooths volumetric time series with heat kernels on those graphs, and
//! scores activation detection against isotropic baselines on
//! semi-synthetic phantoms.
//!
//! # Modules
//! - `volume`, `odf`, `streamline`, `io`: data types and file formats
//! - `neighborhood`, `graph`: graph construction and the normalised Laplacian
//! - `spectral`: heat kernels, Chebyshev and dense filtering
//! - `baseline`: Gaussian smoothing and the uniform mask graph
//! - `phantom`, `rng`: ground-truth patterns and noisy series
//! - `activation`, `stats`: GLM t-maps, FDR, ROC
//! - `anatomy`: analytic crossing-tract test anatomy
//! - `pipeline`: the end-to-end comparison experiment

pub mod activation;
pub mod anatomy;
pub mod baseline;
pub mod error;
pub mod graph;
pub mod io;
pub mod neighborhood;
pub mod odf;
mod par;
pub mod phantom;
pub mod pipeline;
pub mod rng;
pub mod spectral;
pub mod stats;
pub mod streamline;
pub mod volume;

pub use error::{Error, Result};
pub use graph::{BuildReport, GraphBuildConfig, VoxelGraph};
pub use odf::OdfField;
pub use streamline::StreamlineSet;
pub use volume::{AnyVolume, Grid, Mask, Volume3D, Volume4D};
