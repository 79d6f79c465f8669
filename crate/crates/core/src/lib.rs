//! Diffusion maps with a Nystrom-accelerated eigendecomposition.
//!
//! The pipeline is: data ([`datasets`]) -> Gaussian kernel and degrees
//! ([`kernel`]) -> leading eigenpairs of the symmetric diffusion operator,
//! either exactly ([`spectral`]) or through a Nystrom sketch ([`nystrom`])
//! -> diffusion coordinates ([`embedding`]). [`runner`] ties the stages
//! together, times them and writes reports.

pub mod datasets;
pub mod embedding;
pub mod error;
pub mod kernel;
pub mod linalg;
pub mod nystrom;
pub mod runner;
pub mod spectral;

pub use datasets::{DataMatrix, LorenzParams};
pub use embedding::{DiffusionEmbedding, EmbeddingParams, Weighting};
pub use error::{Error, Result};
pub use kernel::{DegreeVector, GaussianKernel, KernelMatrix};
pub use nystrom::{NystromFactors, SketchConfig, SketchStrategy};
pub use spectral::{EigenSolver, Method, SpectralModel};
