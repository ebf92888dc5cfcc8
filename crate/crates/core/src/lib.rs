//! Topology-processing core for autoregressive polygon generation.
//!
//! The crate is organised by pipeline stage:
//!
//! * [`mesh`]: indexed tri/quad meshes, OBJ/XYZ I/O, normalization,
//!   quantization, canonical ordering, edge topology and surface sampling.
//! * [`bpt`]: blocked-and-patchified tokenization, an invertible
//!   mesh/token codec with window slicing for truncated training.
//! * [`metrics`]: boundary edge ratio, topology score and Hausdorff distance.
//! * [`preference`]: strict-dominance ranking, preference triplets and the
//!   per-patch quality mask.
//! * [`mdpo`]: a small causal-attention scorer, its likelihood objective and
//!   the masked preference objective, with exact reverse-mode gradients.
//! * [`seam`]: seam sequences, structural point sampling and the
//!   seam-driven cut / flatten / distortion pipeline.

pub mod bpt;
pub mod error;
pub mod mdpo;
pub mod mesh;
pub mod metrics;
pub mod preference;
pub mod seam;

pub use bpt::{BptConfig, TokenSequence};
pub use error::{Error, Result};
pub use mesh::{EdgeTopology, Mesh, PointCloud, QuantGrid, Vec3};
pub use metrics::QualityReport;
pub use preference::{MaskConfig, MaskVector, PreferenceTriplet};
pub use seam::{SeamSegment, SeamSequence};
