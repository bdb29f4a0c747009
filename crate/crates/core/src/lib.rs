//! Depth rendering, floater detection and pruning for 3D Gaussian splat scenes.
//!
//! The crate renders colour plus two depth maps from an explicit gaussian
//! scene: the alpha-blended depth (the same weighted sum used for colour) and
//! the mode depth (the depth of the single gaussian with the largest blending
//! weight on a pixel). Disagreement between the two is used to find floaters,
//! with a dip-statistic driven threshold deciding how aggressive to be.
//!
//! Modules:
//! - [`scene`]: gaussians, scenes, cameras and deterministic toy fixtures.
//! - [`io`]: PLY, camera JSON, PFM and PNG readers/writers.
//! - [`raster`]: EWA projection and the tiled CPU rasterizer (plus an untiled oracle).
//! - [`metrics`]: Pearson correlation, patch-based depth correlation loss, PSNR, SSIM.
//! - [`modality`]: Hartigan's dip statistic.
//! - [`prune`]: the floater detection and pruning operator.
//! - [`poses`]: novel camera pose generation about an estimated up-axis.

pub mod error;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod modality;
pub mod poses;
pub mod prune;
pub mod raster;
pub mod scene;

pub use error::{Error, Result};
pub use grid::{ColorImage, DepthMap, Grid, Mask};
pub use scene::{Camera, Gaussian, RawGaussian, Scene};
