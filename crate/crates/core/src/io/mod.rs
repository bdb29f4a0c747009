//! File formats: gaussian PLY, camera JSON, PFM depth maps and PNG images.

mod cameras;
mod pfm;
mod ply;
mod png;

pub use cameras::{read_cameras, write_cameras, REORTHONORMALIZE_LIMIT};
pub use pfm::{read_depth_pfm, read_pfm, write_pfm, DepthConvention, DepthMapFile};
pub use ply::{read_ply, read_ply_bytes, write_ply, write_ply_bytes};
pub use png::{read_png, write_mask_png, write_png};
