//! Image and depth similarity measures.

mod image;
mod pearson;

pub use self::image::{psnr, ssim, PSNR_CAP_DB};
pub use pearson::{
    local_pearson_loss, local_pearson_loss_grad, pcc, sample_patch_corners, PatchLoss, PatchSpec,
    DEGENERATE_VARIANCE, MIN_VALID_FRACTION,
};
