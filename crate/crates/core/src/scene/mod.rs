//! Gaussians, scenes and cameras.

pub(crate) mod camera;
mod gaussian;
pub mod toy;

pub use camera::{Camera, ORTHONORMAL_TOLERANCE};
pub use gaussian::{activate, deactivate, Gaussian, RawGaussian, MAX_SH_COEFFS};
pub use toy::{make_toy_scene, GaussianLabel, ToyScene, ToySpec};

use crate::error::{Error, Result};

/// Ordered collection of gaussians. Gaussian ids are dense indices `[0, n)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Scene {
    pub gaussians: Vec<Gaussian>,
    pub source_path: Option<String>,
    /// Verbatim PLY header `comment`/`obj_info` lines, kept so a read/write
    /// cycle is byte-identical.
    pub comments: Vec<String>,
}

impl Scene {
    pub fn new(gaussians: Vec<Gaussian>) -> Self {
        Scene {
            gaussians,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.gaussians.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaussians.is_empty()
    }

    /// Number of `f_rest_*` values stored per gaussian, if consistent across the scene.
    pub fn sh_rest_len(&self) -> Result<usize> {
        let Some(first) = self.gaussians.first() else {
            return Ok(0);
        };
        let n = first.raw().f_rest.len();
        if let Some((i, _)) = self
            .gaussians
            .iter()
            .enumerate()
            .find(|(_, g)| g.raw().f_rest.len() != n)
        {
            return Err(Error::InvalidArgument(format!(
                "gaussian {i} has {} f_rest values, expected {n}",
                self.gaussians[i].raw().f_rest.len()
            )));
        }
        Ok(n)
    }

    /// Removes the gaussians whose ids appear in `ids`, keeping the survivors in
    /// their original order. Returns the old-id to new-id mapping (`None` for
    /// removed gaussians). Out-of-range ids are ignored.
    pub fn remove(&mut self, ids: impl IntoIterator<Item = usize>) -> Vec<Option<usize>> {
        let n = self.gaussians.len();
        let mut drop = vec![false; n];
        for id in ids {
            if id < n {
                drop[id] = true;
            }
        }
        let mut remap = Vec::with_capacity(n);
        let mut next = 0;
        for &d in &drop {
            if d {
                remap.push(None);
            } else {
                remap.push(Some(next));
                next += 1;
            }
        }
        let mut i = 0;
        self.gaussians.retain(|_| {
            let keep = !drop[i];
            i += 1;
            keep
        });
        remap
    }
}
