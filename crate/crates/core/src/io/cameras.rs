//! Camera metadata in the JSON layout exported by 3D Gaussian Splatting:
//! a JSON array with one object per camera carrying
//! `id, img_name, width, height, position, rotation, fx, fy`.
//!
//! `rotation` is the camera-to-world matrix, row-major, either nested
//! (`[[r00, r01, r02], ...]`) or flat. JSON Lines input is accepted too.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::Camera;

/// Rotations whose `RᵀR − I` drift exceeds this are rejected; smaller drift
/// is projected back onto SO(3).
pub const REORTHONORMALIZE_LIMIT: f64 = 1e-3;
/// Drift below this is left untouched so written files read back unchanged.
const EXACT_LIMIT: f64 = 1e-10;

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum RotationField {
    Nested([[f64; 3]; 3]),
    Flat([f64; 9]),
}

#[derive(Debug, Serialize, Deserialize)]
struct CameraRecord {
    id: i64,
    img_name: String,
    width: u32,
    height: u32,
    position: [f64; 3],
    rotation: RotationField,
    fy: f64,
    fx: f64,
}

fn orthonormalize(id: i64, r: Matrix3<f64>) -> Result<Matrix3<f64>> {
    let drift = crate::scene::camera::orthonormality_error(&r);
    if !drift.is_finite() || drift > REORTHONORMALIZE_LIMIT {
        return Err(Error::Camera {
            id,
            message: format!("rotation drift {drift:.3e} exceeds {REORTHONORMALIZE_LIMIT:e}"),
        });
    }
    if drift <= EXACT_LIMIT {
        return Ok(r);
    }
    let svd = r.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let fixed = u * v_t;
    if fixed.determinant() < 0.0 {
        return Err(Error::Camera {
            id,
            message: "rotation is a reflection".into(),
        });
    }
    Ok(fixed)
}

impl CameraRecord {
    fn into_camera(self) -> Result<Camera> {
        let rows = match self.rotation {
            RotationField::Nested(rows) => rows,
            RotationField::Flat(f) => [[f[0], f[1], f[2]], [f[3], f[4], f[5]], [f[6], f[7], f[8]]],
        };
        let r = Matrix3::from_fn(|i, j| rows[i][j]);
        let r = orthonormalize(self.id, r)?;
        Camera::new(
            self.id,
            self.img_name,
            self.width,
            self.height,
            self.fx,
            self.fy,
            r,
            Vector3::from(self.position),
        )
    }

    fn from_camera(cam: &Camera) -> Self {
        let r = cam.rotation();
        CameraRecord {
            id: cam.id,
            img_name: cam.image_name.clone(),
            width: cam.width(),
            height: cam.height(),
            position: [cam.position().x, cam.position().y, cam.position().z],
            rotation: RotationField::Nested([
                [r[(0, 0)], r[(0, 1)], r[(0, 2)]],
                [r[(1, 0)], r[(1, 1)], r[(1, 2)]],
                [r[(2, 0)], r[(2, 1)], r[(2, 2)]],
            ]),
            fy: cam.fy(),
            fx: cam.fx(),
        }
    }
}

pub fn read_cameras(path: impl AsRef<Path>) -> Result<Vec<Camera>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_cameras(&text)
}

pub(crate) fn parse_cameras(text: &str) -> Result<Vec<Camera>> {
    let records: Vec<CameraRecord> = if text.trim_start().starts_with('[') {
        serde_json::from_str(text)?
    } else {
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<_, _>>()?
    };
    let mut seen = std::collections::HashSet::new();
    records
        .into_iter()
        .map(|r| {
            if !seen.insert(r.id) {
                return Err(Error::Camera {
                    id: r.id,
                    message: "duplicate camera id".into(),
                });
            }
            r.into_camera()
        })
        .collect()
}

pub(crate) fn format_cameras(cameras: &[Camera]) -> Result<String> {
    let mut out = String::from("[\n");
    for (i, cam) in cameras.iter().enumerate() {
        out.push_str(&serde_json::to_string(&CameraRecord::from_camera(cam))?);
        out.push_str(if i + 1 < cameras.len() { ",\n" } else { "\n" });
    }
    out.push_str("]\n");
    Ok(out)
}

/// Writes one record per line inside a JSON array.
pub fn write_cameras(cameras: &[Camera], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_cameras(cameras)?).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: i64, rotation: &str) -> String {
        format!(
            r#"{{"id": {id}, "img_name": "im{id}", "width": 64, "height": 48, "position": [0, 0, 0], "rotation": {rotation}, "fy": 50.0, "fx": 51.0}}"#
        )
    }

    #[test]
    fn identity_camera() {
        let text = format!("[{}]", record(3, "[[1,0,0],[0,1,0],[0,0,1]]"));
        let cams = parse_cameras(&text).unwrap();
        assert_eq!(cams.len(), 1);
        assert_eq!(*cams[0].rotation(), Matrix3::identity());
        assert_eq!(cams[0].fx(), 51.0);
        assert_eq!(cams[0].image_name, "im3");
    }

    #[test]
    fn small_drift_is_repaired() {
        let text = format!("[{}]", record(0, "[1.0001,0,0,0,1,0,0,0,1]"));
        let cams = parse_cameras(&text).unwrap();
        let r = cams[0].rotation();
        assert!(crate::scene::camera::orthonormality_error(r) < 1e-12);
    }

    #[test]
    fn large_drift_is_rejected() {
        let text = format!("[{}]", record(0, "[[1.1,0,0],[0,1,0],[0,0,1]]"));
        assert!(matches!(
            parse_cameras(&text),
            Err(Error::Camera { id: 0, .. })
        ));
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let text = format!(
            "[{}, {}]",
            record(1, "[[1,0,0],[0,1,0],[0,0,1]]"),
            record(1, "[[1,0,0],[0,1,0],[0,0,1]]")
        );
        assert!(parse_cameras(&text).is_err());
    }

    #[test]
    fn json_lines_and_round_trip() {
        let text = format!(
            "{}\n{}\n",
            record(0, "[[1,0,0],[0,1,0],[0,0,1]]"),
            record(1, "[[0,-1,0],[1,0,0],[0,0,1]]")
        );
        let cams = parse_cameras(&text).unwrap();
        let written = format_cameras(&cams).unwrap();
        let again = parse_cameras(&written).unwrap();
        assert_eq!(cams, again);
        assert_eq!(format_cameras(&again).unwrap(), written);
    }
}
