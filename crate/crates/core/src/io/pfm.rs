//! Single-channel PFM (`Pf`) depth maps.

use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::DepthMap;

/// How the values of a depth map file relate to scene depth.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DepthConvention {
    /// Monocular estimator output; only relative structure is meaningful.
    MonocularRelative,
    /// Metric depth in scene units; negative values are invalid.
    SceneAnchored,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DepthMapFile {
    pub map: DepthMap,
    pub convention: DepthConvention,
}

impl DepthMapFile {
    /// Bilinear resample to a camera resolution; no-op if already matching.
    pub fn resampled(&self, width: usize, height: usize) -> Result<DepthMap> {
        self.map.resample_bilinear(width, height)
    }
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize, path: &Path) -> Result<&'a str> {
    while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::parse(
            path,
            start as u64,
            "unexpected end of PFM header",
        ));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .map_err(|_| Error::parse(path, start as u64, "non-ASCII PFM header"))
}

pub(crate) fn parse_pfm(bytes: &[u8], path: &Path) -> Result<DepthMap> {
    let mut pos = 0;
    let magic = next_token(bytes, &mut pos, path)?;
    if magic != "Pf" {
        let msg = if magic == "PF" {
            "three-channel PFM is not a depth map".to_string()
        } else {
            format!("bad PFM magic {magic:?}")
        };
        return Err(Error::parse(path, 0, msg));
    }
    let mut number = |what: &str| -> Result<(String, u64)> {
        let at = pos as u64;
        let tok = next_token(bytes, &mut pos, path)?.to_string();
        if tok.is_empty() {
            return Err(Error::parse(path, at, format!("missing {what}")));
        }
        Ok((tok, at))
    };
    let (w, w_at) = number("width")?;
    let (h, h_at) = number("height")?;
    let (s, s_at) = number("scale")?;
    let width: usize = w
        .parse()
        .map_err(|_| Error::parse(path, w_at, format!("bad width {w:?}")))?;
    let height: usize = h
        .parse()
        .map_err(|_| Error::parse(path, h_at, format!("bad height {h:?}")))?;
    let scale: f64 = s
        .parse()
        .map_err(|_| Error::parse(path, s_at, format!("bad scale {s:?}")))?;
    if width == 0 || height == 0 {
        return Err(Error::parse(path, w_at, "PFM dimensions must be positive"));
    }
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::parse(path, s_at, "PFM scale must be non-zero"));
    }
    // exactly one whitespace byte separates the header from the payload
    pos += 1;
    let expected = width * height * 4;
    let payload = bytes.get(pos..).unwrap_or(&[]);
    if payload.len() != expected {
        return Err(Error::parse(
            path,
            pos as u64,
            format!("expected {expected} payload bytes, found {}", payload.len()),
        ));
    }
    let little = scale < 0.0;
    let mut data = vec![0.0; width * height];
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        };
        if !v.is_finite() {
            return Err(Error::parse(
                path,
                (pos + 4 * i) as u64,
                format!("non-finite depth {v}"),
            ));
        }
        // stored bottom row first
        let (x, y_file) = (i % width, i / width);
        data[(height - 1 - y_file) * width + x] = v as f64;
    }
    DepthMap::from_vec(width, height, data)
}

pub fn read_pfm(path: impl AsRef<Path>) -> Result<DepthMap> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pfm(&bytes, path)
}

/// Reads a depth map and checks it against `convention`.
pub fn read_depth_pfm(path: impl AsRef<Path>, convention: DepthConvention) -> Result<DepthMapFile> {
    let path = path.as_ref();
    let map = read_pfm(path)?;
    if convention == DepthConvention::SceneAnchored {
        if let Some(i) = map.as_slice().iter().position(|&v| v < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "{}: negative depth at pixel ({}, {}) in a scene-anchored map",
                path.display(),
                i % map.width(),
                i / map.width()
            )));
        }
    }
    Ok(DepthMapFile { map, convention })
}

pub(crate) fn encode_pfm(map: &DepthMap) -> Result<Vec<u8>> {
    if let Some(v) = map.as_slice().iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("depth value {v}")));
    }
    let (w, h) = map.dims();
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(w * h * 4);
    for y in (0..h).rev() {
        for x in 0..w {
            out.extend_from_slice(&(*map.get(x, y) as f32).to_le_bytes());
        }
    }
    Ok(out)
}

/// Writes little-endian `Pf`, bottom row first.
pub fn write_pfm(map: &DepthMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_pfm(map)?).map_err(|e| Error::io(path, e))
}
