//! Binary little-endian PLY in the layout written by 3D Gaussian Splatting:
//! `x y z nx ny nz f_dc_0..2 f_rest_0..k opacity scale_0..2 rot_0..3`, all float32.

use std::path::Path;

use crate::error::{Error, Result};
use crate::scene::{activate, RawGaussian, Scene, MAX_SH_COEFFS};

const FORMAT_LINE: &str = "format binary_little_endian 1.0";

fn property_names(rest: usize) -> Vec<String> {
    let mut names: Vec<String> = [
        "x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    names.extend((0..rest).map(|i| format!("f_rest_{i}")));
    names.push("opacity".into());
    names.extend((0..3).map(|i| format!("scale_{i}")));
    names.extend((0..4).map(|i| format!("rot_{i}")));
    names
}

pub fn read_ply(path: impl AsRef<Path>) -> Result<Scene> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut scene = read_ply_bytes(&bytes, path)?;
    scene.source_path = Some(path.display().to_string());
    Ok(scene)
}

/// Parses PLY bytes; `origin` is only used in error messages.
pub fn read_ply_bytes(bytes: &[u8], origin: &Path) -> Result<Scene> {
    let perr = |offset: usize, msg: String| Error::parse(origin, offset as u64, msg);

    let mut offset = 0usize;
    let next_line = |offset: &mut usize| -> Result<(usize, String)> {
        let start = *offset;
        let Some(len) = bytes[start..].iter().position(|&b| b == b'\n') else {
            return Err(perr(start, "unterminated header".into()));
        };
        *offset = start + len + 1;
        let line = std::str::from_utf8(&bytes[start..start + len])
            .map_err(|_| perr(start, "header is not valid UTF-8".into()))?;
        Ok((start, line.trim_end_matches('\r').to_string()))
    };

    let (at, magic) = next_line(&mut offset)?;
    if magic != "ply" {
        return Err(perr(at, format!("expected `ply` magic, found {magic:?}")));
    }
    let (at, format) = next_line(&mut offset)?;
    if format.trim() != FORMAT_LINE {
        return Err(perr(
            at,
            format!("unsupported format line {format:?}, expected {FORMAT_LINE:?}"),
        ));
    }

    let mut comments = Vec::new();
    let mut vertex_count: Option<usize> = None;
    let mut properties: Vec<(usize, String)> = Vec::new();
    loop {
        let (at, line) = next_line(&mut offset)?;
        let mut words = line.split_whitespace();
        match words.next() {
            Some("end_header") => break,
            Some("comment") | Some("obj_info") => {
                if vertex_count.is_some() {
                    return Err(perr(at, "comments must precede the vertex element".into()));
                }
                comments.push(line);
            }
            Some("element") => {
                let name = words.next().unwrap_or_default();
                if name != "vertex" || vertex_count.is_some() {
                    return Err(perr(at, format!("unsupported element {name:?}")));
                }
                let count = words
                    .next()
                    .and_then(|c| c.parse::<usize>().ok())
                    .ok_or_else(|| perr(at, format!("bad vertex count in {line:?}")))?;
                vertex_count = Some(count);
            }
            Some("property") => {
                if vertex_count.is_none() {
                    return Err(perr(at, "property before element vertex".into()));
                }
                let ty = words.next().unwrap_or_default();
                let name = words.next().unwrap_or_default();
                if ty != "float" && ty != "float32" {
                    return Err(perr(
                        at,
                        format!("property {name:?} has type {ty:?}, expected float"),
                    ));
                }
                properties.push((at, name.to_string()));
            }
            _ => return Err(perr(at, format!("unexpected header line {line:?}"))),
        }
    }
    let header_end = offset;
    let count = vertex_count.ok_or_else(|| perr(header_end, "missing `element vertex`".into()))?;

    let rest = properties
        .iter()
        .filter(|(_, n)| n.starts_with("f_rest_"))
        .count();
    if rest % 3 != 0 || rest > 3 * (MAX_SH_COEFFS - 1) {
        return Err(perr(
            header_end,
            format!("{rest} f_rest properties, expected a multiple of 3 up to 45"),
        ));
    }
    let expected = property_names(rest);
    for name in &expected {
        if !properties.iter().any(|(_, n)| n == name) {
            return Err(perr(
                header_end,
                format!("missing required property `{name}`"),
            ));
        }
    }
    for (i, (at, name)) in properties.iter().enumerate() {
        if expected.get(i) != Some(name) {
            return Err(perr(
                *at,
                format!(
                    "property `{name}` out of place, expected `{}`",
                    expected.get(i).map_or("end of properties", |s| s)
                ),
            ));
        }
    }

    let stride = expected.len() * 4;
    let payload = &bytes[header_end..];
    let needed = count
        .checked_mul(stride)
        .ok_or_else(|| perr(header_end, "vertex count overflows".into()))?;
    if payload.len() < needed {
        return Err(perr(
            bytes.len(),
            format!(
                "truncated payload: {count} vertices need {needed} bytes, found {}",
                payload.len()
            ),
        ));
    }
    if payload.len() > needed {
        return Err(perr(
            header_end + needed,
            format!("{} trailing bytes after payload", payload.len() - needed),
        ));
    }

    let mut gaussians = Vec::with_capacity(count);
    for (i, record) in payload.chunks_exact(stride).enumerate() {
        let v: Vec<f32> = record
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        let o = 9 + rest;
        let raw = RawGaussian {
            position: [v[0], v[1], v[2]],
            normal: [v[3], v[4], v[5]],
            f_dc: [v[6], v[7], v[8]],
            f_rest: v[9..o].to_vec(),
            opacity: v[o],
            scale: [v[o + 1], v[o + 2], v[o + 3]],
            rotation: [v[o + 4], v[o + 5], v[o + 6], v[o + 7]],
        };
        let g = activate(&raw)
            .map_err(|e| perr(header_end + i * stride, format!("vertex {i}: {e}")))?;
        gaussians.push(g);
    }
    Ok(Scene {
        gaussians,
        source_path: None,
        comments,
    })
}

pub fn write_ply_bytes(scene: &Scene) -> Result<Vec<u8>> {
    let rest = scene.sh_rest_len()?;
    let names = property_names(rest);
    let mut header = String::from("ply\n");
    header.push_str(FORMAT_LINE);
    header.push('\n');
    for c in &scene.comments {
        if !(c.starts_with("comment") || c.starts_with("obj_info")) || c.contains('\n') {
            return Err(Error::InvalidArgument(format!(
                "invalid PLY header comment {c:?}"
            )));
        }
        header.push_str(c);
        header.push('\n');
    }
    header.push_str(&format!("element vertex {}\n", scene.len()));
    for n in &names {
        header.push_str(&format!("property float {n}\n"));
    }
    header.push_str("end_header\n");

    let mut out = header.into_bytes();
    out.reserve(scene.len() * names.len() * 4);
    for g in &scene.gaussians {
        let r = g.raw();
        let values = r
            .position
            .iter()
            .chain(&r.normal)
            .chain(&r.f_dc)
            .chain(&r.f_rest)
            .chain(std::iter::once(&r.opacity))
            .chain(&r.scale)
            .chain(&r.rotation);
        for v in values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn write_ply(scene: &Scene, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = write_ply_bytes(scene)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
