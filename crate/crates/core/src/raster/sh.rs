//! Real spherical harmonics up to degree 3, in the ordering used by 3DGS exports.

pub const SH_C0: f64 = 0.282_094_791_773_878_14;
const SH_C1: f64 = 0.488_602_511_902_919_9;
const SH_C2: [f64; 5] = [
    1.092_548_430_592_079_2,
    -1.092_548_430_592_079_2,
    0.315_391_565_252_520_05,
    -1.092_548_430_592_079_2,
    0.546_274_215_296_039_6,
];
const SH_C3: [f64; 7] = [
    -0.590_043_589_926_643_5,
    2.890_611_442_640_554,
    -0.457_045_799_464_465_8,
    0.373_176_332_590_115_4,
    -0.457_045_799_464_465_8,
    1.445_305_721_320_277,
    -0.590_043_589_926_643_5,
];

/// Basis values for a unit direction; coefficients beyond those stored are
/// simply not read, which is the same as treating them as zero.
fn basis(dir: [f64; 3]) -> [f64; 16] {
    let [x, y, z] = dir;
    let (xx, yy, zz) = (x * x, y * y, z * z);
    [
        SH_C0,
        -SH_C1 * y,
        SH_C1 * z,
        -SH_C1 * x,
        SH_C2[0] * x * y,
        SH_C2[1] * y * z,
        SH_C2[2] * (2.0 * zz - xx - yy),
        SH_C2[3] * x * z,
        SH_C2[4] * (xx - yy),
        SH_C3[0] * y * (3.0 * xx - yy),
        SH_C3[1] * x * y * z,
        SH_C3[2] * y * (4.0 * zz - xx - yy),
        SH_C3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy),
        SH_C3[4] * x * (4.0 * zz - xx - yy),
        SH_C3[5] * z * (xx - yy),
        SH_C3[6] * x * (xx - 3.0 * yy),
    ]
}

/// RGB for viewing direction `dir` (unit, from camera towards the gaussian),
/// offset by 0.5 and clamped to `[0, 1]`.
pub fn eval_color(sh: &[[f64; 3]], dir: [f64; 3]) -> [f64; 3] {
    let b = basis(dir);
    let mut rgb = [0.5; 3];
    for (k, coeffs) in sh.iter().enumerate().take(16) {
        for c in 0..3 {
            rgb[c] += b[k] * coeffs[c];
        }
    }
    rgb.map(|v| v.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dc_only_is_view_independent() {
        let sh = [[0.3 / SH_C0, -0.2 / SH_C0, 0.0]];
        for dir in [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.6, 0.0, 0.8]] {
            let c = eval_color(&sh, dir);
            assert!((c[0] - 0.8).abs() < 1e-12);
            assert!((c[1] - 0.3).abs() < 1e-12);
            assert!((c[2] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn degree_one_responds_to_direction() {
        let mut sh = vec![[0.0; 3]; 4];
        sh[2] = [0.4; 3]; // z-aligned term
        let front = eval_color(&sh, [0.0, 0.0, 1.0]);
        let back = eval_color(&sh, [0.0, 0.0, -1.0]);
        assert!((front[0] - (0.5 + SH_C1 * 0.4)).abs() < 1e-12);
        assert!((back[0] - (0.5 - SH_C1 * 0.4)).abs() < 1e-12);
    }
}
