//! Shape-affine and color-affine image transforms, random transform
//! samplers and invariance reports over the SCDMI50 vector.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::RasterImage;
use crate::moments::{FeatureExtractor, FeatureVector};
use crate::numeric::{format_float, median};

/// Smallest |det| accepted for either transform.
pub const MIN_ABS_DET: f64 = 1e-6;

/// Denominator floor for relative deviations.
pub const DEVIATION_FLOOR: f64 = 1e-12;

/// `p' = matrix * p + offset` on pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeAffine {
    matrix: [[f64; 2]; 2],
    offset: [f64; 2],
}

impl ShapeAffine {
    pub fn new(matrix: [[f64; 2]; 2], offset: [f64; 2]) -> Result<Self> {
        let det = det2(&matrix);
        if det.is_nan() || det.abs() < MIN_ABS_DET {
            return Err(Error::Singular(det.abs()));
        }
        Ok(ShapeAffine { matrix, offset })
    }

    pub fn identity() -> Self {
        ShapeAffine {
            matrix: [[1.0, 0.0], [0.0, 1.0]],
            offset: [0.0, 0.0],
        }
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        ShapeAffine {
            matrix: [[1.0, 0.0], [0.0, 1.0]],
            offset: [tx, ty],
        }
    }

    /// Linear map that sends `src_center` to `dst_center`.
    pub fn about(
        matrix: [[f64; 2]; 2],
        src_center: [f64; 2],
        dst_center: [f64; 2],
    ) -> Result<Self> {
        let offset = [
            dst_center[0] - (matrix[0][0] * src_center[0] + matrix[0][1] * src_center[1]),
            dst_center[1] - (matrix[1][0] * src_center[0] + matrix[1][1] * src_center[1]),
        ];
        Self::new(matrix, offset)
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        self.matrix
    }

    pub fn offset(&self) -> [f64; 2] {
        self.offset
    }

    pub fn det(&self) -> f64 {
        det2(&self.matrix)
    }

    /// Ratio of the singular values.
    pub fn condition(&self) -> f64 {
        let [[a, b], [c, d]] = self.matrix;
        let frob2 = a * a + b * b + c * c + d * d;
        let det = self.det().abs();
        let disc = (frob2 * frob2 - 4.0 * det * det).max(0.0).sqrt();
        let s1 = ((frob2 + disc) / 2.0).sqrt();
        let s2 = det / s1;
        s1 / s2
    }

    /// `self` applied after `first`.
    pub fn compose(&self, first: &ShapeAffine) -> ShapeAffine {
        let a = self.matrix;
        let b = first.matrix;
        let matrix = [
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ];
        let t = first.offset;
        let offset = [
            a[0][0] * t[0] + a[0][1] * t[1] + self.offset[0],
            a[1][0] * t[0] + a[1][1] * t[1] + self.offset[1],
        ];
        ShapeAffine { matrix, offset }
    }

    /// Source position of output pixel `(u, v)`.
    fn inverse_map(&self, inv: &[[f64; 2]; 2], u: f64, v: f64) -> (f64, f64) {
        let (du, dv) = (u - self.offset[0], v - self.offset[1]);
        (
            inv[0][0] * du + inv[0][1] * dv,
            inv[1][0] * du + inv[1][1] * dv,
        )
    }
}

fn det2(m: &[[f64; 2]; 2]) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// `c' = matrix * c + offset` on RGB values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorAffine {
    matrix: [[f64; 3]; 3],
    offset: [f64; 3],
}

impl ColorAffine {
    pub fn new(matrix: [[f64; 3]; 3], offset: [f64; 3]) -> Result<Self> {
        let det = det3(&matrix);
        if det.is_nan() || det.abs() < MIN_ABS_DET {
            return Err(Error::Singular(det.abs()));
        }
        Ok(ColorAffine { matrix, offset })
    }

    pub fn identity() -> Self {
        ColorAffine {
            matrix: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            offset: [0.0; 3],
        }
    }

    pub fn matrix(&self) -> [[f64; 3]; 3] {
        self.matrix
    }

    pub fn offset(&self) -> [f64; 3] {
        self.offset
    }

    pub fn det(&self) -> f64 {
        det3(&self.matrix)
    }

    #[inline]
    pub fn apply(&self, c: [f64; 3]) -> [f64; 3] {
        let m = &self.matrix;
        std::array::from_fn(|r| m[r][0] * c[0] + m[r][1] * c[1] + m[r][2] * c[2] + self.offset[r])
    }
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn mat3_mul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..3).map(|k| a[i][k] * b[k][j]).sum()))
}

fn transpose3(a: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|j| a[j][i]))
}

/// Inverse-mapping warp with bilinear interpolation into an
/// `out_width x out_height` frame. An output pixel is masked only if every
/// source tap with nonzero weight lies inside the source mask; other output
/// pixels are zero and masked out.
pub fn apply_shape_affine(
    img: &RasterImage,
    t: &ShapeAffine,
    out_width: usize,
    out_height: usize,
) -> Result<RasterImage> {
    let det = t.det();
    if det.is_nan() || det.abs() < MIN_ABS_DET {
        return Err(Error::Singular(det.abs()));
    }
    let m = t.matrix;
    let inv = [
        [m[1][1] / det, -m[0][1] / det],
        [-m[1][0] / det, m[0][0] / det],
    ];
    let (w, h) = (img.width() as isize, img.height() as isize);

    let rows: Vec<Vec<Option<[f64; 3]>>> = (0..out_height)
        .into_par_iter()
        .map(|v| {
            (0..out_width)
                .map(|u| {
                    let (sx, sy) = t.inverse_map(&inv, u as f64, v as f64);
                    let (x0, y0) = (sx.floor(), sy.floor());
                    let (fx, fy) = (sx - x0, sy - y0);
                    let (x0, y0) = (x0 as isize, y0 as isize);
                    let taps = [
                        (x0, y0, (1.0 - fx) * (1.0 - fy)),
                        (x0 + 1, y0, fx * (1.0 - fy)),
                        (x0, y0 + 1, (1.0 - fx) * fy),
                        (x0 + 1, y0 + 1, fx * fy),
                    ];
                    let mut acc = [0.0; 3];
                    for (x, y, weight) in taps {
                        if weight == 0.0 {
                            continue;
                        }
                        if x < 0 || y < 0 || x >= w || y >= h {
                            return None;
                        }
                        let (x, y) = (x as usize, y as usize);
                        if !img.is_masked(x, y) {
                            return None;
                        }
                        let c = img.get(x, y);
                        for k in 0..3 {
                            acc[k] += weight * c[k];
                        }
                    }
                    Some(acc)
                })
                .collect()
        })
        .collect();

    let mut out = RasterImage::new(out_width, out_height);
    for (v, row) in rows.into_iter().enumerate() {
        for (u, px) in row.into_iter().enumerate() {
            match px {
                Some(c) => out.set(u, v, c),
                None => out.set_masked(u, v, false),
            }
        }
    }
    Ok(out)
}

/// Per-pixel color map in unclamped real space, or clamped to `[0, 1]` when
/// `clamp` is set. The mask is unchanged.
pub fn apply_color_affine(img: &RasterImage, t: &ColorAffine, clamp: bool) -> Result<RasterImage> {
    let det = t.det();
    if det.is_nan() || det.abs() < MIN_ABS_DET {
        return Err(Error::Singular(det.abs()));
    }
    let mut out = img.clone();
    for y in 0..img.height() {
        for x in 0..img.width() {
            let mut c = t.apply(img.get(x, y));
            if clamp {
                c = c.map(|v| v.clamp(0.0, 1.0));
            }
            out.set(x, y, c);
        }
    }
    Ok(out)
}

fn rotation2(theta: f64) -> [[f64; 2]; 2] {
    let (s, c) = theta.sin_cos();
    [[c, -s], [s, c]]
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return lo;
    }
    (lo.ln() + rng.gen::<f64>() * (hi.ln() - lo.ln())).exp()
}

/// Random shape transform `R(theta) diag(s1, s2) R(phi)` with determinant
/// log-uniform in `det_range`, condition number log-uniform in
/// `[1, max_condition]`, and offset chosen so `center` maps to itself.
pub fn sample_shape_affine(
    seed: u64,
    det_range: (f64, f64),
    max_condition: f64,
    center: [f64; 2],
) -> ShapeAffine {
    assert!(
        det_range.0 > 0.0 && det_range.0 <= det_range.1,
        "bad det range"
    );
    assert!(max_condition >= 1.0, "condition bound below 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let det = log_uniform(&mut rng, det_range.0, det_range.1);
    let cond = log_uniform(&mut rng, 1.0, max_condition);
    let theta = rng.gen::<f64>() * 2.0 * PI;
    let phi = rng.gen::<f64>() * 2.0 * PI;
    let (s1, s2) = ((det * cond).sqrt(), (det / cond).sqrt());
    let (u, v) = (rotation2(theta), rotation2(phi));
    let us = [[u[0][0] * s1, u[0][1] * s2], [u[1][0] * s1, u[1][1] * s2]];
    let matrix = [
        [
            us[0][0] * v[0][0] + us[0][1] * v[1][0],
            us[0][0] * v[0][1] + us[0][1] * v[1][1],
        ],
        [
            us[1][0] * v[0][0] + us[1][1] * v[1][0],
            us[1][0] * v[0][1] + us[1][1] * v[1][1],
        ],
    ];
    ShapeAffine::about(matrix, center, center).expect("sampled determinant is positive")
}

/// Uniform rotation in SO(3) from a random unit quaternion.
fn random_rotation3(rng: &mut ChaCha8Rng) -> [[f64; 3]; 3] {
    let (u1, u2, u3): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let q = [
        a * (2.0 * PI * u2).sin(),
        a * (2.0 * PI * u2).cos(),
        b * (2.0 * PI * u3).sin(),
        b * (2.0 * PI * u3).cos(),
    ];
    quaternion_matrix(q)
}

fn quaternion_matrix([w, x, y, z]: [f64; 4]) -> [[f64; 3]; 3] {
    [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        [
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
        ],
        [
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ]
}

/// Random color transform `s * Rot * Q diag(sigma) Q^T` with overall gain
/// `s` log-uniform in `[0.5, 2]`, singular values `sigma` in
/// `[1, max_condition]`, and a rotation about a random axis by at most
/// `pi (1 - 1/max_condition)`. The determinant is positive and the condition
/// number is bounded by `max_condition`; with `max_condition = 1` the
/// matrix is a positive multiple of the identity. Offsets are uniform in
/// `[-offset_range, offset_range]`.
pub fn sample_color_affine(seed: u64, max_condition: f64, offset_range: f64) -> ColorAffine {
    assert!(max_condition >= 1.0, "condition bound below 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gain = log_uniform(&mut rng, 0.5, 2.0);
    let q = random_rotation3(&mut rng);
    let mut sigma = [1.0; 3];
    if max_condition > 1.0 {
        // pin the extremes so the full condition range is exercised
        sigma[0] = 1.0;
        sigma[1] = log_uniform(&mut rng, 1.0, max_condition);
        sigma[2] = log_uniform(&mut rng, 1.0, max_condition);
    }
    let diag: [[f64; 3]; 3] =
        std::array::from_fn(|i| std::array::from_fn(|j| if i == j { sigma[i] } else { 0.0 }));
    let spd = mat3_mul(&mat3_mul(&q, &diag), &transpose3(&q));

    let axis = {
        let r = random_rotation3(&mut rng);
        [r[0][2], r[1][2], r[2][2]]
    };
    let max_angle = PI * (1.0 - 1.0 / max_condition);
    let angle = rng.gen::<f64>() * max_angle;
    let (s, c) = (angle / 2.0).sin_cos();
    let rot = quaternion_matrix([c, axis[0] * s, axis[1] * s, axis[2] * s]);

    let m = mat3_mul(&rot, &spd);
    let matrix = m.map(|row| row.map(|v| gain * v));
    let offset = std::array::from_fn(|_| (rng.gen::<f64>() * 2.0 - 1.0) * offset_range);
    ColorAffine::new(matrix, offset).expect("sampled determinant is positive")
}

/// `|after - before| / max(|before|, floor)`.
pub fn relative_deviation(before: f64, after: f64) -> f64 {
    (after - before).abs() / before.abs().max(DEVIATION_FLOOR)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceRow {
    pub id: u8,
    pub k: u8,
    /// `None` when no transformed version had the entry valid on both sides.
    pub median_rel_dev: Option<f64>,
    pub max_rel_dev: Option<f64>,
    pub n_valid: usize,
}

/// Per-invariant deviation statistics over a set of transformed images.
#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceReport {
    pub rows: Vec<InvarianceRow>,
}

impl InvarianceReport {
    /// Compares each transformed vector against `original`, entry by entry,
    /// over pairs where both sides are valid.
    pub fn from_vectors(original: &FeatureVector, transformed: &[FeatureVector]) -> Self {
        let half = original.len() / 2;
        let rows = (0..original.len())
            .map(|slot| {
                let mut devs: Vec<f64> = transformed
                    .iter()
                    .filter(|t| original.valid[slot] && t.valid[slot])
                    .map(|t| relative_deviation(original.values[slot], t.values[slot]))
                    .collect();
                let n_valid = devs.len();
                let max = devs.iter().copied().reduce(f64::max);
                InvarianceRow {
                    id: (slot % half.max(1) + 1) as u8,
                    k: (slot / half.max(1)) as u8,
                    median_rel_dev: median(&mut devs),
                    max_rel_dev: max,
                    n_valid,
                }
            })
            .collect();
        InvarianceReport { rows }
    }

    pub fn max_deviation(&self) -> f64 {
        self.rows
            .iter()
            .filter_map(|r| r.max_rel_dev)
            .fold(0.0, f64::max)
    }

    /// Median over rows of order `k` of the per-row median deviation.
    pub fn median_of_medians(&self, k: u8) -> Option<f64> {
        let mut meds: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.k == k)
            .filter_map(|r| r.median_rel_dev)
            .collect();
        median(&mut meds)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,k,median_rel_dev,max_rel_dev,n_valid\n");
        let fmt = |v: Option<f64>| v.map(format_float).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.id,
                r.k,
                fmt(r.median_rel_dev),
                fmt(r.max_rel_dev),
                r.n_valid
            );
        }
        out
    }
}

/// SCDMI50 of `img` versus every shape-only, color-only and composed
/// (shape then color) transformed version. Shape warps keep the frame size.
pub fn invariance_report(
    img: &RasterImage,
    shape_transforms: &[ShapeAffine],
    color_transforms: &[ColorAffine],
    clamp: bool,
) -> Result<InvarianceReport> {
    let ex = FeatureExtractor::standard();
    let original = ex.extract(img)?;
    let mut jobs: Vec<(Option<&ShapeAffine>, Option<&ColorAffine>)> = Vec::new();
    jobs.extend(shape_transforms.iter().map(|s| (Some(s), None)));
    jobs.extend(color_transforms.iter().map(|c| (None, Some(c))));
    for s in shape_transforms {
        jobs.extend(color_transforms.iter().map(|c| (Some(s), Some(c))));
    }
    let transformed = jobs
        .par_iter()
        .map(|(s, c)| {
            let mut out = match s {
                Some(s) => apply_shape_affine(img, s, img.width(), img.height())?,
                None => img.clone(),
            };
            if let Some(c) = c {
                out = apply_color_affine(&out, c, clamp)?;
            }
            ex.extract(&out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(InvarianceReport::from_vectors(&original, &transformed))
}
