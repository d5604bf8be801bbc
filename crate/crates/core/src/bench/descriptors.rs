//! Descriptor kinds: the SCDMI vectors and four classic baselines.

use std::fmt;
use std::str::FromStr;

use crate::algebra::INSTANCES_PER_ORDER;
use crate::error::{Error, Result};
use crate::image::RasterImage;
use crate::moments::{FeatureExtractor, FeatureVector};

/// Floor for channel standard deviations.
pub const SIGMA_FLOOR: f64 = 1e-12;

const RG_BINS: usize = 30;
const TCD_BINS: usize = 20;
const TCD_RANGE: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DescriptorKind {
    Scdmi50,
    Scdmi0_25,
    Scdmi1_25,
    Hu7,
    ColorMoments,
    RgHistogram,
    TransformedColorDist,
}

impl DescriptorKind {
    pub const ALL: [DescriptorKind; 7] = [
        DescriptorKind::Scdmi50,
        DescriptorKind::Scdmi0_25,
        DescriptorKind::Scdmi1_25,
        DescriptorKind::Hu7,
        DescriptorKind::ColorMoments,
        DescriptorKind::RgHistogram,
        DescriptorKind::TransformedColorDist,
    ];

    pub fn dim(self) -> usize {
        match self {
            DescriptorKind::Scdmi50 => 2 * INSTANCES_PER_ORDER,
            DescriptorKind::Scdmi0_25 | DescriptorKind::Scdmi1_25 => INSTANCES_PER_ORDER,
            DescriptorKind::Hu7 => 7,
            DescriptorKind::ColorMoments => 9,
            DescriptorKind::RgHistogram => 2 * RG_BINS,
            DescriptorKind::TransformedColorDist => 3 * TCD_BINS,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DescriptorKind::Scdmi50 => "SCDMI50",
            DescriptorKind::Scdmi0_25 => "SCDMI0_25",
            DescriptorKind::Scdmi1_25 => "SCDMI1_25",
            DescriptorKind::Hu7 => "HU7",
            DescriptorKind::ColorMoments => "COLOR_MOMENTS",
            DescriptorKind::RgHistogram => "RG_HISTOGRAM",
            DescriptorKind::TransformedColorDist => "TRANSFORMED_COLOR_DIST",
        }
    }

    pub fn is_scdmi(self) -> bool {
        matches!(
            self,
            DescriptorKind::Scdmi50 | DescriptorKind::Scdmi0_25 | DescriptorKind::Scdmi1_25
        )
    }

    /// Cuts this kind's entries out of a full SCDMI50 vector.
    pub fn from_scdmi50(self, full: &FeatureVector) -> Option<FeatureVector> {
        let n = INSTANCES_PER_ORDER;
        match self {
            DescriptorKind::Scdmi50 => Some(full.clone()),
            DescriptorKind::Scdmi0_25 => Some(full.slice(0..n)),
            DescriptorKind::Scdmi1_25 => Some(full.slice(n..2 * n)),
            _ => None,
        }
    }
}

impl fmt::Display for DescriptorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DescriptorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DescriptorKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidSpec(format!("unknown descriptor `{s}`")))
    }
}

/// Descriptor of one image. Baseline entries are always valid.
pub fn descriptor(img: &RasterImage, kind: DescriptorKind) -> Result<FeatureVector> {
    if kind.is_scdmi() {
        let full = FeatureExtractor::standard().extract(img)?;
        return Ok(kind.from_scdmi50(&full).expect("scdmi kind"));
    }
    let values = baseline_descriptor(img, kind)?;
    let valid = vec![true; values.len()];
    Ok(FeatureVector { values, valid })
}

/// One of the four baselines, computed over the masked pixels.
pub fn baseline_descriptor(img: &RasterImage, kind: DescriptorKind) -> Result<Vec<f64>> {
    if img.masked_count() == 0 {
        return Err(Error::EmptyDomain);
    }
    match kind {
        DescriptorKind::Hu7 => Ok(hu_moments(img).to_vec()),
        DescriptorKind::ColorMoments => Ok(color_moments(img)),
        DescriptorKind::RgHistogram => Ok(rg_histogram(img)),
        DescriptorKind::TransformedColorDist => Ok(transformed_color_distribution(img)),
        _ => Err(Error::InvalidSpec(format!(
            "{kind} is not a baseline descriptor"
        ))),
    }
}

/// The seven Hu invariants of the luminance-weighted masked region.
pub fn hu_moments(img: &RasterImage) -> [f64; 7] {
    let lum = img.luminance();
    let w = img.width();
    let weights: Vec<(f64, f64, f64)> = (0..img.len())
        .filter(|&i| img.mask()[i])
        .map(|i| ((i % w) as f64, (i / w) as f64, lum[i]))
        .collect();
    hu_from_weights(&weights)
}

/// Hu invariants of a weighted point set `(x, y, weight)`.
pub fn hu_from_weights(points: &[(f64, f64, f64)]) -> [f64; 7] {
    let m00: f64 = points.iter().map(|p| p.2).sum();
    if m00.is_nan() || m00 == 0.0 {
        return [0.0; 7];
    }
    let xc = points.iter().map(|p| p.0 * p.2).sum::<f64>() / m00;
    let yc = points.iter().map(|p| p.1 * p.2).sum::<f64>() / m00;
    let mu = |p: i32, q: i32| -> f64 {
        points
            .iter()
            .map(|&(x, y, v)| (x - xc).powi(p) * (y - yc).powi(q) * v)
            .sum()
    };
    // unclamped color maps can make the total luminance negative
    let eta =
        |p: i32, q: i32| mu(p, q) / (m00.signum() * m00.abs().powf(1.0 + (p + q) as f64 / 2.0));
    let (n20, n02, n11) = (eta(2, 0), eta(0, 2), eta(1, 1));
    let (n30, n03, n21, n12) = (eta(3, 0), eta(0, 3), eta(2, 1), eta(1, 2));
    let (a, b) = (n30 + n12, n21 + n03);
    [
        n20 + n02,
        (n20 - n02).powi(2) + 4.0 * n11 * n11,
        (n30 - 3.0 * n12).powi(2) + (3.0 * n21 - n03).powi(2),
        a * a + b * b,
        (n30 - 3.0 * n12) * a * (a * a - 3.0 * b * b)
            + (3.0 * n21 - n03) * b * (3.0 * a * a - b * b),
        (n20 - n02) * (a * a - b * b) + 4.0 * n11 * a * b,
        (3.0 * n21 - n03) * a * (a * a - 3.0 * b * b)
            - (n30 - 3.0 * n12) * b * (3.0 * a * a - b * b),
    ]
}

/// Mean, standard deviation and third central moment of each channel.
pub fn color_moments(img: &RasterImage) -> Vec<f64> {
    let n = img.masked_count() as f64;
    let mut out = Vec::with_capacity(9);
    for c in 0..3 {
        let vals = masked_channel(img, c);
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let third = vals.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
        out.extend([mean, var.sqrt(), third]);
    }
    out
}

fn masked_channel(img: &RasterImage, c: usize) -> Vec<f64> {
    img.channel(c)
        .iter()
        .zip(img.mask())
        .filter_map(|(v, m)| m.then_some(*v))
        .collect()
}

fn bin(value: f64, lo: f64, hi: f64, bins: usize) -> usize {
    let t = (value - lo) / (hi - lo) * bins as f64;
    if t.is_nan() {
        return 0;
    }
    (t.max(0.0) as usize).min(bins - 1)
}

/// 30-bin histograms of chromaticities `r = R/(R+G+B)` and `g = G/(R+G+B)`,
/// each normalized to unit mass. Black pixels count as `r = g = 1/3`.
pub fn rg_histogram(img: &RasterImage) -> Vec<f64> {
    let mut hist = vec![0.0; 2 * RG_BINS];
    let mut count = 0.0;
    for (_, _, [r, g, b]) in img.masked_pixels() {
        let sum = r + g + b;
        let (cr, cg) = if sum.abs() > 0.0 {
            (r / sum, g / sum)
        } else {
            (1.0 / 3.0, 1.0 / 3.0)
        };
        hist[bin(cr, 0.0, 1.0, RG_BINS)] += 1.0;
        hist[RG_BINS + bin(cg, 0.0, 1.0, RG_BINS)] += 1.0;
        count += 1.0;
    }
    hist.iter_mut().for_each(|h| *h /= count);
    hist
}

/// 20-bin histogram per channel of the standardized values `(C - mu) / sigma`
/// over `[-3, 3]` (out-of-range values land in the end bins), unit mass per
/// channel.
pub fn transformed_color_distribution(img: &RasterImage) -> Vec<f64> {
    let n = img.masked_count() as f64;
    let mut hist = vec![0.0; 3 * TCD_BINS];
    for c in 0..3 {
        let vals = masked_channel(img, c);
        let mean = vals.iter().sum::<f64>() / n;
        let sigma = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n)
            .sqrt()
            .max(SIGMA_FLOOR);
        for v in vals {
            hist[c * TCD_BINS + bin((v - mean) / sigma, -TCD_RANGE, TCD_RANGE, TCD_BINS)] +=
                1.0 / n;
        }
    }
    hist
}
