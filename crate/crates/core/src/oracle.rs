//! Brute-force reference for core integrals: sums the core integrand over
//! every tuple of masked pixels. Exponential in the number of points, so only
//! usable on tiny images, but it never touches the symbolic expansion.

use rayon::prelude::*;

use crate::algebra::{CoreSpec, InvariantSpec};
use crate::error::{Error, Result};
use crate::image::RasterImage;
use crate::moments::{normalize, ChannelSet};
use crate::numeric::NeumaierSum;

/// Upper bound on the number of point tuples a brute-force sum may visit.
pub const MAX_TUPLES: f64 = 1e8;

#[derive(Debug, Clone, Copy)]
enum Primitive {
    Shape(usize, usize),
    Color(usize, usize, usize),
}

#[derive(Debug, Clone, Copy)]
struct Factor {
    primitive: Primitive,
    exponent: i32,
}

impl Factor {
    #[inline]
    fn eval(&self, pts: &[&[f64; 5]; 4]) -> f64 {
        let v = match self.primitive {
            Primitive::Shape(i, j) => pts[i][0] * pts[j][1] - pts[j][0] * pts[i][1],
            Primitive::Color(p, q, r) => {
                let (a, b, c) = (pts[p], pts[q], pts[r]);
                a[2] * (b[3] * c[4] - c[3] * b[4]) - b[2] * (a[3] * c[4] - c[3] * a[4])
                    + c[2] * (a[3] * b[4] - b[3] * a[4])
            }
        };
        v.powi(self.exponent)
    }
}

/// Factors grouped by the highest (0-based) point they involve, so each
/// level of the tuple loop multiplies in only what it newly determines.
fn factors_by_level(spec: &CoreSpec, levels: usize) -> Vec<Vec<Factor>> {
    let mut out = vec![Vec::new(); levels];
    for f in spec.shape_factors() {
        let (i, j) = (f.i as usize - 1, f.j as usize - 1);
        out[i.max(j)].push(Factor {
            primitive: Primitive::Shape(i, j),
            exponent: f.exponent as i32,
        });
    }
    for f in spec.color_factors() {
        let [p, q, r] = f.points.map(|p| p as usize - 1);
        out[p.max(q).max(r)].push(Factor {
            primitive: Primitive::Color(p, q, r),
            exponent: f.exponent as i32,
        });
    }
    out
}

fn sum_with_first(samples: &[[f64; 5]], levels: &[Vec<Factor>], first: usize) -> NeumaierSum {
    let zero = [0.0; 5];
    let mut pts: [&[f64; 5]; 4] = [&zero; 4];
    let mut acc = NeumaierSum::default();
    pts[0] = &samples[first];
    let p0 = levels[0].iter().fold(1.0, |a, f| a * f.eval(&pts));
    recurse(samples, levels, 1, &mut pts, p0, &mut acc);
    acc
}

fn recurse<'a>(
    samples: &'a [[f64; 5]],
    levels: &[Vec<Factor>],
    depth: usize,
    pts: &mut [&'a [f64; 5]; 4],
    partial: f64,
    acc: &mut NeumaierSum,
) {
    if depth == levels.len() {
        acc.add(partial);
        return;
    }
    for s in samples {
        pts[depth] = s;
        let value = levels[depth].iter().fold(partial, |a, f| a * f.eval(pts));
        recurse(samples, levels, depth + 1, pts, value, acc);
    }
}

fn core_integral_on(samples: &[[f64; 5]], spec: &CoreSpec) -> Result<f64> {
    let w = spec.integration_points();
    let tuples = (samples.len() as f64).powi(w as i32);
    if tuples > MAX_TUPLES {
        return Err(Error::TooLarge {
            tuples,
            limit: MAX_TUPLES,
        });
    }
    if samples.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let levels = factors_by_level(spec, w);
    let partials: Vec<NeumaierSum> = (0..samples.len())
        .into_par_iter()
        .map(|first| sum_with_first(samples, &levels, first))
        .collect();
    let mut total = NeumaierSum::default();
    for p in &partials {
        total.merge(p);
    }
    Ok(total.value())
}

/// Sum of the core integrand over all `max(n, N)`-tuples of masked pixels,
/// using the same centering and channel conventions as the moment engine.
pub fn brute_force_core_integral(img: &RasterImage, spec: &CoreSpec) -> Result<f64> {
    let channels = ChannelSet::for_order(img, spec.order())?;
    let samples = channels.centered_samples()?;
    core_integral_on(&samples, spec)
}

/// Brute-force numerator and denominator combined with the standard
/// normalization.
pub fn brute_force_invariant(img: &RasterImage, spec: &InvariantSpec) -> Result<f64> {
    let channels = ChannelSet::for_order(img, spec.order())?;
    let samples = channels.centered_samples()?;
    let numerator = core_integral_on(&samples, &spec.core)?;
    let d2 = core_integral_on(&samples, &CoreSpec::denominator(spec.order()))?;
    let m00 = samples.len() as f64;
    let second: f64 = samples
        .iter()
        .map(|s| s[2] * s[2] + s[3] * s[3] + s[4] * s[4])
        .sum();
    let scale = (second / (3.0 * m00)).sqrt();
    let v = normalize(spec, numerator, m00, d2, scale);
    if v.valid {
        Ok(v.value)
    } else {
        Err(Error::Degenerate)
    }
}
