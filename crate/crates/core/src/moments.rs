//! Generalized shape-color moments on raster images and evaluation of the
//! SCDMI50 feature vector.
//!
//! Moments are discrete sums over masked pixels with unit pixel area; pixel
//! `(x, y)` sits at integer coordinates. Order-0 channels are mean-subtracted
//! raw channels. Order-1 channels are `F1_C = (x - xc) dC/dx + (y - yc) dC/dy`
//! with derivatives from the unnormalized five-point stencil, evaluated on the
//! eroded mask and never mean-subtracted.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::algebra::{
    denominator_polynomial, standard_specs, InvariantSpec, MomentIndex, MomentPolynomial, Order,
};
use crate::error::{Error, Result};
use crate::image::RasterImage;
use crate::numeric::NeumaierSum;

/// Relative threshold on the quadratic color core below which an invariant
/// is reported as degenerate.
pub const DEGENERACY_EPS: f64 = 1e-12;

/// Minimum image side for the five-point stencil.
pub const MIN_STENCIL_SIDE: usize = 5;

const FEATURE_LEN: usize = 50;

/// Coordinate centroid and channel means over the masked pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Centroid {
    pub x: f64,
    pub y: f64,
    pub means: [f64; 3],
}

pub fn centroid_and_means(img: &RasterImage) -> Result<Centroid> {
    masked_centroid(img.width(), img.mask(), img.channels())
}

fn masked_centroid(width: usize, mask: &[bool], planes: &[Vec<f64>; 3]) -> Result<Centroid> {
    let mut sx = NeumaierSum::default();
    let mut sy = NeumaierSum::default();
    let mut sc = [NeumaierSum::default(); 3];
    let mut count = 0usize;
    for (i, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
        sx.add((i % width) as f64);
        sy.add((i / width) as f64);
        for (acc, plane) in sc.iter_mut().zip(planes) {
            acc.add(plane[i]);
        }
        count += 1;
    }
    if count == 0 {
        return Err(Error::EmptyDomain);
    }
    let n = count as f64;
    Ok(Centroid {
        x: sx.value() / n,
        y: sy.value() / n,
        means: sc.map(|s| s.value() / n),
    })
}

/// Per-channel stencil derivatives and the mask on which they are defined.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativePlanes {
    pub width: usize,
    pub height: usize,
    pub dx: [Vec<f64>; 3],
    pub dy: [Vec<f64>; 3],
    pub mask: Vec<bool>,
}

/// Applies `C(x-2) - 8C(x-1) + 8C(x+1) - C(x+2)` along each axis, without
/// the conventional 1/12 factor. The output mask keeps a pixel only if it and
/// all eight stencil taps are masked.
pub fn derivative_channels(img: &RasterImage) -> Result<DerivativePlanes> {
    let (w, h) = (img.width(), img.height());
    if w < MIN_STENCIL_SIDE || h < MIN_STENCIL_SIDE {
        return Err(Error::TooSmall {
            width: w,
            height: h,
            min: MIN_STENCIL_SIDE,
        });
    }
    let n = w * h;
    let mut dx = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut dy = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut mask = vec![false; n];
    let m = img.mask();
    for y in 2..h - 2 {
        for x in 2..w - 2 {
            let i = y * w + x;
            let taps = [
                i - 2,
                i - 1,
                i,
                i + 1,
                i + 2,
                i - 2 * w,
                i - w,
                i + w,
                i + 2 * w,
            ];
            if !taps.iter().all(|&t| m[t]) {
                continue;
            }
            mask[i] = true;
            for c in 0..3 {
                let p = img.channel(c);
                // grouped as differences so constants give exactly 0 and
                // mirrored data gives exactly negated values
                dx[c][i] = 8.0 * (p[i + 1] - p[i - 1]) - (p[i + 2] - p[i - 2]);
                dy[c][i] = 8.0 * (p[i + w] - p[i - w]) - (p[i + 2 * w] - p[i - 2 * w]);
            }
        }
    }
    Ok(DerivativePlanes {
        width: w,
        height: h,
        dx,
        dy,
        mask,
    })
}

/// Channel values entering the moment integrand for one derivative order.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    order: Order,
    width: usize,
    height: usize,
    planes: [Vec<f64>; 3],
    mask: Vec<bool>,
    centroid: Option<(f64, f64)>,
    means: [f64; 3],
}

impl ChannelSet {
    /// Raw channels with their masked means.
    pub fn order_zero(img: &RasterImage) -> Result<Self> {
        let c = centroid_and_means(img)?;
        Ok(ChannelSet {
            order: Order::Zero,
            width: img.width(),
            height: img.height(),
            planes: img.channels().clone(),
            mask: img.mask().to_vec(),
            centroid: Some((c.x, c.y)),
            means: c.means,
        })
    }

    /// `F1` channels on the eroded mask, centered on the eroded mask's own
    /// centroid. The centroid is `None` when erosion leaves no pixels.
    pub fn order_one(img: &RasterImage) -> Result<Self> {
        let d = derivative_channels(img)?;
        let centroid = masked_centroid(d.width, &d.mask, &d.dx)
            .ok()
            .map(|c| (c.x, c.y));
        let (xc, yc) = centroid.unwrap_or((0.0, 0.0));
        let mut set = f1_from_derivatives(&d, xc, yc);
        set.centroid = centroid;
        Ok(set)
    }

    pub fn for_order(img: &RasterImage, order: Order) -> Result<Self> {
        match order {
            Order::Zero => Self::order_zero(img),
            Order::One => Self::order_one(img),
        }
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn planes(&self) -> &[Vec<f64>; 3] {
        &self.planes
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Values subtracted from each plane before taking powers (zero for order 1).
    pub fn means(&self) -> [f64; 3] {
        self.means
    }

    pub fn centroid(&self) -> Option<(f64, f64)> {
        self.centroid
    }

    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Centered `(x, y, r, g, b)` for every masked pixel in row-major order.
    pub fn centered_samples(&self) -> Result<Vec<[f64; 5]>> {
        let (xc, yc) = self.centroid.ok_or(Error::EmptyDomain)?;
        Ok(self
            .mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| {
                [
                    (i % self.width) as f64 - xc,
                    (i / self.width) as f64 - yc,
                    self.planes[0][i] - self.means[0],
                    self.planes[1][i] - self.means[1],
                    self.planes[2][i] - self.means[2],
                ]
            })
            .collect())
    }
}

/// `F1_C = (x - xc) dC/dx + (y - yc) dC/dy` on the derivative mask.
pub fn f1_channels(img: &RasterImage, xc: f64, yc: f64) -> Result<ChannelSet> {
    let d = derivative_channels(img)?;
    Ok(f1_from_derivatives(&d, xc, yc))
}

/// Builds order-1 channels from precomputed (possibly analytic) derivatives.
pub fn f1_from_derivatives(d: &DerivativePlanes, xc: f64, yc: f64) -> ChannelSet {
    let n = d.width * d.height;
    let mut planes = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for i in (0..n).filter(|&i| d.mask[i]) {
        let rx = (i % d.width) as f64 - xc;
        let ry = (i / d.width) as f64 - yc;
        for c in 0..3 {
            planes[c][i] = rx * d.dx[c][i] + ry * d.dy[c][i];
        }
    }
    ChannelSet {
        order: Order::One,
        width: d.width,
        height: d.height,
        planes,
        mask: d.mask.clone(),
        centroid: Some((xc, yc)),
        means: [0.0; 3],
    }
}

/// Values of a set of generalized moments for one image and one order.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    order: Order,
    indices: Vec<MomentIndex>,
    values: Vec<f64>,
    m00: f64,
    centroid: (f64, f64),
}

impl MomentTable {
    pub fn order(&self) -> Order {
        self.order
    }

    /// Area: number of masked pixels.
    pub fn m00(&self) -> f64 {
        self.m00
    }

    pub fn centroid(&self) -> (f64, f64) {
        self.centroid
    }

    pub fn get(&self, idx: &MomentIndex) -> Option<f64> {
        self.indices
            .binary_search(idx)
            .ok()
            .map(|pos| self.values[pos])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MomentIndex, f64)> {
        self.indices.iter().zip(self.values.iter().copied())
    }

    pub fn evaluate(&self, poly: &MomentPolynomial) -> Result<f64> {
        poly.evaluate(|idx| self.get(idx))
    }

    /// `sqrt(mean of the three second channel moments / m00)`, the channel
    /// amplitude used to scale the degeneracy threshold.
    pub fn channel_scale(&self) -> Option<f64> {
        let second = [
            MomentIndex::new(0, 0, 2, 0, 0),
            MomentIndex::new(0, 0, 0, 2, 0),
            MomentIndex::new(0, 0, 0, 0, 2),
        ];
        let mut sum = 0.0;
        for idx in &second {
            sum += self.get(idx)?;
        }
        Some((sum / (3.0 * self.m00)).sqrt())
    }
}

const ROW_CHUNK: usize = 32;

/// Accumulates every requested moment in a single pass over the masked
/// pixels. Rows are processed in fixed chunks whose partial sums are merged
/// in chunk order, so results do not depend on thread scheduling.
///
/// When `(xc, yc)` is the channel set's own centroid, the first-order
/// coordinate moments are stored as exact zeros instead of their rounding
/// residue.
pub fn compute_moment_table(
    channels: &ChannelSet,
    xc: f64,
    yc: f64,
    required: &BTreeSet<MomentIndex>,
) -> Result<MomentTable> {
    let m00 = channels.masked_count();
    if m00 == 0 {
        return Err(Error::EmptyDomain);
    }
    let mut indices: Vec<MomentIndex> = required.iter().copied().collect();
    if indices.binary_search(&MomentIndex::AREA).is_err() {
        indices.push(MomentIndex::AREA);
        indices.sort_unstable();
    }
    let mut max_exp = [0usize; 5];
    for idx in &indices {
        for (m, e) in max_exp.iter_mut().zip(idx.as_array()) {
            *m = (*m).max(e as usize);
        }
    }
    let exps: Vec<[usize; 5]> = indices
        .iter()
        .map(|i| i.as_array().map(|e| e as usize))
        .collect();

    let w = channels.width;
    let means = channels.means;
    let rows: Vec<usize> = (0..channels.height).step_by(ROW_CHUNK).collect();
    let partials: Vec<Vec<NeumaierSum>> = rows
        .par_iter()
        .map(|&row0| {
            let mut acc = vec![NeumaierSum::default(); exps.len()];
            let mut powers: [Vec<f64>; 5] = std::array::from_fn(|v| vec![1.0; max_exp[v] + 1]);
            for y in row0..(row0 + ROW_CHUNK).min(channels.height) {
                for x in 0..w {
                    let i = y * w + x;
                    if !channels.mask[i] {
                        continue;
                    }
                    let base = [
                        x as f64 - xc,
                        y as f64 - yc,
                        channels.planes[0][i] - means[0],
                        channels.planes[1][i] - means[1],
                        channels.planes[2][i] - means[2],
                    ];
                    for (v, table) in powers.iter_mut().enumerate() {
                        for e in 1..table.len() {
                            table[e] = table[e - 1] * base[v];
                        }
                    }
                    for (a, e) in acc.iter_mut().zip(&exps) {
                        a.add(
                            powers[0][e[0]]
                                * powers[1][e[1]]
                                * powers[2][e[2]]
                                * powers[3][e[3]]
                                * powers[4][e[4]],
                        );
                    }
                }
            }
            acc
        })
        .collect();

    let mut totals = vec![NeumaierSum::default(); exps.len()];
    for part in &partials {
        for (t, p) in totals.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    let mut values: Vec<f64> = totals.iter().map(|s| s.value()).collect();
    let area_pos = indices
        .binary_search(&MomentIndex::AREA)
        .expect("area present");
    values[area_pos] = m00 as f64;
    if channels.centroid == Some((xc, yc)) {
        for first in [
            MomentIndex::new(1, 0, 0, 0, 0),
            MomentIndex::new(0, 1, 0, 0, 0),
        ] {
            if let Ok(pos) = indices.binary_search(&first) {
                values[pos] = 0.0;
            }
        }
    }
    Ok(MomentTable {
        order: channels.order,
        indices,
        values,
        m00: m00 as f64,
        centroid: (xc, yc),
    })
}

/// One evaluated invariant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantValue {
    pub value: f64,
    pub valid: bool,
}

impl InvariantValue {
    pub const INVALID: InvariantValue = InvariantValue {
        value: 0.0,
        valid: false,
    };
}

fn denominator() -> &'static MomentPolynomial {
    static DENOM: OnceLock<MomentPolynomial> = OnceLock::new();
    DENOM.get_or_init(denominator_polynomial)
}

/// Whether `d2` is large enough relative to the table's area and channel
/// amplitude for the `M/2` root to be meaningful.
pub fn is_nondegenerate(d2: f64, m00: f64, channel_scale: f64) -> bool {
    let threshold = DEGENERACY_EPS * m00.powi(3) * channel_scale.powi(6);
    m00 > 0.0 && d2.is_finite() && d2 > threshold
}

/// `P_num / (m00^e * D2^(M/2))`, or invalid when the denominator core is
/// degenerate.
pub fn evaluate_invariant(spec: &InvariantSpec, table: &MomentTable) -> Result<InvariantValue> {
    let d2 = table.evaluate(denominator())?;
    let numerator = table.evaluate(&spec.numerator)?;
    let scale = table
        .channel_scale()
        .ok_or(Error::MissingIndex(MomentIndex::new(0, 0, 2, 0, 0)))?;
    Ok(normalize(spec, numerator, table.m00(), d2, scale))
}

/// Shared normalization used by both the polynomial path and the oracle.
pub fn normalize(
    spec: &InvariantSpec,
    numerator: f64,
    m00: f64,
    d2: f64,
    channel_scale: f64,
) -> InvariantValue {
    if !is_nondegenerate(d2, m00, channel_scale) {
        return InvariantValue::INVALID;
    }
    let e = rational_to_f64(spec.area_exponent);
    let d = rational_to_f64(spec.denom_exponent);
    let value = numerator / (m00.powf(e) * d2.powf(d));
    if value.is_finite() {
        InvariantValue { value, valid: true }
    } else {
        InvariantValue::INVALID
    }
}

pub fn rational_to_f64(r: num_rational::Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// The 50 SCDMI values in feature order: 25 order-0 entries, then 25
/// order-1 entries.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// Entries `range` as a sub-vector (e.g. `0..25` for the order-0 half).
    pub fn slice(&self, range: std::ops::Range<usize>) -> FeatureVector {
        FeatureVector {
            values: self.values[range.clone()].to_vec(),
            valid: self.valid[range].to_vec(),
        }
    }
}

/// Evaluates a fixed list of invariant specs on images. The standard
/// extractor holds the 50 standard specs; custom lists are used for fault
/// injection.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    specs: Vec<InvariantSpec>,
    required: [BTreeSet<MomentIndex>; 2],
}

impl FeatureExtractor {
    pub fn new(specs: Vec<InvariantSpec>) -> Self {
        let mut required = [BTreeSet::new(), BTreeSet::new()];
        for set in required.iter_mut() {
            set.extend(denominator().indices());
        }
        for s in &specs {
            required[s.order().as_u8() as usize].extend(s.numerator.indices());
        }
        FeatureExtractor { specs, required }
    }

    pub fn standard() -> &'static FeatureExtractor {
        static STANDARD: OnceLock<FeatureExtractor> = OnceLock::new();
        STANDARD.get_or_init(|| FeatureExtractor::new(standard_specs()))
    }

    pub fn specs(&self) -> &[InvariantSpec] {
        &self.specs
    }

    pub fn required(&self, order: Order) -> &BTreeSet<MomentIndex> {
        &self.required[order.as_u8() as usize]
    }

    /// Moment table for one order, or `None` if the order's domain is empty
    /// (order 1 after erosion).
    pub fn table(&self, img: &RasterImage, order: Order) -> Result<Option<MomentTable>> {
        let channels = ChannelSet::for_order(img, order)?;
        let Some((xc, yc)) = channels.centroid() else {
            return Ok(None);
        };
        if channels.masked_count() == 0 {
            return Ok(None);
        }
        compute_moment_table(&channels, xc, yc, self.required(order)).map(Some)
    }

    pub fn extract(&self, img: &RasterImage) -> Result<FeatureVector> {
        if img.width() < MIN_STENCIL_SIDE || img.height() < MIN_STENCIL_SIDE {
            return Err(Error::TooSmall {
                width: img.width(),
                height: img.height(),
                min: MIN_STENCIL_SIDE,
            });
        }
        let tables = [self.table(img, Order::Zero)?, self.table(img, Order::One)?];
        let mut values = Vec::with_capacity(self.specs.len());
        let mut valid = Vec::with_capacity(self.specs.len());
        for spec in &self.specs {
            let v = match &tables[spec.order().as_u8() as usize] {
                Some(t) => evaluate_invariant(spec, t)?,
                None => InvariantValue::INVALID,
            };
            values.push(v.value);
            valid.push(v.valid);
        }
        Ok(FeatureVector { values, valid })
    }
}

/// SCDMI50 feature vector of an image.
pub fn scdmi50(img: &RasterImage) -> Result<FeatureVector> {
    let fv = FeatureExtractor::standard().extract(img)?;
    debug_assert_eq!(fv.len(), FEATURE_LEN);
    Ok(fv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(w: usize, h: usize, seed: u64) -> RasterImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut img = RasterImage::new(w, h);
        for y in 0..h {
            for x in 0..w {
                img.set(x, y, [rng.gen(), rng.gen(), rng.gen()]);
            }
        }
        img
    }

    #[test]
    fn centroid_of_full_mask() {
        let img = RasterImage::from_fn(5, 3, |_, _| [0.25, 0.25, 0.25]);
        let c = centroid_and_means(&img).unwrap();
        assert_eq!((c.x, c.y), (2.0, 1.0));
        assert_eq!(c.means, [0.25; 3]);
    }

    #[test]
    fn empty_mask_is_an_error() {
        let img = RasterImage::new(6, 6).with_mask(|_, _| false);
        assert!(matches!(centroid_and_means(&img), Err(Error::EmptyDomain)));
        assert!(matches!(
            ChannelSet::order_zero(&img),
            Err(Error::EmptyDomain)
        ));
        assert!(matches!(scdmi50(&img), Err(Error::EmptyDomain)));
    }

    #[test]
    fn stencil_on_linear_ramp() {
        let img = RasterImage::from_fn(9, 7, |x, y| [x as f64, 0.5, y as f64 * 3.0]);
        let d = derivative_channels(&img).unwrap();
        for y in 0..7 {
            for x in 0..9 {
                let i = y * 9 + x;
                let inside = (2..7).contains(&x) && (2..5).contains(&y);
                assert_eq!(d.mask[i], inside);
                if inside {
                    assert_eq!(d.dx[0][i], 12.0);
                    assert_eq!(d.dy[0][i], 0.0);
                    assert_eq!(d.dx[1][i], 0.0);
                    assert_eq!(d.dy[2][i], 36.0);
                }
            }
        }
    }

    #[test]
    fn stencil_rejects_small_images() {
        let img = RasterImage::new(4, 4);
        assert!(matches!(
            derivative_channels(&img),
            Err(Error::TooSmall {
                width: 4,
                height: 4,
                ..
            })
        ));
        assert!(matches!(
            scdmi50(&RasterImage::new(4, 9)),
            Err(Error::TooSmall { .. })
        ));
    }

    #[test]
    fn stencil_respects_mask_holes() {
        let img = RasterImage::from_fn(9, 9, |x, _| [x as f64, 0.0, 0.0])
            .with_mask(|x, y| (x, y) != (4, 4));
        let d = derivative_channels(&img).unwrap();
        assert!(!d.mask[4 * 9 + 4]);
        assert!(!d.mask[4 * 9 + 2]);
        assert!(!d.mask[2 * 9 + 4]);
        assert!(d.mask[3 * 9 + 3]);
    }

    #[test]
    fn constant_channels_have_zero_derivatives() {
        let img = RasterImage::from_fn(8, 8, |_, _| [0.3, 0.6, 0.9]);
        let f1 = ChannelSet::order_one(&img).unwrap();
        assert!(f1.planes().iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn f1_of_homogeneous_quadratic_is_twice_the_channel() {
        let (w, h) = (11, 9);
        let (xc, yc) = (5.0, 4.0);
        let n = w * h;
        let c = |i: usize| {
            let (x, y) = ((i % w) as f64 - xc, (i / w) as f64 - yc);
            x * x + y * y
        };
        let dx: Vec<f64> = (0..n).map(|i| 2.0 * ((i % w) as f64 - xc)).collect();
        let dy: Vec<f64> = (0..n).map(|i| 2.0 * ((i / w) as f64 - yc)).collect();
        let d = DerivativePlanes {
            width: w,
            height: h,
            dx: [dx.clone(), dx.clone(), dx],
            dy: [dy.clone(), dy.clone(), dy],
            mask: vec![true; n],
        };
        let set = f1_from_derivatives(&d, xc, yc);
        for i in 0..n {
            assert!((set.planes()[0][i] - 2.0 * c(i)).abs() < 1e-12);
        }
        assert_eq!(set.means(), [0.0; 3]);
    }

    #[test]
    fn f1_of_ramp_is_scaled_offset() {
        let img = RasterImage::from_fn(9, 9, |x, _| [x as f64, 0.0, 0.0]);
        let set = f1_channels(&img, 4.0, 4.0).unwrap();
        for y in 2..7 {
            for x in 2..7 {
                assert_eq!(set.planes()[0][y * 9 + x], 12.0 * (x as f64 - 4.0));
            }
        }
    }

    #[test]
    fn moment_table_basics_and_naive_agreement() {
        let img = noise(8, 8, 7);
        let set = ChannelSet::order_zero(&img).unwrap();
        let (xc, yc) = set.centroid().unwrap();
        let required: BTreeSet<MomentIndex> = [
            MomentIndex::new(1, 0, 0, 0, 0),
            MomentIndex::new(0, 1, 0, 0, 0),
            MomentIndex::new(2, 1, 1, 0, 0),
            MomentIndex::new(0, 3, 0, 0, 1),
            MomentIndex::new(1, 1, 0, 1, 0),
            MomentIndex::new(0, 0, 1, 1, 0),
        ]
        .into_iter()
        .collect();
        let table = compute_moment_table(&set, xc, yc, &required).unwrap();
        assert_eq!(table.get(&MomentIndex::AREA), Some(64.0));
        assert!(table.get(&MomentIndex::new(1, 0, 0, 0, 0)).unwrap().abs() < 1e-9 * 64.0);
        assert!(table.get(&MomentIndex::new(0, 1, 0, 0, 0)).unwrap().abs() < 1e-9 * 64.0);

        let means = set.means();
        for idx in &required {
            let mut naive = 0.0;
            for y in 0..8 {
                for x in 0..8 {
                    let v = img.get(x, y);
                    naive += (x as f64 - xc).powi(idx.p as i32)
                        * (y as f64 - yc).powi(idx.q as i32)
                        * (v[0] - means[0]).powi(idx.alpha as i32)
                        * (v[1] - means[1]).powi(idx.beta as i32)
                        * (v[2] - means[2]).powi(idx.gamma as i32);
                }
            }
            let got = table.get(idx).unwrap();
            assert!(
                (got - naive).abs() <= 1e-12 * naive.abs().max(1.0),
                "{idx}: {got} vs {naive}"
            );
        }
    }

    #[test]
    fn grayscale_and_constant_images_are_degenerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut gray = RasterImage::new(16, 16);
        for y in 0..16 {
            for x in 0..16 {
                let v: f64 = rng.gen();
                gray.set(x, y, [v, v, v]);
            }
        }
        let fv = scdmi50(&gray).unwrap();
        assert_eq!(fv.valid_count(), 0);
        assert!(fv.values.iter().all(|v| *v == 0.0));

        let flat = RasterImage::from_fn(16, 16, |_, _| [0.2, 0.5, 0.7]);
        let fv = scdmi50(&flat).unwrap();
        assert_eq!(fv.valid_count(), 0);
        assert!(fv.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn noise_image_is_fully_valid_and_deterministic() {
        let img = noise(24, 24, 11);
        let a = scdmi50(&img).unwrap();
        let b = scdmi50(&img.clone()).unwrap();
        assert_eq!(a.len(), 50);
        assert_eq!(a.valid_count(), 50);
        assert_eq!(a.values, b.values);
        assert_eq!(a.values[17], 0.0);
        assert_eq!(a.values[42], 0.0);
    }

    #[test]
    fn translation_with_transported_mask() {
        let base = noise(20, 20, 5);
        let mask =
            |x: usize, y: usize| (3..15).contains(&x) && (2..16).contains(&y) && (x + y) % 7 != 0;
        let a = base.clone().with_mask(mask);
        let (tx, ty) = (3, 2);
        let mut b = RasterImage::new(24, 24).with_mask(|_, _| false);
        for y in 0..20 {
            for x in 0..20 {
                b.set(x + tx, y + ty, base.get(x, y));
                b.set_masked(x + tx, y + ty, mask(x, y));
            }
        }
        let fa = scdmi50(&a).unwrap();
        let fb = scdmi50(&b).unwrap();
        for i in 0..50 {
            assert_eq!(fa.valid[i], fb.valid[i]);
            let tol = 1e-9 * fa.values[i].abs().max(1e-12);
            assert!((fa.values[i] - fb.values[i]).abs() <= tol, "entry {i}");
        }
    }

    #[test]
    fn eroded_domain_empty_gives_invalid_order_one() {
        // a 3-pixel-wide strip survives as a domain but erodes to nothing
        let img = noise(12, 12, 9).with_mask(|x, _| (4..7).contains(&x));
        let fv = scdmi50(&img).unwrap();
        assert!(fv.valid[25..].iter().all(|v| !v));
    }

    #[test]
    fn first_order_central_moments_are_exact_zeros() {
        let img = noise(16, 16, 4).with_mask(|x, y| x * x + 3 * y < 90 && x + y > 2);
        let ex = FeatureExtractor::standard();
        for order in [Order::Zero, Order::One] {
            let table = ex.table(&img, order).unwrap().unwrap();
            assert_eq!(table.get(&MomentIndex::new(1, 0, 0, 0, 0)), Some(0.0));
            assert_eq!(table.get(&MomentIndex::new(0, 1, 0, 0, 0)), Some(0.0));
        }
        // row 9 integrates point 4 against a single linear shape factor
        let fv = scdmi50(&img).unwrap();
        assert!(fv.valid[8] && fv.valid[33]);
        assert_eq!((fv.values[8], fv.values[33]), (0.0, 0.0));
    }
}
