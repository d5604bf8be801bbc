//! Distances, feature normalization, 1-NN accuracy and precision-recall.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::moments::FeatureVector;
use crate::numeric::median;

/// Additive guard in the chi-square denominator.
pub const CHI_SQUARE_EPS: f64 = 1e-10;

/// Floor for the per-dimension normalization scale.
pub const SCALE_FLOOR: f64 = 1e-12;

/// Recall levels of the interpolated precision curve.
pub const RECALL_LEVELS: usize = 11;

/// `sum (a_i - b_i)^2 / (|a_i| + |b_i| + eps)`.
pub fn chi_square_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2) / (x.abs() + y.abs() + CHI_SQUARE_EPS))
        .sum())
}

/// Per-dimension scales: median absolute value over the valid gallery
/// entries, floored at [`SCALE_FLOOR`].
pub fn normalization_scales(raw: &[FeatureVector], gallery: &[usize]) -> Vec<f64> {
    let dim = raw.first().map_or(0, |v| v.len());
    (0..dim)
        .map(|d| {
            let mut mags: Vec<f64> = gallery
                .iter()
                .filter(|&&g| raw[g].valid[d])
                .map(|&g| raw[g].values[d].abs())
                .collect();
            median(&mut mags).unwrap_or(0.0).max(SCALE_FLOOR)
        })
        .collect()
}

/// `v -> sign(v) ln(1 + |v| / s)` with `s` from [`normalization_scales`]
/// over the `gallery` items. Invalid entries become 0.
pub fn feature_normalize(raw: &[FeatureVector], gallery: &[usize]) -> Vec<Vec<f64>> {
    let scales = normalization_scales(raw, gallery);
    raw.iter()
        .map(|v| {
            v.values
                .iter()
                .zip(&v.valid)
                .zip(&scales)
                .map(|((&x, &ok), &s)| {
                    if ok {
                        x.signum() * (x.abs() / s).ln_1p()
                    } else {
                        0.0
                    }
                })
                .map(|x| if x == 0.0 { 0.0 } else { x })
                .collect()
        })
        .collect()
}

fn by_distance(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Fraction of `queries` whose nearest `references` item (chi-square, ties
/// to the lower index) carries the same label.
pub fn nearest_neighbor_accuracy(
    features: &[Vec<f64>],
    labels: &[usize],
    references: &[usize],
    queries: &[usize],
) -> Result<f64> {
    if references.is_empty() || queries.is_empty() {
        return Err(Error::Dataset("empty train or test split".into()));
    }
    let correct = queries
        .par_iter()
        .map(|&q| {
            let first = references[0];
            let mut best = (chi_square_distance(&features[q], &features[first])?, first);
            for &r in &references[1..] {
                let d = (chi_square_distance(&features[q], &features[r])?, r);
                if by_distance(&d, &best) == Ordering::Less {
                    best = d;
                }
            }
            Ok((labels[best.1] == labels[q]) as usize)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum::<usize>();
    Ok(correct as f64 / queries.len() as f64)
}

/// Mean interpolated precision at recall `0, 0.1, ..., 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrCurve {
    pub recall: Vec<f64>,
    pub precision: Vec<f64>,
}

impl PrCurve {
    /// Trapezoidal area under the curve.
    pub fn area(&self) -> f64 {
        self.recall
            .windows(2)
            .zip(self.precision.windows(2))
            .map(|(r, p)| (r[1] - r[0]) * (p[0] + p[1]) / 2.0)
            .sum()
    }
}

fn recall_levels() -> Vec<f64> {
    (0..RECALL_LEVELS)
        .map(|i| i as f64 / (RECALL_LEVELS - 1) as f64)
        .collect()
}

/// Interpolated precision of one ranked relevance list with `relevant`
/// positives in total.
fn interpolated_precision(ranked: &[bool], relevant: usize) -> Vec<f64> {
    let mut points = Vec::with_capacity(ranked.len());
    let mut hits = 0usize;
    for (rank, &rel) in ranked.iter().enumerate() {
        if rel {
            hits += 1;
            points.push((
                hits as f64 / relevant as f64,
                hits as f64 / (rank + 1) as f64,
            ));
        }
    }
    recall_levels()
        .into_iter()
        .map(|level| {
            points
                .iter()
                .filter(|(r, _)| *r >= level - 1e-12)
                .map(|&(_, p)| p)
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Leave-one-out retrieval: every item queries all others, ranked by
/// chi-square distance; precision is interpolated per query and averaged.
pub fn leave_one_out_pr(features: &[Vec<f64>], labels: &[usize]) -> Result<PrCurve> {
    let n = features.len();
    let mut class_size = std::collections::BTreeMap::new();
    for &l in labels {
        *class_size.entry(l).or_insert(0usize) += 1;
    }
    if class_size.len() < 2 {
        return Err(Error::Dataset(
            "precision-recall needs at least 2 classes".into(),
        ));
    }
    if let Some((l, _)) = class_size.iter().find(|(_, &c)| c < 2) {
        return Err(Error::Dataset(format!(
            "class {l} has fewer than 2 members"
        )));
    }
    let curves = (0..n)
        .into_par_iter()
        .map(|q| {
            let mut ranked: Vec<(f64, usize)> = (0..n)
                .filter(|&i| i != q)
                .map(|i| Ok((chi_square_distance(&features[q], &features[i])?, i)))
                .collect::<Result<_>>()?;
            ranked.sort_by(by_distance);
            let rel: Vec<bool> = ranked
                .iter()
                .map(|&(_, i)| labels[i] == labels[q])
                .collect();
            Ok(interpolated_precision(&rel, class_size[&labels[q]] - 1))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut precision = vec![0.0; RECALL_LEVELS];
    for c in &curves {
        for (p, v) in precision.iter_mut().zip(c) {
            *p += v;
        }
    }
    precision.iter_mut().for_each(|p| *p /= n as f64);
    Ok(PrCurve {
        recall: recall_levels(),
        precision,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn chi_square_examples() {
        assert_eq!(
            chi_square_distance(&[1.0, -2.0], &[1.0, -2.0]).unwrap(),
            0.0
        );
        let d = chi_square_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(d, 2.0 / (1.0 + CHI_SQUARE_EPS));
        assert!(matches!(
            chi_square_distance(&[1.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { left: 1, right: 2 })
        ));
    }

    proptest! {
        #[test]
        fn chi_square_is_a_symmetric_nonnegative_dissimilarity(
            a in proptest::collection::vec(-1e3f64..1e3, 8),
            b in proptest::collection::vec(-1e3f64..1e3, 8),
        ) {
            let ab = chi_square_distance(&a, &b).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(ab, chi_square_distance(&b, &a).unwrap());
            prop_assert_eq!(chi_square_distance(&a, &a).unwrap(), 0.0);
            if a != b {
                prop_assert!(ab > 0.0);
            }
        }
    }

    fn fv(values: Vec<f64>) -> FeatureVector {
        let valid = vec![true; values.len()];
        FeatureVector { values, valid }
    }

    #[test]
    fn normalization_examples() {
        let raw = vec![
            fv(vec![0.0, 2.0, -4.0]),
            fv(vec![0.0, 4.0, 1.0]),
            fv(vec![0.0, 6.0, 2.0]),
        ];
        let all = [0, 1, 2];
        let out = feature_normalize(&raw, &all);
        assert!(out.iter().all(|v| v[0] == 0.0));
        // median |v| of dimension 1 is 4, so 4 maps to ln 2
        assert!((out[1][1] - 2f64.ln()).abs() < 1e-15);
        assert!((out[0][2] + 3f64.ln()).abs() < 1e-15);

        let mut scaled = raw.clone();
        scaled.iter_mut().for_each(|v| v.values[1] *= 10.0);
        let out2 = feature_normalize(&scaled, &all);
        for (a, b) in out.iter().zip(&out2) {
            assert_eq!(a[0], b[0]);
            assert_eq!(a[2], b[2]);
            assert!((a[1] - b[1]).abs() < 1e-14);
        }
    }

    #[test]
    fn invalid_entries_become_zero_and_skip_the_median() {
        let mut a = fv(vec![1e6, 3.0]);
        a.valid[0] = false;
        let raw = vec![a, fv(vec![2.0, 3.0])];
        let scales = normalization_scales(&raw, &[0, 1]);
        assert_eq!(scales, vec![2.0, 3.0]);
        assert_eq!(feature_normalize(&raw, &[0, 1])[0][0], 0.0);
    }

    #[test]
    fn duplicated_train_gives_perfect_accuracy() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let feats: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..5).map(|_| rng.gen()).collect())
            .collect();
        let mut all = feats.clone();
        all.extend(feats.iter().cloned());
        let labels: Vec<usize> = (0..40).map(|i| (i % 20) % 4).collect();
        let train: Vec<usize> = (0..20).collect();
        let test: Vec<usize> = (20..40).collect();
        assert_eq!(
            nearest_neighbor_accuracy(&all, &labels, &train, &test).unwrap(),
            1.0
        );
        assert!(nearest_neighbor_accuracy(&all, &labels, &[], &test).is_err());
    }

    #[test]
    fn permuted_labels_are_at_chance() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 2000;
        let feats: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..4).map(|_| rng.gen()).collect())
            .collect();
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let train: Vec<usize> = (0..n / 2).collect();
        let test: Vec<usize> = (n / 2..n).collect();
        let acc = nearest_neighbor_accuracy(&feats, &labels, &train, &test).unwrap();
        assert!((acc - 0.5).abs() < 0.1, "{acc}");
    }

    #[test]
    fn separated_clusters_have_perfect_precision() {
        let feats: Vec<Vec<f64>> = (0..12)
            .map(|i| vec![(i / 4) as f64 * 100.0 + (i % 4) as f64 * 0.01, 1.0])
            .collect();
        let labels: Vec<usize> = (0..12).map(|i| i / 4).collect();
        let pr = leave_one_out_pr(&feats, &labels).unwrap();
        assert_eq!(pr.recall.len(), 11);
        assert!(pr.precision.iter().all(|&p| p == 1.0));
        assert!((pr.area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_features_sit_near_class_prior() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let feats: Vec<Vec<f64>> = (0..400)
            .map(|_| (0..3).map(|_| rng.gen()).collect())
            .collect();
        let labels: Vec<usize> = (0..400).map(|i| i % 4).collect();
        let pr = leave_one_out_pr(&feats, &labels).unwrap();
        assert!(pr.precision.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        assert!((pr.precision[10] - 0.25).abs() < 0.05, "{:?}", pr.precision);
        let area = pr.area();
        assert!((0.0..=1.0).contains(&area));
    }

    #[test]
    fn interpolation_of_known_ranking() {
        // relevant at ranks 1 and 3 of 4
        let p = interpolated_precision(&[true, false, true, false], 2);
        assert_eq!(p[0], 1.0);
        assert_eq!(p[5], 1.0);
        assert_eq!(p[6], 2.0 / 3.0);
        assert_eq!(p[10], 2.0 / 3.0);
    }

    #[test]
    fn singleton_class_rejected() {
        let feats = vec![vec![0.0], vec![1.0], vec![2.0]];
        assert!(leave_one_out_pr(&feats, &[0, 0, 1]).is_err());
        assert!(leave_one_out_pr(&feats, &[0, 0, 0]).is_err());
    }
}
