//! Classification and retrieval benchmark: chi-square 1-NN accuracy and
//! interpolated precision-recall over several descriptors.

mod dataset;
mod descriptors;
mod metrics;

use std::fmt::Write as _;

use rayon::prelude::*;

pub use dataset::{
    synthetic_classification, synthetic_coil, train_count, DatasetItem, LabeledDataset,
    LabeledImages, Split, TransformRanges, TRAIN_FRACTION,
};
pub use descriptors::{
    baseline_descriptor, color_moments, descriptor, hu_from_weights, hu_moments, rg_histogram,
    transformed_color_distribution, DescriptorKind, SIGMA_FLOOR,
};
pub use metrics::{
    chi_square_distance, feature_normalize, leave_one_out_pr, nearest_neighbor_accuracy,
    normalization_scales, PrCurve, CHI_SQUARE_EPS, RECALL_LEVELS, SCALE_FLOOR,
};

use crate::error::Result;
use crate::moments::{FeatureExtractor, FeatureVector};
use crate::numeric::format_float;

/// Raw descriptors of every image, in dataset order.
pub fn compute_descriptors(
    data: &LabeledImages,
    kind: DescriptorKind,
) -> Result<Vec<FeatureVector>> {
    data.images
        .par_iter()
        .map(|img| descriptor(img, kind))
        .collect()
}

/// 1-NN accuracy of test items against train items. Features are
/// normalized with train-split scales.
pub fn knn_classify(data: &LabeledImages, kind: DescriptorKind) -> Result<f64> {
    let raw = compute_descriptors(data, kind)?;
    knn_from_raw(data, &raw)
}

/// Leave-one-out precision-recall over the whole set, normalized with
/// scales from every item.
pub fn precision_recall(data: &LabeledImages, kind: DescriptorKind) -> Result<PrCurve> {
    let raw = compute_descriptors(data, kind)?;
    pr_from_raw(data, &raw)
}

fn knn_from_raw(data: &LabeledImages, raw: &[FeatureVector]) -> Result<f64> {
    let train = data.indices(Split::Train);
    let test = data.indices(Split::Test);
    let features = feature_normalize(raw, &train);
    nearest_neighbor_accuracy(&features, &data.labels, &train, &test)
}

fn pr_from_raw(data: &LabeledImages, raw: &[FeatureVector]) -> Result<PrCurve> {
    let all: Vec<usize> = (0..data.len()).collect();
    leave_one_out_pr(&feature_normalize(raw, &all), &data.labels)
}

/// Accuracy and PR curve per descriptor, in the requested order.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub accuracy: Vec<(DescriptorKind, f64)>,
    pub pr: Vec<(DescriptorKind, PrCurve)>,
}

impl BenchReport {
    pub fn accuracy_of(&self, kind: DescriptorKind) -> Option<f64> {
        self.accuracy
            .iter()
            .find(|(k, _)| *k == kind)
            .map(|(_, a)| *a)
    }

    pub fn curve_of(&self, kind: DescriptorKind) -> Option<&PrCurve> {
        self.pr.iter().find(|(k, _)| *k == kind).map(|(_, c)| c)
    }

    pub fn accuracy_csv(&self) -> String {
        let mut out = String::from("descriptor,accuracy\n");
        for (k, a) in &self.accuracy {
            let _ = writeln!(out, "{k},{}", format_float(*a));
        }
        out
    }

    pub fn pr_csv(&self) -> String {
        let mut out = String::from("descriptor,recall_level,precision\n");
        for (k, c) in &self.pr {
            for (r, p) in c.recall.iter().zip(&c.precision) {
                let _ = writeln!(out, "{k},{},{}", format_float(*r), format_float(*p));
            }
        }
        out
    }
}

/// Runs classification on `classify` (if given) and retrieval on
/// `retrieve` (if given) for every kind. SCDMI vectors are extracted once
/// per image and sliced for the sub-vector kinds.
pub fn run_bench(
    classify: Option<&LabeledImages>,
    retrieve: Option<&LabeledImages>,
    kinds: &[DescriptorKind],
) -> Result<BenchReport> {
    let mut report = BenchReport {
        accuracy: Vec::new(),
        pr: Vec::new(),
    };
    for (data, is_classify) in [(classify, true), (retrieve, false)] {
        let Some(data) = data else { continue };
        let full: Option<Vec<FeatureVector>> = if kinds.iter().any(|k| k.is_scdmi()) {
            let ex = FeatureExtractor::standard();
            Some(
                data.images
                    .par_iter()
                    .map(|img| ex.extract(img))
                    .collect::<Result<_>>()?,
            )
        } else {
            None
        };
        for &kind in kinds {
            let raw = match (&full, kind.is_scdmi()) {
                (Some(full), true) => full
                    .iter()
                    .map(|f| kind.from_scdmi50(f).expect("scdmi kind"))
                    .collect(),
                _ => compute_descriptors(data, kind)?,
            };
            if is_classify {
                report.accuracy.push((kind, knn_from_raw(data, &raw)?));
            } else {
                report.pr.push((kind, pr_from_raw(data, &raw)?));
            }
        }
    }
    Ok(report)
}
