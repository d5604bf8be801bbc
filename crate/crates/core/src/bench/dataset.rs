//! Labeled image sets: CSV manifests and seeded synthetic generators.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::RasterImage;
use crate::synthetic::BlobObject;
use crate::transform::{
    apply_color_affine, apply_shape_affine, sample_color_affine, sample_shape_affine,
};

/// Share of each class placed in the train split.
pub const TRAIN_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::Dataset(format!("unknown split `{other}`"))),
        }
    }
}

/// Train-split size for a class of `count` items: `round(0.1 count)`, at
/// least one.
pub fn train_count(count: usize) -> usize {
    ((count as f64 * TRAIN_FRACTION).round() as usize)
        .max(1)
        .min(count)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetItem {
    pub path: PathBuf,
    pub label: String,
    pub split: Split,
}

/// Image paths with class labels and splits, as listed in a
/// `path,label,split` manifest.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabeledDataset {
    pub items: Vec<DatasetItem>,
}

impl LabeledDataset {
    /// Reads a manifest with header `path,label,split`. Relative paths are
    /// resolved against the manifest's directory.
    pub fn read_manifest(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["path", "label", "split"] {
            return Err(Error::Dataset(format!(
                "{}: row 1: expected header `path,label,split`",
                path.display()
            )));
        }
        let mut items = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let row = i + 2;
            let record = record
                .map_err(|e| Error::Dataset(format!("{}: row {row}: {e}", path.display())))?;
            let (p, label, split) = (&record[0], &record[1], &record[2]);
            if p.is_empty() || label.is_empty() {
                return Err(Error::Dataset(format!(
                    "{}: row {row}: empty path or label",
                    path.display()
                )));
            }
            let split = split
                .parse()
                .map_err(|e| Error::Dataset(format!("{}: row {row}: {e}", path.display())))?;
            items.push(DatasetItem {
                path: base.join(p),
                label: label.to_string(),
                split,
            });
        }
        let ds = LabeledDataset { items };
        ds.validate(false)?;
        Ok(ds)
    }

    /// Writes the manifest; paths are written as given.
    pub fn write_manifest(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["path", "label", "split"])?;
        for item in &self.items {
            w.write_record([
                item.path.to_string_lossy().as_ref(),
                item.label.as_str(),
                &item.split.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    /// At least two classes; with `both_splits`, every class has train and
    /// test members.
    pub fn validate(&self, both_splits: bool) -> Result<()> {
        let mut seen: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
        for item in &self.items {
            let e = seen.entry(&item.label).or_default();
            match item.split {
                Split::Train => e.0 += 1,
                Split::Test => e.1 += 1,
            }
        }
        if seen.len() < 2 {
            return Err(Error::Dataset(format!(
                "need at least 2 classes, found {}",
                seen.len()
            )));
        }
        if both_splits {
            if let Some((label, _)) = seen.iter().find(|(_, (tr, te))| *tr == 0 || *te == 0) {
                return Err(Error::Dataset(format!(
                    "class `{label}` is missing a split"
                )));
            }
        }
        Ok(())
    }

    pub fn load(&self) -> Result<LabeledImages> {
        let images = self
            .items
            .par_iter()
            .map(|item| RasterImage::read_ppm(&item.path))
            .collect::<Result<Vec<_>>>()?;
        let mut class_names: Vec<String> = Vec::new();
        let mut ids = BTreeMap::new();
        let labels = self
            .items
            .iter()
            .map(|item| {
                *ids.entry(item.label.clone()).or_insert_with(|| {
                    class_names.push(item.label.clone());
                    class_names.len() - 1
                })
            })
            .collect();
        Ok(LabeledImages {
            images,
            labels,
            splits: self.items.iter().map(|i| i.split).collect(),
            class_names,
        })
    }
}

/// Decoded images with integer class ids.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImages {
    pub images: Vec<RasterImage>,
    pub labels: Vec<usize>,
    pub splits: Vec<Split>,
    pub class_names: Vec<String>,
}

impl LabeledImages {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn indices(&self, split: Split) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.splits[i] == split)
            .collect()
    }

    /// Writes every image as `<dir>/<class>_<n>.ppm` (8-bit, clamped) and
    /// returns the matching manifest with paths relative to `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<LabeledDataset> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut counters = vec![0usize; self.class_names.len()];
        let mut items = Vec::with_capacity(self.len());
        for (i, img) in self.images.iter().enumerate() {
            let label = &self.class_names[self.labels[i]];
            let name = format!("{label}_{}.ppm", counters[self.labels[i]]);
            counters[self.labels[i]] += 1;
            img.write_ppm(dir.join(&name))?;
            items.push(DatasetItem {
                path: PathBuf::from(name),
                label: label.clone(),
                split: self.splits[i],
            });
        }
        Ok(LabeledDataset { items })
    }
}

/// Shape-transform ranges used by the synthetic generators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformRanges {
    pub det_range: (f64, f64),
    pub max_shape_condition: f64,
    pub max_color_condition: f64,
    pub color_offset: f64,
    /// Clamp transformed colors to `[0, 1]`.
    pub clamp: bool,
}

impl TransformRanges {
    /// Combined viewpoint and illumination change for classification.
    pub const COMBINED: TransformRanges = TransformRanges {
        det_range: (0.7, 1.4),
        max_shape_condition: 2.0,
        max_color_condition: 4.0,
        color_offset: 0.1,
        clamp: false,
    };

    /// Near-rigid views for retrieval.
    pub const VIEWS: TransformRanges = TransformRanges {
        det_range: (0.8, 1.25),
        max_shape_condition: 1.5,
        max_color_condition: 4.0,
        color_offset: 0.1,
        clamp: false,
    };
}

/// Fraction of the frame half-width covered by the untransformed object.
const OBJECT_EXTENT: f64 = 0.55;

fn class_name(c: usize) -> String {
    format!("class{c:03}")
}

fn assign_splits(labels: &[usize]) -> Vec<Split> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_default() += 1;
    }
    let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
    labels
        .iter()
        .map(|&l| {
            let k = seen.entry(l).or_default();
            *k += 1;
            if *k <= train_count(counts[&l]) {
                Split::Train
            } else {
                Split::Test
            }
        })
        .collect()
}

/// Class label, object, and optional (shape, color) transform seeds.
type RenderJob = (usize, BlobObject, Option<(u64, u64)>);

fn render_jobs(
    size: usize,
    jobs: Vec<RenderJob>,
    r: TransformRanges,
) -> Result<Vec<(usize, RasterImage)>> {
    let c = (size as f64 - 1.0) / 2.0;
    jobs.into_par_iter()
        .map(|(label, object, seeds)| {
            let base = object.render(size, OBJECT_EXTENT);
            let img = match seeds {
                None => base,
                Some((shape_seed, color_seed)) => {
                    let s =
                        sample_shape_affine(shape_seed, r.det_range, r.max_shape_condition, [c, c]);
                    let col =
                        sample_color_affine(color_seed, r.max_color_condition, r.color_offset);
                    let warped = apply_shape_affine(&base, &s, size, size)?;
                    apply_color_affine(&warped, &col, r.clamp)?
                }
            };
            Ok((label, img))
        })
        .collect()
}

fn assemble(rendered: Vec<(usize, RasterImage)>, classes: usize) -> LabeledImages {
    let (labels, images): (Vec<usize>, Vec<RasterImage>) = rendered.into_iter().unzip();
    LabeledImages {
        splits: assign_splits(&labels),
        images,
        labels,
        class_names: (0..classes).map(class_name).collect(),
    }
}

/// Classification set: per class one random blob object, its untransformed
/// rendering, and `transforms` renderings under independent combined shape
/// and color transforms. The first 10% of each class (at least one item,
/// the untransformed rendering first) form the train split. Transformed
/// colors are clamped to `[0, 1]` when `clamp` is set.
pub fn synthetic_classification(
    seed: u64,
    classes: usize,
    transforms: usize,
    size: usize,
    clamp: bool,
) -> Result<LabeledImages> {
    if classes < 2 {
        return Err(Error::Dataset("need at least 2 classes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jobs = Vec::with_capacity(classes * (transforms + 1));
    for label in 0..classes {
        let object = BlobObject::random(rng.gen());
        jobs.push((label, object.clone(), None));
        for _ in 0..transforms {
            jobs.push((label, object.clone(), Some((rng.gen(), rng.gen()))));
        }
    }
    Ok(assemble(
        render_jobs(
            size,
            jobs,
            TransformRanges {
                clamp,
                ..TransformRanges::COMBINED
            },
        )?,
        classes,
    ))
}

/// Retrieval set in the style of a turntable collection: per class
/// `views` near-rigid shape transforms, each seen under `colors` color
/// transforms, optionally clamped.
pub fn synthetic_coil(
    seed: u64,
    classes: usize,
    views: usize,
    colors: usize,
    size: usize,
    clamp: bool,
) -> Result<LabeledImages> {
    if classes < 2 || views * colors < 2 {
        return Err(Error::Dataset(
            "need at least 2 classes of at least 2 images".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jobs = Vec::with_capacity(classes * views * colors);
    for label in 0..classes {
        let object = BlobObject::random(rng.gen());
        let view_seeds: Vec<u64> = (0..views).map(|_| rng.gen()).collect();
        let color_seeds: Vec<u64> = (0..colors).map(|_| rng.gen()).collect();
        for &v in &view_seeds {
            for &c in &color_seeds {
                jobs.push((label, object.clone(), Some((v, c))));
            }
        }
    }
    Ok(assemble(
        render_jobs(
            size,
            jobs,
            TransformRanges {
                clamp,
                ..TransformRanges::VIEWS
            },
        )?,
        classes,
    ))
}
