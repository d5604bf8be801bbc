//! Subcommands of the `scdmi` binary: polynomial generation, feature
//! extraction, verification suites and the retrieval benchmark.

mod verify;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use scdmi_core::algebra::{denominator_polynomial, standard_specs};
use scdmi_core::bench::{
    run_bench, synthetic_classification, synthetic_coil, BenchReport, DescriptorKind,
    LabeledDataset,
};
use scdmi_core::numeric::format_float;
use scdmi_core::{scdmi50, FeatureVector, RasterImage};

pub use verify::{run_verify, Status, VerifyReport, VerifyRow};

/// Views and color conditions per class in the synthetic retrieval set.
pub const SYNTHETIC_VIEWS: usize = 5;
pub const SYNTHETIC_COLORS: usize = 6;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] scdmi_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{failed} of {total} input images could not be processed")]
    Inputs { failed: usize, total: usize },
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Options shared by every subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub clamp: bool,
    /// Tolerance of the exact suites (oracle equivalence, color maps).
    pub tol_color: f64,
    /// Tolerance of the resampling suite.
    pub tol_shape: f64,
    pub synthetic: bool,
    pub classes: usize,
    pub transforms: usize,
    /// Image side override; each subcommand has its own default.
    pub size: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out: PathBuf::from("scdmi_out"),
            clamp: false,
            tol_color: 1e-9,
            tol_shape: 0.01,
            synthetic: false,
            classes: 20,
            transforms: 20,
            size: None,
        }
    }
}

impl RunConfig {
    fn out_dir(&self) -> Result<&Path> {
        fs::create_dir_all(&self.out).map_err(|e| io_err(&self.out, e))?;
        Ok(&self.out)
    }
}

fn io_err(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

/// Writes every invariant polynomial, the denominator and `manifest.csv`.
/// Returns the written paths, manifest last.
pub fn cmd_gen(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let dir = cfg.out_dir()?;
    let specs = standard_specs();
    let mut written = Vec::with_capacity(specs.len() + 2);
    let mut manifest = String::from("id,k,n,m,N,M,e,term_count\n");
    for s in &specs {
        let path = dir.join(s.file_name());
        write_file(&path, &s.numerator.to_text())?;
        written.push(path);
        let c = &s.core;
        let _ = writeln!(
            manifest,
            "{},{},{},{},{},{},{},{}",
            s.id,
            s.order(),
            c.n(),
            c.m(),
            c.big_n(),
            c.big_m(),
            s.area_exponent,
            s.numerator.len()
        );
    }
    let path = dir.join("denominator.poly");
    write_file(&path, &denominator_polynomial().to_text())?;
    written.push(path);
    let path = dir.join("manifest.csv");
    write_file(&path, &manifest)?;
    written.push(path);
    Ok(written)
}

/// Outcome of feature extraction: the CSV path and per-input errors.
#[derive(Debug)]
pub struct FeaturesOutput {
    pub csv: PathBuf,
    pub rows: usize,
    pub failures: Vec<(PathBuf, String)>,
}

fn features_header() -> String {
    let mut h = String::from("path");
    for prefix in ["", "valid_"] {
        for k in 0..2 {
            for id in 1..=25 {
                let _ = write!(h, ",{prefix}k{k}_{id}");
            }
        }
    }
    h.push('\n');
    h
}

fn features_row(path: &Path, fv: &FeatureVector) -> String {
    let mut row = path.display().to_string();
    for &v in &fv.values {
        row.push(',');
        row.push_str(&format_float(v));
    }
    for &ok in &fv.valid {
        row.push_str(if ok { ",1" } else { ",0" });
    }
    row.push('\n');
    row
}

/// Extracts SCDMI50 from every PPM image into `features.csv`, one row per
/// readable image in input order. Unreadable inputs are reported in
/// `failures`; the CSV is written either way.
pub fn cmd_features(cfg: &RunConfig, images: &[PathBuf]) -> Result<FeaturesOutput> {
    if images.is_empty() {
        return Err(CliError::Usage("no input images".into()));
    }
    let results: Vec<_> = images
        .par_iter()
        .map(|p| RasterImage::read_ppm(p).and_then(|img| scdmi50(&img)))
        .collect();
    let mut csv = features_header();
    let mut failures = Vec::new();
    let mut rows = 0;
    for (path, r) in images.iter().zip(results) {
        match r {
            Ok(fv) => {
                csv.push_str(&features_row(path, &fv));
                rows += 1;
            }
            Err(scdmi_core::Error::Io { source, .. }) => {
                failures.push((path.clone(), source.to_string()))
            }
            Err(e) => failures.push((path.clone(), e.to_string())),
        }
    }
    let out = cfg.out_dir()?.join("features.csv");
    write_file(&out, &csv)?;
    Ok(FeaturesOutput {
        csv: out,
        rows,
        failures,
    })
}

/// Runs every verification suite with the 50 standard specs and
/// writes `verify.csv`.
pub fn cmd_verify(cfg: &RunConfig) -> Result<VerifyReport> {
    let report = run_verify(cfg, &standard_specs())?;
    write_file(&cfg.out_dir()?.join("verify.csv"), &report.to_csv())?;
    Ok(report)
}

/// Runs the benchmark over every descriptor and writes `accuracy.csv` and
/// `pr.csv`. With `cfg.synthetic` the classification and retrieval sets
/// are generated from the run seed; otherwise the manifest set serves both.
pub fn cmd_bench(cfg: &RunConfig, manifest: Option<&Path>) -> Result<BenchReport> {
    let size = cfg.size.unwrap_or(96);
    let (classify, retrieve) = match (cfg.synthetic, manifest) {
        (true, None) => (
            synthetic_classification(cfg.seed, cfg.classes, cfg.transforms, size, cfg.clamp)?,
            Some(synthetic_coil(
                cfg.seed,
                cfg.classes,
                SYNTHETIC_VIEWS,
                SYNTHETIC_COLORS,
                size,
                cfg.clamp,
            )?),
        ),
        (false, Some(path)) => {
            let ds = LabeledDataset::read_manifest(path)?;
            ds.validate(true)?;
            (ds.load()?, None)
        }
        (true, Some(_)) => {
            return Err(CliError::Usage(
                "give either a manifest or --synthetic, not both".into(),
            ))
        }
        (false, None) => {
            return Err(CliError::Usage(
                "bench needs a manifest or --synthetic".into(),
            ))
        }
    };
    let report = run_bench(
        Some(&classify),
        Some(retrieve.as_ref().unwrap_or(&classify)),
        &DescriptorKind::ALL,
    )?;
    let dir = cfg.out_dir()?;
    write_file(&dir.join("accuracy.csv"), &report.accuracy_csv())?;
    write_file(&dir.join("pr.csv"), &report.pr_csv())?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_has_101_columns() {
        let h = features_header();
        assert_eq!(h.trim_end().split(',').count(), 101);
        assert!(h.starts_with("path,k0_1,k0_2,"));
        assert!(h.trim_end().ends_with(",valid_k1_25"));
    }

    #[test]
    fn row_formats_flags_and_round_trip_values() {
        let fv = FeatureVector {
            values: vec![0.1, -2.5e-300],
            valid: vec![true, false],
        };
        let row = features_row(Path::new("a.ppm"), &fv);
        assert_eq!(row, "a.ppm,0.1,-2.5e-300,1,0\n");
    }

    #[test]
    fn bench_requires_exactly_one_source() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            out: dir.path().to_path_buf(),
            ..RunConfig::default()
        };
        assert!(matches!(cmd_bench(&cfg, None), Err(CliError::Usage(_))));
        let both = RunConfig {
            synthetic: true,
            ..cfg
        };
        assert!(matches!(
            cmd_bench(&both, Some(Path::new("m.csv"))),
            Err(CliError::Usage(_))
        ));
    }
}
