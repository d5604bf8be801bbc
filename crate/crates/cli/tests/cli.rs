use std::path::{Path, PathBuf};
use std::process::Command;

use scdmi_cli::{cmd_bench, cmd_features, cmd_gen, run_verify, RunConfig, Status};
use scdmi_core::algebra::{standard_specs, MomentPolynomial};
use scdmi_core::bench::{synthetic_classification, LabeledDataset};
use scdmi_core::synthetic::smooth_object_image;
use scdmi_core::transform::{apply_color_affine, relative_deviation, sample_color_affine};
use scdmi_core::RasterImage;

fn config(dir: &Path) -> RunConfig {
    RunConfig {
        out: dir.to_path_buf(),
        ..RunConfig::default()
    }
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_scdmi"))
}

#[test]
fn gen_writes_all_polynomials_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let files = cmd_gen(&config(dir.path())).unwrap();
    assert_eq!(files.len(), 52);
    let polys = std::fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .path()
                .extension()
                .is_some_and(|x| x == "poly")
        })
        .count();
    assert_eq!(polys, 51);

    let manifest = std::fs::read_to_string(dir.path().join("manifest.csv")).unwrap();
    let lines: Vec<&str> = manifest.lines().collect();
    assert_eq!(lines[0], "id,k,n,m,N,M,e,term_count");
    assert_eq!(lines.len(), 51);
    assert_eq!(lines[3], "3,0,3,3,3,1,9/2,6");
    assert_eq!(lines[25], "25,0,4,8,3,1,21/2,144");
    assert!(lines[28].starts_with("3,1,"));

    let text = std::fs::read_to_string(dir.path().join("scdmi_k0_3.poly")).unwrap();
    assert_eq!(
        MomentPolynomial::parse(&text).unwrap(),
        standard_specs()[2].numerator
    );

    let again = tempfile::tempdir().unwrap();
    cmd_gen(&config(again.path())).unwrap();
    for f in &files {
        let name = f.file_name().unwrap();
        assert_eq!(
            std::fs::read(f).unwrap(),
            std::fs::read(again.path().join(name)).unwrap()
        );
    }
}

fn parse_rows(csv: &str) -> Vec<(String, Vec<f64>, Vec<bool>)> {
    csv.lines()
        .skip(1)
        .map(|l| {
            let cols: Vec<&str> = l.split(',').collect();
            assert_eq!(cols.len(), 101);
            let values = cols[1..51].iter().map(|v| v.parse().unwrap()).collect();
            let valid = cols[51..].iter().map(|v| *v == "1").collect();
            (cols[0].to_string(), values, valid)
        })
        .collect()
}

fn write_ppm(dir: &Path, name: &str, img: &RasterImage) -> PathBuf {
    let path = dir.join(name);
    img.write_ppm(&path).unwrap();
    path
}

#[test]
fn features_rows_follow_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let img = smooth_object_image(64, 0.4, 1);
    let full = RasterImage::from_fn(64, 64, |x, y| img.get(x, y));
    let gray = RasterImage::from_fn(64, 64, |x, y| [img.get(x, y)[1]; 3]);
    let color = write_ppm(dir.path(), "color.ppm", &full);
    let grayp = write_ppm(dir.path(), "gray.ppm", &gray);
    let out = cmd_features(&config(dir.path()), &[color.clone(), grayp, color]).unwrap();
    assert!(out.failures.is_empty());
    let rows = parse_rows(&std::fs::read_to_string(&out.csv).unwrap());
    assert_eq!(rows.len(), 3);
    assert!(rows[0].2.iter().filter(|v| **v).count() > 40);
    assert!(rows[1].2.iter().all(|v| !v));
    assert_eq!(rows[0], rows[2]);
}

#[test]
fn features_agree_under_color_affine_map() {
    // PPM quantizes to 8 bits, so compare through the library on the
    // unquantized image pair instead of through files
    let dir = tempfile::tempdir().unwrap();
    let img = smooth_object_image(64, 0.4, 2);
    let mapped = apply_color_affine(&img, &sample_color_affine(2, 6.0, 0.2), false).unwrap();
    let a = scdmi_core::scdmi50(&img).unwrap();
    let b = scdmi_core::scdmi50(&mapped).unwrap();
    for i in 0..50 {
        if a.valid[i] && b.valid[i] {
            assert!(
                relative_deviation(a.values[i], b.values[i]) <= 1e-9,
                "entry {i}"
            );
        }
    }
    // the CSV text round-trips the values exactly
    let p = write_ppm(dir.path(), "a.ppm", &img);
    let out = cmd_features(&config(dir.path()), &[p.clone()]).unwrap();
    let rows = parse_rows(&std::fs::read_to_string(out.csv).unwrap());
    let direct = scdmi_core::scdmi50(&RasterImage::read_ppm(&p).unwrap()).unwrap();
    assert_eq!(rows[0].1, direct.values);
}

#[test]
fn unreadable_inputs_are_reported_per_file() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_ppm(dir.path(), "ok.ppm", &smooth_object_image(32, 0.4, 3));
    let bad = dir.path().join("bad.ppm");
    std::fs::write(&bad, b"P3\n1 1\n255\n0 0 0\n").unwrap();
    let missing = dir.path().join("missing.ppm");
    let out = cmd_features(
        &config(dir.path()),
        &[good.clone(), bad.clone(), missing.clone()],
    )
    .unwrap();
    assert_eq!(out.rows, 1);
    let failed: Vec<&PathBuf> = out.failures.iter().map(|(p, _)| p).collect();
    assert_eq!(failed, vec![&bad, &missing]);

    let status = bin()
        .args(["--out"])
        .arg(dir.path())
        .arg("features")
        .arg(&missing)
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&status.stderr).contains("missing.ppm"));

    let status = bin()
        .arg("--out")
        .arg(dir.path())
        .arg("features")
        .arg(&good)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
}

#[test]
fn corrupted_coefficient_fails_exactly_that_spec() {
    let dir = tempfile::tempdir().unwrap();
    let mut specs = standard_specs();
    let target = &mut specs[2];
    let c = target.numerator.terms()[0].coefficient();
    target.numerator = target.numerator.with_coefficient(0, c + 1);
    let cfg = RunConfig {
        size: Some(64),
        ..config(dir.path())
    };
    let report = run_verify(&cfg, &specs).unwrap();
    let failed: Vec<(String, u8)> = report
        .suite("oracle")
        .filter(|r| r.status == Status::Fail)
        .map(|r| (r.id.clone(), r.k))
        .collect();
    assert_eq!(failed, vec![("3".to_string(), 0)]);
    assert_eq!(report.suite("oracle").count(), 50);
}

#[test]
fn verify_reports_degenerate_rows_without_failing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        size: Some(64),
        ..config(dir.path())
    };
    let report = run_verify(&cfg, &standard_specs()[..4]).unwrap();
    let degenerate: Vec<_> = report.suite("degeneracy").collect();
    assert_eq!(degenerate.len(), 4);
    assert!(degenerate.iter().all(|r| r.status == Status::Degenerate));
    assert_eq!(report.suite("oracle").count(), 4);
    assert!(report.suite("oracle").all(|r| r.status == Status::Pass));
    assert!(report.suite("color").all(|r| r.status == Status::Pass));
}

#[test]
fn verify_binary_exits_zero_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .arg("--out")
        .arg(dir.path())
        .arg("verify")
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("verify.csv")).unwrap();
    assert!(csv.starts_with("suite,id,k,max_rel_dev,tolerance,status\n"));
    assert!(csv.contains("\nscaling_control,n+N,0,"));
    assert!(!csv.contains(",fail\n"));

    // zero tolerance leaves rounding residue in the color suite to fail on
    let strict = bin()
        .arg("--out")
        .arg(dir.path())
        .args(["verify", "--tol-color", "0", "--size", "32"])
        .status()
        .unwrap();
    assert_eq!(strict.code(), Some(1));
}

#[test]
fn synthetic_bench_lists_every_descriptor() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        synthetic: true,
        classes: 10,
        transforms: 20,
        ..config(dir.path())
    };
    let report = cmd_bench(&cfg, None).unwrap();
    let acc = std::fs::read_to_string(dir.path().join("accuracy.csv")).unwrap();
    assert_eq!(acc.lines().count(), 8);
    assert_eq!(
        std::fs::read_to_string(dir.path().join("pr.csv"))
            .unwrap()
            .lines()
            .count(),
        1 + 7 * 11
    );
    let get = |name: &str| {
        report
            .accuracy
            .iter()
            .find(|(k, _)| k.name() == name)
            .unwrap()
            .1
    };
    assert!(get("SCDMI50") >= get("RG_HISTOGRAM"));
}

#[test]
fn bench_reads_manifest_and_reports_bad_rows() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic_classification(5, 3, 10, 40, false).unwrap();
    let manifest = data.save(dir.path()).unwrap();
    let path = dir.path().join("manifest.csv");
    manifest.write_manifest(&path).unwrap();
    let report = cmd_bench(&config(dir.path()), Some(&path)).unwrap();
    assert_eq!(report.accuracy.len(), 7);
    assert_eq!(report.pr.len(), 7);

    std::fs::write(
        &path,
        "path,label,split\nclass000_0.ppm,a,train\nclass000_1.ppm,a,sometimes\n",
    )
    .unwrap();
    let err = cmd_bench(&config(dir.path()), Some(&path))
        .unwrap_err()
        .to_string();
    assert!(err.contains("row 3"), "{err}");
    let out = bin()
        .arg("--out")
        .arg(dir.path())
        .arg("bench")
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(LabeledDataset::read_manifest(&path).is_err());
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(bin().arg("bench").status().unwrap().code(), Some(2));
    assert_eq!(bin().arg("features").status().unwrap().code(), Some(2));
    assert_eq!(bin().arg("nonsense").status().unwrap().code(), Some(2));
}
