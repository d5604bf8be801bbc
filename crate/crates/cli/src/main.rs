use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use scdmi_cli::{cmd_bench, cmd_features, cmd_gen, cmd_verify, CliError, RunConfig, Status};
use scdmi_core::numeric::format_float;

#[derive(Parser)]
#[command(
    name = "scdmi",
    version,
    about = "Shape-color differential moment invariants"
)]
struct Cli {
    /// Seed for every generated image and transform.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Output directory, created if absent.
    #[arg(long, global = true, default_value = "scdmi_out")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the invariant polynomials, the denominator and manifest.csv.
    Gen,
    /// Extract the 50-entry feature vector of PPM images into features.csv.
    Features {
        #[arg(required = true)]
        images: Vec<PathBuf>,
    },
    /// Run the oracle, color, scaling and degeneracy suites into verify.csv.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1e-9)]
        tol_color: f64,
        #[arg(long, default_value_t = 0.01)]
        tol_shape: f64,
    },
    /// Classification accuracy and retrieval PR curves for every descriptor.
    Bench {
        /// CSV with columns path,label,split.
        manifest: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
        /// Generate a seeded synthetic dataset instead of reading a manifest.
        #[arg(long)]
        synthetic: bool,
        #[arg(long, default_value_t = 20)]
        classes: usize,
        /// Transformed images per class in the classification set.
        #[arg(long, default_value_t = 20)]
        transforms: usize,
    },
}

#[derive(Args)]
struct Common {
    /// Clamp transformed colors to [0, 1].
    #[arg(long)]
    clamp: bool,
    /// Side of generated images.
    #[arg(long)]
    size: Option<usize>,
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let mut cfg = RunConfig {
        seed: cli.seed,
        out: cli.out,
        ..RunConfig::default()
    };
    match cli.command {
        Command::Gen => {
            let files = cmd_gen(&cfg)?;
            println!("wrote {} files to {}", files.len(), cfg.out.display());
            Ok(true)
        }
        Command::Features { images } => {
            let out = cmd_features(&cfg, &images)?;
            for (path, err) in &out.failures {
                eprintln!("{}: {err}", path.display());
            }
            println!("wrote {} rows to {}", out.rows, out.csv.display());
            if out.failures.is_empty() {
                Ok(true)
            } else {
                Err(CliError::Inputs {
                    failed: out.failures.len(),
                    total: images.len(),
                })
            }
        }
        Command::Verify {
            common,
            tol_color,
            tol_shape,
        } => {
            cfg.clamp = common.clamp;
            cfg.size = common.size;
            cfg.tol_color = tol_color;
            cfg.tol_shape = tol_shape;
            let report = cmd_verify(&cfg)?;
            for suite in [
                "oracle",
                "color",
                "scaling",
                "scaling_control",
                "degeneracy",
            ] {
                let rows: Vec<_> = report.suite(suite).collect();
                let count = |s: Status| rows.iter().filter(|r| r.status == s).count();
                println!(
                    "{suite:<16} pass {:>3}  fail {:>3}  degenerate {:>3}  info {:>3}  rejected {:>3}",
                    count(Status::Pass),
                    count(Status::Fail),
                    count(Status::Degenerate),
                    count(Status::Info),
                    count(Status::Rejected),
                );
            }
            for r in report.failures() {
                let dev = r.max_rel_dev.map(format_float).unwrap_or_default();
                eprintln!("FAIL {} id={} k={} max_rel_dev={dev}", r.suite, r.id, r.k);
            }
            Ok(report.passed())
        }
        Command::Bench {
            manifest,
            common,
            synthetic,
            classes,
            transforms,
        } => {
            cfg.clamp = common.clamp;
            cfg.size = common.size;
            cfg.synthetic = synthetic;
            cfg.classes = classes;
            cfg.transforms = transforms;
            let report = cmd_bench(&cfg, manifest.as_deref())?;
            for (kind, acc) in &report.accuracy {
                let area = report.curve_of(*kind).map(|c| c.area()).unwrap_or(f64::NAN);
                println!("{:<24} accuracy {acc:.4}  pr-area {area:.4}", kind.name());
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
