//! `qnso`: command-line access to the quadratic-operator toolkit.
//!
//! Exit status is 0 on success, 1 on invalid input and 2 when the command ran
//! but its verdict is negative (conditions fail, an orbit escapes the
//! simplex, a set is not invariant).

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qnso::cubic::{check_conditions, CubicMatrix};
use qnso::dynamics::{
    bifurcation_scan, find_fixed_points, lyapunov_1d, lyapunov_operator, parameter_grid, FixedPointConfig,
    LyapunovEstimate, ScanConfig,
};
use qnso::models::v2::V2Set;
use qnso::models::v3::{conjecture_experiment, ConjectureConfig, V3Set};
use qnso::models::{
    classify_invariant_set, verify_invariance, ChaosVerdict, InvarianceReport, InvariantSetLabel, ModelKind, ModelSpec,
};
use qnso::operator::{iterate, preservation_oracle, OracleConfig, SimplexPoint};
use qnso::Error;

#[derive(Parser, Debug)]
#[command(name = "qnso", version, about = "Quadratic operators on the simplex")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate the coefficient conditions of a cubic matrix.
    Check {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Search for a simplex point mapped outside the simplex.
    Preserve {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Iterate the operator and write the orbit as CSV.
    Simulate {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        init: Option<Vec<f64>>,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Locate and classify fixed points.
    FixedPoints {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Seed grid resolution per face.
        #[arg(long, default_value_t = 8)]
        grid: usize,
    },
    /// Period scan of the one-dimensional reduction over a parameter range.
    Bifurcation {
        #[command(flatten)]
        source: Source,
        /// Scanned parameter interval `lo,hi`; defaults to the model's range.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        range: Option<Vec<f64>>,
        #[arg(long, default_value_t = 200)]
        grid: usize,
        #[arg(long, default_value_t = 1000)]
        transient: usize,
        #[arg(long, default_value_t = 256)]
        keep: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate the top Lyapunov exponent.
    Lyapunov {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        init: Option<Vec<f64>>,
        #[arg(long, default_value_t = 100_000)]
        steps: usize,
        #[arg(long, default_value_t = 1000)]
        transient: usize,
    },
    /// Check invariance of the named sets of v2 or v3.
    Invariants {
        #[command(flatten)]
        source: Source,
        /// Also label this point.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        init: Option<Vec<f64>>,
        /// Trials per set.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Run the off-line convergence experiment for v3.
    Conjecture {
        #[command(flatten)]
        source: Source,
        /// Number of trials.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 10_000)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        /// Write the full report, including every trial, as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ModelName {
    Logistic,
    V1,
    Va,
    V2,
    V3,
}

#[derive(Args, Debug)]
struct Source {
    /// Built-in operator.
    #[arg(long, conflicts_with = "matrix")]
    model: Option<ModelName>,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    b: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    /// Cubic matrix in JSON form `{"m": .., "entries": [[[..]]]}`.
    #[arg(long)]
    matrix: Option<PathBuf>,
}

enum Operator {
    Model(ModelSpec),
    Matrix { matrix: CubicMatrix, name: String },
}

impl Operator {
    fn matrix(&self) -> CubicMatrix {
        match self {
            Operator::Model(spec) => spec.build(),
            Operator::Matrix { matrix, .. } => matrix.clone(),
        }
    }

    fn name(&self) -> String {
        match self {
            Operator::Model(spec) => spec.label(),
            Operator::Matrix { name, .. } => name.clone(),
        }
    }

    fn model(&self) -> anyhow::Result<&ModelSpec> {
        match self {
            Operator::Model(spec) => Ok(spec),
            Operator::Matrix { .. } => bail!("this command needs --model"),
        }
    }
}

fn need(value: Option<f64>, flag: &str, model: &str) -> anyhow::Result<f64> {
    value.ok_or_else(|| anyhow::anyhow!("--model {model} needs --{flag}"))
}

impl Source {
    fn resolve(&self) -> anyhow::Result<Operator> {
        match (&self.model, &self.matrix) {
            (None, None) => bail!("give exactly one of --model or --matrix"),
            (Some(_), Some(_)) => bail!("--model and --matrix are mutually exclusive"),
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let loaded = CubicMatrix::from_json_str(&text)?;
                if loaded.symmetrization_changed {
                    eprintln!("note: matrix was not symmetric in (i, j); using (P + P^T) / 2");
                }
                Ok(Operator::Matrix {
                    matrix: loaded.matrix,
                    name: path.display().to_string(),
                })
            }
            (Some(name), None) => {
                let spec = match name {
                    ModelName::Logistic => ModelSpec::logistic(need(self.mu, "mu", "logistic")?),
                    ModelName::V1 => ModelSpec::v1(
                        need(self.a, "a", "v1")?,
                        need(self.b, "b", "v1")?,
                        need(self.c, "c", "v1")?,
                    ),
                    ModelName::Va => ModelSpec::va(need(self.b, "b", "va")?),
                    ModelName::V2 => ModelSpec::v2(need(self.a, "a", "v2")?),
                    ModelName::V3 => ModelSpec::v3(need(self.a, "a", "v3")?),
                }?;
                Ok(Operator::Model(spec))
            }
        }
    }
}

/// A generic interior point, away from the low-period orbits of the
/// logistic map.
fn default_init(m: usize) -> SimplexPoint {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let raw: Vec<f64> = (0..m).map(|i| i as f64 + phi).collect();
    let total: f64 = raw.iter().sum();
    SimplexPoint::new(raw.into_iter().map(|v| v / total).collect()).expect("interior point")
}

fn init_point(init: &Option<Vec<f64>>, m: usize) -> anyhow::Result<SimplexPoint> {
    match init {
        None => Ok(default_init(m)),
        Some(v) if v.len() != m => bail!(format!("--init has {} coordinates, the operator has {m}", v.len())),
        Some(v) => Ok(SimplexPoint::new(v.clone())?),
    }
}

fn print_json<T: Serialize>(value: &T) -> anyhow::Result<()> {
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    serde_json::to_writer_pretty(&mut lock, value)?;
    writeln!(lock)?;
    Ok(())
}

fn with_output(path: &Option<PathBuf>, write: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> anyhow::Result<()> {
    match path {
        Some(p) => {
            let mut file = BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?);
            write(&mut file)?;
            file.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct WrittenTo<'a> {
    operator: String,
    rows: usize,
    out: &'a Path,
}

#[derive(Serialize)]
struct LyapunovOutput {
    operator: String,
    method: &'static str,
    estimate: LyapunovEstimate,
    chaos: Option<ChaosVerdict>,
}

#[derive(Serialize)]
struct InvariantsOutput {
    operator: String,
    point_label: Option<InvariantSetLabel>,
    passed: bool,
    sets: Vec<InvarianceReport>,
}

#[derive(Serialize)]
struct ConjectureSummary<'a> {
    label: &'a str,
    a: f64,
    trials: usize,
    steps: usize,
    tol: f64,
    seed: u64,
    fraction_converged: f64,
    max_final_distance: f64,
}

/// Outcome of a command that ran to completion.
enum Verdict {
    Positive,
    Negative,
}

fn scan_family(spec: &ModelSpec) -> anyhow::Result<(&'static str, f64, f64)> {
    Ok(match spec.kind() {
        ModelKind::Logistic { .. } => ("mu", 2.5, 4.0),
        ModelKind::Va { .. } => ("b", -1.0, -0.25),
        ModelKind::V2 { .. } => ("a", 0.0, 2.0),
        ModelKind::V1 { a, c, .. } => ("b", -(a * c).sqrt(), 1.0 + ((1.0 - a) * (1.0 - c)).sqrt()),
        ModelKind::V3 { .. } => bail!("v3 has no one-dimensional reduction to scan"),
    })
}

fn with_parameter(spec: &ModelSpec, v: f64) -> qnso::Result<ModelSpec> {
    ModelSpec::from_kind(match spec.kind() {
        ModelKind::Logistic { .. } => ModelKind::Logistic { mu: v },
        ModelKind::Va { .. } => ModelKind::Va { b: v },
        ModelKind::V2 { .. } => ModelKind::V2 { a: v },
        ModelKind::V1 { a, c, .. } => ModelKind::V1 { a, b: v, c },
        ModelKind::V3 { .. } => ModelKind::V3 { a: v },
    })
}

fn run(cli: Cli) -> anyhow::Result<Verdict> {
    match cli.command {
        Command::Check { source, tol } => {
            let op = source.resolve()?;
            let report = check_conditions(&op.matrix(), tol)?;
            print_json(&report)?;
            Ok(if report.necessary() { Verdict::Positive } else { Verdict::Negative })
        }
        Command::Preserve {
            source,
            samples,
            seed,
            tol,
        } => {
            let op = source.resolve()?;
            let verdict = preservation_oracle(&op.matrix(), &OracleConfig { samples, seed, tol });
            print_json(&verdict)?;
            Ok(if verdict.preserved { Verdict::Positive } else { Verdict::Negative })
        }
        Command::Simulate {
            source,
            init,
            steps,
            out,
        } => {
            let op = source.resolve()?;
            let p = op.matrix();
            let x0 = init_point(&init, p.dim())?;
            match iterate(&p, &x0, steps, op.name()) {
                Ok(traj) => {
                    with_output(&out, |w| traj.write_csv(w))?;
                    if let Some(path) = &out {
                        print_json(&WrittenTo {
                            operator: op.name(),
                            rows: traj.points.len(),
                            out: path,
                        })?;
                    }
                    Ok(Verdict::Positive)
                }
                Err(e @ Error::DomainEscape { .. }) => {
                    eprintln!("error: {e}");
                    Ok(Verdict::Negative)
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::FixedPoints { source, tol, grid } => {
            let op = source.resolve()?;
            let search = find_fixed_points(
                &op.matrix(),
                &FixedPointConfig {
                    seeds_per_face: grid,
                    tol,
                },
            )?;
            print_json(&search)?;
            Ok(Verdict::Positive)
        }
        Command::Bifurcation {
            source,
            range,
            grid,
            transient,
            keep,
            tol,
            out,
        } => {
            let op = source.resolve()?;
            let spec = *op.model()?;
            let (name, lo, hi) = scan_family(&spec)?;
            let (lo, hi) = match range.as_deref() {
                None => (lo, hi),
                Some([lo, hi]) => (*lo, *hi),
                Some(_) => bail!("--range takes two values lo,hi"),
            };
            let values = parameter_grid(lo, hi, grid)?;
            let config = ScanConfig {
                transient,
                keep,
                tol,
                ..ScanConfig::default()
            };
            let scan = bifurcation_scan(
                name,
                &values,
                |v| {
                    with_parameter(&spec, v).map(|s| s.reduction().expect("scanned models have a reduction"))
                },
                &config,
            )?;
            with_output(&out, |w| scan.write_csv(w))?;
            Ok(Verdict::Positive)
        }
        Command::Lyapunov {
            source,
            init,
            steps,
            transient,
        } => {
            let op = source.resolve()?;
            let p = op.matrix();
            let x0 = init_point(&init, p.dim())?;
            let output = match &op {
                Operator::Model(spec) if !matches!(spec.kind(), ModelKind::V2 { .. } | ModelKind::V3 { .. }) => {
                    let map = spec.reduction().expect("two-state models reduce");
                    let start = spec.reduced_coordinate(&x0)?.expect("two-state models reduce");
                    LyapunovOutput {
                        operator: op.name(),
                        method: "one-dimensional reduction",
                        estimate: lyapunov_1d(&map, start, steps, transient)?,
                        chaos: spec.chaos_verdict(&x0, steps, transient)?,
                    }
                }
                Operator::Model(spec) if matches!(spec.kind(), ModelKind::V2 { .. }) => {
                    let chaos = spec.chaos_verdict(&x0, steps, transient)?.expect("v2 reduces to a logistic map");
                    LyapunovOutput {
                        operator: op.name(),
                        method: "tangent iteration",
                        estimate: chaos.lyapunov.clone(),
                        chaos: Some(chaos),
                    }
                }
                _ => LyapunovOutput {
                    operator: op.name(),
                    method: "tangent iteration",
                    estimate: lyapunov_operator(&p, &x0, steps, transient)?,
                    chaos: None,
                },
            };
            print_json(&output)?;
            Ok(Verdict::Positive)
        }
        Command::Invariants {
            source,
            init,
            samples,
            seed,
            tol,
        } => {
            let op = source.resolve()?;
            let spec = *op.model()?;
            let labels: Vec<InvariantSetLabel> = match spec.kind() {
                ModelKind::V2 { .. } => [
                    V2Set::M0,
                    V2Set::M1,
                    V2Set::MOmega { omega: 0.25 },
                    V2Set::MOmega { omega: 1.0 },
                    V2Set::MOmega { omega: 4.0 },
                    V2Set::X,
                ]
                .into_iter()
                .map(InvariantSetLabel::V2)
                .collect(),
                ModelKind::V3 { .. } => [V3Set::M1, V3Set::M2, V3Set::M3, V3Set::M4, V3Set::M5]
                    .into_iter()
                    .map(InvariantSetLabel::V3)
                    .collect(),
                _ => bail!("invariant sets are defined for v2 and v3"),
            };
            let point_label = match &init {
                Some(_) => Some(classify_invariant_set(&spec, &init_point(&init, spec.dim())?, tol)?),
                None => None,
            };
            let sets = labels
                .into_iter()
                .map(|label| verify_invariance(&spec, label, samples, seed))
                .collect::<qnso::Result<Vec<_>>>()?;
            let passed = sets.iter().all(|r| r.passed);
            print_json(&InvariantsOutput {
                operator: op.name(),
                point_label,
                passed,
                sets,
            })?;
            Ok(if passed { Verdict::Positive } else { Verdict::Negative })
        }
        Command::Conjecture {
            source,
            samples,
            steps,
            seed,
            tol,
            out,
        } => {
            let op = source.resolve()?;
            let ModelKind::V3 { a } = op.model()?.kind() else {
                bail!("the experiment is defined for --model v3");
            };
            let report = conjecture_experiment(
                a,
                &ConjectureConfig {
                    trials: samples,
                    steps,
                    seed,
                    tol,
                },
            )?;
            if let Some(path) = &out {
                with_output(&out, |w| {
                    serde_json::to_writer_pretty(&mut *w, &report)?;
                    writeln!(w)
                })
                .with_context(|| format!("writing {}", path.display()))?;
            }
            print_json(&ConjectureSummary {
                label: &report.label,
                a: report.a,
                trials: report.trials,
                steps: report.steps,
                tol: report.tol,
                seed: report.seed,
                fraction_converged: report.fraction_converged,
                max_final_distance: report.max_final_distance,
            })?;
            Ok(Verdict::Positive)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let informational = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if informational { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    match run(cli) {
        Ok(Verdict::Positive) => ExitCode::SUCCESS,
        Ok(Verdict::Negative) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
