//! Experiment runner for sums of random permutation matrices: one
//! subcommand per verification family, reproducible seeded configs, CSV or
//! JSON output suitable for plotting.
//!
//! Exit codes: 0 success, 2 invalid arguments, 3 resource limit exceeded,
//! 4 exact-identity verification failure (`verify-exact` only). Every error
//! prints one machine-parseable line `error kind=<kind> message="..."` to
//! stderr.

mod output;

use std::fs::File;
use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use output::{Cell, Meta, RowSet};
use permsum::digraph::{PermSum, WorkBudget, DEFAULT_DENSE_LIMIT};
use permsum::fields::{exp_moment_yd, exp_moment_yd_series};
use permsum::rng::RngStream;
use permsum::secular::newton_secular;
use permsum::spectra::{
    fluctuation_field, full_spectrum_small, ipr, spectral_gap_experiment, DegreeSchedule,
};
use permsum::stats::{
    ewens_trace_limit_test, poisson_clt_moment_check, trace_limit_test_fixed_d,
    trace_limit_test_growing_d, MomentReport,
};
use permsum::Error;

const RNG_ALGORITHM: &str = "ChaCha12 keyed by seed, 64-bit stream id = trial index";

#[derive(Parser)]
#[command(
    name = "permsum",
    version,
    about = "Monte Carlo experiments on sums of random permutation matrices"
)]
struct Cli {
    /// Worker threads for trial-parallel experiments (0 = all cores).
    /// Trial-to-worker assignment never affects output content.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// RNG seed; defaults to $PERMSPEC_SEED, then 0.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output path, '-' for stdout.
    #[arg(long, global = true, default_value = "-")]
    out: String,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Regime {
    Fixed,
    Growing,
}

#[derive(Subcommand)]
enum Command {
    /// Sample one sum of permutations and emit its permutations (1-based).
    Sample {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        /// Ewens parameter; uniform permutations when absent.
        #[arg(long)]
        theta: Option<f64>,
    },
    /// Exact traces tr(A^k), k = 1..k_max, across trials.
    Traces {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 3)]
        k_max: usize,
        #[arg(long, default_value_t = 100)]
        trials: u64,
    },
    /// Simple-cycle counts Q_l, l = 1..ell_max, across trials.
    Cycles {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 4)]
        ell_max: usize,
        #[arg(long, default_value_t = 100)]
        trials: u64,
    },
    /// Secular coefficients of det(I - zA) for one sampled matrix.
    Secular {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        /// Truncation degree (defaults to n).
        #[arg(long)]
        k_max: Option<usize>,
    },
    /// Exact small-n identities of the secular coefficients (d = 1):
    /// exits 4 if any identity fails.
    VerifyExact {
        #[arg(long)]
        n: usize,
    },
    /// Trace/cycle limit bands in the fixed- or growing-degree regime.
    Limits {
        #[arg(long, value_enum, default_value_t = Regime::Fixed)]
        regime: Regime,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 3)]
        k_max: usize,
        #[arg(long, default_value_t = 4)]
        ell_max: usize,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
    },
    /// Exponential moment of the divisor-coupled field: product form vs
    /// series form on a circle of evaluation points.
    Expmoment {
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0.8)]
        radius: f64,
        #[arg(long, default_value_t = 20)]
        points: usize,
    },
    /// Full dense spectrum of one sampled matrix (n <= 2000).
    Spectrum {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        /// Also compute right eigenvectors and report their localization.
        #[arg(long, default_value_t = false)]
        vectors: bool,
    },
    /// Second-eigenvalue exceedance experiment with Wilson interval.
    Gap {
        #[arg(long)]
        n: usize,
        /// Fixed degree (threshold sqrt(d) + eps). Mutually exclusive with
        /// --growing.
        #[arg(long)]
        d: Option<usize>,
        /// Degree schedule d = max(2, floor(n^(1/4))), threshold
        /// sqrt(d)(1 + eps).
        #[arg(long, default_value_t = false)]
        growing: bool,
        #[arg(long, default_value_t = 0.3)]
        eps: f64,
        #[arg(long, default_value_t = 50)]
        trials: u64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 400_000)]
        max_iter: u64,
    },
    /// Log-determinant fluctuation field on a square grid.
    OkmField {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        /// Half-width of the square window [-w, w]^2.
        #[arg(long, default_value_t = 5.0)]
        window: f64,
        #[arg(long, default_value_t = 100)]
        res: usize,
    },
    /// Ewens-distributed variant of the trace/cycle limit bands.
    Ewens {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        theta: f64,
        #[arg(long, default_value_t = 2)]
        k_max: usize,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
    },
    /// Standardized Poisson moments against Gaussian targets.
    Clt {
        /// Comma-separated increasing means.
        #[arg(long, value_delimiter = ',', default_values_t = vec![100.0, 10_000.0])]
        lambdas: Vec<f64>,
        #[arg(long, default_value_t = 4)]
        k_max: usize,
        #[arg(long, default_value_t = 20_000)]
        samples: u64,
    },
}

/// Resolved run configuration, echoed into every output file. Serializes
/// losslessly (field set is fixed; absent options stay null).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    subcommand: String,
    n: Option<usize>,
    d: Option<usize>,
    theta: Option<f64>,
    eps: Option<f64>,
    trials: Option<u64>,
    k_max: Option<usize>,
    ell_max: Option<usize>,
    window: Option<f64>,
    resolution: Option<usize>,
    radius: Option<f64>,
    points: Option<usize>,
    lambdas: Option<Vec<f64>>,
    samples: Option<u64>,
    regime: Option<String>,
    tol: Option<f64>,
    max_iter: Option<u64>,
    vectors: Option<bool>,
    seed: u64,
    threads: usize,
    output_path: String,
    format: String,
}

impl ExperimentConfig {
    fn new(subcommand: &str, seed: u64, threads: usize, out: &str, format: Format) -> Self {
        ExperimentConfig {
            subcommand: subcommand.to_string(),
            n: None,
            d: None,
            theta: None,
            eps: None,
            trials: None,
            k_max: None,
            ell_max: None,
            window: None,
            resolution: None,
            radius: None,
            points: None,
            lambdas: None,
            samples: None,
            regime: None,
            tol: None,
            max_iter: None,
            vectors: None,
            seed,
            threads,
            output_path: out.to_string(),
            format: match format {
                Format::Csv => "csv".into(),
                Format::Json => "json".into(),
            },
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            let (kind, code) = match &err {
                Error::InvalidArgument(_) => ("invalid-argument", 2),
                Error::ResourceLimit(_) => ("resource-limit", 3),
                Error::Domain(_) => ("domain", 2),
                Error::Numerical(_) => ("numerical", 1),
            };
            let msg = err.to_string().replace('"', "'");
            eprintln!("error kind={kind} message=\"{msg}\"");
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    }
    let seed = cli
        .seed
        .or_else(|| {
            std::env::var("PERMSPEC_SEED")
                .ok()
                .and_then(|s| s.parse().ok())
        })
        .unwrap_or(0);
    let mut config = ExperimentConfig::new(
        subcommand_name(&cli.command),
        seed,
        cli.threads,
        &cli.out,
        cli.format,
    );
    let mut notes = serde_json::Map::new();
    let mut exit = ExitCode::SUCCESS;

    let rows = match &cli.command {
        Command::Sample { n, d, theta } => {
            config.n = Some(*n);
            config.d = Some(*d);
            config.theta = *theta;
            let mut rng = RngStream::new(seed, 0);
            let a = match theta {
                Some(t) => PermSum::sample_ewens(*n, *d, *t, &mut rng)?,
                None => PermSum::sample_uniform(*n, *d, &mut rng)?,
            };
            notes.insert("simple".into(), Value::Bool(a.is_simple()));
            let mut rows = RowSet::new(vec!["perm", "i", "pi"]);
            for (q, p) in a.perms().iter().enumerate() {
                for i in 0..*n {
                    // 1-based in all file outputs.
                    rows.push(vec![
                        Cell::U(q as u64 + 1),
                        Cell::U(i as u64 + 1),
                        Cell::U(p.apply(i) as u64 + 1),
                    ]);
                }
            }
            rows
        }
        Command::Traces {
            n,
            d,
            k_max,
            trials,
        } => {
            config.n = Some(*n);
            config.d = Some(*d);
            config.k_max = Some(*k_max);
            config.trials = Some(*trials);
            let budget = WorkBudget::default();
            let mut rows = RowSet::new(vec!["trial", "k", "trace"]);
            for t in 0..*trials {
                let mut rng = RngStream::new(seed, t);
                let a = PermSum::sample_uniform(*n, *d, &mut rng)?;
                for k in 1..=*k_max {
                    let tr = a.trace_power(k, &budget)?;
                    rows.push(vec![
                        Cell::U(t),
                        Cell::U(k as u64),
                        Cell::Str(tr.to_string()),
                    ]);
                }
            }
            rows
        }
        Command::Cycles {
            n,
            d,
            ell_max,
            trials,
        } => {
            config.n = Some(*n);
            config.d = Some(*d);
            config.ell_max = Some(*ell_max);
            config.trials = Some(*trials);
            let budget = WorkBudget::default();
            let mut rows = RowSet::new(vec!["trial", "ell", "q"]);
            for t in 0..*trials {
                let mut rng = RngStream::new(seed, t);
                let a = PermSum::sample_uniform(*n, *d, &mut rng)?;
                let counts = a.cycle_counts(*ell_max, &budget)?;
                for ell in 1..=*ell_max {
                    rows.push(vec![Cell::U(t), Cell::U(ell as u64), Cell::U(counts.q(ell))]);
                }
            }
            rows
        }
        Command::Secular { n, d, k_max } => {
            let k = k_max.unwrap_or(*n).min(*n);
            config.n = Some(*n);
            config.d = Some(*d);
            config.k_max = Some(k);
            let mut rng = RngStream::new(seed, 0);
            let a = PermSum::sample_uniform(*n, *d, &mut rng)?;
            let traces = a.trace_powers_dense(k, DEFAULT_DENSE_LIMIT)?;
            let series = newton_secular(&traces, k, *n, *d)?;
            let mut rows = RowSet::new(vec!["k", "delta", "delta_exact"]);
            for i in 0..=k {
                rows.push(vec![
                    Cell::U(i as u64),
                    Cell::F(series.delta[i]),
                    Cell::Str(series.exact[i].to_string()),
                ]);
            }
            rows
        }
        Command::VerifyExact { n } => {
            config.n = Some(*n);
            config.d = Some(1);
            let report = permsum::secular::mean_secular_checks(*n, 1, 0, seed)?;
            let mut rows = RowSet::new(vec!["label", "value", "expected", "pass"]);
            for c in &report.exact_checks {
                rows.push(vec![
                    Cell::Str(c.label.clone()),
                    Cell::Str(format!("{}/{}", c.numerator, c.denominator)),
                    Cell::Str(format!(
                        "{}/{}",
                        c.expected_numerator, c.expected_denominator
                    )),
                    Cell::B(c.pass),
                ]);
            }
            notes.insert(
                "orthogonality_pairs".into(),
                Value::from(report.orthogonality_pairs),
            );
            if !report.all_pass {
                exit = ExitCode::from(4);
            }
            rows
        }
        Command::Limits {
            regime,
            n,
            d,
            k_max,
            ell_max,
            trials,
        } => {
            config.n = Some(*n);
            config.d = Some(*d);
            config.k_max = Some(*k_max);
            config.ell_max = Some(*ell_max);
            config.trials = Some(*trials);
            config.regime = Some(
                match regime {
                    Regime::Fixed => "fixed",
                    Regime::Growing => "growing",
                }
                .into(),
            );
            let mut rows = RowSet::new(vec![
                "label",
                "target",
                "estimate",
                "std_error",
                "z_score",
                "pass",
            ]);
            match regime {
                Regime::Fixed => {
                    let report = trace_limit_test_fixed_d(*n, *d, *k_max, *ell_max, *trials, seed)?;
                    for c in &report.checks {
                        push_moment_row(&mut rows, c);
                    }
                    notes.insert("tv_trace_poisson_d".into(), Value::from(report.tv_trace));
                    notes.insert("tv_q1_poisson_d".into(), Value::from(report.tv_q1));
                }
                Regime::Growing => {
                    let report = trace_limit_test_growing_d(*n, *d, *k_max, *trials, seed)?;
                    for c in &report.checks {
                        push_moment_row(&mut rows, c);
                    }
                }
            }
            rows
        }
        Command::Expmoment { d, radius, points } => {
            config.d = Some(*d);
            config.radius = Some(*radius);
            config.points = Some(*points);
            if !(*radius > 0.0 && *radius < 1.0) {
                return Err(Error::InvalidArgument("radius must be in (0, 1)".into()));
            }
            let mut rows = RowSet::new(vec![
                "re",
                "im",
                "product_re",
                "product_im",
                "series_re",
                "series_im",
                "abs_diff",
            ]);
            for j in 0..*points {
                let theta = 2.0 * std::f64::consts::PI * j as f64 / *points as f64;
                let z = Complex64::from_polar(*radius, theta);
                let p = exp_moment_yd(z, *d)?;
                let s = exp_moment_yd_series(z, *d)?;
                rows.push(vec![
                    Cell::F(z.re),
                    Cell::F(z.im),
                    Cell::F(p.re),
                    Cell::F(p.im),
                    Cell::F(s.re),
                    Cell::F(s.im),
                    Cell::F((p - s).norm()),
                ]);
            }
            rows
        }
        Command::Spectrum { n, d, vectors } => {
            config.n = Some(*n);
            config.d = Some(*d);
            config.vectors = Some(*vectors);
            let mut rng = RngStream::new(seed, 0);
            let a = PermSum::sample_uniform(*n, *d, &mut rng)?;
            let spectrum = full_spectrum_small(&a, *vectors)?;
            let mut rows = RowSet::new(vec!["idx", "re", "im", "modulus", "ipr"]);
            for (idx, v) in spectrum.eigenvalues.iter().enumerate() {
                let ipr_cell = match &spectrum.eigenvectors {
                    Some(vecs) => Cell::F(ipr(&vecs[idx])?),
                    None => Cell::Empty,
                };
                rows.push(vec![
                    Cell::U(idx as u64),
                    Cell::F(v.re),
                    Cell::F(v.im),
                    Cell::F(v.norm()),
                    ipr_cell,
                ]);
            }
            rows
        }
        Command::Gap {
            n,
            d,
            growing,
            eps,
            trials,
            tol,
            max_iter,
        } => {
            let schedule = match (d, growing) {
                (Some(_), true) => {
                    return Err(Error::InvalidArgument(
                        "--d and --growing are mutually exclusive".into(),
                    ))
                }
                (Some(d), false) => DegreeSchedule::Fixed(*d),
                (None, true) => DegreeSchedule::FourthRoot,
                (None, false) => {
                    return Err(Error::InvalidArgument(
                        "gap needs either --d or --growing".into(),
                    ))
                }
            };
            config.n = Some(*n);
            config.d = Some(schedule.degree(*n));
            config.eps = Some(*eps);
            config.trials = Some(*trials);
            config.tol = Some(*tol);
            config.max_iter = Some(*max_iter);
            config.regime = Some(if *growing { "growing" } else { "fixed" }.into());
            let report = spectral_gap_experiment(*n, schedule, *eps, *trials, *tol, *max_iter, seed)?;
            let mut rows = RowSet::new(vec!["trial", "lambda2", "threshold", "exceeded"]);
            for r in &report.rows {
                rows.push(vec![
                    Cell::U(r.trial),
                    Cell::F(r.lambda2),
                    Cell::F(r.threshold),
                    Cell::B(r.exceeded),
                ]);
            }
            // Summary row: the lambda2 column carries the exceedance
            // frequency, the exceeded column the exceedance count.
            rows.push(vec![
                Cell::Str("summary".into()),
                Cell::F(report.frequency),
                Cell::F(report.threshold),
                Cell::U(report.exceed_count),
            ]);
            notes.insert(
                "wilson_95".into(),
                serde_json::json!([report.wilson_95.0, report.wilson_95.1]),
            );
            rows
        }
        Command::OkmField { n, d, window, res } => {
            config.n = Some(*n);
            config.d = Some(*d);
            config.window = Some(*window);
            config.resolution = Some(*res);
            let mut rng = RngStream::new(seed, 0);
            let a = PermSum::sample_uniform(*n, *d, &mut rng)?;
            let field = fluctuation_field(&a, *window, *res, DEFAULT_DENSE_LIMIT)?;
            let mut rows = RowSet::new(vec!["re", "im", "psi", "flag"]);
            for (idx, &(re, im)) in field.points.iter().enumerate() {
                rows.push(vec![
                    Cell::F(re),
                    Cell::F(im),
                    Cell::F(field.psi[idx]),
                    Cell::B(field.flagged[idx]),
                ]);
            }
            rows
        }
        Command::Ewens {
            n,
            d,
            theta,
            k_max,
            trials,
        } => {
            config.n = Some(*n);
            config.d = Some(*d);
            config.theta = Some(*theta);
            config.k_max = Some(*k_max);
            config.trials = Some(*trials);
            let report = ewens_trace_limit_test(*n, *d, *theta, *k_max, *trials, seed)?;
            let mut rows = RowSet::new(vec![
                "label",
                "target",
                "estimate",
                "std_error",
                "z_score",
                "pass",
            ]);
            for c in &report.checks {
                push_moment_row(&mut rows, c);
            }
            rows
        }
        Command::Clt {
            lambdas,
            k_max,
            samples,
        } => {
            config.lambdas = Some(lambdas.clone());
            config.k_max = Some(*k_max);
            config.samples = Some(*samples);
            let report = poisson_clt_moment_check(lambdas, *k_max, *samples, seed)?;
            let mut rows = RowSet::new(vec![
                "lambda",
                "k",
                "analytic",
                "gaussian",
                "sampled",
                "std_error",
                "z_score",
                "pass",
            ]);
            for r in &report.rows {
                rows.push(vec![
                    Cell::F(r.lambda),
                    Cell::U(r.k as u64),
                    Cell::F(r.analytic),
                    Cell::F(r.gaussian),
                    Cell::F(r.sampled.estimate),
                    Cell::F(r.sampled.std_error),
                    Cell::F(r.sampled.z_score),
                    Cell::B(r.sampled.pass),
                ]);
            }
            rows
        }
    };

    let meta = Meta {
        tool: "permsum",
        version: env!("CARGO_PKG_VERSION"),
        rng_algorithm: RNG_ALGORITHM,
        seed,
        generated_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        notes,
    };
    write_output(&cli.out, cli.format, &meta, &config, &rows)
        .map_err(|e| Error::InvalidArgument(format!("writing output: {e}")))?;
    Ok(exit)
}

fn push_moment_row(rows: &mut RowSet, c: &MomentReport) {
    rows.push(vec![
        Cell::Str(c.label.clone()),
        Cell::F(c.target),
        Cell::F(c.estimate),
        Cell::F(c.std_error),
        Cell::F(c.z_score),
        Cell::B(c.pass),
    ]);
}

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::Sample { .. } => "sample",
        Command::Traces { .. } => "traces",
        Command::Cycles { .. } => "cycles",
        Command::Secular { .. } => "secular",
        Command::VerifyExact { .. } => "verify-exact",
        Command::Limits { .. } => "limits",
        Command::Expmoment { .. } => "expmoment",
        Command::Spectrum { .. } => "spectrum",
        Command::Gap { .. } => "gap",
        Command::OkmField { .. } => "okm-field",
        Command::Ewens { .. } => "ewens",
        Command::Clt { .. } => "clt",
    }
}

fn write_output(
    out: &str,
    format: Format,
    meta: &Meta,
    config: &ExperimentConfig,
    rows: &RowSet,
) -> std::io::Result<()> {
    let sink: Box<dyn Write> = if out == "-" {
        Box::new(std::io::stdout().lock())
    } else {
        Box::new(File::create(out)?)
    };
    match format {
        Format::Csv => output::emit_csv(sink, meta, config, rows),
        Format::Json => output::emit_json(sink, meta, config, rows),
    }
}
