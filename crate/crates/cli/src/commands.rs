use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;

use clap::Args;
use priceflow_core::certify::{
    certify_series, estimate_constants, Constants, FitOutcome, Infeasibility, DEFAULT_TOLERANCE,
};
use priceflow_core::dual::num_oracle;
use priceflow_core::engine::run;
use priceflow_core::spectra::{self, f_eval, f_eval_int};
use serde::Serialize;

use crate::config::RunConfigFile;
use crate::trace_csv::{read_trace, write_trace};
use crate::{CliError, ExitStatus};

/// Environment variable overriding the certification slack.
pub const TOLERANCE_ENV: &str = "PRICEFLOW_TOLERANCE";

/// Relative rate error below which a run counts as converged to the oracle.
pub const ORACLE_RATE_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Run configuration (JSON).
    pub config: PathBuf,
    /// Where to write the trace CSV.
    #[arg(long, required_unless_present = "print_config")]
    pub out: Option<PathBuf>,
    /// Compare final rates against the independent optimum.
    #[arg(long)]
    pub oracle: bool,
    /// Override the delay seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the number of trace rows.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Override the step size.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Override the staleness bound.
    #[arg(long)]
    pub t0: Option<usize>,
    /// Print the resolved config with all defaults and exit.
    #[arg(long)]
    pub print_config: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CertifyArgs {
    /// Trace CSV produced by `simulate`.
    pub trace: PathBuf,
    #[arg(long)]
    pub gamma: f64,
    #[arg(long)]
    pub t0: usize,
    #[arg(long, requires = "a2", conflicts_with = "fit")]
    pub a1: Option<f64>,
    #[arg(long, requires = "a1", conflicts_with = "fit")]
    pub a2: Option<f64>,
    /// Fit the smallest certifying constants to the trace.
    #[arg(long, required_unless_present = "a1")]
    pub fit: bool,
    /// Report path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SpectraArgs {
    /// Dimension of y.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub n: u32,
    /// Comma-separated y values; requires --z.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "z")]
    pub y: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true, requires = "y")]
    pub z: Option<f64>,
}

fn tolerance_from_env() -> Result<f64, CliError> {
    match std::env::var(TOLERANCE_ENV) {
        Ok(v) => match v.trim().parse::<f64>() {
            Ok(t) if t >= 0.0 && t.is_finite() => Ok(t),
            _ => Err(CliError::Args(format!("{TOLERANCE_ENV}=`{v}` is not a nonnegative number"))),
        },
        Err(_) => Ok(DEFAULT_TOLERANCE),
    }
}

pub fn simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> Result<ExitStatus, CliError> {
    let mut file = RunConfigFile::load(&args.config)?;
    if let Some(seed) = args.seed {
        file.engine.seed = seed;
    }
    if let Some(steps) = args.steps {
        file.engine.steps = steps;
    }
    if let Some(gamma) = args.gamma {
        file.engine.gamma = gamma;
    }
    if let Some(t0) = args.t0 {
        file.engine.t0 = t0;
    }
    let cfg = file.resolve()?;
    if args.print_config {
        writeln!(stdout, "{}", cfg.to_pretty_json()).map_err(CliError::stdout)?;
        return Ok(ExitStatus::Ok);
    }

    let trace = run(&cfg.network, &cfg.file.engine, &cfg.initial_prices)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let out = args.out.as_ref().expect("clap enforces --out");
    let f = File::create(out).map_err(|e| CliError::io(out, e))?;
    write_trace(&trace, BufWriter::new(f))?;

    let last = trace.last().expect("at least one row");
    let final_pi = trace
        .rows
        .iter()
        .rev()
        .find_map(|r| r.pi_norm_sq)
        .map_or(0.0, f64::sqrt);
    let mut line = format!(
        "rows={} final_D={:.12e} final_pi_norm={:.6e} diverged={}",
        trace.len(),
        last.dual,
        final_pi,
        trace.diverged()
    );
    if let Some(d) = &trace.divergence {
        line.push_str(&format!(" divergence={d:?}"));
    }
    if args.oracle {
        let sol = num_oracle(&cfg.network).map_err(|e| CliError::Config(format!("oracle: {e}")))?;
        let err = last
            .x
            .iter()
            .zip(sol.x_star.iter())
            .map(|(x, s)| ((x - s) / s).abs())
            .fold(0.0, f64::max);
        line.push_str(&format!(
            " oracle_max_rel_err={err:.6e} converged={}",
            err <= ORACLE_RATE_TOLERANCE
        ));
    }
    writeln!(stdout, "{line}").map_err(CliError::stdout)?;

    Ok(if trace.diverged() {
        ExitStatus::Fail
    } else {
        ExitStatus::Ok
    })
}

pub fn certify(args: &CertifyArgs, stdout: &mut dyn Write) -> Result<ExitStatus, CliError> {
    let tolerance = tolerance_from_env()?;
    let f = File::open(&args.trace).map_err(|e| CliError::io(&args.trace, e))?;
    let table = read_trace(BufReader::new(f))?;
    let (d, pis) = table.certification_series()?;

    let (constants, fit) = if args.fit {
        let fit = estimate_constants(&d, &pis, args.t0, args.gamma)
            .map_err(|e| CliError::Trace(e.to_string()))?;
        let k = fit.constants().unwrap_or(Constants {
            a1: 0.0,
            a2: 0.0,
            t0: args.t0,
            gamma: args.gamma,
        });
        (k, Some(fit))
    } else {
        let k = Constants::new(
            args.a1.expect("clap enforces --a1"),
            args.a2.expect("clap enforces --a2"),
            args.t0,
            args.gamma,
        )
        .map_err(|e| CliError::Args(e.to_string()))?;
        (k, None)
    };

    let mut report =
        certify_series(&d, &pis, &constants, tolerance).map_err(|e| CliError::Trace(e.to_string()))?;
    report.fitted_constants = fit.as_ref().and_then(FitOutcome::constants);
    report.fit = fit;

    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    match &args.out {
        Some(path) => {
            std::fs::write(path, json + "\n").map_err(|e| CliError::io(path, e))?;
            let worst = report
                .per_step_margins
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            writeln!(
                stdout,
                "steps={} verdict={:?} min_margin={:.6e} total_margin={:.6e} gamma_max={:?}",
                report.per_step_margins.len(),
                report.verdict,
                worst,
                report.total_margin,
                report.gamma_max
            )
            .map_err(CliError::stdout)?;
        }
        None => writeln!(stdout, "{json}").map_err(CliError::stdout)?,
    }

    let fit_failed = matches!(
        report.fit,
        Some(FitOutcome::Infeasible(
            Infeasibility::UncoveredIncrease { .. } | Infeasibility::StepTooLarge { .. }
        ))
    );
    Ok(if report.verdict != priceflow_core::Verdict::Holds || fit_failed {
        ExitStatus::Fail
    } else {
        ExitStatus::Ok
    })
}

#[derive(Debug, Serialize)]
struct SpectraOutput {
    n: usize,
    eigenvalues: Vec<f64>,
    numeric_eigenvalues: Vec<f64>,
    min_eigenvalue: f64,
    convex: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    f: Option<f64>,
}

fn as_integers(v: &[f64]) -> Option<Vec<i64>> {
    v.iter()
        .map(|&x| (x.fract() == 0.0 && x.abs() < 1e15).then_some(x as i64))
        .collect()
}

pub fn spectra(args: &SpectraArgs, stdout: &mut dyn Write) -> Result<ExitStatus, CliError> {
    let n = args.n as usize;
    let spec = spectra::eigenvalues(n).map_err(|e| CliError::Args(e.to_string()))?;
    let numeric = spectra::numeric_eigenvalues(n).map_err(|e| CliError::Args(e.to_string()))?;
    let f = match (&args.y, args.z) {
        (Some(y), Some(z)) => {
            if y.len() != n {
                return Err(CliError::Args(format!("--y has {} values, --n is {n}", y.len())));
            }
            let exact = as_integers(y).zip(as_integers(&[z]));
            Some(match exact {
                Some((yi, zi)) => f_eval_int(&yi, zi[0]) as f64,
                None => f_eval(y, z),
            })
        }
        _ => None,
    };
    let out = SpectraOutput {
        n,
        convex: spectra::convexity_verdict(n),
        min_eigenvalue: spec.min_eigenvalue,
        eigenvalues: spec.eigenvalues,
        numeric_eigenvalues: numeric,
        f,
    };
    writeln!(
        stdout,
        "{}",
        serde_json::to_string_pretty(&out).expect("spectra output serializes")
    )
    .map_err(CliError::stdout)?;
    Ok(ExitStatus::Ok)
}
