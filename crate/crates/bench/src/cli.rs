//! Command-line interface: `generate | solve | sweep | certify`.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use gpsp_core::datagen::{default_k, GenSpec};
use gpsp_core::gpsp::{SolverConfig, SubspaceMode, TolMode};
use gpsp_core::optimality::{certify_global, StationarityReport};
use gpsp_core::{biht, ModelParams};
use serde::Serialize;

use crate::manifest::{Example, IterateDump, Manifest};
use crate::record::{self, Solver, SummaryRow, HEADER, SUMMARY_HEADER};
use crate::run::{run_one, SolverSettings};
use crate::svg::{self, Series};
use crate::sweep::{run_sweep, ModelPoint, SweepPlan};
use crate::CliError;

type CliResult<T = ()> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "gpsp",
    version,
    about = "One-bit compressive sensing experiments with GPSP and BIHT"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write an instance manifest.
    Generate(GenerateArgs),
    /// Solve a manifest instance and print one CSV row per solver.
    Solve(SolveArgs),
    /// Run a parameter grid over many trials and write CSV results.
    Sweep(SweepArgs),
    /// Check a saved iterate for stationarity and global optimality.
    Certify(CertifyArgs),
}

fn parse_ratio(s: &str) -> Result<f64, String> {
    let r: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..1.0).contains(&r) {
        Ok(r)
    } else {
        Err(format!("{r} is outside [0, 1)"))
    }
}

fn parse_correlation(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is outside (0, 1)"))
    }
}

fn parse_nonnegative(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} must be finite and non-negative"))
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} must be finite and positive"))
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum, default_value = "independent")]
    pub example: Example,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub m: usize,
    /// Sparsity of the true signal.
    #[arg(long = "s", alias = "s-star")]
    pub s_star: usize,
    /// Sign-flip ratio in [0, 1).
    #[arg(long, default_value = "0", value_parser = parse_ratio)]
    pub r: f64,
    /// Row correlation in (0, 1); correlated example only.
    #[arg(long, value_parser = parse_correlation)]
    pub v: Option<f64>,
    #[arg(long, default_value_t = GenSpec::DEFAULT_NOISE_SIGMA, value_parser = parse_nonnegative)]
    pub noise_sigma: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Manifest path; stdout when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = SolverConfig::default().beta)]
    pub beta: f64,
    #[arg(long, default_value_t = SolverConfig::default().rho)]
    pub rho: f64,
    #[arg(long, default_value_t = SolverConfig::default().tol)]
    pub tol: f64,
    #[arg(long, default_value_t = SolverConfig::default().max_iter)]
    pub max_iter: usize,
    /// Compare the stopping tolerance to ‖u − z‖ as given instead of scaling it by ε/0.01.
    #[arg(long)]
    pub absolute_tol: bool,
    /// Use the unconstrained subspace formula, rejected when infeasible.
    #[arg(long)]
    pub closed_form_subspace: bool,
    /// Stop as soon as the tolerance is met.
    #[arg(long)]
    pub no_finish: bool,
    #[arg(long, default_value_t = biht::DEFAULT_STEP, value_parser = parse_nonnegative)]
    pub biht_step: f64,
    #[arg(long, default_value_t = biht::DEFAULT_MAX_ITER)]
    pub biht_max_iter: usize,
}

impl SolverArgs {
    pub fn settings(&self) -> CliResult<SolverSettings> {
        let gpsp = SolverConfig {
            beta: self.beta,
            rho: self.rho,
            tol: self.tol,
            max_iter: self.max_iter,
            tol_mode: if self.absolute_tol {
                TolMode::Absolute
            } else {
                TolMode::RelativeToEpsilon
            },
            subspace: if self.closed_form_subspace {
                SubspaceMode::ClosedForm
            } else {
                SubspaceMode::ActiveSet
            },
            finish_max_iter: if self.no_finish {
                0
            } else {
                SolverConfig::default().finish_max_iter
            },
            ..SolverConfig::default()
        };
        gpsp.validate()
            .map_err(|e| CliError::usage(format!("solver flags: {e}")))?;
        Ok(SolverSettings {
            gpsp,
            biht_step: self.biht_step,
            biht_max_iter: self.biht_max_iter,
        })
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Comma-separated list.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "gpsp")]
    pub solver: Vec<Solver>,
    #[arg(long, default_value_t = 1e-4, value_parser = parse_nonnegative)]
    pub eta: f64,
    #[arg(long, default_value_t = 0.01, value_parser = parse_positive)]
    pub epsilon: f64,
    /// Signal sparsity bound; the manifest's s_star when absent.
    #[arg(long)]
    pub s: Option<usize>,
    /// Sign-flip budget; ⌈0.01·m⌉ when absent.
    #[arg(long)]
    pub k: Option<usize>,
    /// Print the CSV header before the rows.
    #[arg(long)]
    pub header: bool,
    /// Write the raw GPSP iterate (x, y) as JSON for `certify`.
    #[arg(long)]
    pub dump_iterate: Option<PathBuf>,
    #[command(flatten)]
    pub solver_args: SolverArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum, default_value = "independent")]
    pub example: Example,
    #[arg(long, value_delimiter = ',', default_value = "500")]
    pub n: Vec<usize>,
    /// Measurement counts; defaults to n/2 via --m-ratio.
    #[arg(long, value_delimiter = ',', conflicts_with = "m_ratio")]
    pub m: Option<Vec<usize>>,
    /// Measurement counts as fractions of n.
    #[arg(long, value_delimiter = ',', value_parser = parse_positive)]
    pub m_ratio: Option<Vec<f64>>,
    /// True sparsity, also used as the solver's s.
    #[arg(long = "s", alias = "s-star", value_delimiter = ',', default_value = "5")]
    pub s_star: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.05", value_parser = parse_ratio)]
    pub r: Vec<f64>,
    /// Required for the correlated example.
    #[arg(long, value_delimiter = ',', value_parser = parse_correlation)]
    pub v: Option<Vec<f64>>,
    #[arg(long, default_value_t = GenSpec::DEFAULT_NOISE_SIGMA, value_parser = parse_nonnegative)]
    pub noise_sigma: f64,
    #[arg(long, value_delimiter = ',', default_value = "1e-4", value_parser = parse_nonnegative)]
    pub eta: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.01", value_parser = parse_positive)]
    pub epsilon: Vec<f64>,
    /// Sign-flip budgets; ⌈0.01·m⌉ when absent.
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<usize>>,
    /// Trials per grid point; 200 when every n ≤ 1000, else 20.
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "gpsp,biht")]
    pub solvers: Vec<Solver>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads; all logical cores when absent.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Per-trial CSV; the summary goes next to it as `<stem>.summary.csv`.
    #[arg(long, short)]
    pub output: PathBuf,
    /// Also write `<stem>.<variable>.svg` for each swept variable.
    #[arg(long)]
    pub svg: bool,
    #[command(flatten)]
    pub solver_args: SolverArgs,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Iterate JSON as written by `solve --dump-iterate`.
    #[arg(long)]
    pub iterate: PathBuf,
    /// Report path; stdout when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

pub fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Solve(a) => cmd_solve(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Certify(a) => cmd_certify(&a),
    }
}

fn emit(text: &str, path: Option<&Path>) -> CliResult {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => io::stdout().write_all(text.as_bytes()).context("writing stdout")?,
    }
    Ok(())
}

pub fn cmd_generate(a: &GenerateArgs) -> CliResult {
    let spec = GenSpec {
        n: a.n,
        m: a.m,
        s_star: a.s_star,
        r: a.r,
        v: a.v,
        noise_sigma: a.noise_sigma,
        seed: a.seed,
    };
    let manifest = Manifest::new(a.example, spec).map_err(CliError::Usage)?;
    emit(&manifest.to_json(), a.output.as_deref())
}

pub fn cmd_solve(a: &SolveArgs) -> CliResult {
    let settings = a.solver_args.settings()?;
    let manifest = Manifest::load(&a.manifest)?;
    let spec = manifest.spec;
    let k = a.k.unwrap_or_else(|| default_k(spec.m));
    let s = a.s.unwrap_or(spec.s_star);
    if s == 0 || s > spec.n {
        return Err(CliError::usage(format!("--s {s} outside [1, {}]", spec.n)));
    }
    if k > spec.m {
        return Err(CliError::usage(format!("--k {k} exceeds m = {}", spec.m)));
    }
    if a.dump_iterate.is_some() && !a.solver.contains(&Solver::Gpsp) {
        return Err(CliError::usage("--dump-iterate needs --solver gpsp"));
    }
    let params = ModelParams::new(a.epsilon, a.eta, s, k).map_err(|e| CliError::usage(e.to_string()))?;
    let (prob, truth) = manifest.instance()?;
    let mut rows = Vec::new();
    for &solver in &a.solver {
        let run = run_one(&spec, &prob, &truth, &params, solver, &settings)
            .map_err(|e| anyhow!("{} failed: {e}", solver.as_str()))?;
        if let (Solver::Gpsp, Some(path)) = (solver, &a.dump_iterate) {
            if let Some(res) = &run.result {
                let dump = IterateDump {
                    params,
                    x: res.x_raw.clone(),
                    y: res.y_raw.clone(),
                };
                emit(&dump.to_json(), Some(path))?;
            }
        }
        rows.push(run.row);
    }
    let mut buf = Vec::new();
    record::write_csv(&mut buf, &rows, HEADER).context("formatting CSV")?;
    let text = String::from_utf8(buf).expect("CSV is UTF-8");
    let body = if a.header {
        &text[..]
    } else {
        text.split_once('\n').map_or("", |(_, rest)| rest)
    };
    emit(body, None)
}

fn sweep_plan(a: &SweepArgs) -> CliResult<SweepPlan> {
    let vs: Vec<Option<f64>> = match (a.example, &a.v) {
        (Example::Independent, None) => vec![None],
        (Example::Independent, Some(_)) => return Err(CliError::usage("--v only applies to --example correlated")),
        (Example::Correlated, None) => return Err(CliError::usage("--v is required for --example correlated")),
        (Example::Correlated, Some(v)) => v.iter().copied().map(Some).collect(),
    };
    let mut instances = Vec::new();
    for &n in &a.n {
        let ms: Vec<usize> = match (&a.m, &a.m_ratio) {
            (Some(m), _) => m.clone(),
            (None, Some(ratios)) => ratios.iter().map(|q| (q * n as f64).round() as usize).collect(),
            (None, None) => vec![n / 2],
        };
        for &m in &ms {
            for &s_star in &a.s_star {
                for &r in &a.r {
                    for &v in &vs {
                        instances.push(GenSpec {
                            n,
                            m,
                            s_star,
                            r,
                            v,
                            noise_sigma: a.noise_sigma,
                            seed: 0,
                        });
                    }
                }
            }
        }
    }
    let ks: Vec<Option<usize>> = match &a.k {
        Some(ks) => ks.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let mut models = Vec::new();
    for &eta in &a.eta {
        for &epsilon in &a.epsilon {
            for &k in &ks {
                models.push(ModelPoint { epsilon, eta, k });
            }
        }
    }
    let trials = a
        .trials
        .unwrap_or(if a.n.iter().all(|&n| n <= 1000) { 200 } else { 20 });
    if a.workers == Some(0) {
        return Err(CliError::usage("--workers must be at least 1"));
    }
    let plan = SweepPlan {
        example: a.example,
        instances,
        models,
        trials,
        solvers: a.solvers.clone(),
        master_seed: a.seed,
        settings: a.solver_args.settings()?,
    };
    plan.validate().map_err(CliError::Usage)?;
    Ok(plan)
}

/// `<dir>/<stem><suffix>` for the output CSV at `path`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map_or_else(|| "sweep".into(), |s| s.to_string_lossy().into_owned());
    path.with_file_name(format!("{stem}{suffix}"))
}

pub fn cmd_sweep(a: &SweepArgs) -> CliResult {
    let plan = sweep_plan(a)?;
    let rows = run_sweep(&plan, a.workers)?;
    let write = |path: &Path, f: &dyn Fn(fs::File) -> csv::Result<()>| -> CliResult {
        let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        f(file).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    };
    write(&a.output, &|f| record::write_csv(f, &rows, HEADER))?;
    let summary = record::summarize(&rows);
    write(&sibling(&a.output, ".summary.csv"), &|f| {
        record::write_csv(f, &summary, SUMMARY_HEADER)
    })?;
    if a.svg {
        for (name, text) in sweep_charts(&summary, &plan.solvers) {
            emit(&text, Some(&sibling(&a.output, &format!(".{name}.svg"))))?;
        }
    }
    eprintln!(
        "{} rows over {} grid points x {} trials written to {}",
        rows.len(),
        plan.grid_len(),
        plan.trials,
        a.output.display()
    );
    Ok(())
}

type AxisFn = fn(&SummaryRow) -> Option<f64>;

const AXES: [(&str, AxisFn); 8] = [
    ("n", |r| Some(r.n as f64)),
    ("m", |r| Some(r.m as f64)),
    ("s_star", |r| Some(r.s_star as f64)),
    ("r", |r| Some(r.r)),
    ("v", |r| r.v),
    ("eta", |r| Some(r.eta)),
    ("epsilon", |r| Some(r.epsilon)),
    ("k", |r| Some(r.k as f64)),
];

/// One chart of mean SNR per swept variable, averaging over the other variables.
fn sweep_charts(summary: &[SummaryRow], solvers: &[Solver]) -> Vec<(&'static str, String)> {
    let mut charts = Vec::new();
    for (name, axis) in AXES {
        let mut values: Vec<f64> = summary.iter().filter_map(axis).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        if values.len() < 2 {
            continue;
        }
        let ticks: Vec<String> = values.iter().map(|v| format!("{v:?}")).collect();
        let series: Vec<Series> = solvers
            .iter()
            .map(|&solver| Series {
                name: solver.as_str().into(),
                values: values
                    .iter()
                    .map(|&x| {
                        let snrs: Vec<f64> = summary
                            .iter()
                            .filter(|r| r.solver == solver && axis(r) == Some(x))
                            .filter_map(|r| r.snr_db)
                            .filter(|s| s.is_finite())
                            .collect();
                        (!snrs.is_empty()).then(|| snrs.iter().sum::<f64>() / snrs.len() as f64)
                    })
                    .collect(),
            })
            .collect();
        charts.push((
            name,
            svg::line_chart(&format!("Mean SNR vs {name}"), name, &ticks, "SNR (dB)", &series),
        ));
    }
    charts
}

/// [`StationarityReport`] with infinities written as the string `"inf"`.
#[derive(Serialize)]
struct ReportJson<'a> {
    is_tau_stationary: bool,
    #[serde(serialize_with = "number")]
    tau_used: f64,
    #[serde(serialize_with = "number")]
    max_violation: f64,
    kkt_ok: bool,
    #[serde(serialize_with = "opt_number")]
    tau_star: Option<f64>,
    global_certified: bool,
    #[serde(serialize_with = "opt_number")]
    lambda_min_used: Option<f64>,
    degenerate: bool,
    zero_solution_excluded: Option<bool>,
    unavailable_reason: Option<&'a str>,
}

fn number<S: serde::Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
    } else {
        s.serialize_f64(*v)
    }
}

fn opt_number<S: serde::Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(x) => number(x, s),
        None => s.serialize_none(),
    }
}

pub fn report_json(r: &StationarityReport) -> String {
    let j = ReportJson {
        is_tau_stationary: r.is_tau_stationary,
        tau_used: r.tau_used,
        max_violation: r.max_violation,
        kkt_ok: r.kkt_ok,
        tau_star: r.tau_star,
        global_certified: r.global_certified,
        lambda_min_used: r.lambda_min_used,
        degenerate: r.degenerate,
        zero_solution_excluded: r.zero_solution_excluded,
        unavailable_reason: r.unavailable_reason.as_deref(),
    };
    let mut s = serde_json::to_string_pretty(&j).expect("report serializes");
    s.push('\n');
    s
}

pub fn cmd_certify(a: &CertifyArgs) -> CliResult {
    let manifest = Manifest::load(&a.manifest)?;
    let dump = IterateDump::load(&a.iterate)?;
    let (prob, _) = manifest.instance()?;
    let z = dump.iterate();
    if z.x.len() != prob.n() || z.y.len() != prob.m() {
        return Err(CliError::usage(format!(
            "iterate has {}+{} entries, instance needs {}+{}",
            z.x.len(),
            z.y.len(),
            prob.n(),
            prob.m()
        )));
    }
    let report = certify_global(&prob, &dump.params, &z).map_err(|e| anyhow!("certify failed: {e}"))?;
    emit(&report_json(&report), a.output.as_deref())
}
