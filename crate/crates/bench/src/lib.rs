//! Instance files, generators, solver runs with JSON reports, verification
//! against the reference baselines, and parameter sweeps.

pub mod gen;
pub mod instance;

use std::str::FromStr;

use rayon::ThreadPoolBuilder;
use serde::{Deserialize, Serialize};
use symcone_core::baselines::{gilbert_baseline, meb_baseline};
use symcone_core::ses::{solve_ses, SesError};
use symcone_core::svm::{solve_svm, SvmError};
use symcone_core::{EarlyStopConfig, MetaError, SearchConfig, Termination};
use thiserror::Error;

pub use gen::SesDist;
pub use instance::{Instance, Problem};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid size: {0}")]
    InvalidSize(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed report: {0}")]
    Report(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("infeasible input: {0}")]
    Infeasible(String),
    #[error("internal assertion: {0}")]
    Internal(String),
    #[error("error exceeds the bound")]
    VerifyFailed,
}

impl BenchError {
    /// 1 for a failed verification, 2 for bad input, 3 for an infeasible
    /// instance, 4 for a broken solver invariant.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::VerifyFailed => 1,
            BenchError::Infeasible(_) => 3,
            BenchError::Internal(_) => 4,
            _ => 2,
        }
    }
}

fn meta_error(e: MetaError) -> BenchError {
    match e {
        MetaError::RangeCollapsed { .. } => BenchError::Infeasible(e.to_string()),
        MetaError::InvalidParameter(_) => BenchError::InvalidConfig(e.to_string()),
        other => BenchError::Internal(other.to_string()),
    }
}

impl From<SesError> for BenchError {
    fn from(e: SesError) -> Self {
        match e {
            SesError::Meta(m) => meta_error(m),
            SesError::InvalidEps(_) => BenchError::InvalidConfig(e.to_string()),
            other => BenchError::InvalidInstance(other.to_string()),
        }
    }
}

impl From<SvmError> for BenchError {
    fn from(e: SvmError) -> Self {
        match e {
            SvmError::Meta(m) => meta_error(m),
            SvmError::InfeasibleInput => BenchError::Infeasible(e.to_string()),
            SvmError::InvalidEps(_) => BenchError::InvalidConfig(e.to_string()),
            SvmError::NonPositivePart => BenchError::Internal(e.to_string()),
            other => BenchError::InvalidInstance(other.to_string()),
        }
    }
}

pub fn read_file(path: &str) -> Result<String, BenchError> {
    std::fs::read_to_string(path).map_err(|source| BenchError::Io { path: path.into(), source })
}

pub fn write_file(path: &str, contents: &str) -> Result<(), BenchError> {
    std::fs::write(path, contents).map_err(|source| BenchError::Io { path: path.into(), source })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Threads {
    /// One worker per available core.
    Auto,
    Count(usize),
}

impl FromStr for Threads {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(Threads::Auto);
        }
        match s.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Threads::Count(n)),
            _ => Err(format!("expected `auto` or a positive integer, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub eps: f64,
    pub delta: f64,
    pub patience: usize,
    /// Instance generation seed; solves themselves are deterministic.
    pub seed: u64,
    pub threads: Threads,
    pub iteration_cap: Option<u64>,
    pub early_stop: bool,
    pub horizon: u64,
    pub warmup: u64,
    pub overshoot: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let es = EarlyStopConfig::default();
        Self {
            eps: 0.01,
            delta: es.delta,
            patience: es.patience,
            seed: 0,
            threads: Threads::Auto,
            iteration_cap: None,
            early_stop: true,
            horizon: es.horizon,
            warmup: es.warmup,
            overshoot: es.overshoot,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::InvalidConfig(m));
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return bad(format!("eps must lie in (0, 1), got {}", self.eps));
        }
        if self.delta.is_nan() || self.delta <= 0.0 {
            return bad(format!("delta must be positive, got {}", self.delta));
        }
        if self.patience < 1 || self.horizon < 1 || self.warmup < 1 {
            return bad("patience, horizon and warmup must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.overshoot) {
            return bad(format!("overshoot must lie in [0, 1], got {}", self.overshoot));
        }
        if self.iteration_cap == Some(0) {
            return bad("iteration cap must be at least 1".into());
        }
        Ok(())
    }

    pub fn search_config(&self) -> SearchConfig {
        let stopping = EarlyStopConfig {
            enabled: self.early_stop,
            delta: self.delta,
            patience: self.patience,
            horizon: self.horizon,
            warmup: self.warmup,
            overshoot: self.overshoot,
        };
        SearchConfig { stopping, iteration_cap: self.iteration_cap, ..SearchConfig::new(self.eps) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminationKind {
    RangeConverged,
    EarlyStopped,
    IterationCap,
}

impl From<Termination> for TerminationKind {
    fn from(t: Termination) -> Self {
        match t {
            Termination::RangeConverged => TerminationKind::RangeConverged,
            Termination::EarlyStopped => TerminationKind::EarlyStopped,
            Termination::IterationCap => TerminationKind::IterationCap,
        }
    }
}

/// One solve. For SES `value_dual` is the returned radius and
/// `value_primal` a certified lower bound on the optimum; for SVM
/// `value_dual` is the certified margin and `value_primal` the distance of
/// the returned hull pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub problem: Problem,
    pub n: usize,
    pub d: usize,
    pub eps: f64,
    pub value_primal: f64,
    pub value_dual: f64,
    pub gap: f64,
    pub iterations_total: u64,
    pub search_steps: usize,
    pub wall_ms: f64,
    pub termination: TerminationKind,
    pub threads: usize,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> Result<String, BenchError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.serialize(self)?;
        let bytes = w.into_inner().map_err(|e| BenchError::Internal(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        Ok(serde_json::from_str(text)?)
    }
}

fn pool(threads: Threads) -> Result<rayon::ThreadPool, BenchError> {
    let mut b = ThreadPoolBuilder::new();
    if let Threads::Count(n) = threads {
        b = b.num_threads(n);
    }
    b.build().map_err(|e| BenchError::Internal(e.to_string()))
}

/// Solves `inst` on a dedicated pool of `config.threads` workers.
pub fn run(inst: &Instance, config: &RunConfig) -> Result<Report, BenchError> {
    config.validate()?;
    let search = config.search_config();
    let pool = pool(config.threads)?;
    let threads = pool.current_num_threads();
    let (primal, dual, iterations, steps, secs, termination) = pool.install(|| -> Result<_, BenchError> {
        Ok(match inst {
            Instance::Ses(s) => {
                let r = solve_ses(s, &search)?;
                (r.primal_value, r.dual_value, r.total_iterations, r.search_steps, r.wall_seconds, r.termination)
            }
            Instance::Svm(s) => {
                let r = solve_svm(s, &search)?;
                (r.primal_value, r.dual_value, r.total_iterations, r.search_steps, r.wall_seconds, r.termination)
            }
        })
    })?;
    Ok(Report {
        problem: inst.problem(),
        n: inst.len(),
        d: inst.dim(),
        eps: config.eps,
        value_primal: primal,
        value_dual: dual,
        gap: (primal - dual).abs(),
        iterations_total: iterations,
        search_steps: steps,
        wall_ms: secs * 1e3,
        termination: termination.into(),
        threads,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    /// Largest acceptable error.
    pub bound: f64,
    /// Relative tolerance of the enclosing-ball baseline.
    pub eps_base: f64,
    /// Frank–Wolfe gap tolerance of the polytope-distance baseline.
    pub gap_tol: f64,
    /// Refuse instances with more points than this.
    pub max_n: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { bound: 0.01, eps_base: 1e-3, gap_tol: 1e-6, max_n: 100_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verification {
    /// The baseline optimum `f*`.
    pub baseline: f64,
    /// `(ĥ − f*)/f*` for SES, `(f* − ĥ)/f*` for SVM, with `ĥ` the report's
    /// `value_dual`. Negative means the solver beat the baseline.
    pub error: f64,
    pub baseline_converged: bool,
    pub pass: bool,
}

pub fn baseline_value(inst: &Instance, opts: &VerifyOptions) -> Result<(f64, bool), BenchError> {
    if inst.len() > opts.max_n {
        return Err(BenchError::InvalidSize(format!("{} points exceed the baseline limit {}", inst.len(), opts.max_n)));
    }
    let r = match inst {
        Instance::Ses(s) => {
            meb_baseline(s.centers(), s.dim(), s.radii(), opts.eps_base).map(|b| (b.value, b.converged))
        }
        Instance::Svm(s) => {
            gilbert_baseline(s.p_rows(), s.q_rows(), s.dim(), opts.gap_tol).map(|b| (b.value, b.converged))
        }
    };
    r.map_err(|e| BenchError::InvalidInstance(e.to_string()))
}

pub fn verify(inst: &Instance, report: &Report, opts: &VerifyOptions) -> Result<Verification, BenchError> {
    if report.problem != inst.problem() || report.n != inst.len() || report.d != inst.dim() {
        return Err(BenchError::InvalidConfig("report does not describe this instance".into()));
    }
    let (baseline, converged) = baseline_value(inst, opts)?;
    let error = relative_error(inst.problem(), report.value_dual, baseline);
    Ok(Verification { baseline, error, baseline_converged: converged, pass: error <= opts.bound })
}

pub fn relative_error(problem: Problem, value: f64, baseline: f64) -> f64 {
    match problem {
        Problem::Ses => (value - baseline) / baseline,
        Problem::Svm => (baseline - value) / baseline,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub problem: Problem,
    /// Total point counts; SVM splits each evenly between the two sets.
    pub sizes: Vec<usize>,
    pub dims: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub dist: SesDist,
    pub gap: f64,
    /// Skip the baseline above this many points.
    pub baseline_max_n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub size: usize,
    pub dim: usize,
    pub rep: usize,
    pub seed: u64,
    pub wall_ms: Option<f64>,
    pub iterations: Option<u64>,
    pub value: Option<f64>,
    pub error: Option<f64>,
    /// `ok` or the failure message.
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepMean {
    pub size: usize,
    pub dim: usize,
    pub reps_ok: usize,
    pub wall_ms: Option<f64>,
    pub iterations: Option<f64>,
    pub value: Option<f64>,
    pub error: Option<f64>,
}

pub const SWEEP_HEADER: [&str; 9] = ["size", "dim", "rep", "seed", "wall_ms", "iterations", "value", "error", "status"];
pub const MEAN_HEADER: [&str; 7] = ["size", "dim", "reps_ok", "wall_ms", "iterations", "value", "error"];

/// The instance seed for one grid cell.
pub fn cell_seed(base: u64, size: usize, dim: usize, rep: usize) -> u64 {
    base.wrapping_add((size as u64).wrapping_mul(1_000_003))
        .wrapping_add((dim as u64).wrapping_mul(10_007))
        .wrapping_add(rep as u64)
}

pub fn sweep_instance(spec: &SweepSpec, size: usize, dim: usize, seed: u64) -> Result<Instance, BenchError> {
    Ok(match spec.problem {
        Problem::Ses => Instance::Ses(gen::ses(size, dim, seed, spec.dist)?),
        Problem::Svm => {
            let n1 = size / 2;
            Instance::Svm(gen::svm(n1, size - n1, dim, seed, spec.gap)?.0)
        }
    })
}

/// Runs every `(size, dim, rep)` cell; a failing cell is recorded in its
/// row and the sweep moves on.
pub fn sweep(spec: &SweepSpec, config: &RunConfig, verify_opts: &VerifyOptions) -> (Vec<SweepRow>, Vec<SweepMean>) {
    let mut rows = Vec::new();
    let mut means = Vec::new();
    for &size in &spec.sizes {
        for &dim in &spec.dims {
            let start = rows.len();
            for rep in 0..spec.reps {
                let seed = cell_seed(spec.seed, size, dim, rep);
                let mut row = SweepRow {
                    size,
                    dim,
                    rep,
                    seed,
                    wall_ms: None,
                    iterations: None,
                    value: None,
                    error: None,
                    status: "ok".into(),
                };
                let outcome = sweep_instance(spec, size, dim, seed).and_then(|inst| {
                    let report = run(&inst, config)?;
                    let error = if inst.len() <= spec.baseline_max_n {
                        let (b, _) = baseline_value(&inst, verify_opts)?;
                        Some(relative_error(spec.problem, report.value_dual, b))
                    } else {
                        None
                    };
                    Ok((report, error))
                });
                match outcome {
                    Ok((report, error)) => {
                        row.wall_ms = Some(report.wall_ms);
                        row.iterations = Some(report.iterations_total);
                        row.value = Some(report.value_dual);
                        row.error = error;
                    }
                    Err(e) => row.status = e.to_string(),
                }
                rows.push(row);
            }
            means.push(mean_of(size, dim, &rows[start..]));
        }
    }
    (rows, means)
}

fn mean_of(size: usize, dim: usize, rows: &[SweepRow]) -> SweepMean {
    fn avg(xs: impl Iterator<Item = f64>) -> Option<f64> {
        let (s, k) = xs.fold((0.0, 0usize), |(s, k), x| (s + x, k + 1));
        (k > 0).then(|| s / k as f64)
    }
    let ok: Vec<&SweepRow> = rows.iter().filter(|r| r.status == "ok").collect();
    SweepMean {
        size,
        dim,
        reps_ok: ok.len(),
        wall_ms: avg(ok.iter().filter_map(|r| r.wall_ms)),
        iterations: avg(ok.iter().filter_map(|r| r.iterations.map(|i| i as f64))),
        value: avg(ok.iter().filter_map(|r| r.value)),
        error: avg(ok.iter().filter_map(|r| r.error)),
    }
}

/// CSV with a header line even when `records` is empty.
pub fn to_csv<T: Serialize>(header: &[&str], records: &[T]) -> Result<String, BenchError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for r in records {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| BenchError::Internal(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
