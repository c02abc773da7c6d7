//! The primal-dual feasibility test and the search built on it.
//!
//! An application describes its problem through [`FeasibilityOracle`]: a cone
//! `K`, a width bound `ρ`, a trace bound `R` and a query that, given a
//! trace-one `p ∈ K` and a level `α`, either finds a dual point whose residual
//! has nonnegative inner product with `p`, or certifies that none exists.
//! [`solve_ftp`] drives the oracle with SCMWU; [`adaptive_search`] narrows a
//! bracket `[L, U]` around the optimum with a sequence of such tests.
//!
//! Two orientations are supported. Under [`Orientation::Max`] the dual
//! objective is minimized (a dual point certifies `OPT ≤ value`) and a
//! separation certifies `OPT > α`. Under [`Orientation::Min`] everything is
//! mirrored.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::clock::Stopwatch;
use crate::eja::{ConeDescriptor, EjaElement, EjaError};
use crate::math::{ceil, ln, sqrt};
use crate::scmwu::{ScmwuError, ScmwuState};

/// Relative slack on the width contract.
pub const WIDTH_SLACK: f64 = 1e-9;

/// Relative slack when a dual value is compared against `(1 ± ε)α`; the
/// shifted average lands on that level up to rounding.
const VERDICT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetaError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("invalid search range [{lower}, {upper}]")]
    InvalidRange { lower: f64, upper: f64 },
    #[error("residual norm {norm} exceeds width {width} at iteration {iteration} (alpha = {alpha})")]
    WidthViolation { norm: f64, width: f64, iteration: u64, alpha: f64 },
    #[error("search range collapsed below {floor} without a feasible level")]
    RangeCollapsed { floor: f64 },
    #[error("oracle failure: {0}")]
    Oracle(String),
    #[error(transparent)]
    Scmwu(#[from] ScmwuError),
    #[error(transparent)]
    Eja(#[from] EjaError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Dual values are upper bounds; separation raises the floor.
    Max,
    /// Dual values are lower bounds; separation lowers the ceiling.
    Min,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleOutcome {
    /// No dual point reaches level `α` against the queried `p`;
    /// `oracle_value < 0` is the optimal value of the oracle program.
    Separated { oracle_value: f64 },
    /// A dual point `y`; its residual in `K` (`Σ aⱼyⱼ − c` for
    /// [`Orientation::Max`], `c − Σ aⱼyⱼ` for [`Orientation::Min`]) has been
    /// written to the caller's buffer.
    Witness { y: Vec<f64> },
}

/// The application side of the meta-algorithm.
pub trait FeasibilityOracle {
    fn cone(&self) -> &Arc<ConeDescriptor>;

    fn orientation(&self) -> Orientation;

    /// `ρ`: every witness residual at level `alpha` has infinity norm at most
    /// this.
    fn width(&self, alpha: f64) -> f64;

    /// `R`, the trace bound along the identity direction.
    fn trace_bound(&self) -> f64;

    /// Number of dual variables.
    fn dual_dim(&self) -> usize;

    /// Solves the oracle program at `(p, alpha)`. On a witness every
    /// coordinate of `residual` is overwritten; on separation its contents
    /// are unspecified.
    fn query(&mut self, p: &EjaElement, alpha: f64, residual: &mut EjaElement) -> Result<OracleOutcome, MetaError>;

    /// A direction `δ` in dual space with `Σ aⱼδⱼ = e` and objective `R`.
    /// The final average is shifted by `±(εα/R)·δ` to absorb the regret.
    fn identity_direction(&self) -> Vec<f64>;

    /// Dual objective of `y`.
    fn objective(&self, y: &[f64]) -> f64;

    /// A certified bound on the optimum obtained from the running average
    /// `y_bar`: an upper bound under [`Orientation::Max`], a lower bound
    /// under [`Orientation::Min`]. `None` disables the shortcut and early
    /// stopping.
    fn progress(&mut self, y_bar: &[f64]) -> Option<f64> {
        let _ = y_bar;
        None
    }
}

/// Stop a feasibility test once the progress measure stalls.
///
/// When enabled, the step size is tuned to `horizon` iterations instead of
/// the theoretical bound `T`, and a stall only counts once `warmup`
/// iterations have run. A progress measure still at zero after warmup
/// counts as stalled. An affirmative exit waits until certified progress
/// beats `α` by `overshoot · ε`, which tightens the bracket the search
/// derives from it. Such a run no longer carries the regret guarantee,
/// so its dual verdicts rest on certified values alone. When disabled, every
/// test runs until a verdict or the full `T` iterations with
/// `η = √(ln r / T)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EarlyStopConfig {
    pub enabled: bool,
    pub delta: f64,
    pub patience: usize,
    pub horizon: u64,
    pub warmup: u64,
    /// Fraction of `ε` in `[0, 1]`.
    pub overshoot: f64,
}

impl Default for EarlyStopConfig {
    fn default() -> Self {
        Self { enabled: true, delta: 1e-4, patience: 10, horizon: 30, warmup: 10_000, overshoot: 0.5 }
    }
}

impl EarlyStopConfig {
    pub fn disabled() -> Self {
        Self { enabled: false, ..Self::default() }
    }

    fn validate(&self) -> Result<(), MetaError> {
        if !(self.delta > 0.0) {
            return Err(MetaError::InvalidParameter("delta must be positive"));
        }
        if self.patience == 0 {
            return Err(MetaError::InvalidParameter("patience must be at least 1"));
        }
        if self.horizon == 0 {
            return Err(MetaError::InvalidParameter("horizon must be at least 1"));
        }
        if self.warmup == 0 {
            return Err(MetaError::InvalidParameter("warmup must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.overshoot) {
            return Err(MetaError::InvalidParameter("overshoot must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// True iff the last `patience` relative changes `|fₜ − fₜ₋₁| / fₜ₋₁` are all
/// below `delta`. A zero predecessor yields no ratio and breaks the run.
pub fn early_stop_check(history: &[f64], delta: f64, patience: usize) -> bool {
    let mut tracker = StallTracker::new(delta, patience);
    history.iter().fold(false, |_, &f| tracker.push(f))
}

#[derive(Debug)]
struct StallTracker {
    delta: f64,
    patience: usize,
    prev: Option<f64>,
    streak: usize,
}

impl StallTracker {
    fn new(delta: f64, patience: usize) -> Self {
        Self { delta, patience, prev: None, streak: 0 }
    }

    fn push(&mut self, f: f64) -> bool {
        if let Some(prev) = self.prev {
            if prev != 0.0 && (f - prev).abs() / prev.abs() < self.delta {
                self.streak += 1;
            } else {
                self.streak = 0;
            }
        }
        self.prev = Some(f);
        self.streak >= self.patience
    }
}

/// How a dual verdict was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FtpExit {
    /// All `T` iterations ran.
    Completed,
    /// The application's certified progress reached its target: `α`, or
    /// `α` improved by `overshoot · ε` under early stopping.
    Affirmative,
    /// The progress measure stalled.
    EarlyStopped,
    /// A user iteration cap below `T` was reached.
    IterationCap,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FtpResult {
    DualFeasible {
        /// The shifted average when the regret bound backs it (a full run at
        /// the theoretical step size, or any run without a progress
        /// measure), the plain average otherwise.
        y_tilde: Vec<f64>,
        /// The bound on the optimum this verdict supports: the certified
        /// progress value, tightened by the objective of the shifted average
        /// when the regret bound holds.
        value: f64,
        iterations: u64,
        exit: FtpExit,
    },
    PrimalCertificate {
        p: EjaElement,
        alpha: f64,
        oracle_value: f64,
        iterations: u64,
    },
}

impl FtpResult {
    pub fn iterations(&self) -> u64 {
        match self {
            FtpResult::DualFeasible { iterations, .. } | FtpResult::PrimalCertificate { iterations, .. } => *iterations,
        }
    }
}

/// `⌈4R²ρ² ln r / (ε²α²)⌉`, at least 1.
pub fn iteration_bound(trace_bound: f64, width: f64, rank: usize, eps: f64, alpha: f64) -> u64 {
    let lr = ln(rank as f64);
    let t = ceil(4.0 * trace_bound * trace_bound * width * width * lr / (eps * eps * alpha * alpha));
    if t >= u64::MAX as f64 {
        u64::MAX
    } else if t < 1.0 {
        1
    } else {
        t as u64
    }
}

/// Runs one `α`-feasibility test.
///
/// `iteration_cap` lowers the theoretical iteration bound; reaching it is
/// reported as [`FtpExit::IterationCap`]. Separations are always certified.
/// The progress measure is evaluated at the running average after every
/// iteration; the test ends affirmatively once it reaches the target of
/// [`FtpExit::Affirmative`].
pub fn solve_ftp<O: FeasibilityOracle + ?Sized>(
    oracle: &mut O,
    alpha: f64,
    eps: f64,
    stopping: &EarlyStopConfig,
    iteration_cap: Option<u64>,
) -> Result<FtpResult, MetaError> {
    Ok(run_ftp(oracle, alpha, eps, stopping, iteration_cap)?.0)
}

fn run_ftp<O: FeasibilityOracle + ?Sized>(
    oracle: &mut O,
    alpha: f64,
    eps: f64,
    stopping: &EarlyStopConfig,
    iteration_cap: Option<u64>,
) -> Result<(FtpResult, u64), MetaError> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(MetaError::InvalidParameter("alpha must be positive"));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(MetaError::InvalidParameter("eps must be positive"));
    }
    stopping.validate()?;
    let cone = oracle.cone().clone();
    let rank = cone.rank();
    let rho = oracle.width(alpha);
    let big_r = oracle.trace_bound();
    if !(rho > 0.0 && big_r > 0.0) {
        return Err(MetaError::InvalidParameter("width and trace bound must be positive"));
    }
    let bound = iteration_bound(big_r, rho, rank, eps, alpha);
    let lr = ln(rank as f64);
    let horizon = if stopping.enabled { stopping.horizon.min(bound) } else { bound };
    let eta = if lr > 0.0 { sqrt(lr / horizon as f64).min(1.0) } else { 1.0 };
    let limit = iteration_cap.map_or(bound, |c| c.clamp(1, bound));
    let orientation = oracle.orientation();
    let sign = match orientation {
        Orientation::Max => 1.0,
        Orientation::Min => -1.0,
    };
    // Certified progress reaching the target settles the test. With early
    // stopping the target lies past α, and a run that stalls short of it
    // still reports its certified value.
    let lead = if stopping.enabled { stopping.overshoot * eps } else { 0.0 };
    let target = alpha * (1.0 - sign * lead);

    let mut learner = ScmwuState::new(cone.clone(), eta)?;
    let mut residual = EjaElement::zeros(cone);
    let m = oracle.dual_dim();
    let mut y_sum = vec![0.0; m];
    let mut y_bar = vec![0.0; m];
    let mut stall = StallTracker::new(stopping.delta, stopping.patience);
    let inv_rho = 1.0 / rho;
    let mut last_progress = None;
    let mut moved = false;

    let mut t = 0u64;
    while t < limit {
        t += 1;
        let y = match oracle.query(learner.current(), alpha, &mut residual)? {
            OracleOutcome::Separated { oracle_value } => {
                let p = learner.current().clone();
                return Ok((FtpResult::PrimalCertificate { p, alpha, oracle_value, iterations: t }, bound));
            }
            OracleOutcome::Witness { y } => y,
        };
        if y.len() != m {
            return Err(MetaError::Oracle(alloc::format!("witness has {} coordinates, expected {m}", y.len())));
        }
        // The learner is discarded on a violation, so checking after the
        // fused update is safe.
        let (lo, hi) = learner.accumulate(&residual, inv_rho)?;
        let norm = lo.abs().max(hi.abs());
        if !(norm <= rho * (1.0 + WIDTH_SLACK)) {
            return Err(MetaError::WidthViolation { norm, width: rho, iteration: t, alpha });
        }
        for (s, v) in y_sum.iter_mut().zip(&y) {
            *s += v;
        }
        let inv_t = 1.0 / t as f64;
        for (b, s) in y_bar.iter_mut().zip(&y_sum) {
            *b = s * inv_t;
        }
        if let Some(f) = oracle.progress(&y_bar) {
            last_progress = Some(f);
            if sign * (f - target) <= 0.0 {
                let result =
                    FtpResult::DualFeasible { y_tilde: y_bar, value: f, iterations: t, exit: FtpExit::Affirmative };
                return Ok((result, bound));
            }
            // Ratios are undefined at zero, so a measure that never left
            // zero counts as stalled too.
            moved |= f != 0.0;
            let stalled = stall.push(f) || !moved;
            if stalled && stopping.enabled && t >= stopping.warmup {
                let result =
                    FtpResult::DualFeasible { y_tilde: y_bar, value: f, iterations: t, exit: FtpExit::EarlyStopped };
                return Ok((result, bound));
            }
        }
    }
    let exit = if limit < bound { FtpExit::IterationCap } else { FtpExit::Completed };
    let backed = exit == FtpExit::Completed && horizon == bound;
    let result = match last_progress {
        Some(f) if !backed => FtpResult::DualFeasible { y_tilde: y_bar, value: f, iterations: t, exit },
        _ => shifted(oracle, y_bar, alpha, eps, t, exit, last_progress),
    };
    Ok((result, bound))
}

fn shifted<O: FeasibilityOracle + ?Sized>(
    oracle: &O,
    mut y: Vec<f64>,
    alpha: f64,
    eps: f64,
    iterations: u64,
    exit: FtpExit,
    progress: Option<f64>,
) -> FtpResult {
    let step = match oracle.orientation() {
        Orientation::Max => eps * alpha / oracle.trace_bound(),
        Orientation::Min => -eps * alpha / oracle.trace_bound(),
    };
    for (v, d) in y.iter_mut().zip(oracle.identity_direction()) {
        *v += step * d;
    }
    let mut value = oracle.objective(&y);
    if let Some(f) = progress {
        value = match oracle.orientation() {
            Orientation::Max => value.min(f),
            Orientation::Min => value.max(f),
        };
    }
    FtpResult::DualFeasible { y_tilde: y, value, iterations, exit }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    /// Target relative accuracy of the final bracket.
    pub eps: f64,
    pub stopping: EarlyStopConfig,
    /// Per-test iteration cap below the theoretical bound.
    pub iteration_cap: Option<u64>,
    /// Under [`Orientation::Min`] with no feasible level yet, give up once
    /// the ceiling drops below this.
    pub collapse_floor: Option<f64>,
}

impl SearchConfig {
    pub fn new(eps: f64) -> Self {
        Self { eps, stopping: EarlyStopConfig::default(), iteration_cap: None, collapse_floor: None }
    }
}

/// How a single feasibility test ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestVerdict {
    Separated,
    /// A dual point reached `(1 ± ε)α` or better.
    Feasible(FtpExit),
    /// A dual run ended short of `(1 ± ε)α`. The search treats the level as
    /// separated without certifying it.
    Inconclusive(FtpExit),
}

/// One step of the adaptive search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestSummary {
    pub alpha: f64,
    pub eps: f64,
    /// The theoretical iteration bound `T` for this test.
    pub bound: u64,
    pub iterations: u64,
    pub verdict: TestVerdict,
    /// The search bracket after the test.
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Every test reached a certified verdict and the bracket converged.
    RangeConverged,
    /// At least one test was concluded by the stall heuristic.
    EarlyStopped,
    /// At least one test hit the user iteration cap.
    IterationCap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    /// Certified bounds on the optimum.
    pub lower: f64,
    pub upper: f64,
    /// The final search bracket, which also reflects inconclusive tests.
    pub bracket: (f64, f64),
    pub tests: Vec<TestSummary>,
    pub total_iterations: u64,
    pub termination: Termination,
    /// The iterate from the last separation, if any.
    pub last_certificate: Option<(f64, EjaElement)>,
}

/// Narrows `[lower, upper]` by repeated feasibility tests.
///
/// Under [`Orientation::Max`] each step tests `α = L + (U − L)/3` with
/// `ε = (U − L)/(3α)`: a separation sets `L = α`, a dual verdict sets `U` to
/// its value, which is at most `(1 + ε)α` unless the test was inconclusive.
/// An inconclusive test also moves `L` to `α` in the search bracket but not
/// in the certified one. [`Orientation::Min`] tests `α = L + 2(U − L)/3` and
/// mirrors every rule. The bracket shrinks to at most two thirds per step
/// and the search stops when `U − L < eps·L` (`eps·α` while `L = 0`).
pub fn adaptive_search<O: FeasibilityOracle + ?Sized>(
    oracle: &mut O,
    lower: f64,
    upper: f64,
    config: &SearchConfig,
) -> Result<SearchOutcome, MetaError> {
    if !(lower >= 0.0 && upper > lower && upper.is_finite()) {
        return Err(MetaError::InvalidRange { lower, upper });
    }
    if !(config.eps > 0.0 && config.eps < 1.0) {
        return Err(MetaError::InvalidParameter("eps must lie in (0, 1)"));
    }
    let orientation = oracle.orientation();
    if lower == 0.0 && orientation == Orientation::Max {
        return Err(MetaError::InvalidRange { lower, upper });
    }
    let (mut lo, mut hi) = (lower, upper);
    let (mut cert_lo, mut cert_hi) = (lower, upper);
    let mut tests = Vec::new();
    let mut total = 0u64;
    let mut termination = Termination::RangeConverged;
    let mut last_certificate = None;

    while !converged(lo, hi, config.eps, tests.last().map(|t: &TestSummary| t.alpha)) {
        if let (Some(floor), Orientation::Min) = (config.collapse_floor, orientation) {
            if cert_lo == 0.0 && hi < floor {
                return Err(MetaError::RangeCollapsed { floor });
            }
        }
        let width = hi - lo;
        let alpha = match orientation {
            Orientation::Max => lo + width / 3.0,
            Orientation::Min => lo + 2.0 * width / 3.0,
        };
        let eps = width / (3.0 * alpha);
        let (result, bound) = run_ftp(oracle, alpha, eps, &config.stopping, config.iteration_cap)?;
        let iterations = result.iterations();
        total += iterations;
        let verdict = match result {
            FtpResult::PrimalCertificate { p, .. } => {
                match orientation {
                    Orientation::Max => {
                        cert_lo = cert_lo.max(alpha);
                        lo = lo.max(alpha);
                    }
                    Orientation::Min => {
                        cert_hi = cert_hi.min(alpha);
                        hi = hi.min(alpha);
                    }
                }
                last_certificate = Some((alpha, p));
                TestVerdict::Separated
            }
            FtpResult::DualFeasible { exit, value, .. } => {
                match exit {
                    FtpExit::EarlyStopped if termination == Termination::RangeConverged => {
                        termination = Termination::EarlyStopped
                    }
                    FtpExit::IterationCap => termination = Termination::IterationCap,
                    _ => {}
                }
                // A certified value beyond a presumed bound overrides it.
                let reached = match orientation {
                    Orientation::Max => {
                        cert_hi = cert_hi.min(value);
                        hi = hi.min(value);
                        if hi < lo {
                            lo = cert_lo.min(hi);
                        }
                        value <= (1.0 + eps) * alpha * (1.0 + VERDICT_SLACK)
                    }
                    Orientation::Min => {
                        cert_lo = cert_lo.max(value);
                        lo = lo.max(value);
                        if lo > hi {
                            hi = cert_hi.max(lo);
                        }
                        value >= (1.0 - eps) * alpha * (1.0 - VERDICT_SLACK)
                    }
                };
                if reached {
                    TestVerdict::Feasible(exit)
                } else {
                    match orientation {
                        Orientation::Max => lo = lo.max(alpha).min(hi),
                        Orientation::Min => hi = hi.min(alpha).max(lo),
                    }
                    TestVerdict::Inconclusive(exit)
                }
            }
        };
        tests.push(TestSummary { alpha, eps, bound, iterations, verdict, lower: lo, upper: hi });
    }
    Ok(SearchOutcome {
        lower: cert_lo,
        upper: cert_hi,
        bracket: (lo, hi),
        tests,
        total_iterations: total,
        termination,
        last_certificate,
    })
}

fn converged(lo: f64, hi: f64, eps: f64, last_alpha: Option<f64>) -> bool {
    if lo > 0.0 {
        hi - lo < eps * lo
    } else {
        last_alpha.is_some_and(|a| hi - lo < eps * a)
    }
}

/// The outcome of a full solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport<S> {
    /// Primal objective bound (a lower bound on the optimum for a
    /// minimization, an upper bound for a maximization).
    pub primal_value: f64,
    pub dual_value: f64,
    pub solution: S,
    pub total_iterations: u64,
    pub search_steps: usize,
    pub wall_seconds: f64,
    pub termination: Termination,
    pub tests: Vec<TestSummary>,
}

impl<S> SolveReport<S> {
    pub fn gap(&self) -> f64 {
        (self.primal_value - self.dual_value).abs()
    }
}

pub(crate) fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let clock = Stopwatch::start();
    let out = f();
    (out, clock.seconds())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stall_examples() {
        assert!(early_stop_check(&[1.0; 11], 1e-4, 10));
        assert!(!early_stop_check(&[1.0; 10], 1e-4, 10));
        let falling: Vec<f64> = (0..50).map(|k| libm::pow(0.99, k as f64)).collect();
        assert!(!early_stop_check(&falling, 1e-4, 10));
        let zeros: Vec<f64> = (0..40).map(|k| if k % 3 == 0 { 0.0 } else { 1.0 }).collect();
        assert!(!early_stop_check(&zeros, 1e-4, 10));
        assert!(!early_stop_check(&[0.0; 30], 1e-4, 1));
    }

    #[test]
    fn stall_needs_consecutive_hits() {
        let mut h = vec![1.0; 8];
        h.push(2.0);
        h.extend_from_slice(&[2.0; 9]);
        assert!(!early_stop_check(&h, 1e-4, 10));
        h.push(2.0);
        h.push(2.0);
        assert!(early_stop_check(&h, 1e-4, 10));
    }

    #[test]
    fn bound_formula() {
        // SES-shaped: R = √2, ρ = 3D/√2 with D = 2, n = 100 points.
        let rho = 6.0 / core::f64::consts::SQRT_2;
        let t = iteration_bound(core::f64::consts::SQRT_2, rho, 198, 0.1, 1.0);
        assert_eq!(t, libm::ceil(36.0 * 4.0 * libm::log(198.0) / 0.01) as u64);
        assert_eq!(iteration_bound(1.0, 1.0, 1, 0.1, 1.0), 1);
    }
}
