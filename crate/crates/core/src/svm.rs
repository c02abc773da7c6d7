//! Hard-margin SVM and polytope distance over the nonnegative orthant.
//!
//! For point sets `P` (`n₁` rows) and `Q` (`n₂` rows) the margin problem
//! `max s₁ + s₂` subject to `Pᵀw ≥ s₁·1`, `−Qᵀw ≥ s₂·1`, `‖w‖ ≤ 1` has one
//! orthant constraint per point. Its Lagrangian counterpart is the distance
//! between the convex hulls, and the SCMWU iterate `p = (μ; γ)` is, after
//! normalizing each part, a feasible pair for it. With `D` the largest point
//! norm the optimum lies in `(0, 2D]` and the oracle width is at most `2D`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::eja::{ConeDescriptor, EjaElement};
use crate::math::{ceil, dot, ln, norm2, sum};
use crate::meta::{
    adaptive_search, timed, FeasibilityOracle, MetaError, OracleOutcome, Orientation, SearchConfig, SolveReport,
};
use crate::par;

/// The search gives up once the ceiling falls below this fraction of `2D`
/// without any positive margin.
pub const COLLAPSE_FRACTION: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SvmError {
    #[error("both point sets must be nonempty")]
    EmptySet,
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("{0} coordinates do not form rows of dimension {1}")]
    ShapeMismatch(usize, usize),
    #[error("point {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("all points are at the origin")]
    Degenerate,
    #[error("nonpositive part sum in a primal iterate")]
    NonPositivePart,
    #[error("eps must lie in (0, 1), got {0}")]
    InvalidEps(f64),
    #[error("no positive margin found; the point sets are not linearly separable")]
    InfeasibleInput,
    #[error(transparent)]
    Meta(MetaError),
}

impl From<MetaError> for SvmError {
    fn from(e: MetaError) -> Self {
        match e {
            MetaError::RangeCollapsed { .. } => SvmError::InfeasibleInput,
            other => SvmError::Meta(other),
        }
    }
}

/// Two point sets in `R^d`, rows stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmInstance {
    dim: usize,
    p: Vec<f64>,
    q: Vec<f64>,
    d_max: f64,
}

impl SvmInstance {
    pub fn new(dim: usize, p: Vec<f64>, q: Vec<f64>) -> Result<Self, SvmError> {
        if dim == 0 {
            return Err(SvmError::ZeroDimension);
        }
        for set in [&p, &q] {
            if set.len() % dim != 0 {
                return Err(SvmError::ShapeMismatch(set.len(), dim));
            }
        }
        if p.is_empty() || q.is_empty() {
            return Err(SvmError::EmptySet);
        }
        let mut d_max: f64 = 0.0;
        for (i, row) in p.chunks(dim).chain(q.chunks(dim)).enumerate() {
            if row.iter().any(|x| !x.is_finite()) {
                return Err(SvmError::NonFinite(i));
            }
            d_max = d_max.max(norm2(row));
        }
        if d_max == 0.0 {
            return Err(SvmError::Degenerate);
        }
        Ok(Self { dim, p, q, d_max })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n1(&self) -> usize {
        self.p.len() / self.dim
    }

    pub fn n2(&self) -> usize {
        self.q.len() / self.dim
    }

    pub fn len(&self) -> usize {
        self.n1() + self.n2()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest point norm `D`.
    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn p_rows(&self) -> &[f64] {
        &self.p
    }

    pub fn q_rows(&self) -> &[f64] {
        &self.q
    }

    pub fn p_point(&self, i: usize) -> &[f64] {
        &self.p[i * self.dim..(i + 1) * self.dim]
    }

    pub fn q_point(&self, j: usize) -> &[f64] {
        &self.q[j * self.dim..(j + 1) * self.dim]
    }

    /// `Σ weights[i]·row_i` over chunks, combined in order.
    fn combine(&self, rows: &[f64], weights: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let parts = par::map_chunks(weights.len(), |r| {
            let mut acc = vec![0.0; d];
            for i in r {
                let wi = weights[i];
                for (a, x) in acc.iter_mut().zip(&rows[i * d..(i + 1) * d]) {
                    *a += wi * x;
                }
            }
            acc
        });
        par::sum_vectors(parts, d)
    }

    /// `(min over P of uᵀw, max over Q of vᵀw)`.
    fn projections(&self, w: &[f64]) -> (f64, f64) {
        let d = self.dim;
        let extreme = |rows: &[f64], init: f64, pick: fn(f64, f64) -> f64| {
            par::map_chunks(rows.len() / d, |r| r.map(|i| dot(&rows[i * d..(i + 1) * d], w)).fold(init, pick))
                .into_iter()
                .fold(init, pick)
        };
        (extreme(&self.p, f64::INFINITY, f64::min), extreme(&self.q, f64::NEG_INFINITY, f64::max))
    }
}

/// `2D`.
pub fn svm_width(inst: &SvmInstance) -> f64 {
    2.0 * inst.d_max
}

/// `⌈64D² ln n / (ε²α²)⌉`.
pub fn svm_iteration_bound(d_max: f64, n: usize, eps: f64, alpha: f64) -> u64 {
    let t = ceil(64.0 * d_max * d_max * ln(n as f64) / (eps * eps * alpha * alpha));
    if t < 1.0 {
        1
    } else {
        t as u64
    }
}

/// Certified margin of the hyperplane normal `w`, clamped at 0.
pub fn svm_progress(inst: &SvmInstance, w: &[f64]) -> f64 {
    let nrm = norm2(w);
    if nrm == 0.0 {
        return 0.0;
    }
    let (lo, hi) = inst.projections(w);
    ((lo - hi) / nrm).max(0.0)
}

/// Normalizes the two parts of a primal iterate onto their simplices.
pub fn extract_pd(p: &[f64], n1: usize) -> Result<(Vec<f64>, Vec<f64>), SvmError> {
    let (mu, gamma) = p.split_at(n1);
    let (tm, tg): (f64, f64) = (sum(mu), sum(gamma));
    if !(tm > 0.0 && tg > 0.0) {
        return Err(SvmError::NonPositivePart);
    }
    Ok((mu.iter().map(|x| x / tm).collect(), gamma.iter().map(|x| x / tg).collect()))
}

/// `‖Pμ − Qγ‖₂`.
pub fn pd_distance(inst: &SvmInstance, mu: &[f64], gamma: &[f64]) -> f64 {
    let a = inst.combine(&inst.p, mu);
    let b = inst.combine(&inst.q, gamma);
    norm2(&a.iter().zip(&b).map(|(x, y)| x - y).collect::<Vec<_>>())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmSolution {
    /// Unit normal of the separating hyperplane.
    pub w: Vec<f64>,
    pub margin: f64,
    pub mu: Vec<f64>,
    pub gamma: Vec<f64>,
    pub pd_distance: f64,
    /// `D² / pd_distance²`.
    pub excentricity: f64,
}

/// The analytical oracle for [`SvmInstance`]. Besides answering queries it
/// keeps the best margin among averaged normals and the closest hull pair
/// among all queried iterates.
#[derive(Debug)]
pub struct SvmOracle<'a> {
    inst: &'a SvmInstance,
    cone: Arc<ConeDescriptor>,
    best_margin: Option<(f64, Vec<f64>)>,
    best_pd: Option<(f64, EjaElement)>,
}

impl<'a> SvmOracle<'a> {
    pub fn new(inst: &'a SvmInstance) -> Self {
        let cone = ConeDescriptor::orthant(inst.len()).expect("both sets are nonempty");
        Self { inst, cone: Arc::new(cone), best_margin: None, best_pd: None }
    }

    pub fn best_margin(&self) -> Option<(f64, &[f64])> {
        self.best_margin.as_ref().map(|(m, w)| (*m, w.as_slice()))
    }

    pub fn best_pd_distance(&self) -> Option<f64> {
        self.best_pd.as_ref().map(|b| b.0)
    }
}

impl FeasibilityOracle for SvmOracle<'_> {
    fn cone(&self) -> &Arc<ConeDescriptor> {
        &self.cone
    }

    fn orientation(&self) -> Orientation {
        Orientation::Min
    }

    fn width(&self, alpha: f64) -> f64 {
        assert!(alpha <= 2.0 * self.inst.d_max * (1.0 + 1e-12), "level {alpha} above 2D");
        svm_width(self.inst)
    }

    fn trace_bound(&self) -> f64 {
        2.0
    }

    fn dual_dim(&self) -> usize {
        self.inst.dim + 2
    }

    fn query(&mut self, p: &EjaElement, alpha: f64, residual: &mut EjaElement) -> Result<OracleOutcome, MetaError> {
        let inst = self.inst;
        let d = inst.dim;
        let d_max = inst.d_max;
        let (mu, gamma) = p.coords().split_at(inst.n1());
        let pm = inst.combine(&inst.p, mu);
        let qg = inst.combine(&inst.q, gamma);
        let (tm, tg): (f64, f64) = (sum(mu), sum(gamma));

        if tm > 0.0 && tg > 0.0 {
            let gap: Vec<f64> = pm.iter().zip(&qg).map(|(a, b)| a / tm - b / tg).collect();
            let dist = norm2(&gap);
            if self.best_pd.as_ref().is_none_or(|b| dist < b.0) {
                self.best_pd = Some((dist, p.clone()));
            }
        }

        let g: Vec<f64> = pm.iter().zip(&qg).map(|(a, b)| a - b).collect();
        let g_norm = norm2(&g);
        let w: Vec<f64> = if g_norm > 0.0 {
            g.iter().map(|x| x / g_norm).collect()
        } else {
            let mut e1 = vec![0.0; d];
            e1[0] = 1.0;
            e1
        };
        let s1 = if tm <= tg { d_max } else { alpha - d_max };
        let s2 = alpha - s1;
        let value = dot(&g, &w) - tm * s1 - tg * s2;
        if value < 0.0 {
            return Ok(OracleOutcome::Separated { oracle_value: value });
        }
        let n1 = inst.n1();
        let mins = par::map_chunks_mut(residual.coords_mut(), 1, |first, out| {
            let mut m = (f64::INFINITY, f64::INFINITY);
            for (k, o) in out.iter_mut().enumerate() {
                let i = first + k;
                if i < n1 {
                    *o = dot(inst.p_point(i), &w) - s1;
                    m.0 = m.0.min(*o);
                } else {
                    *o = -dot(inst.q_point(i - n1), &w) - s2;
                    m.1 = m.1.min(*o);
                }
            }
            m
        });
        // min Pᵀw − max Qᵀw, read off the residual.
        let (a, b) = mins.iter().fold((f64::INFINITY, f64::INFINITY), |acc, m| (acc.0.min(m.0), acc.1.min(m.1)));
        let margin = (a + b + alpha).max(0.0);
        if margin > 0.0 && self.best_margin.as_ref().is_none_or(|bm| margin > bm.0) {
            self.best_margin = Some((margin, w.clone()));
        }
        let mut y = w;
        y.push(s1);
        y.push(s2);
        Ok(OracleOutcome::Witness { y })
    }

    fn identity_direction(&self) -> Vec<f64> {
        let mut delta = vec![0.0; self.inst.dim + 2];
        delta[self.inst.dim] = 1.0;
        delta[self.inst.dim + 1] = 1.0;
        delta
    }

    fn objective(&self, y: &[f64]) -> f64 {
        y[self.inst.dim] + y[self.inst.dim + 1]
    }

    fn progress(&mut self, y_bar: &[f64]) -> Option<f64> {
        let w = &y_bar[..self.inst.dim];
        let f = svm_progress(self.inst, w);
        if f > 0.0 && self.best_margin.as_ref().is_none_or(|b| f > b.0) {
            self.best_margin = Some((f, w.to_vec()));
        }
        Some(f)
    }
}

/// Approximates the maximum margin and the hull distance to relative
/// accuracy `config.eps`.
///
/// `dual_value` is the certified margin of `solution.w` and `primal_value`
/// the distance of the returned hull pair; the optimum lies between them.
pub fn solve_svm(inst: &SvmInstance, config: &SearchConfig) -> Result<SolveReport<SvmSolution>, SvmError> {
    if !(config.eps > 0.0 && config.eps < 1.0) {
        return Err(SvmError::InvalidEps(config.eps));
    }
    let (report, wall_seconds) = timed(|| solve_untimed(inst, config));
    let mut report = report?;
    report.wall_seconds = wall_seconds;
    Ok(report)
}

fn solve_untimed(inst: &SvmInstance, config: &SearchConfig) -> Result<SolveReport<SvmSolution>, SvmError> {
    let upper = 2.0 * inst.d_max;
    let mut config = *config;
    config.collapse_floor = Some(config.collapse_floor.unwrap_or(COLLAPSE_FRACTION * upper));
    let mut oracle = SvmOracle::new(inst);
    let outcome = adaptive_search(&mut oracle, 0.0, upper, &config)?;
    let (_, w) = oracle.best_margin.take().ok_or(SvmError::InfeasibleInput)?;
    let (mu, gamma) = match oracle.best_pd.take() {
        Some((_, p)) => extract_pd(p.coords(), inst.n1())?,
        None => (vec![1.0 / inst.n1() as f64; inst.n1()], vec![1.0 / inst.n2() as f64; inst.n2()]),
    };
    // The normal through the closest hull pair is a second candidate.
    let a = inst.combine(&inst.p, &mu);
    let b = inst.combine(&inst.q, &gamma);
    let through_pair: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    let pd = norm2(&through_pair);
    let w = if svm_progress(inst, &through_pair) > svm_progress(inst, &w) { through_pair } else { w };
    let nrm = norm2(&w);
    let w: Vec<f64> = w.into_iter().map(|x| x / nrm).collect();
    let margin = svm_progress(inst, &w);
    let solution =
        SvmSolution { margin, excentricity: inst.d_max * inst.d_max / (pd * pd), w, mu, gamma, pd_distance: pd };
    Ok(SolveReport {
        primal_value: pd,
        dual_value: margin,
        solution,
        total_iterations: outcome.total_iterations,
        search_steps: outcome.tests.len(),
        wall_seconds: 0.0,
        termination: outcome.termination,
        tests: outcome.tests,
    })
}
