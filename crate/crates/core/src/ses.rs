//! Smallest enclosing sphere of a set of spheres.
//!
//! Sphere 1 is kept as the easy constraint `‖u − v₁‖ ≤ γ − γ₁`; spheres
//! `2..n` each become one second-order block `(u − vᵢ; γ − γᵢ) ∈ Q^{d+1}`.
//! With `D = max_{i≥2}(‖v₁ − vᵢ‖ + γ₁ + γᵢ)` the optimum lies in `[D/2, D]`
//! and the oracle width is at most `3D/√2`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::eja::{BlockKind, ConeDescriptor, EjaElement};
use crate::math::{ceil, dist2, dot, ln, norm2};
use crate::meta::{
    adaptive_search, timed, FeasibilityOracle, MetaError, OracleOutcome, Orientation, SearchConfig, SolveReport,
    Termination,
};
use crate::par;

const SQRT_2: f64 = core::f64::consts::SQRT_2;
const FRAC_1_SQRT_2: f64 = core::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SesError {
    #[error("need at least two spheres, got {0}")]
    TooFewSpheres(usize),
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("{centers} center coordinates do not match {radii} radii in dimension {dim}")]
    ShapeMismatch { centers: usize, radii: usize, dim: usize },
    #[error("sphere {0} has a non-finite coordinate or radius")]
    NonFinite(usize),
    #[error("sphere {0} has a negative radius")]
    NegativeRadius(usize),
    #[error("eps must lie in (0, 1), got {0}")]
    InvalidEps(f64),
    #[error(transparent)]
    Meta(#[from] MetaError),
}

/// `n ≥ 2` spheres in `R^d`, centers stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SesInstance {
    dim: usize,
    centers: Vec<f64>,
    radii: Vec<f64>,
}

impl SesInstance {
    pub fn new(dim: usize, centers: Vec<f64>, radii: Vec<f64>) -> Result<Self, SesError> {
        if dim == 0 {
            return Err(SesError::ZeroDimension);
        }
        if centers.len() != dim * radii.len() {
            return Err(SesError::ShapeMismatch { centers: centers.len(), radii: radii.len(), dim });
        }
        if radii.len() < 2 {
            return Err(SesError::TooFewSpheres(radii.len()));
        }
        for (i, (c, r)) in centers.chunks(dim).zip(&radii).enumerate() {
            if !r.is_finite() || c.iter().any(|x| !x.is_finite()) {
                return Err(SesError::NonFinite(i));
            }
            if *r < 0.0 {
                return Err(SesError::NegativeRadius(i));
            }
        }
        Ok(Self { dim, centers, radii })
    }

    /// Points, i.e. spheres of radius zero.
    pub fn from_points(dim: usize, centers: Vec<f64>) -> Result<Self, SesError> {
        let n = centers.len().checked_div(dim).unwrap_or(0);
        Self::new(dim, centers, vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn center(&self, i: usize) -> &[f64] {
        &self.centers[i * self.dim..(i + 1) * self.dim]
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn radius(&self, i: usize) -> f64 {
        self.radii[i]
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }
}

/// `(D, D/2, D)`.
pub fn ses_range(inst: &SesInstance) -> (f64, f64, f64) {
    let v1 = inst.center(0);
    let g1 = inst.radius(0);
    let d = (1..inst.len()).map(|i| dist2(v1, inst.center(i)) + g1 + inst.radius(i)).fold(0.0, f64::max);
    (d, d / 2.0, d)
}

/// `3D/√2`.
pub fn ses_width(d_max: f64) -> f64 {
    3.0 * d_max / SQRT_2
}

/// `⌈36D² ln(2n−2) / (ε²α²)⌉`.
pub fn ses_iteration_bound(d_max: f64, n: usize, eps: f64, alpha: f64) -> u64 {
    let t = ceil(36.0 * d_max * d_max * ln((2 * n - 2) as f64) / (eps * eps * alpha * alpha));
    if t < 1.0 {
        1
    } else {
        t as u64
    }
}

/// Radius of the smallest sphere centered at `center` that encloses every
/// input sphere.
pub fn ses_progress(inst: &SesInstance, center: &[f64]) -> f64 {
    let parts = par::map_chunks(inst.len(), |r| {
        r.map(|i| dist2(center, inst.center(i)) + inst.radius(i)).fold(f64::NEG_INFINITY, f64::max)
    });
    parts.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SesSolution {
    pub center: Vec<f64>,
    pub radius: f64,
    /// `maxᵢ(‖center − vᵢ‖ + γᵢ) − radius`; never positive.
    pub enclosure_slack: f64,
}

impl SesSolution {
    fn at(inst: &SesInstance, center: Vec<f64>) -> Self {
        let radius = ses_progress(inst, &center);
        Self { center, radius, enclosure_slack: 0.0 }
    }
}

/// The closed-form oracle for [`SesInstance`], also tracking the best
/// certified center seen so far.
#[derive(Debug)]
pub struct SesOracle<'a> {
    inst: &'a SesInstance,
    cone: Arc<ConeDescriptor>,
    d_max: f64,
    best: Option<(f64, Vec<f64>)>,
}

impl<'a> SesOracle<'a> {
    pub fn new(inst: &'a SesInstance) -> Self {
        let cone = ConeDescriptor::repeated(BlockKind::SecondOrder(inst.dim), inst.len() - 1)
            .expect("instance has at least two spheres of positive dimension");
        let (d_max, _, _) = ses_range(inst);
        Self { inst, cone: Arc::new(cone), d_max, best: None }
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    /// Best `(radius bound, center)` among all witnesses and progress
    /// evaluations.
    pub fn best(&self) -> Option<(f64, &[f64])> {
        self.best.as_ref().map(|(r, c)| (*r, c.as_slice()))
    }

    fn into_best(self) -> Option<(f64, Vec<f64>)> {
        self.best
    }

    /// Keeps `center` if `radius`, an upper bound on its enclosing radius,
    /// beats the best so far.
    fn offer(&mut self, center: &[f64], radius: f64) {
        match &mut self.best {
            Some((r, _)) if radius >= *r => {}
            Some((r, c)) => {
                *r = radius;
                c.copy_from_slice(center);
            }
            None => self.best = Some((radius, center.to_vec())),
        }
    }
}

impl FeasibilityOracle for SesOracle<'_> {
    fn cone(&self) -> &Arc<ConeDescriptor> {
        &self.cone
    }

    fn orientation(&self) -> Orientation {
        Orientation::Max
    }

    fn width(&self, alpha: f64) -> f64 {
        assert!(alpha <= self.d_max * (1.0 + 1e-12), "level {alpha} above D = {}", self.d_max);
        ses_width(self.d_max)
    }

    fn trace_bound(&self) -> f64 {
        SQRT_2
    }

    fn dual_dim(&self) -> usize {
        self.inst.dim + 1
    }

    fn query(&mut self, p: &EjaElement, alpha: f64, residual: &mut EjaElement) -> Result<OracleOutcome, MetaError> {
        let inst = self.inst;
        let d = inst.dim;
        let g1 = inst.radius(0);
        if alpha < g1 {
            return Ok(OracleOutcome::Separated { oracle_value: alpha - g1 });
        }
        let w = p.coords();
        let blocks = inst.len() - 1;
        // Per chunk: Σ wᵢ in the first d slots, then Σ vᵢᵀwᵢ and Σ γᵢσᵢ.
        let parts = par::map_chunks(blocks, |r| {
            let mut acc = vec![0.0; d + 2];
            for k in r {
                let b = &w[k * (d + 1)..(k + 1) * (d + 1)];
                let v = inst.center(k + 1);
                for j in 0..d {
                    acc[j] += b[j];
                }
                acc[d] += dot(v, &b[..d]);
                acc[d + 1] += inst.radius(k + 1) * b[d];
            }
            acc
        });
        let acc = par::sum_vectors(parts, d + 2);
        let s = &acc[..d];
        let s_norm = norm2(s);
        let v1 = inst.center(0);
        let u: Vec<f64> = if s_norm > 0.0 {
            let t = (alpha - g1) / s_norm;
            v1.iter().zip(s).map(|(c, sj)| c + t * sj).collect()
        } else {
            v1.to_vec()
        };
        let value = dot(s, &u) + alpha * FRAC_1_SQRT_2 - acc[d] - acc[d + 1];
        if value < 0.0 {
            return Ok(OracleOutcome::Separated { oracle_value: value });
        }
        // The enclosing radius at u comes out of the same pass.
        let far = par::map_chunks_mut(residual.coords_mut(), d + 1, |first, out| {
            let mut far = f64::NEG_INFINITY;
            for (k, b) in out.chunks_mut(d + 1).enumerate() {
                let i = first + k + 1;
                for ((o, uj), vj) in b[..d].iter_mut().zip(&u).zip(inst.center(i)) {
                    *o = uj - vj;
                }
                b[d] = alpha - inst.radius(i);
                far = far.max(norm2(&b[..d]) + inst.radius(i));
            }
            far
        });
        let own = if s_norm > 0.0 { alpha } else { g1 };
        let radius = far.into_iter().fold(own, f64::max);
        self.offer(&u, radius);
        let mut y = u;
        y.push(alpha);
        Ok(OracleOutcome::Witness { y })
    }

    fn identity_direction(&self) -> Vec<f64> {
        let mut delta = vec![0.0; self.inst.dim + 1];
        delta[self.inst.dim] = SQRT_2;
        delta
    }

    fn objective(&self, y: &[f64]) -> f64 {
        y[self.inst.dim]
    }

    fn progress(&mut self, y_bar: &[f64]) -> Option<f64> {
        let center = &y_bar[..self.inst.dim];
        let f = ses_progress(self.inst, center);
        self.offer(center, f);
        Some(f)
    }
}

/// Approximates the smallest enclosing sphere to relative accuracy
/// `config.eps`.
///
/// `primal_value` is the certified lower bound on the optimal radius and
/// `dual_value` the radius of the returned sphere.
pub fn solve_ses(inst: &SesInstance, config: &SearchConfig) -> Result<SolveReport<SesSolution>, SesError> {
    if !(config.eps > 0.0 && config.eps < 1.0) {
        return Err(SesError::InvalidEps(config.eps));
    }
    let (report, wall_seconds) = timed(|| solve_untimed(inst, config));
    let mut report = report?;
    report.wall_seconds = wall_seconds;
    Ok(report)
}

fn solve_untimed(inst: &SesInstance, config: &SearchConfig) -> Result<SolveReport<SesSolution>, SesError> {
    let anchor = SesSolution::at(inst, inst.center(0).to_vec());
    let (d_max, lo, hi) = ses_range(inst);
    if d_max == 0.0 {
        return Ok(SolveReport {
            primal_value: 0.0,
            dual_value: anchor.radius,
            solution: anchor,
            total_iterations: 0,
            search_steps: 0,
            wall_seconds: 0.0,
            termination: Termination::RangeConverged,
            tests: Vec::new(),
        });
    }
    let mut oracle = SesOracle::new(inst);
    let outcome = adaptive_search(&mut oracle, lo, hi, config)?;
    let solution = match oracle.into_best() {
        Some((r, c)) if r < anchor.radius => SesSolution::at(inst, c),
        _ => anchor,
    };
    Ok(SolveReport {
        primal_value: outcome.lower,
        dual_value: solution.radius,
        solution,
        total_iterations: outcome.total_iterations,
        search_steps: outcome.tests.len(),
        wall_seconds: 0.0,
        termination: outcome.termination,
        tests: outcome.tests,
    })
}
