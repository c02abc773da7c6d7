//! Reference solvers that share no code with the multiplicative-weights path.
//!
//! [`meb_baseline`] is the Bădoiu–Clarkson iteration for the smallest
//! enclosing ball of balls. [`gilbert_baseline`] is Frank–Wolfe with away
//! steps on `min ‖Pμ − Qγ‖²` over the product of two simplices. Both return a
//! certified bound on the other side of the optimum so their accuracy can be
//! checked.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::math::{ceil, dist2, dot, norm2, sqrt};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BaselineError {
    #[error("empty input")]
    Empty,
    #[error("{0} coordinates do not form rows of dimension {1}")]
    ShapeMismatch(usize, usize),
    #[error("non-finite input")]
    NonFinite,
    #[error("tolerance {0} out of range")]
    InvalidTolerance(f64),
}

/// Convex weights over the rows of `P` and of `Q`.
pub type HullPair = (Vec<f64>, Vec<f64>);

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineResult<C> {
    /// Radius of a valid enclosing ball, or distance of a valid hull pair.
    pub value: f64,
    pub certificate: C,
    /// A certified bound on the optimum from the other side: a lower bound
    /// on the radius, a lower bound on the distance.
    pub bound: f64,
    pub iterations: u64,
    /// False when the iteration cap ended the run before the tolerance was
    /// met.
    pub converged: bool,
}

fn check_rows(rows: &[f64], dim: usize) -> Result<usize, BaselineError> {
    if dim == 0 || !rows.len().is_multiple_of(dim) {
        return Err(BaselineError::ShapeMismatch(rows.len(), dim));
    }
    if rows.is_empty() {
        return Err(BaselineError::Empty);
    }
    if rows.iter().any(|x| !x.is_finite()) {
        return Err(BaselineError::NonFinite);
    }
    Ok(rows.len() / dim)
}

/// Smallest enclosing ball of the balls `(centers[i], radii[i])`.
///
/// Starting from the first center, each step moves the center by `1/(t+1)`
/// of the way to the far side of the farthest ball; the center stays a
/// convex combination of points that every enclosing ball must contain,
/// which yields a lower bound `√(Σ xₖ‖zₖ‖² − ‖c‖²)`. The run stops when the
/// best radius is within `1 + eps_base` of that bound, or after
/// `⌈1/eps_base²⌉` steps.
pub fn meb_baseline(
    centers: &[f64],
    dim: usize,
    radii: &[f64],
    eps_base: f64,
) -> Result<BaselineResult<Vec<f64>>, BaselineError> {
    let n = check_rows(centers, dim)?;
    if radii.len() != n {
        return Err(BaselineError::ShapeMismatch(radii.len(), n));
    }
    if radii.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(BaselineError::NonFinite);
    }
    if !(eps_base > 0.0 && eps_base <= 0.1) {
        return Err(BaselineError::InvalidTolerance(eps_base));
    }
    let origin = &centers[..dim];
    if n == 1 {
        return Ok(BaselineResult {
            value: radii[0],
            certificate: origin.to_vec(),
            bound: radii[0],
            iterations: 0,
            converged: true,
        });
    }
    // Work relative to the first center to keep the lower bound well
    // conditioned.
    let shifted: Vec<f64> = centers.chunks(dim).flat_map(|c| c.iter().zip(origin).map(|(a, b)| a - b)).collect();
    let row = |i: usize| &shifted[i * dim..(i + 1) * dim];

    let mut simple_lb: f64 = radii.iter().copied().fold(0.0, f64::max);
    for i in 1..n {
        simple_lb = simple_lb.max((norm2(row(i)) + radii[0] + radii[i]) / 2.0);
    }

    let cap = ceil(1.0 / (eps_base * eps_base)) as u64;
    let mut c = vec![0.0; dim];
    let mut second_moment = 0.0;
    let mut best = (f64::INFINITY, c.clone());
    let mut lower = simple_lb;
    let mut z = vec![0.0; dim];
    let mut iterations = 0;
    let mut converged = false;
    for t in 1..=cap {
        let (far, radius) = (0..n).map(|i| (i, dist2(&c, row(i)) + radii[i])).fold((0, f64::NEG_INFINITY), |a, b| {
            if b.1 > a.1 {
                b
            } else {
                a
            }
        });
        if radius < best.0 {
            best = (radius, c.clone());
        }
        let phi = second_moment - dot(&c, &c);
        lower = lower.max(sqrt(phi.max(0.0)));
        if best.0 <= (1.0 + eps_base) * lower {
            converged = true;
            break;
        }
        iterations = t;
        let v = row(far);
        let gap = dist2(v, &c);
        for k in 0..dim {
            let dir = if gap > 0.0 {
                (v[k] - c[k]) / gap
            } else if k == 0 {
                1.0
            } else {
                0.0
            };
            z[k] = v[k] + radii[far] * dir;
        }
        let step = 1.0 / (t as f64 + 1.0);
        for k in 0..dim {
            c[k] += step * (z[k] - c[k]);
        }
        second_moment += step * (dot(&z, &z) - second_moment);
    }
    let center: Vec<f64> = best.1.iter().zip(origin).map(|(a, b)| a + b).collect();
    let value = (0..n).map(|i| dist2(&center, &centers[i * dim..(i + 1) * dim]) + radii[i]).fold(0.0, f64::max);
    Ok(BaselineResult { value, certificate: center, bound: lower.min(value), iterations, converged })
}

/// Closest pair between the convex hulls of `p` and `q` (row-major, `dim`
/// columns). Stops when the Frank–Wolfe gap of `‖Pμ − Qγ‖²` drops below
/// `gap_tol` or after a million steps.
pub fn gilbert_baseline(
    p: &[f64],
    q: &[f64],
    dim: usize,
    gap_tol: f64,
) -> Result<BaselineResult<HullPair>, BaselineError> {
    const CAP: u64 = 1_000_000;
    const REFRESH: u64 = 1024;
    let n1 = check_rows(p, dim)?;
    let n2 = check_rows(q, dim)?;
    if !(gap_tol > 0.0) {
        return Err(BaselineError::InvalidTolerance(gap_tol));
    }
    let pr = |i: usize| &p[i * dim..(i + 1) * dim];
    let qr = |j: usize| &q[j * dim..(j + 1) * dim];
    let atom = |i: usize, j: usize| -> Vec<f64> { pr(i).iter().zip(qr(j)).map(|(a, b)| a - b).collect() };
    let rebuild = |active: &[(usize, usize, f64)]| {
        let mut g = vec![0.0; dim];
        for &(i, j, w) in active {
            for (k, gk) in g.iter_mut().enumerate() {
                *gk += w * (pr(i)[k] - qr(j)[k]);
            }
        }
        g
    };

    // Atoms are differences uᵢ − vⱼ; the iterate is a convex combination of
    // the active ones.
    let mut active: Vec<(usize, usize, f64)> = vec![(0, 0, 1.0)];
    let mut g = atom(0, 0);
    let mut pg = vec![0.0; n1];
    let mut qg = vec![0.0; n2];
    let mut iterations = 0;
    let mut converged = false;
    let mut bound: f64 = 0.0;
    while iterations < CAP {
        if iterations % REFRESH == REFRESH - 1 {
            g = rebuild(&active);
        }
        for (i, v) in pg.iter_mut().enumerate() {
            *v = dot(pr(i), &g);
        }
        for (j, v) in qg.iter_mut().enumerate() {
            *v = dot(qr(j), &g);
        }
        let (i_fw, lo) = pg.iter().copied().enumerate().fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        let (j_fw, hi) =
            qg.iter().copied().enumerate().fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        let gg = dot(&g, &g);
        let g_norm = sqrt(gg);
        if g_norm > 0.0 {
            bound = bound.max((lo - hi) / g_norm);
        }
        let fw_gain = gg - (lo - hi);
        if 2.0 * fw_gain < gap_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let (a_idx, away_gain) = active
            .iter()
            .enumerate()
            .map(|(k, &(i, j, _))| (k, pg[i] - qg[j] - gg))
            .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });

        if fw_gain >= away_gain || active.len() == 1 {
            let z = atom(i_fw, j_fw);
            let dir: Vec<f64> = z.iter().zip(&g).map(|(a, b)| a - b).collect();
            let dd = dot(&dir, &dir);
            if dd == 0.0 {
                converged = true;
                break;
            }
            let tau = (fw_gain / dd).clamp(0.0, 1.0);
            for e in active.iter_mut() {
                e.2 *= 1.0 - tau;
            }
            match active.iter_mut().find(|e| e.0 == i_fw && e.1 == j_fw) {
                Some(e) => e.2 += tau,
                None => active.push((i_fw, j_fw, tau)),
            }
            if tau == 1.0 {
                active.retain(|e| e.0 == i_fw && e.1 == j_fw);
            }
            for (gk, dk) in g.iter_mut().zip(&dir) {
                *gk += tau * dk;
            }
        } else {
            let (ai, aj, aw) = active[a_idx];
            let z = atom(ai, aj);
            let dir: Vec<f64> = g.iter().zip(&z).map(|(a, b)| a - b).collect();
            let dd = dot(&dir, &dir);
            let tau_max = aw / (1.0 - aw);
            let tau = if dd > 0.0 { (away_gain / dd).clamp(0.0, tau_max) } else { tau_max };
            for e in active.iter_mut() {
                e.2 *= 1.0 + tau;
            }
            if tau >= tau_max {
                active.swap_remove(a_idx);
            } else {
                active[a_idx].2 -= tau;
            }
            for (gk, dk) in g.iter_mut().zip(&dir) {
                *gk += tau * dk;
            }
        }
        active.retain(|e| e.2 > 0.0);
    }
    let mut mu = vec![0.0; n1];
    let mut gamma = vec![0.0; n2];
    for &(i, j, w) in &active {
        mu[i] += w;
        gamma[j] += w;
    }
    let (sm, sg): (f64, f64) = (mu.iter().sum(), gamma.iter().sum());
    mu.iter_mut().for_each(|x| *x /= sm);
    gamma.iter_mut().for_each(|x| *x /= sg);
    let mut diff = vec![0.0; dim];
    for (i, w) in mu.iter().enumerate() {
        for (k, dk) in diff.iter_mut().enumerate() {
            *dk += w * pr(i)[k];
        }
    }
    for (j, w) in gamma.iter().enumerate() {
        for (k, dk) in diff.iter_mut().enumerate() {
            *dk -= w * qr(j)[k];
        }
    }
    let value = norm2(&diff);
    Ok(BaselineResult { value, certificate: (mu, gamma), bound: bound.min(value), iterations, converged })
}
