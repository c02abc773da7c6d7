//! Random cones, elements and instances shared by the integration tests.

#![allow(dead_code)]

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use symcone_core::ses::{ses_range, ses_width, SesInstance, SesOracle};
use symcone_core::svm::{svm_width, SvmInstance, SvmOracle};
use symcone_core::{BlockKind, ConeDescriptor, EjaElement, FeasibilityOracle, OracleOutcome};

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; the radius draw avoids ln(0).
    let u: f64 = 1.0 - rng.gen::<f64>();
    let v: f64 = rng.gen();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

/// A product of up to `max_blocks` orthant and second-order blocks.
pub fn random_cone(rng: &mut ChaCha8Rng, max_blocks: usize, max_dim: usize) -> Arc<ConeDescriptor> {
    let count = rng.gen_range(1..=max_blocks);
    let blocks: Vec<BlockKind> = (0..count)
        .map(|_| {
            let d = rng.gen_range(1..=max_dim);
            if rng.gen_bool(0.5) {
                BlockKind::Orthant(d)
            } else {
                BlockKind::SecondOrder(d)
            }
        })
        .collect();
    Arc::new(ConeDescriptor::new(blocks).unwrap())
}

pub fn random_element(rng: &mut ChaCha8Rng, cone: &Arc<ConeDescriptor>, scale: f64) -> EjaElement {
    let coords = (0..cone.ambient_dim()).map(|_| scale * gauss(rng)).collect();
    EjaElement::new(cone.clone(), coords).unwrap()
}

/// Rescales `x` to infinity norm `target` (zero stays zero).
pub fn with_inf_norm(x: &EjaElement, target: f64) -> EjaElement {
    let n = x.inf_norm();
    if n == 0.0 {
        x.clone()
    } else {
        x.scale(target / n)
    }
}

/// A cone member: `x∘x` has nonnegative spectrum.
pub fn random_cone_member(rng: &mut ChaCha8Rng, cone: &Arc<ConeDescriptor>) -> EjaElement {
    let x = random_element(rng, cone, 1.0);
    x.jordan_mul(&x).unwrap()
}

pub fn unit_vector(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| gauss(rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

pub fn ball_point(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let r = rng.gen::<f64>().powf(1.0 / d as f64);
    unit_vector(rng, d).into_iter().map(|x| r * x).collect()
}

/// `n` points on the unit sphere around the origin, including an antipodal
/// pair so the smallest enclosing radius is exactly 1.
pub fn sphere_points(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<f64> {
    let a = unit_vector(rng, d);
    let mut out: Vec<f64> = a.iter().map(|x| -x).collect();
    out.extend_from_slice(&a);
    for _ in 2..n {
        out.extend(unit_vector(rng, d));
    }
    out
}

pub fn gaussian_points(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<f64> {
    (0..n * d).map(|_| gauss(rng)).collect()
}

/// Two unit-ball clusters whose centers are `2 + gap` apart.
pub fn svm_clusters(rng: &mut ChaCha8Rng, n1: usize, n2: usize, d: usize, gap: f64) -> (Vec<f64>, Vec<f64>) {
    let dir = unit_vector(rng, d);
    let half = 1.0 + gap / 2.0;
    let mut cluster = |n: usize, side: f64| {
        let mut out = Vec::with_capacity(n * d);
        for _ in 0..n {
            let b = ball_point(rng, d);
            out.extend(b.iter().zip(&dir).map(|(x, u)| x + side * half * u));
        }
        out
    };
    let p = cluster(n1, 1.0);
    let q = cluster(n2, -1.0);
    (p, q)
}

pub fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

const GRID: usize = 1000;
const ASCENT_STEPS: usize = 200;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Projected ascent of `gᵀu` over the ball `‖u − center‖ ≤ radius`.
fn ascend_on_ball(g: &[f64], center: &[f64], radius: f64, start: &[f64]) -> Vec<f64> {
    let mut u = start.to_vec();
    let gn = norm(g);
    if gn == 0.0 {
        return u;
    }
    for _ in 0..ASCENT_STEPS {
        for (x, gi) in u.iter_mut().zip(g) {
            *x += 2.0 * radius * gi / gn;
        }
        let off: Vec<f64> = u.iter().zip(center).map(|(a, b)| a - b).collect();
        let n = norm(&off);
        if n > radius {
            for ((x, c), o) in u.iter_mut().zip(center).zip(&off) {
                *x = c + o * radius / n;
            }
        }
    }
    u
}

fn query_value(oracle: &mut impl FeasibilityOracle, p: &EjaElement, alpha: f64) -> (f64, Option<EjaElement>) {
    let mut residual = EjaElement::zeros(oracle.cone().clone());
    match oracle.query(p, alpha, &mut residual).unwrap() {
        OracleOutcome::Separated { oracle_value } => (oracle_value, None),
        OracleOutcome::Witness { .. } => (residual.inner(p).unwrap(), Some(residual)),
    }
}

pub fn random_trace_one(r: &mut ChaCha8Rng, oracle: &impl FeasibilityOracle) -> EjaElement {
    random_cone_member(r, oracle.cone()).trace_normalize().unwrap()
}

/// One oracle query set against an independent numerical maximization.
#[derive(Debug, Clone, Copy)]
pub struct OracleCheck {
    pub closed_form: f64,
    pub numerical: f64,
    /// Residual norm and width of a witness.
    pub width: Option<(f64, f64)>,
}

impl OracleCheck {
    pub fn relative_error(&self) -> f64 {
        (self.closed_form - self.numerical).abs() / self.numerical.abs().max(1.0)
    }

    pub fn agrees(&self) -> bool {
        self.relative_error() <= 1e-6 && self.width.is_none_or(|(n, w)| n <= w * (1.0 + 1e-9))
    }
}

/// A random small SES query.
pub fn ses_oracle_check(r: &mut ChaCha8Rng) -> OracleCheck {
    let n = r.gen_range(2..8);
    let d = r.gen_range(1..5);
    let centers: Vec<f64> = (0..n * d).map(|_| gauss(r)).collect();
    let radii: Vec<f64> = (0..n).map(|_| if r.gen_bool(0.5) { 0.0 } else { r.gen_range(0.0..0.5) }).collect();
    let inst = SesInstance::new(d, centers, radii).unwrap();
    let mut oracle = SesOracle::new(&inst);
    let (big_d, lo, _) = ses_range(&inst);
    let alpha = r.gen_range(0.5 * lo..=big_d).max(inst.radius(0));
    let p = random_trace_one(r, &oracle);
    let (value, residual) = query_value(&mut oracle, &p, alpha);

    // (u, γ) ↦ Σᵢ wᵢᵀ(u − vᵢ) + σᵢ(γ − γᵢ) over ‖u − v₁‖ ≤ γ − γ₁, γ₁ ≤ γ ≤ α.
    let w = p.coords();
    let mut s = vec![0.0; d];
    let mut constant = 0.0;
    let mut sigma = 0.0;
    for i in 1..n {
        let b = &w[(i - 1) * (d + 1)..i * (d + 1)];
        for j in 0..d {
            s[j] += b[j];
        }
        constant -= dot(inst.center(i), &b[..d]) + inst.radius(i) * b[d];
        sigma += b[d];
    }
    let g1 = inst.radius(0);
    let mut best = f64::NEG_INFINITY;
    let start: Vec<f64> = inst.center(0).iter().map(|c| c + 1e-3).collect();
    for k in 0..=GRID {
        let gamma = g1 + (alpha - g1) * k as f64 / GRID as f64;
        let u = ascend_on_ball(&s, inst.center(0), gamma - g1, &start);
        best = best.max(dot(&s, &u) + sigma * gamma + constant);
    }
    OracleCheck { closed_form: value, numerical: best, width: residual.map(|res| (res.inf_norm(), ses_width(big_d))) }
}

/// A random small SVM query.
pub fn svm_oracle_check(r: &mut ChaCha8Rng) -> OracleCheck {
    let n1 = r.gen_range(1..6);
    let n2 = r.gen_range(1..6);
    let d = r.gen_range(1..5);
    let p_rows: Vec<f64> = (0..n1 * d).map(|_| gauss(r) + 1.0).collect();
    let q_rows: Vec<f64> = (0..n2 * d).map(|_| gauss(r) - 1.0).collect();
    let inst = SvmInstance::new(d, p_rows, q_rows).unwrap();
    let mut oracle = SvmOracle::new(&inst);
    let big_d = inst.d_max();
    let alpha = r.gen_range(1e-3..=2.0 * big_d);
    let p = random_trace_one(r, &oracle);
    let (value, residual) = query_value(&mut oracle, &p, alpha);

    // (w, s₁, s₂) ↦ μᵀ(Pw − s₁) − γᵀ(Qw + s₂) over ‖w‖ ≤ 1,
    // s₁ + s₂ ≥ α, α − D ≤ s₁, s₂ ≤ D.
    let (mu, gam) = p.coords().split_at(n1);
    let mut g = vec![0.0; d];
    for (i, m) in mu.iter().enumerate() {
        for (gj, x) in g.iter_mut().zip(inst.p_point(i)) {
            *gj += m * x;
        }
    }
    for (i, c) in gam.iter().enumerate() {
        for (gj, x) in g.iter_mut().zip(inst.q_point(i)) {
            *gj -= c * x;
        }
    }
    let start: Vec<f64> = (0..d).map(|_| 1e-3 * gauss(r)).collect();
    let w = ascend_on_ball(&g, &vec![0.0; d], 1.0, &start);
    let (tm, tg): (f64, f64) = (mu.iter().sum(), gam.iter().sum());
    let mut best = f64::NEG_INFINITY;
    for k in 0..=GRID {
        let s1 = (alpha - big_d) + (2.0 * big_d - alpha) * k as f64 / GRID as f64;
        for l in 0..=GRID / 10 {
            let s2 = (alpha - s1) + (big_d - (alpha - s1)) * l as f64 / (GRID / 10) as f64;
            best = best.max(dot(&g, &w) - tm * s1 - tg * s2);
        }
    }
    OracleCheck { closed_form: value, numerical: best, width: residual.map(|res| (res.inf_norm(), svm_width(&inst))) }
}
