//! Seeded random instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use symcone_core::ses::SesInstance;
use symcone_core::svm::SvmInstance;

use crate::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SesDist {
    /// Uniform in the unit ball.
    UniformBall,
    /// Standard normal coordinates.
    Gaussian,
    /// On the unit sphere, with the first two points antipodal so the
    /// optimal radius is exactly 1.
    SphereSurface,
}

fn unit_vector(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn ball_point(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let r = rng.gen::<f64>().powf(1.0 / d as f64);
    unit_vector(rng, d).into_iter().map(|x| r * x).collect()
}

/// `n` points with zero radii.
pub fn ses(n: usize, d: usize, seed: u64, dist: SesDist) -> Result<SesInstance, BenchError> {
    if n < 2 || d < 1 {
        return Err(BenchError::InvalidSize(format!("need n ≥ 2 and d ≥ 1, got n = {n}, d = {d}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = Vec::with_capacity(n * d);
    match dist {
        SesDist::Gaussian => centers.extend((0..n * d).map(|_| rng.sample::<f64, _>(StandardNormal))),
        SesDist::UniformBall => (0..n).for_each(|_| centers.extend(ball_point(&mut rng, d))),
        SesDist::SphereSurface => {
            let a = unit_vector(&mut rng, d);
            centers.extend(a.iter().map(|x| -x));
            centers.extend(&a);
            (2..n).for_each(|_| centers.extend(unit_vector(&mut rng, d)));
        }
    }
    SesInstance::from_points(d, centers).map_err(|e| BenchError::InvalidInstance(e.to_string()))
}

/// Two unit-ball clusters with centers `±(1 + gap/2)·u` for a random unit
/// `u`, so the hulls are at least `gap` apart. Returns `u` as well.
pub fn svm(n1: usize, n2: usize, d: usize, seed: u64, gap: f64) -> Result<(SvmInstance, Vec<f64>), BenchError> {
    if n1 < 1 || n2 < 1 || d < 1 {
        return Err(BenchError::InvalidSize(format!("need n1, n2, d ≥ 1, got {n1}, {n2}, {d}")));
    }
    if !(gap > 0.0 && gap.is_finite()) {
        return Err(BenchError::InvalidSize(format!("gap must be positive, got {gap}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dir = unit_vector(&mut rng, d);
    let offset = 1.0 + gap / 2.0;
    let mut cluster = |n: usize, side: f64| {
        let mut out = Vec::with_capacity(n * d);
        for _ in 0..n {
            let b = ball_point(&mut rng, d);
            out.extend(b.iter().zip(&dir).map(|(x, u)| x + side * offset * u));
        }
        out
    };
    let p = cluster(n1, 1.0);
    let q = cluster(n2, -1.0);
    let inst = SvmInstance::new(d, p, q).map_err(|e| BenchError::InvalidInstance(e.to_string()))?;
    Ok((inst, dir))
}
