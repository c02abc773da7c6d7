mod common;

use common::{gaussian_points, rng, sphere_points, svm_clusters};
use rand::Rng;
use symcone_core::baselines::{gilbert_baseline, meb_baseline};
use symcone_core::meta::TestVerdict;
use symcone_core::ses::{ses_iteration_bound, ses_progress, ses_range, ses_width, solve_ses, SesInstance};
use symcone_core::svm::{
    extract_pd, pd_distance, solve_svm, svm_iteration_bound, svm_progress, svm_width, SvmError, SvmInstance,
};
use symcone_core::{EarlyStopConfig, SearchConfig};

fn ses(dim: usize, centers: &[f64], radii: &[f64]) -> SesInstance {
    SesInstance::new(dim, centers.to_vec(), radii.to_vec()).unwrap()
}

fn svm(dim: usize, p: &[f64], q: &[f64]) -> SvmInstance {
    SvmInstance::new(dim, p.to_vec(), q.to_vec()).unwrap()
}

/// Two boxes with vertices `{±1}²`, the second shifted by `2 + gap` along
/// the first axis.
fn boxes(gap: f64) -> SvmInstance {
    let p = [-1.0, -1.0, -1.0, 1.0, 1.0, -1.0, 1.0, 1.0];
    let q: Vec<f64> = p.chunks(2).flat_map(|v| [v[0] + 2.0 + gap, v[1]]).collect();
    svm(2, &p, &q)
}

fn brute_force_distance(inst: &SvmInstance) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..inst.n1() {
        for j in 0..inst.n2() {
            let d: f64 = inst.p_point(i).iter().zip(inst.q_point(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            best = best.min(d.sqrt());
        }
    }
    best
}

#[test]
fn ses_range_examples() {
    assert_eq!(ses_range(&ses(2, &[0.0, 0.0, 2.0, 0.0], &[0.0, 0.0])), (2.0, 1.0, 2.0));
    assert_eq!(ses_range(&ses(2, &[0.0, 0.0, 2.0, 0.0], &[0.5, 0.5])), (3.0, 1.5, 3.0));
    assert_eq!(ses_range(&ses(2, &[1.0, 1.0, 1.0, 1.0], &[1.0, 1.0])), (2.0, 1.0, 2.0));
    assert!((ses_width(2.0) - 6.0 / 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn ses_progress_examples() {
    let two = ses(2, &[0.0, 0.0, 2.0, 0.0], &[0.0, 0.0]);
    assert_eq!(ses_progress(&two, &[1.0, 0.0]), 1.0);
    assert_eq!(ses_progress(&two, &[0.0, 0.0]), 2.0);
    let padded = ses(2, &[0.0, 0.0, 2.0, 0.0], &[0.1, 0.2]);
    assert!((ses_progress(&padded, &[0.5, 0.0]) - 1.7).abs() < 1e-15);
}

#[test]
fn ses_bound_formula() {
    let t = ses_iteration_bound(2.0, 100, 0.1, 1.0);
    assert_eq!(t, (36.0 * 4.0 * 198f64.ln() / 0.01).ceil() as u64);
}

#[test]
fn ses_small_instances() {
    let config = SearchConfig::new(0.05);
    let mut r = rng(3);
    let circle = SesInstance::from_points(2, sphere_points(&mut r, 32, 2)).unwrap();
    let rep = solve_ses(&circle, &config).unwrap();
    assert!(rep.dual_value >= 1.0 - 1e-12 && rep.dual_value <= 1.05, "{}", rep.dual_value);

    let line = SesInstance::from_points(2, vec![0.0, 0.0, 1.0, 0.0, 2.0, 0.0]).unwrap();
    let rep = solve_ses(&line, &config).unwrap();
    assert!(rep.dual_value >= 1.0 - 1e-12 && rep.dual_value <= 1.05, "{}", rep.dual_value);
    let c = &rep.solution.center;
    assert!((c[0] - 1.0).abs() < 0.35 && c[1].abs() < 0.35, "{c:?}");

    let nested = ses(2, &[0.0, 0.0, 0.0, 0.0], &[1.0, 1.0]);
    let rep = solve_ses(&nested, &config).unwrap();
    assert!((rep.dual_value - 1.0).abs() < 1e-12);
}

#[test]
fn ses_matches_core_set_baseline() {
    let mut r = rng(4);
    let pts = gaussian_points(&mut r, 1000, 16);
    let inst = SesInstance::from_points(16, pts).unwrap();
    let eps = 0.05;
    let rep = solve_ses(&inst, &SearchConfig::new(eps)).unwrap();
    let base = meb_baseline(inst.centers(), 16, inst.radii(), 1e-3).unwrap();
    assert!(rep.dual_value <= (1.0 + eps) * base.value, "{} vs {}", rep.dual_value, base.value);
    assert!(rep.dual_value >= base.bound - 1e-9);
    assert!(ses_progress(&inst, &rep.solution.center) <= rep.dual_value + 1e-9);
    assert!(rep.solution.enclosure_slack <= 0.0);
    for t in &rep.tests {
        if t.verdict == TestVerdict::Separated {
            assert!(base.value > t.alpha - 1e-6);
        }
    }
}

#[test]
fn ses_rejects_bad_input() {
    assert!(SesInstance::new(2, vec![0.0, 0.0], vec![0.0]).is_err());
    assert!(SesInstance::new(2, vec![0.0, 0.0, 1.0], vec![0.0, 0.0]).is_err());
    assert!(SesInstance::new(1, vec![0.0, 1.0], vec![0.0, -1.0]).is_err());
    assert!(SesInstance::new(1, vec![0.0, f64::NAN], vec![0.0, 0.0]).is_err());
    let inst = ses(1, &[0.0, 1.0], &[0.0, 0.0]);
    assert!(solve_ses(&inst, &SearchConfig::new(0.0)).is_err());
}

#[test]
fn svm_helper_examples() {
    let inst = svm(2, &[1.0, 0.0], &[-1.0, 0.0]);
    assert_eq!(svm_width(&inst), 2.0);
    assert_eq!(svm_progress(&inst, &[1.0, 0.0]), 2.0);
    assert_eq!(svm_progress(&inst, &[0.0, 1.0]), 0.0);
    assert_eq!(svm_progress(&inst, &[2.0, 0.0]), 2.0);
    assert_eq!(svm_iteration_bound(1.0, 200, 0.1, 0.5), (64.0 * 200f64.ln() / (0.01 * 0.25)).ceil() as u64);

    assert_eq!(extract_pd(&[0.25; 4], 2).unwrap(), (vec![0.5, 0.5], vec![0.5, 0.5]));
    assert_eq!(extract_pd(&[0.2, 0.2, 0.3, 0.3], 2).unwrap(), (vec![0.5, 0.5], vec![0.5, 0.5]));
    assert!(matches!(extract_pd(&[0.0, 0.0, 0.5, 0.5], 2), Err(SvmError::NonPositivePart)));
    assert_eq!(pd_distance(&inst, &[1.0], &[1.0]), 2.0);
}

#[test]
fn svm_two_points() {
    let inst = svm(2, &[1.0, 0.0], &[-1.0, 0.0]);
    let rep = solve_svm(&inst, &SearchConfig::new(0.05)).unwrap();
    let s = &rep.solution;
    assert!(s.margin >= 1.9 && s.margin <= 2.0 + 1e-12, "{}", s.margin);
    assert!(s.pd_distance >= 2.0 - 1e-12 && s.pd_distance <= 2.1, "{}", s.pd_distance);
    assert!((s.w[0].abs() - 1.0).abs() < 1e-3 && s.w[1].abs() < 0.05, "{:?}", s.w);
}

#[test]
fn svm_boxes_match_vertex_enumeration() {
    let inst = boxes(1.0);
    assert_eq!(brute_force_distance(&inst), 1.0);
    let base = gilbert_baseline(inst.p_rows(), inst.q_rows(), 2, 1e-6).unwrap();
    assert!((base.value - 1.0).abs() < 1e-6, "{}", base.value);
    let rep = solve_svm(&inst, &SearchConfig::new(0.05)).unwrap();
    assert!(rep.solution.margin <= 1.0 + 1e-9 && rep.solution.margin >= 0.95, "{}", rep.solution.margin);
    assert!(rep.solution.pd_distance >= 1.0 - 1e-9);
}

#[test]
fn svm_clusters_against_gilbert() {
    let mut r = rng(8);
    let (p, q) = svm_clusters(&mut r, 100, 100, 2, 2.0);
    let inst = svm(2, &p, &q);
    let base = gilbert_baseline(&p, &q, 2, 1e-6).unwrap();
    let rep = solve_svm(&inst, &SearchConfig::new(0.05)).unwrap();
    let s = &rep.solution;
    assert!(s.margin >= 0.95 * base.value, "{} vs {}", s.margin, base.value);
    assert!(s.margin <= base.value + 1e-9 && base.value <= s.pd_distance + 1e-9);
    assert!(s.pd_distance - s.margin <= 2.0 * 0.05 * s.pd_distance);
    let wn: f64 = s.w.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!((wn - 1.0).abs() <= 1e-12);
    for part in [&s.mu, &s.gamma] {
        assert!(part.iter().all(|x| *x >= 0.0));
        assert!((part.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }
    assert!((s.excentricity - inst.d_max().powi(2) / s.pd_distance.powi(2)).abs() < 1e-12);
    for t in &rep.tests {
        if t.verdict == TestVerdict::Separated {
            assert!(base.value < t.alpha + 1e-6);
        }
        assert!(t.iterations <= t.bound);
    }
}

#[test]
fn svm_overlap_is_reported() {
    let inst = svm(1, &[-1.0, 1.0], &[0.0]);
    assert!(matches!(solve_svm(&inst, &SearchConfig::new(0.05)), Err(SvmError::InfeasibleInput)));
}

#[test]
fn baselines_known_values() {
    let mut r = rng(9);
    let circle = sphere_points(&mut r, 32, 2);
    let b = meb_baseline(&circle, 2, &[0.0; 32], 1e-3).unwrap();
    assert!(b.value >= 1.0 - 1e-12 && b.value <= 1.001, "{}", b.value);

    let pts = gaussian_points(&mut r, 40, 3);
    let b = meb_baseline(&pts, 3, &[0.0; 40], 1e-3).unwrap();
    let mut far = 0.0f64;
    for i in 0..40 {
        for j in 0..40 {
            let d: f64 = (0..3).map(|k| (pts[3 * i + k] - pts[3 * j + k]).powi(2)).sum();
            far = far.max(d.sqrt());
        }
    }
    assert!(b.value >= far / 2.0 - 1e-9);

    let inst = boxes(0.5);
    let g = gilbert_baseline(inst.p_rows(), inst.q_rows(), 2, 1e-9).unwrap();
    assert!((g.value - brute_force_distance(&inst)).abs() < 1e-6);
}

#[test]
fn cross_validation_against_baselines() {
    let eps = 0.05;
    let eps_base = 1e-3;
    let config = SearchConfig::new(eps);
    let mut r = rng(10);
    for trial in 0..50 {
        let n = r.gen_range(2..=64);
        let d = r.gen_range(1..=8);
        let inst = SesInstance::from_points(d, gaussian_points(&mut r, n, d)).unwrap();
        let rep = solve_ses(&inst, &config).unwrap();
        let base = meb_baseline(inst.centers(), d, inst.radii(), eps_base).unwrap();
        assert!(rep.dual_value <= (1.0 + eps) * (1.0 + eps_base) * base.value, "ses trial {trial}");
        assert!(base.value <= (1.0 + eps) * (1.0 + eps_base) * rep.dual_value, "ses trial {trial}");
    }
    for trial in 0..50 {
        let n = r.gen_range(1..=32);
        let d = r.gen_range(1..=8);
        let gap = r.gen_range(0.2..2.0);
        let (p, q) = svm_clusters(&mut r, n, n, d, gap);
        let inst = svm(d, &p, &q);
        let rep = solve_svm(&inst, &config).unwrap();
        let base = gilbert_baseline(&p, &q, d, 1e-6).unwrap();
        let s = &rep.solution;
        assert!(s.margin <= base.value + 1e-9, "svm trial {trial}");
        assert!(base.value <= (1.0 + eps) * (1.0 + eps_base) * s.margin, "svm trial {trial}");
    }
}

#[test]
fn early_stopping_off_still_solves() {
    let inst = svm(2, &[1.0, 0.0, 1.5, 0.5], &[-1.0, 0.0]);
    let config = SearchConfig { stopping: EarlyStopConfig::disabled(), ..SearchConfig::new(0.2) };
    let rep = solve_svm(&inst, &config).unwrap();
    let base = gilbert_baseline(inst.p_rows(), inst.q_rows(), 2, 1e-9).unwrap();
    assert!(rep.solution.margin <= base.value + 1e-9 && base.value <= rep.solution.pd_distance + 1e-9);
}
