mod common;

use std::sync::Arc;

use common::{close, random_cone, random_cone_member, random_element, rng, with_inf_norm};
use proptest::prelude::*;
use symcone_core::{BlockKind, ConeDescriptor, EjaElement};

fn max_abs_diff(a: &EjaElement, b: &EjaElement) -> f64 {
    a.coords().iter().zip(b.coords()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn spectral_reconstruction(seed in any::<u64>(), scale in 0.01f64..10.0) {
        let mut r = rng(seed);
        let c = random_cone(&mut r, 4, 6);
        let x = random_element(&mut r, &c, scale);
        let s = x.spectral();
        prop_assert_eq!(s.eigenvalues.len(), c.rank());
        prop_assert!(max_abs_diff(&s.reconstruct(), &x) <= 1e-10);
        prop_assert!((x.trace() - s.eigenvalues.iter().sum::<f64>()).abs() <= 1e-10);
    }

    #[test]
    fn frame_laws(seed in any::<u64>()) {
        let mut r = rng(seed);
        let c = random_cone(&mut r, 4, 6);
        let x = random_element(&mut r, &c, 3.0);
        let frame = x.spectral().frame;
        let zero = EjaElement::zeros(c.clone());
        let mut sum = zero.clone();
        for (i, qi) in frame.iter().enumerate() {
            prop_assert!(max_abs_diff(&qi.jordan_mul(qi).unwrap(), qi) <= 1e-10);
            for qj in &frame[i + 1..] {
                prop_assert!(max_abs_diff(&qi.jordan_mul(qj).unwrap(), &zero) <= 1e-10);
            }
            sum.axpy(1.0, qi).unwrap();
        }
        prop_assert!(max_abs_diff(&sum, &EjaElement::identity(c)) <= 1e-10);
    }

    #[test]
    fn inner_with_identity_is_trace(seed in any::<u64>()) {
        let mut r = rng(seed);
        let c = random_cone(&mut r, 4, 6);
        let x = random_element(&mut r, &c, 2.0);
        let e = EjaElement::identity(c);
        prop_assert!((x.inner(&e).unwrap() - x.trace()).abs() <= 1e-10);
        prop_assert!((x.inner(&e).unwrap() - e.jordan_mul(&x).unwrap().trace()).abs() <= 1e-10);
    }

    #[test]
    fn golden_thompson(seed in any::<u64>(), nx in 0.0f64..=1.0, ny in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let c = random_cone(&mut r, 4, 6);
        let x = with_inf_norm(&random_element(&mut r, &c, 1.0), nx);
        let y = with_inf_norm(&random_element(&mut r, &c, 1.0), ny);
        let lhs = x.add(&y).unwrap().exp_map().unwrap().trace();
        let rhs = x.exp_map().unwrap().jordan_mul(&y.exp_map().unwrap()).unwrap().trace();
        prop_assert!(lhs <= rhs + 1e-9, "{} > {}", lhs, rhs);
    }

    #[test]
    fn self_duality(seed in any::<u64>()) {
        let mut r = rng(seed);
        let c = random_cone(&mut r, 4, 6);
        let x = random_cone_member(&mut r, &c);
        let y = random_cone_member(&mut r, &c);
        prop_assert!(x.lambda_min() >= -1e-10);
        prop_assert!(x.inner(&y).unwrap() >= -1e-10);
    }

    #[test]
    fn exp_spectrum_is_positive(seed in any::<u64>(), norm in 0.0f64..15.0) {
        // Beyond a spread of about 36 the small second-order eigenvalue of
        // exp(x) cancels to rounding level when read back from coordinates.
        let mut r = rng(seed);
        let c = random_cone(&mut r, 4, 6);
        let x = with_inf_norm(&random_element(&mut r, &c, 1.0), norm);
        prop_assert!(x.exp_map().unwrap().lambda_min() > 0.0);
    }

    #[test]
    fn normalized_exp_matches_definition(seed in any::<u64>(), scale in -5.0f64..5.0) {
        let mut r = rng(seed);
        let c = random_cone(&mut r, 4, 6);
        let x = random_element(&mut r, &c, 1.0);
        let direct = x.scale(scale).exp_map().unwrap().trace_normalize().unwrap();
        let fused = x.normalized_exp(scale).unwrap();
        prop_assert!(max_abs_diff(&direct, &fused) <= 1e-12);
        prop_assert!((fused.trace() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn orthant_algebra_is_coordinatewise(v in prop::collection::vec(-5.0f64..5.0, 1..12)) {
        let c = Arc::new(ConeDescriptor::orthant(v.len()).unwrap());
        let x = EjaElement::new(c, v.clone()).unwrap();
        prop_assert_eq!(x.eigenvalues(), v.clone());
        let sq: Vec<f64> = v.iter().map(|a| a * a).collect();
        prop_assert!(close(x.jordan_mul(&x).unwrap().coords(), &sq, 1e-12));
        let ex: Vec<f64> = v.iter().map(|a| a.exp()).collect();
        prop_assert!(close(x.exp_map().unwrap().coords(), &ex, 1e-12));
    }

    #[test]
    fn soc_eigenvalues_match_formula(u in prop::collection::vec(-3.0f64..3.0, 1..8), u0 in -3.0f64..3.0) {
        let d = u.len();
        let c = Arc::new(ConeDescriptor::new([BlockKind::SecondOrder(d)]).unwrap());
        let mut coords = u.clone();
        coords.push(u0);
        let x = EjaElement::new(c, coords).unwrap();
        let n = u.iter().map(|a| a * a).sum::<f64>().sqrt();
        let s = std::f64::consts::SQRT_2;
        prop_assert!(close(&x.eigenvalues(), &[(u0 + n) / s, (u0 - n) / s], 1e-12));
        prop_assert!((x.inf_norm() - (u0.abs() + n) / s).abs() <= 1e-12);
    }
}
