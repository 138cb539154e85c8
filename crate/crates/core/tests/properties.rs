use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;
use sigtau::algebra::{make_matrix_algebra, NormKind, WeightedNorm};
use sigtau::control::{pnorm_closed_form, ControlFunction};
use sigtau::derivation::{inner_derivation, leibniz_residual};
use sigtau::linalg::{unvectorize, vectorize, Matrix, Vector};
use sigtau::perturb::{make_annihilator_perturbation, PerturbationSpec};
use sigtau::scalar::certificate_multiplier;
use sigtau::{
    dual_bimodule, extract_additive, three_unimodular, Bimodule, DerivationTriple, ExtractOptions, LinearMap, PointMap,
    SpaceTag,
};

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| Complex64::new(re, im))
}

fn cvec(n: usize) -> impl Strategy<Value = Vector> {
    proptest::collection::vec(complex(), n).prop_map(Vector::from_vec)
}

fn series(alpha: f64, beta: f64, p: f64, na: f64, nb: f64, terms: i32) -> f64 {
    let pw = |r: f64| if r == 0.0 { 0.0 } else { r.powf(p) };
    (0..terms)
        .map(|k| {
            let s = 2f64.powi(k);
            0.5 / s * (alpha + beta * (pw(s * na) + pw(s * nb)))
        })
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn closed_form_matches_truncated_series(
        alpha in 0.0f64..2.0, beta in 0.0f64..2.0, p in 0.0f64..0.8, na in 0.0f64..10.0, nb in 0.0f64..10.0,
    ) {
        let closed = pnorm_closed_form(alpha, beta, p, na, nb);
        let direct = series(alpha, beta, p, na, nb, 400);
        prop_assert!((closed - direct).abs() <= 1e-12 * (1.0 + closed));
    }

    #[test]
    fn tilde_is_an_upper_bound_on_partial_sums(
        alpha in 0.0f64..2.0, beta in 0.0f64..2.0, p in 0.0f64..0.9, a in cvec(3), n in 0usize..40,
    ) {
        let c = ControlFunction::pnorm(alpha, beta, p).unwrap();
        let norm = WeightedNorm::unit_weights(NormKind::L1, 3);
        let total = c.tilde(&norm, &a, &a).unwrap().upper();
        let head = c.partial_sum_bound(&norm, &a, n).unwrap();
        let tail = c.tail_from(&norm, &a, &a, n).unwrap().upper();
        prop_assert!(head <= total * (1.0 + 1e-12) + 1e-15);
        prop_assert!((head + tail - total).abs() <= 1e-11 * (1.0 + total));
    }

    #[test]
    fn three_unimodular_decomposes_the_disk(r in 0.0f64..=3.0, t in 0.0f64..std::f64::consts::TAU) {
        let w = Complex64::from_polar(r, t);
        let d = three_unimodular(w).unwrap();
        prop_assert!(d.modulus_defect() <= 1e-14);
        prop_assert!((d.sum() - w).norm() <= 1e-13);
    }

    #[test]
    fn multiplier_keeps_scaled_gamma_small(r in 0.0f64..1e6, t in 0.0f64..std::f64::consts::TAU) {
        let g = Complex64::from_polar(r, t);
        let m = certificate_multiplier(g);
        prop_assert!((g * 3.0 / m).norm() < 0.75);
    }

    #[test]
    fn vectorize_roundtrip(data in proptest::collection::vec(complex(), 12)) {
        let m = Matrix::from_vec(3, 4, data);
        prop_assert_eq!(unvectorize(&vectorize(&m), 3, 4), m);
    }

    #[test]
    fn inner_derivations_are_derivations(x in cvec(4), a in cvec(4), b in cvec(4), k in 0usize..4, s in complex()) {
        let alg = Arc::new(make_matrix_algebra(2).unwrap());
        let module = Bimodule::regular(alg.clone());
        let u = alg.unit().unwrap() + alg.basis(k) * s;
        prop_assume!(alg.inverse(&u).is_ok());
        let sigma = LinearMap::endo(alg.conjugation(&u).unwrap()).unwrap();
        let tau = LinearMap::identity(4);
        let d = inner_derivation(&module, &sigma, &tau, &x).unwrap();
        let t = DerivationTriple { d, sigma, tau };
        let scale = 1.0 + x.norm() * a.norm() * b.norm() * 1e2;
        prop_assert!(leibniz_residual(&module, &t, &a, &b).unwrap() <= 1e-12 * scale);
    }

    #[test]
    fn extraction_fixes_linear_maps(data in proptest::collection::vec(complex(), 12)) {
        let alg = make_matrix_algebra(2).unwrap();
        let d0 = Matrix::from_vec(3, 4, data);
        let norm = WeightedNorm::unit_weights(NormKind::L1, 3);
        let phi = ControlFunction::constant(1e-6).unwrap();
        let r = extract_additive(&alg, &norm, SpaceTag::Module, &PointMap::linear(d0.clone()), &phi, &ExtractOptions::default()).unwrap();
        prop_assert!((r.matrix() - &d0).camax() <= 1e-14);
    }

    #[test]
    fn annihilator_noise_is_bounded_and_vanishes_at_zero(eps in 0.0f64..1.0, seed in any::<u64>(), a in cvec(4), scale in 0.0f64..100.0) {
        let module = Bimodule::regular(Arc::new(make_matrix_algebra(2).unwrap())).extend_with_annihilator(1);
        let t = DerivationTriple {
            d: LinearMap::zero(5, 4, SpaceTag::Module),
            sigma: LinearMap::identity(4),
            tau: LinearMap::identity(4),
        };
        let p = make_annihilator_perturbation(&module, &t, &PerturbationSpec::Annihilator { epsilon: eps, seed }, &module.two_sided_annihilator()).unwrap();
        let point = &a * Complex64::new(scale, 0.0);
        prop_assert!(module.element_norm(&p.f.eval(&point).unwrap()) <= eps * (1.0 + 1e-12));
        prop_assert_eq!(p.f.eval(&Vector::zeros(4)).unwrap(), Vector::zeros(5));
        prop_assert_eq!(p.f.eval(&point).unwrap(), p.f.eval(&point).unwrap());
    }

    #[test]
    fn double_dual_restores_actions(w in proptest::collection::vec(0.5f64..4.0, 4)) {
        let alg = Arc::new(make_matrix_algebra(2).unwrap());
        let x = Bimodule::regular(alg).with_norm(WeightedNorm::new(NormKind::L1, w).unwrap()).unwrap();
        let xx = dual_bimodule(&dual_bimodule(&x).unwrap()).unwrap();
        for i in 0..4 {
            prop_assert_eq!(xx.left_matrix(i), x.left_matrix(i));
            prop_assert_eq!(xx.right_matrix(i), x.right_matrix(i));
        }
        prop_assert_eq!(xx.norm(), x.norm());
    }
}
