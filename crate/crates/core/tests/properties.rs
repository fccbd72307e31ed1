use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hypodecay::condition::{minimize_kappa_2d, minimize_kappa_weights};
use hypodecay::family::{beta0, lower_family, rate_grid, upper_bound_constant, upper_family};
use hypodecay::goldstein_taylor::{
    decompose, evolve, modal_deviation, mode_matrix, reconstruct, InitialDatum, ModeVector, TorusField,
};
use hypodecay::lyapunov::{build_weighted_p, certificate_from_p, lyapunov_residual, LyapunovMatrix};
use hypodecay::propagator::{exact_solution, rk4_oracle, verify_bounds_with, DecayBound, TrajectoryNorms};
use hypodecay::sharp::{
    classify_and_sharp_constant, envelope_curves, sharp_constant_of_form, sup_m_plus_params, unit_datum, Case2D,
    EnvelopeParams,
};
use hypodecay::spectral::{
    canonical_2d_form, classify_stability, eigendecompose, hermitian_eigen, CMatrix, CVector, Canonical2DForm,
    ComplexMatrix,
};
use hypodecay::Complex64;

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_complex(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| cx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| cx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    random_complex(rng, n).qr().q()
}

/// Positive stable, diagonalizable, `n <= 4`, spectral gap in `[0.1, 1.1]`.
fn random_stable(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    loop {
        let m = random_complex(rng, n);
        let Ok(spec) = eigendecompose(&ComplexMatrix::new(m.clone()).unwrap()) else {
            continue;
        };
        let shift = 0.1 + rng.gen_range(0.0..1.0) - spec.spectral_gap();
        let c = ComplexMatrix::new(m + CMatrix::identity(n, n).scale(shift)).unwrap();
        if eigendecompose(&c).is_ok_and(|s| !s.defective && s.eigvec_condition < 1e4) {
            return c;
        }
    }
}

/// `U M U*` for the model matrix of the given canonical data.
fn system_from_form(rng: &mut ChaCha8Rng, alpha: f64, l1: Complex64, l2: Complex64) -> ComplexMatrix {
    let m = Canonical2DForm::from_parts(alpha, l1, l2).model_matrix();
    let u = random_unitary(rng, 2);
    ComplexMatrix::new(&u * m * u.adjoint()).unwrap()
}

fn random_unit(rng: &mut ChaCha8Rng) -> CVector {
    unit_datum(rng.gen_range(0.0..PI), rng.gen_range(0.0..2.0 * PI))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigendecomposition_reconstructs(seed in any::<u64>(), n in 2usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = ComplexMatrix::new(random_complex(&mut rng, n)).unwrap();
        let spec = eigendecompose(&c).unwrap();
        prop_assume!(!spec.defective);
        let d = CMatrix::from_diagonal(&CVector::from_vec(spec.eigenvalues.clone()));
        let back = &spec.right * d * spec.right.clone().try_inverse().unwrap();
        prop_assert!((back - c.matrix()).norm() <= 1e-9 * c.matrix().norm());
    }

    #[test]
    fn stability_bounds_are_ordered(seed in any::<u64>(), n in 2usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = ComplexMatrix::new(random_complex(&mut rng, n)).unwrap();
        let spec = eigendecompose(&c).unwrap();
        let s = classify_stability(&c, &spec);
        let eps = 1e-12 * (1.0 + c.norm2());
        prop_assert!(s.mu_s <= s.mu + eps && s.mu <= s.nu + eps && s.nu <= s.nu_s + eps);
    }

    #[test]
    fn canonical_form_shape_and_unitary_invariance(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_stable(&mut rng, 2);
        let spec = eigendecompose(&c).unwrap();
        let form = canonical_2d_form(&spec).unwrap();
        prop_assert!((0.0..1.0).contains(&form.alpha));
        prop_assert!(form.w1_new[1].norm() <= 1e-12);
        prop_assert!(form.w2_new[1].im.abs() <= 1e-12 && form.w2_new[1].re >= 0.0);
        let u = &form.unitary;
        prop_assert!((u.adjoint() * u - CMatrix::identity(2, 2)).norm() <= 1e-12);
        let model = ComplexMatrix::new(form.model_matrix()).unwrap();
        let model_spec = eigendecompose(&model).unwrap();
        let f0 = random_vector(&mut rng, 2);
        for t in [0.0, 0.3, 1.7, 5.0] {
            let a = exact_solution(&spec, &f0, t).unwrap().norm();
            let b = exact_solution(&model_spec, &form.to_canonical(&f0), t).unwrap().norm();
            prop_assert!(rel(a, b) <= 1e-9, "t = {}: {} vs {}", t, a, b);
        }
    }

    #[test]
    fn weighted_p_certifies_decay(seed in any::<u64>(), n in 2usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_stable(&mut rng, n);
        let spec = eigendecompose(&c).unwrap();
        let mu = spec.spectral_gap();
        let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..5.0)).collect();
        let p = build_weighted_p(&spec, &weights).unwrap();
        let cert = certificate_from_p(&c, p.clone(), mu).unwrap();
        let times: Vec<f64> = (0..200).map(|i| 10.0 / mu * i as f64 / 199.0).collect();
        for _ in 0..10 {
            let f0 = random_vector(&mut rng, n);
            let e0 = p.energy(&f0);
            let mut prev = f64::INFINITY;
            for &t in &times {
                let f = exact_solution(&spec, &f0, t).unwrap();
                prop_assert!(f.norm() <= cert.constant * (-mu * t).exp() * f0.norm() * (1.0 + 1e-8));
                let scaled = p.energy(&f) * (2.0 * mu * t).exp();
                prop_assert!(scaled <= e0 * (1.0 + 1e-8));
                prop_assert!(scaled <= prev * (1.0 + 1e-8));
                prev = scaled;
            }
        }
    }

    #[test]
    fn certificate_is_scale_invariant(seed in any::<u64>(), tau in 1e-3f64..1e3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_stable(&mut rng, 3);
        let spec = eigendecompose(&c).unwrap();
        let p = build_weighted_p(&spec, &[1.0, 2.0, 0.5]).unwrap();
        let mu = spec.spectral_gap();
        let a = certificate_from_p(&c, p.clone(), mu).unwrap();
        let b = certificate_from_p(&c, p.scaled(tau), mu).unwrap();
        prop_assert!(rel(a.constant, b.constant) <= 1e-12);
        prop_assert!(rel(a.residual * tau, b.residual) <= 1e-6 || (a.residual.abs() <= 1e-9 * p.lambda_max));
    }

    #[test]
    fn weight_search_never_worse_than_equal(seed in any::<u64>(), n in 2usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = eigendecompose(&random_stable(&mut rng, n)).unwrap();
        let r = minimize_kappa_weights(&spec.left, 1e-10).unwrap();
        prop_assert!(r.kappa <= r.kappa_equal * (1.0 + 1e-12));
    }

    #[test]
    fn two_d_optimum_is_not_beaten_by_admissible_perturbations(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_stable(&mut rng, 2);
        let spec = eigendecompose(&c).unwrap();
        let (_, kmin) = minimize_kappa_2d(&canonical_2d_form(&spec).unwrap());
        let base = build_weighted_p(&spec, &[1.0, 1.0]).unwrap();
        let mu = spec.spectral_gap();
        for _ in 0..50 {
            let h = random_complex(&mut rng, 2);
            // larger than the residual slack can hide, so only truly admissible P pass
            let eps = 10f64.powf(rng.gen_range(-4.0..-1.0));
            let Ok(p) = LyapunovMatrix::new(&base.p + (&h + h.adjoint()).scale(eps)) else { continue };
            if lyapunov_residual(&c, &p, mu) >= 0.0 {
                prop_assert!(p.kappa() >= kmin - 1e-9);
            }
        }
    }

    #[test]
    fn equal_real_parts_sharp_at_half_period(
        seed in any::<u64>(), alpha in 0.05f64..0.95, re in 0.1f64..2.0, d1 in -3.0f64..3.0, gap in 0.2f64..3.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = system_from_form(&mut rng, alpha, cx(re, d1), cx(re, d1 + gap));
        let r = classify_and_sharp_constant(&c).unwrap();
        prop_assert_eq!(r.case, Case2D::EqualRealParts);
        let spec = eigendecompose(&c).unwrap();
        let p = build_weighted_p(&spec, &[1.0, 1.0]).unwrap();
        let y = hermitian_eigen(&p.p).1.column(1).into_owned();
        let t0 = PI / gap;
        let ratio = exact_solution(&spec, &y, t0).unwrap().norm() * (re * t0).exp() / y.norm();
        prop_assert!(rel(ratio, r.c_sharp) <= 1e-9, "{} vs {}", ratio, r.c_sharp);
    }

    #[test]
    fn equal_imaginary_parts_sharp_asymptotically(
        seed in any::<u64>(), alpha in 0.05f64..0.95, re in 0.1f64..2.0, gap in 0.2f64..3.0, im in -2.0f64..2.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = system_from_form(&mut rng, alpha, cx(re, im), cx(re + gap, im));
        let spec = eigendecompose(&c).unwrap();
        let w1 = spec.left_vector(0);
        let limit = 1.0 / (1.0 - alpha * alpha).sqrt();
        let ratio = |t: f64| exact_solution(&spec, &w1, t).unwrap().norm() * (re * t).exp();
        let t_end = 40.0 / gap;
        prop_assert!(rel(ratio(t_end), limit) <= 1e-9);
        let tail: Vec<f64> = (0..100).map(|i| ratio(t_end * (0.5 + 0.5 * i as f64 / 99.0))).collect();
        prop_assert!(tail.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }

    #[test]
    fn fully_distinct_sup_lies_in_bracket(
        alpha in 0.05f64..0.95, re in 0.1f64..2.0, gap in 0.1f64..2.0, delta in 0.2f64..3.0,
    ) {
        let form = Canonical2DForm::from_parts(alpha, cx(re, 0.0), cx(re + gap, delta));
        let params = EnvelopeParams::from_form(&form);
        let lo = 1.0 / (1.0 - alpha * alpha);
        let hi = (1.0 + alpha) / (1.0 - alpha);
        prop_assert!(params.m_plus(PI / delta) > lo + 1e-12);
        let sup = sup_m_plus_params(&params);
        prop_assert!(sup.value > lo + 1e-12 && sup.value <= hi + 1e-9);
        let r = sharp_constant_of_form(&form);
        prop_assert!(r.bracket.0 <= r.c_sharp + 1e-12 && r.c_sharp <= r.bracket.1 + 1e-9);
    }

    #[test]
    fn envelopes_bound_trajectories(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_stable(&mut rng, 2);
        let spec = eigendecompose(&c).unwrap();
        let times: Vec<f64> = (0..100).map(|i| 0.1 * i as f64).collect();
        let env = envelope_curves(&c, &times).unwrap();
        for _ in 0..20 {
            let f0 = random_unit(&mut rng);
            for (i, &t) in times.iter().enumerate() {
                let n2 = exact_solution(&spec, &f0, t).unwrap().norm_squared();
                prop_assert!(n2 <= env.h_plus[i] * (1.0 + 1e-9) && n2 >= env.h_minus[i] * (1.0 - 1e-9));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rate_families_dominate_trajectories(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_stable(&mut rng, 2);
        let spec = eigendecompose(&c).unwrap();
        let form = canonical_2d_form(&spec).unwrap();
        let mu = spec.spectral_gap();
        let bounds: Vec<DecayBound> = upper_family(&form, 20)
            .into_iter()
            .chain(lower_family(&form, 20))
            .map(|b| DecayBound { rate: b.rate, constant: b.constant, direction: b.direction })
            .collect();
        let times: Vec<f64> = (0..400).map(|i| 20.0 / mu * i as f64 / 399.0).collect();
        let trajectories: Vec<TrajectoryNorms> = (0..50)
            .map(|_| TrajectoryNorms::sample(&spec, &random_unit(&mut rng), &times).unwrap())
            .collect();
        let report = verify_bounds_with(&trajectories, &bounds, 1e-9);
        prop_assert!(report.pass, "violations {:?}", report.violations);
    }

    #[test]
    fn upper_constant_at_spectral_gap_matches_sharp_constant(
        seed in any::<u64>(), alpha in 0.05f64..0.95, re in 0.1f64..2.0, gap in 0.2f64..2.0, case in 0usize..3,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (l1, l2) = match case {
            0 => (cx(re, 0.3), cx(re, 0.3 + gap)),
            1 => (cx(re, -0.4), cx(re + gap, -0.4)),
            _ => (cx(re, 0.0), cx(re + gap, 0.7 * gap)),
        };
        let c = system_from_form(&mut rng, alpha, l1, l2);
        let spec = eigendecompose(&c).unwrap();
        let form = canonical_2d_form(&spec).unwrap();
        let sharp = sharp_constant_of_form(&form);
        let c1 = upper_bound_constant(&form, spec.spectral_gap()).unwrap().constant;
        prop_assert!(c1 >= sharp.c_sharp - 1e-9);
        let corner = ((1.0 + alpha) / (1.0 - alpha)).sqrt();
        match sharp.case {
            Case2D::EqualRealParts => prop_assert!(rel(c1, sharp.c_sharp) <= 1e-9),
            Case2D::EqualImaginaryParts => {
                prop_assert!(rel(c1, corner) <= 1e-9);
                prop_assert!(c1 > sharp.c_sharp + 1e-9);
            }
            _ => {}
        }
    }

    #[test]
    fn beta0_in_unit_interval(seed in any::<u64>(), s in 0.0f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_stable(&mut rng, 2);
        let spec = eigendecompose(&c).unwrap();
        let form = canonical_2d_form(&spec).unwrap();
        let st = classify_stability(&c, &spec);
        for r in rate_grid(st.mu_s, st.mu, 5).into_iter().chain(rate_grid(st.nu, st.nu_s, 5)) {
            let b = beta0(&form, r);
            prop_assert!((0.0..=1.0).contains(&b), "beta0 {} at rate {}", b, r);
        }
        let r = st.mu_s + s * (st.mu - st.mu_s);
        prop_assert!((0.0..=1.0).contains(&beta0(&form, r)));
    }

    #[test]
    fn upper_constant_is_one_at_coercivity_rate(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_stable(&mut rng, 2);
        let spec = eigendecompose(&c).unwrap();
        let form = canonical_2d_form(&spec).unwrap();
        let mu_s = classify_stability(&c, &spec).mu_s;
        let c1 = upper_bound_constant(&form, mu_s).unwrap().constant;
        prop_assert!((c1 - 1.0).abs() <= 1e-8, "c1(mu_s) = {}", c1);
    }

    #[test]
    fn gt_mass_is_conserved(seed in any::<u64>()) {
        let field = InitialDatum::Random(seed).build(128, 32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..50 {
            let t = rng.gen_range(0.0..30.0);
            let g = evolve(&field, t, 32).unwrap();
            prop_assert!((g.mass() - field.mass()).abs() <= 1e-10 * (1.0 + field.mass().abs()));
        }
    }

    #[test]
    fn gt_round_trip_and_parseval(seed in any::<u64>()) {
        let field = InitialDatum::Random(seed).build(64, 31).unwrap();
        let modes = decompose(&field, 31).unwrap();
        let back = reconstruct(&modes, 64).unwrap();
        let err = back.f_plus.iter().zip(&field.f_plus)
            .chain(back.f_minus.iter().zip(&field.f_minus))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        prop_assert!(err <= 1e-12);
        prop_assert!(rel(modal_deviation(&modes), field.deviation_norm()) <= 1e-10);
    }

    #[test]
    fn gt_mode_propagator_matches_rk4(k in -12i64..=12, t in 0.0f64..10.0, re in -1.0f64..1.0, im in -1.0f64..1.0) {
        let m = ModeVector { k, u: [cx(re, im), cx(im, -re)] };
        prop_assume!(m.norm_sqr() > 1e-6);
        let exact = m.evolved(t).to_vector();
        let rk = rk4_oracle(&mode_matrix(k), &m.to_vector(), t, 1e-4).unwrap();
        prop_assert!((exact - &rk).norm() <= 1e-8 * rk.norm().max(1e-12));
    }
}

#[test]
fn gt_mode_constants_uniform_in_k() {
    let worst = (1..=64)
        .flat_map(|k| [k, -k])
        .map(|k| classify_and_sharp_constant(&mode_matrix(k)).unwrap().c_sharp)
        .fold(0.0, f64::max);
    assert!((worst - 3f64.sqrt()).abs() <= 1e-12, "{worst}");
}

#[test]
fn gt_steady_field_has_no_deviation() {
    let f = TorusField::steady(64).unwrap();
    assert_eq!(f.deviation_norm(), 0.0);
    let g = evolve(&f, 3.0, 16).unwrap();
    assert!(g.deviation_norm() <= 1e-14);
}
