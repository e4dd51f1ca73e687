mod common;

use common::{cubic, exp2, grid, random_fields, rel, roundoff};
use proptest::prelude::*;
use trapnls::functionals::{orbit_distance, scaling_derivatives, ScalingProfile};
use trapnls::nonlin::{check_conditions, log_sample, DEFAULT_EPS_CANDIDATES};
use trapnls::{Evaluation, NonlinearitySpec, RadialField, Sign};

fn specs() -> Vec<NonlinearitySpec> {
    vec![
        exp2(),
        exp2().with_sign(Sign::Defocusing),
        cubic(),
        NonlinearitySpec::exp_subcritical(1.0, Sign::Focusing).unwrap(),
    ]
}

#[test]
fn algebraic_ties_on_random_fields() {
    let g = grid(512);
    for spec in specs() {
        for u in random_fields(&g, 3, 100) {
            let ev = Evaluation::new(&spec, &u).unwrap();
            let scale = ev.norms.sigma2 + ev.integrals.dg.abs() + ev.integrals.g.abs();
            let tol = roundoff(scale);
            assert!((ev.action() - (ev.energy() + ev.mass())).abs() <= tol);
            let k1m1 = ev.k(1.0, -1.0).total;
            assert!((ev.p() - 0.5 * k1m1).abs() <= tol);
            assert!((ev.t() - (ev.action() - 0.5 * k1m1)).abs() <= tol);
            assert!((ev.t() - ev.t_expanded()).abs() <= tol, "{spec}");
            for (a, b) in [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0)] {
                let h = ev.h(a, b).unwrap();
                let k = ev.k(a, b).total;
                assert!((h - (ev.action() - k / (2.0 * (a + 2.0 * b)))).abs() <= tol);
                assert!(
                    (h - ev.h_expanded(a, b).unwrap()).abs() <= tol,
                    "{spec} ({a},{b})"
                );
            }
            let (k10, k01) = (ev.k(1.0, 0.0).total, ev.k(0.0, 1.0).total);
            for (a, b) in [(2.0, -1.0), (1.0, -1.0), (0.3, 2.5)] {
                let k = ev.k(a, b);
                assert!((k.total - (a * k10 + b * k01)).abs() <= 4.0 * tol);
                assert!((k.total - (k.quadratic + k.nonlinear)).abs() <= tol);
            }
            assert!(
                (ev.virial_rhs() - ev.p()).abs() <= tol,
                "virial vs P for {spec}"
            );
            assert!(ev.h(1.0, -0.5).is_none());
        }
    }
}

#[test]
fn report_is_gauge_invariant() {
    let g = grid(512);
    for spec in specs() {
        for u in random_fields(&g, 5, 20) {
            let a = Evaluation::new(&spec, &u).unwrap().report();
            let b = Evaluation::new(&spec, &u.phase_rotated(0.7))
                .unwrap()
                .report();
            let va = serde_json::to_value(a).unwrap();
            let vb = serde_json::to_value(b).unwrap();
            for (key, x) in va.as_object().unwrap() {
                let x = x.as_f64().unwrap();
                let y = vb[key].as_f64().unwrap();
                assert!(
                    (x - y).abs() <= 1e-12 * (1.0 + x.abs()),
                    "{key}: {x} vs {y}"
                );
            }
        }
    }
}

#[test]
fn scaling_derivative_is_twice_p_and_matches_differences() {
    let g = grid(512);
    for spec in specs() {
        for u in random_fields(&g, 9, 25) {
            let ev = Evaluation::new(&spec, &u).unwrap();
            let sd = scaling_derivatives(&spec, &u).unwrap();
            let scale = ev.norms.sigma2 + ev.integrals.dg.abs();
            assert!((sd.d_e - 2.0 * ev.p()).abs() <= roundoff(scale), "{spec}");
            assert!((sd.profile.energy_at(1.0).unwrap() - ev.energy()).abs() <= roundoff(scale));

            let h = 1e-4;
            let e = |l: f64| sd.profile.energy_at(l).unwrap();
            let fd1 = (e(1.0 + h) - e(1.0 - h)) / (2.0 * h);
            let fd2 = (e(1.0 + h) - 2.0 * e(1.0) + e(1.0 - h)) / (h * h);
            assert!(
                (fd1 - sd.d_e).abs() <= 1e-6 * (1.0 + scale),
                "{spec}: {fd1} vs {}",
                sd.d_e
            );
            assert!(
                (fd2 - sd.d2_e).abs() <= 1e-4 * (1.0 + scale),
                "{spec}: {fd2} vs {}",
                sd.d2_e
            );
            assert!((0.5 * sd.d2_e - ev.half_d2e()).abs() <= roundoff(scale));
        }
    }
}

#[test]
fn closed_form_scaling_matches_resampled_energy() {
    let g = grid(1024);
    for spec in [exp2(), cubic()] {
        for width in [0.8, 1.0, 1.5] {
            let u = RadialField::gaussian(g.clone(), 0.9, width).unwrap();
            let profile = ScalingProfile::new(&spec, &u).unwrap();
            for lambda in [0.8, 1.25] {
                let closed = profile.energy_at(lambda).unwrap();
                let resampled = Evaluation::new(&spec, &u.resample_lambda(lambda).unwrap())
                    .unwrap()
                    .energy();
                assert!(
                    rel(resampled, closed) <= 1e-3,
                    "{spec} w={width} λ={lambda}: {resampled} vs {closed}"
                );
            }
        }
    }
}

#[test]
fn t_is_monotone_along_amplitude_for_strong_condition_families() {
    let sample = log_sample(1e-4, 10.0, 400);
    let candidates = [
        exp2(),
        NonlinearitySpec::exp_truncated(4, 2.5, Sign::Focusing).unwrap(),
        NonlinearitySpec::monomial(7.0, 1.0, Sign::Focusing).unwrap(),
        cubic(),
    ];
    let g = grid(512);
    let fields = random_fields(&g, 21, 10);
    let mut checked = 0;
    for spec in candidates {
        let rep = check_conditions(&spec, &sample, &DEFAULT_EPS_CANDIDATES).unwrap();
        if !(rep.clauses.strong_eps_positive && rep.clauses.strong_product_positive) {
            continue;
        }
        checked += 1;
        for u in &fields {
            let mut prev = f64::NEG_INFINITY;
            for i in 0..50 {
                let lambda = 0.1 + 1.9 * i as f64 / 49.0;
                let t = Evaluation::new(&spec, &u.scaled(lambda.into()))
                    .unwrap()
                    .t();
                assert!(
                    t >= prev - 1e-12 * t.abs(),
                    "{spec} λ={lambda}: {t} < {prev}"
                );
                prev = t;
            }
        }
    }
    assert!(
        checked >= 2,
        "too few families satisfy the strong condition"
    );
}

#[test]
fn monomial_index_has_closed_coefficients() {
    let g = grid(512);
    for (p, mu) in [(3.0, 0.5), (5.0, 1.0), (2.5, 2.0)] {
        let spec = NonlinearitySpec::monomial(p, mu, Sign::Focusing).unwrap();
        for u in random_fields(&g, 31, 10) {
            // ∫r^μ G directly, with G(s) = (2/(p+1)) s^{(p+1)/2}
            let samples: Vec<f64> = g
                .nodes()
                .iter()
                .zip(u.values())
                .map(|(r, z)| r.powf(mu) * 2.0 / (p + 1.0) * z.norm().powf(p + 1.0))
                .collect();
            let ig = g.integrate(&samples);
            let mass = u.norms().unwrap().mass;
            let c = 0.5 * (p + 1.0);
            let bracket = p * c - (5.0 + 2.0 * mu) * c + (2.0 + mu) * (1.0 + 0.5 * mu);
            let expected = 2.0 * (2.0 * mass + bracket * ig);
            let index = Evaluation::new(&spec, &u).unwrap().instability_index();
            assert!(
                (index - expected).abs() <= 1e-12 * (mass + ig.abs()),
                "p={p} μ={mu}"
            );
        }
    }
}

#[test]
fn orbit_distance_of_rescaled_field() {
    let g = grid(512);
    for phi in random_fields(&g, 41, 10) {
        let sigma = phi.norms().unwrap().sigma2.sqrt();
        let d = orbit_distance(&phi.scaled(1.1.into()), &phi).unwrap();
        assert!((d.distance - 0.1 * sigma).abs() <= 1e-12 * sigma);
        let rot = orbit_distance(&phi.phase_rotated(0.3), &phi).unwrap();
        assert!(rot.distance <= 1e-7 * sigma);
        assert!((rot.theta_star - 0.3).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn energy_splits_by_sign(amp in 0.05f64..1.5, width in 0.5f64..2.0) {
        let g = grid(256);
        let u = RadialField::gaussian(g, amp, width).unwrap();
        let f = Evaluation::new(&exp2(), &u).unwrap();
        let d = Evaluation::new(&exp2().with_sign(Sign::Defocusing), &u).unwrap();
        let quad = f.norms.grad2 + f.norms.variance;
        prop_assert!(d.energy() >= quad);
        prop_assert!(f.energy() <= quad);
        prop_assert!((f.energy() + d.energy() - 2.0 * quad).abs() <= 1e-12 * quad);
    }
}
