use proptest::prelude::*;
use trapnls::nonlin::{check_conditions, log_sample, DEFAULT_EPS_CANDIDATES};
use trapnls::{NonlinearitySpec, Sign};

fn families() -> Vec<NonlinearitySpec> {
    vec![
        NonlinearitySpec::exp_truncated(2, 0.5, Sign::Focusing).unwrap(),
        NonlinearitySpec::exp_truncated(3, 1.5, Sign::Focusing).unwrap(),
        NonlinearitySpec::exp_subcritical(0.5, Sign::Focusing).unwrap(),
        NonlinearitySpec::monomial(3.0, 0.5, Sign::Focusing).unwrap(),
        NonlinearitySpec::monomial(5.5, 1.0, Sign::Focusing).unwrap(),
    ]
}

fn centered(f: impl Fn(f64) -> f64, s: f64, h: f64) -> f64 {
    (f(s + h) - f(s - h)) / (2.0 * h)
}

#[test]
fn derivatives_match_centered_differences() {
    let h = 1e-4;
    for spec in families() {
        for s in log_sample(0.01, 10.0, 200) {
            let pairs: [(f64, f64); 3] = [
                (
                    centered(|x| spec.big_g(x).unwrap(), s, h),
                    spec.g1(s).unwrap(),
                ),
                (centered(|x| spec.g1(x).unwrap(), s, h), spec.g2(s).unwrap()),
                (centered(|x| spec.g2(x).unwrap(), s, h), spec.g3(s).unwrap()),
            ];
            for (k, (fd, exact)) in pairs.iter().enumerate() {
                // O(h²) truncation scaled by the next derivative, plus difference roundoff
                let scale = 1.0 + exact.abs() + spec.g3(s).unwrap().abs();
                let tol = 10.0 * h * h * scale / s.min(1.0).powi(3) + 1e-9 * scale;
                assert!(
                    (fd - exact).abs() <= tol,
                    "{spec} G^({}) at s={s}: fd {fd} vs {exact}",
                    k + 1
                );
            }
        }
    }
}

#[test]
fn g_is_rho_times_g_prime_of_square() {
    for spec in families() {
        for i in 0..1000 {
            let rho = 3.0 * i as f64 / 999.0;
            let g = spec.g(rho).unwrap();
            let expected = rho * spec.g1(rho * rho).unwrap();
            assert!(
                (g - expected).abs() <= 4.0 * f64::EPSILON * expected.abs(),
                "{spec} ρ={rho}"
            );
        }
        assert_eq!(spec.big_g(0.0).unwrap(), 0.0);
        assert_eq!(spec.g(0.0).unwrap(), 0.0);
    }
}

#[test]
fn exp_truncated_small_amplitude_power() {
    for k in [2u32, 3, 4] {
        let spec = NonlinearitySpec::exp_truncated(k, 0.5, Sign::Focusing).unwrap();
        let rhos = log_sample(1e-4, 1e-2, 40);
        let xs: Vec<f64> = rhos.iter().map(|r| r.ln()).collect();
        let ys: Vec<f64> = rhos.iter().map(|r| spec.g(*r).unwrap().ln()).collect();
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let slope = cov / var;
        let q = (2 * k + 1) as f64;
        assert!((slope - q).abs() < 0.05, "K={k}: slope {slope}");

        // leading coefficient ρ^{2K+1}/K!
        let rho: f64 = 1e-3;
        let fact: f64 = (1..=k).map(f64::from).product();
        let lead = rho.powf(q) / fact;
        assert!((spec.g(rho).unwrap() / lead - 1.0).abs() < 1e-5);
    }
}

#[test]
fn exp_truncated_k2_shifted_conditions_hold() {
    let spec = NonlinearitySpec::exp_truncated(2, 0.5, Sign::Focusing).unwrap();
    for s in log_sample(1e-4, 10.0, 2000) {
        let m = spec.moments(s).unwrap();
        let d1 = m.dg - m.g;
        let d11 = m.shifted_product(1.0, 1.0);
        assert!(d1 > 0.0 && d11 > 0.0, "s={s}: (D−1)G={d1}, (D−1)²G={d11}");
    }
}

#[test]
fn monomial_dilation_identity() {
    for p in [1.5, 3.0, 4.25, 7.0] {
        let spec = NonlinearitySpec::monomial(p, 0.5, Sign::Focusing).unwrap();
        for s in log_sample(1e-3, 50.0, 300) {
            // s·G'(s) by the derivative route, against the closed form
            let dg = s * spec.g1(s).unwrap();
            let expected = 0.5 * (p + 1.0) * spec.big_g(s).unwrap();
            assert!(
                (dg - expected).abs() <= 8.0 * f64::EPSILON * expected,
                "p={p} s={s}"
            );
        }
    }
}

#[test]
fn condition_report_is_consistent_with_samples() {
    let sample = log_sample(1e-4, 10.0, 400);
    for spec in families() {
        let rep = check_conditions(&spec, &sample, &DEFAULT_EPS_CANDIDATES).unwrap();
        if rep.clauses.d_minus_1_positive && rep.clauses.d_minus_1_squared_positive {
            for &s in &sample {
                let m = spec.moments(s).unwrap();
                assert!(m.dg - m.g > 0.0 && m.shifted_product(1.0, 1.0) > 0.0);
            }
        }
        if rep.satisfies_f {
            assert!(rep.clauses.d_minus_1_positive && rep.clauses.d_minus_1_squared_positive);
        }
        assert_eq!(rep.growth_class, spec.growth_class());
    }
}

proptest! {
    #[test]
    fn big_g_is_nonnegative_and_increasing(s in 0.0f64..20.0, ds in 1e-3f64..1.0) {
        for spec in families() {
            let a = spec.big_g(s).unwrap();
            let b = spec.big_g(s + ds).unwrap();
            prop_assert!(a >= 0.0);
            prop_assert!(b >= a);
        }
    }

    #[test]
    fn sign_does_not_change_the_profile(s in 0.0f64..20.0) {
        for spec in families() {
            let flipped = spec.with_sign(Sign::Defocusing);
            prop_assert_eq!(spec.big_g(s).unwrap(), flipped.big_g(s).unwrap());
            prop_assert_eq!(spec.eps(), -flipped.eps());
        }
    }
}
