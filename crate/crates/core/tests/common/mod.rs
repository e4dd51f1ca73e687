#![allow(dead_code)]

use std::sync::Arc;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use trapnls::{Complex64, NonlinearitySpec, RadialField, RadialGrid, Sign};

pub fn grid(n: usize) -> Arc<RadialGrid> {
    RadialGrid::new(n, 12.0).unwrap()
}

pub fn exp2() -> NonlinearitySpec {
    NonlinearitySpec::exp_truncated(2, 0.5, Sign::Focusing).unwrap()
}

pub fn cubic() -> NonlinearitySpec {
    NonlinearitySpec::monomial(3.0, 0.5, Sign::Focusing).unwrap()
}

/// Sum of three Gaussian bumps with random centres, widths, amplitudes and
/// phases; Gaussian-tailed and at most about 1.2 in modulus.
pub fn random_field(grid: &Arc<RadialGrid>, rng: &mut StdRng) -> RadialField {
    let bumps: Vec<(f64, f64, Complex64)> = (0..3)
        .map(|_| {
            let centre = rng.gen_range(0.0..2.5);
            let width = rng.gen_range(0.6..1.6);
            let amp = Complex64::from_polar(rng.gen_range(0.05..0.4), rng.gen_range(-3.2..3.2));
            (centre, width, amp)
        })
        .collect();
    RadialField::from_fn(grid.clone(), |r| {
        bumps
            .iter()
            .map(|(c, w, a)| a * (-(r - c) * (r - c) / (w * w)).exp())
            .sum()
    })
    .unwrap()
}

pub fn random_fields(grid: &Arc<RadialGrid>, seed: u64, count: usize) -> Vec<RadialField> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count).map(|_| random_field(grid, &mut rng)).collect()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Roundoff bound for an identity between sums of terms of size `scale`.
pub fn roundoff(scale: f64) -> f64 {
    1e-12 * (1.0 + scale.abs())
}
