//! Shared fixtures for the kernel benchmarks.

use std::sync::Arc;

use trapnls::{NonlinearitySpec, RadialField, RadialGrid, Sign};

pub fn grid(n: usize) -> Arc<RadialGrid> {
    RadialGrid::new(n, 12.0).expect("benchmark grid")
}

pub fn critical_spec() -> NonlinearitySpec {
    NonlinearitySpec::exp_truncated(2, 0.5, Sign::Focusing).expect("benchmark spec")
}

pub fn bump(grid: &Arc<RadialGrid>) -> RadialField {
    RadialField::gaussian(grid.clone(), 0.8, 1.0).expect("benchmark data")
}
