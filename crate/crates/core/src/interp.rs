//! Monotone piecewise-cubic Hermite interpolation (Fritsch–Carlson slopes
//! with the weighted harmonic mean of Fritsch–Butland) on a uniform mesh.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Pchip {
    x0: f64,
    h: f64,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    pub fn uniform(x0: f64, h: f64, y: Vec<f64>) -> Result<Self> {
        let n = y.len();
        if n < 3 {
            return Err(Error::InvalidArgument(
                "pchip needs at least 3 points".into(),
            ));
        }
        let delta: Vec<f64> = y.windows(2).map(|w| (w[1] - w[0]) / h).collect();
        let mut d = vec![0.0; n];
        for k in 1..n - 1 {
            let (a, b) = (delta[k - 1], delta[k]);
            if a * b > 0.0 {
                // uniform spacing: weights 3h and 3h
                d[k] = 2.0 / (1.0 / a + 1.0 / b);
            }
        }
        d[0] = end_slope(delta[0], delta[1]);
        d[n - 1] = end_slope(delta[n - 2], delta[n - 3]);
        Ok(Pchip { x0, h, y, d })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.y.len();
        let s = (x - self.x0) / self.h;
        let k = (s.floor().max(0.0) as usize).min(n - 2);
        let t = s - k as f64;
        let (y0, y1) = (self.y[k], self.y[k + 1]);
        let (d0, d1) = (self.d[k] * self.h, self.d[k + 1] * self.h);
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1
    }
}

/// Shape-preserving one-sided three-point slope at an end point.
fn end_slope(d_near: f64, d_far: f64) -> f64 {
    let d = 0.5 * (3.0 * d_near - d_far);
    if d * d_near <= 0.0 {
        0.0
    } else if d_near * d_far <= 0.0 && d.abs() > 3.0 * d_near.abs() {
        3.0 * d_near
    } else {
        d
    }
}
