//! Tridiagonal storage, products and Thomas solves.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Row `j` holds `lower[j]·u[j−1] + diag[j]·u[j] + upper[j]·u[j+1]`;
/// `lower[0]` and `upper[n−1]` are unused and kept at zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Tridiag {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiag {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply_real(&self, u: &[f64], out: &mut [f64]) {
        let n = self.len();
        for j in 0..n {
            let mut acc = self.diag[j] * u[j];
            if j > 0 {
                acc += self.lower[j] * u[j - 1];
            }
            if j + 1 < n {
                acc += self.upper[j] * u[j + 1];
            }
            out[j] = acc;
        }
    }

    pub fn apply_complex(&self, u: &[Complex64], out: &mut [Complex64]) {
        let n = self.len();
        for j in 0..n {
            let mut acc = u[j] * self.diag[j];
            if j > 0 {
                acc += u[j - 1] * self.lower[j];
            }
            if j + 1 < n {
                acc += u[j + 1] * self.upper[j];
            }
            out[j] = acc;
        }
    }

    /// `a·self + diag(d)`.
    pub fn scaled_plus_diag(&self, a: f64, d: &[f64]) -> Tridiag {
        Tridiag {
            lower: self.lower.iter().map(|x| a * x).collect(),
            diag: self.diag.iter().zip(d).map(|(x, y)| a * x + y).collect(),
            upper: self.upper.iter().map(|x| a * x).collect(),
        }
    }

    /// Solves `self · x = rhs` by the Thomas algorithm.
    pub fn solve_real(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        let mut c = vec![0.0; n];
        let mut x = vec![0.0; n];
        let mut beta = self.diag[0];
        if beta == 0.0 || !beta.is_finite() {
            return Err(Error::NonFinite {
                context: "tridiagonal pivot".into(),
            });
        }
        x[0] = rhs[0] / beta;
        for j in 1..n {
            c[j] = self.upper[j - 1] / beta;
            beta = self.diag[j] - self.lower[j] * c[j];
            if beta == 0.0 || !beta.is_finite() {
                return Err(Error::NonFinite {
                    context: "tridiagonal pivot".into(),
                });
            }
            x[j] = (rhs[j] - self.lower[j] * x[j - 1]) / beta;
        }
        for j in (0..n - 1).rev() {
            let next = x[j + 1];
            x[j] -= c[j + 1] * next;
        }
        Ok(x)
    }

    /// Eigenvalue of index `k` (ascending) of a tridiagonal matrix similar to
    /// a symmetric one, i.e. with `lower[j+1]·upper[j] > 0`. Sturm-sequence
    /// bisection on the symmetrized matrix.
    pub fn eigenvalue(&self, k: usize) -> Result<f64> {
        let n = self.len();
        if k >= n {
            return Err(Error::InvalidArgument(format!(
                "eigenvalue index {k} >= {n}"
            )));
        }
        let mut off2 = vec![0.0; n];
        for j in 1..n {
            let p = self.lower[j] * self.upper[j - 1];
            if p < 0.0 {
                return Err(Error::InvalidArgument("matrix not symmetrizable".into()));
            }
            off2[j] = p;
        }
        // Gershgorin bounds
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for j in 0..n {
            let rad = off2[j].sqrt() + if j + 1 < n { off2[j + 1].sqrt() } else { 0.0 };
            lo = lo.min(self.diag[j] - rad);
            hi = hi.max(self.diag[j] + rad);
        }
        let count_below = |x: f64| -> usize {
            let mut count = 0;
            let mut q = 1.0;
            for j in 0..n {
                q = self.diag[j] - x - if j > 0 { off2[j] / q } else { 0.0 };
                if q == 0.0 {
                    q = f64::EPSILON * (self.diag[j].abs() + 1.0);
                }
                if q < 0.0 {
                    count += 1;
                }
            }
            count
        };
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// In-place complex Thomas solve with real off-diagonals and complex diagonal.
pub fn solve_complex(
    lower: &[Complex64],
    diag: &[Complex64],
    upper: &[Complex64],
    rhs: &mut [Complex64],
    scratch: &mut Vec<Complex64>,
) -> Result<()> {
    let n = diag.len();
    scratch.clear();
    scratch.resize(n, Complex64::new(0.0, 0.0));
    let mut beta = diag[0];
    if beta.norm_sqr() == 0.0 {
        return Err(Error::NonFinite {
            context: "complex tridiagonal pivot".into(),
        });
    }
    rhs[0] /= beta;
    for j in 1..n {
        scratch[j] = upper[j - 1] / beta;
        beta = diag[j] - lower[j] * scratch[j];
        if beta.norm_sqr() == 0.0 {
            return Err(Error::NonFinite {
                context: "complex tridiagonal pivot".into(),
            });
        }
        let prev = rhs[j - 1];
        rhs[j] = (rhs[j] - lower[j] * prev) / beta;
    }
    for j in (0..n - 1).rev() {
        let next = rhs[j + 1];
        rhs[j] -= scratch[j + 1] * next;
    }
    Ok(())
}
