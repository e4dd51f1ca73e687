//! Staggered radial discretization of ℝ²: nodes `r_j = (j + ½)h`, disk
//! quadrature `w_j = 2π r_j h`, and the conservative radial Laplacian
//!
//! ```text
//! (Lu)_j = [ r_{j+½}(u_{j+1} − u_j) − r_{j−½}(u_j − u_{j−1}) ] / (r_j h²)
//! ```
//!
//! with zero flux through `r_{−½} = 0` and `u_N = 0`. `L` is symmetric in
//! the weighted inner product `⟨u, v⟩_w = Σ w_j conj(u_j) v_j` and `−L` is
//! positive semidefinite there.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interp::Pchip;
use crate::tridiag::Tridiag;

pub const MIN_CELLS: usize = 16;

#[derive(Clone, Debug)]
pub struct RadialGrid {
    n: usize,
    radius: f64,
    h: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    potential: Vec<f64>,
    laplacian: Tridiag,
}

impl RadialGrid {
    pub fn new(n: usize, radius: f64) -> Result<Arc<Self>> {
        if n < MIN_CELLS {
            return Err(Error::InvalidGrid(format!("N = {n} < {MIN_CELLS}")));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidGrid(format!("R = {radius} must be positive")));
        }
        let h = radius / n as f64;
        let nodes: Vec<f64> = (0..n).map(|j| (j as f64 + 0.5) * h).collect();
        let weights: Vec<f64> = nodes.iter().map(|r| 2.0 * PI * r * h).collect();
        let potential: Vec<f64> = nodes.iter().map(|r| r * r).collect();
        let h2 = h * h;
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for j in 0..n {
            let r = nodes[j];
            let inner = j as f64 * h; // r_{j−½}
            let outer = (j as f64 + 1.0) * h; // r_{j+½}
            diag[j] = -(inner + outer) / (r * h2);
            if j > 0 {
                lower[j] = inner / (r * h2);
            }
            if j + 1 < n {
                upper[j] = outer / (r * h2);
            }
        }
        Ok(Arc::new(RadialGrid {
            n,
            radius,
            h,
            nodes,
            weights,
            potential,
            laplacian: Tridiag { lower, diag, upper },
        }))
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `r_j²`.
    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn laplacian(&self) -> &Tridiag {
        &self.laplacian
    }

    /// `−L + r²`, the discrete harmonic oscillator.
    pub fn oscillator(&self) -> Tridiag {
        self.laplacian.scaled_plus_diag(-1.0, &self.potential)
    }

    /// `Σ_j w_j f_j ≈ ∫_{ℝ²} f dx` for radial `f`.
    pub fn integrate(&self, samples: &[f64]) -> f64 {
        debug_assert_eq!(samples.len(), self.n);
        self.weights.iter().zip(samples).map(|(w, f)| w * f).sum()
    }

    /// `⟨u, v⟩_w`, antilinear in the first slot.
    pub fn inner(&self, u: &[Complex64], v: &[Complex64]) -> Complex64 {
        self.weights
            .iter()
            .zip(u.iter().zip(v))
            .map(|(w, (a, b))| a.conj() * b * w)
            .sum()
    }

    /// `⟨−Lu, u⟩_w` in summation-by-parts form,
    /// `2π Σ_j (j+1) |u_{j+1} − u_j|²` with `u_N = 0`.
    pub fn dirichlet_form(&self, u: &[Complex64]) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        for j in 0..n {
            let next = if j + 1 < n {
                u[j + 1]
            } else {
                Complex64::new(0.0, 0.0)
            };
            acc += (j as f64 + 1.0) * (next - u[j]).norm_sqr();
        }
        2.0 * PI * acc
    }

    /// Smallest eigenvalue of `−L + r²`.
    pub fn ground_energy(&self) -> Result<f64> {
        self.oscillator().eigenvalue(0)
    }
}

/// Complex samples of a radial function at the grid nodes.
#[derive(Clone, Debug)]
pub struct RadialField {
    grid: Arc<RadialGrid>,
    values: Vec<Complex64>,
    pub t: f64,
    pub label: String,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Norms {
    pub mass: f64,
    pub grad2: f64,
    pub variance: f64,
    pub sup: f64,
    /// `mass + grad2 + variance`, this crate's squared Σ-norm.
    pub sigma2: f64,
}

impl RadialField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if values
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite {
                context: "field values".into(),
            });
        }
        Ok(RadialField {
            grid,
            values,
            t: 0.0,
            label: String::new(),
        })
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let n = grid.len();
        RadialField {
            grid,
            values: vec![Complex64::new(0.0, 0.0); n],
            t: 0.0,
            label: String::new(),
        }
    }

    pub fn from_real(grid: Arc<RadialGrid>, values: &[f64]) -> Result<Self> {
        Self::new(
            grid,
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    /// Samples `f(r_j)`.
    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid, values)
    }

    /// `A·exp(−r²/(2w²))`.
    pub fn gaussian(grid: Arc<RadialGrid>, amplitude: f64, width: f64) -> Result<Self> {
        Self::from_fn(grid, |r| {
            Complex64::new(amplitude * (-(r * r) / (2.0 * width * width)).exp(), 0.0)
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_grid(&self, other: &RadialField) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid)
            || (self.grid.len() == other.grid.len() && self.grid.radius() == other.grid.radius())
        {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                expected: self.grid.len(),
                got: other.grid.len(),
            })
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `|u_j|²`.
    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn scaled(&self, c: Complex64) -> RadialField {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|z| *z *= c);
        out
    }

    pub fn phase_rotated(&self, theta: f64) -> RadialField {
        self.scaled(Complex64::from_polar(1.0, theta))
    }

    /// `L u`.
    pub fn laplacian(&self) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.len()];
        self.grid.laplacian().apply_complex(&self.values, &mut out);
        out
    }

    /// Weighted norm `‖u‖_w`.
    pub fn weighted_norm(&self) -> f64 {
        self.grid.inner(&self.values, &self.values).re.sqrt()
    }

    pub fn norms(&self) -> Result<Norms> {
        if !self.is_finite() {
            return Err(Error::NonFinite {
                context: "norms".into(),
            });
        }
        let g = &self.grid;
        let mut mass = 0.0;
        let mut variance = 0.0;
        let mut sup: f64 = 0.0;
        for ((w, r2), z) in g.weights().iter().zip(g.potential()).zip(&self.values) {
            let d = z.norm_sqr();
            mass += w * d;
            variance += w * r2 * d;
            sup = sup.max(d);
        }
        let grad2 = g.dirichlet_form(&self.values);
        let sup = sup.sqrt();
        let tail = self.values[self.len() - 1].norm();
        if sup > 0.0 && tail > 1e-8 * sup {
            log::warn!(
                "field '{}' does not decay at the truncation radius: |u_N-1| = {tail:e}, sup = {sup:e}",
                self.label
            );
        }
        Ok(Norms {
            mass,
            grad2,
            variance,
            sup,
            sigma2: mass + grad2 + variance,
        })
    }

    /// `λ u(λ r)` by monotone cubic interpolation of the real and imaginary
    /// parts, using the even extension through the origin and zero beyond
    /// the outer ghost node.
    pub fn resample_lambda(&self, lambda: f64) -> Result<RadialField> {
        if !(0.25..=4.0).contains(&lambda) {
            return Err(Error::InvalidArgument(format!(
                "resample lambda {lambda} outside [0.25, 4]"
            )));
        }
        let g = &self.grid;
        let n = g.len();
        let h = g.h();
        // x_k = (k − 2 + ½) h for k = 0..n+3: two mirrored nodes, the grid, u_N = 0
        let mut re = Vec::with_capacity(n + 3);
        let mut im = Vec::with_capacity(n + 3);
        for k in [1usize, 0] {
            re.push(self.values[k].re);
            im.push(self.values[k].im);
        }
        for z in &self.values {
            re.push(z.re);
            im.push(z.im);
        }
        re.push(0.0);
        im.push(0.0);
        let x0 = -1.5 * h;
        let p_re = Pchip::uniform(x0, h, re)?;
        let p_im = Pchip::uniform(x0, h, im)?;
        let x_end = (n as f64 + 0.5) * h;
        let values = g
            .nodes()
            .iter()
            .map(|&r| {
                let x = lambda * r;
                if x >= x_end {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(p_re.eval(x), p_im.eval(x)) * lambda
                }
            })
            .collect();
        let mut out = RadialField::new(g.clone(), values)?;
        out.t = self.t;
        out.label = format!("{}@lambda={lambda}", self.label);
        Ok(out)
    }

    /// Writes the `r,re,im` CSV snapshot with a `# t=.. N=.. R=..` header.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::with_capacity(self.len() * 72);
        out.push_str(&format!(
            "# t={:.16e} N={} R={:.16e}\n",
            self.t,
            self.grid.len(),
            self.grid.radius()
        ));
        out.push_str("r,re,im\n");
        for (r, z) in self.grid.nodes().iter().zip(&self.values) {
            out.push_str(&format!("{r:.16e},{:.16e},{:.16e}\n", z.re, z.im));
        }
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }

    /// Reads a snapshot written by [`RadialField::write_csv`]. The grid is
    /// rebuilt from the header unless `grid` is given, in which case sizes
    /// must agree.
    pub fn read_csv(path: &Path, grid: Option<Arc<RadialGrid>>) -> Result<RadialField> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let parse_err = |m: String| Error::Parse {
            path: path.to_path_buf(),
            message: m,
        };
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| parse_err("empty file".into()))?;
        let mut t = None;
        let mut n = None;
        let mut radius = None;
        for tok in header.trim_start_matches('#').split_whitespace() {
            if let Some((k, v)) = tok.split_once('=') {
                match k {
                    "t" => t = v.parse::<f64>().ok(),
                    "N" => n = v.parse::<usize>().ok(),
                    "R" => radius = v.parse::<f64>().ok(),
                    _ => {}
                }
            }
        }
        let (t, n, radius) = match (t, n, radius) {
            (Some(t), Some(n), Some(r)) => (t, n, r),
            _ => return Err(parse_err(format!("bad header line '{header}'"))),
        };
        if lines.next().map(str::trim) != Some("r,re,im") {
            return Err(parse_err("missing 'r,re,im' column line".into()));
        }
        let mut values = Vec::with_capacity(n);
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(parse_err(format!("row {i}: expected 3 columns")));
            }
            let re = cols[1]
                .parse::<f64>()
                .map_err(|e| parse_err(format!("row {i}: {e}")))?;
            let im = cols[2]
                .parse::<f64>()
                .map_err(|e| parse_err(format!("row {i}: {e}")))?;
            values.push(Complex64::new(re, im));
        }
        let grid = match grid {
            Some(g) => g,
            None => RadialGrid::new(n, radius)?,
        };
        if grid.len() != n {
            return Err(Error::GridMismatch {
                expected: grid.len(),
                got: n,
            });
        }
        let mut field = RadialField::new(grid, values)?;
        field.t = t;
        Ok(field)
    }
}
