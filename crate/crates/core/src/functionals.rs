//! Variational functionals on a [`RadialField`].
//!
//! With `ρ = |u|`, `s = ρ²`, and `∫ = Σ_j w_j`:
//!
//! * `M = ∫ρ²`, `E = ‖∇u‖² + ‖xu‖² − ε∫r^μ G(s)`, `S = E + M`;
//! * `K_{α,β} = K^Q + K^N` with
//!   `K^Q = 2[α‖∇u‖² + (α+β)M + (α+2β)‖xu‖²]` and
//!   `K^N = −2ε∫r^μ[α DG(s) + β(1+μ/2)G(s)]`;
//! * `H_{α,β} = S − K_{α,β}/(2(α+2β))`, `T = S − K_{1,−1}/2`, `P = K_{1,−1}/2`.
//!
//! `ρ g(ρ)` is always evaluated as `DG(ρ²)` and `ρ² g'(ρ)` as `(2D² − D)G(ρ²)`.
//! For `ε = +1` these reduce to the focusing formulas; carrying `ε` keeps
//! `P` equal to the virial right-hand side for both signs.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Norms, RadialField};
use crate::nonlin::{NonlinearitySpec, EXP_GUARD};

/// `∫ r^μ G`, `∫ r^μ DG`, `∫ r^μ D²G` over the field's density.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NonlinearIntegrals {
    pub g: f64,
    pub dg: f64,
    pub d2g: f64,
}

impl NonlinearIntegrals {
    pub fn of(spec: &NonlinearitySpec, field: &RadialField) -> Result<Self> {
        let grid = field.grid();
        let mut acc = NonlinearIntegrals::default();
        if spec.linear_only {
            return Ok(acc);
        }
        for ((w, r), z) in grid.weights().iter().zip(grid.nodes()).zip(field.values()) {
            let s = z.norm_sqr();
            if s == 0.0 {
                continue;
            }
            let m = spec.moments(s)?;
            let wr = w * r.powf(spec.mu);
            acc.g += wr * m.g;
            acc.dg += wr * m.dg;
            acc.d2g += wr * m.d2g;
        }
        Ok(acc)
    }

    /// `∫ r^μ ρ² g'(ρ)`.
    pub fn rho2_gprime(&self) -> f64 {
        2.0 * self.d2g - self.dg
    }
}

/// The three parts of `K_{α,β}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct KParts {
    pub total: f64,
    pub quadratic: f64,
    pub nonlinear: f64,
}

/// Norms and nonlinear integrals of one field, from which every functional
/// is an algebraic expression.
#[derive(Clone, Copy, Debug)]
pub struct Evaluation {
    pub norms: Norms,
    pub integrals: NonlinearIntegrals,
    pub mu: f64,
    pub eps: f64,
}

impl Evaluation {
    pub fn new(spec: &NonlinearitySpec, field: &RadialField) -> Result<Self> {
        Ok(Evaluation {
            norms: field.norms()?,
            integrals: NonlinearIntegrals::of(spec, field)?,
            mu: spec.mu,
            eps: spec.eps(),
        })
    }

    pub fn mass(&self) -> f64 {
        self.norms.mass
    }

    pub fn energy(&self) -> f64 {
        self.norms.grad2 + self.norms.variance - self.eps * self.integrals.g
    }

    pub fn action(&self) -> f64 {
        self.energy() + self.mass()
    }

    pub fn k(&self, alpha: f64, beta: f64) -> KParts {
        let n = &self.norms;
        let quadratic =
            2.0 * (alpha * n.grad2 + (alpha + beta) * n.mass + (alpha + 2.0 * beta) * n.variance);
        let nonlinear = -2.0
            * self.eps
            * (alpha * self.integrals.dg + beta * (1.0 + 0.5 * self.mu) * self.integrals.g);
        KParts {
            total: quadratic + nonlinear,
            quadratic,
            nonlinear,
        }
    }

    /// `H_{α,β}`; `None` when `α + 2β = 0`.
    pub fn h(&self, alpha: f64, beta: f64) -> Option<f64> {
        let denom = alpha + 2.0 * beta;
        if denom == 0.0 {
            return None;
        }
        Some(self.action() - self.k(alpha, beta).total / (2.0 * denom))
    }

    /// `H_{α,β}` from its expanded form
    /// `[β(2‖∇v‖² + M) + ε∫r^μ(αD − (α − β(μ/2 − 1)))G] / (α + 2β)`.
    pub fn h_expanded(&self, alpha: f64, beta: f64) -> Option<f64> {
        let denom = alpha + 2.0 * beta;
        if denom == 0.0 {
            return None;
        }
        let n = &self.norms;
        let i = &self.integrals;
        let coef = alpha - beta * (0.5 * self.mu - 1.0);
        Some((beta * (2.0 * n.grad2 + n.mass) + self.eps * (alpha * i.dg - coef * i.g)) / denom)
    }

    pub fn p(&self) -> f64 {
        0.5 * self.k(1.0, -1.0).total
    }

    pub fn t(&self) -> f64 {
        self.action() - 0.5 * self.k(1.0, -1.0).total
    }

    /// `T = M + 2‖xv‖² + ε∫r^μ(D − 2 − μ/2)G`.
    pub fn t_expanded(&self) -> f64 {
        let i = &self.integrals;
        self.norms.mass
            + 2.0 * self.norms.variance
            + self.eps * (i.dg - (2.0 + 0.5 * self.mu) * i.g)
    }

    /// `(1/8) d²/dt² ‖xu‖²`.
    pub fn virial_rhs(&self) -> f64 {
        let i = &self.integrals;
        self.norms.grad2 - self.norms.variance - self.eps * (i.dg - (1.0 + 0.5 * self.mu) * i.g)
    }

    /// `2(2M + ε∫r^μ[ρ²g'(ρ) − (5+2μ)ρg(ρ) + (2+μ)(1+μ/2)G(ρ²)])`, which on a
    /// stationary state equals `−∂²_λE(φ_λ)|_{λ=1}`; positivity is the
    /// sufficient condition for instability of the standing wave.
    pub fn instability_index(&self) -> f64 {
        let i = &self.integrals;
        let mu = self.mu;
        2.0 * (2.0 * self.norms.mass
            + self.eps
                * (i.rho2_gprime() - (5.0 + 2.0 * mu) * i.dg + (2.0 + mu) * (1.0 + 0.5 * mu) * i.g))
    }

    /// `½∂²_λE(v_λ)` at `λ = 1` from the direct second-derivative display.
    pub fn half_d2e(&self) -> f64 {
        let i = &self.integrals;
        let mu = self.mu;
        self.norms.grad2 + 3.0 * self.norms.variance
            - self.eps
                * (i.rho2_gprime() - (4.0 + 2.0 * mu) * i.dg + (1.0 + 0.5 * mu) * (3.0 + mu) * i.g)
    }

    /// The two stationary-state forms of `½∂²_λE(φ_λ)|_{λ=1}`, obtained by
    /// eliminating `‖xφ‖²` with `P(φ) = 0` and then `‖∇φ‖²` with
    /// `K_{2,−1}(φ) = 0`. Only meaningful on solutions of the stationary equation.
    pub fn half_d2e_stationary(&self) -> (f64, f64) {
        let i = &self.integrals;
        let mu = self.mu;
        let first = 4.0 * self.norms.grad2
            - self.eps * (i.rho2_gprime() - (1.0 + 2.0 * mu) * i.dg + mu * (1.0 + 0.5 * mu) * i.g);
        let second = -2.0 * self.norms.mass
            - self.eps
                * (i.rho2_gprime() - (5.0 + 2.0 * mu) * i.dg + (2.0 + mu) * (1.0 + 0.5 * mu) * i.g);
        (first, second)
    }

    pub fn report(&self) -> FunctionalReport {
        FunctionalReport {
            mass: self.mass(),
            energy: self.energy(),
            action: self.action(),
            k_1_0: self.k(1.0, 0.0).total,
            k_0_1: self.k(0.0, 1.0).total,
            k_1_m1: self.k(1.0, -1.0).total,
            h_1_0: self.h(1.0, 0.0).unwrap(),
            h_0_1: self.h(0.0, 1.0).unwrap(),
            t: self.t(),
            p: self.p(),
            virial_rhs: self.virial_rhs(),
        }
    }
}

/// Flat summary with fixed JSON key names.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FunctionalReport {
    pub mass: f64,
    pub energy: f64,
    pub action: f64,
    #[serde(rename = "K_1_0")]
    pub k_1_0: f64,
    #[serde(rename = "K_0_1")]
    pub k_0_1: f64,
    #[serde(rename = "K_1_m1")]
    pub k_1_m1: f64,
    #[serde(rename = "H_1_0")]
    pub h_1_0: f64,
    #[serde(rename = "H_0_1")]
    pub h_0_1: f64,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "P")]
    pub p: f64,
    pub virial_rhs: f64,
}

pub fn mass(field: &RadialField) -> Result<f64> {
    Ok(field.norms()?.mass)
}

pub fn energy(spec: &NonlinearitySpec, field: &RadialField) -> Result<f64> {
    Ok(Evaluation::new(spec, field)?.energy())
}

pub fn k_functional(
    spec: &NonlinearitySpec,
    field: &RadialField,
    alpha: f64,
    beta: f64,
) -> Result<KParts> {
    Ok(Evaluation::new(spec, field)?.k(alpha, beta))
}

pub fn virial_rhs(spec: &NonlinearitySpec, field: &RadialField) -> Result<f64> {
    Ok(Evaluation::new(spec, field)?.virial_rhs())
}

pub fn instability_index(spec: &NonlinearitySpec, field: &RadialField) -> Result<f64> {
    Ok(Evaluation::new(spec, field)?.instability_index())
}

pub fn report(spec: &NonlinearitySpec, field: &RadialField) -> Result<FunctionalReport> {
    Ok(Evaluation::new(spec, field)?.report())
}

/// `E(v_λ)` for the mass-preserving dilation `v_λ = λ v(λ·)` in closed form,
/// without resampling the field.
#[derive(Clone, Debug)]
pub struct ScalingProfile {
    spec: NonlinearitySpec,
    grad2: f64,
    variance: f64,
    /// `w_j r_j^μ`
    weights: Vec<f64>,
    density: Vec<f64>,
}

/// Scaling curve plus its first two derivatives at `λ = 1`.
#[derive(Clone, Debug)]
pub struct ScalingDerivatives {
    pub profile: ScalingProfile,
    /// `∂_λE(v_λ)` at `λ = 1`.
    pub d_e: f64,
    /// `∂²_λE(v_λ)` at `λ = 1`.
    pub d2_e: f64,
}

impl ScalingProfile {
    pub fn new(spec: &NonlinearitySpec, field: &RadialField) -> Result<Self> {
        let norms = field.norms()?;
        let grid = field.grid();
        let weights = grid
            .weights()
            .iter()
            .zip(grid.nodes())
            .map(|(w, r)| w * r.powf(spec.mu))
            .collect();
        Ok(ScalingProfile {
            spec: *spec,
            grad2: norms.grad2,
            variance: norms.variance,
            weights,
            density: field.density(),
        })
    }

    fn integrals_at(&self, lambda: f64) -> Result<NonlinearIntegrals> {
        let mut acc = NonlinearIntegrals::default();
        if self.spec.linear_only {
            return Ok(acc);
        }
        let l2 = lambda * lambda;
        for (w, s) in self.weights.iter().zip(&self.density) {
            if *s == 0.0 {
                continue;
            }
            let m = self.spec.moments(l2 * s)?;
            acc.g += w * m.g;
            acc.dg += w * m.dg;
            acc.d2g += w * m.d2g;
        }
        Ok(acc)
    }

    /// `λ²‖∇v‖² + λ^{−2}‖xv‖² − ελ^{−2−μ}∫r^μ G(λ²|v|²)`.
    pub fn energy_at(&self, lambda: f64) -> Result<f64> {
        let i = self.integrals_at(lambda)?;
        let mu = self.spec.mu;
        Ok(
            lambda * lambda * self.grad2 + self.variance / (lambda * lambda)
                - self.spec.eps() * lambda.powf(-2.0 - mu) * i.g,
        )
    }

    /// `∂_λE(v_λ) = 2λ‖∇v‖² − 2λ^{−3}‖xv‖²
    ///   − 2ελ^{−3−μ}∫r^μ[λ|v|g(λ|v|) − (1+μ/2)G(λ²|v|²)]`.
    pub fn d_energy_at(&self, lambda: f64) -> Result<f64> {
        let i = self.integrals_at(lambda)?;
        let mu = self.spec.mu;
        Ok(2.0 * lambda * self.grad2
            - 2.0 * self.variance / lambda.powi(3)
            - 2.0 * self.spec.eps() * lambda.powf(-3.0 - mu) * (i.dg - (1.0 + 0.5 * mu) * i.g))
    }

    /// `∂²_λE(v_λ)`, twice the display
    /// `‖∇v‖² + 3λ^{−4}‖xv‖² + (3+μ)λ^{−4−μ}∫r^μ(λ|v|g(λ|v|) − (1+μ/2)G)
    ///   − λ^{−3−μ}∫r^μ(λ|v|²g'(λ|v|) − (1+μ)|v|g(λ|v|))`.
    pub fn d2_energy_at(&self, lambda: f64) -> Result<f64> {
        let i = self.integrals_at(lambda)?;
        let mu = self.spec.mu;
        let eps = self.spec.eps();
        // λ|v|²g'(λ|v|) = λ^{−1}(2D² − D)G(λ²|v|²), |v|g(λ|v|) = λ^{−1}DG(λ²|v|²)
        let first = (3.0 + mu) * lambda.powf(-4.0 - mu) * (i.dg - (1.0 + 0.5 * mu) * i.g);
        let second = lambda.powf(-4.0 - mu) * (i.rho2_gprime() - (1.0 + mu) * i.dg);
        let half = self.grad2 + 3.0 * self.variance / lambda.powi(4) + eps * (first - second);
        Ok(2.0 * half)
    }
}

pub fn scaling_derivatives(
    spec: &NonlinearitySpec,
    field: &RadialField,
) -> Result<ScalingDerivatives> {
    let profile = ScalingProfile::new(spec, field)?;
    let d_e = profile.d_energy_at(1.0)?;
    let d2_e = profile.d2_energy_at(1.0)?;
    Ok(ScalingDerivatives { profile, d_e, d2_e })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrbitDistance {
    pub distance: f64,
    pub theta_star: f64,
}

/// `inf_θ ‖u − e^{iθ}φ‖_Σ` with the Σ inner product
/// `⟨u,φ⟩_w + ⟨−Lu,φ⟩_w + ⟨r²u,φ⟩_w`.
pub fn orbit_distance(u: &RadialField, phi: &RadialField) -> Result<OrbitDistance> {
    u.same_grid(phi)?;
    let grid = u.grid();
    let lphi = phi.laplacian();
    let sigma_phi: Vec<Complex64> = phi
        .values()
        .iter()
        .zip(&lphi)
        .zip(grid.potential())
        .map(|((p, lp), r2)| p * (1.0 + r2) - lp)
        .collect();
    let z = grid.inner(u.values(), &sigma_phi);
    let theta_star = if z.norm() == 0.0 { 0.0 } else { -z.arg() };
    // ‖u‖² + ‖φ‖² − 2|z| evaluated as the norm of the aligned difference,
    // which avoids the cancellation when u is close to the orbit
    let rot = Complex64::from_polar(1.0, theta_star);
    let diff: Vec<Complex64> = u
        .values()
        .iter()
        .zip(phi.values())
        .map(|(a, b)| a - rot * b)
        .collect();
    let diff = RadialField::new(grid.clone(), diff)?;
    Ok(OrbitDistance {
        distance: diff.norms()?.sigma2.sqrt(),
        theta_star,
    })
}

/// `∫(e^{α|u|²} − 1) dx`.
pub fn mt_functional(field: &RadialField, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha_mt must be positive, got {alpha}"
        )));
    }
    let density = field.density();
    let sup2 = density.iter().cloned().fold(0.0, f64::max);
    if alpha * sup2 > EXP_GUARD {
        return Err(Error::Saturation {
            s: sup2,
            arg: alpha * sup2,
        });
    }
    let vals: Vec<f64> = density.iter().map(|s| (alpha * s).exp_m1()).collect();
    Ok(field.grid().integrate(&vals))
}

/// Moser–Trudinger critical exponent `4π`.
pub const MT_CRITICAL: f64 = 4.0 * PI;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadialGrid;
    use crate::nonlin::Sign;

    fn gaussian() -> RadialField {
        let g = RadialGrid::new(1024, 12.0).unwrap();
        RadialField::gaussian(g, 1.0, 1.0).unwrap()
    }

    fn exp2() -> NonlinearitySpec {
        NonlinearitySpec::exp_truncated(2, 0.5, Sign::Focusing).unwrap()
    }

    #[test]
    fn zero_field_gives_zero() {
        let g = RadialGrid::new(64, 6.0).unwrap();
        let z = RadialField::zeros(g);
        let ev = Evaluation::new(&exp2(), &z).unwrap();
        assert_eq!(ev.mass(), 0.0);
        assert_eq!(ev.energy(), 0.0);
        assert_eq!(ev.k(1.0, 1.0), KParts::default());
        assert_eq!(ev.virial_rhs(), 0.0);
        assert_eq!(ev.instability_index(), 0.0);
        assert_eq!(mt_functional(&z, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn linear_oscillator_moments() {
        let u = gaussian();
        let spec = NonlinearitySpec::monomial(3.0, 0.5, Sign::Focusing)
            .unwrap()
            .linearized();
        let ev = Evaluation::new(&spec, &u).unwrap();
        assert!((ev.mass() - PI).abs() < 1e-3 * PI);
        assert!((ev.energy() - 2.0 * PI).abs() < 2e-3);
        assert!((ev.k(1.0, 1.0).quadratic - 12.0 * PI).abs() < 1e-2);
        assert!(ev.virial_rhs().abs() < 1e-2);
    }

    #[test]
    fn defocusing_energy_dominates_quadratic_part() {
        let u = gaussian().scaled(Complex64::new(1.5, 0.0));
        let spec = exp2().with_sign(Sign::Defocusing);
        let ev = Evaluation::new(&spec, &u).unwrap();
        assert!(ev.energy() >= ev.norms.grad2 + ev.norms.variance);
    }

    #[test]
    fn h_undefined_on_degenerate_pair() {
        let ev = Evaluation::new(&exp2(), &gaussian()).unwrap();
        assert!(ev.h(2.0, -1.0).is_none());
        assert!(ev.h_expanded(2.0, -1.0).is_none());
    }

    #[test]
    fn json_keys_are_fixed() {
        let rep = report(&exp2(), &gaussian()).unwrap();
        let v = serde_json::to_value(rep).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        let mut expected = vec![
            "mass",
            "energy",
            "action",
            "K_1_0",
            "K_0_1",
            "K_1_m1",
            "H_1_0",
            "H_0_1",
            "T",
            "P",
            "virial_rhs",
        ];
        expected.sort();
        assert_eq!(keys, expected);
    }

    #[test]
    fn mt_small_amplitude_limit_and_monotone() {
        let u = gaussian().scaled(Complex64::new(0.01, 0.0));
        let m = mass(&u).unwrap();
        let v1 = mt_functional(&u, 1.0).unwrap();
        assert!((v1 - m).abs() < 0.01 * m);
        assert!(mt_functional(&u, 2.0).unwrap() > v1);
        assert!(mt_functional(&u, 0.0).is_err());
        let big = gaussian().scaled(Complex64::new(30.0, 0.0));
        assert!(matches!(
            mt_functional(&big, 1.0),
            Err(Error::Saturation { .. })
        ));
    }

    #[test]
    fn orbit_distance_examples() {
        let phi = gaussian();
        let same = orbit_distance(&phi, &phi).unwrap();
        assert!(same.distance < 1e-12);
        assert!(same.theta_star.abs() < 1e-15);
        let rot = orbit_distance(&phi.phase_rotated(0.3), &phi).unwrap();
        assert!(rot.distance < 1e-12);
        assert!((rot.theta_star - 0.3).abs() < 1e-14);
        let scaled = orbit_distance(&phi.scaled(Complex64::new(1.1, 0.0)), &phi).unwrap();
        let norm = phi.norms().unwrap().sigma2.sqrt();
        assert!((scaled.distance - 0.1 * norm).abs() < 1e-12 * norm);
    }

    #[test]
    fn scaling_curve_at_one_is_energy() {
        let u = gaussian().scaled(Complex64::new(1.3, 0.0));
        let sd = scaling_derivatives(&exp2(), &u).unwrap();
        let e = energy(&exp2(), &u).unwrap();
        assert!((sd.profile.energy_at(1.0).unwrap() - e).abs() < 1e-13 * e.abs().max(1.0));
    }
}
