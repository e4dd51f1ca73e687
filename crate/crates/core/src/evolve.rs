//! Time integration of `i u_t + Δu − |x|²u + ε|x|^μ g(u) = 0`.
//!
//! Strang splitting: half a step of the nonlinear flow, which is the exact
//! pointwise phase `u·exp(iε(dt/2) r^μ G'(|u|²))`, a Crank–Nicolson step of
//! `i u_t = −(L − r²)u`, and another nonlinear half step. Both substeps are
//! unitary in the weighted inner product, so mass is conserved to roundoff.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::functionals::Evaluation;
use crate::grid::{RadialField, RadialGrid};
use crate::nonlin::NonlinearitySpec;
use crate::tridiag::solve_complex;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Status {
    Running,
    Finished,
    BlewUp {
        t_blow: f64,
    },
    /// The nonlinearity left the exponential guard at time `t`.
    Saturated {
        t: f64,
    },
}

impl Status {
    pub fn is_terminal(&self) -> bool {
        !matches!(self, Status::Running)
    }

    /// Blow-up or saturation; both end the run as a blow-up outcome.
    pub fn blew_up(&self) -> bool {
        matches!(self, Status::BlewUp { .. } | Status::Saturated { .. })
    }

    pub fn t_blow(&self) -> Option<f64> {
        match *self {
            Status::BlewUp { t_blow } => Some(t_blow),
            Status::Saturated { t } => Some(t),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Status::Running => "running",
            Status::Finished => "finished",
            Status::BlewUp { .. } => "blew_up",
            Status::Saturated { .. } => "saturated",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveParams {
    pub t_end: f64,
    pub dt0: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Steps between diagnostics records.
    pub record_stride: usize,
    pub grad_factor: f64,
    /// Consecutive steps at `dt_min` that count as blow-up.
    pub floor_steps: usize,
}

impl Default for EvolveParams {
    fn default() -> Self {
        EvolveParams {
            t_end: 1.0,
            dt0: 1e-3,
            dt_min: 1e-6,
            dt_max: 1e-3,
            record_stride: 10,
            grad_factor: 1e3,
            floor_steps: 100,
        }
    }
}

impl EvolveParams {
    /// Fixed step `dt` to `t_end`.
    pub fn fixed(dt: f64, t_end: f64) -> Self {
        EvolveParams {
            t_end,
            dt0: dt,
            dt_min: dt,
            dt_max: dt,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.t_end,
            self.dt0,
            self.dt_min,
            self.dt_max,
            self.grad_factor,
        ];
        if positive.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::Config(format!(
                "time parameters must be positive: {self:?}"
            )));
        }
        if self.dt_min > self.dt_max {
            return Err(Error::Config(format!(
                "dt_min = {} exceeds dt_max = {}",
                self.dt_min, self.dt_max
            )));
        }
        if self.record_stride == 0 || self.floor_steps == 0 {
            return Err(Error::Config(
                "record_stride and floor_steps must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn is_adaptive(&self) -> bool {
        self.dt_min < self.dt_max
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub dt: f64,
    pub mass: f64,
    pub energy: f64,
    pub action: f64,
    #[serde(rename = "K_1_0")]
    pub k_1_0: f64,
    #[serde(rename = "K_0_1")]
    pub k_0_1: f64,
    #[serde(rename = "P")]
    pub p: f64,
    pub variance: f64,
    pub grad2: f64,
    pub sup: f64,
    pub virial_rhs: f64,
}

pub const DIAGNOSTICS_COLUMNS: [&str; 12] = [
    "t",
    "dt",
    "mass",
    "energy",
    "action",
    "K_1_0",
    "K_0_1",
    "P",
    "variance",
    "grad2",
    "sup",
    "virial_rhs",
];

impl DiagnosticsRecord {
    pub fn of(spec: &NonlinearitySpec, field: &RadialField, t: f64, dt: f64) -> Result<Self> {
        let ev = Evaluation::new(spec, field)?;
        Ok(DiagnosticsRecord {
            t,
            dt,
            mass: ev.mass(),
            energy: ev.energy(),
            action: ev.action(),
            k_1_0: ev.k(1.0, 0.0).total,
            k_0_1: ev.k(0.0, 1.0).total,
            p: ev.p(),
            variance: ev.norms.variance,
            grad2: ev.norms.grad2,
            sup: ev.norms.sup,
            virial_rhs: ev.virial_rhs(),
        })
    }

    pub fn values(&self) -> [f64; 12] {
        [
            self.t,
            self.dt,
            self.mass,
            self.energy,
            self.action,
            self.k_1_0,
            self.k_0_1,
            self.p,
            self.variance,
            self.grad2,
            self.sup,
            self.virial_rhs,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.values().iter().all(|x| x.is_finite())
    }
}

/// Writes records as CSV with a `# spec = ...` comment line.
pub fn write_diagnostics_csv(
    path: &Path,
    spec: &NonlinearitySpec,
    records: &[DiagnosticsRecord],
) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let mut body = format!("# spec = {spec}\n{}\n", DIAGNOSTICS_COLUMNS.join(","));
    for rec in records {
        let row: Vec<String> = rec.values().iter().map(|v| format!("{v:.16e}")).collect();
        body.push_str(&row.join(","));
        body.push('\n');
    }
    out.write_all(body.as_bytes())
        .map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

/// Precomputed pieces of the split step on one grid.
#[derive(Clone, Debug)]
struct Stepper {
    /// `A = L − r²`
    a_lower: Vec<f64>,
    a_diag: Vec<f64>,
    a_upper: Vec<f64>,
    r_mu: Vec<f64>,
    lower: Vec<Complex64>,
    diag: Vec<Complex64>,
    upper: Vec<Complex64>,
    rhs: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Stepper {
    fn new(grid: &RadialGrid, mu: f64) -> Self {
        let l = grid.laplacian();
        let n = grid.len();
        Stepper {
            a_lower: l.lower.clone(),
            a_diag: l
                .diag
                .iter()
                .zip(grid.potential())
                .map(|(d, r2)| d - r2)
                .collect(),
            a_upper: l.upper.clone(),
            r_mu: grid.nodes().iter().map(|r| r.powf(mu)).collect(),
            lower: vec![Complex64::default(); n],
            diag: vec![Complex64::default(); n],
            upper: vec![Complex64::default(); n],
            rhs: vec![Complex64::default(); n],
            scratch: Vec::with_capacity(n),
        }
    }

    fn nonlinear_phase(
        &self,
        spec: &NonlinearitySpec,
        u: &mut [Complex64],
        tau: f64,
    ) -> Result<()> {
        if spec.linear_only {
            return Ok(());
        }
        let eps = spec.eps();
        for (z, rm) in u.iter_mut().zip(&self.r_mu) {
            let s = z.norm_sqr();
            if s == 0.0 {
                continue;
            }
            let theta = eps * tau * rm * spec.g1(s)?;
            *z *= Complex64::from_polar(1.0, theta);
        }
        Ok(())
    }

    /// `(I − iτA)u⁺ = (I + iτA)u`.
    fn linear(&mut self, u: &mut [Complex64], tau: f64) -> Result<()> {
        let n = u.len();
        let it = Complex64::new(0.0, tau);
        for j in 0..n {
            let mut acc = u[j] * (Complex64::new(1.0, 0.0) + it * self.a_diag[j]);
            if j > 0 {
                acc += it * self.a_lower[j] * u[j - 1];
            }
            if j + 1 < n {
                acc += it * self.a_upper[j] * u[j + 1];
            }
            self.rhs[j] = acc;
            self.lower[j] = -it * self.a_lower[j];
            self.diag[j] = Complex64::new(1.0, 0.0) - it * self.a_diag[j];
            self.upper[j] = -it * self.a_upper[j];
        }
        solve_complex(
            &self.lower,
            &self.diag,
            &self.upper,
            &mut self.rhs,
            &mut self.scratch,
        )?;
        u.copy_from_slice(&self.rhs);
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct EvolveState {
    pub field: RadialField,
    pub t: f64,
    pub dt: f64,
    pub spec: NonlinearitySpec,
    pub step_count: usize,
    pub status: Status,
    /// Consecutive steps taken at `dt_min`.
    pub floor_run: usize,
    stepper: Stepper,
}

impl EvolveState {
    pub fn new(field: RadialField, spec: NonlinearitySpec, dt: f64) -> Result<Self> {
        spec.validate()?;
        if !field.is_finite() {
            return Err(Error::NonFinite {
                context: "initial data".into(),
            });
        }
        let stepper = Stepper::new(field.grid(), spec.mu);
        Ok(EvolveState {
            t: field.t,
            field,
            dt,
            spec,
            step_count: 0,
            status: Status::Running,
            floor_run: 0,
            stepper,
        })
    }

    /// One Strang step of size `dt`; negative `dt` runs the flow backwards.
    /// Saturation sets [`Status::Saturated`] and a non-finite solve sets
    /// [`Status::BlewUp`], leaving the field at its last good value.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        if self.status.is_terminal() {
            return Err(Error::InvalidArgument(format!(
                "step on a {} state",
                self.status.name()
            )));
        }
        let mut u = self.field.values().to_vec();
        let outcome = (|| {
            self.stepper.nonlinear_phase(&self.spec, &mut u, 0.5 * dt)?;
            self.stepper.linear(&mut u, 0.5 * dt)?;
            self.stepper.nonlinear_phase(&self.spec, &mut u, 0.5 * dt)
        })();
        match outcome {
            Ok(()) if u.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => {
                self.field.values_mut().copy_from_slice(&u);
                self.t += dt;
                self.field.t = self.t;
                self.dt = dt;
                self.step_count += 1;
                Ok(())
            }
            Ok(()) | Err(Error::NonFinite { .. }) => {
                self.status = Status::BlewUp { t_blow: self.t };
                Ok(())
            }
            Err(Error::Saturation { .. }) => {
                self.status = Status::Saturated { t: self.t };
                Ok(())
            }
            Err(e) => Err(e),
        }
    }

    /// `max_j r_j^μ |g'(|u_j|)|`, the local frequency of the linearized
    /// nonlinear flow.
    pub fn nonlinear_rate(&self) -> Result<f64> {
        if self.spec.linear_only {
            return Ok(0.0);
        }
        let mut rate: f64 = 0.0;
        for (z, rm) in self.field.values().iter().zip(&self.stepper.r_mu) {
            rate = rate.max(rm * self.spec.g_prime(z.norm())?.abs());
        }
        Ok(rate)
    }
}

/// `clamp(dt0 / (1 + dt0·rate), dt_min, dt_max)` with `rate` from
/// [`EvolveState::nonlinear_rate`]; nonincreasing in the field amplitude.
pub fn adaptive_dt(state: &EvolveState, params: &EvolveParams) -> Result<f64> {
    let rate = state.nonlinear_rate()?;
    let dt = params.dt0 / (1.0 + params.dt0 * rate);
    Ok(dt.clamp(params.dt_min, params.dt_max))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlowupThresholds {
    pub grad_factor: f64,
    pub dt_floor: f64,
    pub floor_steps: usize,
    /// `grad2(u₀)`
    pub grad2_initial: f64,
    /// Whether the step size can reach the floor by adaptation.
    pub adaptive: bool,
}

/// Blow-up when `grad2 > grad_factor²·grad2(0)` or the step has sat at the
/// floor for `floor_steps` consecutive steps.
pub fn detect_blowup(state: &EvolveState, grad2: f64, thresholds: &BlowupThresholds) -> bool {
    let grad = thresholds.grad2_initial > 0.0
        && grad2 > thresholds.grad_factor * thresholds.grad_factor * thresholds.grad2_initial;
    let floor = thresholds.adaptive && state.floor_run >= thresholds.floor_steps;
    grad || floor
}

#[derive(Clone, Debug)]
pub struct Evolution {
    pub records: Vec<DiagnosticsRecord>,
    pub status: Status,
    pub final_field: RadialField,
    pub steps: usize,
    /// `max |M(t) − M(0)|/M(0)` over all steps.
    pub max_mass_drift: f64,
}

/// Runs to `params.t_end` or a terminal status with no observer.
pub fn evolve(
    u0: &RadialField,
    spec: &NonlinearitySpec,
    params: &EvolveParams,
) -> Result<Evolution> {
    evolve_with(u0, spec, params, |_, _| {})
}

/// Like [`evolve`], calling `observer` with the state and record every
/// `record_stride` steps (and at the first and last step).
pub fn evolve_with(
    u0: &RadialField,
    spec: &NonlinearitySpec,
    params: &EvolveParams,
    mut observer: impl FnMut(&EvolveState, &DiagnosticsRecord),
) -> Result<Evolution> {
    params.validate()?;
    let mut state = EvolveState::new(u0.clone(), *spec, params.dt0)?;
    let start = u0.norms()?;
    if let Some(alpha_g) = spec.alpha_g() {
        if start.grad2 >= 4.0 * std::f64::consts::PI / alpha_g {
            log::warn!(
                "initial gradient norm {:.4e} is not below 4π/α_g = {:.4e}",
                start.grad2,
                4.0 * std::f64::consts::PI / alpha_g
            );
        }
    }
    let thresholds = BlowupThresholds {
        grad_factor: params.grad_factor,
        dt_floor: params.dt_min,
        floor_steps: params.floor_steps,
        grad2_initial: start.grad2,
        adaptive: params.is_adaptive(),
    };
    let t_end = u0.t + params.t_end;
    let mass0 = start.mass;
    let mut max_mass_drift: f64 = 0.0;
    let mut records = Vec::new();
    let first = DiagnosticsRecord::of(spec, &state.field, state.t, 0.0)?;
    observer(&state, &first);
    records.push(first);
    let grid = u0.grid().clone();
    loop {
        let remaining = t_end - state.t;
        if remaining <= 1e-12 * t_end.abs().max(1.0) {
            state.status = Status::Finished;
            break;
        }
        let dt = match adaptive_dt(&state, params) {
            Ok(dt) => dt,
            Err(Error::Saturation { .. }) => {
                state.status = Status::Saturated { t: state.t };
                break;
            }
            Err(e) => return Err(e),
        };
        let at_floor = thresholds.adaptive && dt <= params.dt_min;
        let dt = dt.min(remaining);
        state.step(dt)?;
        if state.status.is_terminal() {
            break;
        }
        state.floor_run = if at_floor { state.floor_run + 1 } else { 0 };
        let mass = grid.integrate(&state.field.density());
        if mass0 > 0.0 {
            max_mass_drift = max_mass_drift.max((mass - mass0).abs() / mass0);
        }
        let grad2 = grid.dirichlet_form(state.field.values());
        if detect_blowup(&state, grad2, &thresholds) {
            state.status = Status::BlewUp { t_blow: state.t };
            break;
        }
        if state.step_count % params.record_stride == 0 {
            match DiagnosticsRecord::of(spec, &state.field, state.t, dt) {
                Ok(rec) => {
                    observer(&state, &rec);
                    records.push(rec);
                }
                Err(Error::Saturation { .. }) => {
                    state.status = Status::Saturated { t: state.t };
                    break;
                }
                Err(e) => return Err(e),
            }
        }
    }
    let last_recorded = records.last().map(|r| r.t);
    if last_recorded != Some(state.t) {
        if let Ok(rec) = DiagnosticsRecord::of(spec, &state.field, state.t, state.dt) {
            observer(&state, &rec);
            records.push(rec);
        }
    }
    Ok(Evolution {
        records,
        status: state.status,
        steps: state.step_count,
        final_field: state.field,
        max_mass_drift,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::nonlin::Sign;

    fn grid() -> Arc<RadialGrid> {
        RadialGrid::new(512, 12.0).unwrap()
    }

    #[test]
    fn zero_data_stays_zero() {
        let spec = NonlinearitySpec::exp_truncated(2, 0.5, Sign::Focusing).unwrap();
        let out = evolve(
            &RadialField::zeros(grid()),
            &spec,
            &EvolveParams::fixed(1e-2, 0.5),
        )
        .unwrap();
        assert_eq!(out.status, Status::Finished);
        assert!(out.final_field.values().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn tiny_field_gets_dt_max() {
        let spec = NonlinearitySpec::exp_truncated(2, 0.5, Sign::Focusing).unwrap();
        let u = RadialField::gaussian(grid(), 1e-8, 1.0).unwrap();
        let state = EvolveState::new(u, spec, 1e-3).unwrap();
        let params = EvolveParams {
            dt_min: 1e-6,
            ..Default::default()
        };
        assert_eq!(adaptive_dt(&state, &params).unwrap(), params.dt_max);
    }

    #[test]
    fn doubling_amplitude_never_grows_dt() {
        let spec = NonlinearitySpec::exp_truncated(2, 0.5, Sign::Focusing).unwrap();
        let params = EvolveParams {
            dt0: 1e-2,
            dt_max: 1e-2,
            dt_min: 1e-7,
            ..Default::default()
        };
        let mut prev = f64::INFINITY;
        for a in [0.1, 0.2, 0.4, 0.8, 1.6, 3.2] {
            let u = RadialField::gaussian(grid(), a, 1.0).unwrap();
            let dt = adaptive_dt(&EvolveState::new(u, spec, 1e-3).unwrap(), &params).unwrap();
            assert!(dt <= prev);
            prev = dt;
        }
    }

    #[test]
    fn reversible() {
        let spec = NonlinearitySpec::exp_truncated(2, 0.5, Sign::Focusing).unwrap();
        let u = RadialField::gaussian(grid(), 0.8, 1.0).unwrap();
        let mut state = EvolveState::new(u.clone(), spec, 1e-3).unwrap();
        state.step(1e-3).unwrap();
        state.step(-1e-3).unwrap();
        let diff: Vec<Complex64> = state
            .field
            .values()
            .iter()
            .zip(u.values())
            .map(|(a, b)| a - b)
            .collect();
        assert!(u.grid().inner(&diff, &diff).re.sqrt() < 1e-9);
    }

    #[test]
    fn saturation_is_a_status() {
        let spec = NonlinearitySpec::exp_truncated(2, 0.5, Sign::Focusing).unwrap();
        let u = RadialField::gaussian(grid(), 30.0, 1.0).unwrap();
        let mut state = EvolveState::new(u, spec, 1e-3).unwrap();
        state.step(1e-3).unwrap();
        assert!(matches!(state.status, Status::Saturated { .. }));
        assert!(state.status.blew_up());
    }
}
