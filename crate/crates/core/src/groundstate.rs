//! Radial ground state of `−Δφ + |x|²φ + φ = |x|^μ g(φ)`.
//!
//! The profile is bracketed by shooting on `φ(0) = a` for the radial ODE
//! `φ'' + φ'/r = (1 + r²)φ − r^μ g(φ)` and bisecting between trajectories
//! that turn up before crossing zero and trajectories that cross zero. The
//! resulting profile seeds a damped Newton solve of the discrete equation
//! `F(φ) = −Lφ + (1 + r²)φ − r^μ g(φ) = 0` on the grid.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::{Evaluation, ScalingProfile};
use crate::grid::{RadialField, RadialGrid};
use crate::nonlin::{self, NonlinearitySpec, Sign};
use crate::tridiag::Tridiag;

/// `(α, β)` pairs whose `K_{α,β}` must vanish on a solution.
pub const POHOZAEV_PAIRS: [(f64, f64); 5] =
    [(1.0, 0.0), (0.0, 1.0), (1.0, -1.0), (2.0, -1.0), (1.0, 1.0)];

pub const POHOZAEV_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OdeParams {
    pub r_max: f64,
    pub h_ode: f64,
    /// Divergence threshold as a multiple of `a`.
    pub cap_factor: f64,
}

impl OdeParams {
    /// `r_max = 1.5R`, `h_ode = h/4`, cap `10a`.
    pub fn for_grid(grid: &RadialGrid) -> Self {
        OdeParams {
            r_max: 1.5 * grid.radius(),
            h_ode: 0.25 * grid.h(),
            cap_factor: 10.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum ShootOutcome {
    DivergesPositive { r: f64 },
    CrossesZero { r: f64 },
    Decays { r: f64 },
}

impl ShootOutcome {
    fn overshoots(&self) -> bool {
        matches!(self, ShootOutcome::CrossesZero { .. })
    }
}

struct Trajectory {
    outcome: ShootOutcome,
    /// φ at r_0, r_0 + h, ... while the integration lasted
    at_nodes: Vec<f64>,
}

fn rhs(spec: &NonlinearitySpec, r: f64, phi: f64, dphi: f64) -> Result<(f64, f64)> {
    let g = spec.g(phi)?;
    Ok((dphi, -dphi / r + (1.0 + r * r) * phi - r.powf(spec.mu) * g))
}

fn integrate(
    spec: &NonlinearitySpec,
    a: f64,
    ode: &OdeParams,
    node_stride: usize,
) -> Result<Trajectory> {
    let mu = spec.mu;
    let h = ode.h_ode;
    let cap = ode.cap_factor * a;
    let ga = spec.g(a)?;
    // series start at r_s = 2h: φ = a + a r²/4 + 5a r⁴/64 − g(a) r^{2+μ}/(2+μ)²
    let mut r = 2.0 * h;
    let mut phi = a + 0.25 * a * r * r + 5.0 * a / 64.0 * r.powi(4)
        - ga * r.powf(2.0 + mu) / (2.0 + mu).powi(2);
    let mut dphi = 0.5 * a * r + 5.0 * a / 16.0 * r.powi(3) - ga * r.powf(1.0 + mu) / (2.0 + mu);
    let mut at_nodes = vec![phi];
    let mut step = 0usize;
    while r < ode.r_max {
        let (k1p, k1d) = rhs(spec, r, phi, dphi)?;
        let (k2p, k2d) = rhs(spec, r + 0.5 * h, phi + 0.5 * h * k1p, dphi + 0.5 * h * k1d)?;
        let (k3p, k3d) = rhs(spec, r + 0.5 * h, phi + 0.5 * h * k2p, dphi + 0.5 * h * k2d)?;
        let (k4p, k4d) = rhs(spec, r + h, phi + h * k3p, dphi + h * k3d)?;
        phi += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        dphi += h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
        let r_next = 2.0 * h + (step + 1) as f64 * h;
        if r_next <= r {
            return Err(Error::StepUnderflow { r });
        }
        r = r_next;
        step += 1;
        if !phi.is_finite() || !dphi.is_finite() {
            return Err(Error::NonFinite {
                context: format!("shooting at r = {r}"),
            });
        }
        if node_stride > 0 && step.is_multiple_of(node_stride) {
            at_nodes.push(phi);
        }
        if phi < 0.0 {
            return Ok(Trajectory {
                outcome: ShootOutcome::CrossesZero { r },
                at_nodes,
            });
        }
        if phi > cap {
            return Ok(Trajectory {
                outcome: ShootOutcome::DivergesPositive { r },
                at_nodes,
            });
        }
        if phi.abs() < 1e-10 && dphi.abs() < 1e-10 {
            return Ok(Trajectory {
                outcome: ShootOutcome::Decays { r },
                at_nodes,
            });
        }
    }
    // still positive and not decayed at r_max: the undershooting side
    Ok(Trajectory {
        outcome: ShootOutcome::DivergesPositive { r },
        at_nodes,
    })
}

/// Classifies the shooting trajectory started at `φ(0) = a`.
pub fn shoot(spec: &NonlinearitySpec, a: f64, ode: &OdeParams) -> Result<ShootOutcome> {
    if !(a > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "shooting amplitude must be positive, got {a}"
        )));
    }
    Ok(integrate(spec, a, ode, 0)?.outcome)
}

/// Shooting outcome with saturation folded into the overshooting side.
fn classify(spec: &NonlinearitySpec, a: f64, ode: &OdeParams) -> Result<(bool, ShootOutcome)> {
    match shoot(spec, a, ode) {
        Ok(o) => Ok((o.overshoots(), o)),
        Err(Error::Saturation { .. }) => Ok((true, ShootOutcome::CrossesZero { r: 0.0 })),
        Err(e) => Err(e),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Bracket {
    pub a_lo: f64,
    pub a_hi: f64,
    pub history: Vec<(f64, f64)>,
    pub decayed: bool,
}

pub const SCAN_LO: f64 = 1e-6;
pub const SCAN_HI: f64 = 1e6;
pub const SCAN_POINTS: usize = 60;

/// Log scan for the first undershoot→overshoot transition, then bisection
/// until the bracket stops shrinking in floating point (at most `max_iter`).
pub fn bracket_ground_state(
    spec: &NonlinearitySpec,
    ode: &OdeParams,
    max_iter: usize,
) -> Result<Bracket> {
    let scan = nonlin::log_sample(SCAN_LO, SCAN_HI, SCAN_POINTS);
    let outcomes: Vec<Result<(bool, ShootOutcome)>> =
        scan.par_iter().map(|&a| classify(spec, a, ode)).collect();
    let mut lo = None;
    let mut hi = None;
    let mut summary = Vec::new();
    for (a, o) in scan.iter().zip(outcomes) {
        let (over, outcome) = o?;
        summary.push(format!("{a:.3e}:{}", if over { "over" } else { "under" }));
        if let ShootOutcome::Decays { .. } = outcome {
            return Ok(Bracket {
                a_lo: *a,
                a_hi: *a,
                history: vec![(*a, *a)],
                decayed: true,
            });
        }
        if over {
            if lo.is_some() {
                hi = Some(*a);
                break;
            }
        } else {
            lo = Some(*a);
        }
    }
    let (mut lo, mut hi) = match (lo, hi) {
        (Some(l), Some(h)) => (l, h),
        _ => {
            return Err(Error::NoBracket {
                lo: SCAN_LO,
                hi: SCAN_HI,
                outcomes: summary.join(" "),
            })
        }
    };
    let mut history = vec![(lo, hi)];
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (over, outcome) = classify(spec, mid, ode)?;
        if let ShootOutcome::Decays { .. } = outcome {
            history.push((mid, mid));
            return Ok(Bracket {
                a_lo: mid,
                a_hi: mid,
                history,
                decayed: true,
            });
        }
        if over {
            hi = mid;
        } else {
            lo = mid;
        }
        history.push((lo, hi));
    }
    Ok(Bracket {
        a_lo: lo,
        a_hi: hi,
        history,
        decayed: false,
    })
}

/// Grid profile from the two bracketing trajectories: follow them while they
/// agree and stay positive, then continue with the oscillator tail
/// `φ(r_c)·exp(−(r² − r_c²)/2)`.
pub fn shooting_profile(
    spec: &NonlinearitySpec,
    grid: &Arc<RadialGrid>,
    bracket: &Bracket,
    ode: &OdeParams,
) -> Result<RadialField> {
    let stride = (grid.h() / ode.h_ode).round() as usize;
    if stride == 0 || ((stride as f64) * ode.h_ode - grid.h()).abs() > 1e-12 * grid.h() {
        return Err(Error::InvalidArgument(
            "h_ode must divide the grid spacing".into(),
        ));
    }
    let lo = integrate(spec, bracket.a_lo, ode, stride)?.at_nodes;
    let hi = integrate(spec, bracket.a_hi, ode, stride)?.at_nodes;
    let n = grid.len();
    let mut values = vec![0.0; n];
    let mut cut = 0;
    for j in 0..n.min(lo.len()).min(hi.len()) {
        let v = 0.5 * (lo[j] + hi[j]);
        let spread = (lo[j] - hi[j]).abs();
        if v <= 0.0 || spread > 1e-6 * v {
            break;
        }
        values[j] = v;
        cut = j;
    }
    let r_c = grid.nodes()[cut];
    let v_c = values[cut];
    for j in cut + 1..n {
        let r = grid.nodes()[j];
        values[j] = v_c * (-(r * r - r_c * r_c) * 0.5).exp();
    }
    Ok(RadialField::from_real(grid.clone(), &values)?.with_label("shooting"))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PohozaevEntry {
    pub alpha: f64,
    pub beta: f64,
    pub k: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct MethodTrace {
    pub bracket_history: Vec<(f64, f64)>,
    pub newton_residuals: Vec<f64>,
    pub newton_damping: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GroundStateChecks {
    pub positive: bool,
    pub m_positive: bool,
    pub pohozaev_ok: bool,
    /// `max_j |φ_j| √r_j ≤ 2 (M + ‖∇φ‖²)^{1/2}`
    pub radial_decay_ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GroundStateResult {
    #[serde(skip)]
    pub phi: RadialField,
    pub spec: NonlinearitySpec,
    pub a_star: f64,
    /// `‖F(φ)‖_w`
    pub residual: f64,
    pub pohozaev: Vec<PohozaevEntry>,
    pub sigma2: f64,
    /// `S(φ)`
    pub m: f64,
    /// `H_{1,0}(φ) = S(φ) − K_{1,0}(φ)/2`
    pub m_nehari: f64,
    pub instability_index: f64,
    /// `∂²_λE(φ_λ)` at `λ = 1`
    pub d2e: f64,
    pub checks: GroundStateChecks,
    pub trace: MethodTrace,
    pub newton_steps: usize,
}

impl GroundStateResult {
    pub fn max_pohozaev_ratio(&self) -> f64 {
        self.pohozaev.iter().map(|p| p.k.abs()).fold(0.0, f64::max) / self.sigma2
    }
}

/// `F(φ) = −Lφ + (1 + r²)φ − r^μ g(φ)`.
pub fn stationary_residual(
    spec: &NonlinearitySpec,
    grid: &RadialGrid,
    phi: &[f64],
) -> Result<Vec<f64>> {
    let mut lphi = vec![0.0; phi.len()];
    grid.laplacian().apply_real(phi, &mut lphi);
    let mu = spec.mu;
    grid.nodes()
        .iter()
        .zip(grid.potential())
        .zip(phi.iter().zip(&lphi))
        .map(|((r, r2), (p, lp))| Ok(-lp + (1.0 + r2) * p - r.powf(mu) * spec.g(*p)?))
        .collect()
}

fn wnorm(grid: &RadialGrid, v: &[f64]) -> f64 {
    grid.weights()
        .iter()
        .zip(v)
        .map(|(w, x)| w * x * x)
        .sum::<f64>()
        .sqrt()
}

pub const NEWTON_MAX_STEPS: usize = 50;

/// `max(1e−10(1 + ‖φ‖_w), 16·ε_mach‖φ‖_w/h²)`. The second term is the
/// rounding floor of `Lφ`, which passes the first on grids finer than about
/// `N = 10⁴` at `R = 12`.
pub fn newton_tolerance(grid: &RadialGrid, phi: &[f64]) -> f64 {
    let norm = wnorm(grid, phi);
    let floor = 16.0 * f64::EPSILON * norm / (grid.h() * grid.h());
    (1e-10 * (1.0 + norm)).max(floor)
}

/// Damped Newton on `F` with Jacobian `−L + (1 + r²) − r^μ g'(φ)`.
pub fn newton_polish(
    spec: &NonlinearitySpec,
    initial: &RadialField,
    trace: &mut MethodTrace,
) -> Result<(RadialField, usize, f64)> {
    let grid = initial.grid().clone();
    let mu = spec.mu;
    let mut phi: Vec<f64> = initial.values().iter().map(|z| z.re).collect();
    let mut f = stationary_residual(spec, &grid, &phi)?;
    let mut res = wnorm(&grid, &f);
    trace.newton_residuals.push(res);
    let base = grid
        .laplacian()
        .scaled_plus_diag(-1.0, &vec![0.0; grid.len()]);
    for iter in 0..=NEWTON_MAX_STEPS {
        if res <= newton_tolerance(&grid, &phi) {
            let field = RadialField::from_real(grid.clone(), &phi)?.with_label("ground_state");
            return Ok((field, iter, res));
        }
        if iter == NEWTON_MAX_STEPS {
            break;
        }
        let mut diag = Vec::with_capacity(grid.len());
        for ((r, r2), p) in grid.nodes().iter().zip(grid.potential()).zip(&phi) {
            diag.push(1.0 + r2 - r.powf(mu) * spec.g_prime(p.abs())?);
        }
        let jac = Tridiag {
            lower: base.lower.clone(),
            diag: base.diag.iter().zip(&diag).map(|(a, b)| a + b).collect(),
            upper: base.upper.clone(),
        };
        let neg_f: Vec<f64> = f.iter().map(|x| -x).collect();
        let delta = jac
            .solve_real(&neg_f)
            .map_err(|_| Error::SingularJacobian {
                iteration: iter,
                residual: res,
            })?;
        let mut damping = 1.0;
        loop {
            let trial: Vec<f64> = phi
                .iter()
                .zip(&delta)
                .map(|(p, d)| p + damping * d)
                .collect();
            let accepted = match stationary_residual(spec, &grid, &trial) {
                Ok(ft) => {
                    let rt = wnorm(&grid, &ft);
                    if rt.is_finite() && (rt < res || damping < 1e-3) {
                        phi = trial;
                        f = ft;
                        res = rt;
                        true
                    } else {
                        false
                    }
                }
                Err(Error::Saturation { .. }) => false,
                Err(e) => return Err(e),
            };
            if accepted {
                break;
            }
            damping *= 0.5;
            if damping < 1e-3 / 2.0 {
                return Err(Error::NewtonDiverged {
                    iterations: iter,
                    residual: res,
                });
            }
        }
        trace.newton_residuals.push(res);
        trace.newton_damping.push(damping);
    }
    Err(Error::NewtonDiverged {
        iterations: NEWTON_MAX_STEPS,
        residual: res,
    })
}

/// Functionals, Pohozaev table, and consistency checks of a converged profile.
pub fn assemble_result(
    spec: &NonlinearitySpec,
    phi: RadialField,
    a_star: f64,
    residual: f64,
    newton_steps: usize,
    trace: MethodTrace,
) -> Result<GroundStateResult> {
    let ev = Evaluation::new(spec, &phi)?;
    let pohozaev: Vec<PohozaevEntry> = POHOZAEV_PAIRS
        .iter()
        .map(|&(alpha, beta)| PohozaevEntry {
            alpha,
            beta,
            k: ev.k(alpha, beta).total,
        })
        .collect();
    let sigma2 = ev.norms.sigma2;
    let m = ev.action();
    let d2e = ScalingProfile::new(spec, &phi)?.d2_energy_at(1.0)?;
    let grid = phi.grid().clone();
    let positive = phi.values().iter().all(|z| z.re > 0.0);
    let decay_bound = 2.0 * (ev.norms.mass + ev.norms.grad2).sqrt();
    let radial_decay_ok = phi
        .values()
        .iter()
        .zip(grid.nodes())
        .all(|(z, r)| z.norm() * r.sqrt() <= decay_bound);
    let pohozaev_ok = pohozaev.iter().all(|p| p.k.abs() <= POHOZAEV_TOL * sigma2);
    Ok(GroundStateResult {
        phi,
        spec: *spec,
        a_star,
        residual,
        pohozaev,
        sigma2,
        m,
        m_nehari: ev.h(1.0, 0.0).unwrap_or(f64::NAN),
        instability_index: ev.instability_index(),
        d2e,
        checks: GroundStateChecks {
            positive,
            m_positive: m > 0.0,
            pohozaev_ok,
            radial_decay_ok,
        },
        trace,
        newton_steps,
    })
}

#[derive(Clone, Debug)]
pub struct GroundStateConfig {
    pub spec: NonlinearitySpec,
    pub n: usize,
    pub radius: f64,
    pub bisection_steps: usize,
}

impl GroundStateConfig {
    pub fn new(spec: NonlinearitySpec, n: usize, radius: f64) -> Self {
        GroundStateConfig {
            spec,
            n,
            radius,
            bisection_steps: 60,
        }
    }
}

/// Shooting bracket, profile, Newton polish, functionals.
pub fn ground_state(config: &GroundStateConfig) -> Result<GroundStateResult> {
    let grid = RadialGrid::new(config.n, config.radius)?;
    ground_state_on(&config.spec, &grid, config.bisection_steps)
}

pub fn ground_state_on(
    spec: &NonlinearitySpec,
    grid: &Arc<RadialGrid>,
    bisection_steps: usize,
) -> Result<GroundStateResult> {
    if spec.epsilon == Sign::Defocusing {
        return Err(Error::DefocusingGroundState);
    }
    if spec.linear_only {
        return Err(Error::InvalidArgument(
            "ground state needs a nonlinearity".into(),
        ));
    }
    let report = nonlin::check_conditions(
        spec,
        &nonlin::log_sample(1e-4, 10.0, 200),
        &nonlin::DEFAULT_EPS_CANDIDATES,
    )?;
    if !report.satisfies_f {
        log::warn!(
            "{spec}: ground-state condition not met on the sample ({:?})",
            report.clauses
        );
    }
    let ode = OdeParams::for_grid(grid);
    let bracket = bracket_ground_state(spec, &ode, bisection_steps)?;
    let initial = shooting_profile(spec, grid, &bracket, &ode)?;
    let mut trace = MethodTrace {
        bracket_history: bracket.history.clone(),
        ..Default::default()
    };
    let (phi, steps, residual) = newton_polish(spec, &initial, &mut trace)?;
    let a_star = 0.5 * (bracket.a_lo + bracket.a_hi);
    assemble_result(spec, phi, a_star, residual, steps, trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Arc<RadialGrid> {
        RadialGrid::new(1024, 12.0).unwrap()
    }

    #[test]
    fn tiny_amplitude_diverges_positive() {
        let spec = NonlinearitySpec::monomial(3.0, 0.5, Sign::Focusing).unwrap();
        let ode = OdeParams::for_grid(&grid());
        assert!(matches!(
            shoot(&spec, 1e-6, &ode).unwrap(),
            ShootOutcome::DivergesPositive { .. }
        ));
    }

    #[test]
    fn huge_amplitude_crosses_or_saturates() {
        let spec = NonlinearitySpec::exp_truncated(2, 0.5, Sign::Focusing).unwrap();
        let ode = OdeParams::for_grid(&grid());
        // a² = 10⁶ is past the exponential guard; the bisection treats it as overshoot
        assert!(matches!(
            shoot(&spec, 1e3, &ode),
            Err(Error::Saturation { .. })
        ));
        let cubic = NonlinearitySpec::monomial(3.0, 0.5, Sign::Focusing).unwrap();
        assert!(matches!(
            shoot(&cubic, 1e3, &ode).unwrap(),
            ShootOutcome::CrossesZero { .. }
        ));
        assert!(shoot(&cubic, -1.0, &ode).is_err());
    }

    #[test]
    fn bisection_shrinks_bracket() {
        let spec = NonlinearitySpec::monomial(3.0, 0.5, Sign::Focusing).unwrap();
        let ode = OdeParams::for_grid(&grid());
        let b = bracket_ground_state(&spec, &ode, 60).unwrap();
        assert!(b.history.len() <= 61);
        assert!(b.decayed || b.a_hi - b.a_lo < 1e-12 * b.a_hi);
    }

    #[test]
    fn defocusing_refused() {
        let spec = NonlinearitySpec::monomial(3.0, 0.5, Sign::Defocusing).unwrap();
        let err = ground_state(&GroundStateConfig::new(spec, 256, 12.0)).unwrap_err();
        assert_eq!(err.to_string(), "no ground state in defocusing sign");
    }
}
