//! Experiment protocols and the command entry points built on them.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::cache::ground_state_cached;
use super::classify::{classify_against, Classification, InvariantSet, Prediction};
use super::config::{ExperimentConfig, ExperimentKind, InitialData, SweepParams};
use crate::error::{Error, Result};
use crate::evolve::{self, DiagnosticsRecord, EvolveParams, Status};
use crate::functionals::{self, orbit_distance, Evaluation};
use crate::grid::{RadialField, RadialGrid};
use crate::groundstate::GroundStateResult;
use crate::nonlin::{self, NonlinearitySpec, Sign};

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub summary: Value,
    pub files: Vec<PathBuf>,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    write_text(path, &(text + "\n"))
}

fn cache_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output_dir.join("cache")
}

pub fn build_grid(cfg: &ExperimentConfig) -> Result<Arc<RadialGrid>> {
    RadialGrid::new(cfg.n, cfg.radius)
}

/// Ground state for the focusing version of the config's nonlinearity.
pub fn config_ground_state(
    cfg: &ExperimentConfig,
    grid: &Arc<RadialGrid>,
) -> Result<GroundStateResult> {
    ground_state_cached(&cfg.nonlinearity, grid, &cache_dir(cfg))
}

/// `a·φ_λ`.
/// `amplitude·λφ(λr)`, renormalized so that its mass is `amplitude²·M(φ)`:
/// the dilation preserves mass exactly in the continuum, and interpolation
/// onto the grid breaks that at the 1e−6 level.
pub fn scaled_ground_state(phi: &RadialField, lambda: f64, amplitude: f64) -> Result<RadialField> {
    let scaled = phi.resample_lambda(lambda)?;
    let ratio = (functionals::mass(phi)? / functionals::mass(&scaled)?).sqrt();
    Ok(scaled
        .scaled((amplitude * ratio).into())
        .with_label(format!("{amplitude}*phi_{lambda}")))
}

/// Initial data of the recipe; `ground` is required for scaled ground states.
pub fn initial_data(
    recipe: &InitialData,
    grid: &Arc<RadialGrid>,
    ground: Option<&GroundStateResult>,
) -> Result<RadialField> {
    match recipe {
        InitialData::Gaussian { amplitude, width } => {
            Ok(RadialField::gaussian(grid.clone(), *amplitude, *width)?.with_label("gaussian"))
        }
        InitialData::GroundstateScaled { lambda, amplitude } => {
            let gs = ground.ok_or_else(|| {
                Error::Config("groundstate_scaled data needs a ground state".into())
            })?;
            scaled_ground_state(&gs.phi, *lambda, *amplitude)
        }
        InitialData::File { path } => {
            let mut u = RadialField::read_csv(path, Some(grid.clone()))?;
            u.t = 0.0;
            Ok(u)
        }
    }
}

fn needs_ground_state(recipe: &InitialData) -> bool {
    matches!(recipe, InitialData::GroundstateScaled { .. })
}

/// Ground state as JSON, without the profile itself.
pub fn ground_state_summary(gs: &GroundStateResult) -> Value {
    let mut v = to_value(gs);
    if let Value::Object(map) = &mut v {
        map.remove("trace");
        map.insert(
            "bisection_steps".into(),
            json!(gs.trace.bracket_history.len()),
        );
        map.insert("max_pohozaev_ratio".into(), json!(gs.max_pohozaev_ratio()));
    }
    v
}

/// `groundstate` command: `phi.csv` and `groundstate.json`.
pub fn run_groundstate(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.write_resolved()?;
    let grid = build_grid(cfg)?;
    let gs = config_ground_state(cfg, &grid)?;
    let phi_path = cfg.output_dir.join("phi.csv");
    gs.phi.write_csv(&phi_path)?;
    let json_path = cfg.output_dir.join("groundstate.json");
    let mut full = to_value(&gs);
    if let Value::Object(map) = &mut full {
        map.insert("spec_display".into(), json!(gs.spec.to_string()));
    }
    write_json(&json_path, &full)?;
    Ok(ExperimentReport {
        kind: cfg.kind,
        summary: json!({
            "a_star": gs.a_star,
            "m": gs.m,
            "residual": gs.residual,
            "instability_index": gs.instability_index,
            "max_pohozaev_ratio": gs.max_pohozaev_ratio(),
            "pohozaev_ok": gs.checks.pohozaev_ok,
        }),
        files: vec![phi_path, json_path],
    })
}

/// `check-conditions` command.
pub fn run_check_conditions(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.write_resolved()?;
    let sample = nonlin::log_sample(1e-4, 10.0, 400);
    let report =
        nonlin::check_conditions(&cfg.nonlinearity, &sample, &nonlin::DEFAULT_EPS_CANDIDATES)?;
    let path = cfg.output_dir.join("conditions.json");
    let value = to_value(&report);
    write_json(&path, &value)?;
    Ok(ExperimentReport {
        kind: cfg.kind,
        summary: json!({
            "spec": cfg.nonlinearity.to_string(),
            "satisfies_f": report.satisfies_f,
            "satisfies_strong_4": report.satisfies_strong_4,
            "eps_g": report.eps_g,
            "q_g_estimated": report.q_g_estimated,
            "clauses": to_value(&report.clauses),
            "violations": report.violation_points.len(),
        }),
        files: vec![path],
    })
}

/// `evolve` command: `diagnostics.csv` and optional snapshots.
pub fn run_evolve(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.write_resolved()?;
    let grid = build_grid(cfg)?;
    let gs = if needs_ground_state(&cfg.initial) {
        Some(config_ground_state(cfg, &grid)?)
    } else {
        None
    };
    let u0 = initial_data(&cfg.initial, &grid, gs.as_ref())?;
    let mut files = Vec::new();
    let mut snapshot_error = None;
    let mut record_index = 0usize;
    let run = evolve::evolve_with(&u0, &cfg.nonlinearity, &cfg.evolve_params(), |state, _| {
        if cfg.snapshot_stride > 0 && record_index.is_multiple_of(cfg.snapshot_stride) {
            let path = cfg.output_dir.join(format!(
                "snapshot_{}.csv",
                record_index / cfg.snapshot_stride
            ));
            match state.field.write_csv(&path) {
                Ok(()) => files.push(path),
                Err(e) => snapshot_error = Some(e),
            }
        }
        record_index += 1;
    })?;
    if let Some(e) = snapshot_error {
        return Err(e);
    }
    let path = cfg.output_dir.join("diagnostics.csv");
    evolve::write_diagnostics_csv(&path, &cfg.nonlinearity, &run.records)?;
    files.insert(0, path);
    let last = run.records.last().copied().unwrap_or_default();
    Ok(ExperimentReport {
        kind: cfg.kind,
        summary: json!({
            "status": to_value(&run.status),
            "steps": run.steps,
            "t": last.t,
            "max_mass_drift": run.max_mass_drift,
            "energy_drift": energy_drift(&run.records),
        }),
        files,
    })
}

/// `max_k |E_k − E_0| / (1 + |E_0|)` over the records.
pub fn energy_drift(records: &[DiagnosticsRecord]) -> f64 {
    let Some(first) = records.first() else {
        return 0.0;
    };
    records
        .iter()
        .map(|r| (r.energy - first.energy).abs() / (1.0 + first.energy.abs()))
        .fold(0.0, f64::max)
}

/// Dispatches on `cfg.kind`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    match cfg.kind {
        ExperimentKind::Classify => run_classify(cfg),
        ExperimentKind::Dichotomy => run_dichotomy(cfg),
        ExperimentKind::Instability => run_instability(cfg, None),
        ExperimentKind::DefocusingGlobal => run_defocusing_global(cfg),
        ExperimentKind::VirialCheck => run_virial_check(cfg),
        ExperimentKind::MtScan => run_mt_scan(cfg),
        ExperimentKind::Sweep => run_sweep(cfg),
    }
}

/// Verdicts of the config's initial data.
pub fn run_classify(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.write_resolved()?;
    let grid = build_grid(cfg)?;
    let gs = config_ground_state(cfg, &grid)?;
    let u0 = initial_data(&cfg.initial, &grid, Some(&gs))?;
    let verdict = classify_against(
        &gs,
        &cfg.nonlinearity,
        &u0,
        &cfg.pairs(),
        cfg.near_threshold,
    )?;
    let path = cfg.output_dir.join("classification.json");
    let value = to_value(&verdict);
    write_json(&path, &value)?;
    Ok(ExperimentReport {
        kind: cfg.kind,
        summary: json!({
            "set": verdict.set.name(),
            "prediction": verdict.prediction.name(),
            "consistent": verdict.consistent,
            "S_u0": verdict.verdicts[0].s_u0,
            "m": gs.m,
        }),
        files: vec![path],
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Global,
    BlowUp,
    Failed,
}

impl Outcome {
    pub fn name(&self) -> &'static str {
        match self {
            Outcome::Global => "global",
            Outcome::BlowUp => "blow_up",
            Outcome::Failed => "failed",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DichotomyRun {
    pub classification: Classification,
    pub status: Status,
    pub outcome: Outcome,
    pub t_blow: Option<f64>,
    /// `None` when there is no prediction to compare against.
    pub agrees: Option<bool>,
    /// For `A+` data: every record kept `S < m` and `K ≥ −1e−6·sigma2` for
    /// every pair.
    pub stayed_in_set: Option<bool>,
    /// The same check for each pair that places the data in `A+`.
    pub invariance: Vec<PairInvariance>,
    pub max_sigma2_ratio: f64,
    pub records: usize,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PairInvariance {
    pub alpha: f64,
    pub beta: f64,
    pub held: bool,
    /// Time of the first record that left the set.
    pub first_exit: Option<f64>,
}

/// Classifies `u0`, evolves it, and compares the outcome with the prediction.
pub fn dichotomy_run(
    gs: &GroundStateResult,
    spec: &NonlinearitySpec,
    u0: &RadialField,
    pairs: &[(f64, f64)],
    near_threshold: f64,
    params: &EvolveParams,
    diagnostics: Option<&Path>,
) -> Result<DichotomyRun> {
    let classification = classify_against(gs, spec, u0, pairs, near_threshold)?;
    let run = evolve::evolve(u0, spec, params)?;
    if let Some(path) = diagnostics {
        evolve::write_diagnostics_csv(path, spec, &run.records)?;
    }
    let outcome = if run.status.blew_up() {
        Outcome::BlowUp
    } else if run.status == Status::Finished {
        Outcome::Global
    } else {
        Outcome::Failed
    };
    let agrees = match classification.prediction {
        Prediction::Global => Some(outcome == Outcome::Global),
        Prediction::BlowUp => Some(outcome == Outcome::BlowUp),
        Prediction::NoPrediction => None,
    };
    let sigma2 = |r: &DiagnosticsRecord| r.mass + r.grad2 + r.variance;
    let sigma2_0 = run.records.first().map(sigma2).unwrap_or(0.0);
    let max_sigma2_ratio = run
        .records
        .iter()
        .map(|r| sigma2(r) / sigma2_0)
        .fold(0.0, f64::max);
    let invariance: Vec<PairInvariance> = classification
        .verdicts
        .iter()
        .filter(|v| v.set == InvariantSet::APlus)
        .map(|v| {
            let first_exit = run
                .records
                .iter()
                .find(|r| {
                    let k = v.alpha * r.k_1_0 + v.beta * r.k_0_1;
                    r.action >= gs.m || k < -1e-6 * sigma2(r)
                })
                .map(|r| r.t);
            PairInvariance {
                alpha: v.alpha,
                beta: v.beta,
                held: first_exit.is_none(),
                first_exit,
            }
        })
        .collect();
    let stayed_in_set = (classification.set == InvariantSet::APlus)
        .then(|| invariance.len() == pairs.len() && invariance.iter().all(|p| p.held));
    Ok(DichotomyRun {
        classification,
        status: run.status,
        outcome,
        t_blow: run.status.t_blow(),
        agrees,
        stayed_in_set,
        invariance,
        max_sigma2_ratio,
        records: run.records.len(),
    })
}

pub fn run_dichotomy(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.write_resolved()?;
    let grid = build_grid(cfg)?;
    let gs = config_ground_state(cfg, &grid)?;
    let u0 = initial_data(&cfg.initial, &grid, Some(&gs))?;
    let diag = cfg.output_dir.join("diagnostics.csv");
    let run = dichotomy_run(
        &gs,
        &cfg.nonlinearity,
        &u0,
        &cfg.pairs(),
        cfg.near_threshold,
        &cfg.evolve_params(),
        Some(&diag),
    )?;
    let path = cfg.output_dir.join("dichotomy.json");
    write_json(&path, &to_value(&run))?;
    Ok(ExperimentReport {
        kind: cfg.kind,
        summary: json!({
            "set": run.classification.set.name(),
            "prediction": run.classification.prediction.name(),
            "outcome": run.outcome.name(),
            "agrees": run.agrees,
            "t_blow": run.t_blow,
            "max_sigma2_ratio": run.max_sigma2_ratio,
        }),
        files: vec![diag, path],
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepCell {
    pub param1: f64,
    pub param2: f64,
    #[serde(rename = "S_u0")]
    pub s_u0: f64,
    pub m: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub set: InvariantSet,
    pub prediction: Prediction,
    pub outcome: Outcome,
    pub t_blow: Option<f64>,
    pub agrees: Option<bool>,
    pub consistent: bool,
    pub stayed_in_set: Option<bool>,
    pub invariance: Vec<PairInvariance>,
    pub error: Option<String>,
}

pub const ATLAS_COLUMNS: [&str; 9] = [
    "param1",
    "param2",
    "S_u0",
    "m",
    "K",
    "set",
    "prediction",
    "outcome",
    "t_blow",
];

pub fn write_atlas(path: &Path, spec: &NonlinearitySpec, cells: &[SweepCell]) -> Result<()> {
    let mut out = format!("# spec = {spec}\n{}\n", ATLAS_COLUMNS.join(","));
    for c in cells {
        let t_blow = c.t_blow.map(|t| format!("{t:.16e}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{},{}",
            c.param1,
            c.param2,
            c.s_u0,
            c.m,
            c.k,
            c.set.name(),
            c.prediction.name(),
            c.outcome.name(),
            t_blow
        );
    }
    write_text(path, &out)
}

fn sweep_data(
    cfg: &ExperimentConfig,
    grid: &Arc<RadialGrid>,
    gs: &GroundStateResult,
    p1: f64,
    p2: f64,
) -> Result<RadialField> {
    match cfg.sweep.params {
        SweepParams::GroundstateScaled => scaled_ground_state(&gs.phi, p2, p1),
        SweepParams::Gaussian => RadialField::gaussian(grid.clone(), p1, p2),
    }
}

/// Concurrent grid of dichotomy runs, merged into `atlas.csv`.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.write_resolved()?;
    let grid = build_grid(cfg)?;
    let gs = config_ground_state(cfg, &grid)?;
    let band = cfg.sweep.exclude_band;
    let mut jobs = Vec::new();
    for (i, &p1) in cfg.sweep.param1.iter().enumerate() {
        for (j, &p2) in cfg.sweep.param2.iter().enumerate() {
            if (p1 - 1.0).abs() < band && (p2 - 1.0).abs() < band {
                continue;
            }
            jobs.push((i, j, p1, p2));
        }
    }
    let params = cfg.evolve_params();
    let pairs = cfg.pairs();
    let cells: Vec<SweepCell> = jobs
        .par_iter()
        .map(|&(i, j, p1, p2)| {
            let dir = cfg.output_dir.join(format!("cell_{i}_{j}"));
            let attempt = (|| -> Result<DichotomyRun> {
                std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
                let u0 = sweep_data(cfg, &grid, &gs, p1, p2)?;
                let run = dichotomy_run(
                    &gs,
                    &cfg.nonlinearity,
                    &u0,
                    &pairs,
                    cfg.near_threshold,
                    &params,
                    Some(&dir.join("diagnostics.csv")),
                )?;
                write_json(&dir.join("cell.json"), &to_value(&run))?;
                Ok(run)
            })();
            match attempt {
                Ok(run) => {
                    let v = &run.classification.verdicts[0];
                    SweepCell {
                        param1: p1,
                        param2: p2,
                        s_u0: v.s_u0,
                        m: v.m,
                        k: v.k,
                        set: v.set,
                        prediction: v.prediction,
                        outcome: run.outcome,
                        t_blow: run.t_blow,
                        agrees: run.agrees,
                        consistent: run.classification.consistent,
                        stayed_in_set: run.stayed_in_set,
                        invariance: run.invariance.clone(),
                        error: None,
                    }
                }
                Err(e) => SweepCell {
                    param1: p1,
                    param2: p2,
                    s_u0: f64::NAN,
                    m: gs.m,
                    k: f64::NAN,
                    set: InvariantSet::Outside,
                    prediction: Prediction::NoPrediction,
                    outcome: Outcome::Failed,
                    t_blow: None,
                    agrees: None,
                    consistent: false,
                    stayed_in_set: None,
                    invariance: Vec::new(),
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let atlas = cfg.output_dir.join("atlas.csv");
    write_atlas(&atlas, &cfg.nonlinearity, &cells)?;
    let predicted: Vec<&SweepCell> = cells.iter().filter(|c| c.agrees.is_some()).collect();
    let agreeing = predicted.iter().filter(|c| c.agrees == Some(true)).count();
    let mut exits: Vec<Value> = Vec::new();
    for (alpha, beta) in cfg.pairs() {
        let checked: Vec<&PairInvariance> = cells
            .iter()
            .flat_map(|c| c.invariance.iter())
            .filter(|p| p.alpha == alpha && p.beta == beta)
            .collect();
        exits.push(json!({
            "alpha": alpha,
            "beta": beta,
            "a_plus_runs": checked.len(),
            "left_set": checked.iter().filter(|p| !p.held).count(),
        }));
    }
    let cells_path = cfg.output_dir.join("sweep.json");
    write_json(&cells_path, &to_value(&cells))?;
    Ok(ExperimentReport {
        kind: cfg.kind,
        summary: json!({
            "cells": cells.len(),
            "predicted": predicted.len(),
            "agreeing": agreeing,
            "agreement": if predicted.is_empty() { Value::Null } else { json!(agreeing as f64 / predicted.len() as f64) },
            "failed": cells.iter().filter(|c| c.error.is_some()).count(),
            "inconsistent_pairs": cells.iter().filter(|c| !c.consistent).count(),
            "invariance": exits,
            "m": gs.m,
        }),
        files: vec![atlas, cells_path],
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct InstabilityPoint {
    pub t: f64,
    pub orbit_distance: f64,
    #[serde(rename = "P")]
    pub p: f64,
    pub mass: f64,
    pub energy: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct InstabilityRun {
    pub lambda: f64,
    pub instability_index: f64,
    /// `E(u₀) < E(φ)`, `M(u₀) ≤ M(φ)(1 + 1e−6)`, `P(u₀) < 0`
    pub in_pi_eps: bool,
    pub energy_gap: f64,
    pub mass_gap: f64,
    pub p0: f64,
    pub initial_distance: f64,
    pub max_distance: f64,
    /// First record time with `distance ≥ 10·initial_distance`.
    pub t_escape: Option<f64>,
    pub p_negative_throughout: bool,
    pub status: Status,
    #[serde(skip)]
    pub series: Vec<InstabilityPoint>,
}

/// Evolves `φ_λ` and tracks its distance to the orbit of `φ`.
pub fn instability_run(
    gs: &GroundStateResult,
    lambda: f64,
    params: &EvolveParams,
) -> Result<InstabilityRun> {
    let spec = gs.spec;
    let phi = &gs.phi;
    let u0 = scaled_ground_state(phi, lambda, 1.0)?;
    let ev0 = Evaluation::new(&spec, &u0)?;
    let evphi = Evaluation::new(&spec, phi)?;
    let energy_gap = ev0.energy() - evphi.energy();
    let mass_gap = ev0.mass() - evphi.mass();
    let p0 = ev0.p();
    let in_pi_eps = energy_gap < 0.0 && mass_gap <= 1e-6 * evphi.mass() && p0 < 0.0;
    let mut series = Vec::new();
    let mut failure = None;
    let run = evolve::evolve_with(&u0, &spec, params, |state, rec| {
        match orbit_distance(&state.field, phi) {
            Ok(d) => series.push(InstabilityPoint {
                t: rec.t,
                orbit_distance: d.distance,
                p: rec.p,
                mass: rec.mass,
                energy: rec.energy,
            }),
            Err(e) => failure = Some(e),
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let initial_distance = series.first().map(|p| p.orbit_distance).unwrap_or(0.0);
    let max_distance = series.iter().map(|p| p.orbit_distance).fold(0.0, f64::max);
    let t_escape = series
        .iter()
        .find(|p| initial_distance > 0.0 && p.orbit_distance >= 10.0 * initial_distance)
        .map(|p| p.t);
    Ok(InstabilityRun {
        lambda,
        instability_index: gs.instability_index,
        in_pi_eps,
        energy_gap,
        mass_gap,
        p0,
        initial_distance,
        max_distance,
        t_escape,
        p_negative_throughout: series.iter().all(|p| p.p < 0.0),
        status: run.status,
        series,
    })
}

pub fn write_instability_csv(
    path: &Path,
    spec: &NonlinearitySpec,
    series: &[InstabilityPoint],
) -> Result<()> {
    let mut out = format!("# spec = {spec}\nt,orbit_distance,P,mass,energy\n");
    for p in series {
        let _ = writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            p.t, p.orbit_distance, p.p, p.mass, p.energy
        );
    }
    write_text(path, &out)
}

/// `lambda` overrides the recipe's `λ` (default 1.01).
pub fn run_instability(cfg: &ExperimentConfig, lambda: Option<f64>) -> Result<ExperimentReport> {
    cfg.write_resolved()?;
    let grid = build_grid(cfg)?;
    let gs = config_ground_state(cfg, &grid)?;
    let lambda = lambda.unwrap_or(match cfg.initial {
        InitialData::GroundstateScaled { lambda, .. } => lambda,
        _ => 1.01,
    });
    let run = instability_run(&gs, lambda, &cfg.evolve_params())?;
    let csv = cfg.output_dir.join("instability.csv");
    write_instability_csv(&csv, &cfg.nonlinearity, &run.series)?;
    let path = cfg.output_dir.join("instability.json");
    let summary = to_value(&run);
    write_json(&path, &summary)?;
    Ok(ExperimentReport {
        kind: cfg.kind,
        summary,
        files: vec![csv, path],
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DefocusingRun {
    pub status: Status,
    pub sigma2_initial: f64,
    pub max_sigma2: f64,
    pub bounded: bool,
    pub max_mass_drift: f64,
}

pub fn defocusing_run(
    spec: &NonlinearitySpec,
    u0: &RadialField,
    params: &EvolveParams,
    bound_factor: f64,
    diagnostics: Option<&Path>,
) -> Result<DefocusingRun> {
    let run = evolve::evolve(u0, spec, params)?;
    if let Some(path) = diagnostics {
        evolve::write_diagnostics_csv(path, spec, &run.records)?;
    }
    let sigma2_initial = u0.norms()?.sigma2;
    let max_sigma2 = run
        .records
        .iter()
        .map(|r| r.mass + r.grad2 + r.variance)
        .fold(0.0, f64::max);
    Ok(DefocusingRun {
        status: run.status,
        sigma2_initial,
        max_sigma2,
        bounded: run.status == Status::Finished && max_sigma2 <= bound_factor * sigma2_initial,
        max_mass_drift: run.max_mass_drift,
    })
}

pub fn run_defocusing_global(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.write_resolved()?;
    let spec = cfg.nonlinearity.with_sign(Sign::Defocusing);
    if cfg.nonlinearity.epsilon != Sign::Defocusing {
        log::warn!("defocusing_global runs with epsilon = -1 regardless of the config sign");
    }
    let grid = build_grid(cfg)?;
    if needs_ground_state(&cfg.initial) {
        return Err(Error::Config(
            "defocusing_global needs gaussian or file initial data".into(),
        ));
    }
    let u0 = initial_data(&cfg.initial, &grid, None)?;
    let diag = cfg.output_dir.join("diagnostics.csv");
    let run = defocusing_run(
        &spec,
        &u0,
        &cfg.evolve_params(),
        cfg.bound_factor,
        Some(&diag),
    )?;
    let path = cfg.output_dir.join("defocusing.json");
    let summary = to_value(&run);
    write_json(&path, &summary)?;
    Ok(ExperimentReport {
        kind: cfg.kind,
        summary,
        files: vec![diag, path],
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct VirialPoint {
    pub t: f64,
    /// Second difference of the variance.
    pub lhs: f64,
    /// `8·virial_rhs`
    pub rhs: f64,
    /// `|lhs − rhs| / (1 + |rhs|)`
    pub relative: f64,
}

/// Three-point second differences of the variance over (possibly uneven)
/// record times, against `8·virial_rhs` at the middle record.
pub fn virial_residuals(records: &[DiagnosticsRecord]) -> Vec<VirialPoint> {
    records
        .windows(3)
        .filter_map(|w| {
            let (h1, h2) = (w[1].t - w[0].t, w[2].t - w[1].t);
            if !(h1 > 0.0 && h2 > 0.0) {
                return None;
            }
            let lhs = 2.0
                * ((w[2].variance - w[1].variance) / h2 - (w[1].variance - w[0].variance) / h1)
                / (h1 + h2);
            let rhs = 8.0 * w[1].virial_rhs;
            Some(VirialPoint {
                t: w[1].t,
                lhs,
                rhs,
                relative: (lhs - rhs).abs() / (1.0 + rhs.abs()),
            })
        })
        .collect()
}

pub fn run_virial_check(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.write_resolved()?;
    let grid = build_grid(cfg)?;
    let gs = if needs_ground_state(&cfg.initial) {
        Some(config_ground_state(cfg, &grid)?)
    } else {
        None
    };
    let u0 = initial_data(&cfg.initial, &grid, gs.as_ref())?;
    let run = evolve::evolve(&u0, &cfg.nonlinearity, &cfg.evolve_params())?;
    let diag = cfg.output_dir.join("diagnostics.csv");
    evolve::write_diagnostics_csv(&diag, &cfg.nonlinearity, &run.records)?;
    let points = virial_residuals(&run.records);
    let csv = cfg.output_dir.join("virial.csv");
    let mut out = format!(
        "# spec = {}\nt,second_difference,eight_virial_rhs,relative\n",
        cfg.nonlinearity
    );
    for p in &points {
        let _ = writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            p.t, p.lhs, p.rhs, p.relative
        );
    }
    write_text(&csv, &out)?;
    let max_relative = points.iter().map(|p| p.relative).fold(0.0, f64::max);
    Ok(ExperimentReport {
        kind: cfg.kind,
        summary: json!({
            "status": to_value(&run.status),
            "points": points.len(),
            "max_relative_residual": max_relative,
            "within_one_percent": max_relative <= 0.01,
        }),
        files: vec![diag, csv],
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MtPoint {
    pub width: f64,
    pub alpha: f64,
    pub mt: f64,
    pub mass: f64,
    pub ratio: f64,
}

/// Gaussian bumps of each width normalized to `grad2 = 1`, with
/// `∫(e^{α|u|²} − 1)/M` at `α = 4πk/(n+1)`, `k = 1..n`.
pub fn mt_scan(
    grid: &Arc<RadialGrid>,
    widths: &[f64],
    alpha_points: usize,
) -> Result<Vec<MtPoint>> {
    let mut out = Vec::new();
    for &width in widths {
        let base = RadialField::gaussian(grid.clone(), 1.0, width)?;
        let g2 = base.norms()?.grad2;
        let bump = base.scaled((1.0 / g2.sqrt()).into());
        let mass = bump.norms()?.mass;
        for k in 1..=alpha_points {
            let alpha = functionals::MT_CRITICAL * k as f64 / (alpha_points + 1) as f64;
            let mt = functionals::mt_functional(&bump, alpha)?;
            out.push(MtPoint {
                width,
                alpha,
                mt,
                mass,
                ratio: mt / mass,
            });
        }
    }
    Ok(out)
}

pub fn run_mt_scan(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.write_resolved()?;
    let grid = build_grid(cfg)?;
    let points = mt_scan(&grid, &cfg.mt_scan.widths, cfg.mt_scan.alpha_points)?;
    let csv = cfg.output_dir.join("mt_scan.csv");
    let mut out = String::from("width,alpha,mt,mass,ratio\n");
    for p in &points {
        let _ = writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            p.width, p.alpha, p.mt, p.mass, p.ratio
        );
    }
    write_text(&csv, &out)?;
    let max_ratio = points.iter().map(|p| p.ratio).fold(0.0, f64::max);
    Ok(ExperimentReport {
        kind: cfg.kind,
        summary: json!({ "points": points.len(), "max_ratio": max_ratio }),
        files: vec![csv],
    })
}
