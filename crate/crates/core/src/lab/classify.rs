//! Membership of initial data in the invariant sets `A±`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::Evaluation;
use crate::grid::RadialField;
use crate::groundstate::GroundStateResult;
use crate::nonlin::{NonlinearitySpec, Sign};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum InvariantSet {
    #[serde(rename = "A_plus")]
    APlus,
    #[serde(rename = "A_minus")]
    AMinus,
    Outside,
}

impl InvariantSet {
    pub fn name(&self) -> &'static str {
        match self {
            InvariantSet::APlus => "A_plus",
            InvariantSet::AMinus => "A_minus",
            InvariantSet::Outside => "Outside",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Prediction {
    Global,
    BlowUp,
    NoPrediction,
}

impl Prediction {
    pub fn name(&self) -> &'static str {
        match self {
            Prediction::Global => "global",
            Prediction::BlowUp => "blow_up",
            Prediction::NoPrediction => "no_prediction",
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ClassificationVerdict {
    pub alpha: f64,
    pub beta: f64,
    #[serde(rename = "S_u0")]
    pub s_u0: f64,
    pub m: f64,
    #[serde(rename = "K_1_m1_u0")]
    pub k_1_m1_u0: f64,
    #[serde(rename = "K_1_0_u0")]
    pub k_1_0_u0: f64,
    /// `K_{α,β}(u₀)` for this verdict's pair.
    #[serde(rename = "K")]
    pub k: f64,
    pub set: InvariantSet,
    pub prediction: Prediction,
}

#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    pub verdicts: Vec<ClassificationVerdict>,
    /// The first pair's verdict.
    pub set: InvariantSet,
    pub prediction: Prediction,
    /// False when pairs place the data in different sets.
    pub consistent: bool,
}

/// `A+` if `S < m` and `K ≥ 0`, `A−` if `S < m` and `K < 0`; data with
/// `|S − m| < near_threshold·m` or `S ≥ m` is `Outside`.
pub fn classify(
    spec: &NonlinearitySpec,
    u0: &RadialField,
    m: f64,
    pairs: &[(f64, f64)],
    near_threshold: f64,
) -> Result<Classification> {
    if spec.epsilon != Sign::Focusing {
        return Err(Error::InvalidArgument(
            "invariant sets are defined for the focusing sign".into(),
        ));
    }
    if pairs.is_empty() {
        return Err(Error::InvalidArgument(
            "no (alpha, beta) pairs to classify".into(),
        ));
    }
    let ev = Evaluation::new(spec, u0)?;
    let s = ev.action();
    let k_1_m1 = ev.k(1.0, -1.0).total;
    let k_1_0 = ev.k(1.0, 0.0).total;
    let below = s < m && (m - s).abs() >= near_threshold * m.abs();
    let verdicts: Vec<ClassificationVerdict> = pairs
        .iter()
        .map(|&(alpha, beta)| {
            let k = ev.k(alpha, beta).total;
            let (set, prediction) = match (below, k >= 0.0) {
                (true, true) => (InvariantSet::APlus, Prediction::Global),
                (true, false) => (InvariantSet::AMinus, Prediction::BlowUp),
                (false, _) => (InvariantSet::Outside, Prediction::NoPrediction),
            };
            ClassificationVerdict {
                alpha,
                beta,
                s_u0: s,
                m,
                k_1_m1_u0: k_1_m1,
                k_1_0_u0: k_1_0,
                k,
                set,
                prediction,
            }
        })
        .collect();
    let consistent = verdicts.iter().all(|v| v.set == verdicts[0].set);
    if !consistent {
        log::warn!("invariant-set membership differs across (alpha, beta) pairs");
    }
    Ok(Classification {
        set: verdicts[0].set,
        prediction: verdicts[0].prediction,
        verdicts,
        consistent,
    })
}

/// [`classify`] against a computed ground state, checking spec and grid.
pub fn classify_against(
    ground: &GroundStateResult,
    spec: &NonlinearitySpec,
    u0: &RadialField,
    pairs: &[(f64, f64)],
    near_threshold: f64,
) -> Result<Classification> {
    if ground.spec != *spec {
        return Err(Error::InvalidArgument(format!(
            "ground state computed for {} but data uses {spec}",
            ground.spec
        )));
    }
    ground.phi.same_grid(u0)?;
    classify(spec, u0, ground.m, pairs, near_threshold)
}
