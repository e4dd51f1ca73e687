//! Nonlinearity families `G`, the derived Hamiltonian nonlinearity
//! `g(ρ) = ρ G'(ρ²)`, the dilation operator `D f(x) = x f'(x)` applied to `G`,
//! and sampled audits of the structural conditions the ground-state and
//! blow-up theory place on `G`.
//!
//! Every evaluator works on the squared modulus `s = |u|² ≥ 0` except those
//! named after `g`, which take the modulus `ρ = |u|`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest argument accepted by any exponential evaluation.
pub const EXP_GUARD: f64 = 700.0;

/// Below this argument the exponential tails are summed as a power series.
const SERIES_CUTOFF: f64 = 20.0;

/// `Σ_{k≥n} x^k / k!` for `x ≥ 0`, free of cancellation for small `x`.
pub(crate) fn exp_tail(x: f64, n: u32, s: f64) -> Result<f64> {
    if x > EXP_GUARD {
        return Err(Error::Saturation { s, arg: x });
    }
    if x < SERIES_CUTOFF {
        let mut term = 1.0;
        for k in 1..=n {
            term *= x / k as f64;
        }
        let mut sum = term;
        let mut k = n;
        loop {
            k += 1;
            term *= x / k as f64;
            sum += term;
            if term <= sum * 1e-17 || term == 0.0 {
                break;
            }
        }
        Ok(sum)
    } else {
        let mut poly = 0.0;
        let mut term = 1.0;
        for k in 0..n {
            if k > 0 {
                term *= x / k as f64;
            }
            poly += term;
        }
        Ok(x.exp() - poly)
    }
}

/// The built-in families of `G`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// `G(s) = e^s − Σ_{k=0..K} s^k/k!`, critical class with `α_g = 1`.
    ExpTruncated {
        #[serde(rename = "K")]
        k: u32,
    },
    /// `G(s) = e^{√(1+s)} − (e/2)s − e`, subcritical class.
    ExpSubcritical,
    /// `G(s) = (2/(p+1)) s^{(p+1)/2}`, so that `g(ρ) = ρ^p`.
    Monomial { p: f64 },
}

/// Sign `ε` in front of the nonlinear term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub enum Sign {
    Focusing,
    Defocusing,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Focusing => 1.0,
            Sign::Defocusing => -1.0,
        }
    }
}

impl TryFrom<i64> for Sign {
    type Error = String;

    fn try_from(v: i64) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Sign::Focusing),
            -1 => Ok(Sign::Defocusing),
            other => Err(format!("epsilon must be 1 or -1, got {other}")),
        }
    }
}

impl From<Sign> for i64 {
    fn from(s: Sign) -> i64 {
        match s {
            Sign::Focusing => 1,
            Sign::Defocusing => -1,
        }
    }
}

/// Growth class of `G'''` at infinity. Fixed by the family, never sampled.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum GrowthClass {
    Subcritical,
    Critical { alpha_g: f64 },
}

/// A concrete nonlinearity: family, inhomogeneity power `μ` of `|x|^μ`, and sign.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonlinearitySpec {
    #[serde(flatten)]
    pub family: Family,
    pub mu: f64,
    pub epsilon: Sign,
    /// Test hook: when set every nonlinear evaluator returns zero, leaving
    /// the bare harmonic oscillator.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub linear_only: bool,
}

impl NonlinearitySpec {
    pub fn new(family: Family, mu: f64, epsilon: Sign) -> Result<Self> {
        let spec = NonlinearitySpec {
            family,
            mu,
            epsilon,
            linear_only: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn exp_truncated(k: u32, mu: f64, epsilon: Sign) -> Result<Self> {
        Self::new(Family::ExpTruncated { k }, mu, epsilon)
    }

    pub fn monomial(p: f64, mu: f64, epsilon: Sign) -> Result<Self> {
        Self::new(Family::Monomial { p }, mu, epsilon)
    }

    pub fn exp_subcritical(mu: f64, epsilon: Sign) -> Result<Self> {
        Self::new(Family::ExpSubcritical, mu, epsilon)
    }

    /// Same spec with the nonlinearity switched off.
    pub fn linearized(mut self) -> Self {
        self.linear_only = true;
        self
    }

    pub fn with_sign(mut self, epsilon: Sign) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "mu must be positive, got {}",
                self.mu
            )));
        }
        match self.family {
            Family::ExpTruncated { k } if k < 2 => Err(Error::InvalidArgument(format!(
                "exp_truncated needs K >= 2, got {k}"
            ))),
            Family::Monomial { p } if !(p > 1.0) || !p.is_finite() => Err(Error::InvalidArgument(
                format!("monomial needs p > 1, got {p}"),
            )),
            _ => Ok(()),
        }
    }

    pub fn eps(&self) -> f64 {
        self.epsilon.value()
    }

    pub fn growth_class(&self) -> GrowthClass {
        match self.family {
            Family::ExpTruncated { .. } => GrowthClass::Critical { alpha_g: 1.0 },
            Family::ExpSubcritical | Family::Monomial { .. } => GrowthClass::Subcritical,
        }
    }

    pub fn alpha_g(&self) -> Option<f64> {
        match self.growth_class() {
            GrowthClass::Critical { alpha_g } => Some(alpha_g),
            GrowthClass::Subcritical => None,
        }
    }

    /// Exact small-amplitude power `q` of `g(ρ) ≃ ρ^q`.
    pub fn q_g_exact(&self) -> f64 {
        match self.family {
            Family::ExpTruncated { k } => (2 * k + 1) as f64,
            Family::ExpSubcritical => 5.0,
            Family::Monomial { p } => p,
        }
    }

    /// `G(s)`.
    pub fn big_g(&self, s: f64) -> Result<f64> {
        debug_assert!(s >= 0.0);
        if self.linear_only {
            return Ok(0.0);
        }
        match self.family {
            Family::ExpTruncated { k } => exp_tail(s, k + 1, s),
            Family::ExpSubcritical => {
                let (t, d) = sub_t(s);
                guard(t, s)?;
                Ok(std::f64::consts::E * exp_tail(d, 3, s)?)
            }
            Family::Monomial { p } => Ok(2.0 / (p + 1.0) * s.powf(0.5 * (p + 1.0))),
        }
    }

    /// `G'(s)`.
    pub fn g1(&self, s: f64) -> Result<f64> {
        if self.linear_only {
            return Ok(0.0);
        }
        match self.family {
            Family::ExpTruncated { k } => exp_tail(s, k, s),
            Family::ExpSubcritical => {
                let (t, d) = sub_t(s);
                guard(t, s)?;
                Ok(std::f64::consts::E * exp_tail(d, 2, s)? / (2.0 * t))
            }
            Family::Monomial { p } => Ok(s.powf(0.5 * (p - 1.0))),
        }
    }

    /// `G''(s)`.
    pub fn g2(&self, s: f64) -> Result<f64> {
        if self.linear_only {
            return Ok(0.0);
        }
        match self.family {
            Family::ExpTruncated { k } => exp_tail(s, k - 1, s),
            Family::ExpSubcritical => {
                let (t, d) = sub_t(s);
                guard(t, s)?;
                Ok(t.exp() * d / (4.0 * t.powi(3)))
            }
            Family::Monomial { p } => Ok(0.5 * (p - 1.0) * s.powf(0.5 * (p - 3.0))),
        }
    }

    /// `G'''(s)`.
    pub fn g3(&self, s: f64) -> Result<f64> {
        if self.linear_only {
            return Ok(0.0);
        }
        match self.family {
            Family::ExpTruncated { k } => exp_tail(s, k - 2, s),
            Family::ExpSubcritical => {
                let (t, _) = sub_t(s);
                guard(t, s)?;
                Ok(t.exp() * (t * t - 3.0 * t + 3.0) / (8.0 * t.powi(5)))
            }
            Family::Monomial { p } => Ok(0.25 * (p - 1.0) * (p - 3.0) * s.powf(0.5 * (p - 5.0))),
        }
    }

    /// `g(ρ) = ρ G'(ρ²)`.
    pub fn g(&self, rho: f64) -> Result<f64> {
        Ok(rho * self.g1(rho * rho)?)
    }

    /// `g'(ρ) = G'(ρ²) + 2ρ² G''(ρ²)`.
    pub fn g_prime(&self, rho: f64) -> Result<f64> {
        if self.linear_only {
            return Ok(0.0);
        }
        match self.family {
            Family::Monomial { p } => Ok(p * rho.powf(p - 1.0)),
            _ => {
                let s = rho * rho;
                Ok(self.g1(s)? + 2.0 * s * self.g2(s)?)
            }
        }
    }

    /// `(DG)(s)` for `order = 1`, `(D²G)(s)` for `order = 2`.
    pub fn dg(&self, s: f64, order: u8) -> Result<f64> {
        if self.linear_only {
            return Ok(0.0);
        }
        if let Family::Monomial { p } = self.family {
            let c = 0.5 * (p + 1.0);
            let base = self.big_g(s)?;
            return match order {
                1 => Ok(c * base),
                2 => Ok(c * c * base),
                _ => Err(Error::InvalidArgument(format!("D order {order}"))),
            };
        }
        match order {
            1 => Ok(s * self.g1(s)?),
            2 => Ok(s * self.g1(s)? + s * s * self.g2(s)?),
            _ => Err(Error::InvalidArgument(format!("D order {order}"))),
        }
    }

    /// `G`, `DG` and `D²G` at one point, sharing the expensive evaluations.
    pub fn moments(&self, s: f64) -> Result<GMoments> {
        if self.linear_only {
            return Ok(GMoments::default());
        }
        if let Family::Monomial { p } = self.family {
            let c = 0.5 * (p + 1.0);
            let big_g = self.big_g(s)?;
            return Ok(GMoments {
                g: big_g,
                dg: c * big_g,
                d2g: c * c * big_g,
            });
        }
        let g0 = self.big_g(s)?;
        let first = s * self.g1(s)?;
        let second = first + s * s * self.g2(s)?;
        Ok(GMoments {
            g: g0,
            dg: first,
            d2g: second,
        })
    }
}

/// `G(s)`, `(DG)(s)` and `(D²G)(s)`. Note `ρ g(ρ) = DG(ρ²)` and
/// `ρ² g'(ρ) = (2D² − D)G(ρ²)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GMoments {
    pub g: f64,
    pub dg: f64,
    pub d2g: f64,
}

impl GMoments {
    /// `(D − a)(D − b)G`.
    pub fn shifted_product(&self, a: f64, b: f64) -> f64 {
        self.d2g - (a + b) * self.dg + a * b * self.g
    }

    /// `ρ² g'(ρ)` at `s = ρ²`.
    pub fn rho2_gprime(&self) -> f64 {
        2.0 * self.d2g - self.dg
    }
}

fn sub_t(s: f64) -> (f64, f64) {
    let t = (1.0 + s).sqrt();
    (t, s / (1.0 + t))
}

fn guard(t: f64, s: f64) -> Result<()> {
    if t > EXP_GUARD {
        Err(Error::Saturation { s, arg: t })
    } else {
        Ok(())
    }
}

impl fmt::Display for NonlinearitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let eps: i64 = self.epsilon.into();
        match self.family {
            Family::ExpTruncated { k } => write!(f, "{{family = \"exp_truncated\", K = {k}, ")?,
            Family::ExpSubcritical => write!(f, "{{family = \"exp_subcritical\", ")?,
            Family::Monomial { p } => write!(f, "{{family = \"monomial\", p = {p}, ")?,
        }
        write!(f, "mu = {}, epsilon = {eps}", self.mu)?;
        if self.linear_only {
            write!(f, ", linear_only = true")?;
        }
        write!(f, "}}")
    }
}

/// Identifies which pointwise inequality a sample violated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionId {
    /// `(D − 1)G > 0`
    DMinusOne,
    /// `(D − 1)²G > 0`
    DMinusOneSquared,
    /// `(D − 2 − μ/2 − ε_g)G > 0` for the smallest candidate `ε_g`.
    StrongEps,
    /// `(D − 2 − μ/2)(D − 1 − μ/2)G > 0`
    StrongProduct,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub r: f64,
    pub condition: ConditionId,
    pub value: f64,
}

/// Each clause of the ground-state and strong ground-state conditions,
/// reported separately.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConditionClauses {
    pub mu_gt_2: bool,
    pub q_g_gt_3_plus_2mu: bool,
    pub d_minus_1_positive: bool,
    pub d_minus_1_squared_positive: bool,
    pub strong_eps_positive: bool,
    pub strong_product_positive: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport {
    pub spec: String,
    pub q_g_estimated: f64,
    pub q_g_exact: f64,
    pub clauses: ConditionClauses,
    pub satisfies_f: bool,
    pub satisfies_strong_4: bool,
    pub eps_g: Option<f64>,
    pub growth_class: GrowthClass,
    pub sample_range: (f64, f64),
    pub sample_len: usize,
    pub violation_points: Vec<Violation>,
}

pub const DEFAULT_EPS_CANDIDATES: [f64; 5] = [0.5, 0.25, 0.1, 0.05, 0.01];

/// `n` log-spaced points in `[lo, hi]`.
pub fn log_sample(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Audits the structural conditions on a finite sample of `(0, ∞)`.
///
/// The sample points serve both as arguments `s` of `G` and, for the
/// small-amplitude exponent, as moduli `ρ` of `g`: `q_g` is the least-squares
/// log–log slope of `g` over the sample points within two decades of the
/// smallest one.
pub fn check_conditions(
    spec: &NonlinearitySpec,
    sample: &[f64],
    eps_candidates: &[f64],
) -> Result<ConditionReport> {
    if sample.is_empty() {
        return Err(Error::InvalidArgument("empty condition sample".into()));
    }
    if sample.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::InvalidArgument(
            "sample points must be positive".into(),
        ));
    }
    let mu = spec.mu;
    let lo = sample.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = sample.iter().cloned().fold(0.0, f64::max);

    let q_g_estimated = estimate_q_g(spec, sample, lo)?;

    let mut eps_sorted: Vec<f64> = eps_candidates.to_vec();
    eps_sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut eps_ok = vec![true; eps_sorted.len()];

    let mut violations = Vec::new();
    let (mut dm1, mut dm1sq, mut prod) = (true, true, true);
    let a = 2.0 + 0.5 * mu;
    let b = 1.0 + 0.5 * mu;
    let eps_min = eps_sorted.last().copied();
    for &r in sample {
        let m = spec.moments(r)?;
        let v1 = m.dg - m.g;
        let v2 = m.shifted_product(1.0, 1.0);
        let v4 = m.shifted_product(a, b);
        if !(v1 > 0.0) {
            dm1 = false;
            violations.push(Violation {
                r,
                condition: ConditionId::DMinusOne,
                value: v1,
            });
        }
        if !(v2 > 0.0) {
            dm1sq = false;
            violations.push(Violation {
                r,
                condition: ConditionId::DMinusOneSquared,
                value: v2,
            });
        }
        if !(v4 > 0.0) {
            prod = false;
            violations.push(Violation {
                r,
                condition: ConditionId::StrongProduct,
                value: v4,
            });
        }
        for (ok, &eps) in eps_ok.iter_mut().zip(&eps_sorted) {
            let v3 = m.dg - (a + eps) * m.g;
            if !(v3 > 0.0) {
                *ok = false;
                if Some(eps) == eps_min {
                    violations.push(Violation {
                        r,
                        condition: ConditionId::StrongEps,
                        value: v3,
                    });
                }
            }
        }
    }
    let eps_g = eps_sorted
        .iter()
        .zip(&eps_ok)
        .find(|(_, &ok)| ok)
        .map(|(&e, _)| e);

    let clauses = ConditionClauses {
        mu_gt_2: mu > 2.0,
        q_g_gt_3_plus_2mu: q_g_estimated > 3.0 + 2.0 * mu,
        d_minus_1_positive: dm1,
        d_minus_1_squared_positive: dm1sq,
        strong_eps_positive: eps_g.is_some(),
        strong_product_positive: prod,
    };
    let satisfies_f = clauses.mu_gt_2
        && clauses.q_g_gt_3_plus_2mu
        && clauses.d_minus_1_positive
        && clauses.d_minus_1_squared_positive;
    let satisfies_strong_4 = clauses.mu_gt_2
        && clauses.q_g_gt_3_plus_2mu
        && clauses.strong_eps_positive
        && clauses.strong_product_positive;

    Ok(ConditionReport {
        spec: spec.to_string(),
        q_g_estimated,
        q_g_exact: spec.q_g_exact(),
        clauses,
        satisfies_f,
        satisfies_strong_4,
        eps_g,
        growth_class: spec.growth_class(),
        sample_range: (lo, hi),
        sample_len: sample.len(),
        violation_points: violations,
    })
}

fn estimate_q_g(spec: &NonlinearitySpec, sample: &[f64], lo: f64) -> Result<f64> {
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for &rho in sample.iter().filter(|&&r| r <= 100.0 * lo) {
        let g = spec.g(rho)?;
        if g > 0.0 {
            pts.push((rho.ln(), g.ln()));
        }
    }
    if pts.len() < 2 {
        // fall back to a two-point slope over one decade
        let (g0, g1) = (spec.g(lo)?, spec.g(10.0 * lo)?);
        if g0 > 0.0 && g1 > 0.0 {
            return Ok((g1 / g0).log10());
        }
        return Ok(f64::NAN);
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn exp2() -> NonlinearitySpec {
        NonlinearitySpec::exp_truncated(2, 0.5, Sign::Focusing).unwrap()
    }

    fn cubic() -> NonlinearitySpec {
        NonlinearitySpec::monomial(3.0, 0.5, Sign::Focusing).unwrap()
    }

    #[test]
    fn big_g_examples() {
        assert_eq!(exp2().big_g(0.0).unwrap(), 0.0);
        assert!((exp2().big_g(1.0).unwrap() - (E - 2.5)).abs() < 1e-15);
        assert!((cubic().big_g(4.0).unwrap() - 8.0).abs() < 1e-14);
    }

    #[test]
    fn small_g_examples() {
        for spec in [
            exp2(),
            cubic(),
            NonlinearitySpec::exp_subcritical(1.0, Sign::Focusing).unwrap(),
        ] {
            assert_eq!(spec.g(0.0).unwrap(), 0.0);
        }
        assert!((exp2().g(1.0).unwrap() - (E - 2.0)).abs() < 1e-15);
        assert!((cubic().g(2.0).unwrap() - 8.0).abs() < 1e-14);
    }

    #[test]
    fn dg_examples() {
        assert_eq!(exp2().dg(0.0, 1).unwrap(), 0.0);
        assert_eq!(cubic().dg(0.0, 1).unwrap(), 0.0);
        assert!((exp2().dg(1.0, 1).unwrap() - (E - 2.0)).abs() < 1e-15);
        assert!((cubic().dg(1.0, 1).unwrap() - 1.0).abs() < 1e-15);
        assert!(exp2().dg(1.0, 3).is_err());
    }

    #[test]
    fn exp_truncated_k2_matches_closed_forms() {
        // G = e^x − 1 − x − x²/2, (D−1)G = (x−1)e^x − x²/2 + 1,
        // (D−1)²G = (x²−x+1)e^x − x²/2 − 1.
        let spec = exp2();
        for &x in &[1.0, 2.5, 5.0, 9.0] {
            let m = spec.moments(x).unwrap();
            let dm1 = (x - 1.0) * f64::exp(x) - 0.5 * x * x + 1.0;
            let dm1sq = (x * x - x + 1.0) * f64::exp(x) - 0.5 * x * x - 1.0;
            assert!(((m.dg - m.g) - dm1).abs() < 1e-12 * dm1.abs().max(1.0));
            assert!((m.shifted_product(1.0, 1.0) - dm1sq).abs() < 1e-12 * dm1sq.abs().max(1.0));
        }
    }

    #[test]
    fn series_branch_is_accurate_near_zero() {
        let spec = exp2();
        let s: f64 = 1e-4;
        let expected = s.powi(3) / 6.0 + s.powi(4) / 24.0 + s.powi(5) / 120.0 + s.powi(6) / 720.0;
        assert!((spec.big_g(s).unwrap() - expected).abs() < 2e-15 * expected);
    }

    #[test]
    fn overflow_guard_reports_argument() {
        match exp2().big_g(701.0) {
            Err(Error::Saturation { s, .. }) => assert_eq!(s, 701.0),
            other => panic!("expected saturation, got {other:?}"),
        }
        assert!(exp2().big_g(699.0).unwrap().is_finite());
        let sub = NonlinearitySpec::exp_subcritical(1.0, Sign::Focusing).unwrap();
        assert!(sub.g1(800.0 * 800.0).is_err());
    }

    #[test]
    fn subcritical_example_vanishes_to_third_order() {
        let spec = NonlinearitySpec::exp_subcritical(1.0, Sign::Focusing).unwrap();
        let s: f64 = 1e-3;
        let direct = (1.0 + s).sqrt().exp() - 0.5 * E * s - E;
        let g = spec.big_g(s).unwrap();
        assert!((g - E * s.powi(3) / 48.0).abs() < 1e-2 * g);
        assert!((g - direct).abs() < 1e-14);
        assert!((spec.g3(0.0).unwrap() - E / 8.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(NonlinearitySpec::exp_truncated(1, 0.5, Sign::Focusing).is_err());
        assert!(NonlinearitySpec::monomial(1.0, 0.5, Sign::Focusing).is_err());
        assert!(NonlinearitySpec::monomial(3.0, 0.0, Sign::Focusing).is_err());
        assert!(Sign::try_from(0).is_err());
    }

    #[test]
    fn linear_hook_zeroes_everything() {
        let spec = exp2().linearized();
        assert_eq!(spec.big_g(3.0).unwrap(), 0.0);
        assert_eq!(spec.g(3.0).unwrap(), 0.0);
        assert_eq!(spec.g_prime(3.0).unwrap(), 0.0);
        assert_eq!(spec.dg(3.0, 2).unwrap(), 0.0);
    }

    #[test]
    fn display_round_trips_through_toml() {
        for spec in [
            exp2(),
            cubic(),
            NonlinearitySpec::exp_subcritical(2.5, Sign::Defocusing).unwrap(),
        ] {
            let text = format!("nonlinearity = {spec}");
            #[derive(Deserialize)]
            struct Wrap {
                nonlinearity: NonlinearitySpec,
            }
            let back: Wrap = toml::from_str(&text).unwrap();
            assert_eq!(back.nonlinearity, spec);
        }
        assert_eq!(
            exp2().to_string(),
            "{family = \"exp_truncated\", K = 2, mu = 0.5, epsilon = 1}"
        );
    }

    #[test]
    fn conditions_exp_truncated_low_mu() {
        let sample = log_sample(1e-4, 10.0, 400);
        let rep = check_conditions(&exp2(), &sample, &DEFAULT_EPS_CANDIDATES).unwrap();
        assert!((rep.q_g_estimated - 5.0).abs() < 0.05);
        assert!(rep.clauses.q_g_gt_3_plus_2mu);
        assert!(rep.clauses.d_minus_1_positive);
        assert!(rep.clauses.d_minus_1_squared_positive);
        // μ > 2 is the only clause that fails at μ = 0.5
        assert!(!rep.clauses.mu_gt_2);
        assert!(!rep.satisfies_f);
        assert_eq!(rep.growth_class, GrowthClass::Critical { alpha_g: 1.0 });
        // near zero DG ≈ 3G, so ε_g < 3 − 2.25 = 0.75 passes
        assert_eq!(rep.eps_g, Some(0.5));
        assert!(rep.violation_points.is_empty());
    }

    #[test]
    fn conditions_exp_truncated_high_mu_fails_q_clause() {
        let spec = NonlinearitySpec::exp_truncated(2, 3.0, Sign::Focusing).unwrap();
        let rep =
            check_conditions(&spec, &log_sample(1e-4, 10.0, 200), &DEFAULT_EPS_CANDIDATES).unwrap();
        assert!(rep.clauses.mu_gt_2);
        assert!(!rep.clauses.q_g_gt_3_plus_2mu);
        assert!(!rep.satisfies_f);
        // K = 5 pushes q_g = 11 above 3 + 2μ = 9
        let spec5 = NonlinearitySpec::exp_truncated(5, 3.0, Sign::Focusing).unwrap();
        let rep5 = check_conditions(
            &spec5,
            &log_sample(1e-4, 10.0, 200),
            &DEFAULT_EPS_CANDIDATES,
        )
        .unwrap();
        assert!((rep5.q_g_estimated - 11.0).abs() < 0.05);
        assert!(rep5.satisfies_f);
    }

    #[test]
    fn conditions_monomial() {
        let rep = check_conditions(
            &cubic(),
            &log_sample(1e-3, 10.0, 100),
            &DEFAULT_EPS_CANDIDATES,
        )
        .unwrap();
        assert!(rep.clauses.d_minus_1_positive);
        assert!(rep.clauses.d_minus_1_squared_positive);
        assert!((rep.q_g_estimated - 3.0).abs() < 1e-9);
        // DG = 2G so (D − 2.25 − ε)G < 0: no witness, violations recorded
        assert_eq!(rep.eps_g, None);
        assert!(rep
            .violation_points
            .iter()
            .any(|v| v.condition == ConditionId::StrongEps));
    }

    #[test]
    fn conditions_reject_bad_samples() {
        assert!(check_conditions(&exp2(), &[], &DEFAULT_EPS_CANDIDATES).is_err());
        assert!(check_conditions(&exp2(), &[0.0, 1.0], &DEFAULT_EPS_CANDIDATES).is_err());
    }
}
