//! Flat TOML experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::EvolveParams;
use crate::nonlin::NonlinearitySpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Classify,
    Dichotomy,
    Instability,
    DefocusingGlobal,
    VirialCheck,
    MtScan,
    Sweep,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// `A·exp(−r²/(2w²))`
    Gaussian { amplitude: f64, width: f64 },
    /// `amplitude·φ_λ` with `φ_λ = λφ(λ·)`
    GroundstateScaled {
        lambda: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// Field CSV written by this crate.
    File { path: PathBuf },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParams {
    /// `param1 = amplitude a`, `param2 = λ` of `a·φ_λ`
    GroundstateScaled,
    /// `param1 = A`, `param2 = w` of the Gaussian
    Gaussian,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub params: SweepParams,
    pub param1: Vec<f64>,
    pub param2: Vec<f64>,
    /// Cells with both parameters this close to 1 are skipped.
    pub exclude_band: f64,
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            params: SweepParams::GroundstateScaled,
            param1: linspace(0.5, 1.5, 5),
            param2: linspace(0.5, 1.5, 5),
            exclude_band: 0.02,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MtScanConfig {
    pub widths: Vec<f64>,
    pub alpha_points: usize,
}

impl Default for MtScanConfig {
    fn default() -> Self {
        MtScanConfig {
            widths: vec![0.5, 1.0, 2.0],
            alpha_points: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "defaults::kind")]
    pub kind: ExperimentKind,
    pub nonlinearity: NonlinearitySpec,
    #[serde(rename = "N", default = "defaults::n")]
    pub n: usize,
    #[serde(rename = "R", default = "defaults::radius")]
    pub radius: f64,
    #[serde(default = "defaults::initial")]
    pub initial: InitialData,
    #[serde(default = "defaults::t_end")]
    pub t_end: f64,
    #[serde(default = "defaults::dt0")]
    pub dt0: f64,
    #[serde(default = "defaults::dt_min")]
    pub dt_min: f64,
    #[serde(default = "defaults::dt0")]
    pub dt_max: f64,
    #[serde(default = "defaults::record_stride")]
    pub record_stride: usize,
    #[serde(default = "defaults::grad_factor")]
    pub grad_factor: f64,
    #[serde(default = "defaults::floor_steps")]
    pub floor_steps: usize,
    /// Relative band `|S(u₀) − m| < near_threshold·m` left unclassified.
    #[serde(default = "defaults::near_threshold")]
    pub near_threshold: f64,
    #[serde(default = "defaults::pairs")]
    pub pairs: Vec<[f64; 2]>,
    /// `sigma2(u(t)) ≤ bound_factor·sigma2(u₀)` in the defocusing check.
    #[serde(default = "defaults::bound_factor")]
    pub bound_factor: f64,
    /// Steps between field snapshots of the `evolve` command; 0 disables.
    #[serde(default)]
    pub snapshot_stride: usize,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub mt_scan: MtScanConfig,
    #[serde(default = "defaults::output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

mod defaults {
    use super::*;

    pub fn kind() -> ExperimentKind {
        ExperimentKind::Classify
    }
    pub fn n() -> usize {
        1024
    }
    pub fn radius() -> f64 {
        12.0
    }
    pub fn initial() -> InitialData {
        InitialData::GroundstateScaled {
            lambda: 1.01,
            amplitude: 1.0,
        }
    }
    pub fn t_end() -> f64 {
        10.0
    }
    pub fn dt0() -> f64 {
        1e-3
    }
    pub fn dt_min() -> f64 {
        1e-6
    }
    pub fn record_stride() -> usize {
        10
    }
    pub fn grad_factor() -> f64 {
        1e3
    }
    pub fn floor_steps() -> usize {
        100
    }
    pub fn near_threshold() -> f64 {
        1e-3
    }
    pub fn pairs() -> Vec<[f64; 2]> {
        vec![[1.0, -1.0], [1.0, 0.0]]
    }
    pub fn bound_factor() -> f64 {
        10.0
    }
    pub fn output_dir() -> PathBuf {
        PathBuf::from("out")
    }
}

impl ExperimentConfig {
    /// Config with every field at its default.
    pub fn with_spec(nonlinearity: NonlinearitySpec) -> Self {
        ExperimentConfig {
            kind: defaults::kind(),
            nonlinearity,
            n: defaults::n(),
            radius: defaults::radius(),
            initial: defaults::initial(),
            t_end: defaults::t_end(),
            dt0: defaults::dt0(),
            dt_min: defaults::dt_min(),
            dt_max: defaults::dt0(),
            record_stride: defaults::record_stride(),
            grad_factor: defaults::grad_factor(),
            floor_steps: defaults::floor_steps(),
            near_threshold: defaults::near_threshold(),
            pairs: defaults::pairs(),
            bound_factor: defaults::bound_factor(),
            snapshot_stride: 0,
            sweep: SweepConfig::default(),
            mt_scan: MtScanConfig::default(),
            output_dir: defaults::output_dir(),
            seed: 0,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config; a relative `output_dir` and initial-data `path` are
    /// taken relative to the config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: ExperimentConfig = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.message().to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        if let InitialData::File { path: p } = &mut cfg.initial {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.nonlinearity
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.n < crate::grid::MIN_CELLS || !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::Config(format!(
                "invalid grid N = {}, R = {}",
                self.n, self.radius
            )));
        }
        self.evolve_params().validate()?;
        let positive = [self.near_threshold, self.bound_factor];
        if positive.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(Error::Config(
                "near_threshold and bound_factor must be positive".into(),
            ));
        }
        match &self.initial {
            InitialData::Gaussian { amplitude, width } => {
                if !(*amplitude > 0.0 && *width > 0.0) {
                    return Err(Error::Config(
                        "gaussian amplitude and width must be positive".into(),
                    ));
                }
            }
            InitialData::GroundstateScaled { lambda, amplitude } => {
                if !(0.25..=4.0).contains(lambda) || !(*amplitude > 0.0) {
                    return Err(Error::Config(format!(
                        "groundstate_scaled needs lambda in [0.25, 4] and amplitude > 0, got {lambda}, {amplitude}"
                    )));
                }
            }
            InitialData::File { .. } => {}
        }
        if self.pairs.is_empty() {
            return Err(Error::Config(
                "at least one (alpha, beta) pair is required".into(),
            ));
        }
        for &[alpha, beta] in &self.pairs {
            let admissible = (alpha > 0.0 && beta >= 0.0) || (alpha == 1.0 && beta == -1.0);
            if !admissible {
                return Err(Error::Config(format!(
                    "pair ({alpha}, {beta}) is not admissible"
                )));
            }
        }
        let sweep_ok = self
            .sweep
            .param1
            .iter()
            .chain(&self.sweep.param2)
            .all(|x| *x > 0.0);
        if !sweep_ok || self.sweep.exclude_band < 0.0 {
            return Err(Error::Config("sweep parameters must be positive".into()));
        }
        if self.mt_scan.widths.iter().any(|w| !(*w > 0.0)) || self.mt_scan.alpha_points == 0 {
            return Err(Error::Config(
                "mt_scan needs positive widths and alpha_points".into(),
            ));
        }
        Ok(())
    }

    pub fn evolve_params(&self) -> EvolveParams {
        EvolveParams {
            t_end: self.t_end,
            dt0: self.dt0,
            dt_min: self.dt_min,
            dt_max: self.dt_max,
            record_stride: self.record_stride,
            grad_factor: self.grad_factor,
            floor_steps: self.floor_steps,
        }
    }

    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.pairs.iter().map(|p| (p[0], p[1])).collect()
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Creates the output directory and writes the resolved config into it.
    pub fn write_resolved(&self) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.output_dir).map_err(|e| Error::io(&self.output_dir, e))?;
        let path = self.output_dir.join("config.resolved.toml");
        std::fs::write(&path, self.to_toml()?).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"nonlinearity = {family = "exp_truncated", K = 2, mu = 0.5, epsilon = 1}"#,
        )
        .unwrap();
        assert_eq!(cfg.n, 1024);
        assert_eq!(cfg.radius, 12.0);
        assert_eq!(cfg.kind, ExperimentKind::Classify);
        assert_eq!(cfg.sweep.param1.len(), 5);
    }

    #[test]
    fn resolved_config_round_trips() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
kind = "sweep"
nonlinearity = {family = "monomial", p = 3.0, mu = 0.5, epsilon = 1}
N = 256
initial = {family = "gaussian", amplitude = 1.5, width = 0.8}
"#,
        )
        .unwrap();
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            r#"nonlinearity = {family = "exp_truncated", K = 1, mu = 0.5, epsilon = 1}"#,
            r#"nonlinearity = {family = "exp_truncated", K = 2, mu = 0.5, epsilon = 1}
N = 4"#,
            r#"nonlinearity = {family = "exp_truncated", K = 2, mu = 0.5, epsilon = 1}
dt0 = -1.0"#,
            r#"nonlinearity = {family = "exp_truncated", K = 2, mu = 0.5, epsilon = 1}
pairs = [[0.0, -1.0]]"#,
            r#"nonlinearity = {family = "exp_truncated", K = 2, mu = 0.5, epsilon = 1}
unknown_key = 3"#,
        ];
        for text in bad {
            assert!(
                matches!(ExperimentConfig::from_toml_str(text), Err(Error::Config(_))),
                "{text}"
            );
        }
    }
}
