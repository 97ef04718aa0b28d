//! Experiment configuration: noise parameters plus sweep fields, read from
//! a JSON document and overridden by command-line flags.

use std::path::Path;

use dyncirc::noise::{NoiseShape, CROSSOVER_N_MAX};
use dyncirc::{Family, FeedMode, NoiseParams};
use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult};

/// How sweeps execute the dynamic circuits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    #[default]
    FeedForward,
    /// Corrections tracked as a Pauli frame; the budget drops the μ idle term.
    PostProcess,
    /// All rates forced to zero.
    Noiseless,
}

impl RunMode {
    pub fn feed_mode(self) -> FeedMode {
        match self {
            RunMode::PostProcess => FeedMode::PostProcess,
            _ => FeedMode::FeedForward,
        }
    }
}

/// Grid for the crossover map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrossoverGrid {
    /// Idle rate held fixed across the grid (μ comes from the noise params).
    pub lambda_idle: f64,
    pub dynamic: Family,
    pub unitary: Vec<Family>,
    pub lambda_cnot: Vec<f64>,
    pub lambda_meas: Vec<f64>,
    pub n_max: usize,
}

impl Default for CrossoverGrid {
    fn default() -> Self {
        Self {
            lambda_idle: 0.001,
            dynamic: Family::GhzDynamic,
            unitary: vec![Family::GhzUnitary],
            lambda_cnot: vec![0.001, 0.002, 0.005, 0.01, 0.02],
            lambda_meas: (0..=20).map(|k| k as f64 * 0.001).collect(),
            n_max: CROSSOVER_N_MAX,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub params: NoiseParams,
    #[serde(flatten)]
    pub shape: NoiseShape,
    /// Families to sweep; each command has its own default.
    pub families: Option<Vec<Family>>,
    pub n_min: Option<usize>,
    pub n_max: Option<usize>,
    pub step: Option<usize>,
    pub mode: RunMode,
    pub shots: u64,
    pub m_samples: usize,
    pub seed: u64,
    pub crossover: CrossoverGrid,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            params: NoiseParams::new(0.03, 0.02, 0.03, 3.65),
            shape: NoiseShape::default(),
            families: None,
            n_min: None,
            n_max: None,
            step: None,
            mode: RunMode::FeedForward,
            shots: 100,
            m_samples: 200,
            seed: 0,
            crossover: CrossoverGrid::default(),
        }
    }
}

/// Overrides from the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub shots: Option<u64>,
    pub m_samples: Option<usize>,
}

/// A sweep with every optional field filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedSweep {
    pub families: Vec<Family>,
    pub sizes: Vec<usize>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(s) = o.shots {
            self.shots = s;
        }
        if let Some(m) = o.m_samples {
            self.m_samples = m;
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        self.params.validate()?;
        if self.shots == 0 {
            return Err(CliError::Config("shots must be ≥ 1".into()));
        }
        if self.m_samples == 0 {
            return Err(CliError::Config("m_samples must be ≥ 1".into()));
        }
        if self.step == Some(0) {
            return Err(CliError::Config("step must be ≥ 1".into()));
        }
        if let (Some(a), Some(b)) = (self.n_min, self.n_max) {
            if a > b {
                return Err(CliError::Config(format!("empty size range {a}..={b}")));
            }
        }
        if self.families.as_ref().is_some_and(|f| f.is_empty()) {
            return Err(CliError::Config("families must not be empty".into()));
        }
        Ok(())
    }

    /// Parameters the simulation runs with (zero rates when noiseless).
    pub fn sim_params(&self) -> NoiseParams {
        match self.mode {
            RunMode::Noiseless => NoiseParams::noiseless(self.params.mu),
            _ => self.params.clone(),
        }
    }

    /// Parameters the model bound uses: post-processing has no wait for
    /// feed-forward, so the μ idle contribution vanishes.
    pub fn model_params(&self) -> NoiseParams {
        let mut p = self.sim_params();
        if self.mode == RunMode::PostProcess {
            p.mu = 0.0;
        }
        p
    }

    pub fn resolve(&self, families: &[Family], n_min: usize, n_max: usize, step: usize) -> ResolvedSweep {
        let (a, b, s) = (
            self.n_min.unwrap_or(n_min),
            self.n_max.unwrap_or(n_max),
            self.step.unwrap_or(step),
        );
        ResolvedSweep {
            families: self.families.clone().unwrap_or_else(|| families.to_vec()),
            sizes: (a..=b).step_by(s.max(1)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_json_fields() {
        let c: ExperimentConfig = serde_json::from_str(
            r#"{"lambda_idle":0.001,"lambda_cnot":0.01,"lambda_meas":0.003,"mu":2.0,
                "families":["cnot_dynamic","cnot_Ia"],"n_min":2,"n_max":6,"mode":"post_process",
                "cnot_pauli":"ZZ","meas_pauli":"Z"}"#,
        )
        .unwrap();
        assert_eq!(c.params, NoiseParams::new(0.001, 0.01, 0.003, 2.0));
        assert_eq!(c.shape.cnot_pauli.to_string(), "ZZ");
        assert_eq!(c.mode, RunMode::PostProcess);
        assert_eq!(c.model_params().mu, 0.0);
        assert_eq!(c.shots, 100);
        let r = c.resolve(&[Family::GhzDynamic], 1, 3, 1);
        assert_eq!(r.families, vec![Family::CnotDynamic, Family::CnotIa]);
        assert_eq!(r.sizes, vec![2, 3, 4, 5, 6]);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = ExperimentConfig::default();
        c.shots = 0;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.n_min = Some(5);
        c.n_max = Some(2);
        assert!(c.validate().is_err());
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"families":["cnot_III"]}"#).is_err());
        let mut c = ExperimentConfig::default();
        c.params.lambda_cnot = -1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn noiseless_mode_zeroes_rates() {
        let mut c = ExperimentConfig::default();
        c.mode = RunMode::Noiseless;
        assert_eq!(c.sim_params(), NoiseParams::noiseless(3.65));
    }
}
