use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::LearningRate;

/// An experiment document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Model file, relative to the config file's directory.
    pub model: PathBuf,
    /// Window memory `N`; defaults to the model file's value.
    #[serde(default)]
    pub memory: Option<usize>,
    pub beta: f64,
    pub n_steps: u64,
    /// Checkpoint steps; defaults to a decade grid up to `n_steps`.
    #[serde(default)]
    pub checkpoints: Option<Vec<u64>>,
    pub seeds: Vec<u64>,
    /// Action distribution for the first `N` steps; defaults to uniform.
    #[serde(default)]
    pub burn_in: Option<Vec<f64>>,
    #[serde(default)]
    pub policy: PolicyConfig,
    pub basis: BasisConfig,
    pub learner: LearnerConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
}

/// The time-invariant exploration (or evaluated) policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicyConfig {
    #[default]
    Uniform,
    /// The same action distribution in every window.
    Constant { probs: Vec<f64> },
    /// One action distribution per encoded window.
    Table { rows: Vec<Vec<f64>> },
    /// `(1 - epsilon)` on a fixed action per window, `epsilon` spread
    /// uniformly.
    Deterministic { actions: Vec<usize>, epsilon: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BasisConfig {
    /// Indicator of each window.
    Identity,
    /// Indicators of an explicit partition of the windows.
    Quantizer { bins: Vec<usize> },
    /// Windows binned by their observations relabelled through `obs_bins`;
    /// `keep_actions` also keeps the action block.
    Observations {
        obs_bins: Vec<usize>,
        #[serde(default)]
        keep_actions: bool,
    },
    /// Explicit feature vectors: one row per window for TD(0), one per
    /// window-action pair (`h * |U| + u`) for linear Q-learning.
    Table { rows: Vec<Vec<f64>> },
}

impl BasisConfig {
    pub fn is_quantizer(&self) -> bool {
        !matches!(self, BasisConfig::Table { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    Td0,
    LinearQ,
    TabularQ,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerConfig {
    pub kind: LearnerKind,
    /// Defaults to `1/(t+100)^0.75` for the linear learners and to
    /// `1/n` visit counts for tabular Q-learning.
    #[serde(default)]
    pub schedule: Option<LearningRate>,
    /// Initial iterate; zeros by default.
    #[serde(default)]
    pub init: Option<Vec<f64>>,
}

impl LearnerConfig {
    pub fn schedule(&self) -> LearningRate {
        self.schedule.unwrap_or(match self.kind {
            LearnerKind::TabularQ => LearningRate::VisitCount { offset: 0.0 },
            _ => LearningRate::default(),
        })
    }
}

/// Which oracle diagnostics and bounds to compute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    pub bounds: bool,
    pub filter_stability: bool,
    pub mixing: bool,
    pub mixing_k_max: usize,
    /// Filter-stability horizon; defaults to the certified-tail horizon.
    pub l_horizon: Option<usize>,
    pub grid_resolution: f64,
    pub grid_point_budget: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            bounds: true,
            filter_stability: true,
            mixing: true,
            mixing_k_max: 200,
            l_horizon: None,
            grid_resolution: 1e-3,
            grid_point_budget: 600_000,
        }
    }
}

impl ExperimentConfig {
    /// Reads and validates a config; the model path is resolved against the
    /// config's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&src, &path.display().to_string())?;
        if cfg.model.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.model = dir.join(&cfg.model);
            }
        }
        Ok(cfg)
    }

    pub fn parse(src: &str, origin: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(src).map_err(|e| {
            let line = e
                .span()
                .map(|s| src[..s.start.min(src.len())].matches('\n').count() + 1)
                .unwrap_or(0);
            Error::validation(
                format!("{origin}:{line}"),
                e.message().trim_end().to_string(),
            )
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Field checks that need no model.
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::validation(
                "beta",
                format!("{} not in (0, 1)", self.beta),
            ));
        }
        if self.n_steps == 0 {
            return Err(Error::validation("n_steps", "must be at least 1"));
        }
        if self.seeds.is_empty() {
            return Err(Error::validation("seeds", "need at least one seed"));
        }
        let distinct: BTreeSet<_> = self.seeds.iter().collect();
        if distinct.len() != self.seeds.len() {
            return Err(Error::validation("seeds", "seeds must be distinct"));
        }
        if let Some(cp) = &self.checkpoints {
            if cp.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::validation(
                    "checkpoints",
                    "must be strictly increasing",
                ));
            }
            if cp.first() == Some(&0) || cp.last().is_some_and(|&c| c > self.n_steps) {
                return Err(Error::validation(
                    "checkpoints",
                    format!("must lie in 1..={}", self.n_steps),
                ));
            }
        }
        let schedule = self.learner.schedule();
        match self.learner.kind {
            LearnerKind::Td0 | LearnerKind::LinearQ => {
                schedule.validate_polynomial("learner.schedule")?
            }
            LearnerKind::TabularQ => {
                schedule.validate_visit_count("learner.schedule")?;
                if !self.basis.is_quantizer() {
                    return Err(Error::validation(
                        "basis.kind",
                        "tabular Q-learning needs a quantizer basis",
                    ));
                }
            }
        }
        if let PolicyConfig::Deterministic { epsilon, .. } = self.policy {
            if !(0.0..=1.0).contains(&epsilon) {
                return Err(Error::validation(
                    "policy.epsilon",
                    format!("{epsilon} not in [0, 1]"),
                ));
            }
        }
        let o = &self.oracle;
        if !(o.grid_resolution > 0.0 && o.grid_resolution <= 1.0) {
            return Err(Error::validation(
                "oracle.grid_resolution",
                format!("{} not in (0, 1]", o.grid_resolution),
            ));
        }
        if o.mixing_k_max == 0 {
            return Err(Error::validation(
                "oracle.mixing_k_max",
                "must be at least 1",
            ));
        }
        Ok(())
    }

    /// The explicit checkpoints or the decade grid `10, 100, ...` below
    /// `n_steps`.
    pub fn checkpoint_grid(&self) -> Vec<u64> {
        if let Some(cp) = &self.checkpoints {
            return cp.clone();
        }
        let mut out = Vec::new();
        let mut c = 10u64;
        while c < self.n_steps {
            out.push(c);
            match c.checked_mul(10) {
                Some(n) => c = n,
                None => break,
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
model = "m.toml"
beta = 0.8
n_steps = 1000
seeds = [1, 2]

[basis]
kind = "identity"

[learner]
kind = "td0"
"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = ExperimentConfig::parse(BASE, "c.toml").unwrap();
        assert_eq!(cfg.policy, PolicyConfig::Uniform);
        assert_eq!(cfg.learner.schedule(), LearningRate::default());
        assert_eq!(cfg.checkpoint_grid(), vec![10, 100]);
        assert!(cfg.oracle.bounds);
    }

    #[test]
    fn zero_steps_names_the_field() {
        let src = BASE.replace("n_steps = 1000", "n_steps = 0");
        match ExperimentConfig::parse(&src, "c.toml") {
            Err(Error::Validation { path, .. }) => assert_eq!(path, "n_steps"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_line() {
        let src = BASE.replace("beta = 0.8", "beta = 0.8\nbetta = 0.9");
        match ExperimentConfig::parse(&src, "c.toml") {
            Err(Error::Validation { path, message }) => {
                assert_eq!(path, "c.toml:4");
                assert!(message.contains("betta"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_seeds_are_rejected() {
        let src = BASE.replace("seeds = [1, 2]", "seeds = [3, 3]");
        assert!(ExperimentConfig::parse(&src, "c.toml").is_err());
    }

    #[test]
    fn td0_rejects_a_non_summable_schedule() {
        let src =
            format!("{BASE}schedule = {{ kind = \"polynomial\", a = 1.0, t0 = 1.0, rho = 0.5 }}\n");
        match ExperimentConfig::parse(&src, "c.toml") {
            Err(Error::Validation { path, .. }) => assert!(path.starts_with("learner.schedule")),
            other => panic!("{other:?}"),
        }
    }
}
