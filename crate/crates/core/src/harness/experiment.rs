use super::config::{BasisConfig, ExperimentConfig, LearnerKind, PolicyConfig};
use crate::error::{Error, Result};
use crate::features::{FeatureBasis, Quantizer};
use crate::model::{FiniteMemoryPolicy, ModelFile, PomdpSpec, WindowSpace};

/// Features on the window space.
#[derive(Debug, Clone, PartialEq)]
pub enum Features {
    /// A partition of the windows; `obs_bins` is set when the partition
    /// relabels observations and keeps the action block, i.e. it is the
    /// window space of a model with merged observations.
    Quantized {
        quantizer: Quantizer,
        obs_bins: Option<Vec<usize>>,
    },
    /// Explicit feature vectors per window or per window-action pair.
    Table(FeatureBasis),
}

/// A config resolved against its model.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub model: ModelFile,
    pub memory: usize,
    pub windows: WindowSpace,
    pub burn_in: Vec<f64>,
    pub policy: FiniteMemoryPolicy,
    pub features: Features,
}

impl Experiment {
    /// Loads the model named by the config and builds every table.
    pub fn load(config: ExperimentConfig) -> Result<Self> {
        let model = ModelFile::load(&config.model)?;
        Self::new(config, model)
    }

    pub fn new(config: ExperimentConfig, model: ModelFile) -> Result<Self> {
        config.validate()?;
        let spec = &model.spec;
        let memory = config.memory.unwrap_or(model.memory);
        let windows = WindowSpace::for_spec(spec, memory)?;
        let (nh, nu) = (windows.len(), spec.num_actions());
        let burn_in = match &config.burn_in {
            Some(b) if b.len() != nu => {
                return Err(Error::validation(
                    "burn_in",
                    format!("expected {nu} entries, found {}", b.len()),
                ))
            }
            Some(b) => {
                crate::linalg::check_distribution("burn_in", b, crate::model::ROW_TOL)?;
                b.clone()
            }
            None => vec![1.0 / nu as f64; nu],
        };
        let policy = build_policy(&config.policy, nh, nu)?;
        let features = build_features(&config.basis, config.learner.kind, &windows, spec)?;
        let exp = Self {
            config,
            model,
            memory,
            windows,
            burn_in,
            policy,
            features,
        };
        if let Some(init) = &exp.config.learner.init {
            let len = exp.iterate_len();
            if init.len() != len {
                return Err(Error::validation(
                    "learner.init",
                    format!("expected {len} entries, found {}", init.len()),
                ));
            }
        }
        Ok(exp)
    }

    pub fn spec(&self) -> &PomdpSpec {
        &self.model.spec
    }

    pub fn beta(&self) -> f64 {
        self.config.beta
    }

    pub fn learner(&self) -> LearnerKind {
        self.config.learner.kind
    }

    /// State basis for TD(0).
    pub fn state_basis(&self) -> FeatureBasis {
        match &self.features {
            Features::Quantized { quantizer, .. } => quantizer.basis(),
            Features::Table(b) => b.clone(),
        }
    }

    /// State-action basis for linear Q-learning.
    pub fn state_action_basis(&self) -> FeatureBasis {
        match &self.features {
            Features::Quantized { quantizer, .. } => {
                quantizer.state_action_basis(self.spec().num_actions())
            }
            Features::Table(b) => b.clone(),
        }
    }

    pub fn quantizer(&self) -> Option<&Quantizer> {
        match &self.features {
            Features::Quantized { quantizer, .. } => Some(quantizer),
            Features::Table(_) => None,
        }
    }

    /// Length of the learner's iterate.
    pub fn iterate_len(&self) -> usize {
        match self.learner() {
            LearnerKind::Td0 => self.state_basis().dim(),
            LearnerKind::LinearQ => self.state_action_basis().dim(),
            LearnerKind::TabularQ => {
                self.quantizer().map_or(0, Quantizer::num_bins) * self.spec().num_actions()
            }
        }
    }
}

fn build_policy(cfg: &PolicyConfig, nh: usize, nu: usize) -> Result<FiniteMemoryPolicy> {
    match cfg {
        PolicyConfig::Uniform => Ok(FiniteMemoryPolicy::uniform(nh, nu)),
        PolicyConfig::Constant { probs } => {
            if probs.len() != nu {
                return Err(Error::validation(
                    "policy.probs",
                    format!("expected {nu} entries, found {}", probs.len()),
                ));
            }
            FiniteMemoryPolicy::constant(nh, probs)
        }
        PolicyConfig::Table { rows } => {
            if rows.len() != nh {
                return Err(Error::validation(
                    "policy.rows",
                    format!("expected {nh} rows (one per window), found {}", rows.len()),
                ));
            }
            if let Some((h, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != nu) {
                return Err(Error::validation(
                    format!("policy.rows[{h}]"),
                    format!("expected {nu} entries, found {}", r.len()),
                ));
            }
            FiniteMemoryPolicy::from_rows(rows.clone()).map_err(|e| prefix(e, "policy.rows"))
        }
        PolicyConfig::Deterministic { actions, epsilon } => {
            if actions.len() != nh {
                return Err(Error::validation(
                    "policy.actions",
                    format!(
                        "expected {nh} entries (one per window), found {}",
                        actions.len()
                    ),
                ));
            }
            FiniteMemoryPolicy::deterministic(actions, nu)
                .map_err(|e| prefix(e, "policy.actions"))?
                .mixed(*epsilon, &vec![1.0 / nu as f64; nu])
        }
    }
}

fn build_features(
    cfg: &BasisConfig,
    learner: LearnerKind,
    windows: &WindowSpace,
    spec: &PomdpSpec,
) -> Result<Features> {
    let nh = windows.len();
    match cfg {
        BasisConfig::Identity => Ok(Features::Quantized {
            quantizer: Quantizer::identity(nh),
            obs_bins: Some((0..spec.num_obs()).collect()),
        }),
        BasisConfig::Quantizer { bins } => {
            if bins.len() != nh {
                return Err(Error::validation(
                    "basis.bins",
                    format!(
                        "expected {nh} entries (one per window), found {}",
                        bins.len()
                    ),
                ));
            }
            Ok(Features::Quantized {
                quantizer: Quantizer::new(bins.clone()).map_err(|e| prefix(e, "basis.bins"))?,
                obs_bins: None,
            })
        }
        BasisConfig::Observations {
            obs_bins,
            keep_actions,
        } => {
            let quantizer = if *keep_actions {
                let (_, map) = windows
                    .map_observations(obs_bins)
                    .map_err(|e| prefix(e, "basis.obs_bins"))?;
                Quantizer::new(map)?
            } else {
                Quantizer::by_observations(windows, obs_bins)
                    .map_err(|e| prefix(e, "basis.obs_bins"))?
            };
            Ok(Features::Quantized {
                quantizer,
                obs_bins: keep_actions.then(|| obs_bins.clone()),
            })
        }
        BasisConfig::Table { rows } => {
            let expected = match learner {
                LearnerKind::LinearQ => nh * spec.num_actions(),
                _ => nh,
            };
            if rows.len() != expected {
                return Err(Error::validation(
                    "basis.rows",
                    format!("expected {expected} rows, found {}", rows.len()),
                ));
            }
            Ok(Features::Table(
                FeatureBasis::from_rows(rows.clone()).map_err(|e| prefix(e, "basis.rows"))?,
            ))
        }
    }
}

/// Re-roots a validation path under a config field.
fn prefix(e: Error, field: &str) -> Error {
    match e {
        Error::Validation { path, message } if !path.starts_with(field) => Error::Validation {
            path: field.to_string(),
            message: format!("{path}: {message}"),
        },
        other => other,
    }
}
