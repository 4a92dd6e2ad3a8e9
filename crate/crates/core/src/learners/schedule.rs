use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Step sizes. Steps are counted from 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LearningRate {
    /// `alpha_t = a / (t + t0)^rho`.
    Polynomial { a: f64, t0: f64, rho: f64 },
    /// Per cell, `alpha = 1 / (offset + n)` where `n` counts visits including
    /// the current one. `offset = 0` gives step 1 on the first visit.
    VisitCount {
        #[serde(default)]
        offset: f64,
    },
}

impl Default for LearningRate {
    fn default() -> Self {
        LearningRate::Polynomial {
            a: 1.0,
            t0: 100.0,
            rho: 0.75,
        }
    }
}

impl LearningRate {
    /// Checks `sum alpha_t = inf` and `sum alpha_t^2 < inf`, i.e.
    /// `rho in (0.5, 1]`, for the polynomial kind.
    pub fn validate_polynomial(&self, path: &str) -> Result<()> {
        match *self {
            LearningRate::Polynomial { a, t0, rho } => {
                if !(a > 0.0 && a.is_finite()) {
                    return Err(Error::validation(path, format!("a = {a} must be positive")));
                }
                if !(t0 >= 0.0 && t0.is_finite()) {
                    return Err(Error::validation(
                        path,
                        format!("t0 = {t0} must be non-negative"),
                    ));
                }
                if !(rho > 0.5 && rho <= 1.0) {
                    return Err(Error::validation(
                        path,
                        format!("rho = {rho} not in (0.5, 1]"),
                    ));
                }
                Ok(())
            }
            LearningRate::VisitCount { .. } => Err(Error::validation(
                path,
                "a polynomial schedule is required for this learner",
            )),
        }
    }

    pub fn validate_visit_count(&self, path: &str) -> Result<()> {
        match *self {
            LearningRate::VisitCount { offset } if offset >= 0.0 && offset.is_finite() => Ok(()),
            LearningRate::VisitCount { offset } => Err(Error::validation(
                path,
                format!("offset = {offset} must be non-negative"),
            )),
            _ => Err(Error::validation(
                path,
                "tabular Q-learning uses visit-count rates",
            )),
        }
    }

    /// Step size at global step `t >= 1` (polynomial) or for a cell on its
    /// `t`-th visit (visit count).
    #[inline]
    pub fn alpha(&self, t: u64) -> f64 {
        match *self {
            LearningRate::Polynomial { a, t0, rho } => a / (t as f64 + t0).powf(rho),
            LearningRate::VisitCount { offset } => 1.0 / (offset + t as f64),
        }
    }
}
