use super::td0::{check_divergence, linear_update};
use super::LearningRate;
use crate::error::{Error, Result};
use crate::features::FeatureBasis;
use crate::model::TransitionRecord;

/// Q-learning with linear features over state-action pairs `s * |U| + u`:
/// `theta_{t+1} = theta_t - alpha_t Phi(S_t,U_t) [theta_t^T Phi(S_t,U_t) - C_t - beta min_v theta_t^T Phi(S_{t+1},v)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearQ {
    theta: Vec<f64>,
    step: u64,
    schedule: LearningRate,
    num_actions: usize,
}

impl LinearQ {
    pub fn new(dim: usize, num_actions: usize, schedule: LearningRate) -> Result<Self> {
        Self::with_theta(vec![0.0; dim], num_actions, schedule)
    }

    pub fn with_theta(theta: Vec<f64>, num_actions: usize, schedule: LearningRate) -> Result<Self> {
        schedule.validate_polynomial("learner.schedule")?;
        if num_actions == 0 {
            return Err(Error::validation("num_actions", "must be positive"));
        }
        Ok(Self {
            theta,
            step: 0,
            schedule,
            num_actions,
        })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// `min_v theta^T Phi(s, v)`; ties resolve to the lowest action.
    fn min_value(&self, basis: &FeatureBasis, s: usize) -> f64 {
        let base = s * self.num_actions;
        let mut best = basis.value(&self.theta, base);
        for v in 1..self.num_actions {
            let q = basis.value(&self.theta, base + v);
            if q < best {
                best = q;
            }
        }
        best
    }

    pub fn update(
        &mut self,
        rec: &TransitionRecord,
        basis: &FeatureBasis,
        beta: f64,
    ) -> Result<()> {
        self.step += 1;
        let alpha = self.schedule.alpha(self.step);
        let i = rec.s * self.num_actions + rec.action;
        let delta =
            basis.value(&self.theta, i) - rec.cost - beta * self.min_value(basis, rec.s_next);
        linear_update(&mut self.theta, basis.phi(i), delta, alpha);
        check_divergence(&self.theta, self.step)
    }

    pub fn step(&self, rec: &TransitionRecord, basis: &FeatureBasis, beta: f64) -> Result<Self> {
        let mut next = self.clone();
        next.update(rec, basis, beta)?;
        Ok(next)
    }
}
