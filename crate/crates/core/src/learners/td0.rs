use super::LearningRate;
use crate::error::{Error, Result};
use crate::features::FeatureBasis;
use crate::model::TransitionRecord;

/// `||theta||_2` above this is reported as divergence.
pub const DIVERGENCE_NORM: f64 = 1e8;

/// `theta <- theta - alpha * delta * phi`.
#[inline]
pub(crate) fn linear_update(theta: &mut [f64], phi: &[f64], delta: f64, alpha: f64) {
    let scale = alpha * delta;
    for (t, p) in theta.iter_mut().zip(phi) {
        *t -= scale * p;
    }
}

pub(crate) fn check_divergence(theta: &[f64], step: u64) -> Result<()> {
    let norm = crate::linalg::norm2(theta);
    if !norm.is_finite() || norm > DIVERGENCE_NORM {
        return Err(Error::Divergence { step, norm });
    }
    Ok(())
}

/// TD(0) with linear features:
/// `theta_{t+1} = theta_t - alpha_t Phi(S_t) [theta_t^T Phi(S_t) - C_t - beta theta_t^T Phi(S_{t+1})]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Td0 {
    theta: Vec<f64>,
    step: u64,
    schedule: LearningRate,
}

impl Td0 {
    pub fn new(dim: usize, schedule: LearningRate) -> Result<Self> {
        Self::with_theta(vec![0.0; dim], schedule)
    }

    pub fn with_theta(theta: Vec<f64>, schedule: LearningRate) -> Result<Self> {
        schedule.validate_polynomial("learner.schedule")?;
        Ok(Self {
            theta,
            step: 0,
            schedule,
        })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Number of updates applied.
    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn update(
        &mut self,
        rec: &TransitionRecord,
        basis: &FeatureBasis,
        beta: f64,
    ) -> Result<()> {
        self.step += 1;
        let alpha = self.schedule.alpha(self.step);
        let phi = basis.phi(rec.s);
        let delta = basis.value(&self.theta, rec.s)
            - rec.cost
            - beta * basis.value(&self.theta, rec.s_next);
        linear_update(&mut self.theta, phi, delta, alpha);
        check_divergence(&self.theta, self.step)
    }

    /// Pure form of [`Td0::update`].
    pub fn step(&self, rec: &TransitionRecord, basis: &FeatureBasis, beta: f64) -> Result<Self> {
        let mut next = self.clone();
        next.update(rec, basis, beta)?;
        Ok(next)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(s: usize, s_next: usize, cost: f64) -> TransitionRecord {
        TransitionRecord {
            s_next,
            s,
            cost,
            action: 0,
        }
    }

    #[test]
    fn first_step_is_alpha_phi_cost() {
        let basis = FeatureBasis::identity(3);
        let sched = LearningRate::Polynomial {
            a: 0.1,
            t0: 0.0,
            rho: 1.0,
        };
        let s = Td0::new(3, sched).unwrap();
        let next = s.step(&rec(0, 1, 1.0), &basis, 0.9).unwrap();
        assert_eq!(next.theta(), &[0.1, 0.0, 0.0]);
        let zero = s.step(&rec(0, 1, 0.0), &basis, 0.9).unwrap();
        assert_eq!(zero.theta(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn divergence_is_an_error() {
        let basis = FeatureBasis::constant(1);
        let sched = LearningRate::Polynomial {
            a: 1.0,
            t0: 0.0,
            rho: 1.0,
        };
        let s = Td0::with_theta(vec![3e8], sched).unwrap();
        assert!(matches!(
            s.step(&rec(0, 0, 0.0), &basis, 0.5),
            Err(Error::Divergence { step: 1, .. })
        ));
    }
}
