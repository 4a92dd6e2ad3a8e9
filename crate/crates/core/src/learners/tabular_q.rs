use super::LearningRate;
use crate::error::{Error, Result};
use crate::features::Quantizer;
use crate::model::TransitionRecord;

/// Tabular Q-learning on quantized states with per-cell visit-count rates.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularQ {
    q: Vec<f64>,
    visits: Vec<u64>,
    num_actions: usize,
    schedule: LearningRate,
}

impl TabularQ {
    pub fn new(num_bins: usize, num_actions: usize, schedule: LearningRate) -> Result<Self> {
        Self::with_values(vec![0.0; num_bins * num_actions], num_actions, schedule)
    }

    pub fn with_values(q: Vec<f64>, num_actions: usize, schedule: LearningRate) -> Result<Self> {
        schedule.validate_visit_count("learner.schedule")?;
        if num_actions == 0 || !q.len().is_multiple_of(num_actions) {
            return Err(Error::validation(
                "q",
                "table size is not a multiple of the action count",
            ));
        }
        Ok(Self {
            visits: vec![0; q.len()],
            q,
            num_actions,
            schedule,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.q
    }

    pub fn visits(&self) -> &[u64] {
        &self.visits
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    /// Cells never visited; they keep their initial value.
    pub fn starved(&self) -> Vec<(usize, usize)> {
        self.visits
            .iter()
            .enumerate()
            .filter(|(_, &n)| n == 0)
            .map(|(i, _)| (i / self.num_actions, i % self.num_actions))
            .collect()
    }

    /// Step size the next visit to `(bin, u)` would use.
    pub fn next_alpha(&self, bin: usize, u: usize) -> f64 {
        self.schedule
            .alpha(self.visits[bin * self.num_actions + u] + 1)
    }

    fn min_value(&self, bin: usize) -> f64 {
        self.q[bin * self.num_actions..(bin + 1) * self.num_actions]
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Updates the single cell `(q(S_t), U_t)`.
    pub fn update(&mut self, rec: &TransitionRecord, quantizer: &Quantizer, beta: f64) {
        let cell = quantizer.bin(rec.s) * self.num_actions + rec.action;
        let target = rec.cost + beta * self.min_value(quantizer.bin(rec.s_next));
        self.visits[cell] += 1;
        let alpha = self.schedule.alpha(self.visits[cell]);
        self.q[cell] -= alpha * (self.q[cell] - target);
    }

    pub fn step(&self, rec: &TransitionRecord, quantizer: &Quantizer, beta: f64) -> Self {
        let mut next = self.clone();
        next.update(rec, quantizer, beta);
        next
    }
}
