use rand::Rng;

use super::spec::ROW_TOL;
use crate::error::{Error, Result};
use crate::linalg::check_distribution;
use crate::rng::sample_index;

/// A stationary randomized policy on encoded windows, `gamma[h][u]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMemoryPolicy {
    num_windows: usize,
    num_actions: usize,
    probs: Vec<f64>,
    /// Minorization data `(eps, base)`: every row dominates `eps * base`.
    mixing: Option<(f64, Vec<f64>)>,
}

impl FiniteMemoryPolicy {
    pub fn uniform(num_windows: usize, num_actions: usize) -> Self {
        Self {
            num_windows,
            num_actions,
            probs: vec![1.0 / num_actions as f64; num_windows * num_actions],
            mixing: None,
        }
    }

    /// Every window uses the same action distribution.
    pub fn constant(num_windows: usize, dist: &[f64]) -> Result<Self> {
        check_distribution("policy", dist, ROW_TOL)?;
        Ok(Self {
            num_windows,
            num_actions: dist.len(),
            probs: dist.repeat(num_windows),
            mixing: None,
        })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let num_windows = rows.len();
        let num_actions = rows.first().map_or(0, Vec::len);
        if num_windows == 0 || num_actions == 0 {
            return Err(Error::validation("policy", "empty policy table"));
        }
        let mut probs = Vec::with_capacity(num_windows * num_actions);
        for (h, row) in rows.iter().enumerate() {
            if row.len() != num_actions {
                return Err(Error::validation(
                    format!("policy[{h}]"),
                    format!("expected {num_actions} entries, found {}", row.len()),
                ));
            }
            check_distribution(&format!("policy[{h}]"), row, ROW_TOL)?;
            probs.extend_from_slice(row);
        }
        Ok(Self {
            num_windows,
            num_actions,
            probs,
            mixing: None,
        })
    }

    /// The deterministic policy `h -> actions[h]`.
    pub fn deterministic(actions: &[usize], num_actions: usize) -> Result<Self> {
        let mut probs = vec![0.0; actions.len() * num_actions];
        for (h, &u) in actions.iter().enumerate() {
            if u >= num_actions {
                return Err(Error::validation(
                    format!("policy[{h}]"),
                    format!("action {u} out of range"),
                ));
            }
            probs[h * num_actions + u] = 1.0;
        }
        Ok(Self {
            num_windows: actions.len(),
            num_actions,
            probs,
            mixing: None,
        })
    }

    /// `(1 - eps) * self + eps * base`, recording the minorization.
    pub fn mixed(&self, eps: f64, base: &[f64]) -> Result<Self> {
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::validation(
                "policy.epsilon",
                format!("{eps} not in [0, 1]"),
            ));
        }
        check_distribution("policy.base", base, ROW_TOL)?;
        if base.len() != self.num_actions {
            return Err(Error::validation(
                "policy.base",
                "length differs from action count",
            ));
        }
        let probs = self
            .probs
            .chunks(self.num_actions)
            .flat_map(|row| row.iter().zip(base).map(|(p, b)| (1.0 - eps) * p + eps * b))
            .collect();
        Ok(Self {
            num_windows: self.num_windows,
            num_actions: self.num_actions,
            probs,
            mixing: (eps > 0.0).then(|| (eps, base.to_vec())),
        })
    }

    /// The policy `h -> self[map[h]]` on another window space.
    pub fn compose(&self, map: &[usize]) -> Result<Self> {
        if let Some(&bad) = map.iter().find(|&&g| g >= self.num_windows) {
            return Err(Error::validation(
                "policy",
                format!("window {bad} out of range"),
            ));
        }
        Ok(Self {
            num_windows: map.len(),
            num_actions: self.num_actions,
            probs: map
                .iter()
                .flat_map(|&g| self.probs(g).iter().copied())
                .collect(),
            mixing: self.mixing.clone(),
        })
    }

    pub fn num_windows(&self) -> usize {
        self.num_windows
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    #[inline]
    pub fn probs(&self, h: usize) -> &[f64] {
        &self.probs[h * self.num_actions..(h + 1) * self.num_actions]
    }

    #[inline]
    pub fn prob(&self, h: usize, u: usize) -> f64 {
        self.probs[h * self.num_actions + u]
    }

    pub fn sample<R: Rng + ?Sized>(&self, h: usize, rng: &mut R) -> usize {
        sample_index(rng, self.probs(h))
    }

    pub fn mixing(&self) -> Option<(f64, &[f64])> {
        self.mixing.as_ref().map(|(e, b)| (*e, b.as_slice()))
    }

    /// The action of a deterministic row, if the row is a point mass.
    pub fn deterministic_action(&self, h: usize) -> Option<usize> {
        let row = self.probs(h);
        row.iter().position(|&p| p == 1.0)
    }

    /// Checks `gamma[h][u] >= eps * base[u]` when a minorization is recorded.
    pub fn check_minorization(&self) -> Result<()> {
        if let Some((eps, base)) = &self.mixing {
            for h in 0..self.num_windows {
                for (u, b) in base.iter().enumerate() {
                    if self.prob(h, u) < eps * b - 1e-15 {
                        return Err(Error::validation(
                            format!("policy[{h}][{u}]"),
                            "row does not dominate eps * base",
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_are_validated() {
        assert!(FiniteMemoryPolicy::from_rows(vec![vec![0.5, 0.6]]).is_err());
        assert!(FiniteMemoryPolicy::deterministic(&[0, 2], 2).is_err());
        let p = FiniteMemoryPolicy::deterministic(&[1, 0], 2).unwrap();
        assert_eq!(p.probs(0), &[0.0, 1.0]);
        assert_eq!(p.deterministic_action(1), Some(0));
    }

    #[test]
    fn mixing_dominates_base() {
        let p = FiniteMemoryPolicy::deterministic(&[1, 0, 1], 2).unwrap();
        let m = p.mixed(0.2, &[0.5, 0.5]).unwrap();
        m.check_minorization().unwrap();
        assert!((m.prob(0, 0) - 0.1).abs() < 1e-15);
        assert!((m.prob(0, 1) - 0.9).abs() < 1e-15);
        assert_eq!(m.mixing().unwrap().0, 0.2);
    }
}
