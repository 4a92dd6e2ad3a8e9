use crate::error::{Error, Result};
use crate::features::Quantizer;
use crate::model::{JointSpace, PomdpSpec};

/// What to do with state-action pairs of zero stationary mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coverage {
    /// Fail with [`Error::Coverage`].
    Require,
    /// Give them zero cost and a self-loop, and list them in `dropped`.
    DropAndReport,
}

/// The stationary regime MDP: state weights `pi(s)`, pair weights
/// `pi(s,u)`, conditional cost `c(s,u) = E[C | s,u]` and kernel
/// `eta(s1 | s,u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryMdp {
    num_states: usize,
    num_actions: usize,
    pub beta: f64,
    pub pi_state: Vec<f64>,
    pub pi_sa: Vec<f64>,
    pub cost: Vec<f64>,
    /// Sparse rows `eta(. | s,u)` indexed `s * |U| + u`.
    pub kernel: Vec<Vec<(usize, f64)>>,
    pub dropped: Vec<(usize, usize)>,
}

impl StationaryMdp {
    /// Builds an MDP from explicit tables. `kernel[s * |U| + u]` is the
    /// dense row `eta(. | s,u)`.
    pub fn from_tables(
        num_states: usize,
        num_actions: usize,
        beta: f64,
        pi_sa: Vec<f64>,
        cost: Vec<f64>,
        kernel: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n = num_states * num_actions;
        if pi_sa.len() != n || cost.len() != n || kernel.len() != n {
            return Err(Error::validation("mdp", "table sizes disagree"));
        }
        check_beta(beta)?;
        let mut sparse = Vec::with_capacity(n);
        for (i, row) in kernel.iter().enumerate() {
            if row.len() != num_states {
                return Err(Error::validation(
                    format!("kernel[{i}]"),
                    "wrong row length",
                ));
            }
            crate::linalg::check_distribution(&format!("kernel[{i}]"), row, 1e-10)?;
            sparse.push(
                row.iter()
                    .enumerate()
                    .filter(|(_, p)| **p > 0.0)
                    .map(|(j, p)| (j, *p))
                    .collect(),
            );
        }
        crate::linalg::check_distribution("pi_sa", &pi_sa, 1e-10)?;
        let pi_state = (0..num_states)
            .map(|s| pi_sa[s * num_actions..(s + 1) * num_actions].iter().sum())
            .collect();
        Ok(Self {
            num_states,
            num_actions,
            beta,
            pi_state,
            pi_sa,
            cost,
            kernel: sparse,
            dropped: Vec::new(),
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    #[inline]
    pub fn c(&self, s: usize, u: usize) -> f64 {
        self.cost[s * self.num_actions + u]
    }

    #[inline]
    pub fn eta(&self, s: usize, u: usize) -> &[(usize, f64)] {
        &self.kernel[s * self.num_actions + u]
    }

    /// `sum_{s1} eta(s1 | s,u) f(s1)`.
    #[inline]
    pub fn expect(&self, s: usize, u: usize, f: &[f64]) -> f64 {
        self.eta(s, u).iter().map(|&(j, p)| p * f[j]).sum()
    }

    pub fn cost_sup(&self) -> f64 {
        self.cost.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Largest `|pi(s1) - sum_{s,u} eta(s1|s,u) pi(s,u)|`.
    pub fn stationarity_error(&self) -> f64 {
        let mut push = vec![0.0; self.num_states];
        for (i, row) in self.kernel.iter().enumerate() {
            for &(j, p) in row {
                push[j] += p * self.pi_sa[i];
            }
        }
        push.iter()
            .zip(&self.pi_state)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// The stationary regime MDP of the quantized process `q(S_t)`.
    pub fn aggregate(&self, q: &Quantizer, coverage: Coverage) -> Result<Self> {
        if q.num_points() != self.num_states {
            return Err(Error::validation(
                "quantizer",
                format!(
                    "covers {} points, MDP has {} states",
                    q.num_points(),
                    self.num_states
                ),
            ));
        }
        let (nb, nu) = (q.num_bins(), self.num_actions);
        let mut pi_sa = vec![0.0; nb * nu];
        let mut cost = vec![0.0; nb * nu];
        let mut dense = vec![vec![0.0; nb]; nb * nu];
        for s in 0..self.num_states {
            let b = q.bin(s);
            for u in 0..nu {
                let w = self.pi_sa[s * nu + u];
                if w == 0.0 {
                    continue;
                }
                pi_sa[b * nu + u] += w;
                cost[b * nu + u] += w * self.c(s, u);
                for &(j, p) in self.eta(s, u) {
                    dense[b * nu + u][q.bin(j)] += w * p;
                }
            }
        }
        finish(nb, nu, self.beta, pi_sa, cost, dense, coverage)
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta < 1.0 {
        Ok(())
    } else {
        Err(Error::validation("beta", format!("{beta} not in (0, 1)")))
    }
}

/// Normalizes accumulated `pi(s,u)`-weighted sums into conditionals.
fn finish(
    ns: usize,
    nu: usize,
    beta: f64,
    pi_sa: Vec<f64>,
    mut cost: Vec<f64>,
    dense: Vec<Vec<f64>>,
    coverage: Coverage,
) -> Result<StationaryMdp> {
    let mut dropped = Vec::new();
    let mut kernel = Vec::with_capacity(ns * nu);
    for (i, row) in dense.into_iter().enumerate() {
        let w = pi_sa[i];
        if w > 0.0 {
            cost[i] /= w;
            let z: f64 = row.iter().sum();
            kernel.push(
                row.into_iter()
                    .enumerate()
                    .filter(|(_, p)| *p > 0.0)
                    .map(|(j, p)| (j, p / z))
                    .collect(),
            );
        } else {
            dropped.push((i / nu, i % nu));
            cost[i] = 0.0;
            kernel.push(vec![(i / nu, 1.0)]);
        }
    }
    if coverage == Coverage::Require && !dropped.is_empty() {
        return Err(Error::Coverage { pairs: dropped });
    }
    let pi_state = (0..ns)
        .map(|s| pi_sa[s * nu..(s + 1) * nu].iter().sum())
        .collect();
    Ok(StationaryMdp {
        num_states: ns,
        num_actions: nu,
        beta,
        pi_state,
        pi_sa,
        cost,
        kernel,
        dropped,
    })
}

/// Conditions the invariant law of the joint chain `(h, x, u)` on the
/// window: `c(s,u) = sum_x pi(x|s,u) c(x,u)` and `eta(s1|s,u)` the one-step
/// window transition probability.
pub fn build_stationary_mdp(
    spec: &PomdpSpec,
    js: &JointSpace,
    pi_joint: &[f64],
    beta: f64,
    coverage: Coverage,
) -> Result<StationaryMdp> {
    check_beta(beta)?;
    if pi_joint.len() != js.len() {
        return Err(Error::validation(
            "pi_joint",
            "length differs from the joint space",
        ));
    }
    let (nh, nx, nu) = (js.windows.len(), spec.num_states(), spec.num_actions());
    let mut pi_sa = vec![0.0; nh * nu];
    let mut cost = vec![0.0; nh * nu];
    let mut dense = vec![Vec::new(); nh * nu];
    for h in 0..nh {
        for u in 0..nu {
            let i = h * nu + u;
            for x in 0..nx {
                let w = pi_joint[js.index(h, x, u)];
                if w == 0.0 {
                    continue;
                }
                if dense[i].is_empty() {
                    dense[i] = vec![0.0; nh];
                }
                pi_sa[i] += w;
                cost[i] += w * spec.c(x, u);
                for x2 in 0..nx {
                    let t = spec.t(x, u, x2);
                    if t == 0.0 {
                        continue;
                    }
                    for y2 in 0..spec.num_obs() {
                        dense[i][js.windows.shift(h, y2, u)] += w * t * spec.o(x2, y2);
                    }
                }
            }
        }
    }
    finish(nh, nu, beta, pi_sa, cost, dense, coverage)
}

/// `P(x | h)` under the invariant law, indexed `h * |X| + x`. Windows of
/// zero mass get `fallback`.
pub fn stationary_posterior(js: &JointSpace, pi_joint: &[f64], fallback: &[f64]) -> Vec<f64> {
    let (nh, nx, nu) = (js.windows.len(), js.num_states, js.num_actions);
    let mut out = vec![0.0; nh * nx];
    for h in 0..nh {
        let row = &mut out[h * nx..(h + 1) * nx];
        for (x, r) in row.iter_mut().enumerate() {
            *r = (0..nu).map(|u| pi_joint[js.index(h, x, u)]).sum();
        }
        let z: f64 = row.iter().sum();
        if z > 0.0 {
            row.iter_mut().for_each(|r| *r /= z);
        } else {
            row.copy_from_slice(fallback);
        }
    }
    out
}

/// Marginal of the hidden state under the joint invariant law.
pub fn hidden_marginal(js: &JointSpace, pi_joint: &[f64]) -> Vec<f64> {
    let mut m = vec![0.0; js.num_states];
    for (i, &p) in pi_joint.iter().enumerate() {
        m[js.split(i).1] += p;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_joint_chain, FiniteMemoryPolicy};
    use crate::oracle::invariant_distribution;

    #[test]
    fn fully_observed_recovers_the_model() {
        let spec = PomdpSpec::new(
            vec![
                vec![vec![0.7, 0.3], vec![0.1, 0.9]],
                vec![vec![0.4, 0.6], vec![0.5, 0.5]],
            ],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![1.0, 2.0], vec![3.0, 4.0]],
            vec![0.5, 0.5],
        )
        .unwrap();
        let policy = FiniteMemoryPolicy::uniform(2, 2);
        let (js, chain) = build_joint_chain(&spec, &policy, 0).unwrap();
        let pi = invariant_distribution(&chain).unwrap().pi;
        let mdp = build_stationary_mdp(&spec, &js, &pi, 0.9, Coverage::Require).unwrap();
        for s in 0..2 {
            for u in 0..2 {
                assert!((mdp.c(s, u) - spec.c(s, u)).abs() < 1e-14);
                for &(j, p) in mdp.eta(s, u) {
                    assert!((p - spec.t(s, u, j)).abs() < 1e-14);
                }
            }
        }
        assert!(mdp.stationarity_error() < 1e-12);
    }

    #[test]
    fn one_state_model() {
        let spec = PomdpSpec::new(
            vec![vec![vec![1.0]]],
            vec![vec![1.0]],
            vec![vec![2.5]],
            vec![1.0],
        )
        .unwrap();
        let (js, chain) = build_joint_chain(&spec, &FiniteMemoryPolicy::uniform(1, 1), 1).unwrap();
        let pi = invariant_distribution(&chain).unwrap().pi;
        let mdp = build_stationary_mdp(&spec, &js, &pi, 0.5, Coverage::Require).unwrap();
        assert_eq!(mdp.eta(0, 0), &[(0, 1.0)]);
        assert_eq!(mdp.c(0, 0), 2.5);
    }

    #[test]
    fn starved_pairs() {
        let spec = PomdpSpec::new(
            vec![vec![vec![1.0], vec![1.0]]],
            vec![vec![1.0]],
            vec![vec![1.0, 0.0]],
            vec![1.0],
        )
        .unwrap();
        let policy = FiniteMemoryPolicy::constant(1, &[1.0, 0.0]).unwrap();
        let (js, chain) = build_joint_chain(&spec, &policy, 0).unwrap();
        let pi = invariant_distribution(&chain).unwrap().pi;
        assert!(matches!(
            build_stationary_mdp(&spec, &js, &pi, 0.5, Coverage::Require),
            Err(Error::Coverage { .. })
        ));
        let mdp = build_stationary_mdp(&spec, &js, &pi, 0.5, Coverage::DropAndReport).unwrap();
        assert_eq!(mdp.dropped, vec![(0, 1)]);
    }
}
