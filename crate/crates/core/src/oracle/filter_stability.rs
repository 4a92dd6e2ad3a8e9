use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::l1_distance;
use crate::model::{predict_into, FiniteMemoryPolicy, PomdpSpec, Predictor, WindowSpace};

/// Certified tail target for the discounted sum of `L_t`.
pub const TAIL_TARGET: f64 = 1e-6;

/// The posterior the true one is compared against.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferencePosterior {
    /// Bayes posterior of the window started from a fixed predictor.
    Prior(Vec<f64>),
    /// A table `P(x | h)` indexed `h * |X| + x`, usually the conditional law
    /// under the invariant distribution of the joint chain.
    Stationary(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterStabilityOptions {
    pub memory: usize,
    pub beta: f64,
    /// Defaults to the smallest `T` with `2 beta^T / (1 - beta) < 1e-6`.
    pub t_max: Option<usize>,
    /// Action distribution for the first `N` steps.
    pub burn_in: Vec<f64>,
    /// Enumerate every deterministic window policy when there are at most
    /// this many; otherwise only the supplied policy is evaluated.
    pub max_policies: usize,
    /// Forward nodes allowed per time step before the horizon is truncated.
    pub node_budget: usize,
    /// Window continuations allowed per node.
    pub window_budget: usize,
}

impl FilterStabilityOptions {
    pub fn new(memory: usize, beta: f64, num_actions: usize) -> Self {
        Self {
            memory,
            beta,
            t_max: None,
            burn_in: vec![1.0 / num_actions as f64; num_actions],
            max_policies: 10_000,
            node_budget: 200_000,
            window_budget: 1_000_000,
        }
    }
}

/// Smallest `T` with `2 beta^T / (1 - beta) < TAIL_TARGET`.
pub fn default_horizon(beta: f64) -> usize {
    let mut t = 0;
    while 2.0 * beta.powi(t as i32) / (1.0 - beta) >= TAIL_TARGET {
        t += 1;
    }
    t
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterStabilityReport {
    /// `L_t` for `t = 0..=horizon`, maximized over priors and policies.
    pub l: Vec<f64>,
    /// `L_t` per prior, maximized over policies.
    pub per_prior: Vec<Vec<f64>>,
    pub requested_horizon: usize,
    /// True when the node budget stopped the recursion before
    /// `requested_horizon`.
    pub truncated: bool,
    /// `sum_{t <= horizon} beta^t L_t`.
    pub discounted_sum: f64,
    /// `2 beta^{horizon+1} / (1 - beta)`, bounding the omitted terms.
    pub tail_bound: f64,
    pub policies_evaluated: usize,
    /// False when only the supplied policy was evaluated, making `l` a lower
    /// estimate of the supremum over policies.
    pub policy_set_exhaustive: bool,
    pub beta: f64,
}

impl FilterStabilityReport {
    pub fn horizon(&self) -> usize {
        self.l.len() - 1
    }

    /// `discounted_sum + tail_bound`, an upper bound on the full series for
    /// the evaluated policies.
    pub fn certified_sum(&self) -> f64 {
        self.discounted_sum + self.tail_bound
    }
}

struct Node {
    mu: Vec<f64>,
    h_prev: usize,
    u_prev: usize,
    p: f64,
}

struct Walker<'a> {
    spec: &'a PomdpSpec,
    windows: WindowSpace,
    reference: &'a ReferencePosterior,
    policy: &'a FiniteMemoryPolicy,
    burn_in: &'a [f64],
}

impl Walker<'_> {
    fn actions(&self, k: usize, h: usize) -> &[f64] {
        if k < self.windows.memory() {
            self.burn_in
        } else {
            self.policy.probs(h)
        }
    }

    /// Extends the window by the observation at time `t + j` and recurses.
    /// `alpha` and `alpha_ref` are unnormalized joints over the hidden state
    /// at time `t + j`, before observing it.
    #[allow(clippy::too_many_arguments)]
    fn descend(
        &self,
        t: usize,
        j: usize,
        alpha: &[f64],
        alpha_ref: &[f64],
        h_prev: usize,
        u_prev: usize,
        weight: f64,
        acc: &mut f64,
    ) {
        let nx = self.spec.num_states();
        for y in 0..self.spec.num_obs() {
            let a: Vec<f64> = (0..nx).map(|x| alpha[x] * self.spec.o(x, y)).collect();
            let mass: f64 = a.iter().sum();
            if mass == 0.0 {
                continue;
            }
            let ar: Vec<f64> = (0..nx).map(|x| alpha_ref[x] * self.spec.o(x, y)).collect();
            let h = self.windows.shift(h_prev, y, u_prev);
            if j == self.windows.memory() {
                let post: Vec<f64> = a.iter().map(|v| v / mass).collect();
                let gap = match self.reference {
                    ReferencePosterior::Stationary(table) => {
                        l1_distance(&post, &table[h * nx..(h + 1) * nx])
                    }
                    ReferencePosterior::Prior(_) => {
                        let z: f64 = ar.iter().sum();
                        if z > 0.0 {
                            post.iter().zip(&ar).map(|(p, r)| (p - r / z).abs()).sum()
                        } else {
                            // window impossible under the reference prior
                            2.0
                        }
                    }
                };
                *acc += weight * mass * gap;
                continue;
            }
            let mut next = vec![0.0; nx];
            let mut next_ref = vec![0.0; nx];
            for (u, &g) in self.actions(t + j, h).iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                predict_into(self.spec, &a, u, &mut next);
                predict_into(self.spec, &ar, u, &mut next_ref);
                self.descend(t, j + 1, &next, &next_ref, h, u, weight * g, acc);
            }
        }
    }

    fn run(&self, prior: &[f64], horizon: usize, node_budget: usize) -> Vec<f64> {
        let nx = self.spec.num_states();
        let ref_prior: Vec<f64> = match self.reference {
            ReferencePosterior::Prior(p) => p.clone(),
            ReferencePosterior::Stationary(_) => vec![0.0; nx],
        };
        let mut nodes = vec![Node {
            mu: prior.to_vec(),
            h_prev: 0,
            u_prev: 0,
            p: 1.0,
        }];
        let mut out = Vec::with_capacity(horizon + 1);
        for t in 0..=horizon {
            let mut l = 0.0;
            for n in &nodes {
                self.descend(t, 0, &n.mu, &ref_prior, n.h_prev, n.u_prev, n.p, &mut l);
            }
            out.push(l);
            if t == horizon {
                break;
            }
            let mut index: HashMap<(Vec<i64>, usize, usize), usize> = HashMap::new();
            let mut next_nodes: Vec<Node> = Vec::new();
            let mut post = vec![0.0; nx];
            for n in &nodes {
                for y in 0..self.spec.num_obs() {
                    let z = crate::model::correct_into(self.spec, &n.mu, y, &mut post);
                    if z == 0.0 {
                        continue;
                    }
                    post.iter_mut().for_each(|v| *v /= z);
                    let h = self.windows.shift(n.h_prev, y, n.u_prev);
                    for (u, &g) in self.actions(t, h).iter().enumerate() {
                        if g == 0.0 {
                            continue;
                        }
                        let mut mu = vec![0.0; nx];
                        predict_into(self.spec, &post, u, &mut mu);
                        let s: f64 = mu.iter().sum();
                        mu.iter_mut().for_each(|v| *v /= s);
                        let key = (mu.iter().map(|v| (v * 1e12).round() as i64).collect(), h, u);
                        let p = n.p * z * g;
                        match index.get(&key) {
                            Some(&i) => next_nodes[i].p += p,
                            None => {
                                index.insert(key, next_nodes.len());
                                next_nodes.push(Node {
                                    mu,
                                    h_prev: h,
                                    u_prev: u,
                                    p,
                                });
                            }
                        }
                    }
                }
            }
            if next_nodes.len() > node_budget {
                break;
            }
            nodes = next_nodes;
        }
        out
    }
}

/// Enumerates `L_t = E || P^{mu_t}(X_{t+N} | window) - reference(window) ||_1`
/// exactly by forward recursion over predictors and all window
/// continuations.
///
/// Actions at times `k < N` come from the burn-in distribution, later ones
/// from the window policy. The result is maximized over `priors` and over
/// the policy set: every deterministic window policy plus `policy` when the
/// count fits `max_policies`, otherwise `policy` alone.
pub fn filter_stability(
    spec: &PomdpSpec,
    reference: &ReferencePosterior,
    priors: &[Predictor],
    policy: &FiniteMemoryPolicy,
    opts: &FilterStabilityOptions,
) -> Result<FilterStabilityReport> {
    let windows = WindowSpace::for_spec(spec, opts.memory)?;
    let nx = spec.num_states();
    if !(opts.beta > 0.0 && opts.beta < 1.0) {
        return Err(Error::validation(
            "beta",
            format!("{} not in (0, 1)", opts.beta),
        ));
    }
    if priors.is_empty() || priors.iter().any(|p| p.as_slice().len() != nx) {
        return Err(Error::validation(
            "priors",
            "need at least one predictor of length |X|",
        ));
    }
    if policy.num_windows() != windows.len() || policy.num_actions() != spec.num_actions() {
        return Err(Error::validation(
            "policy",
            "table shape does not match the window space",
        ));
    }
    match reference {
        ReferencePosterior::Prior(p) if p.len() != nx => {
            return Err(Error::validation(
                "reference",
                "prior length differs from |X|",
            ))
        }
        ReferencePosterior::Stationary(t) if t.len() != windows.len() * nx => {
            return Err(Error::validation(
                "reference",
                "table size differs from |H| |X|",
            ))
        }
        _ => {}
    }
    let per_window = (spec.num_obs() as f64).powi(opts.memory as i32 + 1)
        * (spec.num_actions() as f64).powi(opts.memory as i32);
    if per_window > opts.window_budget as f64 {
        return Err(Error::Budget {
            what: "window continuations",
            required: per_window,
            budget: opts.window_budget,
        });
    }
    let requested = opts.t_max.unwrap_or_else(|| default_horizon(opts.beta));
    let count = (spec.num_actions() as f64).powi(windows.len() as i32);
    let exhaustive = count <= opts.max_policies as f64;
    let mut policies = vec![policy.clone()];
    if exhaustive && spec.num_actions() > 1 {
        let nu = spec.num_actions();
        let mut digits = vec![0usize; windows.len()];
        loop {
            policies.push(FiniteMemoryPolicy::deterministic(&digits, nu)?);
            let mut k = 0;
            while k < digits.len() {
                digits[k] += 1;
                if digits[k] < nu {
                    break;
                }
                digits[k] = 0;
                k += 1;
            }
            if k == digits.len() {
                break;
            }
        }
    }
    let runs: Vec<Vec<Vec<f64>>> = policies
        .par_iter()
        .map(|pol| {
            let w = Walker {
                spec,
                windows,
                reference,
                policy: pol,
                burn_in: &opts.burn_in,
            };
            priors
                .iter()
                .map(|p| w.run(p.as_slice(), requested, opts.node_budget))
                .collect()
        })
        .collect();
    let horizon = runs
        .iter()
        .flat_map(|r| r.iter().map(Vec::len))
        .min()
        .expect("at least one run")
        - 1;
    let per_prior: Vec<Vec<f64>> = (0..priors.len())
        .map(|i| {
            (0..=horizon)
                .map(|t| runs.iter().map(|r| r[i][t]).fold(0.0, f64::max))
                .collect()
        })
        .collect();
    let l: Vec<f64> = (0..=horizon)
        .map(|t| per_prior.iter().map(|r| r[t]).fold(0.0, f64::max))
        .collect();
    let discounted_sum = l
        .iter()
        .enumerate()
        .map(|(t, v)| opts.beta.powi(t as i32) * v)
        .sum();
    Ok(FilterStabilityReport {
        l,
        per_prior,
        requested_horizon: requested,
        truncated: horizon < requested,
        discounted_sum,
        tail_bound: 2.0 * opts.beta.powi(horizon as i32 + 1) / (1.0 - opts.beta),
        policies_evaluated: policies.len(),
        policy_set_exhaustive: exhaustive,
        beta: opts.beta,
    })
}

/// Largest diameter `max_b max_{y, y' in b} |p_y - p_y'|` of the observation
/// bins under the metric given by `points` (default: the indices).
pub fn quantizer_resolution(obs_bins: &[usize], points: Option<&[f64]>) -> f64 {
    let pt = |y: usize| points.map_or(y as f64, |p| p[y]);
    let mut d = 0.0f64;
    for a in 0..obs_bins.len() {
        for b in a + 1..obs_bins.len() {
            if obs_bins[a] == obs_bins[b] {
                d = d.max((pt(a) - pt(b)).abs());
            }
        }
    }
    d
}
