use super::config::LearnerKind;
use super::experiment::{Experiment, Features};
use crate::analysis::{
    l2_bound, near_linearity, pomdp_q_bound, pomdp_value_bound, uniform_bound, ErrorBoundReport,
    GridOptions, ObservationQuantizer, PomdpSetting,
};
use crate::error::{Error, Result};
use crate::features::{dominance_check, gram_exploration, DominanceReport};
use crate::linalg::norm2;
use crate::model::{build_joint_chain, FiniteMemoryPolicy, PomdpSpec, Predictor, WindowSpace};
use crate::oracle::{
    build_stationary_mdp, filter_stability, invariant_distribution, mixing_profile, optimal_q,
    policy_value, projected_q_iteration, solve_projected_fixed_point, stationary_posterior,
    Coverage, FilterStabilityOptions, FilterStabilityReport, FixedPointSolution,
    InvariantDistribution, MixingProfile, ProjectedQIteration, ReferencePosterior, StationaryMdp,
    ValueSolution,
};

/// Tolerance of the oracle value iterations.
pub const ORACLE_TOL: f64 = 1e-12;
/// Iteration cap of the projected Q iteration.
pub const Q_ITERATION_CAP: usize = 100_000;
/// Slack below which a bound counts as violated.
pub const BOUND_TOL: f64 = 1e-9;

/// Everything the oracle computes for an experiment. None of it depends on
/// the seeds.
#[derive(Debug, Clone)]
pub struct OracleOutputs {
    pub invariant: InvariantDistribution,
    pub mdp: StationaryMdp,
    pub mixing: Option<MixingProfile>,
    pub filter_stability: Option<FilterStabilityReport>,
    /// True when `filter_stability` was computed on the model with merged
    /// observations (`L^_t`).
    pub filter_quantized: bool,
    /// The learner's limit: `theta*` or `Q*`. Non-finite entries mark cells
    /// without stationary mass.
    pub target: Option<Vec<f64>>,
    /// Value of the exploration policy under the stationary regime MDP
    /// (TD(0) only).
    pub values: Option<ValueSolution>,
    pub fixed_point: Option<FixedPointSolution>,
    /// `||b - A theta*||_2`.
    pub expected_update_norm: Option<f64>,
    pub dominance: Option<DominanceReport>,
    pub q_iteration: Option<ProjectedQIteration>,
    /// `Q*` of the quantized stationary regime MDP (tabular only).
    pub q_star: Option<ValueSolution>,
    pub dropped: Vec<(usize, usize)>,
    pub bounds: Vec<ErrorBoundReport>,
    /// `(item, reason)` for diagnostics that could not be computed.
    pub skipped: Vec<(String, String)>,
}

impl OracleOutputs {
    pub fn bound_violated(&self) -> bool {
        self.bounds.iter().any(|b| !b.holds(BOUND_TOL))
    }
}

/// The policy on `n` merged windows that `policy` factors through, if any.
pub fn push_down(
    policy: &FiniteMemoryPolicy,
    map: &[usize],
    n: usize,
) -> Option<FiniteMemoryPolicy> {
    let mut rows: Vec<Option<&[f64]>> = vec![None; n];
    for (h, &g) in map.iter().enumerate() {
        match rows[g] {
            None => rows[g] = Some(policy.probs(h)),
            Some(r) if r == policy.probs(h) => {}
            Some(_) => return None,
        }
    }
    let rows: Option<Vec<Vec<f64>>> = rows.into_iter().map(|r| r.map(<[f64]>::to_vec)).collect();
    FiniteMemoryPolicy::from_rows(rows?).ok()
}

/// Greedy actions of a Q table, skipping cells listed in `dropped`; ties go
/// to the lowest action.
pub fn greedy_from_q(q: &[f64], num_actions: usize, dropped: &[(usize, usize)]) -> Vec<usize> {
    (0..q.len() / num_actions)
        .map(|s| {
            (0..num_actions)
                .filter(|&u| !dropped.contains(&(s, u)))
                .min_by(|&a, &b| {
                    q[s * num_actions + a]
                        .total_cmp(&q[s * num_actions + b])
                        .then(a.cmp(&b))
                })
                .unwrap_or(0)
        })
        .collect()
}

fn stability(
    spec: &PomdpSpec,
    policy: &FiniteMemoryPolicy,
    exp: &Experiment,
) -> Result<FilterStabilityReport> {
    let (js, chain) = build_joint_chain(spec, policy, exp.memory)?;
    let inv = invariant_distribution(&chain)?;
    let reference =
        ReferencePosterior::Stationary(stationary_posterior(&js, &inv.pi, spec.prior()));
    let mut opts = FilterStabilityOptions::new(exp.memory, exp.beta(), spec.num_actions());
    opts.burn_in = exp.burn_in.clone();
    opts.t_max = exp.config.oracle.l_horizon;
    let prior = Predictor::new(spec.prior().to_vec())?;
    filter_stability(spec, &reference, &[prior], policy, &opts)
}

/// Runs the oracle for an experiment.
pub fn compute_oracle(exp: &Experiment) -> Result<OracleOutputs> {
    let spec = exp.spec();
    let beta = exp.beta();
    let ocfg = &exp.config.oracle;
    let (js, chain) = build_joint_chain(spec, &exp.policy, exp.memory)?;
    let invariant = invariant_distribution(&chain)?;
    let mdp = build_stationary_mdp(spec, &js, &invariant.pi, beta, Coverage::DropAndReport)?;
    let mixing = if ocfg.mixing {
        Some(mixing_profile(&chain, &invariant.pi, ocfg.mixing_k_max)?)
    } else {
        None
    };
    let mut out = OracleOutputs {
        invariant,
        dropped: mdp.dropped.clone(),
        mdp,
        mixing,
        filter_stability: None,
        filter_quantized: false,
        target: None,
        values: None,
        fixed_point: None,
        expected_update_norm: None,
        dominance: None,
        q_iteration: None,
        q_star: None,
        bounds: Vec::new(),
        skipped: Vec::new(),
    };
    match exp.learner() {
        LearnerKind::Td0 => td0_oracle(exp, &mut out)?,
        LearnerKind::LinearQ => linear_q_oracle(exp, &mut out)?,
        LearnerKind::TabularQ => tabular_oracle(exp, &mut out)?,
    }
    Ok(out)
}

fn skip_on_budget<T>(out: &mut OracleOutputs, item: &str, r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e @ (Error::Budget { .. } | Error::NotConverged { .. })) => {
            out.skipped.push((item.to_string(), e.to_string()));
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

fn td0_oracle(exp: &Experiment, out: &mut OracleOutputs) -> Result<()> {
    let spec = exp.spec();
    let basis = exp.state_basis();
    let fp = solve_projected_fixed_point(&out.mdp, &basis, &exp.policy)?;
    let values = policy_value(&out.mdp, &exp.policy, ORACLE_TOL)?;
    out.expected_update_norm = Some(norm2(&fp.expected_update(&fp.theta)));
    out.target = Some(fp.theta.clone());
    if exp.config.oracle.filter_stability {
        let fs = stability(spec, &exp.policy, exp);
        out.filter_stability = skip_on_budget(out, "filter_stability", fs)?;
    }
    if exp.config.oracle.bounds {
        out.bounds
            .push(l2_bound(&values.values, &fp.theta, &basis, &out.mdp)?);
        let nl = near_linearity(&values.values, &basis, &out.mdp.pi_state)?;
        match uniform_bound(&values.values, &fp.theta, &basis, &out.mdp, nl.lambda) {
            Ok(b) => out.bounds.push(b),
            Err(e @ Error::RankDeficient { .. }) => {
                out.skipped.push(("uniform".into(), e.to_string()));
            }
            Err(e) => return Err(e),
        }
        match &out.filter_stability {
            Some(fs) => {
                let setting = PomdpSetting {
                    spec,
                    memory: exp.memory,
                    beta: exp.beta(),
                    burn_in: &exp.burn_in,
                };
                let b = pomdp_value_bound(
                    setting,
                    &exp.policy,
                    &out.mdp,
                    &basis,
                    &fp.theta,
                    fs,
                    nl.lambda,
                )?;
                out.bounds.push(b);
            }
            None => out
                .skipped
                .push(("pomdp_value".into(), "filter stability not computed".into())),
        }
    }
    out.fixed_point = Some(fp);
    out.values = Some(values);
    Ok(())
}

fn linear_q_oracle(exp: &Experiment, out: &mut OracleOutputs) -> Result<()> {
    let basis = exp.state_action_basis();
    let nu = exp.spec().num_actions();
    let sigma_gamma = gram_exploration(&basis, &out.mdp.pi_sa);
    out.dominance = Some(dominance_check(
        &sigma_gamma,
        &basis,
        &out.mdp.pi_state,
        nu,
        exp.beta(),
        0,
    ));
    let it = projected_q_iteration(&out.mdp, &basis, ORACLE_TOL, Q_ITERATION_CAP)?;
    if it.converged {
        out.target = Some(it.theta.clone());
    } else {
        out.skipped.push((
            "target".into(),
            "projected Q iteration did not converge".into(),
        ));
    }
    out.q_iteration = Some(it);
    if exp.config.oracle.filter_stability {
        let fs = stability(exp.spec(), &exp.policy, exp);
        out.filter_stability = skip_on_budget(out, "filter_stability", fs)?;
    }
    Ok(())
}

fn tabular_oracle(exp: &Experiment, out: &mut OracleOutputs) -> Result<()> {
    let spec = exp.spec();
    let Features::Quantized {
        quantizer,
        obs_bins,
    } = &exp.features
    else {
        return Err(Error::validation(
            "basis.kind",
            "tabular Q-learning needs a quantizer basis",
        ));
    };
    let nu = spec.num_actions();
    let qmdp = out.mdp.aggregate(quantizer, Coverage::DropAndReport)?;
    let qs = optimal_q(&qmdp, ORACLE_TOL)?;
    let mut target = qs.values.clone();
    for &(s, u) in &qmdp.dropped {
        target[s * nu + u] = f64::NAN;
    }
    out.target = Some(target);
    out.dropped = qmdp.dropped.clone();
    // L^_t lives on the model with merged observations, which needs the
    // exploration policy to factor through the merged windows
    let merged = obs_bins.as_ref().and_then(|bins| {
        let qspec = spec.quantize_observations(bins).ok()?;
        let qwin = WindowSpace::for_spec(&qspec, exp.memory).ok()?;
        let pol = push_down(&exp.policy, quantizer.bins(), qwin.len())?;
        Some((bins, qspec, pol))
    });
    if exp.config.oracle.filter_stability {
        match &merged {
            Some((_, qspec, pol)) => {
                let fs = stability(qspec, pol, exp);
                out.filter_stability = skip_on_budget(out, "filter_stability", fs)?;
                out.filter_quantized = true;
            }
            None => {
                let fs = stability(spec, &exp.policy, exp);
                out.filter_stability = skip_on_budget(out, "filter_stability", fs)?;
            }
        }
    }
    if exp.config.oracle.bounds {
        match (&merged, out.filter_quantized, &out.filter_stability) {
            (Some((bins, _, _)), true, Some(fs_hat)) => {
                let greedy = greedy_from_q(&qs.values, nu, &qmdp.dropped);
                let learned =
                    FiniteMemoryPolicy::deterministic(&greedy, nu)?.compose(quantizer.bins())?;
                let setting = PomdpSetting {
                    spec,
                    memory: exp.memory,
                    beta: exp.beta(),
                    burn_in: &exp.burn_in,
                };
                let quant = ObservationQuantizer {
                    obs_bins: bins,
                    points: exp.model.obs_points.as_deref(),
                };
                let grid = GridOptions {
                    resolution: exp.config.oracle.grid_resolution,
                    point_budget: exp.config.oracle.grid_point_budget,
                    ..GridOptions::default()
                };
                let b = pomdp_q_bound(setting, quant, &learned, fs_hat, &grid);
                if let Some(b) = skip_on_budget(out, "pomdp_q", b)? {
                    out.bounds.push(b);
                }
            }
            _ => out.skipped.push((
                "pomdp_q".into(),
                "needs an observation quantizer keeping actions, an exploration policy \
                 that factors through it, and filter stability"
                    .into(),
            )),
        }
    }
    out.q_star = Some(qs);
    Ok(())
}
