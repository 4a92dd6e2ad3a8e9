//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero when
//! any criterion fails.

mod common;

use std::process::Command;
use std::time::Instant;

use rand::Rng;

use nmrl::features::{project, Projection};
use nmrl::harness::{compute_oracle, run_experiment, Experiment, LearnerKind, BOUND_TOL};
use nmrl::linalg::{norm2, sup_norm};
use nmrl::model::{build_joint_chain, chain2, FiniteMemoryPolicy, PomdpSpec, Predictor, Simulator};
use nmrl::oracle::{
    conditional_covariances, contraction_estimate, contraction_ratio, filter_stability,
    invariant_distribution, mixing_profile, projected_bellman, solve_projected_fixed_point,
    stationary_posterior, FilterStabilityOptions, ReferencePosterior,
};
use nmrl::rng::{stream, Purpose};
use nmrl::Result;

const SWEEP_SEED: u64 = 2024;
const SWEEP_SIZE: u64 = 20;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn criterion(id: usize, name: &str, f: impl FnOnce() -> Result<Outcome>) -> bool {
    let start = Instant::now();
    let (pass, detail) = match f() {
        Ok(o) => (o.pass, o.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!(
        "{verdict} {id:>2} {name}: {detail} [{:.2} s]",
        start.elapsed().as_secs_f64()
    );
    pass
}

fn td0_convergence() -> Result<Outcome> {
    let start = Instant::now();
    let exp = common::load("chain2_td0.toml");
    let report = run_experiment(&exp)?;
    let elapsed = start.elapsed().as_secs_f64();
    let norm = norm2(report.oracle.target.as_deref().expect("TD(0) target"));
    let rel: Vec<f64> = report
        .seeds
        .iter()
        .map(|s| s.trace.final_distance().unwrap_or(f64::INFINITY) / norm)
        .collect();
    let good = rel.iter().filter(|&&r| r < 1e-2).count();
    let worst = rel.iter().copied().fold(0.0, f64::max);
    outcome(
        good >= 4 && rel.len() == 5 && exp.config.n_steps == 2_000_000 && elapsed < 60.0,
        format!(
            "{good}/5 seeds with relative distance < 1e-2 at t = {}, worst {worst:.3e}, {elapsed:.1} s (target < 60 s)",
            exp.config.n_steps
        ),
    )
}

fn fixed_point(exp: &Experiment) -> Result<Outcome> {
    let oracle = compute_oracle(exp)?;
    let start = Instant::now();
    let basis = exp.state_basis();
    let mdp = &oracle.mdp;
    let fp = solve_projected_fixed_point(mdp, &basis, &exp.policy)?;
    let proj = Projection::new(&basis, &mdp.pi_state)?;
    let mut f = vec![0.0; mdp.num_states()];
    let mut iterations = 0;
    loop {
        let next = projected_bellman(&proj, mdp, &exp.policy, &f)?;
        let change = next
            .iter()
            .zip(&f)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        f = next;
        iterations += 1;
        if change < 1e-14 || iterations >= 100_000 {
            break;
        }
    }
    let theta = proj.coefficients(&f);
    let gap = norm2(
        &theta
            .iter()
            .zip(&fp.theta)
            .map(|(a, b)| a - b)
            .collect::<Vec<_>>(),
    );
    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        fp.bellman_residual < 1e-8 && gap < 1e-8 && elapsed < 1.0,
        format!(
            "projected Bellman residual {:.3e}, iteration ({iterations} steps) vs linear solve {gap:.3e}, {elapsed:.3} s",
            fp.bellman_residual
        ),
    )
}

fn l2_contraction(exp: &Experiment) -> Result<Outcome> {
    let oracle = compute_oracle(exp)?;
    let start = Instant::now();
    let mdp = &oracle.mdp;
    let basis = exp.state_basis();
    let est = contraction_estimate(mdp, &basis, &exp.policy, 100, 7)?;
    let proj = Projection::new(&basis, &mdp.pi_state)?;
    let mut rng = stream(8, Purpose::RandomFunctions, 0);
    let f: Vec<f64> = (0..mdp.num_states())
        .map(|_| rng.gen_range(-1.0..=1.0))
        .collect();
    let g: Vec<f64> = f.iter().map(|v| v + 1.0).collect();
    let shift = contraction_ratio(&proj, mdp, &exp.policy, &f, &g)?.expect("nonzero pair");
    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        est.pairs_evaluated == 100
            && est.max_ratio <= mdp.beta + 1e-9
            && (shift - mdp.beta).abs() <= 1e-10
            && elapsed < 1.0,
        format!(
            "max ratio {:.12} over {} pairs (beta {}), constant shift {:.15}",
            est.max_ratio, est.pairs_evaluated, mdp.beta, shift
        ),
    )
}

fn sup_norm_projection(exp: &Experiment) -> Result<Outcome> {
    let oracle = compute_oracle(exp)?;
    let basis = exp.state_basis();
    let pi = &oracle.mdp.pi_state;
    let mut rng = stream(9, Purpose::RandomFunctions, 0);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let scale = 10f64.powf(rng.gen_range(-3.0..3.0));
        let f: Vec<f64> = (0..pi.len())
            .map(|_| scale * rng.gen_range(-1.0..=1.0))
            .collect();
        let pf = project(&f, pi, &basis)?;
        worst = worst.max(sup_norm(&pf) - sup_norm(&f));
    }
    outcome(
        worst <= 1e-12,
        format!("max ||Pi f||_inf - ||f||_inf = {worst:.3e} over 1000 functions"),
    )
}

fn tabular_q() -> Result<Outcome> {
    let start = Instant::now();
    let exp = common::load("chain2_tabular_q.toml");
    let report = run_experiment(&exp)?;
    let elapsed = start.elapsed().as_secs_f64();
    let dist: Vec<f64> = report
        .seeds
        .iter()
        .map(|s| s.trace.final_distance().unwrap_or(f64::INFINITY))
        .collect();
    let good = dist.iter().filter(|&&d| d < 1e-2).count();
    let text: Vec<String> = dist.iter().map(|d| format!("{d:.3e}")).collect();
    outcome(
        good >= 4 && dist.len() == 5 && exp.config.n_steps == 5_000_000 && elapsed < 120.0,
        format!(
            "{good}/5 seeds with sup distance < 1e-2 at t = {}: [{}], {elapsed:.1} s (target < 120 s)",
            exp.config.n_steps,
            text.join(", ")
        ),
    )
}

fn error_bounds() -> Result<Outcome> {
    let start = Instant::now();
    let mut experiments: Vec<(String, Experiment)> = [
        "chain2_td0.toml",
        "chain2_tabular_q.toml",
        "chain2_merged_q.toml",
    ]
    .iter()
    .map(|n| (n.to_string(), common::load(n)))
    .collect();
    for i in 0..SWEEP_SIZE {
        experiments.push((
            format!("sweep {i}"),
            common::sweep_experiment(SWEEP_SEED, i),
        ));
    }
    let mut checked = 0;
    let mut worst = f64::INFINITY;
    let mut worst_at = String::new();
    let mut bare = Vec::new();
    let mut skipped = 0;
    for (name, exp) in &experiments {
        let oracle = compute_oracle(exp)?;
        skipped += oracle.skipped.len();
        if oracle.bounds.is_empty() {
            bare.push(name.clone());
        }
        for b in &oracle.bounds {
            checked += 1;
            if b.slack < worst {
                worst = b.slack;
                worst_at = format!("{} on {name}", b.name);
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        worst >= -BOUND_TOL && bare.is_empty() && elapsed < 600.0,
        format!(
            "{checked} bounds on {} configurations ({SWEEP_SIZE} random), min slack {worst:.3e} ({worst_at}), {skipped} skipped items, {} without bounds, {elapsed:.1} s (target < 600 s)",
            experiments.len(),
            bare.len()
        ),
    )
}

fn identity_channel(spec: &PomdpSpec) -> PomdpSpec {
    let n = spec.num_states();
    let transition = (0..n)
        .map(|x| {
            (0..spec.num_actions())
                .map(|u| spec.t_row(x, u).to_vec())
                .collect()
        })
        .collect();
    let observation = (0..n)
        .map(|x| (0..n).map(|y| f64::from(u8::from(x == y))).collect())
        .collect();
    let cost = (0..n)
        .map(|x| (0..spec.num_actions()).map(|u| spec.c(x, u)).collect())
        .collect();
    PomdpSpec::new(transition, observation, cost, spec.prior().to_vec()).expect("valid model")
}

fn stationary_table(
    spec: &PomdpSpec,
    policy: &FiniteMemoryPolicy,
    memory: usize,
) -> Result<Vec<f64>> {
    let (js, chain) = build_joint_chain(spec, policy, memory)?;
    let inv = invariant_distribution(&chain)?;
    Ok(stationary_posterior(&js, &inv.pi, spec.prior()))
}

fn every_policy(nh: usize, nu: usize) -> Result<Vec<FiniteMemoryPolicy>> {
    let mut out = vec![FiniteMemoryPolicy::uniform(nh, nu)];
    let mut digits = vec![0usize; nh];
    loop {
        out.push(FiniteMemoryPolicy::deterministic(&digits, nu)?);
        let Some(k) = digits.iter().position(|&d| d + 1 < nu) else {
            return Ok(out);
        };
        digits[..k].iter_mut().for_each(|d| *d = 0);
        digits[k] += 1;
    }
}

fn filter_stability_sanity() -> Result<Outcome> {
    let mut rng = stream(SWEEP_SEED, Purpose::RandomModels, 1000);
    let models = [
        (identity_channel(&chain2::spec()), 1),
        (
            identity_channel(&nmrl::model::random::random_pomdp(&mut rng, 3, 3, 2)),
            1,
        ),
        (
            identity_channel(&nmrl::model::random::random_pomdp(&mut rng, 3, 3, 2)),
            0,
        ),
    ];
    let mut identity_max = 0.0f64;
    for (spec, memory) in &models {
        let nh = nmrl::model::WindowSpace::for_spec(spec, *memory)?.len();
        let policy = FiniteMemoryPolicy::uniform(nh, spec.num_actions());
        let table = stationary_table(spec, &policy, *memory)?;
        let opts = FilterStabilityOptions::new(*memory, 0.8, spec.num_actions());
        let prior = Predictor::new(spec.prior().to_vec())?;
        let r = filter_stability(
            spec,
            &ReferencePosterior::Stationary(table),
            &[prior],
            &policy,
            &opts,
        )?;
        identity_max = r.l.iter().copied().fold(identity_max, f64::max);
    }

    let exp = common::load("chain2_td0.toml");
    let oracle = compute_oracle(&exp)?;
    let fs = oracle
        .filter_stability
        .as_ref()
        .expect("CHAIN2 filter stability");
    let spec = exp.spec();
    let table = stationary_table(spec, &exp.policy, exp.memory)?;
    let policies = every_policy(exp.windows.len(), spec.num_actions())?;
    let mut enum_gap = 0.0f64;
    for t in 0..=8 {
        let brute = policies
            .iter()
            .map(|p| {
                common::brute_force_l(spec, exp.memory, &table, p, &exp.burn_in, spec.prior(), t)
            })
            .fold(0.0, f64::max);
        enum_gap = enum_gap.max((fs.l[t] - brute).abs());
    }
    let extreme = policies
        .iter()
        .map(|p| common::extreme_prior_bound(spec, exp.memory, &table, p))
        .fold(0.0, f64::max);
    let tail_gap = (9..=20).map(|t| fs.l[t].max(extreme)).fold(0.0, f64::max);
    outcome(
        identity_max == 0.0
            && fs.horizon() >= 20
            && fs.policies_evaluated == policies.len()
            && enum_gap <= 1e-10
            && tail_gap <= 1e-10,
        format!(
            "identity channel max L_t = {identity_max:e}; CHAIN2 over {} policies: enumeration gap {enum_gap:.3e} (t <= 8), extreme-prior gap {tail_gap:.3e} (9 <= t <= 20)",
            policies.len()
        ),
    )
}

fn mixing(exp: &Experiment) -> Result<Outcome> {
    let (_, chain) = build_joint_chain(exp.spec(), &exp.policy, exp.memory)?;
    let pi = invariant_distribution(&chain)?.pi;
    let profile = mixing_profile(&chain, &pi, 200)?;
    let mut rng = stream(10, Purpose::RandomFunctions, 0);
    let n = chain.len();
    let mut worst = f64::NEG_INFINITY;
    let mut pk = vec![0.0; n];
    for _ in 0..100 {
        let f: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let mean: f64 = pi.iter().zip(&f).map(|(p, v)| p * v).sum();
        let conditional = conditional_covariances(&chain, &pi, &f, 50);
        let mut g = f.clone();
        for (k, cond) in conditional.iter().enumerate() {
            if k > 0 {
                chain.right_mul(&g, &mut pk);
                std::mem::swap(&mut g, &mut pk);
            }
            let lagged: f64 = (0..n).map(|i| pi[i] * (f[i] - mean) * (g[i] - mean)).sum();
            let cap = 4.0 * profile.alpha[k] * sup_norm(&f).powi(2);
            worst = worst.max(lagged.abs() - cap).max(cond.abs() - cap);
        }
    }
    let converged = profile.converged_at.filter(|&k| k < 200);
    outcome(
        worst <= 1e-12 && converged.is_some(),
        format!(
            "max |Cov| - 4 alpha_bar(k) ||f||^2 = {worst:.3e} over lagged and conditional covariances (k <= 50, 100 functions), sqrt-sum increment < 1e-10 from k = {:?}, sum {:.12}",
            profile.converged_at,
            profile.sqrt_partial_sums.last().copied().unwrap_or(f64::NAN)
        ),
    )
}

fn mdp_consistency(exp: &Experiment) -> Result<Outcome> {
    let oracle = compute_oracle(exp)?;
    let mdp = &oracle.mdp;
    let (ns, nu) = (mdp.num_states(), mdp.num_actions());
    let n_steps = 10_000_000;
    let mut visits = vec![0u64; ns * nu];
    let mut cost = vec![0.0; ns * nu];
    let mut next = vec![0u64; ns * nu * ns];
    for rec in Simulator::new(
        exp.spec(),
        &exp.policy,
        exp.memory,
        &exp.burn_in,
        n_steps,
        1,
    )? {
        let i = rec.s * nu + rec.action;
        visits[i] += 1;
        cost[i] += rec.cost;
        next[i * ns + rec.s_next] += 1;
    }
    let mut worst = 0.0f64;
    let mut unvisited = 0;
    for i in 0..ns * nu {
        if mdp.pi_sa[i] == 0.0 {
            continue;
        }
        if visits[i] == 0 {
            unvisited += 1;
            continue;
        }
        let n = visits[i] as f64;
        let (s, u) = (i / nu, i % nu);
        worst = worst.max((cost[i] / n - mdp.c(s, u)).abs());
        let mut eta = vec![0.0; ns];
        for &(j, p) in mdp.eta(s, u) {
            eta[j] = p;
        }
        for (j, &e) in eta.iter().enumerate() {
            worst = worst.max((next[i * ns + j] as f64 / n - e).abs());
        }
    }
    outcome(
        worst <= 3e-3 && unvisited == 0,
        format!("max |simulated - oracle| over c and eta = {worst:.3e} after {n_steps} steps, {unvisited} unvisited pairs"),
    )
}

fn expected_update(exp: &Experiment) -> Result<Outcome> {
    let oracle = compute_oracle(exp)?;
    let norm = oracle.expected_update_norm.expect("TD(0) oracle");
    outcome(
        norm < 1e-8,
        format!("||E_pi[update at theta*]|| = {norm:.3e}"),
    )
}

fn q_divergence() -> Result<Outcome> {
    let out = tempfile::tempdir().expect("temporary directory");
    let config = common::configs_dir().join("adversarial_linear_q.toml");
    let exp = Experiment::load(nmrl::harness::ExperimentConfig::load(&config)?)?;
    let status = Command::new(env!("CARGO_BIN_EXE_nmrl"))
        .arg("run")
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(out.path())
        .output()
        .expect("nmrl binary runs");
    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out.path().join("summary.json")).unwrap_or_default(),
    )
    .unwrap_or_default();
    let diverged = summary["diverged_seeds"].as_u64().unwrap_or(0);
    let code = status.status.code();
    outcome(
        code == Some(2)
            && diverged > 0
            && exp.learner() == LearnerKind::LinearQ
            && !exp.config.basis.is_quantizer(),
        format!(
            "exit code {code:?}, {diverged}/{} seeds hit the divergence sentinel",
            exp.config.seeds.len()
        ),
    )
}

fn main() {
    let chain2_td0 = common::load("chain2_td0.toml");
    let results = [
        criterion(1, "TD(0) convergence", td0_convergence),
        criterion(2, "fixed-point characterization", || {
            fixed_point(&chain2_td0)
        }),
        criterion(3, "L2 contraction", || l2_contraction(&chain2_td0)),
        criterion(4, "indicator projection sup-norm", || {
            sup_norm_projection(&chain2_td0)
        }),
        criterion(5, "tabular Q-learning", tabular_q),
        criterion(6, "error bounds", error_bounds),
        criterion(7, "filter stability", filter_stability_sanity),
        criterion(8, "mixing", || mixing(&chain2_td0)),
        criterion(9, "stationary MDP consistency", || {
            mdp_consistency(&chain2_td0)
        }),
        criterion(10, "expected update at the limit", || {
            expected_update(&chain2_td0)
        }),
        criterion(11, "Q-learning divergence", q_divergence),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed < results.len() {
        std::process::exit(1);
    }
}
