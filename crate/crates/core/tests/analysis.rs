//! Error bounds and rollouts on small models against the exact oracle.

mod common;

use nmrl::analysis::{l2_bound, rollout_value, ErrorBoundReport};
use nmrl::features::FeatureBasis;
use nmrl::harness::{compute_oracle, Experiment, ExperimentConfig, BOUND_TOL};
use nmrl::model::{chain2, FiniteMemoryPolicy, ModelFile};
use nmrl::oracle::{evaluate_policy_exact, InitialWindows};

fn experiment(model: &str, config: &str) -> Experiment {
    let model = ModelFile::parse(model, "model.toml").unwrap();
    let config = ExperimentConfig::parse(config, "config.toml").unwrap();
    Experiment::new(config, model).unwrap()
}

fn bound<'a>(reports: &'a [ErrorBoundReport], name: &str) -> &'a ErrorBoundReport {
    reports
        .iter()
        .find(|b| b.name == name)
        .unwrap_or_else(|| panic!("no {name} report"))
}

const IDENTITY_CHAIN: &str = "
num_states = 2
num_obs = 2
num_actions = 2
memory = 1
prior = [0.5, 0.5]
transition = [[0.9, 0.1], [0.2, 0.8], [0.7, 0.3], [0.1, 0.9]]
observation = [[1.0, 0.0], [0.0, 1.0]]
cost = [[0.0, 1.0], [1.0, 0.0]]
";

const ONE_STATE_TWO_OBS: &str = "
num_states = 1
num_obs = 2
num_actions = 2
memory = 1
prior = [1.0]
transition = [[1.0], [1.0]]
observation = [[0.3, 0.7]]
cost = [[0.2, 0.9]]
";

#[test]
fn values_in_the_span_give_a_zero_l2_bound() {
    let exp = common::load("chain2_td0.toml");
    let oracle = compute_oracle(&exp).unwrap();
    let j = &oracle.values.as_ref().unwrap().values;
    let basis = FeatureBasis::identity(j.len());
    let r = l2_bound(j, j, &basis, &oracle.mdp).unwrap();
    assert!(r.lhs < 1e-12 && r.rhs < 1e-12, "{r:?}");
}

#[test]
fn chain2_value_bounds_hold() {
    let exp = common::load("chain2_td0.toml");
    let oracle = compute_oracle(&exp).unwrap();
    assert!(oracle.skipped.is_empty(), "{:?}", oracle.skipped);
    for name in ["l2", "uniform", "pomdp_value"] {
        assert!(bound(&oracle.bounds, name).holds(BOUND_TOL));
    }
    assert!(!oracle.bound_violated());
}

#[test]
fn identity_channel_with_an_exact_basis_has_vanishing_terms() {
    let exp = experiment(
        IDENTITY_CHAIN,
        "model = \"m.toml\"\nbeta = 0.8\nn_steps = 10\nseeds = [1]\n\
         [policy]\nkind = \"constant\"\nprobs = [0.3, 0.7]\n\
         [basis]\nkind = \"identity\"\n[learner]\nkind = \"td0\"\n",
    );
    let oracle = compute_oracle(&exp).unwrap();
    let fs = oracle.filter_stability.as_ref().unwrap();
    assert!(fs.l.iter().all(|&l| l == 0.0));
    let b = bound(&oracle.bounds, "pomdp_value");
    assert!(b.inputs["lambda"] < 1e-9, "{b:?}");
    assert!(b.lhs < 1e-6, "{b:?}");
    assert!(b.holds(BOUND_TOL));
}

#[test]
fn unmerged_observations_drop_the_quantization_term() {
    let exp = common::load("chain2_tabular_q.toml");
    let oracle = compute_oracle(&exp).unwrap();
    let b = bound(&oracle.bounds, "pomdp_q");
    assert_eq!(b.inputs["l_y"], 0.0);
    let filter_term =
        2.0 * b.inputs["cost_sup"] / (1.0 - b.inputs["beta"]) * b.inputs["discounted_l_sum"];
    assert!((b.rhs - filter_term).abs() <= 1e-15 * filter_term.max(1.0));
    assert!(b.holds(BOUND_TOL));
}

#[test]
fn a_single_hidden_state_gives_vanishing_q_bound_sides() {
    let exp = experiment(
        ONE_STATE_TWO_OBS,
        "model = \"m.toml\"\nbeta = 0.8\nn_steps = 10\nseeds = [1]\n\
         [basis]\nkind = \"identity\"\n[learner]\nkind = \"tabular_q\"\n",
    );
    let oracle = compute_oracle(&exp).unwrap();
    let b = bound(&oracle.bounds, "pomdp_q");
    assert!(b.lhs < 1e-8, "{b:?}");
    assert!(b.rhs < 1e-4, "{b:?}");
    assert!(oracle
        .filter_stability
        .as_ref()
        .unwrap()
        .l
        .iter()
        .all(|&l| l == 0.0));
}

#[test]
fn merged_chain2_observations_keep_the_q_bound() {
    let exp = common::load("chain2_merged_q.toml");
    let oracle = compute_oracle(&exp).unwrap();
    let b = bound(&oracle.bounds, "pomdp_q");
    assert!(b.inputs["l_y"] > 0.0);
    assert!(b.lhs > 0.0);
    assert!(b.holds(BOUND_TOL), "{b:?}");
}

fn exact_initial_value(policy: &FiniteMemoryPolicy, beta: f64) -> f64 {
    let spec = chain2::spec();
    let burn_in = [0.5, 0.5];
    let v = evaluate_policy_exact(&spec, policy, 1, beta, 1e-13).unwrap();
    let init = InitialWindows::new(&spec, 1, &burn_in).unwrap();
    let j0 = init.values(&v.values);
    init.mass.iter().zip(&j0).map(|(m, j)| m * j).sum()
}

fn follow_last_observation() -> FiniteMemoryPolicy {
    // window index = obs_part * |U| + action; the newest observation is the
    // high digit of the observation block
    let rows = (0..8)
        .map(|h| {
            if h / 4 == 0 {
                vec![0.85, 0.15]
            } else {
                vec![0.1, 0.9]
            }
        })
        .collect();
    FiniteMemoryPolicy::from_rows(rows).unwrap()
}

#[test]
fn rollouts_agree_with_exact_evaluation() {
    let spec = chain2::spec();
    for policy in [FiniteMemoryPolicy::uniform(8, 2), follow_last_observation()] {
        let exact = exact_initial_value(&policy, 0.8);
        let est = rollout_value(&spec, &policy, 1, &[0.5, 0.5], 0.8, 20_000, 1e-6, 3).unwrap();
        let gap = (est.mean - exact).abs();
        assert!(
            gap <= 3.0 * est.std_error + est.truncation_bound,
            "{est:?} vs {exact}"
        );
    }
}

#[test]
fn rollout_confidence_intervals_cover_the_exact_value() {
    let spec = chain2::spec();
    let policy = follow_last_observation();
    let exact = exact_initial_value(&policy, 0.8);
    let covered = (0..100)
        .filter(|&seed| {
            let est = rollout_value(&spec, &policy, 1, &[0.5, 0.5], 0.8, 200, 1e-6, seed).unwrap();
            (est.mean - exact).abs() <= 2.576 * est.std_error + est.truncation_bound
        })
        .count();
    assert!(covered >= 95, "{covered}/100");
}
