//! Shared fixtures for the integration and acceptance tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rand::Rng;

use nmrl::harness::{
    BasisConfig, Experiment, ExperimentConfig, LearnerConfig, LearnerKind, OracleConfig,
    PolicyConfig,
};
use nmrl::model::random::{random_partition, random_policy, random_pomdp};
use nmrl::model::{FiniteMemoryPolicy, ModelFile, PomdpSpec, WindowSpace};
use nmrl::rng::{stream, Purpose};

pub fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

pub fn load(name: &str) -> Experiment {
    let config = ExperimentConfig::load(&configs_dir().join(name)).expect("shipped config");
    Experiment::load(config).expect("shipped config resolves")
}

/// Exploration policies keep this much uniform mass.
pub const SWEEP_EPSILON: f64 = 0.3;

/// Belief-grid resolution for the sweep's Q-bound lower value.
pub const SWEEP_GRID_RESOLUTION: f64 = 1e-2;

/// Configuration `index` of the randomized sweep: a small random POMDP (2 or 3 states, observations and actions)
/// with a random quantizer. Even indices run TD(0) on a random window
/// partition, odd ones tabular Q-learning on a random observation merge
/// with an exploration policy that factors through the merged windows.
pub fn sweep_experiment(seed: u64, index: u64) -> Experiment {
    let mut rng = stream(seed, Purpose::RandomModels, index);
    let (nx, ny, nu) = (
        rng.gen_range(2..=3),
        rng.gen_range(2..=3),
        rng.gen_range(2..=3),
    );
    let memory = rng.gen_range(0..=2);
    let beta = rng.gen_range(0.5..=0.9);
    let spec = random_pomdp(&mut rng, nx, ny, nu);
    let windows = WindowSpace::for_spec(&spec, memory).expect("small window space");
    let nh = windows.len();
    let (kind, basis, policy) = if index.is_multiple_of(2) {
        let k = rng.gen_range(1..=nh);
        let bins = random_partition(&mut rng, nh, k);
        let policy = random_policy(&mut rng, nh, nu, SWEEP_EPSILON);
        (LearnerKind::Td0, BasisConfig::Quantizer { bins }, policy)
    } else {
        let ky = rng.gen_range(1..=ny);
        let obs_bins = random_partition(&mut rng, ny, ky);
        let (merged, map) = windows.map_observations(&obs_bins).expect("valid merge");
        let policy = random_policy(&mut rng, merged.len(), nu, SWEEP_EPSILON)
            .compose(&map)
            .expect("map into merged windows");
        let basis = BasisConfig::Observations {
            obs_bins,
            keep_actions: true,
        };
        (LearnerKind::TabularQ, basis, policy)
    };
    let rows = (0..nh).map(|h| policy.probs(h).to_vec()).collect();
    let config = ExperimentConfig {
        model: PathBuf::from(format!("sweep_{index}.toml")),
        memory: Some(memory),
        beta,
        n_steps: 1,
        checkpoints: None,
        seeds: vec![1],
        burn_in: None,
        policy: PolicyConfig::Table { rows },
        basis,
        learner: LearnerConfig {
            kind,
            schedule: None,
            init: None,
        },
        oracle: OracleConfig {
            grid_resolution: SWEEP_GRID_RESOLUTION,
            ..OracleConfig::default()
        },
    };
    let model = ModelFile {
        spec,
        memory,
        obs_points: None,
    };
    Experiment::new(config, model).expect("sweep configuration resolves")
}

/// Sampling-free reference for `L_t` under one policy: enumerates every
/// history `y_0, u_0, ..., y_{t+N}` from `prior`, filters each one from
/// scratch and accumulates `P(history) || P(X_{t+N} | history) - ref(h) ||_1`
/// against the table `reference[h * |X| + x]`.
pub fn brute_force_l(
    spec: &PomdpSpec,
    memory: usize,
    reference: &[f64],
    policy: &FiniteMemoryPolicy,
    burn_in: &[f64],
    prior: &[f64],
    t: usize,
) -> f64 {
    let windows = WindowSpace::for_spec(spec, memory).unwrap();
    let walk = Walk {
        spec,
        windows: &windows,
        reference,
        policy,
        burn_in,
        memory,
        last: t + memory,
    };
    let mut acc = 0.0;
    walk.visit(0, prior, 0, 0, &mut acc);
    acc
}

/// An upper bound on `L_t` for every `t >= N` and every law of the
/// predictor: the window gap is convex in the predictor, so its worst case
/// sits at a point mass. Maximized over point masses and over the window
/// and action preceding time `t`.
pub fn extreme_prior_bound(
    spec: &PomdpSpec,
    memory: usize,
    reference: &[f64],
    policy: &FiniteMemoryPolicy,
) -> f64 {
    let windows = WindowSpace::for_spec(spec, memory).unwrap();
    let nx = spec.num_states();
    let walk = Walk {
        spec,
        windows: &windows,
        reference,
        policy,
        burn_in: &[],
        memory: 0,
        last: memory,
    };
    let mut worst = 0.0f64;
    for x in 0..nx {
        let mut delta = vec![0.0; nx];
        delta[x] = 1.0;
        for h in 0..windows.len() {
            for u in 0..spec.num_actions() {
                let mut acc = 0.0;
                walk.visit(0, &delta, h, u, &mut acc);
                worst = worst.max(acc);
            }
        }
    }
    worst
}

struct Walk<'a> {
    spec: &'a PomdpSpec,
    windows: &'a WindowSpace,
    reference: &'a [f64],
    policy: &'a FiniteMemoryPolicy,
    burn_in: &'a [f64],
    /// Steps drawn from `burn_in` before the policy takes over.
    memory: usize,
    last: usize,
}

impl Walk<'_> {
    /// `alpha` is the unnormalized joint of the history so far and the
    /// hidden state at step `k`, before its observation.
    fn visit(&self, k: usize, alpha: &[f64], h_prev: usize, u_prev: usize, acc: &mut f64) {
        let (nx, nu) = (self.spec.num_states(), self.spec.num_actions());
        for y in 0..self.spec.num_obs() {
            let a: Vec<f64> = (0..nx).map(|x| alpha[x] * self.spec.o(x, y)).collect();
            let mass: f64 = a.iter().sum();
            if mass == 0.0 {
                continue;
            }
            let h = self.windows.shift(h_prev, y, u_prev);
            if k == self.last {
                let r = &self.reference[h * nx..(h + 1) * nx];
                *acc += a
                    .iter()
                    .zip(r)
                    .map(|(p, q)| (p - mass * q).abs())
                    .sum::<f64>();
                continue;
            }
            for u in 0..nu {
                let g = if k < self.memory {
                    self.burn_in[u]
                } else {
                    self.policy.prob(h, u)
                };
                if g == 0.0 {
                    continue;
                }
                let next: Vec<f64> = (0..nx)
                    .map(|x2| g * (0..nx).map(|x| a[x] * self.spec.t(x, u, x2)).sum::<f64>())
                    .collect();
                self.visit(k + 1, &next, h, u, acc);
            }
        }
    }
}
