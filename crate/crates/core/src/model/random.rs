//! Random models and policies for sweeps and property tests.

use rand::Rng;
use rand_distr::Exp1;

use super::policy::FiniteMemoryPolicy;
use super::spec::PomdpSpec;

/// A draw from the flat Dirichlet distribution on `n` points.
pub fn random_distribution<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|v| v / z).collect()
}

/// Flat-Dirichlet kernels, channel and prior; costs uniform on `[0, 1)`.
pub fn random_pomdp<R: Rng + ?Sized>(
    rng: &mut R,
    num_states: usize,
    num_obs: usize,
    num_actions: usize,
) -> PomdpSpec {
    let mut t = Vec::with_capacity(num_states * num_actions * num_states);
    for _ in 0..num_states * num_actions {
        t.extend(random_distribution(rng, num_states));
    }
    let mut o = Vec::with_capacity(num_states * num_obs);
    for _ in 0..num_states {
        o.extend(random_distribution(rng, num_obs));
    }
    let c = (0..num_states * num_actions)
        .map(|_| rng.gen::<f64>())
        .collect();
    let prior = random_distribution(rng, num_states);
    PomdpSpec::from_flat(num_states, num_obs, num_actions, t, o, c, prior)
        .expect("normalized rows form a valid model")
}

/// Flat-Dirichlet window rows mixed with `eps` of the uniform law.
pub fn random_policy<R: Rng + ?Sized>(
    rng: &mut R,
    num_windows: usize,
    num_actions: usize,
    eps: f64,
) -> FiniteMemoryPolicy {
    let rows = (0..num_windows)
        .map(|_| random_distribution(rng, num_actions))
        .collect();
    FiniteMemoryPolicy::from_rows(rows)
        .and_then(|p| p.mixed(eps, &vec![1.0 / num_actions as f64; num_actions]))
        .expect("normalized rows form a valid policy")
}

/// A random surjection of `n` points onto `0..k` (each bin non-empty).
pub fn random_partition<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    let k = k.clamp(1, n.max(1));
    let mut bins: Vec<usize> = (0..n)
        .map(|i| if i < k { i } else { rng.gen_range(0..k) })
        .collect();
    for i in (1..n).rev() {
        bins.swap(i, rng.gen_range(0..=i));
    }
    bins
}
