use std::collections::HashMap;

use rand::Rng;
use rand_distr::StandardNormal;

use super::{FeatureBasis, GramKind, GramMatrix};
use crate::linalg::min_sym_eigenvalue;
use crate::rng::{stream, Purpose};

/// Exhaustive enumeration of greedy maps is used up to this many maps.
pub const MAX_ENUMERATED_MAPS: f64 = 1e6;
/// Sampled parameter vectors when enumeration is too large.
pub const SAMPLED_THETAS: usize = 10_000;

/// `Sigma_gamma = sum_{s,u} pi(s,u) Phi(s,u) Phi(s,u)^T`. Points of `basis`
/// are state-action pairs `s * |U| + u`.
pub fn gram_exploration(basis: &FeatureBasis, pi_sa: &[f64]) -> GramMatrix {
    GramMatrix::weighted(basis, pi_sa, GramKind::Exploration)
}

/// `argmin_u theta^T Phi(s, u)` per state, ties to the lowest action.
pub fn greedy_actions(basis: &FeatureBasis, theta: &[f64], num_actions: usize) -> Vec<usize> {
    let ns = basis.num_points() / num_actions;
    (0..ns)
        .map(|s| {
            let mut best = 0;
            let mut best_v = basis.value(theta, s * num_actions);
            for u in 1..num_actions {
                let v = basis.value(theta, s * num_actions + u);
                if v < best_v {
                    best = u;
                    best_v = v;
                }
            }
            best
        })
        .collect()
}

/// `sum_s pi(s) Phi(s, g(s)) Phi(s, g(s))^T` for a deterministic map `g`.
pub fn gram_for_map(
    basis: &FeatureBasis,
    map: &[usize],
    pi_state: &[f64],
    num_actions: usize,
) -> GramMatrix {
    let mut w = vec![0.0; basis.num_points()];
    for (s, (&u, &p)) in map.iter().zip(pi_state).enumerate() {
        w[s * num_actions + u] = p;
    }
    GramMatrix::weighted(basis, &w, GramKind::Greedy)
}

/// `Sigma_theta` for the greedy map of `theta`.
pub fn gram_greedy(
    basis: &FeatureBasis,
    theta: &[f64],
    pi_state: &[f64],
    num_actions: usize,
) -> GramMatrix {
    let map = greedy_actions(basis, theta, num_actions);
    gram_for_map(basis, &map, pi_state, num_actions)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceReport {
    /// Every checked margin is positive.
    pub holds: bool,
    /// Smallest `lambda_min(Sigma_gamma - beta^2 Sigma_theta)` seen.
    pub worst_margin: f64,
    /// The greedy map attaining the worst margin.
    pub worst_map: Vec<usize>,
    pub maps_checked: usize,
    /// False when `theta` was sampled, making the result a lower estimate
    /// of the failure set.
    pub exhaustive: bool,
}

/// Checks `beta^2 Sigma_theta < Sigma_gamma` over all greedy maps.
///
/// States with zero weight are ignored and states sharing the same feature
/// rows share a greedy action, so maps are enumerated over those classes.
pub fn dominance_check(
    sigma_gamma: &GramMatrix,
    basis: &FeatureBasis,
    pi_state: &[f64],
    num_actions: usize,
    beta: f64,
    seed: u64,
) -> DominanceReport {
    let ns = pi_state.len();
    let mut class_of = vec![usize::MAX; ns];
    let mut classes: HashMap<Vec<u64>, usize> = HashMap::new();
    for s in 0..ns {
        if pi_state[s] == 0.0 {
            continue;
        }
        let key: Vec<u64> = (0..num_actions)
            .flat_map(|u| basis.phi(s * num_actions + u).iter().map(|v| v.to_bits()))
            .collect();
        let n = classes.len();
        class_of[s] = *classes.entry(key).or_insert(n);
    }
    let nc = classes.len();
    let count = (num_actions as f64).powi(nc as i32);
    let b2 = beta * beta;
    let margin = |map: &[usize]| {
        let g = gram_for_map(basis, map, pi_state, num_actions);
        min_sym_eigenvalue(&(&sigma_gamma.matrix - g.matrix * b2))
    };
    let mut worst = f64::INFINITY;
    let mut worst_map = vec![0; ns];
    let mut checked = 0;
    let mut consider = |map: Vec<usize>| {
        let m = margin(&map);
        checked += 1;
        if m < worst {
            worst = m;
            worst_map = map;
        }
    };
    let exhaustive = count <= MAX_ENUMERATED_MAPS;
    if exhaustive {
        let mut digits = vec![0usize; nc];
        loop {
            let map = class_of
                .iter()
                .map(|&c| if c == usize::MAX { 0 } else { digits[c] })
                .collect();
            consider(map);
            let mut k = 0;
            while k < nc {
                digits[k] += 1;
                if digits[k] < num_actions {
                    break;
                }
                digits[k] = 0;
                k += 1;
            }
            if k == nc {
                break;
            }
        }
    } else {
        let mut rng = stream(seed, Purpose::ThetaSamples, 0);
        let d = basis.dim();
        for _ in 0..SAMPLED_THETAS {
            let mut theta: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let norm = crate::linalg::norm2(&theta).max(f64::MIN_POSITIVE);
            let radius: f64 = rng.gen::<f64>().powf(1.0 / d as f64);
            theta.iter_mut().for_each(|t| *t *= radius / norm);
            consider(greedy_actions(basis, &theta, num_actions));
        }
    }
    DominanceReport {
        holds: worst > 0.0,
        worst_margin: worst,
        worst_map,
        maps_checked: checked,
        exhaustive,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Quantizer;

    #[test]
    fn zero_theta_picks_action_zero() {
        let q = Quantizer::new(vec![0, 1, 1]).unwrap();
        let b = q.state_action_basis(3);
        assert_eq!(greedy_actions(&b, &[0.0; 6], 3), vec![0, 0, 0]);
        let pi = [0.2, 0.3, 0.5];
        let g = gram_greedy(&b, &[0.0; 6], &pi, 3);
        assert!((g.matrix[(0, 0)] - 0.2).abs() < 1e-15);
        assert!((g.matrix[(3, 3)] - 0.8).abs() < 1e-15);
        assert_eq!(g.kind, GramKind::Greedy);
    }

    #[test]
    fn single_action_margin() {
        let b = FeatureBasis::from_rows(vec![vec![1.0, 0.0], vec![0.3, 0.8]]).unwrap();
        let pi = [0.4, 0.6];
        let sg = gram_exploration(&b, &pi);
        let beta = 0.7;
        let r = dominance_check(&sg, &b, &pi, 1, beta, 0);
        assert!(r.holds && r.exhaustive);
        assert!((r.worst_margin - (1.0 - beta * beta) * sg.sigma_min).abs() < 1e-12);
    }

    #[test]
    fn tiny_beta_holds_when_gram_is_definite() {
        let q = Quantizer::new(vec![0, 1, 0, 1]).unwrap();
        let b = q.state_action_basis(2);
        let pi_sa = vec![0.125; 8];
        let sg = gram_exploration(&b, &pi_sa);
        let r = dominance_check(&sg, &b, &[0.25; 4], 2, 1e-6, 0);
        assert!(r.holds);
        assert_eq!(r.maps_checked, 4);
    }
}
