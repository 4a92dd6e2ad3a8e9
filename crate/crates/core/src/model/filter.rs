use super::spec::{PomdpSpec, ROW_TOL};
use crate::error::{Error, Result};
use crate::linalg::check_distribution;

/// A distribution over hidden states.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictor(Vec<f64>);

impl Predictor {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        check_distribution("predictor", &p, ROW_TOL)?;
        Ok(Self(p))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn point_mass(n: usize, x: usize) -> Self {
        let mut p = vec![0.0; n];
        p[x] = 1.0;
        Self(p)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for Predictor {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Unnormalized Bayes correction: `out[x] = mu[x] O(y | x)`. Returns the
/// normalizer.
pub fn correct_into(spec: &PomdpSpec, mu: &[f64], y: usize, out: &mut [f64]) -> f64 {
    let mut z = 0.0;
    for (x, o) in out.iter_mut().enumerate() {
        *o = mu[x] * spec.o(x, y);
        z += *o;
    }
    z
}

/// Prediction step: `out[x'] = sum_x p[x] T(x' | x, u)`.
pub fn predict_into(spec: &PomdpSpec, p: &[f64], u: usize, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for (x, &px) in p.iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        for (x2, &t) in spec.t_row(x, u).iter().enumerate() {
            out[x2] += px * t;
        }
    }
}

/// One step of the predictor recursion: condition `mu` (the law of the
/// previous hidden state) on `y_prev`, then push it through
/// `T(. | ., u_prev)`.
pub fn filter_update(
    mu: &Predictor,
    y_prev: usize,
    u_prev: usize,
    spec: &PomdpSpec,
) -> Result<Predictor> {
    let nx = spec.num_states();
    if mu.0.len() != nx || y_prev >= spec.num_obs() || u_prev >= spec.num_actions() {
        return Err(Error::validation(
            "filter_update",
            "predictor length or observation/action index out of range",
        ));
    }
    let mut post = vec![0.0; nx];
    let z = correct_into(spec, &mu.0, y_prev, &mut post);
    if z <= 0.0 {
        return Err(Error::DegenerateEvidence {
            predictor: mu.0.clone(),
            observation: y_prev,
        });
    }
    post.iter_mut().for_each(|p| *p /= z);
    let mut next = vec![0.0; nx];
    predict_into(spec, &post, u_prev, &mut next);
    let s: f64 = next.iter().sum();
    next.iter_mut().for_each(|p| *p /= s);
    Ok(Predictor(next))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::chain2;

    fn deterministic() -> PomdpSpec {
        PomdpSpec::new(
            vec![vec![vec![0.0, 1.0]], vec![vec![1.0, 0.0]]],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![0.0], vec![0.0]],
            vec![1.0, 0.0],
        )
        .unwrap()
    }

    #[test]
    fn identity_channel_deterministic_chain() {
        let s = deterministic();
        let out = filter_update(&Predictor::point_mass(2, 0), 0, 0, &s).unwrap();
        assert_eq!(out.as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn uninformative_observation_only_predicts() {
        let s = PomdpSpec::new(
            vec![
                vec![vec![0.7, 0.3], vec![0.1, 0.9]],
                vec![vec![0.4, 0.6], vec![0.5, 0.5]],
            ],
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            vec![0.5, 0.5],
        )
        .unwrap();
        let out = filter_update(&Predictor::uniform(2), 1, 0, &s).unwrap();
        assert!((out.as_slice()[0] - 0.55).abs() < 1e-15);
        assert!((out.as_slice()[1] - 0.45).abs() < 1e-15);
    }

    #[test]
    fn chain2_matches_joint_enumeration() {
        let s = chain2::spec();
        let mu = [0.5, 0.5];
        // P(x1, y0 = 0) = sum_x0 mu(x0) O(0|x0) T(x1|x0,0)
        let mut joint = [0.0; 2];
        for x0 in 0..2 {
            for x1 in 0..2 {
                joint[x1] += mu[x0] * s.o(x0, 0) * s.t(x0, 0, x1);
            }
        }
        let z = joint[0] + joint[1];
        let out = filter_update(&Predictor::new(mu.to_vec()).unwrap(), 0, 0, &s).unwrap();
        for x1 in 0..2 {
            assert!((out.as_slice()[x1] - joint[x1] / z).abs() < 1e-15);
        }
    }

    #[test]
    fn impossible_observation_is_degenerate() {
        let s = deterministic();
        let err = filter_update(&Predictor::point_mass(2, 0), 1, 0, &s).unwrap_err();
        match err {
            Error::DegenerateEvidence {
                predictor,
                observation,
            } => {
                assert_eq!(predictor, vec![1.0, 0.0]);
                assert_eq!(observation, 1);
            }
            other => panic!("unexpected {other}"),
        }
    }
}
