use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::FeatureBasis;
use crate::error::{Error, Result};
use crate::linalg::min_sym_eigenvalue;

/// Gram matrices at or below this minimum eigenvalue count as singular.
pub const SINGULAR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GramKind {
    /// `Sigma_gamma`: weights of the exploration policy's state-action pairs.
    Exploration,
    /// `Sigma_theta`: state weights paired with the greedy action of `theta`.
    Greedy,
    /// Plain state weights.
    State,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub matrix: DMatrix<f64>,
    pub kind: GramKind,
    pub sigma_min: f64,
}

impl GramMatrix {
    /// `sum_i w_i Phi(i) Phi(i)^T`.
    pub fn weighted(basis: &FeatureBasis, weights: &[f64], kind: GramKind) -> Self {
        let d = basis.dim();
        let mut m = DMatrix::zeros(d, d);
        for (i, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let phi = basis.phi(i);
            for a in 0..d {
                if phi[a] == 0.0 {
                    continue;
                }
                for b in 0..d {
                    m[(a, b)] += w * phi[a] * phi[b];
                }
            }
        }
        let sigma_min = min_sym_eigenvalue(&m);
        Self {
            matrix: m,
            kind,
            sigma_min,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// The `L2(pi)` orthogonal projection onto the span of a basis.
#[derive(Debug, Clone)]
pub struct Projection {
    basis: FeatureBasis,
    weights: Vec<f64>,
    gram: GramMatrix,
    chol: Cholesky<f64, Dyn>,
}

impl Projection {
    pub fn new(basis: &FeatureBasis, weights: &[f64]) -> Result<Self> {
        if weights.len() != basis.num_points() {
            return Err(Error::validation(
                "projection",
                format!(
                    "{} weights for {} basis points",
                    weights.len(),
                    basis.num_points()
                ),
            ));
        }
        let gram = GramMatrix::weighted(basis, weights, GramKind::State);
        if !(gram.sigma_min > SINGULAR_TOL) {
            return Err(Error::RankDeficient {
                sigma_min: gram.sigma_min,
                tolerance: SINGULAR_TOL,
            });
        }
        let chol = Cholesky::new(gram.matrix.clone()).ok_or(Error::RankDeficient {
            sigma_min: gram.sigma_min,
            tolerance: SINGULAR_TOL,
        })?;
        Ok(Self {
            basis: basis.clone(),
            weights: weights.to_vec(),
            gram,
            chol,
        })
    }

    pub fn gram(&self) -> &GramMatrix {
        &self.gram
    }

    pub fn basis(&self) -> &FeatureBasis {
        &self.basis
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Sigma^{-1} v`.
    pub fn solve(&self, v: &[f64]) -> Vec<f64> {
        self.chol
            .solve(&DVector::from_column_slice(v))
            .iter()
            .copied()
            .collect()
    }

    /// `E_pi[Phi f]`.
    pub fn moment(&self, f: &[f64]) -> Vec<f64> {
        let mut m = vec![0.0; self.basis.dim()];
        for (i, (&w, &fi)) in self.weights.iter().zip(f).enumerate() {
            if w == 0.0 {
                continue;
            }
            for (mk, p) in m.iter_mut().zip(self.basis.phi(i)) {
                *mk += w * p * fi;
            }
        }
        m
    }

    /// Coefficients `theta_f` of the projection of `f`.
    pub fn coefficients(&self, f: &[f64]) -> Vec<f64> {
        self.solve(&self.moment(f))
    }

    /// `Pi f` tabulated at every point.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.basis.values(&self.coefficients(f))
    }
}

/// Coefficients of the `L2(pi)` projection of `f` onto the basis span.
pub fn project(f: &[f64], pi: &[f64], basis: &FeatureBasis) -> Result<Vec<f64>> {
    if f.len() != basis.num_points() {
        return Err(Error::validation(
            "project",
            "function length differs from basis points",
        ));
    }
    Ok(Projection::new(basis, pi)?.coefficients(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Quantizer;
    use crate::linalg::weighted_l2;

    #[test]
    fn span_is_fixed() {
        let b =
            FeatureBasis::from_rows(vec![vec![1.0, 0.0], vec![0.5, 0.5], vec![0.0, -1.0]]).unwrap();
        let theta = [0.3, -2.0];
        let f = b.values(&theta);
        let got = project(&f, &[0.2, 0.3, 0.5], &b).unwrap();
        assert!((got[0] - theta[0]).abs() < 1e-10 && (got[1] - theta[1]).abs() < 1e-10);
    }

    #[test]
    fn indicator_projection_is_bin_average() {
        let q = Quantizer::new(vec![0, 0, 1, 1, 1]).unwrap();
        let pi = [0.1, 0.3, 0.2, 0.2, 0.2];
        let f = [1.0, 3.0, -1.0, 0.0, 4.0];
        let theta = project(&f, &pi, &q.basis()).unwrap();
        assert!((theta[0] - (0.1 + 0.9) / 0.4).abs() < 1e-12);
        assert!((theta[1] - (-0.2 + 0.8) / 0.6).abs() < 1e-12);
        let g = GramMatrix::weighted(&q.basis(), &pi, GramKind::State);
        assert!((g.matrix[(0, 0)] - 0.4).abs() < 1e-15 && g.matrix[(0, 1)] == 0.0);
    }

    #[test]
    fn singular_gram_is_reported() {
        let b = FeatureBasis::from_rows(vec![vec![1.0, 1.0], vec![0.5, 0.5]]).unwrap();
        match project(&[1.0, 2.0], &[0.5, 0.5], &b) {
            Err(Error::RankDeficient { sigma_min, .. }) => assert!(sigma_min.abs() < 1e-10),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn residual_is_orthogonal_and_norm_shrinks() {
        let b = FeatureBasis::from_rows(vec![
            vec![1.0, 0.2],
            vec![0.1, 0.9],
            vec![-0.4, 0.3],
            vec![0.7, -0.8],
        ])
        .unwrap();
        let pi = [0.1, 0.2, 0.3, 0.4];
        let p = Projection::new(&b, &pi).unwrap();
        let f = [2.0, -1.0, 0.5, 3.0];
        let pf = p.apply(&f);
        let resid: Vec<f64> = f.iter().zip(&pf).map(|(a, b)| a - b).collect();
        for m in p.moment(&resid) {
            assert!(m.abs() < 1e-12);
        }
        assert!(weighted_l2(&pf, &pi) <= weighted_l2(&f, &pi));
        assert_eq!(p.gram().kind, GramKind::State);
    }
}
