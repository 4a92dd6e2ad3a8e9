use crate::error::{Error, Result};

/// `d` bounded basis functions tabulated over a finite set of points
/// (encoded states, or state-action pairs `s * |U| + u`).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBasis {
    dim: usize,
    table: Vec<f64>,
}

impl FeatureBasis {
    /// Builds a basis from one feature vector per point. Every entry must lie
    /// in `[-1, 1]`.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || dim == 0 {
            return Err(Error::validation(
                "basis",
                "needs at least one point and one feature",
            ));
        }
        let mut table = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::validation(
                    format!("basis[{i}]"),
                    format!("expected {dim} features, found {}", row.len()),
                ));
            }
            if let Some(v) = row.iter().find(|v| !(v.abs() <= 1.0)) {
                return Err(Error::validation(
                    format!("basis[{i}]"),
                    format!("feature value {v} outside [-1, 1]"),
                ));
            }
            table.extend_from_slice(row);
        }
        Ok(Self { dim, table })
    }

    /// One indicator per point.
    pub fn identity(points: usize) -> Self {
        let mut table = vec![0.0; points * points];
        for i in 0..points {
            table[i * points + i] = 1.0;
        }
        Self { dim: points, table }
    }

    pub fn constant(points: usize) -> Self {
        Self {
            dim: 1,
            table: vec![1.0; points],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_points(&self) -> usize {
        self.table.len() / self.dim
    }

    #[inline]
    pub fn phi(&self, i: usize) -> &[f64] {
        &self.table[i * self.dim..(i + 1) * self.dim]
    }

    /// `theta^T Phi(i)`.
    #[inline]
    pub fn value(&self, theta: &[f64], i: usize) -> f64 {
        crate::linalg::dot(theta, self.phi(i))
    }

    /// `theta^T Phi` at every point.
    pub fn values(&self, theta: &[f64]) -> Vec<f64> {
        (0..self.num_points())
            .map(|i| self.value(theta, i))
            .collect()
    }

    /// Pulls a state basis back along a map from a larger point set.
    pub fn compose(&self, map: &[usize]) -> Result<Self> {
        if let Some(&m) = map.iter().find(|&&m| m >= self.num_points()) {
            return Err(Error::validation(
                "basis",
                format!("point {m} out of range"),
            ));
        }
        Ok(Self {
            dim: self.dim,
            table: map
                .iter()
                .flat_map(|&m| self.phi(m).iter().copied())
                .collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unbounded_features_are_rejected() {
        assert!(FeatureBasis::from_rows(vec![vec![0.5, 1.5]]).is_err());
        assert!(FeatureBasis::from_rows(vec![vec![f64::NAN]]).is_err());
        assert!(FeatureBasis::from_rows(vec![vec![1.0], vec![1.0, 0.0]]).is_err());
    }

    #[test]
    fn evaluation() {
        let b = FeatureBasis::from_rows(vec![vec![1.0, 0.0], vec![0.5, -1.0]]).unwrap();
        assert_eq!(b.values(&[2.0, 3.0]), vec![2.0, -2.0]);
        let c = b.compose(&[1, 1, 0]).unwrap();
        assert_eq!(c.num_points(), 3);
        assert_eq!(c.phi(0), &[0.5, -1.0]);
    }
}
