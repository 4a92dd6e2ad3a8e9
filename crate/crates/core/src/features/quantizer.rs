use super::FeatureBasis;
use crate::error::{Error, Result};
use crate::model::{dense_bin_count, WindowSpace};

/// A partition of a finite point set into bins `0..num_bins`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quantizer {
    bins: Vec<usize>,
    num_bins: usize,
}

impl Quantizer {
    /// Every bin in `0..=max` must be non-empty.
    pub fn new(bins: Vec<usize>) -> Result<Self> {
        if bins.is_empty() {
            return Err(Error::validation("quantizer", "no points"));
        }
        let num_bins = dense_bin_count("quantizer", &bins)?;
        Ok(Self { bins, num_bins })
    }

    pub fn identity(points: usize) -> Self {
        Self {
            bins: (0..points).collect(),
            num_bins: points,
        }
    }

    /// Bins windows by their observation block only, mapping each
    /// observation through `obs_bins`. The bin index reads the mapped
    /// observations newest first as mixed-radix digits.
    pub fn by_observations(windows: &WindowSpace, obs_bins: &[usize]) -> Result<Self> {
        if obs_bins.len() != windows.num_obs() {
            return Err(Error::validation(
                "obs_bins",
                format!(
                    "expected {} entries, found {}",
                    windows.num_obs(),
                    obs_bins.len()
                ),
            ));
        }
        let nb = dense_bin_count("obs_bins", obs_bins)?;
        let bins = (0..windows.len())
            .map(|h| {
                let w = windows.decode(h).expect("index in range");
                w.observations
                    .iter()
                    .fold(0, |acc, &y| acc * nb + obs_bins[y])
            })
            .collect();
        Self::new(bins)
    }

    pub fn num_points(&self) -> usize {
        self.bins.len()
    }

    pub fn num_bins(&self) -> usize {
        self.num_bins
    }

    #[inline]
    pub fn bin(&self, i: usize) -> usize {
        self.bins[i]
    }

    pub fn bins(&self) -> &[usize] {
        &self.bins
    }

    /// Indicator basis over points.
    pub fn basis(&self) -> FeatureBasis {
        let rows = self
            .bins
            .iter()
            .map(|&b| {
                let mut r = vec![0.0; self.num_bins];
                r[b] = 1.0;
                r
            })
            .collect();
        FeatureBasis::from_rows(rows).expect("indicator rows are bounded")
    }

    /// Indicator basis over `(point, action)` pairs, feature index
    /// `bin * |U| + u`.
    pub fn state_action_basis(&self, num_actions: usize) -> FeatureBasis {
        let d = self.num_bins * num_actions;
        let rows = self
            .bins
            .iter()
            .flat_map(|&b| {
                (0..num_actions).map(move |u| {
                    let mut r = vec![0.0; d];
                    r[b * num_actions + u] = 1.0;
                    r
                })
            })
            .collect();
        FeatureBasis::from_rows(rows).expect("indicator rows are bounded")
    }
}
