//! Certified lower bound on the optimal POMDP value by value iteration on a
//! Freudenthal grid over the belief simplex.
//!
//! Grid points are integer vectors `m = v_1 >= v_2 >= ... >= v_n >= 0` with
//! belief `b_i = (v_i - v_{i+1}) / m`. Interpolation over the Freudenthal
//! simplex containing a belief is a convex combination of grid values, and
//! the optimal value is concave in the belief, so iterating from a constant
//! lower bound keeps every grid value below the optimal value.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::PomdpSpec;

/// Per action at one grid point: immediate costs and weighted successor vertices.
type PointModel = (Vec<f64>, Vec<Vec<(u32, f64)>>);

/// Grid resolution and size limits.
#[derive(Debug, Clone, PartialEq)]
pub struct GridOptions {
    /// Target spacing per simplex coordinate; the grid uses
    /// `m = ceil(1 / resolution)` subdivisions.
    pub resolution: f64,
    pub point_budget: usize,
    /// Stop when the sup-norm change of one sweep falls below this.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            resolution: 1e-3,
            point_budget: 600_000,
            tol: 1e-10,
            max_iterations: 100_000,
        }
    }
}

/// Number of grid points `C(m + n - 1, n - 1)`, saturating.
pub fn grid_size(num_states: usize, m: usize) -> usize {
    let mut c: u128 = 1;
    for i in 1..num_states as u128 {
        c = c * (m as u128 + i) / i;
        if c > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    c as usize
}

#[derive(Debug, Clone)]
pub struct BeliefGrid {
    num_states: usize,
    m: usize,
    points: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
    pub values: Vec<f64>,
    pub iterations: usize,
    /// Sup-norm change of the last sweep.
    pub residual: f64,
}

impl BeliefGrid {
    /// Runs value iteration on the grid from `min c / (1 - beta)`.
    pub fn solve(spec: &PomdpSpec, beta: f64, opts: &GridOptions) -> Result<Self> {
        if !(opts.resolution > 0.0 && opts.resolution <= 1.0) {
            return Err(Error::validation(
                "grid.resolution",
                format!("{} not in (0, 1]", opts.resolution),
            ));
        }
        let n = spec.num_states();
        let m = (1.0 / opts.resolution).ceil() as usize;
        let size = grid_size(n, m);
        if size > opts.point_budget {
            return Err(Error::Budget {
                what: "belief grid points",
                required: size as f64,
                budget: opts.point_budget,
            });
        }
        let mut points = Vec::with_capacity(size);
        let mut v = vec![0u32; n];
        v[0] = m as u32;
        enumerate(&mut v, 1, &mut points);
        let index = points
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i))
            .collect();
        let mut grid = Self {
            num_states: n,
            m,
            points,
            index,
            values: Vec::new(),
            iterations: 0,
            residual: f64::INFINITY,
        };
        grid.iterate(spec, beta, opts)?;
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn resolution(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn belief(&self, i: usize) -> Vec<f64> {
        let v = &self.points[i];
        (0..self.num_states)
            .map(|k| {
                let next = v.get(k + 1).copied().unwrap_or(0);
                (v[k] - next) as f64 / self.m as f64
            })
            .collect()
    }

    /// Interpolated grid value at belief `b`, a lower bound on the optimal
    /// value there.
    pub fn interpolate(&self, b: &[f64]) -> f64 {
        self.vertices(b)
            .into_iter()
            .map(|(i, w)| w * self.values[i])
            .sum()
    }

    /// The Freudenthal vertices containing `b` and their barycentric weights.
    fn vertices(&self, b: &[f64]) -> Vec<(usize, f64)> {
        let n = self.num_states;
        let m = self.m as f64;
        // x_i = m * sum_{j >= i} b_j, built from the back to stay monotone
        let mut x = vec![0.0; n];
        let mut acc = 0.0;
        for i in (1..n).rev() {
            acc += b[i].max(0.0);
            x[i] = (m * acc).min(m);
        }
        x[0] = m;
        for i in (1..n).rev() {
            if i + 1 < n && x[i] < x[i + 1] {
                x[i] = x[i + 1];
            }
        }
        let mut base: Vec<u32> = x.iter().map(|&xi| xi.floor() as u32).collect();
        base[0] = self.m as u32;
        let mut frac: Vec<(usize, f64)> = (1..n).map(|i| (i, x[i] - base[i] as f64)).collect();
        // a coordinate at the top of its cell is floored into the next one
        for (i, d) in frac.iter_mut() {
            if base[*i] as usize >= self.m {
                base[*i] = self.m as u32;
                *d = 0.0;
            }
        }
        frac.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut out = Vec::with_capacity(n);
        let mut v = base;
        let first = 1.0 - frac.first().map_or(0.0, |f| f.1);
        out.push((self.index[&v], first));
        for k in 0..frac.len() {
            v[frac[k].0] += 1;
            let w = frac[k].1 - frac.get(k + 1).map_or(0.0, |f| f.1);
            if w > 0.0 {
                out.push((self.index[&v], w));
            }
        }
        out
    }

    fn iterate(&mut self, spec: &PomdpSpec, beta: f64, opts: &GridOptions) -> Result<()> {
        let (nx, ny, nu) = (spec.num_states(), spec.num_obs(), spec.num_actions());
        let model: Vec<PointModel> = (0..self.len())
            .into_par_iter()
            .map(|g| {
                let b = self.belief(g);
                let mut costs = Vec::with_capacity(nu);
                let mut succ = Vec::with_capacity(nu);
                let mut pred = vec![0.0; nx];
                let mut post = vec![0.0; nx];
                for u in 0..nu {
                    costs.push((0..nx).map(|x| b[x] * spec.c(x, u)).sum());
                    pred.iter_mut().for_each(|p| *p = 0.0);
                    for (x, &bx) in b.iter().enumerate() {
                        if bx > 0.0 {
                            for (p, &t) in pred.iter_mut().zip(spec.t_row(x, u)) {
                                *p += bx * t;
                            }
                        }
                    }
                    let mut row = Vec::new();
                    for y in 0..ny {
                        let mut z = 0.0;
                        for x in 0..nx {
                            post[x] = pred[x] * spec.o(x, y);
                            z += post[x];
                        }
                        if z <= 0.0 {
                            continue;
                        }
                        post.iter_mut().for_each(|p| *p /= z);
                        for (i, w) in self.vertices(&post) {
                            row.push((i as u32, beta * z * w));
                        }
                    }
                    succ.push(row);
                }
                (costs, succ)
            })
            .collect();
        let c_min = spec
            .cost_table()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        let mut v = vec![c_min / (1.0 - beta); self.len()];
        for it in 1..=opts.max_iterations {
            let next: Vec<f64> = model
                .par_iter()
                .map(|(costs, succ)| {
                    costs
                        .iter()
                        .zip(succ)
                        .map(|(c, row)| {
                            c + row.iter().map(|&(i, w)| w * v[i as usize]).sum::<f64>()
                        })
                        .fold(f64::INFINITY, f64::min)
                })
                .collect();
            let residual = next
                .iter()
                .zip(&v)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            v = next;
            if residual < opts.tol {
                self.values = v;
                self.iterations = it;
                self.residual = residual;
                return Ok(());
            }
        }
        Err(Error::NotConverged {
            iterations: opts.max_iterations,
            change: f64::NAN,
        })
    }
}

fn enumerate(v: &mut Vec<u32>, k: usize, out: &mut Vec<Vec<u32>>) {
    if k == v.len() {
        out.push(v.clone());
        return;
    }
    for val in 0..=v[k - 1] {
        v[k] = val;
        enumerate(v, k + 1, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(resolution: f64) -> GridOptions {
        GridOptions {
            resolution,
            ..GridOptions::default()
        }
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(grid_size(1, 1000), 1);
        assert_eq!(grid_size(2, 1000), 1001);
        assert_eq!(grid_size(3, 1000), 501_501);
    }

    #[test]
    fn interpolation_reproduces_beliefs() {
        let spec = PomdpSpec::new(
            vec![
                vec![vec![1.0, 0.0, 0.0]],
                vec![vec![0.0, 1.0, 0.0]],
                vec![vec![0.0, 0.0, 1.0]],
            ],
            vec![vec![1.0], vec![1.0], vec![1.0]],
            vec![vec![0.0], vec![0.0], vec![0.0]],
            vec![1.0 / 3.0; 3],
        )
        .unwrap();
        let g = BeliefGrid::solve(&spec, 0.5, &opts(0.1)).unwrap();
        assert_eq!(g.len(), 66);
        for b in [
            [0.13, 0.52, 0.35],
            [1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.3, 0.3, 0.4],
        ] {
            let vs = g.vertices(&b);
            let w: f64 = vs.iter().map(|v| v.1).sum();
            assert!((w - 1.0).abs() < 1e-12);
            let mut mix = [0.0; 3];
            for (i, w) in vs {
                for (m, p) in mix.iter_mut().zip(g.belief(i)) {
                    *m += w * p;
                }
            }
            for (m, p) in mix.iter().zip(b) {
                assert!((m - p).abs() < 1e-12, "{mix:?} vs {b:?}");
            }
        }
    }

    #[test]
    fn fully_observed_values_are_exact_at_vertices() {
        // identity channel: J*(e_x) is the MDP optimal value
        let spec = PomdpSpec::new(
            vec![
                vec![vec![0.9, 0.1], vec![0.2, 0.8]],
                vec![vec![0.5, 0.5], vec![0.3, 0.7]],
            ],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![1.0, 0.5], vec![0.0, 0.3]],
            vec![0.5, 0.5],
        )
        .unwrap();
        let g = BeliefGrid::solve(&spec, 0.8, &opts(0.01)).unwrap();
        // MDP value iteration on the two states
        let mut v = [0.0f64; 2];
        for _ in 0..2000 {
            let q = |x: usize, u: usize, v: &[f64; 2]| {
                spec.c(x, u) + 0.8 * (0..2).map(|x2| spec.t(x, u, x2) * v[x2]).sum::<f64>()
            };
            v = [q(0, 0, &v).min(q(0, 1, &v)), q(1, 0, &v).min(q(1, 1, &v))];
        }
        assert!((g.interpolate(&[1.0, 0.0]) - v[0]).abs() < 1e-8);
        assert!((g.interpolate(&[0.0, 1.0]) - v[1]).abs() < 1e-8);
    }

    #[test]
    fn single_state_is_geometric() {
        let spec = PomdpSpec::new(
            vec![vec![vec![1.0]]],
            vec![vec![1.0]],
            vec![vec![1.0]],
            vec![1.0],
        )
        .unwrap();
        let g = BeliefGrid::solve(&spec, 0.8, &opts(0.001)).unwrap();
        assert_eq!(g.len(), 1);
        assert!((g.interpolate(&[1.0]) - 5.0).abs() < 1e-9);
    }

    #[test]
    fn over_budget_is_an_error() {
        let spec = PomdpSpec::new(
            vec![
                vec![vec![1.0, 0.0, 0.0]],
                vec![vec![0.0, 1.0, 0.0]],
                vec![vec![0.0, 0.0, 1.0]],
            ],
            vec![vec![1.0], vec![1.0], vec![1.0]],
            vec![vec![0.0], vec![0.0], vec![0.0]],
            vec![1.0 / 3.0; 3],
        )
        .unwrap();
        let o = GridOptions {
            resolution: 1e-3,
            point_budget: 1000,
            ..GridOptions::default()
        };
        assert!(matches!(
            BeliefGrid::solve(&spec, 0.5, &o),
            Err(Error::Budget { .. })
        ));
    }
}
