use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, MarkovChain};

/// `sqrt(alpha(k))` increments below this count as converged.
pub const SUMMABILITY_TOL: f64 = 1e-10;

/// Deviation rows `P^k(i, .) - pi` for `k = 0, 1, ...`, kept in the
/// zero-sum subspace by subtracting `(row sum) * pi` after each step.
struct Deviations<'a> {
    chain: &'a MarkovChain,
    pi: &'a [f64],
    rows: Vec<Vec<f64>>,
    scratch: Vec<f64>,
}

impl<'a> Deviations<'a> {
    fn new(chain: &'a MarkovChain, pi: &'a [f64]) -> Self {
        let n = chain.len();
        let rows = (0..n)
            .map(|i| {
                let mut r: Vec<f64> = pi.iter().map(|p| -p).collect();
                r[i] += 1.0;
                r
            })
            .collect();
        Self {
            chain,
            pi,
            rows,
            scratch: vec![0.0; n],
        }
    }

    fn advance(&mut self) {
        for r in &mut self.rows {
            self.chain.left_mul(r, &mut self.scratch);
            let s: f64 = self.scratch.iter().sum();
            for (x, p) in self.scratch.iter_mut().zip(self.pi) {
                *x -= s * p;
            }
            std::mem::swap(r, &mut self.scratch);
        }
    }

    /// `1/2 sum_i pi_i ||P^k(i,.) - pi||_1`.
    fn alpha(&self) -> f64 {
        0.5 * self
            .rows
            .iter()
            .zip(self.pi)
            .map(|(r, p)| p * r.iter().map(|x| x.abs()).sum::<f64>())
            .sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixingProfile {
    /// `alpha_bar(k)` for `k = 0..=k_max`.
    pub alpha: Vec<f64>,
    /// `sum_{j <= k} sqrt(alpha_bar(j))`.
    pub sqrt_partial_sums: Vec<f64>,
    /// First `k` with `sqrt(alpha_bar(k)) < 1e-10`, if any.
    pub converged_at: Option<usize>,
    /// Geometric decay rate fitted to the tail of `alpha_bar`; zero when the
    /// chain mixes exactly in finite time.
    pub fitted_rate: f64,
}

impl MixingProfile {
    pub fn summable(&self) -> bool {
        self.converged_at.is_some()
    }
}

/// The mixing upper bound `alpha_bar(k) = 1/2 sum_i pi_i ||P^k(i,.) - pi||_1`.
pub fn mixing_profile(chain: &MarkovChain, pi: &[f64], k_max: usize) -> Result<MixingProfile> {
    if pi.len() != chain.len() {
        return Err(Error::validation("pi", "length differs from the chain"));
    }
    let mut dev = Deviations::new(chain, pi);
    let mut alpha = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        if k > 0 {
            dev.advance();
        }
        alpha.push(dev.alpha());
    }
    let mut sums = Vec::with_capacity(alpha.len());
    let mut acc = 0.0;
    for a in &alpha {
        acc += a.sqrt();
        sums.push(acc);
    }
    let converged_at = alpha.iter().position(|a| a.sqrt() < SUMMABILITY_TOL);
    Ok(MixingProfile {
        fitted_rate: fit_rate(&alpha),
        alpha,
        sqrt_partial_sums: sums,
        converged_at,
    })
}

/// Geometric mean of `alpha(k+1) / alpha(k)` over the second half of the
/// stretch that stays above the noise floor. A collapse below the floor in
/// one step (relative drop beyond 1e-6) means finite-time mixing: rate 0.
fn fit_rate(alpha: &[f64]) -> f64 {
    const FLOOR: f64 = 1e-13;
    const JUMP: f64 = 1e-6;
    let above = alpha.iter().take_while(|&&a| a >= FLOOR).count();
    if above == 0 {
        return 0.0;
    }
    if above < alpha.len() && alpha[above] < JUMP * alpha[above - 1] {
        return 0.0;
    }
    if above < 3 {
        return f64::NAN;
    }
    let last = above - 1;
    let first = (last / 2).max(1);
    (alpha[last] / alpha[first]).powf(1.0 / (last - first) as f64)
}

/// `Var_pi(P^k f) = sum_i pi_i ((P^k f)(i) - pi f)^2`, the covariance of
/// `f(Z_k)` with `E[f(Z_k) | Z_0]` under a stationary start, for each
/// `k = 0..=k_max`.
pub fn conditional_covariances(
    chain: &MarkovChain,
    pi: &[f64],
    f: &[f64],
    k_max: usize,
) -> Vec<f64> {
    let mean: f64 = pi.iter().zip(f).map(|(p, v)| p * v).sum();
    let mut g: Vec<f64> = f.iter().map(|v| v - mean).collect();
    let mut next = vec![0.0; g.len()];
    let mut out = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        if k > 0 {
            chain.right_mul(&g, &mut next);
            let m: f64 = pi.iter().zip(&next).map(|(p, v)| p * v).sum();
            for (a, b) in g.iter_mut().zip(&next) {
                *a = b - m;
            }
        }
        out.push(pi.iter().zip(&g).map(|(p, v)| p * v * v).sum());
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct GordinReport {
    /// `max_z sum_{j <= k} ||E[A(Z_j) | Z_0 = z] - E_pi A||` for each `k`.
    pub partial_sums: Vec<f64>,
    /// First `k >= 1` whose increment (max over `z`) is below the tolerance.
    pub stabilized_at: Option<usize>,
    pub tolerance: f64,
}

/// Partial sums of conditional-expectation deviations of a matrix-valued
/// function of consecutive chain states, `A(Z_t) = A(w_t, w_{t+1})`.
///
/// Starting points are the transitions `z = (w, w')` with `pi(w) > 0` and
/// `P(w, w') > 0`. For `k >= 1`, `E[A(Z_k) | Z_0 = z] = (P^{k-1} A_bar)(w')`
/// with `A_bar(w) = sum_{w'} P(w, w') A(w, w')`.
pub fn gordin_diagnostic<F>(
    chain: &MarkovChain,
    pi: &[f64],
    k_max: usize,
    tolerance: f64,
    a_fn: F,
) -> Result<GordinReport>
where
    F: Fn(usize, usize) -> DMatrix<f64>,
{
    let n = chain.len();
    if pi.len() != n {
        return Err(Error::validation("pi", "length differs from the chain"));
    }
    let probe = a_fn(0, chain.row(0).next().map_or(0, |(j, _)| j));
    let (r, c) = probe.shape();
    let flat = r * c;
    let mut a_bar = vec![0.0; n * flat];
    let mut mean = DMatrix::zeros(r, c);
    let mut k0 = 0.0f64;
    for w in 0..n {
        for (w2, p) in chain.row(w) {
            let a = a_fn(w, w2);
            for (k, v) in a.iter().enumerate() {
                a_bar[w * flat + k] += p * v;
            }
            if pi[w] > 0.0 {
                mean += &a * (pi[w] * p);
            }
        }
    }
    for w in 0..n {
        if pi[w] == 0.0 {
            continue;
        }
        for (w2, _) in chain.row(w) {
            k0 = k0.max(spectral_norm(&(a_fn(w, w2) - &mean)));
        }
    }
    // G(w') = (P^{k-1} A_bar)(w') - mean, stored flat per state
    let mut g: Vec<f64> = (0..n * flat)
        .map(|i| a_bar[i] - mean.as_slice()[i % flat])
        .collect();
    let reachable: Vec<bool> = {
        let mut r = vec![false; n];
        for w in 0..n {
            if pi[w] > 0.0 {
                for (w2, _) in chain.row(w) {
                    r[w2] = true;
                }
            }
        }
        r
    };
    let mut per_z_sum = vec![0.0; n];
    let mut partial = vec![k0];
    let mut stabilized_at = None;
    let mut next = vec![0.0; n * flat];
    for k in 1..=k_max {
        if k > 1 {
            for w in 0..n {
                let dst = &mut next[w * flat..(w + 1) * flat];
                dst.iter_mut().for_each(|v| *v = 0.0);
                for (w2, p) in chain.row(w) {
                    for (d, s) in dst.iter_mut().zip(&g[w2 * flat..(w2 + 1) * flat]) {
                        *d += p * s;
                    }
                }
            }
            // remove the drift of the pi-mean, which is zero in exact arithmetic
            let mut m = vec![0.0; flat];
            for w in 0..n {
                for (mk, v) in m.iter_mut().zip(&next[w * flat..(w + 1) * flat]) {
                    *mk += pi[w] * v;
                }
            }
            for w in 0..n {
                for (v, mk) in next[w * flat..(w + 1) * flat].iter_mut().zip(&m) {
                    *v -= mk;
                }
            }
            std::mem::swap(&mut g, &mut next);
        }
        let mut increment = 0.0f64;
        for w in 0..n {
            if !reachable[w] {
                continue;
            }
            let norm = spectral_norm(&DMatrix::from_column_slice(
                r,
                c,
                &g[w * flat..(w + 1) * flat],
            ));
            per_z_sum[w] += norm;
            increment = increment.max(norm);
        }
        partial.push(k0 + per_z_sum.iter().copied().fold(0.0, f64::max));
        if stabilized_at.is_none() && increment < tolerance {
            stabilized_at = Some(k);
        }
    }
    Ok(GordinReport {
        partial_sums: partial,
        stabilized_at,
        tolerance,
    })
}
