use super::bellman::{ValueSolution, VI_CAP};
use crate::error::{Error, Result};
use crate::model::{initial_window_distribution, FiniteMemoryPolicy, PomdpSpec, WindowSpace};

/// Exact value `V(h, x)` of a window policy on the true POMDP, indexed
/// `h * |X| + x`, by value iteration until `||T V - V||_inf < tol`.
///
/// `V(h,x) = sum_u gamma(u|h) [c(x,u) + beta sum_{x',y'} T(x'|x,u) O(y'|x') V(shift(h,y',u), x')]`.
pub fn evaluate_policy_exact(
    spec: &PomdpSpec,
    policy: &FiniteMemoryPolicy,
    memory: usize,
    beta: f64,
    tol: f64,
) -> Result<ValueSolution> {
    let w = WindowSpace::for_spec(spec, memory)?;
    if policy.num_windows() != w.len() || policy.num_actions() != spec.num_actions() {
        return Err(Error::validation(
            "policy",
            "table shape does not match the window space",
        ));
    }
    let (nx, ny) = (spec.num_states(), spec.num_obs());
    // sparse successor lists per (h, x, u)
    let mut succ: Vec<Vec<(usize, f64)>> = Vec::with_capacity(w.len() * nx * spec.num_actions());
    for h in 0..w.len() {
        for x in 0..nx {
            for u in 0..spec.num_actions() {
                let mut row = Vec::new();
                if policy.prob(h, u) > 0.0 {
                    for x2 in 0..nx {
                        let t = spec.t(x, u, x2);
                        if t == 0.0 {
                            continue;
                        }
                        for y2 in 0..ny {
                            let o = spec.o(x2, y2);
                            if o > 0.0 {
                                row.push((w.shift(h, y2, u) * nx + x2, t * o));
                            }
                        }
                    }
                }
                succ.push(row);
            }
        }
    }
    let nu = spec.num_actions();
    let mut v = vec![0.0; w.len() * nx];
    let mut next = vec![0.0; v.len()];
    for it in 1..=VI_CAP {
        for (i, out) in next.iter_mut().enumerate() {
            let (h, x) = (i / nx, i % nx);
            *out = (0..nu)
                .filter(|&u| policy.prob(h, u) > 0.0)
                .map(|u| {
                    let ev: f64 = succ[i * nu + u].iter().map(|&(j, p)| p * v[j]).sum();
                    policy.prob(h, u) * (spec.c(x, u) + beta * ev)
                })
                .sum();
        }
        let residual = next
            .iter()
            .zip(&v)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        std::mem::swap(&mut v, &mut next);
        if residual < tol {
            return Ok(ValueSolution {
                values: v,
                iterations: it,
                residual,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: VI_CAP,
        change: f64::NAN,
    })
}

/// Initial windows after the burn-in: `P(h_0)` and the conditional law
/// `P(x_0 | h_0)` (rows of zero-mass windows are zero).
#[derive(Debug, Clone, PartialEq)]
pub struct InitialWindows {
    pub mass: Vec<f64>,
    pub posterior: Vec<f64>,
    pub num_states: usize,
}

impl InitialWindows {
    pub fn new(spec: &PomdpSpec, memory: usize, burn_in: &[f64]) -> Result<Self> {
        let d = initial_window_distribution(spec, memory, burn_in)?;
        let nx = spec.num_states();
        let nh = d.len() / nx;
        let mut mass = vec![0.0; nh];
        let mut posterior = d;
        for h in 0..nh {
            let row = &mut posterior[h * nx..(h + 1) * nx];
            mass[h] = row.iter().sum();
            if mass[h] > 0.0 {
                let z = mass[h];
                row.iter_mut().for_each(|p| *p /= z);
            }
        }
        Ok(Self {
            mass,
            posterior,
            num_states: nx,
        })
    }

    pub fn posterior(&self, h: usize) -> &[f64] {
        &self.posterior[h * self.num_states..(h + 1) * self.num_states]
    }

    /// `J(z_0) = sum_x P(x | h_0) V(h_0, x)` for every initial window.
    pub fn values(&self, v: &[f64]) -> Vec<f64> {
        (0..self.mass.len())
            .map(|h| {
                self.posterior(h)
                    .iter()
                    .zip(&v[h * self.num_states..(h + 1) * self.num_states])
                    .map(|(p, x)| p * x)
                    .sum()
            })
            .collect()
    }
}
