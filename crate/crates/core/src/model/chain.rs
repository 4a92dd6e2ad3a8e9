use super::policy::FiniteMemoryPolicy;
use super::spec::PomdpSpec;
use super::window::WindowSpace;
use crate::error::{Error, Result};
use crate::linalg::MarkovChain;

/// Index layout of the joint process `(h_t, x_t, u_t)`:
/// `(h * |X| + x) * |U| + u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JointSpace {
    pub windows: WindowSpace,
    pub num_states: usize,
    pub num_actions: usize,
}

impl JointSpace {
    pub fn new(spec: &PomdpSpec, memory: usize) -> Result<Self> {
        Ok(Self {
            windows: WindowSpace::for_spec(spec, memory)?,
            num_states: spec.num_states(),
            num_actions: spec.num_actions(),
        })
    }

    pub fn len(&self) -> usize {
        self.windows.len() * self.num_states * self.num_actions
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, h: usize, x: usize, u: usize) -> usize {
        (h * self.num_states + x) * self.num_actions + u
    }

    #[inline]
    pub fn split(&self, i: usize) -> (usize, usize, usize) {
        let u = i % self.num_actions;
        let hx = i / self.num_actions;
        (hx / self.num_states, hx % self.num_states, u)
    }
}

/// Transition matrix of `(h_t, x_t, u_t)` under `policy`:
/// `P((h,x,u) -> (h',x',u')) = T(x'|x,u) O(y'|x') gamma(u'|h')` with
/// `h' = shift(h, y', u)`.
pub fn build_joint_chain(
    spec: &PomdpSpec,
    policy: &FiniteMemoryPolicy,
    memory: usize,
) -> Result<(JointSpace, MarkovChain)> {
    let js = JointSpace::new(spec, memory)?;
    if policy.num_windows() != js.windows.len() || policy.num_actions() != spec.num_actions() {
        return Err(Error::validation(
            "policy",
            "table shape does not match the window space",
        ));
    }
    let (nx, ny, nu) = (spec.num_states(), spec.num_obs(), spec.num_actions());
    let mut rows = Vec::with_capacity(js.len());
    for h in 0..js.windows.len() {
        for x in 0..nx {
            for u in 0..nu {
                let mut row = Vec::new();
                for x2 in 0..nx {
                    let t = spec.t(x, u, x2);
                    if t == 0.0 {
                        continue;
                    }
                    for y2 in 0..ny {
                        let o = spec.o(x2, y2);
                        if o == 0.0 {
                            continue;
                        }
                        let h2 = js.windows.shift(h, y2, u);
                        for (u2, &g) in policy.probs(h2).iter().enumerate() {
                            if g > 0.0 {
                                row.push((js.index(h2, x2, u2), t * o * g));
                            }
                        }
                    }
                }
                rows.push(row);
            }
        }
    }
    Ok((js, MarkovChain::from_rows(rows)?))
}

/// Law of `(h_0, x_0)` after the burn-in: `x_{-N}` from the prior, `N`
/// actions from `burn_in`. Indexed `h * |X| + x`.
pub fn initial_window_distribution(
    spec: &PomdpSpec,
    memory: usize,
    burn_in: &[f64],
) -> Result<Vec<f64>> {
    let w = WindowSpace::for_spec(spec, memory)?;
    let nx = spec.num_states();
    let mut d = vec![0.0; w.len() * nx];
    for x in 0..nx {
        for y in 0..spec.num_obs() {
            d[w.constant(y) * nx + x] += spec.prior()[x] * spec.o(x, y);
        }
    }
    for _ in 0..memory {
        let mut next = vec![0.0; d.len()];
        for (i, &p) in d.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let (h, x) = (i / nx, i % nx);
            for (u, &b) in burn_in.iter().enumerate() {
                if b == 0.0 {
                    continue;
                }
                for x2 in 0..nx {
                    let t = spec.t(x, u, x2);
                    if t == 0.0 {
                        continue;
                    }
                    for y2 in 0..spec.num_obs() {
                        let o = spec.o(x2, y2);
                        if o > 0.0 {
                            next[w.shift(h, y2, u) * nx + x2] += p * b * t * o;
                        }
                    }
                }
            }
        }
        d = next;
    }
    Ok(d)
}
