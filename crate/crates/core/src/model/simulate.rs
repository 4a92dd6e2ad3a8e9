use super::policy::FiniteMemoryPolicy;
use super::spec::PomdpSpec;
use super::window::WindowSpace;
use crate::error::{Error, Result};
use crate::rng::{sample_index, stream, Purpose, StreamRng};

/// One observed transition `Z_t = (S_{t+1}, S_t, C_t, U_t)` with encoded
/// windows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionRecord {
    pub s_next: usize,
    pub s: usize,
    pub cost: f64,
    pub action: usize,
}

/// Lazy record stream of a POMDP run under a finite-memory policy.
///
/// The hidden state at time `-N` is drawn from the prior; the burn-in
/// distribution picks the first `N` actions, which produce no records.
pub struct Simulator<'a> {
    spec: &'a PomdpSpec,
    policy: &'a FiniteMemoryPolicy,
    windows: WindowSpace,
    rng: StreamRng,
    x: usize,
    h: usize,
    pending_action: Option<usize>,
    remaining: u64,
}

impl<'a> Simulator<'a> {
    pub fn new(
        spec: &'a PomdpSpec,
        policy: &'a FiniteMemoryPolicy,
        memory: usize,
        burn_in: &[f64],
        n_steps: u64,
        seed: u64,
    ) -> Result<Self> {
        let rng = stream(seed, Purpose::Simulation, 0);
        Self::with_rng(spec, policy, memory, burn_in, n_steps, rng)
    }

    /// As [`Simulator::new`] drawing from a caller-supplied stream.
    pub fn with_rng(
        spec: &'a PomdpSpec,
        policy: &'a FiniteMemoryPolicy,
        memory: usize,
        burn_in: &[f64],
        n_steps: u64,
        mut rng: StreamRng,
    ) -> Result<Self> {
        let windows = check_inputs(spec, policy, memory)?;
        if burn_in.len() != spec.num_actions() {
            return Err(Error::validation(
                "burn_in",
                "length differs from action count",
            ));
        }
        crate::linalg::check_distribution("burn_in", burn_in, super::spec::ROW_TOL)?;
        let mut x = sample_index(&mut rng, spec.prior());
        let y = sample_index(&mut rng, spec.o_row(x));
        let mut h = windows.constant(y);
        for _ in 0..memory {
            let u = sample_index(&mut rng, burn_in);
            x = sample_index(&mut rng, spec.t_row(x, u));
            let y = sample_index(&mut rng, spec.o_row(x));
            h = windows.shift(h, y, u);
        }
        Ok(Self {
            spec,
            policy,
            windows,
            rng,
            x,
            h,
            pending_action: None,
            remaining: n_steps,
        })
    }

    /// Starts from a given joint state `(h, x, u)`; `u` is the action about
    /// to be taken at `h`.
    pub fn from_joint(
        spec: &'a PomdpSpec,
        policy: &'a FiniteMemoryPolicy,
        memory: usize,
        (h, x, u): (usize, usize, usize),
        n_steps: u64,
        seed: u64,
        index: u64,
    ) -> Result<Self> {
        let windows = check_inputs(spec, policy, memory)?;
        if h >= windows.len() || x >= spec.num_states() || u >= spec.num_actions() {
            return Err(Error::validation("joint state", "index out of range"));
        }
        Ok(Self {
            spec,
            policy,
            windows,
            rng: stream(seed, Purpose::Simulation, index),
            x,
            h,
            pending_action: Some(u),
            remaining: n_steps,
        })
    }

    pub fn windows(&self) -> &WindowSpace {
        &self.windows
    }

    /// Current `(h, x)`. Exposes the hidden state for cross-checks only.
    pub fn hidden_state(&self) -> (usize, usize) {
        (self.h, self.x)
    }
}

fn check_inputs(
    spec: &PomdpSpec,
    policy: &FiniteMemoryPolicy,
    memory: usize,
) -> Result<WindowSpace> {
    let windows = WindowSpace::for_spec(spec, memory)?;
    if policy.num_windows() != windows.len() || policy.num_actions() != spec.num_actions() {
        return Err(Error::validation(
            "policy",
            format!(
                "table is {}x{}, model needs {}x{}",
                policy.num_windows(),
                policy.num_actions(),
                windows.len(),
                spec.num_actions()
            ),
        ));
    }
    Ok(windows)
}

impl Iterator for Simulator<'_> {
    type Item = TransitionRecord;

    fn next(&mut self) -> Option<TransitionRecord> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let u = match self.pending_action.take() {
            Some(u) => u,
            None => self.policy.sample(self.h, &mut self.rng),
        };
        let cost = self.spec.c(self.x, u);
        let x_next = sample_index(&mut self.rng, self.spec.t_row(self.x, u));
        let y_next = sample_index(&mut self.rng, self.spec.o_row(x_next));
        let s = self.h;
        self.h = self.windows.shift(s, y_next, u);
        self.x = x_next;
        Some(TransitionRecord {
            s_next: self.h,
            s,
            cost,
            action: u,
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = usize::try_from(self.remaining).unwrap_or(usize::MAX);
        (n, Some(n))
    }
}
