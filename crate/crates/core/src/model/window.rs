use crate::error::{Error, Result};

/// Largest window space the crate will enumerate.
pub const MAX_WINDOWS: usize = 1 << 28;

/// A window `h_t = (y_t, ..., y_{t-N}; u_{t-1}, ..., u_{t-N})`, newest first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WindowState {
    pub observations: Vec<usize>,
    pub actions: Vec<usize>,
}

impl WindowState {
    pub fn memory(&self) -> usize {
        self.actions.len()
    }
}

/// The encoded window space for given alphabet sizes and memory `N`.
///
/// Encoding is mixed radix with the observation block as the high digits:
/// `index = obs * |U|^N + act`, where `obs` reads `y_t, ..., y_{t-N}` as base
/// `|Y|` digits (most significant first) and `act` reads `u_{t-1}, ...,
/// u_{t-N}` as base `|U|` digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpace {
    num_obs: usize,
    num_actions: usize,
    memory: usize,
    /// `|Y|^N`
    obs_top: usize,
    /// `|U|^N`
    act_count: usize,
    size: usize,
}

impl WindowSpace {
    pub fn new(num_obs: usize, num_actions: usize, memory: usize) -> Result<Self> {
        if num_obs == 0 || num_actions == 0 {
            return Err(Error::validation("window", "alphabets must be non-empty"));
        }
        let pow = |b: usize, e: usize| -> Option<usize> {
            (0..e).try_fold(1usize, |acc, _| acc.checked_mul(b))
        };
        let size = pow(num_obs, memory + 1)
            .zip(pow(num_actions, memory))
            .and_then(|(a, b)| a.checked_mul(b))
            .filter(|&s| s <= MAX_WINDOWS);
        let Some(size) = size else {
            return Err(Error::Budget {
                what: "window states",
                required: (num_obs as f64).powi(memory as i32 + 1)
                    * (num_actions as f64).powi(memory as i32),
                budget: MAX_WINDOWS,
            });
        };
        Ok(Self {
            num_obs,
            num_actions,
            memory,
            obs_top: num_obs.pow(memory as u32),
            act_count: num_actions.pow(memory as u32),
            size,
        })
    }

    pub fn for_spec(spec: &super::PomdpSpec, memory: usize) -> Result<Self> {
        Self::new(spec.num_obs(), spec.num_actions(), memory)
    }

    /// `|Y|^{N+1} |U|^N`.
    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn num_obs(&self) -> usize {
        self.num_obs
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn encode(&self, w: &WindowState) -> Result<usize> {
        if w.observations.len() != self.memory + 1 || w.actions.len() != self.memory {
            return Err(Error::validation(
                "window",
                format!(
                    "expected {} observations and {} actions, found {} and {}",
                    self.memory + 1,
                    self.memory,
                    w.observations.len(),
                    w.actions.len()
                ),
            ));
        }
        let mut obs = 0;
        for &y in &w.observations {
            if y >= self.num_obs {
                return Err(Error::validation(
                    "window",
                    format!("observation {y} out of range"),
                ));
            }
            obs = obs * self.num_obs + y;
        }
        let mut act = 0;
        for &u in &w.actions {
            if u >= self.num_actions {
                return Err(Error::validation(
                    "window",
                    format!("action {u} out of range"),
                ));
            }
            act = act * self.num_actions + u;
        }
        Ok(obs * self.act_count + act)
    }

    /// The window space over merged observations and the map sending each
    /// window here to its image, observations relabelled by `obs_bins` and
    /// actions kept.
    pub fn map_observations(&self, obs_bins: &[usize]) -> Result<(WindowSpace, Vec<usize>)> {
        if obs_bins.len() != self.num_obs {
            return Err(Error::validation(
                "obs_bins",
                format!(
                    "expected {} entries, found {}",
                    self.num_obs,
                    obs_bins.len()
                ),
            ));
        }
        let nb = crate::model::dense_bin_count("obs_bins", obs_bins)?;
        let target = WindowSpace::new(nb, self.num_actions, self.memory)?;
        let map = (0..self.size)
            .map(|h| {
                let mut w = self.decode(h)?;
                w.observations.iter_mut().for_each(|y| *y = obs_bins[*y]);
                target.encode(&w)
            })
            .collect::<Result<_>>()?;
        Ok((target, map))
    }

    pub fn decode(&self, index: usize) -> Result<WindowState> {
        if index >= self.size {
            return Err(Error::validation(
                "window",
                format!("index {index} out of range for {} windows", self.size),
            ));
        }
        let (mut obs, mut act) = (index / self.act_count, index % self.act_count);
        let mut observations = vec![0; self.memory + 1];
        for slot in observations.iter_mut().rev() {
            *slot = obs % self.num_obs;
            obs /= self.num_obs;
        }
        let mut actions = vec![0; self.memory];
        for slot in actions.iter_mut().rev() {
            *slot = act % self.num_actions;
            act /= self.num_actions;
        }
        Ok(WindowState {
            observations,
            actions,
        })
    }

    /// Appends `y_new` and `u_new` (the action taken at the window's time),
    /// dropping the oldest observation and action.
    #[inline]
    pub fn shift(&self, index: usize, y_new: usize, u_new: usize) -> usize {
        debug_assert!(index < self.size && y_new < self.num_obs && u_new < self.num_actions);
        let (obs, act) = (index / self.act_count, index % self.act_count);
        let obs = y_new * self.obs_top + obs / self.num_obs;
        let act = if self.memory == 0 {
            0
        } else {
            u_new * (self.act_count / self.num_actions) + act / self.num_actions
        };
        obs * self.act_count + act
    }

    /// `y_t` of an encoded window.
    #[inline]
    pub fn newest_obs(&self, index: usize) -> usize {
        index / self.act_count / self.obs_top
    }

    /// `y_{t-N}` of an encoded window.
    #[inline]
    pub fn oldest_obs(&self, index: usize) -> usize {
        (index / self.act_count) % self.num_obs
    }

    /// The window whose every slot holds `y` and (for `N > 0`) action 0.
    pub fn constant(&self, y: usize) -> usize {
        let mut obs = 0;
        for _ in 0..=self.memory {
            obs = obs * self.num_obs + y;
        }
        obs * self.act_count
    }
}
