use std::path::Path;

use serde::Deserialize;
use toml::Spanned;

use crate::error::{Error, Result};
use crate::linalg::check_distribution;

/// Tolerance on row sums of every probability table.
pub const ROW_TOL: f64 = 1e-12;

/// A finite POMDP: hidden states `x`, observations `y`, actions `u`.
///
/// Tables are stored flat and row-major: `transition[(x * nu + u) * nx + x']`,
/// `observation[x * ny + y]`, `cost[x * nu + u]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PomdpSpec {
    num_states: usize,
    num_obs: usize,
    num_actions: usize,
    transition: Vec<f64>,
    observation: Vec<f64>,
    cost: Vec<f64>,
    prior: Vec<f64>,
}

impl PomdpSpec {
    /// Builds a spec from nested tables `transition[x][u][x']`,
    /// `observation[x][y]`, `cost[x][u]`.
    pub fn new(
        transition: Vec<Vec<Vec<f64>>>,
        observation: Vec<Vec<f64>>,
        cost: Vec<Vec<f64>>,
        prior: Vec<f64>,
    ) -> Result<Self> {
        let nx = transition.len();
        if nx == 0 {
            return Err(Error::validation(
                "transition",
                "at least one state required",
            ));
        }
        let nu = transition[0].len();
        let ny = observation.first().map_or(0, Vec::len);
        let mut t = Vec::with_capacity(nx * nu * nx);
        for (x, rows) in transition.iter().enumerate() {
            if rows.len() != nu {
                return Err(Error::validation(
                    format!("transition[{x}]"),
                    format!("expected {nu} action rows, found {}", rows.len()),
                ));
            }
            for (u, row) in rows.iter().enumerate() {
                if row.len() != nx {
                    return Err(Error::validation(
                        format!("transition[{x}][{u}]"),
                        format!("expected {nx} entries, found {}", row.len()),
                    ));
                }
                t.extend_from_slice(row);
            }
        }
        let mut o = Vec::with_capacity(nx * ny);
        if observation.len() != nx {
            return Err(Error::validation(
                "observation",
                format!("expected {nx} rows, found {}", observation.len()),
            ));
        }
        for (x, row) in observation.iter().enumerate() {
            if row.len() != ny {
                return Err(Error::validation(
                    format!("observation[{x}]"),
                    format!("expected {ny} entries, found {}", row.len()),
                ));
            }
            o.extend_from_slice(row);
        }
        if cost.len() != nx {
            return Err(Error::validation(
                "cost",
                format!("expected {nx} rows, found {}", cost.len()),
            ));
        }
        let mut c = Vec::with_capacity(nx * nu);
        for (x, row) in cost.iter().enumerate() {
            if row.len() != nu {
                return Err(Error::validation(
                    format!("cost[{x}]"),
                    format!("expected {nu} entries, found {}", row.len()),
                ));
            }
            c.extend_from_slice(row);
        }
        Self::from_flat(nx, ny, nu, t, o, c, prior)
    }

    pub fn from_flat(
        num_states: usize,
        num_obs: usize,
        num_actions: usize,
        transition: Vec<f64>,
        observation: Vec<f64>,
        cost: Vec<f64>,
        prior: Vec<f64>,
    ) -> Result<Self> {
        let (nx, ny, nu) = (num_states, num_obs, num_actions);
        if nx == 0 || ny == 0 || nu == 0 {
            return Err(Error::validation(
                "dimensions",
                format!("num_states={nx}, num_obs={ny}, num_actions={nu} must all be positive"),
            ));
        }
        let expect = |name: &str, got: usize, want: usize| {
            if got == want {
                Ok(())
            } else {
                Err(Error::validation(
                    name,
                    format!("expected {want} entries, found {got}"),
                ))
            }
        };
        expect("transition", transition.len(), nx * nu * nx)?;
        expect("observation", observation.len(), nx * ny)?;
        expect("cost", cost.len(), nx * nu)?;
        expect("prior", prior.len(), nx)?;
        for x in 0..nx {
            for u in 0..nu {
                let row = &transition[(x * nu + u) * nx..(x * nu + u + 1) * nx];
                check_distribution(&format!("transition[{x}][{u}]"), row, ROW_TOL)?;
            }
            check_distribution(
                &format!("observation[{x}]"),
                &observation[x * ny..(x + 1) * ny],
                ROW_TOL,
            )?;
        }
        if let Some(i) = cost.iter().position(|c| !c.is_finite()) {
            return Err(Error::validation(
                format!("cost[{}][{}]", i / nu, i % nu),
                "cost must be finite",
            ));
        }
        check_distribution("prior", &prior, ROW_TOL)?;
        Ok(Self {
            num_states,
            num_obs,
            num_actions,
            transition,
            observation,
            cost,
            prior,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_obs(&self) -> usize {
        self.num_obs
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    /// `T(x' | x, u)`.
    #[inline]
    pub fn t(&self, x: usize, u: usize, x_next: usize) -> f64 {
        self.transition[(x * self.num_actions + u) * self.num_states + x_next]
    }

    /// Row `T(. | x, u)`.
    #[inline]
    pub fn t_row(&self, x: usize, u: usize) -> &[f64] {
        let start = (x * self.num_actions + u) * self.num_states;
        &self.transition[start..start + self.num_states]
    }

    /// `O(y | x)`.
    #[inline]
    pub fn o(&self, x: usize, y: usize) -> f64 {
        self.observation[x * self.num_obs + y]
    }

    #[inline]
    pub fn o_row(&self, x: usize) -> &[f64] {
        &self.observation[x * self.num_obs..(x + 1) * self.num_obs]
    }

    #[inline]
    pub fn c(&self, x: usize, u: usize) -> f64 {
        self.cost[x * self.num_actions + u]
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn transition_table(&self) -> &[f64] {
        &self.transition
    }

    pub fn observation_table(&self) -> &[f64] {
        &self.observation
    }

    pub fn cost_table(&self) -> &[f64] {
        &self.cost
    }

    /// `||c||_inf`.
    pub fn cost_sup(&self) -> f64 {
        self.cost.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn with_prior(&self, prior: Vec<f64>) -> Result<Self> {
        check_distribution("prior", &prior, ROW_TOL)?;
        if prior.len() != self.num_states {
            return Err(Error::validation(
                "prior",
                format!(
                    "expected {} entries, found {}",
                    self.num_states,
                    prior.len()
                ),
            ));
        }
        Ok(Self {
            prior,
            ..self.clone()
        })
    }

    /// Replaces the observation channel by `O'(b | x) = sum_{y in bin b} O(y | x)`.
    pub fn quantize_observations(&self, obs_bins: &[usize]) -> Result<Self> {
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
        let nb = dense_bin_count("obs_bins", obs_bins)?;
        let mut o = vec![0.0; self.num_states * nb];
        for x in 0..self.num_states {
            for (y, &b) in obs_bins.iter().enumerate() {
                o[x * nb + b] += self.o(x, y);
            }
        }
        Self::from_flat(
            self.num_states,
            nb,
            self.num_actions,
            self.transition.clone(),
            o,
            self.cost.clone(),
            self.prior.clone(),
        )
    }
}

/// Number of bins in a 0-based assignment, requiring every bin to be used.
pub(crate) fn dense_bin_count(path: &str, bins: &[usize]) -> Result<usize> {
    let nb = bins.iter().copied().max().map_or(0, |m| m + 1);
    let mut used = vec![false; nb];
    for &b in bins {
        used[b] = true;
    }
    if let Some(b) = used.iter().position(|u| !u) {
        return Err(Error::validation(path, format!("bin {b} is empty")));
    }
    Ok(nb)
}

/// A model file: the POMDP, the memory length and an optional observation
/// metric.
///
/// ```toml
/// num_states = 2
/// num_obs = 2
/// num_actions = 2
/// memory = 1
/// prior = [0.5, 0.5]
/// # one row per (x, u), x-major
/// transition = [[0.9, 0.1], [0.2, 0.8], [0.9, 0.1], [0.2, 0.8]]
/// observation = [[0.8, 0.2], [0.2, 0.8]]
/// cost = [[0.0, 1.0], [1.0, 0.0]]
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub spec: PomdpSpec,
    pub memory: usize,
    /// Points on the real line giving the observation metric `|p_y - p_y'|`.
    pub obs_points: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    num_states: usize,
    num_obs: usize,
    num_actions: usize,
    #[serde(default)]
    memory: usize,
    prior: Spanned<Vec<f64>>,
    transition: Vec<Spanned<Vec<f64>>>,
    observation: Vec<Spanned<Vec<f64>>>,
    cost: Vec<Spanned<Vec<f64>>>,
    #[serde(default)]
    obs_points: Option<Spanned<Vec<f64>>>,
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())]
        .bytes()
        .filter(|&b| b == b'\n')
        .count()
        + 1
}

impl ModelFile {
    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&src, &path.display().to_string())
    }

    /// Parses a model document. `origin` prefixes error locations.
    pub fn parse(src: &str, origin: &str) -> Result<Self> {
        let raw: RawModel = toml::from_str(src).map_err(|e| {
            let line = e.span().map(|s| line_of(src, s.start)).unwrap_or(0);
            Error::validation(
                format!("{origin}:{line}"),
                e.message().trim_end().to_string(),
            )
        })?;
        let at = |s: &Spanned<Vec<f64>>| format!("{origin}:{}", line_of(src, s.span().start));
        let (nx, ny, nu) = (raw.num_states, raw.num_obs, raw.num_actions);
        if nx == 0 || ny == 0 || nu == 0 {
            return Err(Error::validation(
                format!("{origin}: dimensions"),
                "num_states, num_obs and num_actions must be positive",
            ));
        }
        let row_check = |name: &str, idx: String, s: &Spanned<Vec<f64>>, len: usize| {
            let row = s.get_ref();
            if row.len() != len {
                return Err(Error::validation(
                    at(s),
                    format!("{name}{idx} has {} entries, expected {len}", row.len()),
                ));
            }
            check_distribution(&format!("{name}{idx}"), row, ROW_TOL)
                .map_err(|e| Error::validation(at(s), strip_invalid(e)))
        };
        if raw.transition.len() != nx * nu {
            return Err(Error::validation(
                format!("{origin}: transition"),
                format!(
                    "expected {} rows (one per state-action pair), found {}",
                    nx * nu,
                    raw.transition.len()
                ),
            ));
        }
        let mut t = Vec::with_capacity(nx * nu * nx);
        for (i, row) in raw.transition.iter().enumerate() {
            row_check(
                "transition",
                format!("[x={}][u={}]", i / nu, i % nu),
                row,
                nx,
            )?;
            t.extend_from_slice(row.get_ref());
        }
        if raw.observation.len() != nx {
            return Err(Error::validation(
                format!("{origin}: observation"),
                format!("expected {nx} rows, found {}", raw.observation.len()),
            ));
        }
        let mut o = Vec::with_capacity(nx * ny);
        for (x, row) in raw.observation.iter().enumerate() {
            row_check("observation", format!("[x={x}]"), row, ny)?;
            o.extend_from_slice(row.get_ref());
        }
        if raw.cost.len() != nx {
            return Err(Error::validation(
                format!("{origin}: cost"),
                format!("expected {nx} rows, found {}", raw.cost.len()),
            ));
        }
        let mut c = Vec::with_capacity(nx * nu);
        for (x, row) in raw.cost.iter().enumerate() {
            if row.get_ref().len() != nu {
                return Err(Error::validation(
                    at(row),
                    format!(
                        "cost[x={x}] has {} entries, expected {nu}",
                        row.get_ref().len()
                    ),
                ));
            }
            if row.get_ref().iter().any(|v| !v.is_finite()) {
                return Err(Error::validation(
                    at(row),
                    format!("cost[x={x}] is not finite"),
                ));
            }
            c.extend_from_slice(row.get_ref());
        }
        row_check("prior", String::new(), &raw.prior, nx)?;
        let obs_points = match &raw.obs_points {
            Some(p) if p.get_ref().len() != ny => {
                return Err(Error::validation(
                    at(p),
                    format!(
                        "obs_points has {} entries, expected {ny}",
                        p.get_ref().len()
                    ),
                ))
            }
            Some(p) => Some(p.get_ref().clone()),
            None => None,
        };
        let spec = PomdpSpec::from_flat(nx, ny, nu, t, o, c, raw.prior.into_inner())?;
        Ok(Self {
            spec,
            memory: raw.memory,
            obs_points,
        })
    }

    /// Serializes back to the file format.
    pub fn to_toml(&self) -> String {
        let s = &self.spec;
        let row = |v: &[f64]| {
            let items: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
            format!("[{}]", items.join(", "))
        };
        let mut out = format!(
            "num_states = {}\nnum_obs = {}\nnum_actions = {}\nmemory = {}\nprior = {}\n",
            s.num_states,
            s.num_obs,
            s.num_actions,
            self.memory,
            row(&s.prior)
        );
        out.push_str("transition = [\n");
        for x in 0..s.num_states {
            for u in 0..s.num_actions {
                out.push_str(&format!("  {},\n", row(s.t_row(x, u))));
            }
        }
        out.push_str("]\nobservation = [\n");
        for x in 0..s.num_states {
            out.push_str(&format!("  {},\n", row(s.o_row(x))));
        }
        out.push_str("]\ncost = [\n");
        for x in 0..s.num_states {
            out.push_str(&format!(
                "  {},\n",
                row(&s.cost[x * s.num_actions..(x + 1) * s.num_actions])
            ));
        }
        out.push_str("]\n");
        if let Some(p) = &self.obs_points {
            out.push_str(&format!("obs_points = {}\n", row(p)));
        }
        out
    }
}

fn strip_invalid(e: Error) -> String {
    match e {
        Error::Validation { path, message } => format!("{path} {message}"),
        other => other.to_string(),
    }
}
