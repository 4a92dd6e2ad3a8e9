use serde::Serialize;

use super::{LearningRate, LinearQ, TabularQ, Td0};
use crate::error::{Error, Result};
use crate::features::{FeatureBasis, Quantizer};
use crate::linalg::{norm2, sup_norm};
use crate::model::{FiniteMemoryPolicy, PomdpSpec, Simulator};

/// Where records come from: one seeded simulation of a POMDP under a window
/// policy.
#[derive(Debug, Clone, Copy)]
pub struct RecordSource<'a> {
    pub spec: &'a PomdpSpec,
    pub policy: &'a FiniteMemoryPolicy,
    pub memory: usize,
    pub burn_in: &'a [f64],
    pub n_steps: u64,
    pub seed: u64,
}

impl<'a> RecordSource<'a> {
    pub fn records(&self) -> Result<Simulator<'a>> {
        Simulator::new(
            self.spec,
            self.policy,
            self.memory,
            self.burn_in,
            self.n_steps,
            self.seed,
        )
    }
}

/// Snapshots of an iterate at checkpoint steps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTrace {
    pub steps: Vec<u64>,
    pub snapshots: Vec<Vec<f64>>,
    /// Distance to the oracle target, when one was supplied.
    pub distances: Vec<Option<f64>>,
    /// `(step, ||theta||)` when the divergence sentinel fired.
    pub divergence: Option<(u64, f64)>,
}

impl ConvergenceTrace {
    fn new() -> Self {
        Self {
            steps: Vec::new(),
            snapshots: Vec::new(),
            distances: Vec::new(),
            divergence: None,
        }
    }

    fn push(&mut self, step: u64, x: &[f64], distance: Option<f64>) {
        if self.steps.last() == Some(&step) {
            return;
        }
        self.steps.push(step);
        self.snapshots.push(x.to_vec());
        self.distances.push(distance);
    }

    pub fn final_snapshot(&self) -> Option<&[f64]> {
        self.snapshots.last().map(Vec::as_slice)
    }

    pub fn final_distance(&self) -> Option<f64> {
        self.distances.last().copied().flatten()
    }

    pub fn diverged(&self) -> bool {
        self.divergence.is_some()
    }
}

fn check_checkpoints(checkpoints: &[u64], n_steps: u64) -> Result<()> {
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::validation(
            "checkpoints",
            "must be strictly increasing",
        ));
    }
    if checkpoints.last().is_some_and(|&c| c > n_steps) || checkpoints.first() == Some(&0) {
        return Err(Error::validation(
            "checkpoints",
            format!("must lie in 1..={n_steps}"),
        ));
    }
    Ok(())
}

/// Euclidean distance.
pub fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm2(&d)
}

/// Sup distance over the entries where `target` is finite.
pub fn sup_distance(a: &[f64], target: &[f64]) -> f64 {
    let d: Vec<f64> = a
        .iter()
        .zip(target)
        .filter(|(_, t)| t.is_finite())
        .map(|(x, t)| x - t)
        .collect();
    sup_norm(&d)
}

/// Drives a linear learner over the record stream. The final step is always
/// recorded; on divergence the trace stops at the offending step.
fn run_linear<F>(
    source: &RecordSource,
    checkpoints: &[u64],
    target: Option<&[f64]>,
    theta0: Vec<f64>,
    mut update: F,
) -> Result<ConvergenceTrace>
where
    F: FnMut(&mut Vec<f64>, &crate::model::TransitionRecord) -> Result<()>,
{
    check_checkpoints(checkpoints, source.n_steps)?;
    let mut theta = theta0;
    let mut trace = ConvergenceTrace::new();
    let mut next_cp = checkpoints.iter().copied().peekable();
    let dist = |th: &[f64]| target.map(|t| l2_distance(th, t));
    for (i, rec) in source.records()?.enumerate() {
        let step = i as u64 + 1;
        match update(&mut theta, &rec) {
            Ok(()) => {}
            Err(Error::Divergence { step, norm }) => {
                trace.push(step, &theta, dist(&theta));
                trace.divergence = Some((step, norm));
                return Ok(trace);
            }
            Err(e) => return Err(e),
        }
        if next_cp.peek() == Some(&step) {
            next_cp.next();
            trace.push(step, &theta, dist(&theta));
        }
    }
    trace.push(source.n_steps, &theta, dist(&theta));
    Ok(trace)
}

/// Step sizes, discount, checkpoints, oracle target and start point of a
/// learner run.
#[derive(Debug, Clone, Copy)]
pub struct RunOptions<'a> {
    pub schedule: LearningRate,
    pub beta: f64,
    pub checkpoints: &'a [u64],
    /// Oracle target; adds distances to the trace.
    pub target: Option<&'a [f64]>,
    /// Initial iterate; zeros when absent.
    pub init: Option<&'a [f64]>,
}

fn initial(opts: &RunOptions, len: usize) -> Result<Vec<f64>> {
    match opts.init {
        Some(v) if v.len() != len => Err(Error::validation(
            "learner.init",
            format!("expected {len} entries, found {}", v.len()),
        )),
        Some(v) => Ok(v.to_vec()),
        None => Ok(vec![0.0; len]),
    }
}

/// TD(0) over one simulated stream; distances are Euclidean.
pub fn run_td0(
    source: &RecordSource,
    basis: &FeatureBasis,
    opts: &RunOptions,
) -> Result<ConvergenceTrace> {
    let theta0 = initial(opts, basis.dim())?;
    let mut learner = Td0::with_theta(theta0.clone(), opts.schedule)?;
    run_linear(
        source,
        opts.checkpoints,
        opts.target,
        theta0,
        |theta, rec| {
            learner.update(rec, basis, opts.beta)?;
            theta.copy_from_slice(learner.theta());
            Ok(())
        },
    )
}

/// Linear Q-learning over one simulated stream; `basis` is over
/// state-action pairs.
pub fn run_linear_q(
    source: &RecordSource,
    basis: &FeatureBasis,
    opts: &RunOptions,
) -> Result<ConvergenceTrace> {
    let theta0 = initial(opts, basis.dim())?;
    let mut learner =
        LinearQ::with_theta(theta0.clone(), source.spec.num_actions(), opts.schedule)?;
    run_linear(
        source,
        opts.checkpoints,
        opts.target,
        theta0,
        |theta, rec| {
            learner.update(rec, basis, opts.beta)?;
            theta.copy_from_slice(learner.theta());
            Ok(())
        },
    )
}

/// Tabular Q-learning over one simulated stream. The target (usually `Q*`
/// of the quantized stationary MDP, with non-finite entries for cells to
/// ignore) adds sup-norm distances to the trace.
pub fn run_tabular_q(
    source: &RecordSource,
    quantizer: &Quantizer,
    opts: &RunOptions,
) -> Result<(ConvergenceTrace, TabularQ)> {
    check_checkpoints(opts.checkpoints, source.n_steps)?;
    let nu = source.spec.num_actions();
    let q0 = initial(opts, quantizer.num_bins() * nu)?;
    let mut learner = TabularQ::with_values(q0, nu, opts.schedule)?;
    let mut trace = ConvergenceTrace::new();
    let mut next_cp = opts.checkpoints.iter().copied().peekable();
    let dist = |q: &[f64]| opts.target.map(|t| sup_distance(q, t));
    for (i, rec) in source.records()?.enumerate() {
        let step = i as u64 + 1;
        learner.update(&rec, quantizer, opts.beta);
        if next_cp.peek() == Some(&step) {
            next_cp.next();
            trace.push(step, learner.values(), dist(learner.values()));
        }
    }
    trace.push(source.n_steps, learner.values(), dist(learner.values()));
    Ok((trace, learner))
}
