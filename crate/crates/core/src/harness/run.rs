use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Value};

use super::config::LearnerKind;
use super::experiment::Experiment;
use super::output::{write_json, write_text, Cell, Table};
use super::pipeline::{compute_oracle, OracleOutputs, BOUND_TOL};
use crate::error::Result;
use crate::learners::{
    run_linear_q, run_tabular_q, run_td0, ConvergenceTrace, RecordSource, RunOptions,
};
use crate::linalg::norm2;

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Ok = 0,
    Validation = 1,
    /// At least one seed hit the divergence sentinel and every bound held.
    Divergence = 2,
    BoundViolation = 3,
    /// `compare` found differences beyond tolerance.
    Mismatch = 4,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

/// One seed's learner run.
#[derive(Debug, Clone)]
pub struct SeedResult {
    pub seed: u64,
    pub trace: ConvergenceTrace,
    /// Tabular cells never visited.
    pub starved: Vec<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub oracle: OracleOutputs,
    pub seeds: Vec<SeedResult>,
}

impl RunReport {
    pub fn status(&self) -> ExitStatus {
        if self.oracle.bound_violated() {
            ExitStatus::BoundViolation
        } else if self.seeds.iter().any(|s| s.trace.diverged()) {
            ExitStatus::Divergence
        } else {
            ExitStatus::Ok
        }
    }
}

/// Runs every seed of an experiment against its oracle.
pub fn run_experiment(exp: &Experiment) -> Result<RunReport> {
    let oracle = compute_oracle(exp)?;
    let seeds = exp
        .config
        .seeds
        .par_iter()
        .map(|&seed| run_seed(exp, &oracle, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(RunReport { oracle, seeds })
}

/// One learner run on the record stream of `seed`.
pub fn run_seed(exp: &Experiment, oracle: &OracleOutputs, seed: u64) -> Result<SeedResult> {
    let source = RecordSource {
        spec: exp.spec(),
        policy: &exp.policy,
        memory: exp.memory,
        burn_in: &exp.burn_in,
        n_steps: exp.config.n_steps,
        seed,
    };
    let checkpoints = exp.config.checkpoint_grid();
    let opts = RunOptions {
        schedule: exp.config.learner.schedule(),
        beta: exp.beta(),
        checkpoints: &checkpoints,
        target: oracle.target.as_deref(),
        init: exp.config.learner.init.as_deref(),
    };
    let (trace, starved) = match exp.learner() {
        LearnerKind::Td0 => (run_td0(&source, &exp.state_basis(), &opts)?, Vec::new()),
        LearnerKind::LinearQ => (
            run_linear_q(&source, &exp.state_action_basis(), &opts)?,
            Vec::new(),
        ),
        LearnerKind::TabularQ => {
            let q = exp.quantizer().expect("validated quantizer basis");
            let (trace, learner) = run_tabular_q(&source, q, &opts)?;
            (trace, learner.starved())
        }
    };
    Ok(SeedResult {
        seed,
        trace,
        starved,
    })
}

fn pairs(p: &[(usize, usize)]) -> Value {
    Value::Array(p.iter().map(|&(s, u)| json!([s, u])).collect())
}

/// The resolved config, the model and every oracle artifact.
pub fn write_oracle(exp: &Experiment, oracle: &OracleOutputs, out: &Path) -> Result<()> {
    let spec = exp.spec();
    let config = json!({
        "config": serde_json::to_value(&exp.config).expect("config serializes"),
        "memory": exp.memory,
        "burn_in": exp.burn_in,
        "num_windows": exp.windows.len(),
        "iterate_len": exp.iterate_len(),
    });
    write_json(&out.join("config.json"), &config)?;
    write_text(&out.join("model.toml"), &exp.model.to_toml())?;

    let dir = out.join("oracle");
    let mdp = &oracle.mdp;
    let nu = spec.num_actions();
    let mut pi = Table::new(["window", "pi"]);
    for (h, &p) in mdp.pi_state.iter().enumerate() {
        pi.push(vec![h.into(), p.into()]);
    }
    pi.write(&dir.join("pi.csv"))?;
    let mut m = Table::new(["window", "action", "pi", "cost"]);
    let mut k = Table::new(["window", "action", "next_window", "prob"]);
    for s in 0..mdp.num_states() {
        for u in 0..nu {
            m.push(vec![
                s.into(),
                u.into(),
                mdp.pi_sa[s * nu + u].into(),
                mdp.c(s, u).into(),
            ]);
            for &(j, p) in mdp.eta(s, u) {
                k.push(vec![s.into(), u.into(), j.into(), p.into()]);
            }
        }
    }
    m.write(&dir.join("mdp.csv"))?;
    k.write(&dir.join("kernel.csv"))?;
    if let Some(t) = &oracle.target {
        let mut tt = Table::new(["index", "value"]);
        for (i, &v) in t.iter().enumerate() {
            tt.push(vec![i.into(), v.into()]);
        }
        tt.write(&dir.join("target.csv"))?;
    }
    if let Some(v) = &oracle.values {
        let mut tv = Table::new(["window", "value"]);
        for (h, &x) in v.values.iter().enumerate() {
            tv.push(vec![h.into(), x.into()]);
        }
        tv.write(&dir.join("values.csv"))?;
    }
    if let Some(fs) = &oracle.filter_stability {
        let mut tl = Table::new(["t", "l"]);
        for (t, &l) in fs.l.iter().enumerate() {
            tl.push(vec![t.into(), l.into()]);
        }
        tl.write(&dir.join("filter_stability.csv"))?;
    }
    if let Some(mx) = &oracle.mixing {
        let mut tm = Table::new(["k", "alpha", "sqrt_partial_sum"]);
        for (i, (&a, &s)) in mx.alpha.iter().zip(&mx.sqrt_partial_sums).enumerate() {
            tm.push(vec![i.into(), a.into(), s.into()]);
        }
        tm.write(&dir.join("mixing.csv"))?;
    }

    let inv = &oracle.invariant;
    let mut summary = json!({
        "learner": exp.learner(),
        "invariant": {
            "iterations": inv.iterations,
            "residual": inv.residual,
            "second_eigenvalue": inv.second_eigenvalue,
        },
        "stationarity_error": mdp.stationarity_error(),
        "cost_sup": spec.cost_sup(),
        "dropped_pairs": pairs(&oracle.dropped),
        "target_norm": oracle.target.as_deref().map(norm2),
    });
    let obj = summary.as_object_mut().expect("object literal");
    if let Some(fp) = &oracle.fixed_point {
        obj.insert(
            "fixed_point".into(),
            json!({
                "theta": fp.theta,
                "residual": fp.residual,
                "bellman_residual": fp.bellman_residual,
                "sigma_min_sym": fp.sigma_min_sym,
                "expected_update_norm": oracle.expected_update_norm,
            }),
        );
    }
    if let Some(d) = &oracle.dominance {
        obj.insert(
            "dominance".into(),
            json!({
                "holds": d.holds,
                "worst_margin": d.worst_margin,
                "worst_map": d.worst_map,
                "maps_checked": d.maps_checked,
                "exhaustive": d.exhaustive,
            }),
        );
    }
    if let Some(q) = &oracle.q_iteration {
        obj.insert(
            "projected_q_iteration".into(),
            json!({"converged": q.converged, "iterations": q.iterations, "change": q.change}),
        );
    }
    if let Some(q) = &oracle.q_star {
        obj.insert(
            "q_star".into(),
            json!({"iterations": q.iterations, "residual": q.residual}),
        );
    }
    if let Some(fs) = &oracle.filter_stability {
        obj.insert(
            "filter_stability".into(),
            json!({
                "quantized": oracle.filter_quantized,
                "horizon": fs.horizon(),
                "requested_horizon": fs.requested_horizon,
                "truncated": fs.truncated,
                "discounted_sum": fs.discounted_sum,
                "tail_bound": fs.tail_bound,
                "certified_sum": fs.certified_sum(),
                "policies_evaluated": fs.policies_evaluated,
                "policy_set_exhaustive": fs.policy_set_exhaustive,
            }),
        );
    }
    if let Some(mx) = &oracle.mixing {
        obj.insert(
            "mixing".into(),
            json!({
                "k_max": mx.alpha.len() - 1,
                "converged_at": mx.converged_at,
                "fitted_rate": mx.fitted_rate,
                "sqrt_sum": mx.sqrt_partial_sums.last(),
            }),
        );
    }
    write_json(&dir.join("summary.json"), &summary)?;

    let skipped: Vec<Value> = oracle
        .skipped
        .iter()
        .map(|(item, reason)| json!({"item": item, "reason": reason}))
        .collect();
    let bounds = json!({
        "tolerance": BOUND_TOL,
        "reports": serde_json::to_value(&oracle.bounds).expect("reports serialize"),
        "violated": oracle.bound_violated(),
        "skipped": skipped,
    });
    write_json(&out.join("bounds.json"), &bounds)
}

/// Per-seed traces and the summary table.
pub fn write_runs(exp: &Experiment, report: &RunReport, out: &Path) -> Result<()> {
    let target_norm = report.oracle.target.as_deref().map(norm2);
    let mut seeds = Vec::new();
    for r in &report.seeds {
        let len = r.trace.snapshots.first().map_or(0, Vec::len);
        let mut header = vec!["step".to_string()];
        header.extend((0..len).map(|i| format!("x{i}")));
        header.push("distance".into());
        let mut t = Table::new(header);
        for ((step, x), d) in r
            .trace
            .steps
            .iter()
            .zip(&r.trace.snapshots)
            .zip(&r.trace.distances)
        {
            let mut row: Vec<Cell> = vec![(*step).into()];
            row.extend(x.iter().map(|&v| Cell::from(v)));
            row.push(d.map_or(Cell::Text(String::new()), Cell::from));
            t.push(row);
        }
        t.write(&out.join("traces").join(format!("seed_{}.csv", r.seed)))?;
        let final_distance = r.trace.final_distance();
        let relative = match (exp.learner(), final_distance, target_norm) {
            (LearnerKind::TabularQ, _, _) => None,
            (_, Some(d), Some(n)) if n > 0.0 => Some(d / n),
            _ => None,
        };
        seeds.push(json!({
            "seed": r.seed,
            "final_step": r.trace.steps.last(),
            "final_distance": final_distance,
            "relative_distance": relative,
            "final": r.trace.final_snapshot(),
            "diverged": r.trace.diverged(),
            "divergence": r.trace.divergence.map(|(s, n)| json!({"step": s, "norm": n})),
            "starved_cells": pairs(&r.starved),
        }));
    }
    let status = report.status();
    let summary = json!({
        "learner": exp.learner(),
        "distance": match exp.learner() {
            LearnerKind::TabularQ => "sup",
            _ => "l2",
        },
        "n_steps": exp.config.n_steps,
        "seeds": seeds,
        "diverged_seeds": report.seeds.iter().filter(|s| s.trace.diverged()).count(),
        "bound_violated": report.oracle.bound_violated(),
        "exit_code": status.code(),
    });
    write_json(&out.join("summary.json"), &summary)
}

/// `run`: oracle, all seeds, every artifact.
pub fn run_to_dir(exp: &Experiment, out: &Path) -> Result<RunReport> {
    let report = run_experiment(exp)?;
    write_oracle(exp, &report.oracle, out)?;
    write_runs(exp, &report, out)?;
    Ok(report)
}

/// `oracle-only`: the oracle artifacts without learner runs.
pub fn oracle_to_dir(exp: &Experiment, out: &Path) -> Result<ExitStatus> {
    let oracle = compute_oracle(exp)?;
    write_oracle(exp, &oracle, out)?;
    Ok(if oracle.bound_violated() {
        ExitStatus::BoundViolation
    } else {
        ExitStatus::Ok
    })
}
