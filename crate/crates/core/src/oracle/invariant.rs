use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::error::{Error, Result};
use crate::linalg::{l1_distance, MarkovChain};

/// Power iteration stops once successive iterates differ by less than this
/// in L1.
pub const POWER_TOL: f64 = 1e-14;
pub const POWER_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantDistribution {
    pub pi: Vec<f64>,
    pub iterations: usize,
    /// `||pi P - pi||_1` of the returned vector.
    pub residual: f64,
    /// Estimate of the second largest eigenvalue modulus of the chain.
    pub second_eigenvalue: f64,
}

/// Counts closed communicating classes and returns the states of the first.
fn closed_classes(chain: &MarkovChain) -> (usize, Vec<usize>) {
    let n = chain.len();
    let mut g = DiGraph::<(), ()>::with_capacity(n, chain.nnz());
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    for i in 0..n {
        for (j, _) in chain.row(i) {
            g.add_edge(nodes[i], nodes[j], ());
        }
    }
    let sccs = tarjan_scc(&g);
    let mut comp = vec![0; n];
    for (c, members) in sccs.iter().enumerate() {
        for v in members {
            comp[v.index()] = c;
        }
    }
    let mut count = 0;
    let mut first = Vec::new();
    for (c, members) in sccs.iter().enumerate() {
        let closed = members
            .iter()
            .all(|v| chain.row(v.index()).all(|(j, _)| comp[j] == c));
        if closed {
            if count == 0 {
                first = members.iter().map(|v| v.index()).collect();
            }
            count += 1;
        }
    }
    (count, first)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Period of an irreducible class, from BFS levels.
fn period(chain: &MarkovChain, class: &[usize]) -> usize {
    let n = chain.len();
    let mut level = vec![usize::MAX; n];
    let mut queue = std::collections::VecDeque::new();
    level[class[0]] = 0;
    queue.push_back(class[0]);
    let mut g = 0;
    while let Some(i) = queue.pop_front() {
        for (j, _) in chain.row(i) {
            if level[j] == usize::MAX {
                level[j] = level[i] + 1;
                queue.push_back(j);
            } else {
                g = gcd(g, (level[i] + 1).abs_diff(level[j]));
            }
        }
    }
    g.max(1)
}

/// Modulus of the dominant eigenvalue of `P` restricted to vectors with
/// `v 1 = 0`, by projected power iteration.
pub fn second_eigenvalue_modulus(chain: &MarkovChain, pi: &[f64]) -> f64 {
    let n = chain.len();
    if n < 2 {
        return 0.0;
    }
    // deterministic, generic start with zero total mass
    let mut v: Vec<f64> = (0..n)
        .map(|i| ((i as f64 + 1.0) * 0.754_877_666).fract() - 0.5)
        .collect();
    let mut next = vec![0.0; n];
    let project = |w: &mut [f64]| {
        let s: f64 = w.iter().sum();
        for (x, p) in w.iter_mut().zip(pi) {
            *x -= s * p;
        }
    };
    project(&mut v);
    let norm = |w: &[f64]| w.iter().map(|x| x.abs()).sum::<f64>();
    let n0 = norm(&v);
    if n0 == 0.0 {
        return 0.0;
    }
    v.iter_mut().for_each(|x| *x /= n0);
    const WARMUP: usize = 400;
    const MEASURE: usize = 200;
    let mut log_sum = 0.0;
    for it in 0..WARMUP + MEASURE {
        chain.left_mul(&v, &mut next);
        project(&mut next);
        let r = norm(&next);
        if r < 1e-300 {
            return 0.0;
        }
        if it >= WARMUP {
            log_sum += r.ln();
        }
        for (a, b) in v.iter_mut().zip(&next) {
            *a = b / r;
        }
    }
    (log_sum / MEASURE as f64).exp().min(1.0)
}

/// Unique invariant distribution of a chain with one closed aperiodic class,
/// by power iteration from the uniform distribution.
pub fn invariant_distribution(chain: &MarkovChain) -> Result<InvariantDistribution> {
    let n = chain.len();
    if n == 0 {
        return Err(Error::validation("chain", "empty chain"));
    }
    let (count, class) = closed_classes(chain);
    if count != 1 {
        return Err(Error::Reducible {
            closed_classes: count,
        });
    }
    let p = period(chain, &class);
    if p > 1 {
        return Err(Error::Periodic { period: p });
    }
    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    let mut iterations = 0;
    let mut change = f64::INFINITY;
    while iterations < POWER_CAP {
        chain.left_mul(&pi, &mut next);
        let s: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= s);
        change = l1_distance(&pi, &next);
        std::mem::swap(&mut pi, &mut next);
        iterations += 1;
        if change < POWER_TOL {
            break;
        }
    }
    if !(change < POWER_TOL) {
        return Err(Error::NotConverged { iterations, change });
    }
    chain.left_mul(&pi, &mut next);
    let residual = l1_distance(&pi, &next);
    let second_eigenvalue = second_eigenvalue_modulus(chain, &pi);
    Ok(InvariantDistribution {
        pi,
        iterations,
        residual,
        second_eigenvalue,
    })
}
