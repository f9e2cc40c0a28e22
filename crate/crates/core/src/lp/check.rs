use rand::Rng;

use super::oracle::{max_prefix_violation, subset_violation};
use super::{Benchmark, LpSolution};
use crate::instance::ProblemInstance;
use crate::rng::rng_from_seed;

#[derive(Debug, Clone)]
pub struct FeasibilityOptions {
    pub tolerance: f64,
    /// Random sets `H` tried per online type, on top of the exact oracle.
    pub random_subsets: usize,
    pub seed: u64,
    /// Accept `x_ia + sum_j x_ij <= lambda_i` instead of equality.
    pub slack_flow: bool,
}

impl Default for FeasibilityOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            random_subsets: 0,
            seed: 0,
            slack_flow: false,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct FeasibilityReport {
    pub violations: Vec<String>,
    pub max_violation: f64,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }

    fn record(&mut self, amount: f64, tol: f64, what: impl FnOnce() -> String) {
        self.max_violation = self.max_violation.max(amount);
        if amount > tol {
            self.violations.push(format!("{} (by {amount:e})", what()));
        }
    }
}

/// Checks every constraint family of the relaxation named by
/// `sol.benchmark` against `inst`.
pub fn check_feasibility(
    inst: &ProblemInstance,
    sol: &LpSolution,
    opts: &FeasibilityOptions,
) -> FeasibilityReport {
    let tol = opts.tolerance;
    let mut rep = FeasibilityReport::default();
    if sol.x_abandon.len() != inst.num_offline() {
        rep.violations.push(format!(
            "{} abandonment rates for {} offline types",
            sol.x_abandon.len(),
            inst.num_offline()
        ));
        rep.max_violation = f64::INFINITY;
        return rep;
    }
    for (&(i, j), &x) in &sol.x_match {
        rep.record(-x, tol, || format!("x({i},{j}) is negative"));
        if !inst.has_edge(i, j) && x != 0.0 {
            rep.record(x.abs(), 0.0, || format!("x({i},{j}) on a non-edge"));
        }
    }
    for (i, o) in inst.offline().iter().enumerate() {
        let xa = sol.x_abandon[i];
        rep.record(-xa, tol, || format!("x({i},a) is negative"));
        let gap = xa + sol.matched_from(i) - o.lambda;
        let amount = if opts.slack_flow { gap } else { gap.abs() };
        rep.record(amount, tol, || format!("flow balance of offline {i}"));
        if sol.benchmark == Benchmark::Online {
            for &j in inst.offline_neighbors(i) {
                let excess = sol.x(i, j) / inst.online()[j].gamma - xa / o.mu;
                rep.record(excess, tol, || format!("rate cap on edge ({i},{j})"));
            }
        }
    }
    let mut rng = rng_from_seed(opts.seed);
    for j in 0..inst.num_online() {
        let (h, v) = max_prefix_violation(inst, &sol.x_match, j);
        rep.record(v, tol, || {
            format!("availability of online {j} for H = {h:?}")
        });
        let nbrs = inst.online_neighbors(j);
        if nbrs.is_empty() {
            continue;
        }
        for _ in 0..opts.random_subsets {
            let h: Vec<usize> = nbrs
                .iter()
                .copied()
                .filter(|_| rng.random_bool(0.5))
                .collect();
            let v = subset_violation(inst, &sol.x_match, j, h.iter().copied());
            rep.record(v, tol, || {
                format!("availability of online {j} for H = {h:?}")
            });
        }
    }
    rep
}
