use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use microlp::{
    ComparisonOp, LinearExpr, OptimizationDirection, Problem, Solution, SolveOutcome, Variable,
};

use super::oracle::{max_prefix_violation, violated_prefixes};
use super::{Benchmark, LpError, LpSolution};
use crate::instance::{presence_probability, EdgeKey, ProblemInstance};

pub const DEFAULT_LP_TOL: f64 = 1e-7;

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// A cut is added when its violation, in rate units, exceeds
    /// `tolerance * min(1, gamma_j)`.
    pub tolerance: f64,
    pub max_rounds: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_LP_TOL,
            max_rounds: 500,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SolveStats {
    pub rounds: usize,
    /// Cuts beyond the singleton sets.
    pub cuts: usize,
    pub elapsed: Duration,
}

#[derive(Clone, Copy, PartialEq)]
enum Family {
    Tight(Benchmark),
    FlowBalance,
}

/// Solves the tightened relaxation for `benchmark` by cutting planes.
///
/// ```
/// use stationary_matching::instance::{OfflineType, OnlineType, ProblemInstance};
/// use stationary_matching::lp::{solve_tlp, Benchmark};
///
/// let inst = ProblemInstance::new(vec![OfflineType::new(1.0, 1.0)], vec![OnlineType::new(1.0)], [((0, 0), 1.0)]);
/// assert!((solve_tlp(&inst, Benchmark::Online).unwrap().objective - 0.5).abs() < 1e-6);
/// assert!((solve_tlp(&inst, Benchmark::Offline).unwrap().objective - 0.632121).abs() < 1e-6);
/// ```
pub fn solve_tlp(inst: &ProblemInstance, benchmark: Benchmark) -> Result<LpSolution, LpError> {
    solve_tlp_with(inst, benchmark, &SolveOptions::default()).map(|(sol, _)| sol)
}

pub fn solve_tlp_with(
    inst: &ProblemInstance,
    benchmark: Benchmark,
    opts: &SolveOptions,
) -> Result<(LpSolution, SolveStats), LpError> {
    solve(inst, Family::Tight(benchmark), opts)
}

/// Online relaxation with the availability family replaced by singletons and
/// `sum_i x_ij <= gamma_j`.
pub fn solve_tlp_ablated(inst: &ProblemInstance) -> Result<LpSolution, LpError> {
    solve(inst, Family::FlowBalance, &SolveOptions::default()).map(|(sol, _)| sol)
}

// Variables are scaled to `z_ij = x_ij / gamma_j` and `w_i = x_ia / lambda_i`
// so that every constraint has O(1) coefficients.
struct Model<'a> {
    inst: &'a ProblemInstance,
    edges: Vec<EdgeKey>,
    index: BTreeMap<EdgeKey, usize>,
    z: Vec<Variable>,
    problem: Problem,
}

fn solver_error(e: impl std::fmt::Display) -> LpError {
    LpError::Solver(e.to_string())
}

fn into_solution(outcome: SolveOutcome) -> Result<Solution, LpError> {
    outcome
        .into_solution()
        .map_err(|_| LpError::Solver("interrupted without a solution".into()))
}

impl<'a> Model<'a> {
    fn new(inst: &'a ProblemInstance, family: Family) -> Self {
        let edges: Vec<EdgeKey> = inst.rewards().keys().copied().collect();
        let index = edges.iter().enumerate().map(|(k, &e)| (e, k)).collect();
        let scale = edges
            .iter()
            .map(|&(i, j)| inst.reward(i, j).unwrap_or(0.0) * inst.online()[j].gamma)
            .fold(0.0, f64::max);
        let scale = if scale > 0.0 { scale } else { 1.0 };

        let mut problem = Problem::new(OptimizationDirection::Maximize);
        let z: Vec<Variable> = edges
            .iter()
            .map(|&(i, j)| {
                let coef = inst.reward(i, j).unwrap_or(0.0) * inst.online()[j].gamma / scale;
                problem.add_var(coef, (0.0, presence_probability(inst.offline()[i].load())))
            })
            .collect();
        let w: Vec<Variable> = (0..inst.num_offline())
            .map(|_| problem.add_var(0.0, (0.0, 1.0)))
            .collect();
        let mut model = Self {
            inst,
            edges,
            index,
            z,
            problem,
        };

        for (i, o) in inst.offline().iter().enumerate() {
            let mut expr = LinearExpr::empty();
            expr.add(w[i], 1.0);
            for &j in inst.offline_neighbors(i) {
                expr.add(model.var(i, j), inst.online()[j].gamma / o.lambda);
            }
            model.problem.add_constraint(expr, ComparisonOp::Eq, 1.0);
        }
        if family != Family::Tight(Benchmark::Offline) {
            for &(i, j) in &model.edges {
                let load = inst.offline()[i].load();
                model.problem.add_constraint(
                    [(model.var(i, j), 1.0), (w[i], -load)],
                    ComparisonOp::Le,
                    0.0,
                );
            }
        }
        if family == Family::FlowBalance {
            for j in 0..inst.num_online() {
                let nbrs = inst.online_neighbors(j);
                if nbrs.len() > 1 {
                    let expr: LinearExpr = nbrs.iter().map(|&i| (model.var(i, j), 1.0)).collect();
                    model.problem.add_constraint(expr, ComparisonOp::Le, 1.0);
                }
            }
        }
        model
    }

    fn var(&self, i: usize, j: usize) -> Variable {
        self.z[self.index[&(i, j)]]
    }

    fn cut(&self, j: usize, members: &[usize]) -> (LinearExpr, f64) {
        let expr = members.iter().map(|&i| (self.var(i, j), 1.0)).collect();
        (
            expr,
            presence_probability(self.inst.load_of(members.iter().copied())),
        )
    }

    fn rates(&self, lp: &Solution) -> BTreeMap<EdgeKey, f64> {
        self.edges
            .iter()
            .zip(&self.z)
            .map(|(&(i, j), &v)| {
                (
                    (i, j),
                    lp.var_value(v).max(0.0) * self.inst.online()[j].gamma,
                )
            })
            .collect()
    }
}

fn solve(
    inst: &ProblemInstance,
    family: Family,
    opts: &SolveOptions,
) -> Result<(LpSolution, SolveStats), LpError> {
    let start = Instant::now();
    let benchmark = match family {
        Family::Tight(b) => b,
        Family::FlowBalance => Benchmark::Online,
    };
    let model = Model::new(inst, family);
    let mut lp = into_solution(model.problem.solve().map_err(solver_error)?)?;
    let mut seen: BTreeSet<(usize, Vec<usize>)> = BTreeSet::new();
    let mut rounds = 1;
    let x = loop {
        let x = model.rates(&lp);
        if family == Family::FlowBalance {
            break x;
        }
        let mut fresh = Vec::new();
        for j in 0..inst.num_online() {
            let tol = opts.tolerance * inst.online()[j].gamma.min(1.0);
            for cut in violated_prefixes(inst, &x, j, tol) {
                let mut key = cut.members;
                key.sort_unstable();
                if seen.insert((j, key.clone())) {
                    fresh.push((j, key));
                }
            }
        }
        // A repeated cut means the remaining violation is solver round-off.
        if fresh.is_empty() {
            break x;
        }
        if rounds >= opts.max_rounds {
            let max_violation = (0..inst.num_online())
                .map(|j| max_prefix_violation(inst, &x, j).1)
                .fold(0.0, f64::max);
            return Err(LpError::NonConvergence {
                rounds,
                max_violation,
            });
        }
        rounds += 1;
        for (j, members) in fresh {
            let (expr, rhs) = model.cut(j, &members);
            lp = into_solution(
                lp.add_constraint(expr, ComparisonOp::Le, rhs)
                    .map_err(solver_error)?,
            )?;
        }
    };
    let sol = polish(inst, benchmark, x);
    let stats = SolveStats {
        rounds,
        cuts: seen.len(),
        elapsed: start.elapsed(),
    };
    Ok((sol, stats))
}

/// Removes solver round-off: negative or tiny rates become zero, per-edge
/// caps are enforced exactly, and `x_ia` is recomputed from flow balance.
fn polish(
    inst: &ProblemInstance,
    benchmark: Benchmark,
    mut x: BTreeMap<EdgeKey, f64>,
) -> LpSolution {
    x.retain(|_, v| *v > 1e-15);
    let mut x_abandon = vec![0.0; inst.num_offline()];
    for (i, o) in inst.offline().iter().enumerate() {
        let cap_single = presence_probability(o.load());
        for _ in 0..4 {
            let out: f64 = inst
                .offline_neighbors(i)
                .iter()
                .map(|&j| x.get(&(i, j)).copied().unwrap_or(0.0))
                .sum();
            if out > o.lambda {
                let scale = o.lambda / out;
                for &j in inst.offline_neighbors(i) {
                    if let Some(v) = x.get_mut(&(i, j)) {
                        *v *= scale;
                    }
                }
            }
            let xa = (o.lambda
                - inst
                    .offline_neighbors(i)
                    .iter()
                    .map(|&j| x.get(&(i, j)).copied().unwrap_or(0.0))
                    .sum::<f64>())
            .max(0.0);
            x_abandon[i] = xa;
            let mut changed = false;
            for &j in inst.offline_neighbors(i) {
                let gamma = inst.online()[j].gamma;
                let cap = match benchmark {
                    Benchmark::Online => gamma * xa / o.mu,
                    Benchmark::Offline => gamma * cap_single,
                };
                if let Some(v) = x.get_mut(&(i, j)) {
                    if *v > cap {
                        *v = cap;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        x_abandon[i] = (o.lambda
            - inst
                .offline_neighbors(i)
                .iter()
                .map(|&j| x.get(&(i, j)).copied().unwrap_or(0.0))
                .sum::<f64>())
        .max(0.0);
    }
    x.retain(|_, v| *v > 0.0);
    let objective = x
        .iter()
        .map(|(&(i, j), &v)| inst.reward(i, j).unwrap_or(0.0) * v)
        .sum();
    LpSolution::new(benchmark, x, x_abandon, objective)
}
