//! The tightened LP relaxations and what is derived from their solutions.
//!
//! Both relaxations maximize `sum r_ij x_ij` over match rates `x_ij` and
//! abandonment rates `x_ia` subject to
//!
//! * flow balance: `x_ia + sum_j x_ij = lambda_i`;
//! * availability: `sum_{i in H} x_ij <= gamma_j (1 - exp(-sum_{i in H} lambda_i/mu_i))`
//!   for every set `H` of offline types;
//! * (online benchmark only) `x_ij / gamma_j <= x_ia / mu_i`.
//!
//! The availability family is exponential in size and is generated lazily by
//! [`separation_oracle`].

mod check;
mod model;
mod oracle;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{presence_probability, EdgeKey, ProblemInstance};

pub use check::{check_feasibility, FeasibilityOptions, FeasibilityReport};
pub use model::{
    solve_tlp, solve_tlp_ablated, solve_tlp_with, SolveOptions, SolveStats, DEFAULT_LP_TOL,
};
pub use oracle::{
    max_prefix_violation, separation_oracle, subset_violation, violated_prefixes, Cut,
};

/// Slack allowed when turning LP values into probabilities.
pub const PROBABILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Benchmark {
    /// The optimal online policy; keeps the per-edge rate constraint.
    Online,
    /// The offline (clairvoyant) optimum; drops it.
    Offline,
}

impl FromStr for Benchmark {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "online" => Ok(Benchmark::Online),
            "offline" => Ok(Benchmark::Offline),
            _ => Err(format!(
                "unknown benchmark {s:?} (expected online or offline)"
            )),
        }
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Benchmark::Online => "ONLINE",
            Benchmark::Offline => "OFFLINE",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("cutting-plane loop did not converge after {rounds} rounds (max violation {max_violation:e})")]
    NonConvergence { rounds: usize, max_violation: f64 },
    #[error("inner LP solver failed: {0}")]
    Solver(String),
    #[error("x_ia = 0 for offline type {i} but x_ij > 0 on edge ({i}, {j})")]
    ZeroAbandonment { i: usize, j: usize },
    #[error("proposal probability {p} on edge ({i}, {j}) exceeds 1")]
    ProbabilityAboveOne { i: usize, j: usize, p: f64 },
    #[error("solution carries mass on ({i}, {j}), which is not an edge")]
    NotAnEdge { i: usize, j: usize },
    #[error("solution has {got} abandonment rates for {expected} offline types")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("online type {0} does not exist")]
    UnknownOnline(usize),
    #[error("malformed solution JSON: {0}")]
    Json(String),
}

/// Match and abandonment rates for one relaxation.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub benchmark: Benchmark,
    /// `x_ij`; absent keys are zero.
    pub x_match: BTreeMap<EdgeKey, f64>,
    /// `x_ia`, indexed by offline id.
    pub x_abandon: Vec<f64>,
    pub objective: f64,
}

#[derive(Serialize, Deserialize)]
struct MatchEntry {
    i: usize,
    j: usize,
    x: f64,
}

#[derive(Serialize, Deserialize)]
struct AbandonEntry {
    i: usize,
    x: f64,
}

#[derive(Serialize, Deserialize)]
struct SolutionRecord {
    benchmark: Benchmark,
    x_match: Vec<MatchEntry>,
    x_abandon: Vec<AbandonEntry>,
    objective: f64,
}

impl LpSolution {
    pub fn new(
        benchmark: Benchmark,
        x_match: BTreeMap<EdgeKey, f64>,
        x_abandon: Vec<f64>,
        objective: f64,
    ) -> Self {
        Self {
            benchmark,
            x_match,
            x_abandon,
            objective,
        }
    }

    /// The all-abandon solution: nothing is matched.
    pub fn zero(inst: &ProblemInstance, benchmark: Benchmark) -> Self {
        let x_abandon = inst.offline().iter().map(|o| o.lambda).collect();
        Self::new(benchmark, BTreeMap::new(), x_abandon, 0.0)
    }

    pub fn x(&self, i: usize, j: usize) -> f64 {
        self.x_match.get(&(i, j)).copied().unwrap_or(0.0)
    }

    /// `sum_i x_ij`.
    pub fn matched_into(&self, j: usize) -> f64 {
        self.x_match
            .iter()
            .filter(|(&(_, k), _)| k == j)
            .map(|(_, &x)| x)
            .sum()
    }

    /// `sum_j x_ij`.
    pub fn matched_from(&self, i: usize) -> f64 {
        self.x_match
            .range((i, 0)..(i + 1, 0))
            .map(|(_, &x)| x)
            .sum()
    }

    /// `sum r_ij x_ij` under `inst`'s rewards.
    pub fn reward_rate(&self, inst: &ProblemInstance) -> f64 {
        self.x_match
            .iter()
            .map(|(&(i, j), &x)| inst.reward(i, j).unwrap_or(0.0) * x)
            .sum()
    }

    pub fn to_json(&self) -> String {
        let rec = SolutionRecord {
            benchmark: self.benchmark,
            x_match: self
                .x_match
                .iter()
                .map(|(&(i, j), &x)| MatchEntry { i, j, x })
                .collect(),
            x_abandon: self
                .x_abandon
                .iter()
                .enumerate()
                .map(|(i, &x)| AbandonEntry { i, x })
                .collect(),
            objective: self.objective,
        };
        serde_json::to_string_pretty(&rec).expect("solution serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, LpError> {
        let rec: SolutionRecord =
            serde_json::from_str(text).map_err(|e| LpError::Json(e.to_string()))?;
        let n = rec.x_abandon.iter().map(|a| a.i + 1).max().unwrap_or(0);
        let mut x_abandon = vec![0.0; n];
        for a in rec.x_abandon {
            x_abandon[a.i] = a.x;
        }
        let mut x_match = BTreeMap::new();
        for m in rec.x_match {
            if x_match.insert((m.i, m.j), m.x).is_some() {
                return Err(LpError::Json(format!(
                    "duplicate x_match entry ({}, {})",
                    m.i, m.j
                )));
            }
        }
        Ok(Self::new(rec.benchmark, x_match, x_abandon, rec.objective))
    }
}

/// Per-copy proposal probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ProposalMatrix {
    pub benchmark: Benchmark,
    /// Nonzero entries only.
    pub p: BTreeMap<EdgeKey, f64>,
}

impl ProposalMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p.get(&(i, j)).copied().unwrap_or(0.0)
    }
}

/// Proposal probabilities for the correlated-proposals policies.
///
/// Online benchmark: `p_ij = (x_ij / gamma_j) / (x_ia / mu_i)`. Offline
/// benchmark: `p_ij = (x_ij / gamma_j) / (1 - exp(-lambda_i / mu_i))`.
///
/// ```
/// use stationary_matching::instance::{OfflineType, OnlineType, ProblemInstance};
/// use stationary_matching::lp::{proposal_probabilities, solve_tlp, Benchmark};
///
/// let inst = ProblemInstance::new(vec![OfflineType::new(1.0, 1.0)], vec![OnlineType::new(1.0)], [((0, 0), 1.0)]);
/// let sol = solve_tlp(&inst, Benchmark::Online).unwrap();
/// let p = proposal_probabilities(&inst, &sol).unwrap();
/// assert!((p.get(0, 0) - 1.0).abs() < 1e-9);
/// ```
pub fn proposal_probabilities(
    inst: &ProblemInstance,
    sol: &LpSolution,
) -> Result<ProposalMatrix, LpError> {
    if sol.x_abandon.len() != inst.num_offline() {
        return Err(LpError::ShapeMismatch {
            expected: inst.num_offline(),
            got: sol.x_abandon.len(),
        });
    }
    let mut p = BTreeMap::new();
    for (&(i, j), &x) in &sol.x_match {
        if x <= 0.0 {
            continue;
        }
        if !inst.has_edge(i, j) {
            return Err(LpError::NotAnEdge { i, j });
        }
        let o = inst.offline()[i];
        let denom = match sol.benchmark {
            Benchmark::Online => {
                if sol.x_abandon[i] <= 0.0 {
                    return Err(LpError::ZeroAbandonment { i, j });
                }
                sol.x_abandon[i] / o.mu
            }
            Benchmark::Offline => presence_probability(o.load()),
        };
        let v = x / inst.online()[j].gamma / denom;
        if v > 1.0 + PROBABILITY_TOL {
            return Err(LpError::ProbabilityAboveOne { i, j, p: v });
        }
        p.insert((i, j), v.min(1.0));
    }
    Ok(ProposalMatrix {
        benchmark: sol.benchmark,
        p,
    })
}

/// Reward rate the solution collects from the online types in `online`.
pub fn lp_gain(
    inst: &ProblemInstance,
    sol: &LpSolution,
    online: impl IntoIterator<Item = usize>,
) -> Result<f64, LpError> {
    let mut total = 0.0;
    for j in online {
        if j >= inst.num_online() {
            return Err(LpError::UnknownOnline(j));
        }
        total += inst
            .online_neighbors(j)
            .iter()
            .map(|&i| inst.reward(i, j).unwrap_or(0.0) * sol.x(i, j))
            .sum::<f64>();
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{example_instance, ExampleName, OfflineType, OnlineType};

    fn one_by_one() -> ProblemInstance {
        ProblemInstance::new(
            vec![OfflineType::new(1.0, 1.0)],
            vec![OnlineType::new(1.0)],
            [((0, 0), 1.0)],
        )
    }

    #[test]
    fn hand_solved_online_proposals() {
        let sol = LpSolution::new(Benchmark::Online, [((0, 0), 0.5)].into(), vec![0.5], 0.5);
        assert_eq!(
            proposal_probabilities(&one_by_one(), &sol)
                .unwrap()
                .get(0, 0),
            1.0
        );
    }

    #[test]
    fn hand_solved_offline_proposals() {
        let x = 1.0 - (-1.0f64).exp();
        let sol = LpSolution::new(Benchmark::Offline, [((0, 0), x)].into(), vec![1.0 - x], x);
        assert!(
            (proposal_probabilities(&one_by_one(), &sol)
                .unwrap()
                .get(0, 0)
                - 1.0)
                .abs()
                < 1e-15
        );
    }

    #[test]
    fn zero_mass_edges_have_zero_probability() {
        let sol = LpSolution::new(Benchmark::Online, [((0, 0), 0.0)].into(), vec![1.0], 0.0);
        let p = proposal_probabilities(&one_by_one(), &sol).unwrap();
        assert!(p.p.is_empty());
        assert_eq!(p.get(0, 0), 0.0);
    }

    #[test]
    fn proposal_errors() {
        let sol = LpSolution::new(Benchmark::Online, [((0, 0), 0.5)].into(), vec![0.0], 0.5);
        assert_eq!(
            proposal_probabilities(&one_by_one(), &sol),
            Err(LpError::ZeroAbandonment { i: 0, j: 0 })
        );
        let sol = LpSolution::new(Benchmark::Online, [((0, 0), 0.6)].into(), vec![0.4], 0.6);
        assert!(matches!(
            proposal_probabilities(&one_by_one(), &sol),
            Err(LpError::ProbabilityAboveOne { .. })
        ));
        let sol = LpSolution::new(
            Benchmark::Online,
            [((0, 0), 0.5 + 1e-10)].into(),
            vec![0.5],
            0.5,
        );
        assert_eq!(
            proposal_probabilities(&one_by_one(), &sol)
                .unwrap()
                .get(0, 0),
            1.0
        );
    }

    #[test]
    fn gains_on_b3() {
        let b3 = example_instance(ExampleName::B3, 10).unwrap();
        let sol = b3.solution.unwrap();
        assert!((lp_gain(&b3.instance, &sol, [10]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(lp_gain(&b3.instance, &sol, []).unwrap(), 0.0);
        assert!((lp_gain(&b3.instance, &sol, 0..11).unwrap() - sol.objective).abs() < 1e-12);
        assert_eq!(
            lp_gain(&b3.instance, &sol, [11]),
            Err(LpError::UnknownOnline(11))
        );
    }

    #[test]
    fn json_round_trip() {
        let b3 = example_instance(ExampleName::B3, 4).unwrap();
        let sol = b3.solution.unwrap();
        let text = sol.to_json();
        assert!(text.contains("\"benchmark\": \"ONLINE\""));
        assert_eq!(LpSolution::from_json(&text).unwrap(), sol);
    }
}
