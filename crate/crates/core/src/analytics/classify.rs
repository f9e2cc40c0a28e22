use serde::Serialize;

use super::{check_epsilon, AnalyticsError};
use crate::instance::ProblemInstance;
use crate::lp::{proposal_probabilities, Benchmark, LpSolution, ProposalMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    /// The LP leaves `j` unsaturated.
    EasyCase1,
    /// The LP gain of `j` is spread over several reward levels.
    EasyCase2,
    /// A non-negligible share of `j`'s mass has proposals bounded away from 1.
    EasyCase3,
    Hard,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::EasyCase1 => "EASY_CASE1",
            Verdict::EasyCase2 => "EASY_CASE2",
            Verdict::EasyCase3 => "EASY_CASE3",
            Verdict::Hard => "HARD",
        }
    }
}

/// Everything computed for one online type.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeClass {
    pub j: usize,
    pub verdict: Verdict,
    /// Set when no case applies yet the hardness definition fails too.
    pub flagged: bool,
    /// Reward level maximizing the windowed gain.
    pub r_threshold: Option<f64>,
    pub gain: f64,
    pub case1: bool,
    pub case2: bool,
    pub case3: bool,
    /// Windowed gain at `r_threshold` reaches `(1 - eps)` of the gain.
    pub concentrated: bool,
    /// Mass on high-probability edges of the window reaches `1 - 2 eps'`.
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub epsilon: f64,
    pub epsilon_prime: f64,
    pub types: Vec<TypeClass>,
}

impl Classification {
    pub fn hard_types(&self) -> impl Iterator<Item = usize> + '_ {
        self.types
            .iter()
            .filter(|t| t.verdict == Verdict::Hard)
            .map(|t| t.j)
    }

    pub fn total_gain(&self) -> f64 {
        self.types.iter().map(|t| t.gain).sum()
    }

    /// Share of the total LP gain collected on `j`; zero when there is none.
    pub fn gain_share(&self, j: usize) -> f64 {
        let total = self.total_gain();
        if total > 0.0 {
            self.types[j].gain / total
        } else {
            0.0
        }
    }
}

/// `r in [w, w(1 + eps)]`, with relative slack for `w = r / (1 + eps)` round-off.
pub(super) fn in_window(r: f64, w: f64, epsilon: f64) -> bool {
    r >= w * (1.0 - 1e-12) && r <= w * (1.0 + epsilon) * (1.0 + 1e-12)
}

fn window_gain(levels: &[(f64, f64)], w: f64, epsilon: f64) -> f64 {
    levels
        .iter()
        .filter(|&&(r, _)| in_window(r, w, epsilon))
        .map(|&(r, x)| r * x)
        .sum()
}

fn classify_type(
    inst: &ProblemInstance,
    sol: &LpSolution,
    p: &ProposalMatrix,
    j: usize,
    epsilon: f64,
    epsilon_prime: f64,
) -> TypeClass {
    let gamma = inst.online()[j].gamma;
    let nbrs = inst.online_neighbors(j);
    let levels: Vec<(f64, f64)> = nbrs
        .iter()
        .map(|&i| (inst.reward(i, j).unwrap_or(0.0), sol.x(i, j)))
        .collect();
    let gain: f64 = levels.iter().map(|&(r, x)| r * x).sum();
    let mass: f64 = levels.iter().map(|l| l.1).sum();

    let case1 = mass <= (1.0 - epsilon) * gamma;

    let mut candidates: Vec<f64> = levels
        .iter()
        .flat_map(|&(r, _)| [r, r / (1.0 + epsilon)])
        .collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let mut best: Option<(f64, f64)> = None;
    for &w in &candidates {
        let g = window_gain(&levels, w, epsilon);
        if best.is_none_or(|(_, bg)| g > bg) {
            best = Some((w, g));
        }
    }
    let case2 = candidates
        .iter()
        .all(|&w| window_gain(&levels, w, epsilon) < (1.0 - epsilon) * gain);

    let case3 = nbrs
        .iter()
        .filter(|&&i| p.get(i, j) <= 1.0 - epsilon)
        .map(|&i| sol.x(i, j))
        .sum::<f64>()
        >= epsilon * gamma;

    let r_threshold = best.map(|b| b.0);
    let concentrated = best.is_some_and(|(_, g)| g >= (1.0 - epsilon) * gain);
    let saturated = r_threshold.is_some_and(|rj| {
        nbrs.iter()
            .filter(|&&i| {
                inst.reward(i, j).is_some_and(|r| in_window(r, rj, epsilon))
                    && p.get(i, j) >= 1.0 - epsilon_prime
            })
            .map(|&i| sol.x(i, j) / gamma)
            .sum::<f64>()
            >= 1.0 - 2.0 * epsilon_prime
    });

    let (verdict, flagged) = if concentrated && saturated {
        (Verdict::Hard, false)
    } else if case1 {
        (Verdict::EasyCase1, false)
    } else if case2 {
        (Verdict::EasyCase2, false)
    } else if case3 {
        (Verdict::EasyCase3, false)
    } else {
        (Verdict::Hard, true)
    };
    TypeClass {
        j,
        verdict,
        flagged,
        r_threshold,
        gain,
        case1,
        case2,
        case3,
        concentrated,
        saturated,
    }
}

/// Classifies every online type of `inst` under an online-benchmark
/// solution.
///
/// ```
/// use stationary_matching::analytics::{classify, is_vwhc, Verdict};
/// use stationary_matching::instance::{example_instance, ExampleName};
///
/// let b3 = example_instance(ExampleName::B3, 50).unwrap();
/// let sol = b3.solution.unwrap();
/// let c = classify(&b3.instance, &sol, 0.05, 0.05).unwrap();
/// assert_eq!(c.types[50].verdict, Verdict::Hard);
/// assert!(is_vwhc(&c, 0.05).unwrap());
/// ```
pub fn classify(
    inst: &ProblemInstance,
    sol: &LpSolution,
    epsilon: f64,
    epsilon_prime: f64,
) -> Result<Classification, AnalyticsError> {
    check_epsilon(epsilon)?;
    check_epsilon(epsilon_prime)?;
    if sol.benchmark != Benchmark::Online {
        return Err(AnalyticsError::WrongBenchmark(
            "classification needs an online-benchmark solution",
        ));
    }
    let p = proposal_probabilities(inst, sol)?;
    let types = (0..inst.num_online())
        .map(|j| classify_type(inst, sol, &p, j, epsilon, epsilon_prime))
        .collect();
    Ok(Classification {
        epsilon,
        epsilon_prime,
        types,
    })
}

/// True when the gain outside hard types is below `epsilon` of the total.
pub fn is_vwhc(c: &Classification, epsilon: f64) -> Result<bool, AnalyticsError> {
    if c.epsilon != epsilon {
        return Err(AnalyticsError::MismatchedParams {
            computed: c.epsilon,
            asked: epsilon,
        });
    }
    let easy: f64 = c
        .types
        .iter()
        .filter(|t| t.verdict != Verdict::Hard)
        .map(|t| t.gain)
        .sum();
    Ok(easy < epsilon * c.total_gain())
}
