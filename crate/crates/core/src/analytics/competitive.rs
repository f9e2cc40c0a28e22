use serde::Serialize;

use super::{check_epsilon, check_online, AnalyticsError};
use crate::instance::ProblemInstance;
use crate::lp::{proposal_probabilities, Benchmark, LpSolution, ProposalMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CompetitiveVerdict {
    /// Enough mass on proposals bounded away from 1.
    Case1,
    /// Enough mass on abundant queues (`lambda / mu >= 1`).
    Case2,
    /// Scarce queues with near-certain proposals carry almost all the mass.
    Case3,
    Unclassified,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompetitiveClass {
    pub j: usize,
    pub verdict: CompetitiveVerdict,
    /// `sum x_ij / gamma_j` over neighbours with `p_ij <= 1 - eps`.
    pub low_proposal_mass: f64,
    /// `sum x_ij / gamma_j` over abundant neighbours.
    pub abundant_mass: f64,
    /// `sum x_ij / gamma_j` outside the scarce support.
    pub outside_scarce_mass: f64,
    /// `sum lambda_i / mu_i` over the scarce support.
    pub scarce_load: f64,
    /// `scarce_load <= 2 / (1 - eps)`.
    pub scarce_bounded: bool,
}

/// Scarce neighbours of `j` (`lambda / mu < 1`) with `p_ij >= 1 - eps`.
pub fn scarce_support(
    inst: &ProblemInstance,
    p: &ProposalMatrix,
    j: usize,
    epsilon: f64,
) -> Result<Vec<usize>, AnalyticsError> {
    check_online(inst, j)?;
    Ok(inst
        .online_neighbors(j)
        .iter()
        .copied()
        .filter(|&i| inst.offline()[i].load() < 1.0 && p.get(i, j) >= 1.0 - epsilon)
        .collect())
}

/// Sorts online types into the three cases used against the offline
/// benchmark.
pub fn classify_competitive(
    inst: &ProblemInstance,
    sol: &LpSolution,
    epsilon: f64,
) -> Result<Vec<CompetitiveClass>, AnalyticsError> {
    check_epsilon(epsilon)?;
    if sol.benchmark != Benchmark::Offline {
        return Err(AnalyticsError::WrongBenchmark(
            "competitive classification needs an offline-benchmark solution",
        ));
    }
    let p = proposal_probabilities(inst, sol)?;
    let mut out = Vec::with_capacity(inst.num_online());
    for j in 0..inst.num_online() {
        let gamma = inst.online()[j].gamma;
        let nbrs = inst.online_neighbors(j);
        let mass = |keep: &dyn Fn(usize) -> bool| {
            nbrs.iter()
                .filter(|&&i| keep(i))
                .map(|&i| sol.x(i, j) / gamma)
                .sum::<f64>()
        };
        let low_proposal_mass = mass(&|i| p.get(i, j) <= 1.0 - epsilon);
        let abundant_mass = mass(&|i| inst.offline()[i].load() >= 1.0);
        let scarce = scarce_support(inst, &p, j, epsilon)?;
        let outside_scarce_mass = mass(&|i| !scarce.contains(&i));
        let scarce_load = inst.load_of(scarce.iter().copied());
        let verdict = if low_proposal_mass >= epsilon {
            CompetitiveVerdict::Case1
        } else if abundant_mass >= epsilon {
            CompetitiveVerdict::Case2
        } else if outside_scarce_mass <= epsilon {
            CompetitiveVerdict::Case3
        } else {
            CompetitiveVerdict::Unclassified
        };
        out.push(CompetitiveClass {
            j,
            verdict,
            low_proposal_mass,
            abundant_mass,
            outside_scarce_mass,
            scarce_load,
            scarce_bounded: scarce_load <= 2.0 / (1.0 - epsilon),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{OfflineType, OnlineType};

    fn offline_sol(x: &[((usize, usize), f64)], n: usize) -> LpSolution {
        LpSolution::new(
            Benchmark::Offline,
            x.iter().copied().collect(),
            vec![0.0; n],
            0.0,
        )
    }

    #[test]
    fn low_proposals_are_case1() {
        let inst = ProblemInstance::new(
            vec![OfflineType::new(1.0, 1.0)],
            vec![OnlineType::new(1.0)],
            [((0, 0), 1.0)],
        );
        let c = classify_competitive(&inst, &offline_sol(&[((0, 0), 0.3)], 1), 0.05).unwrap();
        assert_eq!(c[0].verdict, CompetitiveVerdict::Case1);
    }

    #[test]
    fn abundant_queue_is_case2() {
        let inst = ProblemInstance::new(
            vec![OfflineType::new(2.0, 1.0)],
            vec![OnlineType::new(1.0)],
            [((0, 0), 1.0)],
        );
        let full = 1.0 - (-2.0f64).exp();
        let c = classify_competitive(&inst, &offline_sol(&[((0, 0), full)], 1), 0.05).unwrap();
        assert_eq!(c[0].verdict, CompetitiveVerdict::Case2);
        assert!((c[0].abundant_mass - full).abs() < 1e-12);
    }

    #[test]
    fn scarce_saturated_neighbours_are_case3_and_bounded() {
        // Ten scarce queues of load 0.1 each, every proposal certain.
        let n = 10;
        let inst = ProblemInstance::new(
            vec![OfflineType::new(0.1, 1.0); n],
            vec![OnlineType::new(1.0)],
            (0..n).map(|i| ((i, 0), 1.0)),
        );
        let x = 1.0 - (-0.1f64).exp();
        let edges: Vec<_> = (0..n).map(|i| ((i, 0), x)).collect();
        let c = &classify_competitive(&inst, &offline_sol(&edges, n), 0.05).unwrap()[0];
        assert_eq!(c.verdict, CompetitiveVerdict::Case3);
        assert!((c.scarce_load - 1.0).abs() < 1e-12);
        assert!(c.scarce_bounded);
    }

    #[test]
    fn small_low_proposal_mass_falls_to_case3() {
        let inst = ProblemInstance::new(
            vec![OfflineType::new(0.5, 1.0), OfflineType::new(0.5, 1.0)],
            vec![OnlineType::new(1.0)],
            [((0, 0), 1.0), ((1, 0), 1.0)],
        );
        let cap = 1.0 - (-0.5f64).exp();
        let c = &classify_competitive(
            &inst,
            &offline_sol(&[((0, 0), cap), ((1, 0), 0.03)], 2),
            0.05,
        )
        .unwrap()[0];
        assert!(c.low_proposal_mass < 0.05);
        assert_eq!(c.verdict, CompetitiveVerdict::Case3);
        assert!((c.outside_scarce_mass - 0.03).abs() < 1e-12);
    }

    #[test]
    fn needs_offline_solution() {
        let inst = ProblemInstance::new(
            vec![OfflineType::new(1.0, 1.0)],
            vec![OnlineType::new(1.0)],
            [((0, 0), 1.0)],
        );
        let sol = LpSolution::zero(&inst, Benchmark::Online);
        assert!(matches!(
            classify_competitive(&inst, &sol, 0.05),
            Err(AnalyticsError::WrongBenchmark(_))
        ));
    }
}
