//! Closed-form stationary quantities and the hard/easy classification of
//! online types.

mod classify;
mod competitive;
mod transform;

use statrs::distribution::{Discrete, DiscreteCDF, Poisson};
use thiserror::Error;

use crate::instance::{presence_probability, InstanceError, ProblemInstance};
use crate::lp::{LpError, LpSolution};

pub use classify::{classify, is_vwhc, Classification, TypeClass, Verdict};
pub use competitive::{classify_competitive, scarce_support, CompetitiveClass, CompetitiveVerdict};
pub use transform::{
    check_transformed_properties, instance_transformation, weak_chain_te_probability,
    PropertyReport, TransformedInstance,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    #[error("rates must be positive (lambda = {lambda}, mu = {mu})")]
    NonPositiveRate { lambda: f64, mu: f64 },
    #[error("the offline set H must be nonempty")]
    EmptySet,
    #[error("online type {0} does not exist")]
    UnknownOnline(usize),
    #[error("offline type {0} does not exist")]
    UnknownOffline(usize),
    #[error("epsilon parameters must lie in (0, 0.1), got {0}")]
    BadEpsilon(f64),
    #[error("classification was computed with epsilon = {computed}, asked for {asked}")]
    MismatchedParams { computed: f64, asked: f64 },
    #[error("{0}")]
    WrongBenchmark(&'static str),
    #[error("no online type is hard, so the transformed instance would be empty")]
    EmptyTransform,
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

pub(crate) fn check_epsilon(e: f64) -> Result<(), AnalyticsError> {
    if e > 0.0 && e < 0.1 {
        Ok(())
    } else {
        Err(AnalyticsError::BadEpsilon(e))
    }
}

fn check_online(inst: &ProblemInstance, j: usize) -> Result<(), AnalyticsError> {
    if j < inst.num_online() {
        Ok(())
    } else {
        Err(AnalyticsError::UnknownOnline(j))
    }
}

/// Stationary law of a birth-death queue with birth rate `lambda` and
/// per-node death rate `mu`: Poisson with mean `lambda / mu`.
#[derive(Debug, Clone)]
pub struct PoissonPmf {
    rate: f64,
    dist: Poisson,
}

impl PoissonPmf {
    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn mean(&self) -> f64 {
        self.rate
    }

    pub fn pmf(&self, k: u64) -> f64 {
        self.dist.pmf(k)
    }

    /// `pmf(0..len)` with `len` the smallest length whose tail is below 1e-13.
    pub fn truncated(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut k = 0;
        loop {
            out.push(self.pmf(k));
            if self.dist.sf(k) < 1e-13 {
                return out;
            }
            k += 1;
        }
    }
}

/// ```
/// use stationary_matching::analytics::birth_death_stationary;
///
/// let q = birth_death_stationary(1.0, 2.0).unwrap();
/// assert!((q.pmf(0) - (-0.5f64).exp()).abs() < 1e-12);
/// ```
pub fn birth_death_stationary(lambda: f64, mu: f64) -> Result<PoissonPmf, AnalyticsError> {
    if !(lambda > 0.0 && mu > 0.0 && lambda.is_finite() && mu.is_finite()) {
        return Err(AnalyticsError::NonPositiveRate { lambda, mu });
    }
    let rate = lambda / mu;
    let dist = Poisson::new(rate).map_err(|_| AnalyticsError::NonPositiveRate { lambda, mu })?;
    Ok(PoissonPmf { rate, dist })
}

/// Probability that some offline type in `h` is present with no matching at
/// all: `1 - exp(-sum_{i in H} lambda_i / mu_i)`.
pub fn availability_upper_bound(
    inst: &ProblemInstance,
    h: &[usize],
) -> Result<f64, AnalyticsError> {
    if h.is_empty() {
        return Err(AnalyticsError::EmptySet);
    }
    if let Some(&i) = h.iter().find(|&&i| i >= inst.num_offline()) {
        return Err(AnalyticsError::UnknownOffline(i));
    }
    Ok(presence_probability(inst.load_of(h.iter().copied())))
}

/// `1 - exp(-sum_{i : r_ij >= w} x_ij / gamma_j)`: a lower bound on the
/// chance that correlated proposals match an arriving `j` with reward at
/// least `w`.
pub fn match_prob_lower_bound(
    inst: &ProblemInstance,
    sol: &LpSolution,
    j: usize,
    w: f64,
) -> Result<f64, AnalyticsError> {
    check_online(inst, j)?;
    let gamma = inst.online()[j].gamma;
    let mass: f64 = inst
        .online_neighbors(j)
        .iter()
        .filter(|&&i| inst.reward(i, j).is_some_and(|r| r >= w))
        .map(|&i| sol.x(i, j) / gamma)
        .sum();
    Ok(presence_probability(mass))
}

/// Lower bound on the reward rate of correlated proposals, obtained by
/// integrating [`match_prob_lower_bound`] over the reward threshold.
///
/// ```
/// use stationary_matching::analytics::alg1_reward_lower_bound;
/// use stationary_matching::instance::{OfflineType, OnlineType, ProblemInstance};
/// use stationary_matching::lp::{Benchmark, LpSolution};
///
/// let inst = ProblemInstance::new(vec![OfflineType::new(1.0, 1.0)], vec![OnlineType::new(1.0)], [((0, 0), 1.0)]);
/// let sol = LpSolution::new(Benchmark::Online, [((0, 0), 0.5)].into(), vec![0.5], 0.5);
/// let bound = alg1_reward_lower_bound(&inst, &sol);
/// assert!((bound - (1.0 - (-0.5f64).exp())).abs() < 1e-12);
/// ```
pub fn alg1_reward_lower_bound(inst: &ProblemInstance, sol: &LpSolution) -> f64 {
    let mut total = 0.0;
    for j in 0..inst.num_online() {
        let gamma = inst.online()[j].gamma;
        let mut levels: Vec<(f64, f64)> = inst
            .online_neighbors(j)
            .iter()
            .filter_map(|&i| {
                let x = sol.x(i, j);
                (x > 0.0).then(|| (inst.reward(i, j).unwrap_or(0.0), x / gamma))
            })
            .collect();
        levels.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut mass = 0.0;
        let mut k = 0;
        while k < levels.len() {
            let w = levels[k].0;
            while k < levels.len() && levels[k].0 == w {
                mass += levels[k].1;
                k += 1;
            }
            let next = levels.get(k).map_or(0.0, |l| l.0);
            total += gamma * (w - next) * presence_probability(mass);
        }
    }
    total
}

/// Stationary probability that every offline neighbour of `j` is empty when
/// each queue is an independent birth-death chain with mean `x_ia / mu_i`.
pub fn indep_chain_empty_probability(
    inst: &ProblemInstance,
    sol: &LpSolution,
    j: usize,
) -> Result<f64, AnalyticsError> {
    check_online(inst, j)?;
    let s: f64 = inst
        .online_neighbors(j)
        .iter()
        .map(|&i| sol.x_abandon[i] / inst.offline()[i].mu)
        .sum();
    Ok((-s).exp())
}

/// `x / (x + 1 - exp(-x))`, increasing from 1/2 at `0+`.
pub fn presence_ratio(x: f64) -> f64 {
    if x == 0.0 {
        return 0.5;
    }
    x / (x - (-x).exp_m1())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{
        example_b2_solution, example_instance, ExampleName, OfflineType, OnlineType,
    };
    use crate::lp::Benchmark;

    const INV_E: f64 = 0.367_879_441_171_442_33;

    fn one_by_one() -> (ProblemInstance, LpSolution) {
        let inst = ProblemInstance::new(
            vec![OfflineType::new(1.0, 1.0)],
            vec![OnlineType::new(1.0)],
            [((0, 0), 1.0)],
        );
        let sol = LpSolution::new(Benchmark::Online, [((0, 0), 0.5)].into(), vec![0.5], 0.5);
        (inst, sol)
    }

    #[test]
    fn poisson_stationary_laws() {
        assert!((birth_death_stationary(1.0, 1.0).unwrap().pmf(0) - INV_E).abs() < 1e-12);
        let q = birth_death_stationary(2.0, 1.0).unwrap();
        let t = q.truncated();
        assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let mean: f64 = t.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        assert!((mean - 2.0).abs() < 1e-10);
        assert!(birth_death_stationary(0.0, 1.0).is_err());
        assert!(birth_death_stationary(1.0, -1.0).is_err());
    }

    #[test]
    fn availability() {
        let (inst, _) = one_by_one();
        assert!((availability_upper_bound(&inst, &[0]).unwrap() - (1.0 - INV_E)).abs() < 1e-15);
        assert_eq!(
            availability_upper_bound(&inst, &[]),
            Err(AnalyticsError::EmptySet)
        );
        let b1 = example_instance(ExampleName::B1, 50).unwrap().instance;
        let all: Vec<usize> = (0..50).collect();
        assert!((availability_upper_bound(&b1, &all).unwrap() - (1.0 - INV_E)).abs() < 1e-12);
        let heavy = ProblemInstance::new(
            vec![OfflineType::new(1e6, 1.0)],
            vec![OnlineType::new(1.0)],
            [],
        );
        assert_eq!(availability_upper_bound(&heavy, &[0]).unwrap(), 1.0);
    }

    #[test]
    fn match_probability_bounds() {
        let (inst, sol) = one_by_one();
        let v = match_prob_lower_bound(&inst, &sol, 0, 0.5).unwrap();
        assert!((v - (1.0 - (-0.5f64).exp())).abs() < 1e-12);
        assert_eq!(match_prob_lower_bound(&inst, &sol, 0, 2.0).unwrap(), 0.0);
        let full = LpSolution::new(Benchmark::Online, [((0, 0), 1.0)].into(), vec![0.0], 1.0);
        assert!(
            (match_prob_lower_bound(&inst, &full, 0, 1.0).unwrap() - (1.0 - INV_E)).abs() < 1e-12
        );
        assert!(match_prob_lower_bound(&inst, &sol, 3, 0.0).is_err());
    }

    #[test]
    fn reward_bound_special_cases() {
        let (inst, _) = one_by_one();
        assert_eq!(
            alg1_reward_lower_bound(&inst, &LpSolution::zero(&inst, Benchmark::Online)),
            0.0
        );
        let inst = ProblemInstance::new(
            vec![OfflineType::new(1.0, 1.0), OfflineType::new(2.0, 1.0)],
            vec![OnlineType::new(2.0)],
            [((0, 0), 3.0), ((1, 0), 3.0)],
        );
        let sol = LpSolution::new(
            Benchmark::Online,
            [((0, 0), 0.4), ((1, 0), 0.6)].into(),
            vec![0.6, 1.4],
            3.0,
        );
        let want = 2.0 * 3.0 * (1.0 - (-0.5f64).exp());
        assert!((alg1_reward_lower_bound(&inst, &sol) - want).abs() < 1e-12);
    }

    #[test]
    fn b2_independent_chains_leave_j_empty_about_one_in_e() {
        let b2 = example_instance(ExampleName::B2, 100).unwrap();
        let v = indep_chain_empty_probability(&b2.instance, &example_b2_solution(100), 0).unwrap();
        let s = 10.0f64;
        let closed = (-s + (s - 1.0) * (1.0 - (-s).exp())).exp();
        assert!((v - closed).abs() < 1e-12);
        assert!((v - INV_E).abs() < 0.01);
    }

    #[test]
    fn empty_neighbourhood_is_always_empty() {
        let inst = ProblemInstance::new(
            vec![OfflineType::new(1.0, 1.0)],
            vec![OnlineType::new(1.0)],
            [],
        );
        let sol = LpSolution::zero(&inst, Benchmark::Online);
        assert_eq!(indep_chain_empty_probability(&inst, &sol, 0).unwrap(), 1.0);
    }

    #[test]
    fn presence_ratio_is_increasing_from_one_half() {
        assert!((presence_ratio(1e-9) - 0.5).abs() < 1e-6);
        assert!((presence_ratio(1e-3) - 0.5).abs() < 1e-3);
        let mut prev = presence_ratio(1e-6);
        for k in 1..=10_000 {
            let v = presence_ratio(k as f64 * 1e-3);
            assert!(v >= prev, "f decreased at {}", k as f64 * 1e-3);
            prev = v;
        }
    }
}
