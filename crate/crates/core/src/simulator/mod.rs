//! Continuous-time simulation of the matching market.
//!
//! Events are drawn with the competing-exponentials scheme: the waiting time
//! is `Exp(total rate)` and the event kind is chosen in proportion to its
//! rate. Queues are counts per offline type. Statistics cover
//! `[burn_in, horizon]` only and are split into equal batches for
//! batch-means confidence intervals.
//!
//! ```
//! use stationary_matching::instance::{OfflineType, OnlineType, ProblemInstance};
//! use stationary_matching::simulator::{simulate, Policy, SimConfig};
//!
//! let inst = ProblemInstance::new(vec![OfflineType::new(1.0, 1.0)], vec![OnlineType::new(1.0)], [((0, 0), 1.0)]);
//! let est = simulate(&inst, &Policy::greedy(), &SimConfig::new(2_000.0, 1)).unwrap();
//! assert!(est.flow_residual[0].covers(0.0, 4.0));
//! ```

mod engine;
mod stats;
mod weak;

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub use engine::simulate;
pub use stats::{t_quantile, Estimate};
pub use weak::{simulate_weak_chains, WeakChainEstimate};

use crate::instance::{EdgeKey, ProblemInstance};
use crate::lp::{LpSolution, ProposalMatrix};
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("need 0 <= burn_in < horizon, got burn_in = {burn_in}, horizon = {horizon}")]
    BadHorizon { horizon: f64, burn_in: f64 },
    #[error("need at least two batches, got {0}")]
    TooFewBatches(usize),
    #[error("balanced greedy needs every offline type labeled TOP or BOT")]
    MissingLabels,
    #[error("proposal probability for ({i}, {j}) is not on an edge or not in [0, 1]")]
    BadProposal { i: usize, j: usize },
    #[error("total event rate {0} is not a finite positive number")]
    RateOverflow(f64),
    #[error("the LP objective is zero, so the ratio is undefined")]
    ZeroObjective,
    #[error("need at least one replication")]
    NoReplications,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolicyKind {
    /// Pivotal sampling over available copies, in decreasing-reward order.
    CorrelatedProposals(ProposalMatrix),
    /// Lowest-id available TOP neighbour, else lowest-id available BOT one.
    BalancedGreedy,
    /// Highest-reward available neighbour, ties by lowest id.
    GreedyMaxReward,
    NoMatch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub kind: PolicyKind,
    /// When set, only these edges may be used.
    pub edges: Option<BTreeSet<EdgeKey>>,
}

impl Policy {
    pub fn correlated(p: ProposalMatrix) -> Self {
        Self {
            kind: PolicyKind::CorrelatedProposals(p),
            edges: None,
        }
    }

    pub fn balanced_greedy() -> Self {
        Self {
            kind: PolicyKind::BalancedGreedy,
            edges: None,
        }
    }

    pub fn greedy() -> Self {
        Self {
            kind: PolicyKind::GreedyMaxReward,
            edges: None,
        }
    }

    pub fn no_match() -> Self {
        Self {
            kind: PolicyKind::NoMatch,
            edges: None,
        }
    }

    pub fn with_edges(mut self, edges: impl IntoIterator<Item = EdgeKey>) -> Self {
        self.edges = Some(edges.into_iter().collect());
        self
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            PolicyKind::CorrelatedProposals(_) => "correlated",
            PolicyKind::BalancedGreedy => "balanced-greedy",
            PolicyKind::GreedyMaxReward => "greedy",
            PolicyKind::NoMatch => "no-match",
        }
    }

    fn allows(&self, i: usize, j: usize) -> bool {
        self.edges.as_ref().is_none_or(|e| e.contains(&(i, j)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub horizon: f64,
    pub burn_in: f64,
    pub seed: u64,
    pub batches: usize,
}

impl SimConfig {
    /// Burn-in of 20% of the horizon and 32 batches.
    pub fn new(horizon: f64, seed: u64) -> Self {
        Self {
            horizon,
            burn_in: 0.2 * horizon,
            seed,
            batches: 32,
        }
    }

    pub fn with_burn_in(mut self, burn_in: f64) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn check(&self) -> Result<(), SimError> {
        if !(self.burn_in >= 0.0 && self.horizon > self.burn_in && self.horizon.is_finite()) {
            return Err(SimError::BadHorizon {
                horizon: self.horizon,
                burn_in: self.burn_in,
            });
        }
        if self.batches < 2 {
            return Err(SimError::TooFewBatches(self.batches));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeRate {
    pub i: usize,
    pub j: usize,
    pub rate: Estimate,
}

/// Long-run averages from one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimEstimate {
    pub policy: String,
    pub seed: u64,
    pub horizon: f64,
    pub burn_in: f64,
    pub batches: usize,
    pub events: u64,
    pub reward_rate: Estimate,
    /// `x_ij` estimates for every usable edge.
    pub match_rates: Vec<EdgeRate>,
    /// `x_ia` estimates.
    pub abandon_rates: Vec<Estimate>,
    /// Total match rate into each online type.
    pub online_match_rates: Vec<Estimate>,
    /// Fraction of arrivals of each online type that were matched.
    pub per_online_match_prob: Vec<Estimate>,
    /// Time-average queue length per offline type.
    pub mean_queue: Vec<Estimate>,
    /// `x_ia + sum_j x_ij - lambda_i`, batch by batch.
    pub flow_residual: Vec<Estimate>,
    /// `gamma_j * match fraction - sum_i x_ij`, batch by batch.
    pub pasta_residual: Vec<Estimate>,
    /// Time-weighted share of the window spent at each queue length.
    pub occupancy: Vec<Vec<f64>>,
}

pub const CSV_HEADER: &str =
    "policy,seed,horizon,burn_in,batches,events,reward_rate,reward_rate_ci";

impl SimEstimate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("estimate serialization cannot fail")
    }

    /// One row under [`CSV_HEADER`].
    pub fn csv_row(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "{},{},{},{},{},{},{},{}",
            self.policy,
            self.seed,
            format_sig(self.horizon),
            format_sig(self.burn_in),
            self.batches,
            self.events,
            format_sig(self.reward_rate.mean),
            format_sig(self.reward_rate.ci)
        );
        s
    }
}

/// Formats `x` with 9 significant digits, dropping trailing zeros.
///
/// ```
/// use stationary_matching::simulator::format_sig;
///
/// assert_eq!(format_sig(0.5), "0.5");
/// assert_eq!(format_sig(1.0 / 3.0), "0.333333333");
/// assert_eq!(format_sig(2.5e-9), "2.50000000e-9");
/// ```
pub fn format_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..9).contains(&exp) {
        let s = format!("{:.*}", (8 - exp).max(0) as usize, x);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.8e}")
    }
}

/// Result of [`estimate_ratio`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioEstimate {
    pub ratio: f64,
    pub ci: f64,
    pub replications: Vec<SimEstimate>,
}

/// Runs `reps` replications in parallel, replication `r` seeded with
/// `derive_seed(cfg.seed, r)`, and compares the mean reward rate with
/// `sol.objective`.
///
/// With one replication the interval is that run's batch-means interval;
/// otherwise it comes from the spread across replications.
pub fn estimate_ratio(
    inst: &ProblemInstance,
    policy: &Policy,
    sol: &LpSolution,
    reps: usize,
    cfg: &SimConfig,
) -> Result<RatioEstimate, SimError> {
    if sol.objective <= 0.0 {
        return Err(SimError::ZeroObjective);
    }
    let replications = replicate(inst, policy, reps, cfg)?;
    let rate = if reps == 1 {
        replications[0].reward_rate
    } else {
        Estimate::from_samples(
            &replications
                .iter()
                .map(|r| r.reward_rate.mean)
                .collect::<Vec<_>>(),
        )
    };
    Ok(RatioEstimate {
        ratio: rate.mean / sol.objective,
        ci: rate.ci / sol.objective,
        replications,
    })
}

/// Independent replications, in replication order.
pub fn replicate(
    inst: &ProblemInstance,
    policy: &Policy,
    reps: usize,
    cfg: &SimConfig,
) -> Result<Vec<SimEstimate>, SimError> {
    if reps == 0 {
        return Err(SimError::NoReplications);
    }
    (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            simulate(
                inst,
                policy,
                &cfg.clone().with_seed(derive_seed(cfg.seed, r)),
            )
        })
        .collect()
}

/// Time-average queue length per offline type.
pub fn mean_queue_lengths(
    inst: &ProblemInstance,
    policy: &Policy,
    cfg: &SimConfig,
) -> Result<Vec<Estimate>, SimError> {
    simulate(inst, policy, cfg).map(|e| e.mean_queue)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(format_sig(0.0), "0");
        assert_eq!(format_sig(123456789.0), "123456789");
        assert_eq!(format_sig(-0.25), "-0.25");
        assert_eq!(format_sig(1e10), "1.00000000e10");
        assert_eq!(format_sig(0.000123456789123), "0.000123456789");
    }

    #[test]
    fn config_checks() {
        assert!(SimConfig::new(10.0, 0).check().is_ok());
        assert!(SimConfig::new(10.0, 0).with_burn_in(10.0).check().is_err());
        assert!(SimConfig {
            batches: 1,
            ..SimConfig::new(10.0, 0)
        }
        .check()
        .is_err());
    }
}
