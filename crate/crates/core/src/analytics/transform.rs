use std::collections::BTreeMap;

use serde::Serialize;

use super::classify::in_window;
use super::{check_online, classify, AnalyticsError};
use crate::instance::{top_bot_split, Names, ProblemInstance, Section};
use crate::lp::{
    check_feasibility, lp_gain, proposal_probabilities, FeasibilityOptions, LpSolution,
};

/// Output of the two-step instance transformation.
#[derive(Debug, Clone)]
pub struct TransformedInstance {
    /// TOP copy of original offline type `i` is `i`, BOT copy is `n + i`.
    pub instance: ProblemInstance,
    pub sol: LpSolution,
    /// Reward rate of the original solution lost in the pruning step.
    pub dropped_gain: f64,
    pub original_gain: f64,
    /// `Gamma_i`: total `gamma` over the original support of `i`, per copy.
    pub depletion_load: Vec<f64>,
    /// Original online id of each surviving online type.
    pub online_origin: Vec<usize>,
    /// Original offline id of each copy.
    pub offline_origin: Vec<usize>,
    /// `r_j` per surviving online type.
    pub thresholds: Vec<f64>,
    pub epsilon: f64,
    pub epsilon_prime: f64,
}

/// Removes easy online types and off-window or low-proposal edges, then
/// splits every offline type into a TOP and a BOT half.
///
/// ```
/// use stationary_matching::analytics::{instance_transformation, weak_chain_te_probability};
/// use stationary_matching::instance::{example_instance, ExampleName};
///
/// let b3 = example_instance(ExampleName::B3, 50).unwrap();
/// let t = instance_transformation(&b3.instance, b3.solution.as_ref().unwrap(), 0.05, 0.05).unwrap();
/// assert_eq!(t.instance.num_online(), 1);
/// assert_eq!(t.instance.num_offline(), 100);
/// assert!((weak_chain_te_probability(&t, 0).unwrap() - (-25.0f64 / 52.0).exp()).abs() < 1e-12);
/// ```
pub fn instance_transformation(
    inst: &ProblemInstance,
    sol: &LpSolution,
    epsilon: f64,
    epsilon_prime: f64,
) -> Result<TransformedInstance, AnalyticsError> {
    let class = classify(inst, sol, epsilon, epsilon_prime)?;
    let p = proposal_probabilities(inst, sol)?;
    let hard: Vec<usize> = class.hard_types().collect();
    if hard.is_empty() {
        return Err(AnalyticsError::EmptyTransform);
    }
    let thresholds: Vec<f64> = hard
        .iter()
        .map(|&j| class.types[j].r_threshold.unwrap_or(0.0))
        .collect();

    let mut rewards = BTreeMap::new();
    let mut x_match = BTreeMap::new();
    for (new_j, &j) in hard.iter().enumerate() {
        for &i in inst.online_neighbors(j) {
            let r = inst.reward(i, j).unwrap_or(0.0);
            if in_window(r, thresholds[new_j], epsilon) && p.get(i, j) >= 1.0 - epsilon_prime {
                rewards.insert((i, new_j), r);
                x_match.insert((i, new_j), sol.x(i, j));
            }
        }
    }
    let names = Names {
        offline: inst.names().offline.clone(),
        online: hard
            .iter()
            .map(|&j| inst.names().online[j].clone())
            .collect(),
    };
    let online = hard.iter().map(|&j| inst.online()[j]).collect();
    let pruned = ProblemInstance::with_names(inst.offline().to_vec(), online, rewards, names);
    let split = top_bot_split(&pruned)?;

    let n = inst.num_offline();
    let halves = x_match
        .iter()
        .flat_map(|(&(i, j), &x)| [((i, j), x / 2.0), ((n + i, j), x / 2.0)])
        .collect();
    let x_abandon: Vec<f64> = (0..2 * n).map(|c| sol.x_abandon[c % n] / 2.0).collect();
    let gain = lp_gain(
        &split,
        &LpSolution::new(sol.benchmark, halves, vec![], 0.0),
        0..split.num_online(),
    )?;
    let halves = x_match
        .iter()
        .flat_map(|(&(i, j), &x)| [((i, j), x / 2.0), ((n + i, j), x / 2.0)])
        .collect();
    let new_sol = LpSolution::new(sol.benchmark, halves, x_abandon, gain);

    let support_gamma: Vec<f64> = (0..n)
        .map(|i| {
            inst.offline_neighbors(i)
                .iter()
                .filter(|&&j| sol.x(i, j) > 0.0)
                .map(|&j| inst.online()[j].gamma)
                .sum()
        })
        .collect();
    let original_gain = sol.reward_rate(inst);
    Ok(TransformedInstance {
        instance: split,
        sol: new_sol,
        dropped_gain: original_gain - gain,
        original_gain,
        depletion_load: (0..2 * n).map(|c| support_gamma[c % n]).collect(),
        online_origin: hard,
        offline_origin: (0..2 * n).map(|c| c % n).collect(),
        thresholds,
        epsilon,
        epsilon_prime,
    })
}

/// `prod_{i in TOP, i ~ j} exp(-lambda_i / (mu_i + Gamma_i))`.
pub fn weak_chain_te_probability(t: &TransformedInstance, j: usize) -> Result<f64, AnalyticsError> {
    check_online(&t.instance, j)?;
    let s: f64 = t
        .instance
        .online_neighbors(j)
        .iter()
        .filter(|&&i| t.instance.offline()[i].section == Section::Top)
        .map(|&i| {
            let o = t.instance.offline()[i];
            o.lambda / (o.mu + t.depletion_load[i])
        })
        .sum();
    Ok((-s).exp())
}

/// Structural checks on a transformed instance.
#[derive(Debug, Clone, Default, Serialize)]
pub struct PropertyReport {
    pub min_proposal: f64,
    /// Largest TOP/BOT mismatch in load or LP mass over online types.
    pub max_balance_gap: f64,
    pub max_feasibility_violation: f64,
    pub violations: Vec<String>,
}

impl PropertyReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks surviving proposals, the reward window, the abandonment and
/// matching-rate sandwiches, TOP/BOT balance and LP feasibility.
pub fn check_transformed_properties(
    t: &TransformedInstance,
) -> Result<PropertyReport, AnalyticsError> {
    let inst = &t.instance;
    let sol = &t.sol;
    let ep = t.epsilon_prime;
    let p = proposal_probabilities(inst, sol)?;
    let mut rep = PropertyReport {
        min_proposal: 1.0,
        ..Default::default()
    };

    for j in 0..inst.num_online() {
        let gamma = inst.online()[j].gamma;
        let nbrs = inst.online_neighbors(j);
        let mut abandon = 0.0;
        for &i in nbrs {
            let o = inst.offline()[i];
            let pij = p.get(i, j);
            rep.min_proposal = rep.min_proposal.min(pij);
            if pij < 1.0 - ep {
                rep.violations
                    .push(format!("p({i},{j}) = {pij} below 1 - eps'"));
            }
            let r = inst.reward(i, j).unwrap_or(0.0);
            if !in_window(r, t.thresholds[j], t.epsilon) {
                rep.violations.push(format!(
                    "reward({i},{j}) = {r} outside the window at {}",
                    t.thresholds[j]
                ));
            }
            abandon += sol.x_abandon[i] / o.mu;
            let base = o.lambda / (o.mu + t.depletion_load[i]);
            let x = sol.x(i, j);
            if x < (1.0 - ep) * gamma * base || x > gamma * base / (1.0 - ep) {
                rep.violations.push(format!(
                    "x({i},{j}) = {x} outside its sandwich around {}",
                    gamma * base
                ));
            }
            let xa = sol.x_abandon[i];
            if xa < o.mu * base || xa > o.mu * base / (1.0 - ep) {
                rep.violations.push(format!(
                    "x_a({i}) = {xa} outside its sandwich around {}",
                    o.mu * base
                ));
            }
        }
        if abandon < 1.0 - ep || abandon > 1.0 / (1.0 - ep) {
            rep.violations.push(format!(
                "type {j}: sum x_a / mu = {abandon} outside [1 - eps', 1 / (1 - eps')]"
            ));
        }
        let side = |sec: Section| {
            let members = nbrs
                .iter()
                .copied()
                .filter(|&i| inst.offline()[i].section == sec);
            let load = inst.load_of(members.clone());
            let mass: f64 = members.map(|i| sol.x(i, j)).sum();
            (load, mass)
        };
        let (top, bot) = (side(Section::Top), side(Section::Bot));
        let gap = (top.0 - bot.0).abs().max((top.1 - bot.1).abs());
        rep.max_balance_gap = rep.max_balance_gap.max(gap);
        if gap > 1e-12 {
            rep.violations
                .push(format!("type {j}: TOP/BOT imbalance {gap:e}"));
        }
    }

    let opts = FeasibilityOptions {
        slack_flow: true,
        random_subsets: 64,
        ..Default::default()
    };
    let feas = check_feasibility(inst, sol, &opts);
    rep.max_feasibility_violation = feas.max_violation;
    rep.violations.extend(feas.violations);
    Ok(rep)
}
