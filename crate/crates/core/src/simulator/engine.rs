use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use super::stats::{Areas, Estimate, Layout};
use super::{EdgeRate, Policy, PolicyKind, SimConfig, SimError, SimEstimate};
use crate::instance::{ProblemInstance, Section};
use crate::pivotal::first_crossing;
use crate::rng::{rng_from_seed, SimRng};

/// A usable edge as seen from its online endpoint.
#[derive(Debug, Clone, Copy)]
struct Arm {
    i: usize,
    reward: f64,
    p: f64,
    edge: usize,
}

/// Arms per online type plus the `(i, j)` key of every edge index.
type ArmTable = (Vec<Vec<Arm>>, Vec<(usize, usize)>);

/// Per online type, usable arms in the order the policy scans them.
fn arms(inst: &ProblemInstance, policy: &Policy) -> Result<ArmTable, SimError> {
    if policy.kind == PolicyKind::BalancedGreedy && !inst.is_labeled() {
        return Err(SimError::MissingLabels);
    }
    if let PolicyKind::CorrelatedProposals(pm) = &policy.kind {
        for (&(i, j), &p) in &pm.p {
            if !inst.has_edge(i, j) || !(0.0..=1.0).contains(&p) {
                return Err(SimError::BadProposal { i, j });
            }
        }
    }
    let mut edges = Vec::new();
    let mut out = Vec::with_capacity(inst.num_online());
    for j in 0..inst.num_online() {
        let mut list: Vec<Arm> = inst
            .online_neighbors(j)
            .iter()
            .filter(|&&i| policy.allows(i, j))
            .map(|&i| {
                let p = match &policy.kind {
                    PolicyKind::CorrelatedProposals(pm) => pm.get(i, j),
                    _ => 1.0,
                };
                edges.push((i, j));
                Arm {
                    i,
                    reward: inst.reward(i, j).unwrap_or(0.0),
                    p,
                    edge: edges.len() - 1,
                }
            })
            .collect();
        match policy.kind {
            PolicyKind::BalancedGreedy => {
                list.sort_by_key(|a| (inst.offline()[a.i].section != Section::Top, a.i));
            }
            PolicyKind::NoMatch => list.retain(|_| false),
            _ => list.sort_by(|a, b| b.reward.total_cmp(&a.reward).then(a.i.cmp(&b.i))),
        }
        out.push(list);
    }
    Ok((out, edges))
}

#[derive(Clone)]
struct Batch {
    reward: f64,
    matches: Vec<u64>,
    abandons: Vec<u64>,
    arrivals: Vec<u64>,
    matched: Vec<u64>,
}

/// Simulates `policy` on `inst` over `[0, cfg.horizon]` from empty queues.
pub fn simulate(
    inst: &ProblemInstance,
    policy: &Policy,
    cfg: &SimConfig,
) -> Result<SimEstimate, SimError> {
    cfg.check()?;
    let (arms, edges) = arms(inst, policy)?;
    let n = inst.num_offline();
    let m = inst.num_online();
    let lambda_total = inst.total_lambda();
    let gamma_total = inst.total_gamma();
    let base = lambda_total + gamma_total;
    let offline_pick = WeightedIndex::new(inst.offline().iter().map(|o| o.lambda)).ok();
    let online_pick = WeightedIndex::new(inst.online().iter().map(|o| o.gamma)).ok();

    let layout = Layout::new(cfg.burn_in, cfg.horizon, cfg.batches);
    let empty = Batch {
        reward: 0.0,
        matches: vec![0; edges.len()],
        abandons: vec![0; n],
        arrivals: vec![0; m],
        matched: vec![0; m],
    };
    let mut batches = vec![empty; cfg.batches];
    let mut queue = Areas::new(vec![0.0; n], cfg.batches);
    let mut occupancy: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut since = vec![0.0; n];
    let mut q = vec![0u64; n];
    let mut present = 0u64;
    let mut departure_rate = 0.0;
    let mut rng: SimRng = rng_from_seed(cfg.seed);
    let mut t = 0.0;
    let mut events = 0u64;

    let mut set_queue = |i: usize, t: f64, new: u64, q: &mut Vec<u64>, queue: &mut Areas| {
        let old = q[i] as usize;
        let hist = &mut occupancy[i];
        layout.overlap(since[i], t, |_, dt| {
            if hist.len() <= old {
                hist.resize(old + 1, 0.0);
            }
            hist[old] += dt;
        });
        since[i] = t;
        q[i] = new;
        queue.set(&layout, i, t, new as f64);
    };

    loop {
        let total = base + departure_rate;
        if !(total.is_finite() && total > 0.0) {
            return Err(SimError::RateOverflow(total));
        }
        t += -(1.0 - rng.random::<f64>()).ln() / total;
        if t >= cfg.horizon {
            break;
        }
        events += 1;
        let batch = layout.index(t);
        let mut u = rng.random::<f64>() * total;
        if u < lambda_total {
            let i = offline_pick.as_ref().map_or(0, |d| d.sample(&mut rng));
            set_queue(i, t, q[i] + 1, &mut q, &mut queue);
            present += 1;
            departure_rate += inst.offline()[i].mu;
        } else if u < base {
            let j = online_pick.as_ref().map_or(0, |d| d.sample(&mut rng));
            let choice = match &policy.kind {
                PolicyKind::CorrelatedProposals(_) => {
                    let draw = rng.random::<f64>();
                    first_crossing(arms[j].iter().map(|a| (a.p, q[a.i])), draw).map(|k| arms[j][k])
                }
                _ => arms[j].iter().find(|a| q[a.i] > 0).copied(),
            };
            if let Some(b) = batch {
                batches[b].arrivals[j] += 1;
            }
            if let Some(a) = choice {
                set_queue(a.i, t, q[a.i] - 1, &mut q, &mut queue);
                present -= 1;
                departure_rate -= inst.offline()[a.i].mu;
                if let Some(b) = batch {
                    let bt = &mut batches[b];
                    bt.reward += a.reward;
                    bt.matches[a.edge] += 1;
                    bt.matched[j] += 1;
                }
            }
        } else {
            u -= base;
            let mut chosen = None;
            for (i, o) in inst.offline().iter().enumerate() {
                if q[i] == 0 {
                    continue;
                }
                chosen = Some(i);
                let w = q[i] as f64 * o.mu;
                if u < w {
                    break;
                }
                u -= w;
            }
            if let Some(i) = chosen {
                set_queue(i, t, q[i] - 1, &mut q, &mut queue);
                present -= 1;
                departure_rate -= inst.offline()[i].mu;
                if let Some(b) = batch {
                    batches[b].abandons[i] += 1;
                }
            }
        }
        if present == 0 {
            departure_rate = 0.0;
        } else if events % 4096 == 0 {
            departure_rate = q
                .iter()
                .zip(inst.offline())
                .map(|(&k, o)| k as f64 * o.mu)
                .sum();
        }
    }
    for i in 0..n {
        set_queue(i, cfg.horizon, q[i], &mut q, &mut queue);
    }

    let len = layout.batch_len();
    let window = cfg.horizon - cfg.burn_in;
    let per_batch = |f: &dyn Fn(&Batch) -> f64| {
        Estimate::from_samples(&batches.iter().map(f).collect::<Vec<_>>())
    };
    let online_rate =
        |bt: &Batch, j: usize| arms[j].iter().map(|a| bt.matches[a.edge]).sum::<u64>() as f64 / len;
    let fraction = |bt: &Batch, j: usize| {
        if bt.arrivals[j] == 0 {
            0.0
        } else {
            bt.matched[j] as f64 / bt.arrivals[j] as f64
        }
    };
    let mut by_offline = vec![Vec::new(); n];
    for (k, &(i, _)) in edges.iter().enumerate() {
        by_offline[i].push(k);
    }
    let outflow = |bt: &Batch, i: usize| {
        let matched: u64 = by_offline[i].iter().map(|&k| bt.matches[k]).sum();
        (matched + bt.abandons[i]) as f64 / len
    };
    Ok(SimEstimate {
        policy: policy.name().to_string(),
        seed: cfg.seed,
        horizon: cfg.horizon,
        burn_in: cfg.burn_in,
        batches: cfg.batches,
        events,
        reward_rate: per_batch(&|bt| bt.reward / len),
        match_rates: edges
            .iter()
            .enumerate()
            .map(|(k, &(i, j))| EdgeRate {
                i,
                j,
                rate: per_batch(&|bt| bt.matches[k] as f64 / len),
            })
            .collect(),
        abandon_rates: (0..n)
            .map(|i| per_batch(&|bt| bt.abandons[i] as f64 / len))
            .collect(),
        online_match_rates: (0..m)
            .map(|j| per_batch(&|bt| online_rate(bt, j)))
            .collect(),
        per_online_match_prob: (0..m).map(|j| per_batch(&|bt| fraction(bt, j))).collect(),
        mean_queue: queue.estimates(&layout),
        flow_residual: (0..n)
            .map(|i| per_batch(&|bt| outflow(bt, i) - inst.offline()[i].lambda))
            .collect(),
        pasta_residual: (0..m)
            .map(|j| per_batch(&|bt| inst.online()[j].gamma * fraction(bt, j) - online_rate(bt, j)))
            .collect(),
        occupancy: occupancy
            .into_iter()
            .map(|h| h.into_iter().map(|v| v / window).collect())
            .collect(),
    })
}
