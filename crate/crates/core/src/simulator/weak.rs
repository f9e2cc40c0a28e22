use rand::Rng;
use serde::Serialize;

use super::stats::{Areas, Estimate, Layout};
use super::{SimConfig, SimError};
use crate::analytics::TransformedInstance;
use crate::instance::Section;
use crate::rng::{rng_from_seed, SimRng};

/// Time averages of the weakly correlated reference chains.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakChainEstimate {
    pub seed: u64,
    pub horizon: f64,
    pub burn_in: f64,
    pub batches: usize,
    pub events: u64,
    /// Per online type: all TOP neighbours empty.
    pub te: Vec<Estimate>,
    /// Per online type: every neighbour empty.
    pub all_empty: Vec<Estimate>,
    pub mean_queue: Vec<Estimate>,
}

/// Simulates the reference chains on a transformed instance.
///
/// TOP queues are independent birth-death chains with per-node death rate
/// `mu_i + Gamma_i`. BOT queues abandon at `mu_i` per node and, while
/// nonempty, are depleted at `sum_j gamma_j` over the neighbours `j` whose
/// TOP neighbourhood is currently empty.
pub fn simulate_weak_chains(
    t: &TransformedInstance,
    cfg: &SimConfig,
) -> Result<WeakChainEstimate, SimError> {
    cfg.check()?;
    let inst = &t.instance;
    if !inst.is_labeled() {
        return Err(SimError::MissingLabels);
    }
    let n = inst.num_offline();
    let m = inst.num_online();
    let top: Vec<bool> = inst
        .offline()
        .iter()
        .map(|o| o.section == Section::Top)
        .collect();
    let death: Vec<f64> = inst
        .offline()
        .iter()
        .enumerate()
        .map(|(i, o)| {
            if top[i] {
                o.mu + t.depletion_load[i]
            } else {
                o.mu
            }
        })
        .collect();
    let lambda_total = inst.total_lambda();

    let layout = Layout::new(cfg.burn_in, cfg.horizon, cfg.batches);
    let mut queue = Areas::new(vec![0.0; n], cfg.batches);
    let mut te = Areas::new(vec![1.0; m], cfg.batches);
    let mut empty = Areas::new(vec![1.0; m], cfg.batches);
    let mut busy_top = vec![0usize; m];
    let mut busy_all = vec![0usize; m];
    let mut q = vec![0u64; n];
    let mut rng: SimRng = rng_from_seed(cfg.seed);
    let mut clock = 0.0;
    let mut events = 0u64;
    let mut rates = vec![0.0; n];

    loop {
        let mut total = lambda_total;
        for i in 0..n {
            rates[i] = if q[i] == 0 {
                0.0
            } else {
                let drain: f64 = if top[i] {
                    0.0
                } else {
                    inst.offline_neighbors(i)
                        .iter()
                        .filter(|&&j| busy_top[j] == 0)
                        .map(|&j| inst.online()[j].gamma)
                        .sum()
                };
                q[i] as f64 * death[i] + drain
            };
            total += rates[i];
        }
        if !(total.is_finite() && total > 0.0) {
            return Err(SimError::RateOverflow(total));
        }
        clock += -(1.0 - rng.random::<f64>()).ln() / total;
        if clock >= cfg.horizon {
            break;
        }
        events += 1;
        let mut u = rng.random::<f64>() * total;
        let mut change = None;
        for (i, (o, &rate)) in inst.offline().iter().zip(&rates).enumerate() {
            let a = o.lambda;
            if u < a {
                change = Some((i, true));
                break;
            }
            u -= a;
            if u < rate {
                change = Some((i, false));
                break;
            }
            u -= rate;
        }
        let Some((i, up)) = change else { continue };
        let before = q[i];
        q[i] = if up { before + 1 } else { before - 1 };
        queue.set(&layout, i, clock, q[i] as f64);
        if (before == 0) != (q[i] == 0) {
            let delta: isize = if up { 1 } else { -1 };
            for &j in inst.offline_neighbors(i) {
                busy_all[j] = busy_all[j].wrapping_add_signed(delta);
                empty.set(&layout, j, clock, (busy_all[j] == 0) as u8 as f64);
                if top[i] {
                    busy_top[j] = busy_top[j].wrapping_add_signed(delta);
                    te.set(&layout, j, clock, (busy_top[j] == 0) as u8 as f64);
                }
            }
        }
    }
    for areas in [&mut queue, &mut te, &mut empty] {
        areas.flush(&layout, cfg.horizon);
    }
    Ok(WeakChainEstimate {
        seed: cfg.seed,
        horizon: cfg.horizon,
        burn_in: cfg.burn_in,
        batches: cfg.batches,
        events,
        te: te.estimates(&layout),
        all_empty: empty.estimates(&layout),
        mean_queue: queue.estimates(&layout),
    })
}
