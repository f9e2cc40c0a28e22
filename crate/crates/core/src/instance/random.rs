use std::ops::RangeInclusive;

use rand::Rng;

use super::{OfflineType, OnlineType, ProblemInstance};

/// Knobs for [`random_instance`].
#[derive(Debug, Clone)]
pub struct RandomInstanceParams {
    pub offline: RangeInclusive<usize>,
    pub online: RangeInclusive<usize>,
    /// Range for every lambda, mu and gamma.
    pub rates: (f64, f64),
    pub rewards: (f64, f64),
    pub edge_probability: f64,
}

impl Default for RandomInstanceParams {
    fn default() -> Self {
        Self {
            offline: 2..=8,
            online: 2..=8,
            rates: (0.2, 3.0),
            rewards: (0.0, 10.0),
            edge_probability: 0.5,
        }
    }
}

/// Draws an instance where every online type has at least one edge.
pub fn random_instance<R: Rng + ?Sized>(
    params: &RandomInstanceParams,
    rng: &mut R,
) -> ProblemInstance {
    let n = rng.random_range(params.offline.clone());
    let m = rng.random_range(params.online.clone());
    let (lo, hi) = params.rates;
    let offline = (0..n)
        .map(|_| OfflineType::new(rng.random_range(lo..=hi), rng.random_range(lo..=hi)))
        .collect();
    let online = (0..m)
        .map(|_| OnlineType::new(rng.random_range(lo..=hi)))
        .collect();
    let (rlo, rhi) = params.rewards;
    let mut edges = Vec::new();
    for j in 0..m {
        let before = edges.len();
        for i in 0..n {
            if rng.random_bool(params.edge_probability) {
                edges.push(((i, j), rng.random_range(rlo..=rhi)));
            }
        }
        if edges.len() == before {
            edges.push(((rng.random_range(0..n), j), rng.random_range(rlo..=rhi)));
        }
    }
    ProblemInstance::new(offline, online, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::validate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_instances_are_valid_and_connected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let inst = random_instance(&RandomInstanceParams::default(), &mut rng);
            assert!(validate(&inst).is_empty());
            assert!((0..inst.num_online()).all(|j| !inst.online_neighbors(j).is_empty()));
            assert!(inst.min_rate() >= 0.2);
        }
    }
}
