use std::collections::BTreeMap;

use super::{ExternalId, InstanceError, OfflineType, OnlineType, ProblemInstance, Section};

fn suffixed(id: &ExternalId, tag: &str) -> ExternalId {
    match id {
        ExternalId::Num(n) => ExternalId::Str(format!("{n}{tag}")),
        ExternalId::Str(s) => ExternalId::Str(format!("{s}{tag}")),
    }
}

/// Replaces offline type `i` by `k` copies of rate `lambda_i / k`.
///
/// Copy 0 keeps id `i`; the others are appended after the existing types,
/// in order, each with the same `mu`, section and incident rewards.
pub fn split_offline_type(
    inst: &ProblemInstance,
    i: usize,
    k: usize,
) -> Result<ProblemInstance, InstanceError> {
    if i >= inst.num_offline() {
        return Err(InstanceError::UnknownOffline(i));
    }
    if k == 0 {
        return Err(InstanceError::ZeroSplit);
    }
    let n = inst.num_offline();
    let mut offline = inst.offline.clone();
    let mut names = inst.names.clone();
    let copy = OfflineType {
        lambda: inst.offline[i].lambda / k as f64,
        ..inst.offline[i]
    };
    offline[i] = copy;
    let mut rewards = inst.rewards.clone();
    for c in 1..k {
        offline.push(copy);
        names
            .offline
            .push(suffixed(&inst.names.offline[i], &format!("#{c}")));
        for &j in inst.offline_neighbors(i) {
            rewards.insert((n + c - 1, j), inst.rewards[&(i, j)]);
        }
    }
    Ok(ProblemInstance::with_names(
        offline,
        inst.online.clone(),
        rewards,
        names,
    ))
}

/// Number of copies per offline type that makes every queue nearly binary:
/// after splitting, `lambda / mu <= epsilon^2` for every copy.
pub fn binary_queue_split_count(inst: &ProblemInstance, epsilon: f64) -> usize {
    let u = inst
        .offline
        .iter()
        .map(OfflineType::load)
        .fold(0.0, f64::max);
    let n = inst.num_offline() as f64;
    let k = if u > 1.0 {
        u * u * n * n / (epsilon * epsilon)
    } else {
        n * n / (epsilon * epsilon)
    };
    k.ceil() as usize
}

/// Halves every offline type into a TOP copy (same id) and a BOT copy
/// (id `n + i`), each with half the arrival rate.
///
/// ```
/// use stationary_matching::instance::{top_bot_split, OfflineType, OnlineType, ProblemInstance, Section};
///
/// let inst = ProblemInstance::new(vec![OfflineType::new(2.0, 1.0)], vec![OnlineType::new(1.0)], [((0, 0), 1.0)]);
/// let split = top_bot_split(&inst).unwrap();
/// assert_eq!(split.offline()[0].lambda, 1.0);
/// assert_eq!(split.offline()[1].section, Section::Bot);
/// assert_eq!(split.num_edges(), 2);
/// ```
pub fn top_bot_split(inst: &ProblemInstance) -> Result<ProblemInstance, InstanceError> {
    if inst.has_labels() {
        return Err(InstanceError::AlreadyLabeled);
    }
    let n = inst.num_offline();
    let half = |o: &OfflineType, s| OfflineType {
        lambda: o.lambda / 2.0,
        mu: o.mu,
        section: s,
    };
    let offline: Vec<_> = inst
        .offline
        .iter()
        .map(|o| half(o, Section::Top))
        .chain(inst.offline.iter().map(|o| half(o, Section::Bot)))
        .collect();
    let mut names = inst.names.clone();
    names.offline = inst
        .names
        .offline
        .iter()
        .map(|id| suffixed(id, "/top"))
        .chain(inst.names.offline.iter().map(|id| suffixed(id, "/bot")))
        .collect();
    let rewards = inst
        .rewards
        .iter()
        .flat_map(|(&(i, j), &r)| [((i, j), r), ((n + i, j), r)])
        .collect();
    Ok(ProblemInstance::with_names(
        offline,
        inst.online.clone(),
        rewards,
        names,
    ))
}

/// A non-bipartite instance: every type arrives, waits and can be matched
/// to any type it shares a reward entry with.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralInstance {
    /// `(lambda, mu)` per type.
    pub types: Vec<(f64, f64)>,
    /// Must be symmetric: `(u, v)` present iff `(v, u)` is, with equal value.
    pub rewards: BTreeMap<(usize, usize), f64>,
}

impl GeneralInstance {
    /// Builds a symmetric instance from one orientation of each edge.
    pub fn symmetric(
        types: Vec<(f64, f64)>,
        edges: impl IntoIterator<Item = ((usize, usize), f64)>,
    ) -> Self {
        let mut rewards = BTreeMap::new();
        for ((u, v), r) in edges {
            rewards.insert((u, v), r);
            rewards.insert((v, u), r);
        }
        Self { types, rewards }
    }
}

/// Splits every type into an offline copy and an online copy, each carrying
/// half the arrival rate; edges only join opposite copies.
///
/// Losing the matches between same-side copies costs at most a factor 4 of
/// the general optimum.
pub fn bipartite_reduction(general: &GeneralInstance) -> Result<ProblemInstance, InstanceError> {
    for (&(u, v), &r) in &general.rewards {
        if general.rewards.get(&(v, u)) != Some(&r) {
            return Err(InstanceError::Asymmetric(u, v));
        }
    }
    let offline = general
        .types
        .iter()
        .map(|&(l, m)| OfflineType::new(l / 2.0, m))
        .collect();
    let online = general
        .types
        .iter()
        .map(|&(l, _)| OnlineType::new(l / 2.0))
        .collect();
    Ok(ProblemInstance::new(
        offline,
        online,
        general.rewards.iter().map(|(&k, &r)| (k, r)),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two() -> ProblemInstance {
        ProblemInstance::new(
            vec![OfflineType::new(1.0, 1.0), OfflineType::new(3.0, 2.0)],
            vec![OnlineType::new(1.0), OnlineType::new(0.5)],
            [((0, 0), 1.0), ((1, 0), 2.0), ((1, 1), 0.0)],
        )
    }

    #[test]
    fn split_halves() {
        let inst = ProblemInstance::new(
            vec![OfflineType::new(1.0, 1.0)],
            vec![OnlineType::new(1.0)],
            [((0, 0), 1.0)],
        );
        let s = split_offline_type(&inst, 0, 2).unwrap();
        assert_eq!(s.num_offline(), 2);
        assert!(s.offline().iter().all(|o| o.lambda == 0.5));
        assert_eq!(s.reward(1, 0), Some(1.0));
    }

    #[test]
    fn split_by_one_is_identity() {
        let inst = two_by_two();
        assert_eq!(split_offline_type(&inst, 1, 1).unwrap(), inst);
    }

    #[test]
    fn split_rejects_bad_input() {
        assert_eq!(
            split_offline_type(&two_by_two(), 5, 2),
            Err(InstanceError::UnknownOffline(5))
        );
        assert_eq!(
            split_offline_type(&two_by_two(), 0, 0),
            Err(InstanceError::ZeroSplit)
        );
    }

    #[test]
    fn binary_queue_sizing_bounds_every_load() {
        let eps = 0.3;
        let inst = two_by_two();
        let k = binary_queue_split_count(&inst, eps);
        let mut s = inst.clone();
        for i in 0..inst.num_offline() {
            s = split_offline_type(&s, i, k).unwrap();
        }
        assert_eq!(s.num_offline(), 2 * k);
        assert!(s.offline().iter().all(|o| o.load() <= eps * eps));
        assert!((s.total_lambda() - inst.total_lambda()).abs() < 1e-9);
    }

    #[test]
    fn top_bot_split_is_balanced_and_doubles_edges() {
        let inst = two_by_two();
        let s = top_bot_split(&inst).unwrap();
        assert_eq!(s.num_edges(), 2 * inst.num_edges());
        for j in 0..s.num_online() {
            let load = |sec| {
                s.load_of(
                    s.online_neighbors(j)
                        .iter()
                        .copied()
                        .filter(|&i| s.offline()[i].section == sec),
                )
            };
            assert_eq!(load(Section::Top), load(Section::Bot));
        }
        assert_eq!(top_bot_split(&s), Err(InstanceError::AlreadyLabeled));
    }

    #[test]
    fn reduction_of_a_single_type() {
        let g = GeneralInstance::symmetric(vec![(2.0, 1.0)], [((0, 0), 1.0)]);
        let b = bipartite_reduction(&g).unwrap();
        assert_eq!(b.offline()[0].lambda, 1.0);
        assert_eq!(b.online()[0].gamma, 1.0);
        assert_eq!(b.num_edges(), 1);
    }

    #[test]
    fn reduction_rejects_asymmetry() {
        let mut g = GeneralInstance::symmetric(vec![(1.0, 1.0), (1.0, 1.0)], [((0, 1), 1.0)]);
        g.rewards.insert((1, 0), 2.0);
        assert!(matches!(
            bipartite_reduction(&g),
            Err(InstanceError::Asymmetric(..))
        ));
    }
}
