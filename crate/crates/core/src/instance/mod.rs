//! Problem instances: offline types that arrive, wait and abandon; online
//! types that must be matched on arrival; and a sparse reward map between
//! them.
//!
//! Ids are dense 0-based positions. Instances are immutable once built and
//! every transform returns a fresh instance.

mod builtin;
mod io;
mod random;
mod transform;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use builtin::{
    example_b2_solution, example_b3_solution, example_instance, BuiltinExample, ExampleName,
};
pub use io::{ExternalId, LoadError, Names};
pub use random::{random_instance, RandomInstanceParams};
pub use transform::{
    binary_queue_split_count, bipartite_reduction, split_offline_type, top_bot_split,
    GeneralInstance,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InstanceError {
    #[error("unknown built-in example {0:?} (expected B1, B2 or B3)")]
    UnknownExample(String),
    #[error("built-in examples need n >= 2, got {0}")]
    TooSmall(usize),
    #[error("offline type {0} does not exist")]
    UnknownOffline(usize),
    #[error("split count must be at least 1")]
    ZeroSplit,
    #[error("instance already carries TOP/BOT labels")]
    AlreadyLabeled,
    #[error("reward ({0}, {1}) has no matching ({1}, {0}) entry of equal value")]
    Asymmetric(usize, usize),
}

/// Cap applied to `sum lambda/mu` before exponentiating. Beyond it
/// `1 - exp(-s)` is exactly 1 in double precision anyway.
pub const LOAD_CAP: f64 = 700.0;

/// `1 - exp(-s)` with `s` capped at [`LOAD_CAP`].
pub fn presence_probability(load: f64) -> f64 {
    -(-load.min(LOAD_CAP)).exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Section {
    Top,
    Bot,
    #[default]
    None,
}

/// An offline type: arrives at rate `lambda`, each node waits `Exp(mu)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfflineType {
    pub lambda: f64,
    pub mu: f64,
    pub section: Section,
}

impl OfflineType {
    pub fn new(lambda: f64, mu: f64) -> Self {
        Self {
            lambda,
            mu,
            section: Section::None,
        }
    }

    pub fn with_section(mut self, section: Section) -> Self {
        self.section = section;
        self
    }

    /// Mean number of present nodes, `lambda / mu`.
    pub fn load(&self) -> f64 {
        self.lambda / self.mu
    }
}

/// An online (impatient) type arriving at rate `gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnlineType {
    pub gamma: f64,
}

impl OnlineType {
    pub fn new(gamma: f64) -> Self {
        Self { gamma }
    }
}

/// Edge key: `(offline id, online id)`.
pub type EdgeKey = (usize, usize);

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    offline: Vec<OfflineType>,
    online: Vec<OnlineType>,
    rewards: BTreeMap<EdgeKey, f64>,
    names: Names,
    online_nbrs: Vec<Vec<usize>>,
    offline_nbrs: Vec<Vec<usize>>,
}

impl ProblemInstance {
    /// Builds an instance without validating it; see [`validate`].
    ///
    /// An absent reward entry means "no edge". An explicit `0.0` entry is a
    /// real edge that simply earns nothing.
    pub fn new(
        offline: Vec<OfflineType>,
        online: Vec<OnlineType>,
        rewards: impl IntoIterator<Item = (EdgeKey, f64)>,
    ) -> Self {
        let names = Names::dense(offline.len(), online.len());
        Self::with_names(offline, online, rewards.into_iter().collect(), names)
    }

    pub(crate) fn with_names(
        offline: Vec<OfflineType>,
        online: Vec<OnlineType>,
        rewards: BTreeMap<EdgeKey, f64>,
        names: Names,
    ) -> Self {
        let mut online_nbrs = vec![Vec::new(); online.len()];
        let mut offline_nbrs = vec![Vec::new(); offline.len()];
        for &(i, j) in rewards.keys() {
            if i < offline.len() && j < online.len() {
                online_nbrs[j].push(i);
                offline_nbrs[i].push(j);
            }
        }
        Self {
            offline,
            online,
            rewards,
            names,
            online_nbrs,
            offline_nbrs,
        }
    }

    pub fn offline(&self) -> &[OfflineType] {
        &self.offline
    }

    pub fn online(&self) -> &[OnlineType] {
        &self.online
    }

    pub fn num_offline(&self) -> usize {
        self.offline.len()
    }

    pub fn num_online(&self) -> usize {
        self.online.len()
    }

    pub fn rewards(&self) -> &BTreeMap<EdgeKey, f64> {
        &self.rewards
    }

    pub fn reward(&self, i: usize, j: usize) -> Option<f64> {
        self.rewards.get(&(i, j)).copied()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.rewards.contains_key(&(i, j))
    }

    pub fn num_edges(&self) -> usize {
        self.rewards.len()
    }

    /// Offline neighbours of online type `j`, ascending.
    pub fn online_neighbors(&self, j: usize) -> &[usize] {
        &self.online_nbrs[j]
    }

    /// Online neighbours of offline type `i`, ascending.
    pub fn offline_neighbors(&self, i: usize) -> &[usize] {
        &self.offline_nbrs[i]
    }

    /// `sum of gamma_k` over the online neighbours of `i` in the edge set.
    pub fn neighbor_gamma(&self, i: usize) -> f64 {
        self.offline_nbrs[i]
            .iter()
            .map(|&k| self.online[k].gamma)
            .sum()
    }

    /// `sum of lambda_i / mu_i` over the given offline ids.
    pub fn load_of(&self, ids: impl IntoIterator<Item = usize>) -> f64 {
        ids.into_iter().map(|i| self.offline[i].load()).sum()
    }

    pub fn total_lambda(&self) -> f64 {
        self.offline.iter().map(|o| o.lambda).sum()
    }

    pub fn total_gamma(&self) -> f64 {
        self.online.iter().map(|o| o.gamma).sum()
    }

    pub fn names(&self) -> &Names {
        &self.names
    }

    /// True when every offline type carries a TOP or BOT label.
    pub fn is_labeled(&self) -> bool {
        self.offline.iter().all(|o| o.section != Section::None)
    }

    /// True when any offline type carries a TOP or BOT label.
    pub fn has_labels(&self) -> bool {
        self.offline.iter().any(|o| o.section != Section::None)
    }

    /// Smallest of all arrival and departure rates.
    pub fn min_rate(&self) -> f64 {
        self.offline
            .iter()
            .flat_map(|o| [o.lambda, o.mu])
            .chain(self.online.iter().map(|o| o.gamma))
            .fold(f64::INFINITY, f64::min)
    }

    /// Same instance restricted to the edges accepted by `keep`.
    pub fn filter_edges(&self, mut keep: impl FnMut(usize, usize, f64) -> bool) -> Self {
        let rewards = self
            .rewards
            .iter()
            .filter(|(&(i, j), &r)| keep(i, j, r))
            .map(|(&k, &r)| (k, r))
            .collect();
        Self::with_names(
            self.offline.clone(),
            self.online.clone(),
            rewards,
            self.names.clone(),
        )
    }

    /// Parses the instance JSON format; see [`io`](self) for the schema.
    pub fn from_json(text: &str) -> Result<Self, LoadError> {
        io::parse(text)
    }

    pub fn to_json(&self) -> String {
        io::render(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ViolationKind {
    NoOfflineTypes,
    NoOnlineTypes,
    OfflineLambda(usize),
    OfflineMu(usize),
    OnlineGamma(usize),
    DanglingOffline(EdgeKey),
    DanglingOnline(EdgeKey),
    BadReward(EdgeKey),
}

/// One failed instance invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ViolationKind::NoOfflineTypes => {
                write!(f, "instance: at least one offline type is required")
            }
            ViolationKind::NoOnlineTypes => {
                write!(f, "instance: at least one online type is required")
            }
            ViolationKind::OfflineLambda(i) => write!(f, "offline {i}: lambda must be > 0"),
            ViolationKind::OfflineMu(i) => write!(f, "offline {i}: mu must be > 0"),
            ViolationKind::OnlineGamma(j) => write!(f, "online {j}: gamma must be > 0"),
            ViolationKind::DanglingOffline((i, j)) => {
                write!(f, "reward ({i}, {j}): offline type {i} does not exist")
            }
            ViolationKind::DanglingOnline((i, j)) => {
                write!(f, "reward ({i}, {j}): online type {j} does not exist")
            }
            ViolationKind::BadReward((i, j)) => {
                write!(f, "reward ({i}, {j}): must be finite and >= 0")
            }
        }
    }
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

/// Every invariant violation of `inst`; empty means valid.
pub fn validate(inst: &ProblemInstance) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |kind| out.push(Violation { kind });
    if inst.offline.is_empty() {
        push(ViolationKind::NoOfflineTypes);
    }
    if inst.online.is_empty() {
        push(ViolationKind::NoOnlineTypes);
    }
    for (i, o) in inst.offline.iter().enumerate() {
        if !positive(o.lambda) {
            push(ViolationKind::OfflineLambda(i));
        }
        if !positive(o.mu) {
            push(ViolationKind::OfflineMu(i));
        }
    }
    for (j, o) in inst.online.iter().enumerate() {
        if !positive(o.gamma) {
            push(ViolationKind::OnlineGamma(j));
        }
    }
    for (&(i, j), &r) in &inst.rewards {
        if i >= inst.offline.len() {
            push(ViolationKind::DanglingOffline((i, j)));
        }
        if j >= inst.online.len() {
            push(ViolationKind::DanglingOnline((i, j)));
        }
        if !(r.is_finite() && r >= 0.0) {
            push(ViolationKind::BadReward((i, j)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_by_one() -> ProblemInstance {
        ProblemInstance::new(
            vec![OfflineType::new(1.0, 1.0)],
            vec![OnlineType::new(1.0)],
            [((0, 0), 1.0)],
        )
    }

    #[test]
    fn well_formed_instance_is_valid() {
        assert!(validate(&one_by_one()).is_empty());
    }

    #[test]
    fn zero_lambda_is_reported() {
        let inst = ProblemInstance::new(
            vec![OfflineType::new(1.0, 1.0), OfflineType::new(0.0, 1.0)],
            vec![OnlineType::new(1.0)],
            [((0, 0), 1.0)],
        );
        let v: Vec<String> = validate(&inst).iter().map(ToString::to_string).collect();
        assert_eq!(v, ["offline 1: lambda must be > 0"]);
    }

    #[test]
    fn dangling_online_edge_is_reported() {
        let inst = ProblemInstance::new(
            vec![OfflineType::new(1.0, 1.0)],
            vec![OnlineType::new(1.0)],
            [((0, 0), 1.0), ((0, 3), 2.0)],
        );
        let v = validate(&inst);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::DanglingOnline((0, 3)));
    }

    #[test]
    fn empty_sides_and_bad_rewards() {
        let inst = ProblemInstance::new(vec![], vec![], [((0, 0), -1.0)]);
        let kinds: Vec<_> = validate(&inst).into_iter().map(|v| v.kind).collect();
        assert!(kinds.contains(&ViolationKind::NoOfflineTypes));
        assert!(kinds.contains(&ViolationKind::NoOnlineTypes));
        assert!(kinds.contains(&ViolationKind::BadReward((0, 0))));
    }

    #[test]
    fn explicit_zero_reward_is_an_edge() {
        let inst = ProblemInstance::new(
            vec![OfflineType::new(1.0, 1.0)],
            vec![OnlineType::new(1.0), OnlineType::new(1.0)],
            [((0, 0), 0.0)],
        );
        assert!(inst.has_edge(0, 0));
        assert!(!inst.has_edge(0, 1));
        assert_eq!(inst.online_neighbors(0), &[0]);
        assert!(inst.online_neighbors(1).is_empty());
    }

    #[test]
    fn presence_probability_caps_large_loads() {
        assert_eq!(presence_probability(1e6), 1.0);
        assert!((presence_probability(1.0) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
    }
}
