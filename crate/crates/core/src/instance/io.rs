//! Instance JSON.
//!
//! ```json
//! {"offline":[{"id":0,"lambda":1.0,"mu":1.0,"section":"NONE"}],
//!  "online":[{"id":0,"gamma":1.0}],
//!  "rewards":[{"i":0,"j":0,"r":1.0}]}
//! ```
//!
//! Rates and rewards may also be given as decimal strings (`"0.1"`). Ids may
//! be integers or strings; they are mapped to dense positions in file order
//! and the originals are kept in [`Names`].

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{OfflineType, OnlineType, ProblemInstance, Section};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("malformed instance JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{side} id {id} appears more than once")]
    DuplicateId { side: &'static str, id: ExternalId },
    #[error("reward references unknown {side} id {id}")]
    UnknownId { side: &'static str, id: ExternalId },
    #[error("duplicate reward key ({i}, {j})")]
    DuplicateEdge { i: ExternalId, j: ExternalId },
    #[error("cannot parse {what} value {text:?} as a number")]
    BadNumber { what: &'static str, text: String },
}

/// An id as written in the source file.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExternalId {
    Num(u64),
    Str(String),
}

impl fmt::Display for ExternalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExternalId::Num(n) => write!(f, "{n}"),
            ExternalId::Str(s) => write!(f, "{s:?}"),
        }
    }
}

/// Sidecar map from dense positions back to external ids.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Names {
    pub offline: Vec<ExternalId>,
    pub online: Vec<ExternalId>,
}

impl Names {
    pub(crate) fn dense(n_off: usize, n_on: usize) -> Self {
        Self {
            offline: (0..n_off as u64).map(ExternalId::Num).collect(),
            online: (0..n_on as u64).map(ExternalId::Num).collect(),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Num {
    Float(f64),
    Text(String),
}

impl Num {
    fn value(self, what: &'static str) -> Result<f64, LoadError> {
        match self {
            Num::Float(x) => Ok(x),
            Num::Text(text) => text
                .trim()
                .parse()
                .map_err(|_| LoadError::BadNumber { what, text }),
        }
    }
}

#[derive(Deserialize)]
struct OfflineRecord {
    id: ExternalId,
    lambda: Num,
    mu: Num,
    #[serde(default)]
    section: Section,
}

#[derive(Deserialize)]
struct OnlineRecord {
    id: ExternalId,
    gamma: Num,
}

#[derive(Deserialize)]
struct RewardRecord {
    i: ExternalId,
    j: ExternalId,
    r: Num,
}

#[derive(Deserialize)]
struct InstanceRecord {
    offline: Vec<OfflineRecord>,
    online: Vec<OnlineRecord>,
    #[serde(default)]
    rewards: Vec<RewardRecord>,
}

fn index(ids: &[ExternalId], side: &'static str) -> Result<HashMap<ExternalId, usize>, LoadError> {
    let mut map = HashMap::with_capacity(ids.len());
    for (pos, id) in ids.iter().enumerate() {
        if map.insert(id.clone(), pos).is_some() {
            return Err(LoadError::DuplicateId {
                side,
                id: id.clone(),
            });
        }
    }
    Ok(map)
}

pub(super) fn parse(text: &str) -> Result<ProblemInstance, LoadError> {
    let rec: InstanceRecord = serde_json::from_str(text)?;
    let names = Names {
        offline: rec.offline.iter().map(|o| o.id.clone()).collect(),
        online: rec.online.iter().map(|o| o.id.clone()).collect(),
    };
    let off_idx = index(&names.offline, "offline")?;
    let on_idx = index(&names.online, "online")?;

    let offline = rec
        .offline
        .into_iter()
        .map(|o| {
            Ok(OfflineType {
                lambda: o.lambda.value("lambda")?,
                mu: o.mu.value("mu")?,
                section: o.section,
            })
        })
        .collect::<Result<Vec<_>, LoadError>>()?;
    let online = rec
        .online
        .into_iter()
        .map(|o| {
            Ok(OnlineType {
                gamma: o.gamma.value("gamma")?,
            })
        })
        .collect::<Result<Vec<_>, LoadError>>()?;

    let mut rewards = BTreeMap::new();
    for r in rec.rewards {
        let i = *off_idx.get(&r.i).ok_or_else(|| LoadError::UnknownId {
            side: "offline",
            id: r.i.clone(),
        })?;
        let j = *on_idx.get(&r.j).ok_or_else(|| LoadError::UnknownId {
            side: "online",
            id: r.j.clone(),
        })?;
        if rewards.insert((i, j), r.r.value("reward")?).is_some() {
            return Err(LoadError::DuplicateEdge { i: r.i, j: r.j });
        }
    }
    Ok(ProblemInstance::with_names(offline, online, rewards, names))
}

#[derive(Serialize)]
struct OfflineOut<'a> {
    id: &'a ExternalId,
    lambda: f64,
    mu: f64,
    section: Section,
}

#[derive(Serialize)]
struct OnlineOut<'a> {
    id: &'a ExternalId,
    gamma: f64,
}

#[derive(Serialize)]
struct RewardOut<'a> {
    i: &'a ExternalId,
    j: &'a ExternalId,
    r: f64,
}

#[derive(Serialize)]
struct InstanceOut<'a> {
    offline: Vec<OfflineOut<'a>>,
    online: Vec<OnlineOut<'a>>,
    rewards: Vec<RewardOut<'a>>,
}

pub(super) fn render(inst: &ProblemInstance) -> String {
    let names = &inst.names;
    let out = InstanceOut {
        offline: inst
            .offline
            .iter()
            .zip(&names.offline)
            .map(|(o, id)| OfflineOut {
                id,
                lambda: o.lambda,
                mu: o.mu,
                section: o.section,
            })
            .collect(),
        online: inst
            .online
            .iter()
            .zip(&names.online)
            .map(|(o, id)| OnlineOut { id, gamma: o.gamma })
            .collect(),
        rewards: inst
            .rewards
            .iter()
            .map(|(&(i, j), &r)| RewardOut {
                i: &names.offline[i],
                j: &names.online[j],
                r,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&out).expect("instance serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_schema_example() {
        let text = r#"{"offline":[{"id":0,"lambda":1.0,"mu":1.0,"section":"NONE"}],
                       "online":[{"id":0,"gamma":1.0}],
                       "rewards":[{"i":0,"j":0,"r":1.0}]}"#;
        let inst = parse(text).unwrap();
        assert_eq!(inst.num_offline(), 1);
        assert_eq!(inst.reward(0, 0), Some(1.0));
    }

    #[test]
    fn decimal_strings_and_named_ids() {
        let text = r#"{"offline":[{"id":"north","lambda":"0.1","mu":"2"}],
                       "online":[{"id":7,"gamma":"1e-3"}],
                       "rewards":[{"i":"north","j":7,"r":"0"}]}"#;
        let inst = parse(text).unwrap();
        assert_eq!(inst.offline()[0].lambda, 0.1);
        assert_eq!(inst.online()[0].gamma, 1e-3);
        assert_eq!(inst.reward(0, 0), Some(0.0));
        assert_eq!(inst.names().offline[0], ExternalId::Str("north".into()));
        let back = parse(&render(&inst)).unwrap();
        assert_eq!(back, inst);
    }

    #[test]
    fn rejects_duplicate_edges() {
        let text = r#"{"offline":[{"id":0,"lambda":1,"mu":1}],"online":[{"id":0,"gamma":1}],
                       "rewards":[{"i":0,"j":0,"r":1},{"i":0,"j":0,"r":2}]}"#;
        assert!(matches!(parse(text), Err(LoadError::DuplicateEdge { .. })));
    }

    #[test]
    fn rejects_unknown_ids_and_garbage_numbers() {
        let text = r#"{"offline":[{"id":0,"lambda":1,"mu":1}],"online":[{"id":0,"gamma":1}],
                       "rewards":[{"i":0,"j":5,"r":1}]}"#;
        assert!(matches!(
            parse(text),
            Err(LoadError::UnknownId { side: "online", .. })
        ));
        let text = r#"{"offline":[{"id":0,"lambda":"fast","mu":1}],"online":[],"rewards":[]}"#;
        assert!(matches!(
            parse(text),
            Err(LoadError::BadNumber { what: "lambda", .. })
        ));
    }
}
