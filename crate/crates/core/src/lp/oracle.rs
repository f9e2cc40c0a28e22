use std::collections::BTreeMap;

use crate::instance::{presence_probability, EdgeKey, ProblemInstance};

/// A violated availability constraint for online type `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cut {
    pub j: usize,
    /// Offline ids in `H`, in the order the oracle added them.
    pub members: Vec<usize>,
    /// `sum_{i in H} x_ij - gamma_j (1 - exp(-sum_{i in H} lambda_i/mu_i))`.
    pub violation: f64,
}

/// Left side minus right side of the availability constraint for `(H, j)`.
pub fn subset_violation(
    inst: &ProblemInstance,
    x: &BTreeMap<EdgeKey, f64>,
    j: usize,
    members: impl IntoIterator<Item = usize>,
) -> f64 {
    let (mut flow, mut load) = (0.0, 0.0);
    for i in members {
        flow += x.get(&(i, j)).copied().unwrap_or(0.0);
        load += inst.offline()[i].load();
    }
    flow - inst.online()[j].gamma * presence_probability(load)
}

/// Neighbours of `j` in oracle order, with the violation of every prefix.
fn prefix_scan(
    inst: &ProblemInstance,
    x: &BTreeMap<EdgeKey, f64>,
    j: usize,
) -> (Vec<usize>, Vec<f64>) {
    let gamma = inst.online()[j].gamma;
    let mut order: Vec<(usize, f64, f64)> = inst
        .online_neighbors(j)
        .iter()
        .map(|&i| {
            let xi = x.get(&(i, j)).copied().unwrap_or(0.0);
            let o = inst.offline()[i];
            (i, xi, xi * o.mu / (gamma * o.lambda))
        })
        .collect();
    order.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));

    let (mut flow, mut load) = (0.0, 0.0);
    let values = order
        .iter()
        .map(|&(i, xi, _)| {
            flow += xi;
            load += inst.offline()[i].load();
            flow - gamma * presence_probability(load)
        })
        .collect();
    (order.into_iter().map(|t| t.0).collect(), values)
}

/// The largest availability violation for `j` over all sets `H`, with the
/// maximizing set. The empty set (value 0) is returned when nothing is
/// violated.
///
/// Only prefixes of the neighbours sorted by decreasing
/// `x_ij mu_i / (gamma_j lambda_i)` need to be examined: within a run of
/// fixed total load the left side is linear and the right side concave, so
/// the maximum is attained by taking items in ratio order.
pub fn max_prefix_violation(
    inst: &ProblemInstance,
    x: &BTreeMap<EdgeKey, f64>,
    j: usize,
) -> (Vec<usize>, f64) {
    let (order, values) = prefix_scan(inst, x, j);
    let (mut best_len, mut best) = (0, 0.0);
    for (k, &v) in values.iter().enumerate() {
        if v > best {
            best = v;
            best_len = k + 1;
        }
    }
    (order[..best_len].to_vec(), best)
}

/// Every oracle prefix for `j` whose violation exceeds `tolerance`.
pub fn violated_prefixes(
    inst: &ProblemInstance,
    x: &BTreeMap<EdgeKey, f64>,
    j: usize,
    tolerance: f64,
) -> Vec<Cut> {
    let (order, values) = prefix_scan(inst, x, j);
    values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > tolerance)
        .map(|(k, &violation)| Cut {
            j,
            members: order[..=k].to_vec(),
            violation,
        })
        .collect()
}

/// The most violated availability constraint for `j`, if its violation
/// exceeds `tolerance`.
///
/// ```
/// use stationary_matching::instance::{OfflineType, OnlineType, ProblemInstance};
/// use stationary_matching::lp::separation_oracle;
///
/// let inst = ProblemInstance::new(vec![OfflineType::new(1.0, 1.0)], vec![OnlineType::new(1.0)], [((0, 0), 1.0)]);
/// let cut = separation_oracle(&inst, &[((0, 0), 0.9)].into(), 0, 1e-7).unwrap();
/// assert_eq!(cut.members, [0]);
/// assert!((cut.violation - (0.9 - (1.0 - (-1.0f64).exp()))).abs() < 1e-12);
/// ```
pub fn separation_oracle(
    inst: &ProblemInstance,
    x: &BTreeMap<EdgeKey, f64>,
    j: usize,
    tolerance: f64,
) -> Option<Cut> {
    let (members, violation) = max_prefix_violation(inst, x, j);
    (violation > tolerance).then_some(Cut {
        j,
        members,
        violation,
    })
}
