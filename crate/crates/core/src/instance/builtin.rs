use std::fmt;
use std::str::FromStr;

use super::{InstanceError, OfflineType, OnlineType, ProblemInstance};
use crate::lp::{Benchmark, LpSolution};

/// The three adversarial families shipped with the library.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExampleName {
    /// Many light offline types sharing one rare online type. The flow-balance
    /// relaxation overshoots by a factor close to `e/(e-1)` here.
    B1,
    /// Balanced light queues against one heavy online type; the independent
    /// chains leave that type unmatched with probability about `1/e`.
    B2,
    /// A star of zero-reward types plus one unit-reward type. Its canonical LP
    /// solution makes proposals lose a `1/e` share to zero-reward matches.
    B3,
}

impl FromStr for ExampleName {
    type Err = InstanceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "b1" => Ok(ExampleName::B1),
            "b2" => Ok(ExampleName::B2),
            "b3" => Ok(ExampleName::B3),
            _ => Err(InstanceError::UnknownExample(s.to_string())),
        }
    }
}

impl fmt::Display for ExampleName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ExampleName::B1 => "B1",
            ExampleName::B2 => "B2",
            ExampleName::B3 => "B3",
        };
        f.write_str(s)
    }
}

/// A built-in instance, plus the hand-written LP solution when one exists.
#[derive(Debug, Clone)]
pub struct BuiltinExample {
    pub name: ExampleName,
    pub n: usize,
    pub instance: ProblemInstance,
    pub solution: Option<LpSolution>,
}

/// Builds example `name` with `n` offline types.
///
/// ```
/// use stationary_matching::instance::{example_instance, ExampleName};
///
/// let b1 = example_instance(ExampleName::B1, 50).unwrap();
/// assert_eq!(b1.instance.num_offline(), 50);
/// assert_eq!(b1.instance.online()[0].gamma, 1.0 / 2500.0);
/// ```
pub fn example_instance(name: ExampleName, n: usize) -> Result<BuiltinExample, InstanceError> {
    if n < 2 {
        return Err(InstanceError::TooSmall(n));
    }
    let nf = n as f64;
    let (instance, solution) = match name {
        ExampleName::B1 => {
            let offline = vec![OfflineType::new(1.0 / nf, 1.0); n];
            let inst = ProblemInstance::new(
                offline,
                vec![OnlineType::new(1.0 / (nf * nf))],
                (0..n).map(|i| ((i, 0), 1.0)),
            );
            (inst, None)
        }
        ExampleName::B2 => {
            let s = nf.sqrt();
            let offline = vec![OfflineType::new(1.0 / s, 1.0); n];
            let inst = ProblemInstance::new(
                offline,
                vec![OnlineType::new(s - 1.0)],
                (0..n).map(|i| ((i, 0), 1.0)),
            );
            let sol = example_b2_solution(n);
            (inst, Some(sol))
        }
        ExampleName::B3 => {
            let offline = vec![OfflineType::new(1.0, 1.0); n];
            let mut online = vec![OnlineType::new(nf); n];
            online.push(OnlineType::new(1.0));
            let edges = (0..n).flat_map(|i| [((i, i), 0.0), ((i, n), 1.0)]);
            (
                ProblemInstance::new(offline, online, edges),
                Some(example_b3_solution(n)),
            )
        }
    };
    Ok(BuiltinExample {
        name,
        n,
        instance,
        solution,
    })
}

/// Symmetric solution for B2: every queue sends `(sqrt(n)-1)(1-e^{-sqrt(n)})/n`
/// to the single online type and lets the rest abandon.
pub fn example_b2_solution(n: usize) -> LpSolution {
    let nf = n as f64;
    let s = nf.sqrt();
    let x = (s - 1.0) / nf * (-(-s).exp_m1());
    let x_match = (0..n).map(|i| ((i, 0), x)).collect();
    LpSolution::new(Benchmark::Online, x_match, vec![1.0 / s - x; n], nf * x)
}

/// Canonical optimal solution for B3 that routes most of each queue through
/// the zero-reward edge.
pub fn example_b3_solution(n: usize) -> LpSolution {
    let nf = n as f64;
    let x_match = (0..n)
        .flat_map(|i| [((i, i), (nf - 2.0) / nf), ((i, n), 1.0 / nf)])
        .collect();
    LpSolution::new(Benchmark::Online, x_match, vec![1.0 / nf; n], 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::validate;

    #[test]
    fn b1_rates() {
        let b = example_instance(ExampleName::B1, 50).unwrap();
        assert!(b
            .instance
            .offline()
            .iter()
            .all(|o| o.lambda == 0.02 && o.mu == 1.0));
        assert_eq!(b.instance.online()[0].gamma, 4e-4);
        assert_eq!(b.instance.num_edges(), 50);
    }

    #[test]
    fn b2_rates() {
        let b = example_instance(ExampleName::B2, 100).unwrap();
        assert_eq!(b.instance.offline()[0].lambda, 0.1);
        assert_eq!(b.instance.online()[0].gamma, 9.0);
    }

    #[test]
    fn b3_shape() {
        let b = example_instance(ExampleName::B3, 4).unwrap();
        let inst = &b.instance;
        assert_eq!(inst.num_online(), 5);
        assert_eq!(inst.online()[4].gamma, 1.0);
        for i in 0..4 {
            assert_eq!(inst.reward(i, 4), Some(1.0));
            assert_eq!(inst.reward(i, i), Some(0.0));
        }
        let sol = b.solution.unwrap();
        assert_eq!(sol.x_abandon[0], 0.25);
        assert_eq!(sol.x(0, 0), 0.5);
    }

    #[test]
    fn builtins_validate() {
        for name in [ExampleName::B1, ExampleName::B2, ExampleName::B3] {
            for n in [2, 3, 10, 100, 1000] {
                assert!(
                    validate(&example_instance(name, n).unwrap().instance).is_empty(),
                    "{name} n={n}"
                );
            }
        }
    }

    #[test]
    fn rejects_small_n_and_unknown_names() {
        assert!(example_instance(ExampleName::B1, 1).is_err());
        assert!("B4".parse::<ExampleName>().is_err());
        assert_eq!("b3".parse::<ExampleName>().unwrap(), ExampleName::B3);
    }
}
