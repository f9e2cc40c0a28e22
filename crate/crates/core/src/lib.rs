//! Stationary bipartite matching: offline nodes arrive over time and wait
//! for an exponential patience; online nodes must be matched on arrival.
//!
//! * [`instance`] holds the problem data, built-in examples and transforms.
//! * [`lp`] solves the tightened LP relaxations by cutting planes.
//! * [`pivotal`] is the dependent-rounding primitive behind correlated
//!   proposals.
//! * [`analytics`] has closed-form bounds and the hard/easy classification.
//! * [`simulator`] runs the market as a continuous-time Markov chain.
//! * [`experiments`] bundles the validation suites the CLI runs.

pub mod analytics;
pub mod experiments;
pub mod instance;
pub mod lp;
pub mod pivotal;
pub mod rng;
pub mod simulator;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/instances.md")]
    mod instances {}
    #[doc = include_str!("../../../book/src/relaxations.md")]
    mod relaxations {}
    #[doc = include_str!("../../../book/src/pivotal.md")]
    mod pivotal {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/classification.md")]
    mod classification {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
