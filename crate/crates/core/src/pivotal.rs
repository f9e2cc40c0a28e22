//! Dependent rounding with exact marginals and the prefix property.
//!
//! Given an ordered vector `m` of probabilities, [`sample`] returns a random
//! subset `S` with
//!
//! * `Pr[i in S] = m[i]` for every `i`, and
//! * `Pr[S meets {0..=k}] = min(1, m[0] + ... + m[k])` for every `k`.
//!
//! The scheme is systematic sampling: one uniform `U` is drawn and index `i`
//! is selected when `[S_{i-1}, S_i)` contains a point of `U + Z`, where `S_i`
//! are the prefix sums. `|S|` never exceeds `ceil(sum m)`.
//!
//! ```
//! use stationary_matching::pivotal::{first_selected, MarginalVector};
//! use stationary_matching::rng::rng_from_seed;
//!
//! let m = MarginalVector::new(vec![1.0, 0.7]).unwrap();
//! let mut rng = rng_from_seed(1);
//! assert_eq!(first_selected(&m, &mut rng), Some(0));
//! ```

use rand::Rng;
use thiserror::Error;

const ENTRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PivotalError {
    #[error("marginal {index} = {value} is outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("prefix length {k} is outside 1..={len}")]
    BadPrefix { k: usize, len: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalVector {
    values: Vec<f64>,
}

impl MarginalVector {
    /// Entries within `1e-12` of `[0, 1]` are clamped; anything further out
    /// is rejected.
    pub fn new(mut values: Vec<f64>) -> Result<Self, PivotalError> {
        for (index, v) in values.iter_mut().enumerate() {
            if !(v.is_finite() && *v >= -ENTRY_TOL && *v <= 1.0 + ENTRY_TOL) {
                return Err(PivotalError::OutOfRange { index, value: *v });
            }
            *v = v.clamp(0.0, 1.0);
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    c: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.c
    }
}

/// Number of points of `u + {0, 1, 2, ...}` lying below `s`.
fn hits_below(s: f64, u: f64) -> u64 {
    if s <= u {
        0
    } else {
        (s - u).ceil() as u64
    }
}

/// Indices selected for the draw `u` in `[0, 1)`.
pub fn sample_with_draw(m: &MarginalVector, u: f64) -> Vec<usize> {
    let mut acc = CompensatedSum::default();
    let mut prev = 0;
    let mut out = Vec::new();
    for (i, &v) in m.values.iter().enumerate() {
        acc.add(v);
        let now = hits_below(acc.value(), u);
        if now > prev {
            out.push(i);
        }
        prev = now;
    }
    out
}

/// Smallest selected index for the draw `u`, without building the subset.
pub fn first_selected_with_draw(m: &MarginalVector, u: f64) -> Option<usize> {
    first_crossing(m.values.iter().map(|&v| (v, 1)), u)
}

/// Run-length form of [`first_selected_with_draw`]: run `k` stands for
/// `count` consecutive entries equal to `p`. Returns the index of the run
/// holding the first selected entry.
pub fn first_crossing(runs: impl IntoIterator<Item = (f64, u64)>, u: f64) -> Option<usize> {
    let mut acc = CompensatedSum::default();
    for (k, (p, count)) in runs.into_iter().enumerate() {
        if count == 0 || p <= 0.0 {
            continue;
        }
        acc.add(p * count as f64);
        if u < acc.value() {
            return Some(k);
        }
    }
    None
}

/// Draws a subset; consumes exactly one uniform from `rng`.
pub fn sample<R: Rng + ?Sized>(m: &MarginalVector, rng: &mut R) -> Vec<usize> {
    sample_with_draw(m, rng.random::<f64>())
}

/// `min(sample(m))` under the same draw; consumes exactly one uniform.
pub fn first_selected<R: Rng + ?Sized>(m: &MarginalVector, rng: &mut R) -> Option<usize> {
    first_selected_with_draw(m, rng.random::<f64>())
}

/// `min(1, m[0] + ... + m[k-1])`.
pub fn prefix_hit_probability(m: &MarginalVector, k: usize) -> Result<f64, PivotalError> {
    if k == 0 || k > m.len() {
        return Err(PivotalError::BadPrefix { k, len: m.len() });
    }
    let mut acc = CompensatedSum::default();
    m.values[..k].iter().for_each(|&v| acc.add(v));
    Ok(acc.value().min(1.0))
}
