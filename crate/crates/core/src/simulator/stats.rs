use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

/// A point estimate with the half-width of its 95% confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub ci: f64,
}

impl Estimate {
    pub fn exact(mean: f64) -> Self {
        Self { mean, ci: 0.0 }
    }

    /// Mean and Student-t half-width over independent (or batch) samples.
    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self::default();
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return Self::exact(mean);
        }
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Self {
            mean,
            ci: t_quantile(n - 1) * (var / n as f64).sqrt(),
        }
    }

    /// `|mean - target| <= k * ci`.
    pub fn covers(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.ci
    }

    /// Difference of two estimates with half-widths combined in quadrature.
    pub fn minus(&self, other: &Estimate) -> Estimate {
        Estimate {
            mean: self.mean - other.mean,
            ci: self.ci.hypot(other.ci),
        }
    }
}

/// Two-sided 95% quantile of Student's t with `df` degrees of freedom.
pub fn t_quantile(df: usize) -> f64 {
    StudentsT::new(0.0, 1.0, df as f64)
        .map(|t| t.inverse_cdf(0.975))
        .unwrap_or(f64::INFINITY)
}

/// Equal batches covering `[burn_in, horizon]`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Layout {
    pub burn_in: f64,
    pub horizon: f64,
    pub count: usize,
    len: f64,
}

impl Layout {
    pub fn new(burn_in: f64, horizon: f64, count: usize) -> Self {
        Self {
            burn_in,
            horizon,
            count,
            len: (horizon - burn_in) / count as f64,
        }
    }

    pub fn batch_len(&self) -> f64 {
        self.len
    }

    /// Batch containing the instant `t`, if it is inside the window.
    pub fn index(&self, t: f64) -> Option<usize> {
        if t < self.burn_in || t >= self.horizon {
            return None;
        }
        Some((((t - self.burn_in) / self.len) as usize).min(self.count - 1))
    }

    /// Calls `f(batch, duration)` for every piece of `[t0, t1]` inside the window.
    pub fn overlap(&self, t0: f64, t1: f64, mut f: impl FnMut(usize, f64)) {
        let mut a = t0.max(self.burn_in);
        let end = t1.min(self.horizon);
        while a < end {
            let mut b = (((a - self.burn_in) / self.len) as usize).min(self.count - 1);
            // Round-off can leave `a` on the far edge of batch `b`.
            let stop = loop {
                let stop = if b + 1 == self.count {
                    end
                } else {
                    end.min(self.burn_in + (b + 1) as f64 * self.len)
                };
                if stop > a {
                    break stop;
                }
                b += 1;
            };
            f(b, stop - a);
            a = stop;
        }
    }
}

/// Piecewise-constant quantities whose time integrals are kept per batch.
/// Each quantity is integrated only when it changes.
#[derive(Debug, Clone)]
pub(crate) struct Areas {
    last: Vec<f64>,
    value: Vec<f64>,
    /// `areas[batch][k]`.
    pub areas: Vec<Vec<f64>>,
}

impl Areas {
    pub fn new(initial: Vec<f64>, batches: usize) -> Self {
        let k = initial.len();
        Self {
            last: vec![0.0; k],
            value: initial,
            areas: vec![vec![0.0; k]; batches],
        }
    }

    pub fn set(&mut self, layout: &Layout, k: usize, t: f64, v: f64) {
        let old = self.value[k];
        if old != 0.0 {
            let areas = &mut self.areas;
            layout.overlap(self.last[k], t, |b, dt| areas[b][k] += old * dt);
        }
        self.last[k] = t;
        self.value[k] = v;
    }

    pub fn flush(&mut self, layout: &Layout, t: f64) {
        for k in 0..self.value.len() {
            self.set(layout, k, t, self.value[k]);
        }
    }

    /// Per-quantity time averages, batch by batch.
    pub fn estimates(&self, layout: &Layout) -> Vec<Estimate> {
        let k = self.value.len();
        (0..k)
            .map(|q| {
                let v: Vec<f64> = self
                    .areas
                    .iter()
                    .map(|a| a[q] / layout.batch_len())
                    .collect();
                Estimate::from_samples(&v)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlap_splits_at_boundaries() {
        let l = Layout::new(2.0, 10.0, 4);
        let mut got = Vec::new();
        l.overlap(0.0, 5.0, |b, dt| got.push((b, dt)));
        assert_eq!(got, [(0, 2.0), (1, 1.0)]);
        let mut total = 0.0;
        l.overlap(0.0, 100.0, |_, dt| total += dt);
        assert_eq!(total, 8.0);
        assert_eq!(l.index(9.999), Some(3));
        assert_eq!(l.index(1.0), None);
    }

    #[test]
    fn areas_integrate_lazily() {
        let l = Layout::new(0.0, 4.0, 2);
        let mut a = Areas::new(vec![1.0], 2);
        a.set(&l, 0, 1.0, 3.0);
        a.flush(&l, 4.0);
        assert_eq!(a.areas[0][0], 1.0 + 3.0);
        assert_eq!(a.areas[1][0], 6.0);
        let e = a.estimates(&l);
        assert_eq!(e[0].mean, 2.5);
    }

    #[test]
    fn student_t_interval() {
        assert!((t_quantile(31) - 2.0395).abs() < 1e-3);
        let e = Estimate::from_samples(&[1.0, 1.0, 1.0]);
        assert_eq!(e, Estimate { mean: 1.0, ci: 0.0 });
        assert!(e.covers(1.0, 3.0));
    }
}
