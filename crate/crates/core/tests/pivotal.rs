use proptest::prelude::*;
use stationary_matching::pivotal::{
    first_selected, first_selected_with_draw, prefix_hit_probability, sample, sample_with_draw,
    MarginalVector,
};
use stationary_matching::rng::rng_from_seed;

const GRID: usize = 20_000;

/// Midpoint rule over the single uniform the sampler consumes.
fn grid() -> impl Iterator<Item = f64> {
    (0..GRID).map(|k| (k as f64 + 0.5) / GRID as f64)
}

fn marginals() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), Just(1.0), 0.0..=1.0f64], 1..=8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn marginals_and_prefixes_integrate_exactly(values in marginals()) {
        let m = MarginalVector::new(values.clone()).unwrap();
        let mut hits = vec![0usize; values.len()];
        let mut prefix = vec![0usize; values.len()];
        for u in grid() {
            let s = sample_with_draw(&m, u);
            for &i in &s {
                hits[i] += 1;
            }
            if let Some(&first) = s.first() {
                for p in &mut prefix[first..] {
                    *p += 1;
                }
            }
        }
        // Each selection event is a union of intervals with at most two endpoints per index.
        let tol = 2.0 * values.len() as f64 / GRID as f64;
        let mut sum = 0.0;
        for k in 0..values.len() {
            sum += values[k];
            prop_assert!((hits[k] as f64 / GRID as f64 - values[k]).abs() <= tol);
            prop_assert!((prefix[k] as f64 / GRID as f64 - sum.min(1.0)).abs() <= tol);
        }
    }

    #[test]
    fn subset_size_is_floor_or_ceil_of_the_total(values in marginals(), u in 0.0..1.0f64) {
        let m = MarginalVector::new(values.clone()).unwrap();
        let total: f64 = values.iter().sum();
        let s = sample_with_draw(&m, u);
        prop_assert!(s.len() <= total.ceil() as usize);
        prop_assert!(s.len() + 1 >= total.floor() as usize);
        prop_assert!(s.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn first_selected_is_the_minimum(values in marginals(), u in 0.0..1.0f64) {
        let m = MarginalVector::new(values).unwrap();
        prop_assert_eq!(first_selected_with_draw(&m, u), sample_with_draw(&m, u).into_iter().min());
    }

    #[test]
    fn same_seed_same_subset(values in marginals(), seed in any::<u64>()) {
        let m = MarginalVector::new(values).unwrap();
        prop_assert_eq!(sample(&m, &mut rng_from_seed(seed)), sample(&m, &mut rng_from_seed(seed)));
    }
}

#[test]
fn unit_entries_are_always_taken() {
    let m = MarginalVector::new(vec![1.0]).unwrap();
    assert!(grid().all(|u| sample_with_draw(&m, u) == [0]));
    let m = MarginalVector::new(vec![1.0, 0.7]).unwrap();
    assert!(grid().all(|u| first_selected_with_draw(&m, u) == Some(0)));
}

#[test]
fn zero_vector_selects_nothing() {
    let m = MarginalVector::new(vec![0.0, 0.0]).unwrap();
    let mut rng = rng_from_seed(1);
    assert!((0..1000).all(|_| first_selected(&m, &mut rng).is_none()));
}

#[test]
fn two_halves_split_one_selection() {
    let m = MarginalVector::new(vec![0.5, 0.5]).unwrap();
    let first = grid().filter(|&u| sample_with_draw(&m, u) == [0]).count();
    let second = grid().filter(|&u| sample_with_draw(&m, u) == [1]).count();
    assert_eq!(first + second, GRID);
    assert_eq!(first, GRID / 2);
}

#[test]
fn first_index_follows_prefix_differences() {
    // Index 0 w.p. 0.6, index 1 w.p. min(1, 1.5) - 0.6 = 0.4.
    let m = MarginalVector::new(vec![0.6, 0.9]).unwrap();
    let zero = grid()
        .filter(|&u| first_selected_with_draw(&m, u) == Some(0))
        .count() as f64
        / GRID as f64;
    let one = grid()
        .filter(|&u| first_selected_with_draw(&m, u) == Some(1))
        .count() as f64
        / GRID as f64;
    assert!((zero - 0.6).abs() < 1e-3);
    assert!((one - 0.4).abs() < 1e-3);
}

#[test]
fn prefix_probabilities_by_hand() {
    let v = |x: Vec<f64>, k| prefix_hit_probability(&MarginalVector::new(x).unwrap(), k).unwrap();
    assert_eq!(v(vec![0.2, 0.3], 2), 0.5);
    assert_eq!(v(vec![0.8, 0.8], 2), 1.0);
    assert_eq!(v(vec![0.25; 4], 3), 0.75);
    assert!(prefix_hit_probability(&MarginalVector::new(vec![0.1]).unwrap(), 2).is_err());
    assert!(prefix_hit_probability(&MarginalVector::new(vec![0.1]).unwrap(), 0).is_err());
}

#[test]
fn rejects_entries_outside_the_unit_interval() {
    assert!(MarginalVector::new(vec![1.1]).is_err());
    assert!(MarginalVector::new(vec![-0.01]).is_err());
    assert!(MarginalVector::new(vec![f64::NAN]).is_err());
    assert_eq!(
        MarginalVector::new(vec![1.0 + 1e-13]).unwrap().values(),
        [1.0]
    );
}

#[test]
fn monte_carlo_marginals_within_four_standard_errors() {
    const DRAWS: usize = 100_000;
    let values = vec![0.15, 0.9, 0.4, 0.05, 0.7];
    let m = MarginalVector::new(values.clone()).unwrap();
    let mut rng = rng_from_seed(42);
    let mut hits = [0usize; 5];
    for _ in 0..DRAWS {
        for i in sample(&m, &mut rng) {
            hits[i] += 1;
        }
    }
    for (k, &p) in values.iter().enumerate() {
        let se = (p * (1.0 - p) / DRAWS as f64).sqrt();
        assert!(
            (hits[k] as f64 / DRAWS as f64 - p).abs() <= 4.0 * se,
            "index {k}"
        );
    }
}
