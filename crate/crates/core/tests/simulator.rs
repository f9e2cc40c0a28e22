use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stationary_matching::instance::{
    presence_probability, random_instance, top_bot_split, OfflineType, OnlineType, ProblemInstance,
    RandomInstanceParams,
};
use stationary_matching::lp::{proposal_probabilities, solve_tlp, Benchmark, LpSolution};
use stationary_matching::simulator::{
    estimate_ratio, mean_queue_lengths, replicate, simulate, Policy, SimConfig, SimError,
    SimEstimate, CSV_HEADER,
};

fn one_by_one() -> ProblemInstance {
    ProblemInstance::new(
        vec![OfflineType::new(1.0, 1.0)],
        vec![OnlineType::new(1.0)],
        [((0, 0), 1.0)],
    )
}

fn small_random(seed: u64) -> ProblemInstance {
    let params = RandomInstanceParams {
        offline: 1..=4,
        online: 1..=4,
        ..Default::default()
    };
    random_instance(&params, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn policies(inst: &ProblemInstance) -> Vec<Policy> {
    let on = solve_tlp(inst, Benchmark::Online).unwrap();
    let off = solve_tlp(inst, Benchmark::Offline).unwrap();
    vec![
        Policy::correlated(proposal_probabilities(inst, &on).unwrap()),
        Policy::correlated(proposal_probabilities(inst, &off).unwrap()),
        Policy::greedy(),
        Policy::no_match(),
    ]
}

fn assert_conservation(inst: &ProblemInstance, e: &SimEstimate) {
    for (i, f) in e.flow_residual.iter().enumerate() {
        assert!(f.covers(0.0, 3.0), "{} flow at {i}: {f:?}", e.policy);
    }
    for (j, f) in e.pasta_residual.iter().enumerate() {
        assert!(f.covers(0.0, 3.0), "{} pasta at {j}: {f:?}", e.policy);
    }
    for j in 0..inst.num_online() {
        let cap = inst.online()[j].gamma
            * presence_probability(inst.load_of(inst.online_neighbors(j).iter().copied()));
        let r = e.online_match_rates[j];
        assert!(
            r.mean <= cap + 3.0 * r.ci + 1e-12,
            "{} availability at {j}",
            e.policy
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn estimates_are_rates_and_probabilities(seed in any::<u64>()) {
        let inst = small_random(seed);
        for policy in policies(&inst) {
            let e = simulate(&inst, &policy, &SimConfig::new(200.0, seed)).unwrap();
            prop_assert!(e.reward_rate.mean >= 0.0);
            prop_assert!(e.match_rates.iter().all(|m| m.rate.mean >= 0.0));
            prop_assert!(e.abandon_rates.iter().all(|a| a.mean >= 0.0));
            prop_assert!(e.per_online_match_prob.iter().all(|p| (0.0..=1.0).contains(&p.mean)));
            for h in &e.occupancy {
                prop_assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
            prop_assert_eq!(&e, &simulate(&inst, &policy, &SimConfig::new(200.0, seed)).unwrap());
        }
    }
}

#[test]
fn flow_pasta_and_availability_on_random_instances() {
    for seed in 0..6 {
        let inst = small_random(seed);
        let horizon = 2e3 / inst.min_rate();
        for policy in policies(&inst) {
            let e = simulate(&inst, &policy, &SimConfig::new(horizon, 100 + seed)).unwrap();
            assert_conservation(&inst, &e);
        }
    }
}

#[test]
fn single_queue_mean_is_its_load() {
    let inst = ProblemInstance::new(
        vec![OfflineType::new(1.0, 1.0)],
        vec![OnlineType::new(0.5)],
        [((0, 0), 1.0)],
    );
    let q = mean_queue_lengths(&inst, &Policy::no_match(), &SimConfig::new(2e4, 5)).unwrap();
    assert!(q[0].covers(1.0, 3.0), "{:?}", q[0]);
}

#[test]
fn correlated_proposals_conserve_flow_on_one_by_one() {
    let inst = one_by_one();
    let sol = solve_tlp(&inst, Benchmark::Online).unwrap();
    let e = simulate(
        &inst,
        &Policy::correlated(proposal_probabilities(&inst, &sol).unwrap()),
        &SimConfig::new(2e4, 8),
    )
    .unwrap();
    let out = e.abandon_rates[0].mean + e.match_rates[0].rate.mean;
    assert!((out - 1.0).abs() <= 3.0 * e.flow_residual[0].ci);
}

#[test]
fn rare_online_arrivals_earn_almost_nothing() {
    let inst = ProblemInstance::new(
        vec![OfflineType::new(1.0, 1.0)],
        vec![OnlineType::new(1e-9)],
        [((0, 0), 1.0)],
    );
    let e = simulate(&inst, &Policy::greedy(), &SimConfig::new(1e3, 1)).unwrap();
    assert_eq!(e.reward_rate.mean, 0.0);
}

#[test]
fn greedy_takes_the_best_reward_when_both_are_present() {
    // Both queues are practically never empty.
    let inst = ProblemInstance::new(
        vec![OfflineType::new(50.0, 1.0), OfflineType::new(50.0, 1.0)],
        vec![OnlineType::new(1.0)],
        [((0, 0), 1.0), ((1, 0), 2.0)],
    );
    let e = simulate(&inst, &Policy::greedy(), &SimConfig::new(500.0, 2)).unwrap();
    let low = e.match_rates.iter().find(|m| m.i == 0).unwrap();
    assert_eq!(low.rate.mean, 0.0);
    assert!((e.reward_rate.mean - 2.0).abs() <= 3.0 * e.reward_rate.ci + 1e-9);
}

#[test]
fn balanced_greedy_prefers_top_copies() {
    let inst = ProblemInstance::new(
        vec![OfflineType::new(100.0, 1.0)],
        vec![OnlineType::new(1.0)],
        [((0, 0), 1.0)],
    );
    let split = top_bot_split(&inst).unwrap();
    let e = simulate(
        &split,
        &Policy::balanced_greedy(),
        &SimConfig::new(500.0, 3),
    )
    .unwrap();
    let bot = e.match_rates.iter().find(|m| m.i == 1).unwrap();
    assert_eq!(bot.rate.mean, 0.0);
    assert!(e.per_online_match_prob[0].mean > 0.99);
}

#[test]
fn balanced_greedy_without_labels_is_rejected() {
    assert_eq!(
        simulate(
            &one_by_one(),
            &Policy::balanced_greedy(),
            &SimConfig::new(10.0, 0)
        )
        .unwrap_err(),
        SimError::MissingLabels
    );
}

#[test]
fn ratio_of_no_match_is_zero_and_zero_objective_is_rejected() {
    let inst = one_by_one();
    let sol = solve_tlp(&inst, Benchmark::Online).unwrap();
    let r = estimate_ratio(
        &inst,
        &Policy::no_match(),
        &sol,
        3,
        &SimConfig::new(100.0, 1),
    )
    .unwrap();
    assert_eq!(r.ratio, 0.0);
    assert_eq!(r.replications.len(), 3);
    let zero = LpSolution::zero(&inst, Benchmark::Online);
    assert_eq!(
        estimate_ratio(
            &inst,
            &Policy::no_match(),
            &zero,
            3,
            &SimConfig::new(100.0, 1)
        )
        .unwrap_err(),
        SimError::ZeroObjective
    );
}

#[test]
fn replications_are_reproducible_and_distinct() {
    let inst = one_by_one();
    let cfg = SimConfig::new(300.0, 7);
    let a = replicate(&inst, &Policy::greedy(), 4, &cfg).unwrap();
    let b = replicate(&inst, &Policy::greedy(), 4, &cfg).unwrap();
    assert_eq!(a, b);
    assert_ne!(a[0].seed, a[1].seed);
    assert_ne!(a[0].reward_rate, a[1].reward_rate);
    let rows: Vec<String> = a.iter().map(SimEstimate::csv_row).collect();
    assert!(rows
        .iter()
        .all(|r| r.split(',').count() == CSV_HEADER.split(',').count()));
}

#[test]
fn json_export_has_the_documented_fields() {
    let e = simulate(&one_by_one(), &Policy::greedy(), &SimConfig::new(50.0, 1)).unwrap();
    let v: serde_json::Value = serde_json::from_str(&e.to_json()).unwrap();
    for key in [
        "reward_rate",
        "match_rates",
        "abandon_rates",
        "per_online_match_prob",
        "horizon",
        "burn_in",
        "seed",
        "batches",
    ] {
        assert!(v.get(key).is_some(), "{key}");
    }
}
