use ammcev::amm::PoolState;
use ammcev::cev::{FlowParams, Measure};
use ammcev::sim::{simulate_pool_paths, SimConfig};

fn run(threads: usize, cfg: &SimConfig) -> ammcev::sim::PathSet {
    let pool = PoolState::from_price_and_k(0.025, 5e5).unwrap();
    let flow = FlowParams::new(3.0, 48.7).unwrap();
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(|| simulate_pool_paths(&pool, &flow, cfg).unwrap())
}

#[test]
fn paths_do_not_depend_on_thread_count() {
    for measure in [Measure::Physical, Measure::RiskNeutral] {
        let mut cfg = SimConfig::new(10.0 / 365.0, 300, 5, measure);
        cfg.store_paths = true;
        assert_eq!(run(1, &cfg), run(4, &cfg));
    }
}

#[test]
fn risk_neutral_zero_rate_is_a_martingale() {
    let mut cfg = SimConfig::new(30.0 / 365.0, 40_000, 17, Measure::RiskNeutral);
    cfg.rate = 0.0;
    let set = run(2, &cfg);
    assert_eq!(set.clamp_events, 0);
    let n = set.terminal.len() as f64;
    let mean = set.terminal.iter().sum::<f64>() / n;
    let var = set.terminal.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    assert!((mean - 0.025).abs() < 3.0 * se, "mean {mean}, se {se}");
}

#[test]
fn clamp_events_are_counted_on_a_tiny_pool() {
    let pool = PoolState::from_price_and_k(0.025, 1.0).unwrap();
    let flow = FlowParams::new(0.0, 48.7).unwrap();
    let cfg = SimConfig::new(30.0 / 365.0, 200, 3, Measure::Physical);
    let set = simulate_pool_paths(&pool, &flow, &cfg).unwrap();
    assert!(set.clamp_events > 0);
    assert!(set.terminal.iter().all(|p| p.is_finite() && *p > 0.0));
}
