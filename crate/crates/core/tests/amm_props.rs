use ammcev::amm::{slippage_cost, PoolState};
use ammcev::cev::CevParams;
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

proptest! {
    #[test]
    fn swap_preserves_invariant(
        x in 1.0f64..1e7,
        y in 1.0f64..1e9,
        w in 0.05f64..0.95,
        frac in -0.9f64..5.0,
    ) {
        let pool = PoolState::new(x, y, w).unwrap();
        let (_, after) = pool.execute_swap(frac * x).unwrap();
        prop_assert!(rel(after.invariant(), pool.invariant()) < 1e-12);
    }

    #[test]
    fn emission_raises_invariant_at_fixed_price(x in 1.0f64..1e7, y in 1.0f64..1e9, tau in 1e-6f64..1e4) {
        let pool = PoolState::constant_product(x, y).unwrap();
        let after = pool.apply_pool_emission(tau).unwrap();
        prop_assert!(after.invariant() > pool.invariant());
        prop_assert!(rel(after.marginal_price(), pool.marginal_price()) < 1e-12);
    }

    #[test]
    fn buying_costs_more_than_marginal(x in 1.0f64..1e7, y in 1.0f64..1e9, w in 0.05f64..0.95, frac in 1e-6f64..3.0) {
        let pool = PoolState::new(x, y, w).unwrap();
        let dx = frac * x;
        let (dy, _) = pool.execute_swap(dx).unwrap();
        prop_assert!(dy > 0.0);
        prop_assert!(dx / dy > pool.marginal_price());
    }

    #[test]
    fn slippage_is_nonnegative(x in 1.0f64..1e6, y in 1.0f64..1e8, q in -1e5f64..1e5) {
        let pool = PoolState::constant_product(x, y).unwrap();
        prop_assert!(slippage_cost(&pool, q).unwrap() >= 0.0);
    }

    #[test]
    fn doubling_k_scales_delta_by_inverse_sqrt2(k in 1.0f64..1e12, sigma_f in 1e-3f64..1e4) {
        let a = CevParams::constant_product(k, sigma_f).unwrap().delta;
        let b = CevParams::constant_product(2.0 * k, sigma_f).unwrap().delta;
        prop_assert!(rel(b * std::f64::consts::SQRT_2, a) < 1e-14);
    }
}

#[test]
fn effective_volatility_falls_with_price_below_unit_beta() {
    for beta in [0.1, 0.25, 0.5, 0.75, 0.99] {
        let params = CevParams::new(beta, 0.3).unwrap();
        let vols: Vec<f64> = (1..200).map(|i| params.effective_volatility(0.001 * i as f64).unwrap()).collect();
        assert!(vols.windows(2).all(|w| w[1] < w[0]), "beta {beta}");
    }
}
