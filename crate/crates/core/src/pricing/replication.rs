//! Monte Carlo estimate of the cost of hedging through the pool's own slippage.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cev_formula::cev_price;
use super::greeks::FD_RELATIVE_STEP;
use super::OptionSpec;
use crate::amm::PoolState;
use crate::cev::{CevParams, FlowParams, Measure};
use crate::error::{require_positive, Error, Result};
use crate::sim::{simulate_pool_paths, SimConfig};
use crate::stats::{mean, sample_std};
use crate::DAYS_PER_YEAR;

pub const MIN_REPLICATION_PATHS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicationEstimate {
    /// Expected slippage paid by a continuously rebalanced delta hedge.
    pub premium: f64,
    pub std_error: f64,
    /// The option price, for scale.
    pub option_price: f64,
    pub n_paths: usize,
    pub n_steps: usize,
}

/// `δ² P₀^{2β}/(2k) · E^Q[∫ Γ² P² dt]`, with the integral taken as a
/// left-point sum over daily risk-neutral steps.
pub fn replication_premium_bound(
    spec: &OptionSpec,
    params: &CevParams,
    pool_k: f64,
    n_paths: usize,
    seed: u64,
) -> Result<ReplicationEstimate> {
    require_positive(pool_k, "pool_k")?;
    if n_paths < MIN_REPLICATION_PATHS {
        return Err(Error::domain(format!("at least {MIN_REPLICATION_PATHS} paths are required, got {n_paths}")));
    }
    if params.beta != 0.5 {
        return Err(Error::Unsupported("the replication premium is defined for constant-product pools".into()));
    }
    let pool = PoolState::from_price_and_k(spec.spot, pool_k)?;
    let sigma_f = params.delta * pool_k.sqrt() / 2.0;
    let flow = FlowParams { mu_f: 0.0, sigma_f };
    let mut cfg = SimConfig::new(spec.maturity, n_paths, seed, Measure::RiskNeutral);
    cfg.dt = 1.0 / DAYS_PER_YEAR;
    cfg.rate = spec.rate;
    cfg.store_paths = true;
    let set = simulate_pool_paths(&pool, &flow, &cfg)?;
    let dt = set.step();
    let paths = set.paths.as_ref().expect("paths stored");

    let integrals: Vec<f64> = paths
        .par_iter()
        .map(|path| -> Result<f64> {
            let mut acc = 0.0;
            for (j, &p) in path[..set.n_steps].iter().enumerate() {
                let tau = spec.maturity - j as f64 * dt;
                let g = gamma_at(&spec.with_spot(p).with_maturity(tau), params)?;
                acc += g * g * p * p * dt;
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;

    let scale = params.delta * params.delta * spec.spot.powf(2.0 * params.beta) / (2.0 * pool_k);
    let n = integrals.len() as f64;
    Ok(ReplicationEstimate {
        premium: scale * mean(&integrals),
        std_error: scale * sample_std(&integrals) / n.sqrt(),
        option_price: cev_price(spec, params)?,
        n_paths,
        n_steps: set.n_steps,
    })
}

fn gamma_at(spec: &OptionSpec, params: &CevParams) -> Result<f64> {
    let h = FD_RELATIVE_STEP * spec.spot;
    let up = cev_price(&spec.with_spot(spec.spot + h), params)?;
    let mid = cev_price(spec, params)?;
    let down = cev_price(&spec.with_spot(spec.spot - h), params)?;
    Ok((up - 2.0 * mid + down) / (h * h))
}
