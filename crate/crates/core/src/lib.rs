//! Option pricing for tokens whose only market is a constant-weighted-product AMM.
//!
//! When net staking flow into the pool is a Brownian diffusion, the marginal
//! price follows a CEV diffusion with elasticity equal to the numeraire
//! weight and volatility parameter inversely proportional to pool depth.
//! This crate maps pool state to those dynamics and builds on them:
//!
//! - [`amm`]: pool state, swaps, slippage and emission injection
//! - [`cev`]: pool-to-CEV parameter map, boundary classification, emission variance
//! - [`pricing`]: closed-form CEV and Black–Scholes prices, implied volatility,
//!   smiles, Greeks (including liquidity and emission Greeks), replication premium
//! - [`sim`]: reproducible Monte Carlo of pool and price paths
//! - [`econometrics`], [`backtest`]: estimators, regressions, hedging backtests
//! - [`data`]: pool snapshot panels, CSV persistence, fetcher and synthetic panels

pub mod amm;
pub mod backtest;
pub mod cev;
pub mod data;
pub mod econometrics;
pub mod error;
pub mod pricing;
pub mod rng;
pub mod sim;
pub mod specfun;
mod stats;

pub use error::{Error, Result};

/// Days per year used for every annualization.
pub const DAYS_PER_YEAR: f64 = 365.0;

/// Converts a day count to years on the 365-day convention.
pub fn years_from_days(days: f64) -> f64 {
    days / DAYS_PER_YEAR
}
