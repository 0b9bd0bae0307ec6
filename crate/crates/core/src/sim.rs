//! Monte Carlo simulation of pool reserves and token prices.
//!
//! Under the physical measure the staking flow is simulated and pushed
//! through the pool as swaps. Under the risk-neutral measure the price is
//! stepped directly with an Euler scheme for `dP = rP dt + δ P^β dW`.
//! Each path consumes exactly one standard normal per step, so GBM paths
//! built with the same seed and step count share their increments with the
//! pool paths.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amm::{EmissionRates, PoolState};
use crate::cev::{cev_from_pool, FlowParams, Measure};
use crate::error::{require_finite, require_positive, Error, Result};
use crate::pricing::OptionSpec;
use crate::rng::{path_rng, standard_normal};
use crate::stats::{mean, sample_std};
use crate::DAYS_PER_YEAR;

/// One hour in years.
pub const HOURLY: f64 = 1.0 / (DAYS_PER_YEAR * 24.0);

/// TAO reserve floor relative to its starting value.
const RESERVE_FLOOR_FRACTION: f64 = 1e-9;
/// Price floor relative to the starting price in the direct price scheme.
const PRICE_FLOOR_FRACTION: f64 = 1e-18;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Years.
    pub horizon: f64,
    /// Target step in years; the horizon is split into a whole number of steps.
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub measure: Measure,
    /// Risk-free rate, used by the risk-neutral measure.
    pub rate: f64,
    pub emission: Option<EmissionRates>,
    /// Keep full price paths, not just terminal values.
    pub store_paths: bool,
}

impl SimConfig {
    pub fn new(horizon: f64, n_paths: usize, seed: u64, measure: Measure) -> Self {
        Self { horizon, dt: HOURLY, n_paths, seed, measure, rate: 0.0, emission: None, store_paths: false }
    }

    pub fn n_steps(&self) -> usize {
        ((self.horizon / self.dt).round() as usize).max(1)
    }

    fn validate(&self) -> Result<()> {
        require_positive(self.horizon, "horizon")?;
        require_positive(self.dt, "dt")?;
        require_finite(self.rate, "rate")?;
        if self.n_paths == 0 {
            return Err(Error::domain("n_paths must be at least 1"));
        }
        Ok(())
    }
}

/// Simulated prices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSet {
    pub horizon: f64,
    pub n_steps: usize,
    pub initial_price: f64,
    pub terminal: Vec<f64>,
    /// `paths[i][j]` is the price of path `i` after `j` steps, when stored.
    pub paths: Option<Vec<Vec<f64>>>,
    /// Number of steps on which a floor was applied, over all paths.
    pub clamp_events: u64,
}

impl PathSet {
    pub fn step(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    /// Writes stored paths as `path,step,time,price` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let paths = self
            .paths
            .as_ref()
            .ok_or_else(|| Error::domain("paths were not stored; set store_paths"))?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["path", "step", "time", "price"])?;
        let dt = self.step();
        for (i, path) in paths.iter().enumerate() {
            for (j, p) in path.iter().enumerate() {
                w.write_record([i.to_string(), j.to_string(), format!("{:.10}", j as f64 * dt), format!("{p:.12e}")])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

struct PathOutput {
    terminal: f64,
    path: Option<Vec<f64>>,
    clamps: u64,
}

fn collect(cfg: &SimConfig, p0: f64, out: Vec<PathOutput>) -> PathSet {
    let clamp_events = out.iter().map(|o| o.clamps).sum();
    let terminal = out.iter().map(|o| o.terminal).collect();
    let paths = cfg.store_paths.then(|| out.into_iter().map(|o| o.path.unwrap_or_default()).collect());
    PathSet { horizon: cfg.horizon, n_steps: cfg.n_steps(), initial_price: p0, terminal, paths, clamp_events }
}

/// Simulates the pool price starting from `pool` with staking flow `flow`.
pub fn simulate_pool_paths(pool: &PoolState, flow: &FlowParams, cfg: &SimConfig) -> Result<PathSet> {
    cfg.validate()?;
    let p0 = pool.marginal_price();
    let out: Vec<PathOutput> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|i| match cfg.measure {
            Measure::Physical => physical_path(pool, flow, cfg, i),
            Measure::RiskNeutral => risk_neutral_path(pool, flow, cfg, i),
        })
        .collect();
    Ok(collect(cfg, p0, out))
}

fn physical_path(pool: &PoolState, flow: &FlowParams, cfg: &SimConfig, index: u64) -> PathOutput {
    let mut rng = path_rng(cfg.seed, index);
    let n = cfg.n_steps();
    let dt = cfg.horizon / n as f64;
    let sqrt_dt = dt.sqrt();
    let w = pool.weight();
    let ratio = (1.0 - w) / w;
    let exponent = w / (1.0 - w);
    let floor = RESERVE_FLOOR_FRACTION * pool.tao_reserve();
    let (mut x, mut y) = (pool.tao_reserve(), pool.alpha_reserve());
    let (inj_x, inj_y) = cfg.emission.map_or((0.0, 0.0), |e| (e.e_tao * dt, e.e_alpha * dt));
    let mut clamps = 0;
    let mut path = cfg.store_paths.then(|| {
        let mut v = Vec::with_capacity(n + 1);
        v.push(ratio * x / y);
        v
    });
    for _ in 0..n {
        let z = standard_normal(&mut rng);
        let mut x_new = x + flow.mu_f * dt + flow.sigma_f * sqrt_dt * z;
        if x_new < floor {
            x_new = floor;
            clamps += 1;
        }
        y = if exponent == 1.0 { y * x / x_new } else { y * (x / x_new).powf(exponent) };
        x = x_new + inj_x;
        y += inj_y;
        if let Some(v) = path.as_mut() {
            v.push(ratio * x / y);
        }
    }
    PathOutput { terminal: ratio * x / y, path, clamps }
}

fn risk_neutral_path(pool: &PoolState, flow: &FlowParams, cfg: &SimConfig, index: u64) -> PathOutput {
    let mut rng = path_rng(cfg.seed, index);
    let n = cfg.n_steps();
    let dt = cfg.horizon / n as f64;
    let sqrt_dt = dt.sqrt();
    let params = cev_from_pool(pool, flow);
    let beta = params.beta;
    let p0 = pool.marginal_price();
    let floor = PRICE_FLOOR_FRACTION * p0;
    // Emissions deepen the pool: δ² ∝ 1/k(t) with k linear in time.
    let k0 = pool.product();
    let k_dot = cfg.emission.map_or(0.0, |e| e.k_growth_rate(pool));
    let mut p = p0;
    let mut clamps = 0;
    let mut path = cfg.store_paths.then(|| {
        let mut v = Vec::with_capacity(n + 1);
        v.push(p0);
        v
    });
    for j in 0..n {
        let z = standard_normal(&mut rng);
        let delta = if k_dot == 0.0 { params.delta } else { params.delta * (k0 / (k0 + k_dot * j as f64 * dt)).sqrt() };
        let diffusion = if beta == 0.5 { p.sqrt() } else { p.powf(beta) };
        p += cfg.rate * p * dt + delta * diffusion * sqrt_dt * z;
        if p < floor {
            p = floor;
            clamps += 1;
        }
        if let Some(v) = path.as_mut() {
            v.push(p);
        }
    }
    PathOutput { terminal: p, path, clamps }
}

/// Exact geometric Brownian motion paths, `dP = μP dt + σP dW`, sharing
/// normals with pool paths generated under the same seed and step count.
pub fn simulate_gbm_paths(p0: f64, drift: f64, sigma: f64, cfg: &SimConfig) -> Result<PathSet> {
    cfg.validate()?;
    require_positive(p0, "p0")?;
    require_finite(drift, "drift")?;
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::domain(format!("sigma must be finite and >= 0, got {sigma}")));
    }
    let n = cfg.n_steps();
    let dt = cfg.horizon / n as f64;
    let step_drift = (drift - 0.5 * sigma * sigma) * dt;
    let step_vol = sigma * dt.sqrt();
    let out: Vec<PathOutput> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(cfg.seed, i);
            let mut log_p = p0.ln();
            let mut path = cfg.store_paths.then(|| {
                let mut v = Vec::with_capacity(n + 1);
                v.push(p0);
                v
            });
            for _ in 0..n {
                log_p += step_drift + step_vol * standard_normal(&mut rng);
                if let Some(v) = path.as_mut() {
                    v.push(log_p.exp());
                }
            }
            PathOutput { terminal: log_p.exp(), path, clamps: 0 }
        })
        .collect();
    Ok(collect(cfg, p0, out))
}

/// Monte Carlo price with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub price: f64,
    pub std_error: f64,
    /// Half-width of the 95% normal confidence interval.
    pub ci95: f64,
    pub n_paths: usize,
}

/// Discounted mean payoff over the terminal prices of `paths`.
pub fn mc_option_price(spec: &OptionSpec, paths: &PathSet) -> Result<McEstimate> {
    let n = paths.terminal.len();
    if n == 0 {
        return Err(Error::domain("cannot price from an empty path set"));
    }
    if (spec.maturity - paths.horizon).abs() > 1e-9 * paths.horizon {
        return Err(Error::domain(format!(
            "option maturity {} does not match simulation horizon {}",
            spec.maturity, paths.horizon
        )));
    }
    let disc = spec.discount();
    let values: Vec<f64> = paths.terminal.iter().map(|&p| disc * spec.payoff(p)).collect();
    let price = mean(&values);
    let std_error = if n > 1 { sample_std(&values) / (n as f64).sqrt() } else { f64::NAN };
    Ok(McEstimate { price, std_error, ci95: 1.96 * std_error, n_paths: n })
}
