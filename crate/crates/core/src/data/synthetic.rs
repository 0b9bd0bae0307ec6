use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use super::Panel;
use crate::amm::PoolState;
use crate::cev::{FlowParams, Measure};
use crate::econometrics::DailySeries;
use crate::error::{require_finite, require_positive, Error, Result};
use crate::rng::{path_rng, standard_normal};
use crate::sim::{simulate_pool_paths, SimConfig};
use crate::DAYS_PER_YEAR;

/// Parameters of a synthetic daily panel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    /// Price elasticity. `0.5` simulates an actual constant-product pool.
    pub beta: f64,
    pub k0: f64,
    pub sigma_f: f64,
    pub mu_f: f64,
    pub p0: f64,
    pub days: usize,
    pub n_subnets: usize,
    pub seed: u64,
    pub start: NaiveDate,
}

impl SyntheticSpec {
    pub fn new(beta: f64, k0: f64, sigma_f: f64, days: usize, n_subnets: usize, seed: u64) -> Self {
        Self {
            beta,
            k0,
            sigma_f,
            mu_f: 0.0,
            p0: 0.025,
            days,
            n_subnets,
            seed,
            start: NaiveDate::from_ymd_opt(2025, 1, 1).expect("valid date"),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::domain(format!("beta must lie in (0, 1], got {}", self.beta)));
        }
        require_positive(self.k0, "k0")?;
        require_positive(self.p0, "p0")?;
        require_finite(self.mu_f, "mu_F")?;
        if !(self.sigma_f.is_finite() && self.sigma_f >= 0.0) {
            return Err(Error::domain(format!("sigma_F must be finite and >= 0, got {}", self.sigma_f)));
        }
        if self.days < 2 {
            return Err(Error::domain("a synthetic panel needs at least 2 days"));
        }
        Ok(())
    }
}

/// Generates a daily panel with subnet ids `1..=n_subnets`.
///
/// With `β = 1/2` each subnet is a constant-product pool driven by the
/// simulated staking flow. Other elasticities keep the TAO reserve as the
/// integrated flow and move the price with return volatility
/// `2σ_F P^{β-1/2}/x` on the same shock, so that `k = x²/P` and
/// `RV·k/σ_F² ≈ 4P^{2(β-1)}`.
pub fn make_synthetic_panel(spec: &SyntheticSpec) -> Result<Panel> {
    spec.validate()?;
    let dates: Vec<NaiveDate> = (0..spec.days).map(|i| spec.start + Days::new(i as u64)).collect();
    let prices: Vec<Vec<f64>> = if spec.beta == 0.5 && spec.sigma_f > 0.0 {
        let pool = PoolState::from_price_and_k(spec.p0, spec.k0)?;
        let flow = FlowParams::new(spec.mu_f, spec.sigma_f)?;
        let mut cfg = SimConfig::new((spec.days - 1) as f64 / DAYS_PER_YEAR, spec.n_subnets, spec.seed, Measure::Physical);
        cfg.dt = 1.0 / DAYS_PER_YEAR;
        cfg.store_paths = true;
        simulate_pool_paths(&pool, &flow, &cfg)?.paths.unwrap_or_default()
    } else {
        Vec::new()
    };

    let mut panel = Panel::new();
    for i in 0..spec.n_subnets {
        let (x, p) = if let Some(path) = prices.get(i) {
            (path.iter().map(|p| (spec.k0 * p).sqrt()).collect(), path.clone())
        } else {
            elastic_path(spec, i as u64)
        };
        let y: Vec<f64> = x.iter().zip(&p).map(|(x, p)| x / p).collect();
        panel.insert(i as u32 + 1, DailySeries::new(dates.clone(), x, y, p)?);
    }
    Ok(panel)
}

/// Panel whose subnets have invariants log-spaced from `spec.k0` to `k0_max`.
///
/// Subnet `i` (1-based) is generated as a one-subnet panel with seed
/// `spec.seed + i`, so each pool draws its own flow history.
pub fn make_depth_ladder(spec: &SyntheticSpec, k0_max: f64) -> Result<Panel> {
    require_positive(k0_max, "k0_max")?;
    if k0_max < spec.k0 {
        return Err(Error::domain(format!("k0_max {k0_max} is below k0 {}", spec.k0)));
    }
    let n = spec.n_subnets;
    let mut panel = Panel::new();
    for i in 0..n {
        let frac = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
        let one = SyntheticSpec {
            k0: spec.k0 * (k0_max / spec.k0).powf(frac),
            n_subnets: 1,
            seed: spec.seed.wrapping_add(i as u64 + 1),
            ..*spec
        };
        let series = make_synthetic_panel(&one)?.remove(&1).expect("one subnet generated");
        panel.insert(i as u32 + 1, series);
    }
    Ok(panel)
}

fn elastic_path(spec: &SyntheticSpec, index: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = path_rng(spec.seed, index);
    let dt = 1.0 / DAYS_PER_YEAR;
    let sqrt_dt = dt.sqrt();
    let x0 = (spec.k0 * spec.p0).sqrt();
    let floor = 1e-9 * x0;
    let (mut x, mut log_p) = (x0, spec.p0.ln());
    let mut xs = Vec::with_capacity(spec.days);
    let mut ps = Vec::with_capacity(spec.days);
    xs.push(x);
    ps.push(spec.p0);
    for _ in 1..spec.days {
        let z = standard_normal(&mut rng);
        let sigma = 2.0 * spec.sigma_f * log_p.exp().powf(spec.beta - 0.5) / x;
        log_p += sigma * sqrt_dt * z - 0.5 * sigma * sigma * dt;
        x = (x + spec.mu_f * dt + spec.sigma_f * sqrt_dt * z).max(floor);
        xs.push(x);
        ps.push(log_p.exp());
    }
    (xs, ps)
}
