//! Map from pool state and staking-flow diffusion to CEV price dynamics.
//!
//! With `dF = μ_F dt + σ_F dW` flowing into the TAO reserve of a pool with
//! weight `w` and invariant `K`, the marginal price satisfies
//! `dP = (c₁ P^w + c₂ P^(2w-1)) dt + δ P^w dW` where
//! `δ = (1/(1-w)) ((1-w)/w)^(1-w) σ_F / K`.

use serde::{Deserialize, Serialize};

use crate::amm::PoolState;
use crate::error::{require_finite, require_positive, Error, Result};

/// Net staking-flow diffusion, annualized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    /// TAO per year.
    pub mu_f: f64,
    /// TAO per √year.
    pub sigma_f: f64,
}

impl FlowParams {
    pub fn new(mu_f: f64, sigma_f: f64) -> Result<Self> {
        require_finite(mu_f, "mu_F")?;
        require_positive(sigma_f, "sigma_F")?;
        Ok(Self { mu_f, sigma_f })
    }

    /// Flow with zero volatility, for deterministic scenarios.
    pub fn deterministic(mu_f: f64) -> Self {
        Self { mu_f, sigma_f: 0.0 }
    }
}

/// CEV diffusion `dP = (c₁ P^β + c₂ P^(2β-1)) dt + δ P^β dW`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CevParams {
    pub beta: f64,
    pub delta: f64,
    /// Pool invariant `K` the parameters were built from, if any.
    pub invariant: Option<f64>,
    /// Coefficient of `P^β` in the physical drift.
    pub drift_level: f64,
    /// Coefficient of `P^(2β-1)` in the physical drift (Itô convexity term).
    pub drift_convexity: f64,
}

impl CevParams {
    /// Parameters for pricing only (drift coefficients zero).
    pub fn new(beta: f64, delta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::domain(format!("beta must lie in (0, 1], got {beta}")));
        }
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(Error::domain(format!("delta must be finite and >= 0, got {delta}")));
        }
        Ok(Self { beta, delta, invariant: None, drift_level: 0.0, drift_convexity: 0.0 })
    }

    /// Constant-product parameters `β = 1/2`, `δ = 2σ_F/√k`.
    pub fn constant_product(k: f64, sigma_f: f64) -> Result<Self> {
        require_positive(k, "k")?;
        Self::new(0.5, 2.0 * sigma_f / k.sqrt())
    }

    /// Same elasticity with a different volatility parameter.
    pub fn with_delta(&self, delta: f64) -> Self {
        Self { delta, ..*self }
    }

    pub fn effective_volatility(&self, price: f64) -> Result<f64> {
        effective_volatility(self, price)
    }
}

/// CEV parameters implied by a pool and a flow process.
pub fn cev_from_pool(pool: &PoolState, flow: &FlowParams) -> CevParams {
    let w = pool.weight();
    let big_k = if pool.is_constant_product() { pool.product().sqrt() } else { pool.invariant() };
    let scale = ((1.0 - w) / w).powf(1.0 - w) / ((1.0 - w) * big_k);
    let delta = scale * flow.sigma_f;
    let drift_level = scale * flow.mu_f;
    let drift_convexity = w / (2.0 * (1.0 - w).powi(2))
        * ((1.0 - w) / w).powf(2.0 * (1.0 - w))
        * flow.sigma_f.powi(2)
        / (big_k * big_k);
    CevParams { beta: w, delta, invariant: Some(big_k), drift_level, drift_convexity }
}

/// Instantaneous return volatility `δ P^(β-1)`.
pub fn effective_volatility(params: &CevParams, price: f64) -> Result<f64> {
    require_positive(price, "price")?;
    Ok(params.delta * price.powf(params.beta - 1.0))
}

/// Physical drift `c₁ P^β + c₂ P^(2β-1)`.
pub fn physical_drift(params: &CevParams, price: f64) -> Result<f64> {
    require_positive(price, "price")?;
    Ok(params.drift_level * price.powf(params.beta)
        + params.drift_convexity * price.powf(2.0 * params.beta - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Physical,
    RiskNeutral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryClass {
    /// Zero cannot be reached in finite time.
    Inaccessible,
    /// The TAO reserve can be drained in finite time.
    Attainable,
}

/// Feller classification of `P = 0` for the constant-product case.
pub fn classify_boundary(
    params: &CevParams,
    flow: &FlowParams,
    k: f64,
    measure: Measure,
    rate: f64,
) -> Result<BoundaryClass> {
    if params.beta != 0.5 {
        return Err(Error::Unsupported(format!(
            "boundary classification is only available for beta = 1/2, got {}",
            params.beta
        )));
    }
    require_positive(k, "k")?;
    Ok(match measure {
        Measure::RiskNeutral if rate > 0.0 => BoundaryClass::Inaccessible,
        Measure::RiskNeutral => BoundaryClass::Attainable,
        Measure::Physical => {
            let ratio = 2.0 * flow.mu_f / (flow.sigma_f * flow.sigma_f * k.sqrt());
            if ratio < 1.0 {
                BoundaryClass::Attainable
            } else {
                BoundaryClass::Inaccessible
            }
        }
    })
}

/// Deterministic invariant growth `k(t) ≈ k₀ + k̇ t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmissionDrift {
    pub k0: f64,
    /// Invariant units per year.
    pub k_dot: f64,
}

impl EmissionDrift {
    pub fn new(k0: f64, k_dot: f64) -> Result<Self> {
        require_positive(k0, "k0")?;
        if !(k_dot.is_finite() && k_dot >= 0.0) {
            return Err(Error::domain(format!("k_dot must be finite and >= 0, got {k_dot}")));
        }
        Ok(Self { k0, k_dot })
    }

    pub fn none(k0: f64) -> Result<Self> {
        Self::new(k0, 0.0)
    }
}

/// Below this value of `k̇T/k₀` the integrated variance uses its series limit.
const SERIES_SWITCH: f64 = 1e-12;

/// `∫₀ᵀ 4σ_F²/(k₀ + k̇t) dt`.
pub fn integrated_variance(sigma_f: f64, em: &EmissionDrift, maturity: f64) -> Result<f64> {
    require_positive(maturity, "maturity")?;
    require_finite(sigma_f, "sigma_F")?;
    Ok(integrated_variance_raw(sigma_f, em.k0, em.k_dot, maturity))
}

/// Unchecked form; also valid for small negative `k̇` with `k₀ + k̇T > 0`,
/// which finite differences at `k̇ = 0` rely on.
pub(crate) fn integrated_variance_raw(sigma_f: f64, k0: f64, k_dot: f64, maturity: f64) -> f64 {
    let base = 4.0 * sigma_f * sigma_f * maturity / k0;
    base * variance_factor(k_dot * maturity / k0)
}

/// `ln(1+u)/u`: integrated variance relative to a pool that never deepens.
pub(crate) fn variance_factor(u: f64) -> f64 {
    if u.abs() < SERIES_SWITCH {
        1.0 - 0.5 * u
    } else {
        u.ln_1p() / u
    }
}

/// Continuous yield equivalent of pool deepening, `k̇/(2k₀)`.
pub fn effective_dividend_yield(em: &EmissionDrift) -> f64 {
    em.k_dot / (2.0 * em.k0)
}
