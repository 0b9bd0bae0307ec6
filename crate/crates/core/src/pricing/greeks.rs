//! Finite-difference Greeks, including sensitivities to pool depth and emissions.

use serde::{Deserialize, Serialize};

use super::cev_formula::cev_price;
use super::OptionSpec;
use crate::cev::{variance_factor, CevParams, EmissionDrift};
use crate::error::{require_positive, Error, Result};

/// Relative bump used by every central difference.
pub const FD_RELATIVE_STEP: f64 = 1e-4;
const FD_ABSOLUTE_FLOOR: f64 = 1e-8;

/// CEV price when the invariant grows linearly from `em.k0` at rate `em.k_dot`.
///
/// The instantaneous `δ²` scales as `k₀/k(t)`, so the price equals the
/// constant-depth price with `δ² ln(1+u)/u`, `u = k̇T/k₀`. `params.delta`
/// is the value at `em.k0`.
pub fn emission_adjusted_price(spec: &OptionSpec, params: &CevParams, em: &EmissionDrift) -> Result<f64> {
    price_with_growth(spec, params, em.k_dot * spec.maturity / em.k0)
}

fn price_with_growth(spec: &OptionSpec, params: &CevParams, u: f64) -> Result<f64> {
    cev_price(spec, &params.with_delta(params.delta * variance_factor(u).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreeksReport {
    pub price: f64,
    pub delta: f64,
    pub gamma: f64,
    /// `∂C/∂δ`
    pub vega_delta: f64,
    /// `∂C/∂k` through `δ ∝ k^{-1/2}`.
    pub liquidity: f64,
    /// `∂C/∂e_α`, the price change per unit of annual alpha emission into a
    /// constant-product pool.
    pub emission: f64,
}

/// Greeks of the emission-adjusted price, by Richardson-extrapolated central differences.
pub fn greeks(spec: &OptionSpec, params: &CevParams, em: &EmissionDrift) -> Result<GreeksReport> {
    let u0 = em.k_dot * spec.maturity / em.k0;
    let price = price_with_growth(spec, params, u0)?;

    let at_spot = |p: f64| price_with_growth(&spec.with_spot(p), params, u0);
    let h_spot = step(spec.spot, "spot")?;
    let delta = richardson(|h| central(&at_spot, spec.spot, h), h_spot)?;
    let gamma = richardson(|h| second(&at_spot, spec.spot, price, h), h_spot)?;

    let at_delta = |d: f64| price_with_growth(spec, &params.with_delta(d), u0);
    let vega_delta = richardson(|h| central(&at_delta, params.delta, h), step(params.delta, "delta")?)?;
    let liquidity = vega_delta * (-params.delta / (2.0 * em.k0));

    // k̇ = y·e_α with y = √(k/P); u may go slightly negative here.
    let at_growth = |u: f64| price_with_growth(spec, params, u);
    let h_u = (FD_RELATIVE_STEP * u0).max(FD_RELATIVE_STEP);
    let d_price_d_u = richardson(|h| central(&at_growth, u0, h), h_u)?;
    let alpha_reserve = (em.k0 / spec.spot).sqrt();
    let emission = d_price_d_u * spec.maturity / em.k0 * alpha_reserve;

    Ok(GreeksReport { price, delta, gamma, vega_delta, liquidity, emission })
}

/// CEV delta alone, by the same difference scheme as [`greeks`].
pub fn cev_delta(spec: &OptionSpec, params: &CevParams) -> Result<f64> {
    cev_delta_with_step(spec, params, FD_RELATIVE_STEP)
}

/// [`cev_delta`] with a caller-chosen relative bump, for convergence checks.
pub fn cev_delta_with_step(spec: &OptionSpec, params: &CevParams, relative_step: f64) -> Result<f64> {
    require_positive(relative_step, "relative_step")?;
    let at_spot = |p: f64| cev_price(&spec.with_spot(p), params);
    richardson(|h| central(&at_spot, spec.spot, h), step_with(spec.spot, "spot", relative_step)?)
}

fn step(x: f64, name: &str) -> Result<f64> {
    step_with(x, name, FD_RELATIVE_STEP)
}

fn step_with(x: f64, name: &str, relative: f64) -> Result<f64> {
    require_positive(x, name)?;
    let h = (relative * x).max(FD_ABSOLUTE_FLOOR);
    if x - h <= 0.0 {
        return Err(Error::domain(format!("{name} = {x} is too small for a central difference")));
    }
    Ok(h)
}

fn central(f: &impl Fn(f64) -> Result<f64>, x: f64, h: f64) -> Result<f64> {
    Ok((f(x + h)? - f(x - h)?) / (2.0 * h))
}

fn second(f: &impl Fn(f64) -> Result<f64>, x: f64, fx: f64, h: f64) -> Result<f64> {
    Ok((f(x + h)? - 2.0 * fx + f(x - h)?) / (h * h))
}

fn richardson(d: impl Fn(f64) -> Result<f64>, h: f64) -> Result<f64> {
    let coarse = d(h)?;
    let fine = d(0.5 * h)?;
    Ok((4.0 * fine - coarse) / 3.0)
}
