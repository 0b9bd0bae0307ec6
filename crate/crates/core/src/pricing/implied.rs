//! Black–Scholes implied volatility and CEV smiles.

use serde::{Deserialize, Serialize};

use super::black_scholes::{bs_price, bs_vega};
use super::cev_formula::cev_price;
use super::{OptionKind, OptionSpec};
use crate::cev::CevParams;
use crate::error::{Error, Result};

const SIGMA_MIN: f64 = 1e-8;
const SIGMA_MAX: f64 = 50.0;
const MAX_ITER: usize = 200;

/// Volatility at which the Black–Scholes price equals `target`.
///
/// The search is confined to `[1e-8, 50]`; targets outside the attainable
/// price range fail with [`Error::NoSolution`] naming the violated bound.
pub fn implied_vol(target: f64, spec: &OptionSpec) -> Result<f64> {
    if !target.is_finite() {
        return Err(Error::domain(format!("target price must be finite, got {target}")));
    }
    let lower = spec.discounted_intrinsic();
    let upper = spec.upper_bound();
    if target <= lower {
        return Err(Error::NoSolution(format!(
            "target {target} is at or below the discounted intrinsic value {lower}"
        )));
    }
    if target >= upper {
        return Err(Error::NoSolution(format!("target {target} is at or above the no-arbitrage upper bound {upper}")));
    }
    let mut lo = SIGMA_MIN;
    let mut hi = SIGMA_MAX;
    let f_lo = bs_price(spec, lo)? - target;
    let f_hi = bs_price(spec, hi)? - target;
    if f_lo > 0.0 {
        return Err(Error::NoSolution(format!("target {target} is below the price at sigma = {SIGMA_MIN}")));
    }
    if f_hi < 0.0 {
        return Err(Error::NoSolution(format!("target {target} is above the price at sigma = {SIGMA_MAX}")));
    }
    if f_lo == 0.0 {
        return Ok(lo);
    }

    // Newton from the inflection-point guess, falling back to bisection
    // whenever the step leaves the bracket.
    let guess = (2.0 * ((spec.spot / spec.strike).ln() + spec.rate * spec.maturity).abs() / spec.maturity).sqrt();
    let mut sigma = guess.clamp(0.05, 5.0);
    let tol = 4.0 * f64::EPSILON * target;
    for _ in 0..MAX_ITER {
        let diff = bs_price(spec, sigma)? - target;
        if diff.abs() <= tol {
            return Ok(sigma);
        }
        if diff > 0.0 {
            hi = sigma;
        } else {
            lo = sigma;
        }
        if hi - lo <= 1e-15 * hi {
            return Ok(0.5 * (lo + hi));
        }
        let vega = bs_vega(spec, sigma);
        let newton = sigma - diff / vega;
        sigma = if vega > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
    }
    Err(Error::Convergence { partial: sigma, terms: MAX_ITER })
}

/// One point on an implied-volatility curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmilePoint {
    /// `K/P`
    pub moneyness: f64,
    pub implied_vol: Option<f64>,
    /// Implied volatility divided by the at-the-money value.
    pub normalized: Option<f64>,
    /// Why inversion failed at this point, if it did.
    pub error: Option<String>,
}

/// CEV implied-volatility curve over `moneyness` (strike over spot).
///
/// Each strike is inverted from its out-of-the-money side. The spot,
/// maturity and rate come from `template`; its strike and kind are ignored.
pub fn smile(params: &CevParams, template: &OptionSpec, moneyness: &[f64]) -> Result<Vec<SmilePoint>> {
    let atm = iv_at(params, template, 1.0).ok();
    moneyness
        .iter()
        .map(|&m| {
            if !(m.is_finite() && m > 0.0) {
                return Err(Error::domain(format!("moneyness must be positive, got {m}")));
            }
            Ok(match iv_at(params, template, m) {
                Ok(iv) => SmilePoint { moneyness: m, implied_vol: Some(iv), normalized: atm.map(|a| iv / a), error: None },
                Err(e) => SmilePoint { moneyness: m, implied_vol: None, normalized: None, error: Some(e.to_string()) },
            })
        })
        .collect()
}

fn iv_at(params: &CevParams, template: &OptionSpec, moneyness: f64) -> Result<f64> {
    let strike = moneyness * template.spot;
    let forward = template.spot * (template.rate * template.maturity).exp();
    let kind = if strike < forward { OptionKind::Put } else { OptionKind::Call };
    let spec = OptionSpec::new(template.spot, strike, template.maturity, template.rate, kind)?;
    implied_vol(cev_price(&spec, params)?, &spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        for &sigma in &[0.05, 0.3, 0.87, 2.5] {
            for &m in &[0.7, 1.0, 1.3] {
                let kind = if m < 1.0 { OptionKind::Put } else { OptionKind::Call };
                let spec = OptionSpec::new(0.025, 0.025 * m, 0.25, 0.05, kind).unwrap();
                let p = bs_price(&spec, sigma).unwrap();
                let iv = implied_vol(p, &spec).unwrap();
                assert!((iv - sigma).abs() < 1e-8, "sigma {sigma} m {m}: {iv}");
            }
        }
    }

    #[test]
    fn bounds_are_named() {
        let spec = OptionSpec::call(1.0, 0.5, 1.0, 0.0).unwrap();
        let msg = implied_vol(0.4, &spec).unwrap_err().to_string();
        assert!(msg.contains("intrinsic"), "{msg}");
        let msg = implied_vol(1.5, &spec).unwrap_err().to_string();
        assert!(msg.contains("upper bound"), "{msg}");
    }

    #[test]
    fn smile_is_normalized_at_the_money() {
        let params = CevParams::constant_product(5e5, 48.7).unwrap();
        let template = OptionSpec::call(0.025, 0.025, 0.25, 0.05).unwrap();
        let pts = smile(&params, &template, &[0.8, 1.0, 1.2]).unwrap();
        assert!((pts[1].normalized.unwrap() - 1.0).abs() < 1e-12);
        assert!(pts[0].normalized.unwrap() > 1.0);
        assert!(pts[2].normalized.unwrap() < 1.0);
    }
}
