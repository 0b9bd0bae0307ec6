//! Closed-form CEV prices via the non-central chi-squared distribution.

use serde::{Deserialize, Serialize};

use super::black_scholes::bs_price;
use super::{OptionKind, OptionSpec};
use crate::cev::CevParams;
use crate::error::{Error, Result};
use crate::specfun::{noncentral_chi2, SeriesControl};

/// Below this `|r|T` the rate factor in `κ` uses its series.
const ZERO_RATE_SWITCH: f64 = 1e-8;

/// Arguments of the two chi-squared evaluations in the CEV formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareArgs {
    pub kappa: f64,
    /// `κ K^{2(1-β)}`
    pub a: f64,
    /// `1/(1-β)`
    pub b: f64,
    /// `κ P^{2(1-β)} e^{2r(1-β)T}`
    pub c: f64,
}

/// A price together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceEval {
    pub price: f64,
    /// True when a large-noncentrality normal approximation was used.
    pub approximate: bool,
    /// True when `δ` is small enough that the zero-volatility limit was returned.
    pub deterministic: bool,
}

/// Computes `(κ, a, b, c)`. Fails for `β = 1`, which has no chi-squared form.
pub fn chi_square_args(spec: &OptionSpec, params: &CevParams) -> Result<ChiSquareArgs> {
    let one_minus = 1.0 - params.beta;
    if one_minus <= 0.0 {
        return Err(Error::Unsupported("beta = 1 has no chi-squared representation".into()));
    }
    let (r, t, d2) = (spec.rate, spec.maturity, params.delta * params.delta);
    // κ = κ₀ · x/(eˣ - 1) with κ₀ the zero-rate limit and x = 2r(1-β)T.
    let x = 2.0 * r * one_minus * t;
    let rate_factor = if (r * t).abs() < ZERO_RATE_SWITCH { 1.0 - 0.5 * x } else { x / x.exp_m1() };
    let kappa = rate_factor / (d2 * one_minus * one_minus * t);
    let exponent = 2.0 * one_minus;
    Ok(ChiSquareArgs {
        kappa,
        a: kappa * spec.strike.powf(exponent),
        b: 1.0 / one_minus,
        c: kappa * spec.spot.powf(exponent) * (2.0 * r * one_minus * t).exp(),
    })
}

/// CEV price of the option in `spec` with full evaluation metadata.
///
/// Calls use `P·Q(a; b+2, c) - K e^{-rT} F(c; b, a)` and puts use the
/// complementary tails, so neither side is formed by cancellation.
pub fn cev_price_eval(spec: &OptionSpec, params: &CevParams) -> Result<PriceEval> {
    if params.beta == 1.0 {
        return Ok(PriceEval { price: bs_price(spec, params.delta)?, approximate: false, deterministic: false });
    }
    let deterministic = PriceEval { price: spec.discounted_intrinsic(), approximate: false, deterministic: true };
    if params.delta == 0.0 {
        return Ok(deterministic);
    }
    let args = chi_square_args(spec, params)?;
    if !(args.kappa.is_finite() && args.a.is_finite() && args.c.is_finite()) {
        return Ok(deterministic);
    }
    let ctl = SeriesControl::default();
    let upper = noncentral_chi2(args.a, args.b + 2.0, args.c, &ctl)?;
    let lower = noncentral_chi2(args.c, args.b, args.a, &ctl)?;
    let pv_strike = spec.strike * spec.discount();
    let price = match spec.kind {
        OptionKind::Call => spec.spot * upper.sf - pv_strike * lower.cdf,
        OptionKind::Put => pv_strike * lower.sf - spec.spot * upper.cdf,
    };
    Ok(PriceEval { price: price.max(0.0), approximate: upper.approximate || lower.approximate, deterministic: false })
}

pub fn cev_price(spec: &OptionSpec, params: &CevParams) -> Result<f64> {
    cev_price_eval(spec, params).map(|e| e.price)
}

/// CEV call price; `spec.kind` is ignored.
pub fn cev_call(spec: &OptionSpec, params: &CevParams) -> Result<f64> {
    cev_price(&spec.with_kind(OptionKind::Call), params)
}

/// CEV put price; `spec.kind` is ignored.
pub fn cev_put(spec: &OptionSpec, params: &CevParams) -> Result<f64> {
    cev_price(&spec.with_kind(OptionKind::Put), params)
}

/// CEV price minus the Black–Scholes price at the spot effective volatility.
pub fn liquidity_correction(spec: &OptionSpec, params: &CevParams) -> Result<f64> {
    let sigma = params.effective_volatility(spec.spot)?;
    Ok(cev_price(spec, params)? - bs_price(spec, sigma)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::years_from_days;

    fn sn58() -> (OptionSpec, CevParams) {
        let spec = OptionSpec::put(0.002_606, 0.8 * 0.002_606, years_from_days(90.0), 0.05).unwrap();
        (spec, CevParams::constant_product(3.43e6, 48.7).unwrap())
    }

    #[test]
    fn parity_holds_tightly() {
        let (spec, params) = sn58();
        let c = cev_call(&spec, &params).unwrap();
        let p = cev_put(&spec, &params).unwrap();
        let resid = c - p - spec.spot + spec.strike * spec.discount();
        assert!(resid.abs() < 1e-12 * spec.spot, "{resid}");
    }

    #[test]
    fn zero_rate_limit_is_continuous() {
        let params = CevParams::constant_product(5e5, 48.7).unwrap();
        // Either side of the switch to the zero-rate form of kappa.
        let below = cev_call(&OptionSpec::call(0.025, 0.025, 0.25, (1.0 - 1e-6) * 1e-8 / 0.25).unwrap(), &params).unwrap();
        let above = cev_call(&OptionSpec::call(0.025, 0.025, 0.25, (1.0 + 1e-6) * 1e-8 / 0.25).unwrap(), &params).unwrap();
        assert!((below - above).abs() < 1e-12 * 0.025, "{below} {above}");
    }

    #[test]
    fn zero_delta_gives_intrinsic() {
        let params = CevParams::new(0.5, 0.0).unwrap();
        let spec = OptionSpec::call(1.0, 0.9, 1.0, 0.05).unwrap();
        let e = cev_price_eval(&spec, &params).unwrap();
        assert!(e.deterministic);
        assert!((e.price - (1.0 - 0.9 * (-0.05f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn unit_beta_is_black_scholes() {
        let params = CevParams::new(1.0, 0.6).unwrap();
        let spec = OptionSpec::call(1.0, 1.1, 0.5, 0.03).unwrap();
        assert_eq!(cev_call(&spec, &params).unwrap(), bs_price(&spec, 0.6).unwrap());
        assert_eq!(liquidity_correction(&spec, &params).unwrap(), 0.0);
        assert!(chi_square_args(&spec, &params).is_err());
    }
}
