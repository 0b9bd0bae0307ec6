use super::{OptionKind, OptionSpec};
use crate::error::{Error, Result};
use crate::specfun::normal_cdf_unchecked as ncdf;

/// Black–Scholes price with volatility `sigma`.
pub fn bs_price(spec: &OptionSpec, sigma: f64) -> Result<f64> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::domain(format!("sigma must be finite and >= 0, got {sigma}")));
    }
    let sd = sigma * spec.maturity.sqrt();
    if sd == 0.0 {
        return Ok(spec.discounted_intrinsic());
    }
    let (d1, d2) = d1_d2(spec, sigma);
    let pv_strike = spec.strike * spec.discount();
    Ok(match spec.kind {
        OptionKind::Call => spec.spot * ncdf(d1) - pv_strike * ncdf(d2),
        OptionKind::Put => pv_strike * ncdf(-d2) - spec.spot * ncdf(-d1),
    })
}

/// Black–Scholes delta.
pub fn bs_delta(spec: &OptionSpec, sigma: f64) -> Result<f64> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::domain(format!("sigma must be finite and >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        let itm = spec.spot > spec.strike * spec.discount();
        return Ok(match (spec.kind, itm) {
            (OptionKind::Call, true) => 1.0,
            (OptionKind::Call, false) => 0.0,
            (OptionKind::Put, true) => 0.0,
            (OptionKind::Put, false) => -1.0,
        });
    }
    let (d1, _) = d1_d2(spec, sigma);
    Ok(match spec.kind {
        OptionKind::Call => ncdf(d1),
        OptionKind::Put => ncdf(d1) - 1.0,
    })
}

pub(crate) fn bs_vega(spec: &OptionSpec, sigma: f64) -> f64 {
    let (d1, _) = d1_d2(spec, sigma);
    spec.spot * crate::specfun::normal_pdf(d1) * spec.maturity.sqrt()
}

fn d1_d2(spec: &OptionSpec, sigma: f64) -> (f64, f64) {
    let sd = sigma * spec.maturity.sqrt();
    let d1 = ((spec.spot / spec.strike).ln() + (spec.rate + 0.5 * sigma * sigma) * spec.maturity) / sd;
    (d1, d1 - sd)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_vol_is_discounted_intrinsic() {
        let spec = OptionSpec::call(1.2, 1.0, 0.5, 0.05).unwrap();
        let v = bs_price(&spec, 0.0).unwrap();
        assert!((v - (1.2 - (-0.025f64).exp())).abs() < 1e-15);
        let otm = OptionSpec::call(0.5, 1.0, 0.5, 0.05).unwrap();
        assert_eq!(bs_price(&otm, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn put_call_parity() {
        for &(s, k, t, r, v) in &[(0.025, 0.02, 0.25, 0.05, 0.87), (1.0, 1.3, 2.0, 0.01, 0.2), (10.0, 7.0, 0.1, -0.01, 1.5)] {
            let c = bs_price(&OptionSpec::call(s, k, t, r).unwrap(), v).unwrap();
            let p = bs_price(&OptionSpec::put(s, k, t, r).unwrap(), v).unwrap();
            let resid = c - p - s + k * (-r * t as f64).exp();
            assert!(resid.abs() < 1e-12 * s, "{resid}");
        }
    }

    #[test]
    fn negative_sigma_rejected() {
        let spec = OptionSpec::call(1.0, 1.0, 1.0, 0.0).unwrap();
        assert!(bs_price(&spec, -0.1).is_err());
    }
}
