//! Special functions: standard normal CDF and the non-central chi-squared
//! distribution that drives the CEV option formula.

mod gamma;
mod ncx2;

pub use gamma::{ln_gamma, regularized_beta, regularized_gamma, student_t_two_sided_p};
pub use ncx2::{
    noncentral_chi2, noncentral_chi2_cdf, noncentral_chi2_sf, Ncx2Tails, SERIES_NONCENTRALITY_LIMIT,
};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Numerical control for series evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesControl {
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl SeriesControl {
    pub fn new(rel_tol: f64, max_terms: usize) -> Result<Self> {
        if !(rel_tol > 0.0 && rel_tol <= 1e-6) {
            return Err(Error::domain(format!("rel_tol must lie in (0, 1e-6], got {rel_tol}")));
        }
        if max_terms < 1000 {
            return Err(Error::domain(format!("max_terms must be >= 1000, got {max_terms}")));
        }
        Ok(Self { rel_tol, max_terms })
    }
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self { rel_tol: 1e-12, max_terms: 100_000 }
    }
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> Result<f64> {
    if z.is_finite() {
        Ok(normal_cdf_unchecked(z))
    } else {
        Err(Error::domain(format!("normal_cdf argument must be finite, got {z}")))
    }
}

pub(crate) fn normal_cdf_unchecked(z: f64) -> f64 {
    0.5 * libm::erfc(-z * std::f64::consts::FRAC_1_SQRT_2)
}

pub(crate) fn normal_pdf(z: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}
