//! Non-central chi-squared distribution function.
//!
//! `F(x; ν, λ) = Σ_j Pois(j; λ/2) · P(ν/2 + j, x/2)`, summed outward from the
//! modal Poisson index in both directions. Only one incomplete gamma pair is
//! evaluated (at the mode); neighbouring terms follow from
//! `P(a+1, z) = P(a, z) - z^a e^{-z} / Γ(a+1)`.

use super::gamma::{poisson_kernel, regularized_gamma};
use super::{normal_cdf_unchecked, SeriesControl};
use crate::error::{Error, Result};

/// Above this non-centrality the series is replaced by Sankaran's normal
/// approximation and the result is flagged.
pub const SERIES_NONCENTRALITY_LIMIT: f64 = 1e6;

/// Lower and upper tail of a non-central chi-squared evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ncx2Tails {
    pub cdf: f64,
    /// Upper tail, summed from its own series rather than as `1 - cdf`.
    pub sf: f64,
    /// True when the value comes from the large-λ normal approximation.
    pub approximate: bool,
    pub terms: usize,
}

pub fn noncentral_chi2(x: f64, df: f64, noncentrality: f64, ctl: &SeriesControl) -> Result<Ncx2Tails> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::domain(format!("chi-squared argument must be finite and >= 0, got {x}")));
    }
    if !df.is_finite() || df <= 0.0 {
        return Err(Error::domain(format!("degrees of freedom must be positive, got {df}")));
    }
    if !noncentrality.is_finite() || noncentrality < 0.0 {
        return Err(Error::domain(format!("non-centrality must be >= 0, got {noncentrality}")));
    }
    if x == 0.0 {
        return Ok(Ncx2Tails { cdf: 0.0, sf: 1.0, approximate: false, terms: 0 });
    }
    if noncentrality == 0.0 {
        let (p, q) = regularized_gamma(0.5 * df, 0.5 * x);
        return Ok(Ncx2Tails { cdf: p, sf: q, approximate: false, terms: 1 });
    }
    if noncentrality > SERIES_NONCENTRALITY_LIMIT {
        return Ok(sankaran(x, df, noncentrality));
    }
    poisson_mixture(x, df, noncentrality, ctl)
}

pub fn noncentral_chi2_cdf(x: f64, df: f64, noncentrality: f64, ctl: &SeriesControl) -> Result<f64> {
    noncentral_chi2(x, df, noncentrality, ctl).map(|t| t.cdf)
}

pub fn noncentral_chi2_sf(x: f64, df: f64, noncentrality: f64, ctl: &SeriesControl) -> Result<f64> {
    noncentral_chi2(x, df, noncentrality, ctl).map(|t| t.sf)
}

fn poisson_mixture(x: f64, df: f64, lambda: f64, ctl: &SeriesControl) -> Result<Ncx2Tails> {
    let m = 0.5 * lambda;
    let z = 0.5 * x;
    let half_df = 0.5 * df;
    let mode = m.floor();

    let w_mode = poisson_kernel(mode, m);
    let a_mode = half_df + mode;
    let (p_mode, q_mode) = regularized_gamma(a_mode, z);
    let g_mode = poisson_kernel(a_mode, z);
    // P(ν/2 + j, z) is largest at j = 0; bounds the downward remainder.
    let p_ceiling = regularized_gamma(half_df, z).0;

    let mut cdf = w_mode * p_mode;
    let mut sf = w_mode * q_mode;
    let mut terms = 1usize;

    // Upward from the mode: P shrinks, Q grows.
    {
        let (mut j, mut a, mut w, mut p, mut q, mut g) = (mode, a_mode, w_mode, p_mode, q_mode, g_mode);
        loop {
            p = (p - g).max(0.0);
            q = (q + g).min(1.0);
            g *= z / (a + 1.0);
            a += 1.0;
            w *= m / (j + 1.0);
            j += 1.0;
            cdf += w * p;
            sf += w * q;
            terms += 1;

            let rho = m / (j + 1.0);
            if rho < 1.0 {
                let tail = w * rho / (1.0 - rho);
                if p * tail <= ctl.rel_tol * cdf.max(f64::MIN_POSITIVE) && tail <= ctl.rel_tol * sf {
                    break;
                }
                if tail == 0.0 {
                    break;
                }
            }
            if terms >= ctl.max_terms {
                return Err(Error::Convergence { partial: cdf, terms });
            }
        }
    }

    // Downward from the mode: P grows, Q shrinks.
    {
        let (mut j, mut a, mut w, mut p, mut q, mut g) = (mode, a_mode, w_mode, p_mode, q_mode, g_mode);
        while j >= 1.0 {
            // kernel at a - 1 from kernel at a
            g *= a / z;
            a -= 1.0;
            w *= j / m;
            j -= 1.0;
            p = (p + g).min(1.0);
            q = (q - g).max(0.0);
            cdf += w * p;
            sf += w * q;
            terms += 1;

            let rho = j / m;
            let tail = if rho < 1.0 { w * rho / (1.0 - rho) } else { f64::INFINITY };
            if (p_ceiling * tail <= ctl.rel_tol * cdf && q * tail <= ctl.rel_tol * sf.max(f64::MIN_POSITIVE)) || w == 0.0 {
                break;
            }
            if terms >= ctl.max_terms {
                return Err(Error::Convergence { partial: cdf, terms });
            }
        }
    }

    Ok(Ncx2Tails { cdf: cdf.clamp(0.0, 1.0), sf: sf.clamp(0.0, 1.0), approximate: false, terms })
}

/// Sankaran (1963) cube-root-type normal approximation.
fn sankaran(x: f64, df: f64, lambda: f64) -> Ncx2Tails {
    let kl = df + lambda;
    let k2l = df + 2.0 * lambda;
    let h = 1.0 - 2.0 * kl * (df + 3.0 * lambda) / (3.0 * k2l * k2l);
    let p = k2l / (kl * kl);
    let mm = (h - 1.0) * (1.0 - 3.0 * h);
    let num = (x / kl).powf(h) - (1.0 + h * p * (h - 1.0 - 0.5 * (2.0 - h) * mm * p));
    let den = h * (2.0 * p).sqrt() * (1.0 + 0.5 * mm * p);
    let zscore = num / den;
    Ncx2Tails {
        cdf: normal_cdf_unchecked(zscore),
        sf: normal_cdf_unchecked(-zscore),
        approximate: true,
        terms: 0,
    }
}
