//! Flow-volatility and realized-variance estimators, jump statistics,
//! least squares, and the variance-elasticity regression.

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::student_t_two_sided_p;
use crate::stats::{mean, median, pairwise_sum, quantile, sample_std};
use crate::DAYS_PER_YEAR;

/// Rolling window length, in daily returns.
pub const WINDOW_DAYS: usize = 14;
/// Widest max/min price ratio admitted to the elasticity regression.
pub const MAX_PRICE_RANGE: f64 = 1e4;
/// Minimum number of windows surviving outlier removal.
pub const MIN_WINDOWS: usize = 10;

/// One subnet's daily pool snapshots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailySeries {
    pub dates: Vec<NaiveDate>,
    pub tao_reserve: Vec<f64>,
    pub alpha_reserve: Vec<f64>,
    pub price: Vec<f64>,
}

impl DailySeries {
    /// Validates lengths, strictly increasing dates and positive values.
    pub fn new(dates: Vec<NaiveDate>, tao_reserve: Vec<f64>, alpha_reserve: Vec<f64>, price: Vec<f64>) -> Result<Self> {
        let n = dates.len();
        if tao_reserve.len() != n || alpha_reserve.len() != n || price.len() != n {
            return Err(Error::domain("series columns have different lengths"));
        }
        if let Some(w) = dates.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::domain(format!("dates must be strictly increasing ({} then {})", w[0], w[1])));
        }
        for (i, ((&x, &y), &p)) in tao_reserve.iter().zip(&alpha_reserve).zip(&price).enumerate() {
            if !(x > 0.0 && y > 0.0 && p > 0.0 && x.is_finite() && y.is_finite() && p.is_finite()) {
                return Err(Error::domain(format!("non-positive reserve or price on {}", dates[i])));
            }
        }
        Ok(Self { dates, tao_reserve, alpha_reserve, price })
    }

    /// Series with prices derived as `x/y`.
    pub fn from_reserves(dates: Vec<NaiveDate>, tao_reserve: Vec<f64>, alpha_reserve: Vec<f64>) -> Result<Self> {
        let price = tao_reserve.iter().zip(&alpha_reserve).map(|(x, y)| x / y).collect();
        Self::new(dates, tao_reserve, alpha_reserve, price)
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// Constant-product invariant `x·y` per day.
    pub fn invariant(&self) -> Vec<f64> {
        self.tao_reserve.iter().zip(&self.alpha_reserve).map(|(x, y)| x * y).collect()
    }

    /// Daily changes of the TAO reserve.
    pub fn flows(&self) -> Vec<f64> {
        self.tao_reserve.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// True when days `start..=end` are consecutive calendar days.
    pub fn is_contiguous(&self, start: usize, end: usize) -> bool {
        (self.dates[end] - self.dates[start]).num_days() == (end - start) as i64
    }
}

/// Annualized flow volatility: sample standard deviation of daily flows times `√365`.
pub fn estimate_flow_vol(daily_flows: &[f64]) -> Result<f64> {
    if daily_flows.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "flow volatility needs at least 2 observations, got {}",
            daily_flows.len()
        )));
    }
    Ok(sample_std(daily_flows) * DAYS_PER_YEAR.sqrt())
}

/// Annualized realized variance from daily prices: `Σ(Δ log P)² · 365/n_returns`.
pub fn realized_variance(prices: &[f64]) -> Result<f64> {
    if prices.len() < 2 {
        return Err(Error::InsufficientData("realized variance needs at least 2 prices".into()));
    }
    if let Some(p) = prices.iter().find(|p| !(**p > 0.0 && p.is_finite())) {
        return Err(Error::domain(format!("prices must be positive, got {p}")));
    }
    let sq: Vec<f64> = prices.windows(2).map(|w| (w[1] / w[0]).ln().powi(2)).collect();
    Ok(pairwise_sum(&sq) * DAYS_PER_YEAR / sq.len() as f64)
}

/// Higher moments and jump-day statistics of daily flows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowStats {
    /// `None` when the flows have zero variance.
    pub skewness: Option<f64>,
    pub excess_kurtosis: Option<f64>,
    /// Share of evaluated days flagged as jumps.
    pub jump_day_fraction: f64,
    /// Share of `ΣΔF²` over evaluated days contributed by jump days.
    pub jump_variance_share: f64,
    pub evaluated_days: usize,
}

/// A day is a jump when `|ΔF|` exceeds three daily standard deviations of
/// the preceding 14 flows. Only days with a full trailing window are evaluated.
pub fn flow_stats(series: &DailySeries) -> Result<FlowStats> {
    let flows = series.flows();
    if flows.len() < WINDOW_DAYS + 1 {
        return Err(Error::InsufficientData(format!(
            "jump statistics need at least {} daily observations, got {}",
            WINDOW_DAYS + 2,
            series.len()
        )));
    }
    let m = mean(&flows);
    let m2 = mean(&flows.iter().map(|f| (f - m).powi(2)).collect::<Vec<_>>());
    let (skewness, excess_kurtosis) = if m2 > 0.0 {
        let m3 = mean(&flows.iter().map(|f| (f - m).powi(3)).collect::<Vec<_>>());
        let m4 = mean(&flows.iter().map(|f| (f - m).powi(4)).collect::<Vec<_>>());
        (Some(m3 / m2.powf(1.5)), Some(m4 / (m2 * m2) - 3.0))
    } else {
        (None, None)
    };

    let mut jumps = 0usize;
    let mut jump_sq = Vec::new();
    let mut all_sq = Vec::new();
    for t in WINDOW_DAYS..flows.len() {
        let daily_sd = sample_std(&flows[t - WINDOW_DAYS..t]);
        let f = flows[t];
        all_sq.push(f * f);
        if f.abs() > 3.0 * daily_sd {
            jumps += 1;
            jump_sq.push(f * f);
        }
    }
    let evaluated = all_sq.len();
    let total = pairwise_sum(&all_sq);
    Ok(FlowStats {
        skewness,
        excess_kurtosis,
        jump_day_fraction: jumps as f64 / evaluated as f64,
        jump_variance_share: if total > 0.0 { pairwise_sum(&jump_sq) / total } else { 0.0 },
        evaluated_days: evaluated,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub t_stat: f64,
    pub p_value: f64,
    pub r_squared: f64,
    pub n_obs: usize,
}

/// Ordinary least squares of `y` on `x` with a two-sided t-test on the slope.
pub fn ols(x: &[f64], y: &[f64]) -> Result<RegressionResult> {
    if x.len() != y.len() {
        return Err(Error::domain(format!("x has {} points but y has {}", x.len(), y.len())));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!("regression needs at least 3 points, got {n}")));
    }
    let mx = mean(x);
    let my = mean(y);
    let dx: Vec<f64> = x.iter().map(|v| v - mx).collect();
    let dy: Vec<f64> = y.iter().map(|v| v - my).collect();
    let sxx = pairwise_sum(&dx.iter().map(|d| d * d).collect::<Vec<_>>());
    if sxx == 0.0 {
        return Err(Error::Degenerate("regressor is constant".into()));
    }
    let sxy = pairwise_sum(&dx.iter().zip(&dy).map(|(a, b)| a * b).collect::<Vec<_>>());
    let syy = pairwise_sum(&dy.iter().map(|d| d * d).collect::<Vec<_>>());
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pairwise_sum(
        &x.iter().zip(y).map(|(xi, yi)| (yi - intercept - slope * xi).powi(2)).collect::<Vec<_>>(),
    );
    let df = (n - 2) as f64;
    let slope_stderr = (sse / df / sxx).sqrt();
    let t_stat = if slope_stderr > 0.0 {
        slope / slope_stderr
    } else if slope == 0.0 {
        0.0
    } else {
        slope.signum() * f64::INFINITY
    };
    let r_squared = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 0.0 };
    Ok(RegressionResult {
        slope,
        intercept,
        slope_stderr,
        t_stat,
        p_value: student_t_two_sided_p(t_stat, df),
        r_squared,
        n_obs: n,
    })
}

/// Two-sided one-sample t-test of `mean(values) = mu0`. Returns `(t, p)`.
pub fn one_sample_t(values: &[f64], mu0: f64) -> Result<(f64, f64)> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("t-test needs at least 2 values, got {n}")));
    }
    let s = sample_std(values);
    if s == 0.0 {
        return Err(Error::Degenerate("sample variance is zero".into()));
    }
    let t = (mean(values) - mu0) / (s / (n as f64).sqrt());
    Ok((t, student_t_two_sided_p(t, (n - 1) as f64)))
}

/// Drops points further than three standard deviations from the mean, once.
pub fn remove_outliers(values: &[f64]) -> Vec<bool> {
    if values.len() < 2 {
        return vec![true; values.len()];
    }
    let m = mean(values);
    let s = sample_std(values);
    values.iter().map(|v| (v - m).abs() <= 3.0 * s).collect()
}

/// Regression points for one subnet: `log P` and `log(RV·k/σ̂_F²)` per window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElasticityWindows {
    pub log_price: Vec<f64>,
    pub log_scaled_variance: Vec<f64>,
}

/// Builds rolling 14-day windows. Windows spanning missing days, or with
/// zero realized variance or zero flow volatility, are skipped.
pub fn elasticity_windows(series: &DailySeries) -> Result<ElasticityWindows> {
    let n = series.len();
    if n < WINDOW_DAYS + 1 {
        return Err(Error::InsufficientData(format!("need at least {} days, got {n}", WINDOW_DAYS + 1)));
    }
    let k = series.invariant();
    let flows = series.flows();
    let mut out = ElasticityWindows { log_price: Vec::new(), log_scaled_variance: Vec::new() };
    for s in 0..n - WINDOW_DAYS {
        let e = s + WINDOW_DAYS;
        if !series.is_contiguous(s, e) {
            continue;
        }
        let prices = &series.price[s..=e];
        let rv = realized_variance(prices)?;
        let sigma_f = estimate_flow_vol(&flows[s..e])?;
        if !(rv > 0.0 && sigma_f > 0.0) {
            continue;
        }
        let k_window = median(&k[s..=e]);
        let log_p = mean(&prices.iter().map(|p| p.ln()).collect::<Vec<_>>());
        out.log_price.push(log_p);
        out.log_scaled_variance.push((rv * k_window / (sigma_f * sigma_f)).ln());
    }
    Ok(out)
}

/// Within-subnet regression of `log(RV·k/σ̂_F²)` on `log P`.
///
/// Fails with the screen that excluded the subnet: price range wider than
/// `1e4`, or fewer than 10 windows after outlier removal.
pub fn variance_elasticity(series: &DailySeries) -> Result<RegressionResult> {
    let (lo, hi) = series
        .price
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| (lo.min(p), hi.max(p)));
    if hi / lo > MAX_PRICE_RANGE {
        return Err(Error::Degenerate(format!("price range {:.3e} exceeds {MAX_PRICE_RANGE:e}", hi / lo)));
    }
    let w = elasticity_windows(series)?;
    let keep = remove_outliers(&w.log_scaled_variance);
    let (x, y): (Vec<f64>, Vec<f64>) = w
        .log_price
        .iter()
        .zip(&w.log_scaled_variance)
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|((x, y), _)| (*x, *y))
        .unzip();
    if x.len() < MIN_WINDOWS {
        return Err(Error::InsufficientData(format!(
            "{} valid windows after outlier removal, need {MIN_WINDOWS}",
            x.len()
        )));
    }
    ols(&x, &y)
}

/// Cross-subnet summary of elasticity slopes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElasticityResult {
    /// `(subnet, slope)` for included subnets.
    pub slopes: Vec<(u32, f64)>,
    /// `(subnet, reason)` for subnets failing a screen.
    pub excluded: Vec<(u32, String)>,
    pub median: f64,
    /// 25th and 75th percentiles.
    pub iqr: (f64, f64),
    pub share_negative: f64,
    /// `(t, p)` against a zero mean slope.
    pub t_vs_zero: (f64, f64),
    /// `(t, p)` against a mean slope of −1.
    pub t_vs_minus_one: (f64, f64),
}

/// Runs [`variance_elasticity`] on every subnet in parallel and summarizes.
pub fn elasticity_panel<'a, I>(panel: I) -> Result<ElasticityResult>
where
    I: IntoIterator<Item = (u32, &'a DailySeries)>,
{
    let items: Vec<(u32, &DailySeries)> = panel.into_iter().collect();
    let fits: Vec<(u32, Result<RegressionResult>)> =
        items.par_iter().map(|(id, s)| (*id, variance_elasticity(s))).collect();
    let mut slopes = Vec::new();
    let mut excluded = Vec::new();
    for (id, fit) in fits {
        match fit {
            Ok(r) => slopes.push((id, r.slope)),
            Err(e) => excluded.push((id, e.to_string())),
        }
    }
    let values: Vec<f64> = slopes.iter().map(|s| s.1).collect();
    if values.len() < 2 {
        return Err(Error::InsufficientData(format!("{} subnets passed the screens, need 2", values.len())));
    }
    Ok(ElasticityResult {
        median: median(&values),
        iqr: (quantile(&values, 0.25), quantile(&values, 0.75)),
        share_negative: values.iter().filter(|v| **v < 0.0).count() as f64 / values.len() as f64,
        t_vs_zero: one_sample_t(&values, 0.0)?,
        t_vs_minus_one: one_sample_t(&values, -1.0)?,
        slopes,
        excluded,
    })
}
