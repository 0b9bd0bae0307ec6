//! Delta-hedged backtests of short at-the-money calls on pool tokens.
//!
//! For every rolling start date a 14-day ATM call is sold at the model
//! price, hedged daily at the pool's marginal price, and settled against the
//! realized terminal price. Pool depth and deltas are refreshed from the
//! observed reserves at each rebalance while the flow volatility stays at its
//! calibration-window estimate.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amm::slippage_from_price;
use crate::cev::CevParams;
use crate::econometrics::{estimate_flow_vol, ols, DailySeries, RegressionResult};
use crate::error::{Error, Result};
use crate::pricing::{bs_delta, bs_price, cev_delta, cev_price, OptionSpec};
use crate::stats::{mean, median};
use crate::{years_from_days, DAYS_PER_YEAR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HedgeModel {
    Cev,
    /// Black–Scholes with `σ = δ P^{-1/2}` re-matched at every rebalance.
    BsMatched,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BacktestConfig {
    pub calib_days: usize,
    pub horizon_days: usize,
    pub rate: f64,
    /// Subnets with either MAE above this percentage of spot are dropped
    /// from the cross-section; `None` keeps all.
    pub mae_threshold: Option<f64>,
    /// Accrue interest on the hedge cash account.
    pub financing: bool,
    /// Charge constant-product slippage on each hedge trade.
    pub charge_slippage: bool,
    /// Minimum number of daily observations for a subnet to be backtested.
    pub min_history_days: usize,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            calib_days: 14,
            horizon_days: 14,
            rate: 0.05,
            mae_threshold: Some(50.0),
            financing: true,
            charge_slippage: false,
            min_history_days: 42,
        }
    }
}

impl BacktestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.calib_days < 2 {
            return Err(Error::domain(format!("calib_days must be >= 2, got {}", self.calib_days)));
        }
        if self.horizon_days < 1 {
            return Err(Error::domain("horizon_days must be >= 1"));
        }
        if !self.rate.is_finite() {
            return Err(Error::domain("rate must be finite"));
        }
        if let Some(t) = self.mae_threshold {
            if !(t > 0.0) {
                return Err(Error::domain(format!("MAE threshold must be positive, got {t}")));
            }
        }
        Ok(())
    }
}

/// One sold-and-hedged option.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeRecord {
    pub start: chrono::NaiveDate,
    pub spot: f64,
    pub premium: f64,
    /// Hedge position held over each day of the horizon.
    pub hedge_positions: Vec<f64>,
    /// Cash spent (negative) or received on each rebalance, including the
    /// initial purchase and the terminal liquidation.
    pub hedge_cashflows: Vec<f64>,
    /// `Σ Δ_i (P_{i+1} − P_i)`
    pub hedge_gains: f64,
    pub financing: f64,
    pub slippage: f64,
    pub payoff: f64,
    /// Final value of the cash account after settlement.
    pub pnl: f64,
    /// `|pnl|` as a percentage of spot at inception.
    pub abs_error_pct: f64,
}

impl TradeRecord {
    /// `pnl − (premium + hedge gains + financing − slippage − payoff)`.
    pub fn accounting_residual(&self) -> f64 {
        self.pnl - (self.premium + self.hedge_gains + self.financing - self.slippage - self.payoff)
    }
}

/// Trades for one model plus the start dates that could not be traded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeRun {
    pub trades: Vec<TradeRecord>,
    pub skipped: usize,
}

/// Runs every feasible rolling start for one model.
pub fn run_trades(series: &DailySeries, cfg: &BacktestConfig, model: HedgeModel) -> Result<TradeRun> {
    cfg.validate()?;
    let n = series.len();
    let span = cfg.calib_days + cfg.horizon_days;
    if n < span + 1 {
        return Err(Error::InsufficientData(format!("need at least {} days, got {n}", span + 1)));
    }
    let flows = series.flows();
    let k = series.invariant();
    let mut trades = Vec::new();
    let mut skipped = 0;
    for t in cfg.calib_days..n - cfg.horizon_days {
        if !series.is_contiguous(t - cfg.calib_days, t + cfg.horizon_days) {
            skipped += 1;
            continue;
        }
        let sigma_f = estimate_flow_vol(&flows[t - cfg.calib_days..t])?;
        match hedge_one(series, &k, t, sigma_f, cfg, model) {
            Ok(trade) => trades.push(trade),
            Err(Error::Domain(_)) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(TradeRun { trades, skipped })
}

fn price_and_delta(spec: &OptionSpec, delta_param: f64, model: HedgeModel) -> Result<(f64, f64)> {
    match model {
        HedgeModel::Cev => {
            let params = CevParams::new(0.5, delta_param)?;
            Ok((cev_price(spec, &params)?, cev_delta(spec, &params)?))
        }
        HedgeModel::BsMatched => {
            let sigma = delta_param / spec.spot.sqrt();
            Ok((bs_price(spec, sigma)?, bs_delta(spec, sigma)?))
        }
    }
}

fn hedge_one(
    series: &DailySeries,
    k: &[f64],
    t: usize,
    sigma_f: f64,
    cfg: &BacktestConfig,
    model: HedgeModel,
) -> Result<TradeRecord> {
    let h = cfg.horizon_days;
    let spot = series.price[t];
    let strike = spot;
    let growth = if cfg.financing { cfg.rate / DAYS_PER_YEAR } else { 0.0 };
    let delta_at = |i: usize| 2.0 * sigma_f / k[i].sqrt();

    let mut premium = 0.0;
    let mut positions = Vec::with_capacity(h);
    let mut cashflows = Vec::with_capacity(h + 1);
    let mut cash = 0.0;
    let mut financing = 0.0;
    let mut slippage = 0.0;
    let mut hedge_gains = 0.0;
    let mut held = 0.0;
    for day in 0..h {
        let i = t + day;
        let p = series.price[i];
        let tau = years_from_days((h - day) as f64);
        let spec = OptionSpec::call(p, strike, tau, cfg.rate)?;
        let (value, target) = price_and_delta(&spec, delta_at(i), model)?;
        if day == 0 {
            premium = value;
            cash = premium;
        } else {
            let interest = cash * growth;
            financing += interest;
            cash += interest;
            hedge_gains += held * (p - series.price[i - 1]);
        }
        let trade = target - held;
        let flow = -trade * p;
        cash += flow;
        cashflows.push(flow);
        if cfg.charge_slippage {
            let cost = slippage_from_price(p, k[i], trade.abs());
            slippage += cost;
            cash -= cost;
        }
        held = target;
        positions.push(held);
    }
    let end = t + h;
    let p_end = series.price[end];
    let interest = cash * growth;
    financing += interest;
    cash += interest;
    hedge_gains += held * (p_end - series.price[end - 1]);
    cash += held * p_end;
    cashflows.push(held * p_end);
    let payoff = (p_end - strike).max(0.0);
    let pnl = cash - payoff;
    Ok(TradeRecord {
        start: series.dates[t],
        spot,
        premium,
        hedge_positions: positions,
        hedge_cashflows: cashflows,
        hedge_gains,
        financing,
        slippage,
        payoff,
        pnl,
        abs_error_pct: 100.0 * pnl.abs() / spot,
    })
}

/// Per-subnet backtest summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubnetResult {
    pub subnet_id: u32,
    /// `log10` of the sample-median invariant.
    pub log10_k: f64,
    /// Mean absolute hedging error, percent of spot.
    pub mae_cev: f64,
    pub mae_bs: f64,
    /// `mae_cev / mae_bs`
    pub ratio: f64,
    pub n_trades: usize,
    pub skipped_trades: usize,
    /// Why the subnet was not backtested, if it was not.
    pub excluded: Option<String>,
}

/// Backtests one subnet under both models. Insufficient history yields an
/// excluded result rather than an error.
pub fn run_subnet_backtest(subnet_id: u32, series: &DailySeries, cfg: &BacktestConfig) -> Result<SubnetResult> {
    cfg.validate()?;
    let log10_k = if series.is_empty() { f64::NAN } else { median(&series.invariant()).log10() };
    let excluded = |reason: String| SubnetResult {
        subnet_id,
        log10_k,
        mae_cev: f64::NAN,
        mae_bs: f64::NAN,
        ratio: f64::NAN,
        n_trades: 0,
        skipped_trades: 0,
        excluded: Some(reason),
    };
    if series.len() < cfg.min_history_days.max(cfg.calib_days + cfg.horizon_days + 1) {
        return Ok(excluded(format!("{} daily observations, need {}", series.len(), cfg.min_history_days)));
    }
    let cev = run_trades(series, cfg, HedgeModel::Cev)?;
    let bs = run_trades(series, cfg, HedgeModel::BsMatched)?;
    if cev.trades.is_empty() || bs.trades.is_empty() {
        return Ok(excluded("no tradable start dates".into()));
    }
    let mae = |run: &TradeRun| mean(&run.trades.iter().map(|t| t.abs_error_pct).collect::<Vec<_>>());
    let (mae_cev, mae_bs) = (mae(&cev), mae(&bs));
    Ok(SubnetResult {
        subnet_id,
        log10_k,
        mae_cev,
        mae_bs,
        ratio: mae_cev / mae_bs,
        n_trades: cev.trades.len(),
        skipped_trades: cev.skipped,
        excluded: None,
    })
}

/// Backtests every subnet in parallel; output follows input order.
pub fn run_panel_backtest<'a, I>(panel: I, cfg: &BacktestConfig) -> Result<Vec<SubnetResult>>
where
    I: IntoIterator<Item = (u32, &'a DailySeries)>,
{
    let items: Vec<(u32, &DailySeries)> = panel.into_iter().collect();
    items.par_iter().map(|(id, s)| run_subnet_backtest(*id, s, cfg)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossSection {
    pub included: Vec<SubnetResult>,
    /// Subnets removed by the MAE threshold.
    pub dropped: Vec<SubnetResult>,
    /// OLS of the MAE ratio on `log10 k` over included subnets.
    pub regression: RegressionResult,
}

/// Applies the MAE filter and regresses the error ratio on depth.
pub fn cross_section(results: &[SubnetResult], threshold: Option<f64>) -> Result<CrossSection> {
    let (mut included, mut dropped) = (Vec::new(), Vec::new());
    for r in results.iter().filter(|r| r.excluded.is_none()) {
        let over = threshold.is_some_and(|t| r.mae_cev > t || r.mae_bs > t);
        if over {
            dropped.push(r.clone());
        } else {
            included.push(r.clone());
        }
    }
    if included.len() < 3 {
        return Err(Error::Degenerate(format!("{} subnets remain after filtering, need 3", included.len())));
    }
    let x: Vec<f64> = included.iter().map(|r| r.log10_k).collect();
    let y: Vec<f64> = included.iter().map(|r| r.ratio).collect();
    let regression = ols(&x, &y)?;
    Ok(CrossSection { included, dropped, regression })
}

/// Per-subnet results as CSV.
pub fn write_results_csv<W: Write>(results: &[SubnetResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["subnet", "log10_k", "mae_cev", "mae_bs", "ratio", "n_trades", "skipped_trades", "excluded"])?;
    for r in results {
        w.write_record([
            r.subnet_id.to_string(),
            format!("{:.6}", r.log10_k),
            format!("{:.6}", r.mae_cev),
            format!("{:.6}", r.mae_bs),
            format!("{:.6}", r.ratio),
            r.n_trades.to_string(),
            r.skipped_trades.to_string(),
            r.excluded.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Dropped-subnet table: `subnet,log10_k,mae_cev,mae_bs,ratio`.
pub fn write_dropped_csv<W: Write>(dropped: &[SubnetResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["subnet", "log10_k", "mae_cev", "mae_bs", "ratio"])?;
    for r in dropped {
        w.write_record([
            r.subnet_id.to_string(),
            format!("{:.6}", r.log10_k),
            format!("{:.6}", r.mae_cev),
            format!("{:.6}", r.mae_bs),
            format!("{:.6}", r.ratio),
        ])?;
    }
    w.flush()?;
    Ok(())
}
