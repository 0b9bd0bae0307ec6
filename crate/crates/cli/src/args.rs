use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "ammcev", version, about = "CEV option pricing and diagnostics for AMM-priced tokens")]
#[command(args_override_self = true)]
pub struct Cli {
    /// key=value file supplying defaults for any flag; flags on the command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Directory receiving data files and manifest.json.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// CEV and volatility-matched Black–Scholes prices of one option.
    Price(PriceArgs),
    /// Delta, gamma, vega, liquidity and emission Greeks.
    Greeks(GreeksArgs),
    /// Normalized implied-volatility curves.
    Smile(SmileArgs),
    /// Monte Carlo pool or price paths.
    Simulate(SimulateArgs),
    /// Monte Carlo call prices against the closed form.
    McValidate(McValidateArgs),
    /// Emission-adjusted ATM prices over a grid of invariant growth rates.
    EmissionsCurve(EmissionsArgs),
    /// Delta-hedged backtest over a snapshot panel.
    Backtest(BacktestArgs),
    /// Variance-elasticity regressions over a snapshot panel.
    Elasticity(ElasticityArgs),
    /// Download daily pool snapshots into a panel CSV.
    Fetch(FetchArgs),
    /// Write a synthetic snapshot panel.
    Fixtures(FixturesArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Price(_) => "price",
            Command::Greeks(_) => "greeks",
            Command::Smile(_) => "smile",
            Command::Simulate(_) => "simulate",
            Command::McValidate(_) => "mc-validate",
            Command::EmissionsCurve(_) => "emissions-curve",
            Command::Backtest(_) => "backtest",
            Command::Elasticity(_) => "elasticity",
            Command::Fetch(_) => "fetch",
            Command::Fixtures(_) => "fixtures",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PoolArgs {
    /// Pool price in TAO per alpha.
    #[arg(long, default_value_t = 0.025)]
    pub spot: f64,
    /// Constant-product invariant x·y.
    #[arg(long, default_value_t = 5e5)]
    pub k: f64,
    /// Annualized staking-flow volatility, TAO/√year.
    #[arg(long = "sigma-f", default_value_t = 48.7)]
    pub sigma_f: f64,
    #[arg(long, default_value_t = 0.05)]
    pub rate: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OptionArgs {
    /// Defaults to the spot.
    #[arg(long)]
    pub strike: Option<f64>,
    #[arg(long, default_value_t = 90.0)]
    pub days: f64,
    #[arg(long)]
    pub put: bool,
    /// Elasticity; values other than 0.5 need --delta.
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    /// CEV volatility parameter, overriding 2σ_F/√k.
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PriceArgs {
    #[command(flatten)]
    pub pool: PoolArgs,
    #[command(flatten)]
    pub option: OptionArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GreeksArgs {
    #[command(flatten)]
    pub pool: PoolArgs,
    #[command(flatten)]
    pub option: OptionArgs,
    /// Invariant growth per year from emissions.
    #[arg(long = "k-dot", default_value_t = 0.0)]
    pub k_dot: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SmileArgs {
    #[command(flatten)]
    pub pool: PoolArgs,
    /// Use the three reference subnet pools instead of --spot/--k/--sigma-f.
    #[arg(long)]
    pub table1: bool,
    #[arg(long, default_value_t = 90.0)]
    pub days: f64,
    #[arg(long = "m-min", default_value_t = 0.7)]
    pub m_min: f64,
    #[arg(long = "m-max", default_value_t = 1.3)]
    pub m_max: f64,
    #[arg(long = "m-step", default_value_t = 0.01)]
    pub m_step: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureArg {
    Physical,
    RiskNeutral,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub pool: PoolArgs,
    /// Staking-flow drift, TAO/year.
    #[arg(long = "mu-f", default_value_t = 0.0)]
    pub mu_f: f64,
    #[arg(long, default_value_t = 30.0)]
    pub days: f64,
    #[arg(long, default_value_t = 1000)]
    pub paths: usize,
    #[arg(long = "dt-hours", default_value_t = 1.0)]
    pub dt_hours: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = MeasureArg::Physical)]
    pub measure: MeasureArg,
    /// TAO injected into the pool per year.
    #[arg(long = "emission-tao", default_value_t = 0.0)]
    pub emission_tao: f64,
    /// Alpha injected into the pool per year.
    #[arg(long = "emission-alpha", default_value_t = 0.0)]
    pub emission_alpha: f64,
    /// Also write every path to paths.csv.
    #[arg(long = "dump-paths")]
    pub dump_paths: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct McValidateArgs {
    #[command(flatten)]
    pub pool: PoolArgs,
    #[arg(long, default_value_t = 30.0)]
    pub days: f64,
    #[arg(long, default_value_t = 100_000)]
    pub paths: usize,
    #[arg(long = "dt-hours", default_value_t = 1.0)]
    pub dt_hours: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Strikes as multiples of the spot.
    #[arg(long, value_delimiter = ',', default_value = "0.8,0.9,1.0,1.1,1.2")]
    pub strikes: Vec<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EmissionsArgs {
    #[command(flatten)]
    pub pool: PoolArgs,
    /// Maturities in days.
    #[arg(long, value_delimiter = ',', default_value = "30,90,180,365")]
    pub maturities: Vec<f64>,
    /// Largest invariant growth rate per year; defaults to 2k.
    #[arg(long = "k-dot-max")]
    pub k_dot_max: Option<f64>,
    #[arg(long, default_value_t = 21)]
    pub points: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BacktestArgs {
    #[arg(long)]
    pub panel: PathBuf,
    #[arg(long = "calib-days", default_value_t = 14)]
    pub calib_days: usize,
    #[arg(long = "horizon-days", default_value_t = 14)]
    pub horizon_days: usize,
    #[arg(long, default_value_t = 0.05)]
    pub rate: f64,
    /// Drop subnets whose MAE exceeds this percentage of spot.
    #[arg(long = "mae-threshold", default_value_t = 50.0)]
    pub mae_threshold: f64,
    /// Keep every subnet regardless of MAE.
    #[arg(long = "no-filter")]
    pub no_filter: bool,
    #[arg(long = "no-financing")]
    pub no_financing: bool,
    #[arg(long = "charge-slippage")]
    pub charge_slippage: bool,
    #[arg(long = "min-history", default_value_t = 42)]
    pub min_history: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ElasticityArgs {
    #[arg(long)]
    pub panel: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FetchArgs {
    #[arg(long, default_value = "https://api.taostats.io/api/dtao/pool/history/v1")]
    pub endpoint: String,
    /// Subnet ids, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub subnets: Vec<u32>,
    /// First day, YYYY-MM-DD.
    #[arg(long)]
    pub start: String,
    /// Last day, YYYY-MM-DD.
    #[arg(long)]
    pub end: String,
    #[arg(long = "cache-dir")]
    pub cache_dir: Option<PathBuf>,
    #[arg(long = "field-records")]
    pub field_records: Option<String>,
    #[arg(long = "field-date")]
    pub field_date: Option<String>,
    #[arg(long = "field-tao")]
    pub field_tao: Option<String>,
    #[arg(long = "field-alpha")]
    pub field_alpha: Option<String>,
    #[arg(long = "reserve-scale")]
    pub reserve_scale: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FixturesArgs {
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    #[arg(long, default_value_t = 1e7)]
    pub k0: f64,
    /// Spread invariants log-evenly from --k0 up to this value across subnets.
    #[arg(long = "k0-max")]
    pub k0_max: Option<f64>,
    #[arg(long = "sigma-f", default_value_t = 48.7)]
    pub sigma_f: f64,
    #[arg(long = "mu-f", default_value_t = 0.0)]
    pub mu_f: f64,
    #[arg(long, default_value_t = 0.025)]
    pub p0: f64,
    #[arg(long, default_value_t = 500)]
    pub days: usize,
    #[arg(long, default_value_t = 30)]
    pub subnets: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value = "2025-01-01")]
    pub start: String,
}
