use std::path::Path;

use ammcev::amm::{EmissionRates, PoolState, DEFAULT_BLOCK_INTERVAL};
use ammcev::backtest::{cross_section, run_panel_backtest, write_dropped_csv, write_results_csv, BacktestConfig};
use ammcev::cev::{effective_dividend_yield, CevParams, EmissionDrift, FlowParams, Measure};
use ammcev::data::{fetch_history, make_depth_ladder, make_synthetic_panel, read_panel, write_panel_to, FetchConfig, SyntheticSpec};
use ammcev::econometrics::elasticity_panel;
use ammcev::pricing::{
    bs_price, cev_price, cev_price_eval, emission_adjusted_price, greeks, smile, OptionKind, OptionSpec,
};
use ammcev::sim::{mc_option_price, simulate_pool_paths, SimConfig};
use ammcev::{years_from_days, Error, DAYS_PER_YEAR};
use chrono::NaiveDate;
use serde::Serialize;
use serde_json::json;

use crate::args::*;
use crate::manifest::Outputs;

/// Reference subnet pools: (name, spot, k, σ_F).
pub const REFERENCE_POOLS: [(&str, f64, f64, f64); 3] =
    [("sn58", 0.0022, 7.4e9, 2293.0), ("sn1", 0.0096, 52.8e9, 3571.0), ("sn3", 0.0253, 117.1e9, 8250.0)];

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
    Io(std::io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    /// 2 for invalid input, 3 for data problems, 4 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Core(e) => match e {
                Error::Domain(_) | Error::Unsupported(_) | Error::ReserveDepletion(_) => 2,
                Error::Convergence { .. } | Error::NoSolution(_) => 4,
                _ => 3,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn cev_params(pool: &PoolArgs, option: &OptionArgs) -> CliResult<CevParams> {
    Ok(match option.delta {
        Some(d) => CevParams::new(option.beta, d)?,
        None if option.beta == 0.5 => CevParams::constant_product(pool.k, pool.sigma_f)?,
        None => return Err(CliError::Usage("--beta other than 0.5 requires --delta".into())),
    })
}

fn option_spec(pool: &PoolArgs, option: &OptionArgs) -> CliResult<OptionSpec> {
    let kind = if option.put { OptionKind::Put } else { OptionKind::Call };
    Ok(OptionSpec::new(
        pool.spot,
        option.strike.unwrap_or(pool.spot),
        years_from_days(option.days),
        pool.rate,
        kind,
    )?)
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out.into_bytes()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.10}")).unwrap_or_default()
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

pub fn run(command: &Command, out_dir: &Path) -> CliResult<()> {
    let mut out = Outputs::new(out_dir)?;
    let seed = match command {
        Command::Price(a) => price(a, &mut out)?,
        Command::Greeks(a) => greeks_cmd(a, &mut out)?,
        Command::Smile(a) => smile_cmd(a, &mut out)?,
        Command::Simulate(a) => simulate(a, &mut out)?,
        Command::McValidate(a) => mc_validate(a, &mut out)?,
        Command::EmissionsCurve(a) => emissions_curve(a, &mut out)?,
        Command::Backtest(a) => backtest(a, &mut out)?,
        Command::Elasticity(a) => elasticity(a, &mut out)?,
        Command::Fetch(a) => fetch(a, &mut out)?,
        Command::Fixtures(a) => fixtures(a, &mut out)?,
    };
    let config = serde_json::to_value(command).map_err(|e| CliError::Usage(e.to_string()))?;
    let config = config.get(command.name()).cloned().unwrap_or(config);
    out.finish(command.name(), config, seed)?;
    Ok(())
}

fn price(a: &PriceArgs, out: &mut Outputs) -> CliResult<Option<u64>> {
    let spec = option_spec(&a.pool, &a.option)?;
    let params = cev_params(&a.pool, &a.option)?;
    let eval = cev_price_eval(&spec, &params)?;
    let sigma_eff = params.effective_volatility(spec.spot)?;
    let bs = bs_price(&spec, sigma_eff)?;
    let report = json!({
        "kind": spec.kind,
        "spot": spec.spot,
        "strike": spec.strike,
        "maturity_years": spec.maturity,
        "beta": params.beta,
        "delta": params.delta,
        "sigma_eff": sigma_eff,
        "cev": eval.price,
        "bs": bs,
        "cev_pct_spot": 100.0 * eval.price / spec.spot,
        "bs_pct_spot": 100.0 * bs / spec.spot,
        "ratio": eval.price / bs,
        "approximate": eval.approximate,
    });
    print_json(&report);
    out.write_json("price.json", &report)?;
    Ok(None)
}

fn greeks_cmd(a: &GreeksArgs, out: &mut Outputs) -> CliResult<Option<u64>> {
    let spec = option_spec(&a.pool, &a.option)?;
    let params = cev_params(&a.pool, &a.option)?;
    let g = greeks(&spec, &params, &EmissionDrift::new(a.pool.k, a.k_dot)?)?;
    let report = serde_json::to_value(g).map_err(|e| CliError::Usage(e.to_string()))?;
    print_json(&report);
    out.write_json("greeks.json", &report)?;
    Ok(None)
}

fn moneyness_grid(min: f64, max: f64, step: f64) -> CliResult<Vec<f64>> {
    if !(min > 0.0 && max >= min && step > 0.0) {
        return Err(CliError::Usage("moneyness grid needs 0 < m-min <= m-max and m-step > 0".into()));
    }
    let n = ((max - min) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| min + i as f64 * step).collect())
}

fn smile_cmd(a: &SmileArgs, out: &mut Outputs) -> CliResult<Option<u64>> {
    let grid = moneyness_grid(a.m_min, a.m_max, a.m_step)?;
    let pools: Vec<(String, f64, f64, f64)> = if a.table1 {
        REFERENCE_POOLS.iter().map(|(n, p, k, s)| (n.to_string(), *p, *k, *s)).collect()
    } else {
        vec![("pool".into(), a.pool.spot, a.pool.k, a.pool.sigma_f)]
    };
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    for (name, spot, k, sigma_f) in &pools {
        let params = CevParams::constant_product(*k, *sigma_f)?;
        let template = OptionSpec::call(*spot, *spot, years_from_days(a.days), a.pool.rate)?;
        let pts = smile(&params, &template, &grid)?;
        for p in &pts {
            rows.push(vec![
                name.clone(),
                format!("{:.4}", p.moneyness),
                opt(p.implied_vol),
                opt(p.normalized),
                p.error.clone().unwrap_or_default(),
            ]);
        }
        curves.push(pts);
    }
    out.write("smile.csv", &csv_bytes(&["pool", "moneyness", "implied_vol", "normalized", "error"], rows))?;

    let mut max_dev: f64 = 0.0;
    for i in 0..grid.len() {
        let vals: Vec<f64> = curves.iter().filter_map(|c| c[i].normalized).collect();
        for x in &vals {
            for y in &vals {
                max_dev = max_dev.max((x / y - 1.0).abs());
            }
        }
    }
    let summary = json!({ "pools": pools.len(), "points": grid.len(), "max_pairwise_relative_deviation": max_dev });
    print_json(&summary);
    out.write_json("smile_summary.json", &summary)?;
    Ok(None)
}

fn emission_rates(tao: f64, alpha: f64) -> CliResult<Option<EmissionRates>> {
    if tao == 0.0 && alpha == 0.0 {
        return Ok(None);
    }
    Ok(Some(EmissionRates::new(tao, alpha, DEFAULT_BLOCK_INTERVAL)?))
}

fn simulate(a: &SimulateArgs, out: &mut Outputs) -> CliResult<Option<u64>> {
    let pool = PoolState::from_price_and_k(a.pool.spot, a.pool.k)?;
    let flow = FlowParams::new(a.mu_f, a.pool.sigma_f)?;
    let measure = match a.measure {
        MeasureArg::Physical => Measure::Physical,
        MeasureArg::RiskNeutral => Measure::RiskNeutral,
    };
    let mut cfg = SimConfig::new(years_from_days(a.days), a.paths, a.seed, measure);
    cfg.dt = a.dt_hours / (24.0 * DAYS_PER_YEAR);
    cfg.rate = a.pool.rate;
    cfg.emission = emission_rates(a.emission_tao, a.emission_alpha)?;
    cfg.store_paths = a.dump_paths;
    let set = simulate_pool_paths(&pool, &flow, &cfg)?;
    let rows = set.terminal.iter().enumerate().map(|(i, p)| vec![i.to_string(), format!("{p:.12e}")]);
    out.write("terminal.csv", &csv_bytes(&["path", "terminal_price"], rows))?;
    if a.dump_paths {
        let mut buf = Vec::new();
        set.write_csv(&mut buf)?;
        out.write("paths.csv", &buf)?;
    }
    let n = set.terminal.len() as f64;
    let mean = set.terminal.iter().sum::<f64>() / n;
    let summary = json!({
        "paths": set.terminal.len(),
        "steps": set.n_steps,
        "initial_price": set.initial_price,
        "mean_terminal_price": mean,
        "clamp_events": set.clamp_events,
    });
    print_json(&summary);
    out.write_json("simulate_summary.json", &summary)?;
    Ok(Some(a.seed))
}

/// One row of a Monte Carlo validation table.
#[derive(Debug, Clone, Serialize)]
pub struct McRow {
    pub moneyness: f64,
    pub strike: f64,
    pub closed_form: f64,
    pub mc_price: f64,
    pub std_error: f64,
    pub bias_pct_spot: f64,
    pub std_error_pct_spot: f64,
}

pub fn mc_validation_rows(a: &McValidateArgs) -> CliResult<(Vec<McRow>, u64)> {
    let pool = PoolState::from_price_and_k(a.pool.spot, a.pool.k)?;
    let flow = FlowParams::new(0.0, a.pool.sigma_f)?;
    let params = CevParams::constant_product(a.pool.k, a.pool.sigma_f)?;
    let mut cfg = SimConfig::new(years_from_days(a.days), a.paths, a.seed, Measure::RiskNeutral);
    cfg.dt = a.dt_hours / (24.0 * DAYS_PER_YEAR);
    cfg.rate = a.pool.rate;
    let set = simulate_pool_paths(&pool, &flow, &cfg)?;
    let mut rows = Vec::new();
    for &m in &a.strikes {
        let spec = OptionSpec::call(a.pool.spot, m * a.pool.spot, cfg.horizon, a.pool.rate)?;
        let exact = cev_price(&spec, &params)?;
        let mc = mc_option_price(&spec, &set)?;
        rows.push(McRow {
            moneyness: m,
            strike: spec.strike,
            closed_form: exact,
            mc_price: mc.price,
            std_error: mc.std_error,
            bias_pct_spot: 100.0 * (mc.price - exact) / a.pool.spot,
            std_error_pct_spot: 100.0 * mc.std_error / a.pool.spot,
        });
    }
    Ok((rows, set.clamp_events))
}

fn mc_validate(a: &McValidateArgs, out: &mut Outputs) -> CliResult<Option<u64>> {
    let (rows, clamps) = mc_validation_rows(a)?;
    let table = rows.iter().map(|r| {
        vec![
            format!("{:.4}", r.moneyness),
            format!("{:.12e}", r.strike),
            format!("{:.12e}", r.closed_form),
            format!("{:.12e}", r.mc_price),
            format!("{:.12e}", r.std_error),
            format!("{:.6}", r.bias_pct_spot),
            format!("{:.6}", r.std_error_pct_spot),
        ]
    });
    let header =
        ["moneyness", "strike", "closed_form", "mc_price", "std_error", "bias_pct_spot", "std_error_pct_spot"];
    out.write("mc_validate.csv", &csv_bytes(&header, table))?;
    let summary = json!({ "rows": rows, "clamp_events": clamps });
    print_json(&summary);
    Ok(Some(a.seed))
}

fn emissions_curve(a: &EmissionsArgs, out: &mut Outputs) -> CliResult<Option<u64>> {
    if a.points < 2 {
        return Err(CliError::Usage("--points must be at least 2".into()));
    }
    let params = CevParams::constant_product(a.pool.k, a.pool.sigma_f)?;
    let k_dot_max = a.k_dot_max.unwrap_or(2.0 * a.pool.k);
    let mut rows = Vec::new();
    for &days in &a.maturities {
        let spec = OptionSpec::call(a.pool.spot, a.pool.spot, years_from_days(days), a.pool.rate)?;
        for i in 0..a.points {
            let k_dot = k_dot_max * i as f64 / (a.points - 1) as f64;
            let em = EmissionDrift::new(a.pool.k, k_dot)?;
            let price = emission_adjusted_price(&spec, &params, &em)?;
            rows.push(vec![
                format!("{days}"),
                format!("{k_dot:.6e}"),
                format!("{price:.12e}"),
                format!("{:.8}", 100.0 * price / spec.spot),
                format!("{:.10}", effective_dividend_yield(&em)),
            ]);
        }
    }
    let header = ["days", "k_dot", "atm_call", "atm_call_pct_spot", "dividend_yield"];
    out.write("emissions.csv", &csv_bytes(&header, rows))?;
    println!("wrote emissions.csv ({} maturities x {} points)", a.maturities.len(), a.points);
    Ok(None)
}

fn backtest(a: &BacktestArgs, out: &mut Outputs) -> CliResult<Option<u64>> {
    out.record_input(&a.panel)?;
    let panel = read_panel(&a.panel)?;
    let cfg = BacktestConfig {
        calib_days: a.calib_days,
        horizon_days: a.horizon_days,
        rate: a.rate,
        mae_threshold: (!a.no_filter).then_some(a.mae_threshold),
        financing: !a.no_financing,
        charge_slippage: a.charge_slippage,
        min_history_days: a.min_history,
    };
    let results = run_panel_backtest(panel.iter().map(|(id, s)| (*id, s)), &cfg)?;
    let mut buf = Vec::new();
    write_results_csv(&results, &mut buf)?;
    out.write("backtest_results.csv", &buf)?;

    let dropped: Vec<_> = match cfg.mae_threshold {
        Some(t) => results.iter().filter(|r| r.excluded.is_none() && (r.mae_cev > t || r.mae_bs > t)).cloned().collect(),
        None => Vec::new(),
    };
    let mut buf = Vec::new();
    write_dropped_csv(&dropped, &mut buf)?;
    out.write("backtest_dropped.csv", &buf)?;

    let regression = |threshold| match cross_section(&results, threshold) {
        Ok(cs) => json!({ "included": cs.included.len(), "fit": cs.regression }),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let mut ratios: Vec<f64> = results
        .iter()
        .filter(|r| r.excluded.is_none() && !dropped.iter().any(|d| d.subnet_id == r.subnet_id))
        .map(|r| r.ratio)
        .collect();
    ratios.sort_by(f64::total_cmp);
    let median_ratio = match ratios.len() {
        0 => None,
        n if n % 2 == 1 => Some(ratios[n / 2]),
        n => Some(0.5 * (ratios[n / 2 - 1] + ratios[n / 2])),
    };
    let summary = json!({
        "subnets": results.len(),
        "excluded": results.iter().filter(|r| r.excluded.is_some()).count(),
        "dropped": dropped.len(),
        "median_ratio": median_ratio,
        "regression": regression(cfg.mae_threshold),
        "regression_unfiltered": regression(None),
    });
    print_json(&summary);
    out.write_json("backtest_regression.json", &summary)?;
    Ok(None)
}

fn elasticity(a: &ElasticityArgs, out: &mut Outputs) -> CliResult<Option<u64>> {
    out.record_input(&a.panel)?;
    let panel = read_panel(&a.panel)?;
    let res = elasticity_panel(panel.iter().map(|(id, s)| (*id, s)))?;
    let rows = res.slopes.iter().map(|(id, s)| vec![id.to_string(), format!("{s:.10}")]);
    out.write("elasticity_slopes.csv", &csv_bytes(&["subnet", "slope"], rows))?;
    let rows = res.excluded.iter().map(|(id, r)| vec![id.to_string(), format!("\"{}\"", r.replace('"', "'"))]);
    out.write("elasticity_excluded.csv", &csv_bytes(&["subnet", "reason"], rows))?;
    let summary = json!({
        "included": res.slopes.len(),
        "excluded": res.excluded.len(),
        "median": res.median,
        "iqr": [res.iqr.0, res.iqr.1],
        "share_negative": res.share_negative,
        "t_vs_zero": { "t": res.t_vs_zero.0, "p": res.t_vs_zero.1 },
        "t_vs_minus_one": { "t": res.t_vs_minus_one.0, "p": res.t_vs_minus_one.1 },
    });
    print_json(&summary);
    out.write_json("elasticity_summary.json", &summary)?;
    Ok(None)
}

fn parse_date(s: &str, flag: &str) -> CliResult<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|_| CliError::Usage(format!("{flag} must be YYYY-MM-DD, got `{s}`")))
}

fn fetch(a: &FetchArgs, out: &mut Outputs) -> CliResult<Option<u64>> {
    let start = parse_date(&a.start, "--start")?;
    let end = parse_date(&a.end, "--end")?;
    let mut cfg = FetchConfig::from_env(a.endpoint.clone())?;
    cfg.cache_dir = a.cache_dir.clone();
    if let Some(v) = &a.field_records {
        cfg.fields.records = v.clone();
    }
    if let Some(v) = &a.field_date {
        cfg.fields.date = v.clone();
    }
    if let Some(v) = &a.field_tao {
        cfg.fields.tao_reserve = v.clone();
    }
    if let Some(v) = &a.field_alpha {
        cfg.fields.alpha_reserve = v.clone();
    }
    if let Some(v) = a.reserve_scale {
        cfg.fields.reserve_scale = v;
    }
    let outcome = fetch_history(&cfg, &a.subnets, start, end)?;
    let mut buf = Vec::new();
    write_panel_to(&outcome.panel, &mut buf)?;
    out.write("panel.csv", &buf)?;
    print_json(&json!({
        "subnets": outcome.panel.len(),
        "rows": outcome.panel.values().map(|s| s.len()).sum::<usize>(),
        "requests": outcome.requests,
        "retries": outcome.retries,
        "cache_hits": outcome.cache_hits,
    }));
    Ok(None)
}

fn fixtures(a: &FixturesArgs, out: &mut Outputs) -> CliResult<Option<u64>> {
    let spec = SyntheticSpec {
        beta: a.beta,
        k0: a.k0,
        sigma_f: a.sigma_f,
        mu_f: a.mu_f,
        p0: a.p0,
        days: a.days,
        n_subnets: a.subnets,
        seed: a.seed,
        start: parse_date(&a.start, "--start")?,
    };
    let panel = match a.k0_max {
        Some(k0_max) => make_depth_ladder(&spec, k0_max)?,
        None => make_synthetic_panel(&spec)?,
    };
    let mut buf = Vec::new();
    write_panel_to(&panel, &mut buf)?;
    out.write("panel.csv", &buf)?;
    println!("wrote panel.csv ({} subnets x {} days)", panel.len(), a.days);
    Ok(Some(a.seed))
}
