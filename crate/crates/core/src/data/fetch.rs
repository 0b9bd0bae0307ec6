//! Blocking HTTP fetcher for daily pool histories.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use chrono::{DateTime, NaiveDate};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::{panel_from_rows, Panel, SnapshotRow};
use crate::error::{Error, Result};

/// Environment variable holding the API key.
pub const API_KEY_ENV: &str = "TAOSTATS_API_KEY";

const MAX_CONCURRENT: usize = 4;

/// Where each snapshot field lives in the JSON response. Paths are
/// dot-separated; an empty `records` path means the body is the array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMap {
    pub records: String,
    pub date: String,
    pub tao_reserve: String,
    pub alpha_reserve: String,
    /// Multiplier applied to both reserves (e.g. `1e-9` for rao amounts).
    pub reserve_scale: f64,
    pub subnet_param: String,
    pub start_param: String,
    pub end_param: String,
}

impl Default for FieldMap {
    fn default() -> Self {
        Self {
            records: "data".into(),
            date: "timestamp".into(),
            tao_reserve: "total_tao".into(),
            alpha_reserve: "alpha_in_pool".into(),
            reserve_scale: 1e-9,
            subnet_param: "netuid".into(),
            start_param: "date_start".into(),
            end_param: "date_end".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FetchConfig {
    pub endpoint: String,
    pub api_key: String,
    pub fields: FieldMap,
    pub cache_dir: Option<PathBuf>,
    pub max_retries: u32,
    /// First backoff delay; doubled after every rate-limited attempt.
    pub base_backoff: Duration,
    pub timeout: Duration,
}

impl FetchConfig {
    pub fn new(endpoint: impl Into<String>, api_key: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            api_key: api_key.into(),
            fields: FieldMap::default(),
            cache_dir: None,
            max_retries: 5,
            base_backoff: Duration::from_millis(500),
            timeout: Duration::from_secs(60),
        }
    }

    /// Reads the API key from [`API_KEY_ENV`].
    pub fn from_env(endpoint: impl Into<String>) -> Result<Self> {
        let key = std::env::var(API_KEY_ENV).map_err(|_| Error::Auth(format!("{API_KEY_ENV} is not set")))?;
        Ok(Self::new(endpoint, key))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FetchOutcome {
    pub panel: Panel,
    /// HTTP requests actually sent, including retries.
    pub requests: usize,
    /// Retries caused by rate limiting.
    pub retries: usize,
    pub cache_hits: usize,
}

/// Fetches daily snapshots for `subnet_ids` over `[start, end]`.
///
/// At most four requests run at once. Responses are cached on disk when a
/// cache directory is configured, so a repeated fetch of the same range is
/// served offline and yields the same panel.
pub fn fetch_history(cfg: &FetchConfig, subnet_ids: &[u32], start: NaiveDate, end: NaiveDate) -> Result<FetchOutcome> {
    if subnet_ids.is_empty() {
        return Ok(FetchOutcome { panel: Panel::new(), requests: 0, retries: 0, cache_hits: 0 });
    }
    if end < start {
        return Err(Error::domain(format!("date range is empty ({start} to {end})")));
    }
    let client = reqwest::blocking::Client::builder()
        .timeout(cfg.timeout)
        .build()
        .map_err(|e| Error::Http(e.to_string()))?;
    let next = AtomicUsize::new(0);
    let requests = AtomicUsize::new(0);
    let retries = AtomicUsize::new(0);
    let hits = AtomicUsize::new(0);
    let results: Mutex<BTreeMap<usize, Result<Vec<SnapshotRow>>>> = Mutex::new(BTreeMap::new());

    std::thread::scope(|scope| {
        for _ in 0..MAX_CONCURRENT.min(subnet_ids.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(&id) = subnet_ids.get(i) else { break };
                let body = fetch_body(&client, cfg, id, start, end, &requests, &retries, &hits);
                let rows = body.and_then(|b| parse_body(&b, id, &cfg.fields));
                results.lock().expect("result lock").insert(i, rows);
            });
        }
    });

    let mut rows = Vec::new();
    for (_, r) in results.into_inner().expect("result lock") {
        rows.extend(r?.into_iter().filter(|row| row.date >= start && row.date <= end));
    }
    let retries = retries.into_inner();
    if retries > 0 {
        log::info!("fetch completed after {retries} rate-limit retries");
    }
    Ok(FetchOutcome {
        panel: panel_from_rows(rows)?,
        requests: requests.into_inner(),
        retries,
        cache_hits: hits.into_inner(),
    })
}

fn cache_key(cfg: &FetchConfig, id: u32, start: NaiveDate, end: NaiveDate) -> String {
    let mut h = Sha256::new();
    h.update(format!("{}\n{id}\n{start}\n{end}", cfg.endpoint).as_bytes());
    hex::encode(h.finalize())
}

#[allow(clippy::too_many_arguments)]
fn fetch_body(
    client: &reqwest::blocking::Client,
    cfg: &FetchConfig,
    id: u32,
    start: NaiveDate,
    end: NaiveDate,
    requests: &AtomicUsize,
    retries: &AtomicUsize,
    hits: &AtomicUsize,
) -> Result<String> {
    let cache_path = cfg.cache_dir.as_ref().map(|d| d.join(format!("{}.json", cache_key(cfg, id, start, end))));
    if let Some(p) = cache_path.as_ref().filter(|p| p.exists()) {
        hits.fetch_add(1, Ordering::SeqCst);
        return Ok(std::fs::read_to_string(p)?);
    }
    let f = &cfg.fields;
    let query = [
        (f.subnet_param.as_str(), id.to_string()),
        (f.start_param.as_str(), start.to_string()),
        (f.end_param.as_str(), end.to_string()),
    ];
    let mut delay = cfg.base_backoff;
    let mut attempt = 0;
    loop {
        requests.fetch_add(1, Ordering::SeqCst);
        let resp = client
            .get(&cfg.endpoint)
            .query(&query)
            .header("Authorization", &cfg.api_key)
            .header("Accept", "application/json")
            .send()
            .map_err(|e| Error::Http(e.to_string()))?;
        let status = resp.status();
        if status.as_u16() == 429 {
            if attempt >= cfg.max_retries {
                return Err(Error::Http(format!("subnet {id}: still rate limited after {attempt} retries")));
            }
            attempt += 1;
            retries.fetch_add(1, Ordering::SeqCst);
            log::warn!("subnet {id}: rate limited, retry {attempt} in {delay:?}");
            std::thread::sleep(delay);
            delay *= 2;
            continue;
        }
        if status.as_u16() == 401 || status.as_u16() == 403 {
            return Err(Error::Auth(format!("server answered {status}")));
        }
        if !status.is_success() {
            return Err(Error::Http(format!("subnet {id}: server answered {status}")));
        }
        let body = resp.text().map_err(|e| Error::Http(e.to_string()))?;
        if let Some(p) = &cache_path {
            if let Some(dir) = p.parent() {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, &body)?;
        }
        return Ok(body);
    }
}

fn lookup<'a>(v: &'a Value, path: &str) -> Option<&'a Value> {
    if path.is_empty() {
        return Some(v);
    }
    path.split('.').try_fold(v, |cur, key| cur.get(key))
}

fn as_number(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

fn as_date(v: &Value) -> Option<NaiveDate> {
    match v {
        Value::String(s) => s.get(..10).and_then(|d| NaiveDate::parse_from_str(d, "%Y-%m-%d").ok()),
        Value::Number(n) => {
            let t = n.as_f64()?;
            // Millisecond timestamps are larger than any plausible seconds value.
            let secs = if t > 1e11 { t / 1000.0 } else { t };
            DateTime::from_timestamp(secs as i64, 0).map(|d| d.date_naive())
        }
        _ => None,
    }
}

/// Maps a response body to rows. When several records fall on one day the
/// last one in response order is kept.
fn parse_body(body: &str, id: u32, f: &FieldMap) -> Result<Vec<SnapshotRow>> {
    let json: Value = serde_json::from_str(body)?;
    let records = lookup(&json, &f.records)
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Schema(if f.records.is_empty() { "<array>".into() } else { f.records.clone() }))?;
    let mut by_day = BTreeMap::new();
    for rec in records {
        let field = |name: &String| lookup(rec, name).ok_or_else(|| Error::Schema(name.clone()));
        let date = as_date(field(&f.date)?).ok_or_else(|| Error::Schema(format!("{} (unparseable date)", f.date)))?;
        let num = |name: &String| {
            field(name).and_then(|v| as_number(v).ok_or_else(|| Error::Schema(format!("{name} (not a number)"))))
        };
        let tao_reserve = num(&f.tao_reserve)? * f.reserve_scale;
        let alpha_reserve = num(&f.alpha_reserve)? * f.reserve_scale;
        by_day.insert(date, SnapshotRow { subnet_id: id, date, tao_reserve, alpha_reserve, price: None });
    }
    Ok(by_day.into_values().collect())
}
