use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use ammcev::data::{fetch_history, read_panel_from, write_panel_to, FetchConfig, Panel};
use ammcev::econometrics::DailySeries;
use ammcev::Error;
use chrono::{Days, NaiveDate};
use proptest::prelude::*;

fn panel_strategy() -> impl Strategy<Value = Panel> {
    prop::collection::btree_map(
        1u32..200,
        (0u64..400, prop::collection::vec((1e-3f64..1e7, 1e-3f64..1e9), 1..20)),
        1..6,
    )
    .prop_map(|m| {
        m.into_iter()
            .map(|(id, (offset, reserves))| {
                let d0 = NaiveDate::from_ymd_opt(2024, 1, 1).unwrap() + Days::new(offset);
                let dates = (0..reserves.len()).map(|i| d0 + Days::new(i as u64)).collect();
                let x: Vec<f64> = reserves.iter().map(|r| r.0).collect();
                let y: Vec<f64> = reserves.iter().map(|r| r.1).collect();
                (id, DailySeries::from_reserves(dates, x, y).unwrap())
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn read_write_round_trip(panel in panel_strategy()) {
        let mut first = Vec::new();
        write_panel_to(&panel, &mut first).unwrap();
        let back = read_panel_from(first.as_slice()).unwrap();
        prop_assert_eq!(&back, &panel);
        let mut second = Vec::new();
        write_panel_to(&back, &mut second).unwrap();
        prop_assert_eq!(first, second);
    }
}

#[test]
fn unsorted_input_is_written_canonically() {
    let text = "subnet_id,date,tao_reserve,alpha_reserve,price\n\
        9,2025-01-02,10,100,0.1\n\
        2,2025-01-01,5,50,\n\
        9,2025-01-01,10,100,0.1\n";
    let panel = read_panel_from(text.as_bytes()).unwrap();
    let mut out = Vec::new();
    write_panel_to(&panel, &mut out).unwrap();
    assert_eq!(
        String::from_utf8(out).unwrap(),
        "subnet_id,date,tao_reserve,alpha_reserve,price\n\
         2,2025-01-01,5,50,0.1\n\
         9,2025-01-01,10,100,0.1\n\
         9,2025-01-02,10,100,0.1\n"
    );
}

/// Serves `responses` in order, one per connection, and records request lines.
fn mock_server(responses: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<String>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/history", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = Arc::clone(&seen);
    std::thread::spawn(move || {
        for (status, body) in responses {
            let (mut stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut head = Vec::new();
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap() == 0 || line == "\r\n" {
                    break;
                }
                head.push(line.trim_end().to_string());
            }
            log.lock().unwrap().push(head.join("\n"));
            let reason = if status == 200 { "OK" } else { "Too Many Requests" };
            write!(
                stream,
                "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
    });
    (url, seen)
}

const THREE_DAYS: &str = r#"{"data":[
    {"timestamp":"2025-02-01T00:00:00Z","total_tao":"1000000000000","alpha_in_pool":"40000000000000"},
    {"timestamp":"2025-02-02T00:00:00Z","total_tao":"1100000000000","alpha_in_pool":"36363636363636"},
    {"timestamp":"2025-02-02T12:00:00Z","total_tao":"1200000000000","alpha_in_pool":"33333333333333"},
    {"timestamp":"2025-02-03T00:00:00Z","total_tao":"1250000000000","alpha_in_pool":"32000000000000"}
]}"#;

fn day(d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(2025, 2, d).unwrap()
}

#[test]
fn fetches_one_subnet_over_three_days() {
    let (url, seen) = mock_server(vec![(200, THREE_DAYS.to_string())]);
    let cfg = FetchConfig::new(url, "secret-key");
    let out = fetch_history(&cfg, &[21], day(1), day(3)).unwrap();
    let s = &out.panel[&21];
    assert_eq!(s.dates, vec![day(1), day(2), day(3)]);
    assert_eq!(s.tao_reserve[1], 1200.0);
    assert!((s.price[0] - 0.025).abs() < 1e-15);
    let request = &seen.lock().unwrap()[0];
    assert!(request.contains("netuid=21") && request.contains("date_start=2025-02-01"));
    assert!(request.to_ascii_lowercase().contains("authorization: secret-key"));
}

#[test]
fn rate_limits_are_retried_with_backoff() {
    let limited = (429, "{}".to_string());
    let (url, _) = mock_server(vec![limited.clone(), limited, (200, THREE_DAYS.to_string())]);
    let mut cfg = FetchConfig::new(url, "k");
    cfg.base_backoff = Duration::from_millis(20);
    let started = std::time::Instant::now();
    let out = fetch_history(&cfg, &[21], day(1), day(3)).unwrap();
    assert_eq!((out.requests, out.retries), (3, 2));
    assert!(started.elapsed() >= Duration::from_millis(60));
    assert_eq!(out.panel[&21].len(), 3);
}

#[test]
fn exhausted_retries_are_an_http_error() {
    let (url, _) = mock_server(vec![(429, "{}".to_string()); 2]);
    let mut cfg = FetchConfig::new(url, "k");
    cfg.base_backoff = Duration::from_millis(1);
    cfg.max_retries = 1;
    assert!(matches!(fetch_history(&cfg, &[1], day(1), day(3)), Err(Error::Http(_))));
}

#[test]
fn cached_responses_are_served_offline() {
    let cache = tempfile::tempdir().unwrap();
    let (url, _) = mock_server(vec![(200, THREE_DAYS.to_string())]);
    let mut cfg = FetchConfig::new(url, "k");
    cfg.cache_dir = Some(cache.path().to_path_buf());
    let first = fetch_history(&cfg, &[21], day(1), day(3)).unwrap();
    // The server has shut down; only the cache can answer now.
    let second = fetch_history(&cfg, &[21], day(1), day(3)).unwrap();
    assert_eq!(first.panel, second.panel);
    assert_eq!((second.requests, second.cache_hits), (0, 1));
}
