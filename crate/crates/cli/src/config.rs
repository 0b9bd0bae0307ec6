//! `key=value` config files merged into the argument list.
//!
//! Each entry becomes `--key=value` placed directly after the subcommand, so
//! any flag given on the command line (which comes later) overrides it.
//! `key=true` becomes a bare `--key`; `key=false` is dropped.

use std::ffi::OsString;
use std::path::Path;

const SUBCOMMANDS: [&str; 10] = [
    "price",
    "greeks",
    "smile",
    "simulate",
    "mc-validate",
    "emissions-curve",
    "backtest",
    "elasticity",
    "fetch",
    "fixtures",
];

pub fn parse_config(text: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key=value", i + 1))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || key == "config" {
            return Err(format!("config line {}: invalid key `{key}`", i + 1));
        }
        match value {
            "true" => out.push(format!("--{key}")),
            "false" => {}
            v => out.push(format!("--{key}={v}")),
        }
    }
    Ok(out)
}

fn config_path(argv: &[OsString]) -> Option<OsString> {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

/// Inserts config-file arguments after the subcommand name.
pub fn expand(argv: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| format!("cannot read config {}: {e}", path.to_string_lossy()))?;
    let extra = parse_config(&text)?;
    let Some(pos) = argv.iter().position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref())) else {
        return Ok(argv);
    };
    let mut out = argv[..=pos].to_vec();
    out.extend(extra.into_iter().map(OsString::from));
    out.extend_from_slice(&argv[pos + 1..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_and_booleans() {
        let args = parse_config("# defaults\nspot = 0.03\nput=true\nno-filter=false\n\n").unwrap();
        assert_eq!(args, vec!["--spot=0.03", "--put"]);
        assert!(parse_config("spot 0.03").is_err());
    }

    #[test]
    fn inserts_after_subcommand() {
        let dir = std::env::temp_dir().join(format!("ammcev-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.cfg");
        std::fs::write(&path, "days=30\n").unwrap();
        let argv: Vec<OsString> =
            ["ammcev", "--config", path.to_str().unwrap(), "price", "--days", "60"].iter().map(OsString::from).collect();
        let out = expand(argv).unwrap();
        let pos = out.iter().position(|a| a == "price").unwrap();
        assert_eq!(out[pos + 1], "--days=30");
        assert_eq!(out.last().unwrap(), "60");
    }
}
