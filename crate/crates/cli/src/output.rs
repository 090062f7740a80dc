//! Output plumbing: format selection, CSV writing (comma-separated, header
//! row, LF, numeric-only payloads) and JSON emission with the resolved
//! parameter echo.

use serde::Serialize;
use std::io::Write;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Destination for the rendered output.
pub struct Sink {
    out: Option<PathBuf>,
}

impl Sink {
    pub fn new(out: Option<PathBuf>) -> Self {
        Sink { out }
    }

    pub fn write(&self, payload: &str) -> std::io::Result<()> {
        match &self.out {
            Some(path) => std::fs::write(path, payload),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(payload.as_bytes())
            }
        }
    }
}

/// Pretty JSON with a trailing newline; field order is struct order, so the
/// bytes are reproducible.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

/// CSV with a `# params: ...` metadata echo, a header row and LF endings.
/// Floats print in shortest round-trip form.
pub fn to_csv<P: Serialize>(params_echo: &P, header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut s = String::new();
    s.push_str("# params: ");
    s.push_str(&serde_json::to_string(params_echo).expect("serializable params"));
    s.push('\n');
    s.push_str(&header.join(","));
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

/// Parses `lo:hi:steps` into a linear grid.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("grid must be lo:hi:steps, got {spec}"));
    }
    let lo: f64 = parts[0].parse().map_err(|_| format!("bad grid lo: {}", parts[0]))?;
    let hi: f64 = parts[1].parse().map_err(|_| format!("bad grid hi: {}", parts[1]))?;
    let steps: usize = parts[2].parse().map_err(|_| format!("bad grid steps: {}", parts[2]))?;
    if !(lo > 0.0 && hi > lo && steps >= 2) {
        return Err(format!("grid needs 0 < lo < hi and steps >= 2, got {spec}"));
    }
    Ok((0..steps)
        .map(|k| lo + (hi - lo) * k as f64 / (steps - 1) as f64)
        .collect())
}

/// Parses the extension token: the literal `inf` or a decimal θ.
pub fn parse_theta(token: &str) -> Result<cev_spectral::laguerre_spec::Extension, String> {
    if token == "inf" {
        return Ok(cev_spectral::laguerre_spec::Extension::Infinity);
    }
    token
        .parse::<f64>()
        .map(cev_spectral::laguerre_spec::Extension::Theta)
        .map_err(|_| format!("theta must be `inf` or a real number, got {token}"))
}
