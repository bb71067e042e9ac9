//! Provenance header and record emission.

use std::io::Write;

use rgfp::quadrature::round_sig;
use serde_json::Value;

use crate::config::RunConfig;
use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn header(config: &RunConfig, profile_id: &str, command: &str) -> String {
    format!("# rgfp {VERSION} command={command} config={} profile={profile_id}\n", config.hash())
}

/// Reals rounded to `digits` significant digits, recursively.
pub fn round_json(v: Value, digits: usize) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().expect("f64 number"), digits) + 0.0;
            serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(|x| round_json(x, digits)).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, x)| (k, round_json(x, digits))).collect()),
        other => other,
    }
}

pub fn sci(x: f64, digits: usize) -> String {
    format!("{:.*e}", digits.saturating_sub(1), x)
}

/// Output of one command: CSV columns with rows, or JSON records.
pub enum Table {
    Csv { columns: Vec<String>, rows: Vec<Vec<String>> },
    Json(Vec<Value>),
}

impl Table {
    pub fn csv(columns: &[&str]) -> Self {
        Self::Csv { columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push_row(&mut self, row: Vec<String>) {
        if let Self::Csv { rows, .. } = self {
            rows.push(row);
        }
    }

    /// CSV for `Format::Csv` tables; JSON records are written as one array
    /// or, with `stream`, one record per line.
    pub fn render(&self, config: &RunConfig, stream: bool) -> String {
        let digits = config.precision();
        match self {
            Self::Csv { columns, rows } => {
                let mut s = columns.join(",");
                s.push('\n');
                for r in rows {
                    s.push_str(&r.join(","));
                    s.push('\n');
                }
                s
            }
            Self::Json(records) => {
                let rounded: Vec<Value> = records.iter().map(|r| round_json(r.clone(), digits)).collect();
                if stream {
                    rounded.iter().map(|r| format!("{r}\n")).collect()
                } else if rounded.len() == 1 {
                    format!("{}\n", rounded[0])
                } else {
                    format!("{}\n", Value::Array(rounded))
                }
            }
        }
    }
}

pub fn emit(config: &RunConfig, head: &str, body: &str) -> Result<(), CliError> {
    match &config.path {
        Some(p) => std::fs::write(p, format!("{head}{body}"))?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(head.as_bytes())?;
            out.write_all(body.as_bytes())?;
        }
    }
    Ok(())
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_is_recursive() {
        let v = serde_json::json!({"a": 1.23456789, "b": [2.0004, {"c": 3}], "d": "x"});
        assert_eq!(round_json(v, 3), serde_json::json!({"a": 1.23, "b": [2.0, {"c": 3}], "d": "x"}));
    }

    #[test]
    fn header_has_provenance() {
        let h = header(&RunConfig::default(), "gevrey-s2", "exponents");
        assert!(h.starts_with("# rgfp "));
        assert!(h.contains(&format!("config={}", RunConfig::default().hash())));
        assert!(h.ends_with("profile=gevrey-s2\n"));
    }

    #[test]
    fn stream_mode_is_line_per_record() {
        let t = Table::Json(vec![serde_json::json!({"x": 1}), serde_json::json!({"x": 2})]);
        let c = RunConfig::default();
        assert_eq!(t.render(&c, true), "{\"x\":1}\n{\"x\":2}\n");
        assert_eq!(t.render(&c, false), "[{\"x\":1},{\"x\":2}]\n");
    }
}
