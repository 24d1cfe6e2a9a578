//! Report envelope and JSON number handling.
//!
//! JSON has no infinity literal, so non-finite floats are written as the
//! strings `"inf"`, `"-inf"` and `"nan"` and accepted back in the same form.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Deserializer, Serializer};
use serde_json::{json, Map, Value};

use crate::error::CliError;

pub const SCHEMA_VERSION: &str = "uot-report/1";

pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

/// A number, or one of the strings written by [`num`].
pub fn parse_num(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => match s.as_str() {
            "inf" | "+inf" | "Infinity" => Some(f64::INFINITY),
            "-inf" | "-Infinity" => Some(f64::NEG_INFINITY),
            "nan" | "NaN" => Some(f64::NAN),
            _ => None,
        },
        _ => None,
    }
}

/// `serde(with)` adapter for config floats that may be infinite.
pub mod float {
    use super::*;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            match num(*x) {
                Value::String(t) => s.serialize_str(&t),
                _ => unreachable!(),
            }
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let v = Value::deserialize(d)?;
        parse_num(&v).ok_or_else(|| serde::de::Error::custom(format!("expected a number or \"inf\", got {v}")))
    }
}

pub struct Envelope<'a> {
    pub command: &'a str,
    pub config: Value,
    pub timestamp: bool,
}

impl Envelope<'_> {
    fn base(&self) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("schema".into(), json!(SCHEMA_VERSION));
        m.insert("command".into(), json!(self.command));
        m.insert("config".into(), self.config.clone());
        if self.timestamp {
            let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            m.insert("created_unix".into(), json!(secs));
        }
        m
    }

    pub fn success(&self, result: Value) -> Value {
        let mut m = self.base();
        m.insert("status".into(), json!("ok"));
        m.insert("result".into(), result);
        Value::Object(m)
    }

    pub fn failure(&self, err: &CliError) -> Value {
        let mut m = self.base();
        m.insert("status".into(), json!("error"));
        m.insert("error".into(), err.to_json());
        Value::Object(m)
    }
}

/// Pretty JSON to `out`, or to stdout.
pub fn emit(report: &Value, out: Option<&Path>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(report).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
