use std::collections::BTreeMap;

use num_complex::Complex64;
use serde_json::{Map, Number, Value};

/// Float with 17 significant digits; non-finite values become null.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let text = format!("{x:.16e}");
    Value::Number(text.parse::<Number>().expect("formatted float is valid JSON"))
}

pub fn complex(z: Complex64) -> Value {
    let mut m = Map::new();
    m.insert("re".into(), num(z.re));
    m.insert("im".into(), num(z.im));
    Value::Object(m)
}

/// A computed value with its absolute error estimate, or "exact".
pub fn estimate(value: Value, error: Option<f64>) -> Value {
    let mut m = Map::new();
    m.insert("value".into(), value);
    m.insert("error_estimate".into(), error.map(num).unwrap_or_else(|| Value::String("exact".into())));
    Value::Object(m)
}

/// Comparison of a computed value against a reference value.
pub fn check(value: f64, error: f64, reference: f64, source: &str, tolerance: f64, relative: bool) -> (Value, bool) {
    let dev = (value - reference).abs() / if relative { reference.abs() } else { 1.0 };
    let pass = dev <= tolerance;
    let mut m = Map::new();
    m.insert("value".into(), num(value));
    m.insert("error_estimate".into(), num(error));
    m.insert("reference".into(), num(reference));
    m.insert("source".into(), Value::String(source.into()));
    m.insert(if relative { "relative_deviation" } else { "absolute_deviation" }.into(), num(dev));
    m.insert("tolerance".into(), num(tolerance));
    m.insert("pass".into(), Value::Bool(pass));
    (Value::Object(m), pass)
}

/// One JSON object per invocation.
#[derive(Debug)]
pub struct Report {
    command: &'static str,
    params: BTreeMap<String, Value>,
    fields: Map<String, Value>,
    failed_checks: Vec<String>,
}

impl Report {
    pub fn new(command: &'static str) -> Self {
        Report { command, params: BTreeMap::new(), fields: Map::new(), failed_checks: Vec::new() }
    }

    pub fn param(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.params.insert(key.into(), value.into());
        self
    }

    pub fn set(&mut self, key: &str, value: Value) -> &mut Self {
        self.fields.insert(key.into(), value);
        self
    }

    pub fn record_check(&mut self, key: &str, (value, pass): (Value, bool)) -> &mut Self {
        if !pass {
            self.failed_checks.push(key.into());
        }
        self.set(key, value)
    }

    pub fn failed_checks(&self) -> &[String] {
        &self.failed_checks
    }

    pub fn into_json(self) -> Value {
        let mut m = Map::new();
        m.insert("command".into(), Value::String(self.command.into()));
        m.insert("params".into(), Value::Object(self.params.into_iter().collect()));
        for (k, v) in self.fields {
            m.insert(k, v);
        }
        if !self.failed_checks.is_empty() {
            m.insert("failed_checks".into(), self.failed_checks.into_iter().map(Value::String).collect());
        }
        Value::Object(m)
    }
}
