//! Check lists rendered as text or JSON.

use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// pass iff value ≤ tolerance
    AtMost,
    /// pass iff value ≥ tolerance
    AtLeast,
    /// boolean outcome; value is 1 or 0
    Holds,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        let pass = value <= tolerance;
        Self { name: name.into(), value, tolerance, comparison: Comparison::AtMost, pass, detail: None }
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        let pass = value >= bound;
        Self { name: name.into(), value, tolerance: bound, comparison: Comparison::AtLeast, pass, detail: None }
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        let value = if ok { 1.0 } else { 0.0 };
        Self { name: name.into(), value, tolerance: 1.0, comparison: Comparison::Holds, pass: ok, detail: None }
    }

    /// A check that could not be computed.
    pub fn error(name: impl Into<String>, err: &crate::Error) -> Self {
        Self::holds(name, false).with_detail(err.to_string())
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub command: String,
    pub seed: Option<u64>,
    /// Free-form results, kept in insertion order.
    pub results: Map<String, Value>,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(command: impl Into<String>) -> Self {
        Self { command: command.into(), ..Self::default() }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn result(&mut self, key: &str, v: impl Into<Value>) {
        self.results.insert(key.to_string(), v.into());
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_value(&self) -> Value {
        let mut m = Map::new();
        m.insert("command".into(), self.command.clone().into());
        m.insert("seed".into(), self.seed.map_or(Value::Null, Value::from));
        m.insert("passed".into(), self.passed().into());
        m.insert("results".into(), Value::Object(self.results.clone()));
        m.insert("checks".into(), serde_json::to_value(&self.checks).expect("checks serialize"));
        Value::Object(m)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_value()).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.results {
            match v {
                Value::String(x) => s.push_str(&format!("{k}: {x}\n")),
                other => s.push_str(&format!("{k}: {other}\n")),
            }
        }
        for c in &self.checks {
            let op = match c.comparison {
                Comparison::AtMost => format!("{:.3e} <= {:.1e}", c.value, c.tolerance),
                Comparison::AtLeast => format!("{:.3e} >= {:.1e}", c.value, c.tolerance),
                Comparison::Holds => String::new(),
            };
            let verdict = if c.pass { "PASS" } else { "FAIL" };
            s.push_str(&format!("{verdict} {} {op}", c.name).trim_end().to_string());
            if let Some(d) = &c.detail {
                s.push_str(&format!(" ({d})"));
            }
            s.push('\n');
        }
        if !self.checks.is_empty() {
            let failed = self.checks.iter().filter(|c| !c.pass).count();
            s.push_str(&format!("{} checks, {failed} failed\n", self.checks.len()));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_is_valid() {
        let r = Report::new("verify");
        assert!(r.passed());
        let v: Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["checks"], Value::Array(vec![]));
        assert_eq!(r.to_text(), "");
    }

    #[test]
    fn key_order_is_stable() {
        let mut r = Report::new("eval").with_seed(7);
        r.result("zeta", 1.0);
        r.result("alpha", "x");
        r.push(Check::at_most("residual", 1e-13, 1e-12));
        r.push(Check::at_least("min", -1.0, 0.0).with_detail("negative"));
        let j = r.to_json();
        let order: Vec<usize> = ["\"command\"", "\"seed\"", "\"passed\"", "\"results\"", "\"zeta\"", "\"alpha\"", "\"checks\""]
            .iter()
            .map(|k| j.find(k).unwrap())
            .collect();
        assert!(order.windows(2).all(|w| w[0] < w[1]));
        let c = j.find("\"name\"").unwrap();
        let p = j.find("\"pass\"").unwrap();
        assert!(c < p);
        assert!(!r.passed());
        assert_eq!(j, r.clone().to_json());
        assert!(r.to_text().contains("FAIL min"));
    }
}
