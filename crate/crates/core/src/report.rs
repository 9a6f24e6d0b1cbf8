//! Machine-readable outcomes of verification checks.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Error;

/// Longest counterexample list kept in a report.
pub const MAX_COUNTEREXAMPLES: usize = 20;

/// Outcome of one check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub params: BTreeMap<String, Value>,
    pub expected: Value,
    pub computed: Value,
    pub pass: bool,
    pub counterexamples: Vec<String>,
    /// Total number of counterexamples found, before truncation.
    pub counterexample_count: u64,
    pub seed: u64,
    pub elapsed_ms: u64,
    pub artifact_version: String,
    pub decision_log: Vec<String>,
    /// Set when the check aborted instead of producing a verdict.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CheckReport {
    pub fn aborted(&self) -> bool {
        self.error.is_some()
    }
}

/// Incremental construction of a [`CheckReport`].
pub struct ReportBuilder {
    report: CheckReport,
    start: Instant,
}

impl ReportBuilder {
    pub fn new(name: &str, seed: u64) -> Self {
        ReportBuilder {
            report: CheckReport {
                name: name.to_string(),
                params: BTreeMap::new(),
                expected: Value::Null,
                computed: Value::Null,
                pass: false,
                counterexamples: Vec::new(),
                counterexample_count: 0,
                seed,
                elapsed_ms: 0,
                artifact_version: env!("CARGO_PKG_VERSION").to_string(),
                decision_log: Vec::new(),
                error: None,
            },
            start: Instant::now(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.report.params.insert(key.to_string(), to_value(value));
        self
    }

    pub fn decision(&mut self, text: impl Into<String>) -> &mut Self {
        self.report.decision_log.push(text.into());
        self
    }

    pub fn counterexample(&mut self, text: impl Into<String>) -> &mut Self {
        self.report.counterexample_count += 1;
        if self.report.counterexamples.len() < MAX_COUNTEREXAMPLES {
            self.report.counterexamples.push(text.into());
        }
        self
    }

    pub fn counterexample_count(&self) -> u64 {
        self.report.counterexample_count
    }

    /// Verdict: expected equals computed and no counterexamples.
    pub fn finish(mut self, expected: impl Serialize, computed: impl Serialize) -> CheckReport {
        self.report.expected = to_value(expected);
        self.report.computed = to_value(computed);
        self.report.pass = self.report.expected == self.report.computed && self.report.counterexample_count == 0;
        self.report.elapsed_ms = self.start.elapsed().as_millis() as u64;
        self.report
    }

    /// The check could not run to completion.
    pub fn abort(mut self, err: &Error) -> CheckReport {
        self.report.error = Some(err.to_string());
        self.report.pass = false;
        self.report.elapsed_ms = self.start.elapsed().as_millis() as u64;
        self.report
    }
}

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

/// Run `body`, turning an error into an aborted report.
pub fn run_check(
    name: &str,
    seed: u64,
    body: impl FnOnce(&mut ReportBuilder) -> crate::Result<(Value, Value)>,
) -> CheckReport {
    let mut b = ReportBuilder::new(name, seed);
    match body(&mut b) {
        Ok((expected, computed)) => b.finish(expected, computed),
        Err(e) => b.abort(&e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn verdict_requires_equality_and_no_counterexamples() {
        let r = ReportBuilder::new("x", 1).finish(3, 3);
        assert!(r.pass);
        let mut b = ReportBuilder::new("x", 1);
        b.counterexample("bad");
        assert!(!b.finish(3, 3).pass);
        assert!(!ReportBuilder::new("x", 1).finish(3, 4).pass);
    }

    #[test]
    fn counterexamples_are_truncated() {
        let mut b = ReportBuilder::new("x", 0);
        for i in 0..50 {
            b.counterexample(format!("{i}"));
        }
        let r = b.finish(json!(null), json!(null));
        assert_eq!(r.counterexamples.len(), MAX_COUNTEREXAMPLES);
        assert_eq!(r.counterexample_count, 50);
    }

    #[test]
    fn abort_records_error() {
        let r = run_check("y", 0, |_| Err(Error::InfeasibleEnumeration("too big".into())));
        assert!(r.aborted() && !r.pass);
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.contains("too big"));
    }
}
