//! Verification report records shared by all suites.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Outcome of one named check. Field order is stable so JSON output is
/// reproducible for a given seed (apart from `elapsed_ms`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    pub params: BTreeMap<String, Value>,
    pub seed: u64,
    pub trials: u64,
    pub max_abs_err: f64,
    pub max_rel_err: f64,
    pub pass: bool,
    pub elapsed_ms: f64,
}

impl VerificationReport {
    pub fn new(check: impl Into<String>) -> Self {
        VerificationReport {
            check: check.into(),
            params: BTreeMap::new(),
            seed: 0,
            trials: 0,
            max_abs_err: 0.0,
            max_rel_err: 0.0,
            pass: false,
            elapsed_ms: 0.0,
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn seeded(mut self, seed: u64, trials: u64) -> Self {
        self.seed = seed;
        self.trials = trials;
        self
    }

    pub fn errors(mut self, abs: f64, rel: f64) -> Self {
        self.max_abs_err = abs;
        self.max_rel_err = rel;
        self
    }

    pub fn verdict(mut self, pass: bool) -> Self {
        self.pass = pass;
        self
    }

    pub fn timed(mut self, start: Instant) -> Self {
        self.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
        self
    }

    /// One-line human summary.
    pub fn summary(&self) -> String {
        let params: Vec<String> = self
            .params
            .iter()
            .map(|(k, v)| match v {
                Value::String(s) => format!("{k}={s}"),
                other => format!("{k}={other}"),
            })
            .collect();
        format!(
            "[{}] {:<22} {:<32} trials={:<6} abs={:.3e} rel={:.3e} ({:.1} ms)",
            if self.pass { "PASS" } else { "FAIL" },
            self.check,
            params.join(" "),
            self.trials,
            self.max_abs_err,
            self.max_rel_err,
            self.elapsed_ms
        )
    }
}

/// Running maximum of absolute and relative errors across trials.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ErrorMax {
    pub abs: f64,
    pub rel: f64,
    pub all_ok: bool,
}

impl ErrorMax {
    pub fn ok() -> Self {
        ErrorMax {
            abs: 0.0,
            rel: 0.0,
            all_ok: true,
        }
    }

    pub fn single(abs: f64, rel: f64, ok: bool) -> Self {
        ErrorMax { abs, rel, all_ok: ok }
    }

    /// Associative, commutative merge used by parallel reductions.
    pub fn merge(self, other: ErrorMax) -> ErrorMax {
        ErrorMax {
            abs: nan_max(self.abs, other.abs),
            rel: nan_max(self.rel, other.rel),
            all_ok: self.all_ok && other.all_ok,
        }
    }
}

fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_field_order_is_stable() {
        let r = VerificationReport::new("x")
            .param("n", 3)
            .param("group", "gl")
            .seeded(7, 10)
            .errors(1e-15, 2e-15)
            .verdict(true);
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.starts_with(r#"{"check":"x","params":{"group":"gl","n":3},"seed":7"#));
        let back: VerificationReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn merge_propagates_nan_and_failures() {
        let a = ErrorMax::single(1.0, 0.1, true);
        let b = ErrorMax::single(f64::NAN, 0.2, false);
        let m = a.merge(b);
        assert!(m.abs.is_nan());
        assert_eq!(m.rel, 0.2);
        assert!(!m.all_ok);
    }
}
