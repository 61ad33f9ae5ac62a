//! Machine-readable reports: a pass/fail ledger plus named data sections,
//! rendered as a human table or as versioned JSON (`"schema": 1`).
//! Rationals are serialized as "num/den" strings; all maps iterate in sorted
//! order, so identical inputs produce byte-identical JSON.

use crate::matrix::{Mat, Q};
use serde_json::{json, Map, Value};
use std::collections::BTreeMap;

#[derive(Clone, Debug)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub model: String,
    pub command: String,
    pub sections: Vec<(String, Value)>,
    pub checks: Vec<CheckLine>,
}

impl Report {
    pub fn new(model: &str, command: &str) -> Self {
        Report {
            model: model.to_string(),
            command: command.to_string(),
            sections: Vec::new(),
            checks: Vec::new(),
        }
    }

    pub fn add(&mut self, key: &str, value: Value) {
        self.sections.push((key.to_string(), value));
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(CheckLine { name: name.to_string(), passed, detail: detail.into() });
    }

    /// Record a Result as a ledger line: Ok => pass, Err => fail with the
    /// error message as the located witness.
    pub fn check_result<T, E: std::fmt::Display>(
        &mut self,
        name: &str,
        r: &Result<T, E>,
    ) -> bool {
        match r {
            Ok(_) => {
                self.check(name, true, "ok");
                true
            }
            Err(e) => {
                self.check(name, false, e.to_string());
                false
            }
        }
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> Value {
        let mut data = Map::new();
        for (k, v) in &self.sections {
            data.insert(k.clone(), v.clone());
        }
        json!({
            "schema": 1,
            "model": self.model,
            "command": self.command,
            "data": Value::Object(data),
            "checks": self.checks.iter().map(|c| json!({
                "name": c.name,
                "passed": c.passed,
                "detail": c.detail,
            })).collect::<Vec<_>>(),
            "passed": self.all_passed(),
        })
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("model: {}   command: {}\n", self.model, self.command));
        for (k, v) in &self.sections {
            out.push_str(&format!("  {k}: {v}\n"));
        }
        for c in &self.checks {
            let mark = if c.passed { "PASS" } else { "FAIL" };
            if c.detail == "ok" || c.detail.is_empty() {
                out.push_str(&format!("  [{mark}] {}\n", c.name));
            } else {
                out.push_str(&format!("  [{mark}] {}: {}\n", c.name, c.detail));
            }
        }
        out.push_str(&format!(
            "result: {}\n",
            if self.all_passed() { "all checks passed" } else { "FAILED" }
        ));
        out
    }
}

pub fn q_str(q: &Q) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

pub fn vec_json(v: &[Q]) -> Value {
    Value::Array(v.iter().map(|c| Value::String(q_str(c))).collect())
}

pub fn mat_json(m: &Mat) -> Value {
    let rows: Vec<Value> = (0..m.rows)
        .map(|i| Value::Array((0..m.cols).map(|j| Value::String(q_str(&m[(i, j)]))).collect()))
        .collect();
    Value::Array(rows)
}

/// Degree-indexed dimension table as a sorted object {"deg": dim}.
pub fn dims_json(dims: &BTreeMap<i64, usize>) -> Value {
    let mut m = Map::new();
    for (&d, &n) in dims {
        m.insert(d.to_string(), json!(n));
    }
    Value::Object(m)
}

/// Bidegree-indexed table as a sorted object {"(a,b)": dim}.
pub fn bidims_json(dims: &BTreeMap<(i64, i64), usize>) -> Value {
    let mut m = Map::new();
    for (&(a, b), &n) in dims {
        m.insert(format!("({a},{b})"), json!(n));
    }
    Value::Object(m)
}
