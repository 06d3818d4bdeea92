//! Machine-readable run reports and their text rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use quasimult::numerics::ComplexMatrix;
use serde::{Deserialize, Serialize};

use crate::formats::{pretty, to_json, MatrixJson};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// A mathematical verdict was reached (positive or negative).
    Verdict,
    /// A solver stopped without a verdict.
    Inconclusive,
    /// A gallery expectation was not met.
    ExpectationMiss,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Verdict => 0,
            Outcome::Inconclusive => 2,
            Outcome::ExpectationMiss => 3,
        }
    }

    pub fn worst(self, other: Self) -> Self {
        self.max(other)
    }
}

impl PartialOrd for Outcome {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Outcome {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.exit_code().cmp(&other.exit_code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Known,
    Derived,
}

/// One gallery expectation with its computed counterpart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub label: String,
    pub expected: String,
    pub computed: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub origin: Origin,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub name: String,
    pub anchor: String,
    pub seed: u64,
    pub timing_ms: f64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub command: Vec<String>,
    pub inputs: Vec<String>,
    pub seed: u64,
    pub timing_ms: f64,
    pub outcome: Outcome,
    pub verdicts: BTreeMap<String, String>,
    pub values: BTreeMap<String, f64>,
    pub counts: BTreeMap<String, usize>,
    pub residuals: BTreeMap<String, f64>,
    pub matrices: BTreeMap<String, Vec<MatrixJson>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cases: Vec<CaseReport>,
}

impl RunReport {
    pub fn new(command: Vec<String>, seed: u64) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command,
            inputs: Vec::new(),
            seed,
            timing_ms: 0.0,
            outcome: Outcome::Verdict,
            verdicts: BTreeMap::new(),
            values: BTreeMap::new(),
            counts: BTreeMap::new(),
            residuals: BTreeMap::new(),
            matrices: BTreeMap::new(),
            notes: Vec::new(),
            cases: Vec::new(),
        }
    }

    pub fn verdict(&mut self, key: &str, value: impl Into<String>) {
        self.verdicts.insert(key.into(), value.into());
    }

    /// Non-finite values are recorded as notes since JSON has no encoding
    /// for them.
    pub fn value(&mut self, key: &str, v: f64) {
        if v.is_finite() {
            self.values.insert(key.into(), v);
        } else {
            self.notes.push(format!("{key} = {v}"));
        }
    }

    pub fn residual(&mut self, key: &str, v: f64) {
        if v.is_finite() {
            self.residuals.insert(key.into(), v);
        } else {
            self.notes.push(format!("{key} = {v}"));
        }
    }

    pub fn count(&mut self, key: &str, n: usize) {
        self.counts.insert(key.into(), n);
    }

    pub fn matrices(&mut self, key: &str, ms: &[ComplexMatrix]) {
        self.matrices.insert(key.into(), ms.iter().map(to_json).collect());
    }

    pub fn matrix(&mut self, key: &str, m: &ComplexMatrix) {
        self.matrices(key, std::slice::from_ref(m));
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn inconclusive(&mut self) {
        self.outcome = self.outcome.worst(Outcome::Inconclusive);
    }

    pub fn to_json(&self) -> String {
        pretty(self)
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}: {}", self.tool, self.version, self.command.join(" "));
        for (k, v) in &self.verdicts {
            let _ = writeln!(out, "  {k}: {v}");
        }
        for (k, v) in &self.counts {
            let _ = writeln!(out, "  {k} = {v}");
        }
        for (k, v) in &self.values {
            let _ = writeln!(out, "  {k} = {v:.10}");
        }
        for (k, v) in &self.residuals {
            let _ = writeln!(out, "  residual {k} = {v:.3e}");
        }
        for (k, ms) in &self.matrices {
            for (i, m) in ms.iter().enumerate() {
                let _ = writeln!(out, "  {k}[{i}]:");
                let _ = writeln!(out, "{}", format_matrix(m, "    "));
            }
        }
        for n in &self.notes {
            let _ = writeln!(out, "  note: {n}");
        }
        for case in &self.cases {
            let total = case.checks.len();
            let ok = case.checks.iter().filter(|c| c.passed).count();
            let _ = writeln!(out, "case {} ({}): {ok}/{total} checks pass", case.name, case.anchor);
            for c in &case.checks {
                let tol = c.tolerance.map(|t| format!(" ±{t:e}")).unwrap_or_default();
                let origin = match c.origin {
                    Origin::Known => "known",
                    Origin::Derived => "derived",
                };
                let _ = writeln!(
                    out,
                    "  {} {}: expected {}{tol}, computed {} [{origin}]",
                    if c.passed { "PASS" } else { "MISS" },
                    c.label,
                    c.expected,
                    c.computed
                );
            }
        }
        let _ = writeln!(out, "outcome: {:?} (exit {})", self.outcome, self.outcome.exit_code());
        out
    }
}

fn format_entry(e: &[f64; 2]) -> String {
    let clean = |x: f64| if x.abs() < 5e-13 { 0.0 } else { x };
    let (re, im) = (clean(e[0]), clean(e[1]));
    if im == 0.0 {
        format!("{re:>9.5}")
    } else {
        format!("{re:.4}{im:+.4}i")
    }
}

fn format_matrix(m: &MatrixJson, indent: &str) -> String {
    m.iter()
        .map(|row| format!("{indent}[{}]", row.iter().map(format_entry).collect::<Vec<_>>().join(" ")))
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use quasimult::numerics::unit;

    #[test]
    fn report_round_trips() {
        let mut r = RunReport::new(vec!["oap".into(), "--space".into(), "a,b \"x\".json".into()], 7);
        r.verdict("oap", "in_OAP");
        r.value("qm_norm", 1.224744871391589);
        r.value("bad", f64::NAN);
        r.count("dim", 3);
        r.residual("stage1", 1.5e-17);
        r.matrix("z_opt", &unit(2, 3, 1, 2));
        r.cases.push(CaseReport {
            name: "c2".into(),
            anchor: "C2".into(),
            seed: 7,
            timing_ms: 1.25,
            passed: true,
            checks: vec![Check {
                label: "dim".into(),
                expected: "2".into(),
                computed: "2".into(),
                tolerance: Some(1e-6),
                origin: Origin::Known,
                passed: true,
            }],
        });
        let back: RunReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert_eq!(r.notes, vec!["bad = NaN".to_string()]);
    }

    #[test]
    fn outcome_ordering() {
        assert_eq!(Outcome::Verdict.worst(Outcome::Inconclusive), Outcome::Inconclusive);
        assert_eq!(Outcome::ExpectationMiss.worst(Outcome::Inconclusive), Outcome::ExpectationMiss);
    }
}
