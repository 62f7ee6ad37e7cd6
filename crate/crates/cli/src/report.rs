use std::fmt::Write as _;

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// Reported quantity with no pass/fail meaning.
    Info,
}

impl Status {
    fn label(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Info => "info",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub name: String,
    pub value: f64,
    pub tolerance: Option<f64>,
    pub status: Status,
    pub note: String,
}

impl Record {
    /// Passes iff `value ≤ tolerance`.
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        let status = if value <= tolerance { Status::Pass } else { Status::Fail };
        Record {
            name: name.into(),
            value,
            tolerance: Some(tolerance),
            status,
            note: String::new(),
        }
    }

    /// Passes iff `value ≥ −tolerance`.
    pub fn at_least_minus(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        let status = if value >= -tolerance { Status::Pass } else { Status::Fail };
        Record {
            name: name.into(),
            value,
            tolerance: Some(tolerance),
            status,
            note: String::new(),
        }
    }

    pub fn flag(name: impl Into<String>, ok: bool, note: impl Into<String>) -> Self {
        Record {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            tolerance: None,
            status: if ok { Status::Pass } else { Status::Fail },
            note: note.into(),
        }
    }

    pub fn info(name: impl Into<String>, value: f64) -> Self {
        Record {
            name: name.into(),
            value,
            tolerance: None,
            status: Status::Info,
            note: String::new(),
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = Some(tolerance);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub stage: String,
    pub millis: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub scenario_digest: String,
    pub seed: Option<u64>,
    pub records: Vec<Record>,
    pub timings: Vec<Timing>,
}

#[derive(Serialize)]
struct Structured<'a> {
    #[serde(flatten)]
    report: &'a Report,
    passed: bool,
    digest: String,
}

fn fmt_value(x: f64) -> String {
    format!("{x:.6e}")
}

impl Report {
    pub fn new(command: &str, scenario_digest: String, seed: Option<u64>) -> Self {
        Report {
            command: command.to_string(),
            scenario_digest,
            seed,
            records: Vec::new(),
            timings: Vec::new(),
        }
    }

    pub fn push(&mut self, r: Record) {
        self.records.push(r);
    }

    pub fn time(&mut self, stage: &str, millis: f64) {
        self.timings.push(Timing {
            stage: stage.to_string(),
            millis,
        });
    }

    pub fn passed(&self) -> bool {
        self.records.iter().all(|r| r.status != Status::Fail)
    }

    /// Deterministic part of the report: header, record table and verdict.
    pub fn body(&self) -> String {
        let mut out = String::new();
        writeln!(out, "command   {}", self.command).unwrap();
        writeln!(out, "scenario  sha256:{}", self.scenario_digest).unwrap();
        match self.seed {
            Some(s) => writeln!(out, "seed      {s}").unwrap(),
            None => writeln!(out, "seed      none").unwrap(),
        }
        let width = self.records.iter().map(|r| r.name.chars().count()).max().unwrap_or(4).max(5);
        writeln!(out).unwrap();
        writeln!(out, "{:<width$}  {:>14}  {:>14}  status  note", "check", "value", "tolerance").unwrap();
        for r in &self.records {
            let tol = r.tolerance.map(fmt_value).unwrap_or_else(|| "-".into());
            let pad = width - r.name.chars().count();
            let line = format!(
                "{}{}  {:>14}  {:>14}  {:<6}  {}",
                r.name,
                " ".repeat(pad),
                fmt_value(r.value),
                tol,
                r.status.label(),
                r.note
            );
            writeln!(out, "{}", line.trim_end()).unwrap();
        }
        writeln!(out).unwrap();
        writeln!(out, "result    {}", if self.passed() { "pass" } else { "fail" }).unwrap();
        out
    }

    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.body().as_bytes()))
    }

    /// Body, digest line, then timings.
    pub fn render(&self) -> String {
        let mut out = self.body();
        writeln!(out, "digest    sha256:{}", self.digest()).unwrap();
        for t in &self.timings {
            writeln!(out, "timing    {} {:.3} ms", t.stage, t.millis).unwrap();
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&Structured {
            report: self,
            passed: self.passed(),
            digest: self.digest(),
        })
        .expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_follows_records() {
        let mut r = Report::new("check-axioms", "ab".into(), Some(3));
        r.push(Record::at_most("hermiticity", 0.0, 1e-12));
        r.push(Record::info("dim", 3.0));
        assert!(r.passed());
        r.push(Record::at_least_minus("positivity", -1e-3, 1e-10));
        assert!(!r.passed());
        assert!(r.body().contains("result    fail"));
    }

    #[test]
    fn timings_stay_out_of_the_digest() {
        let mut r = Report::new("gns", "cd".into(), None);
        r.push(Record::info("dim", 1.0));
        let d = r.digest();
        r.time("total", 12.5);
        assert_eq!(r.digest(), d);
        assert!(r.render().ends_with("timing    total 12.500 ms\n"));
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["digest"], d);
        assert_eq!(v["records"][0]["status"], "info");
    }
}
