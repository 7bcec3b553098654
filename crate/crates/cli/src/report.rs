//! Reports and their json / csv / text renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::RunError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Residual {
    pub fn new(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Residual { name: name.into(), value, threshold, pass: value.is_finite() && value <= threshold }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub kind: String,
    /// The experiment as read from the config.
    pub config: Value,
    pub seed: u64,
    pub residuals: Vec<Residual>,
    /// Unthresholded quantities such as span dimensions.
    pub metrics: BTreeMap<String, f64>,
    pub pass: bool,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub seed: u64,
    pub max_dim: usize,
    pub pass: bool,
    pub experiments: Vec<ExperimentReport>,
    pub wall_time_s: f64,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }

    /// The report with every wall-time field zeroed.
    pub fn without_timing(&self) -> RunReport {
        let mut r = self.clone();
        r.wall_time_s = 0.0;
        for e in &mut r.experiments {
            e.wall_time_s = 0.0;
        }
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
    Text,
}

pub const CSV_HEADER: [&str; 5] = ["experiment", "residual_name", "value", "threshold", "pass"];

pub fn to_json(r: &RunReport) -> String {
    let mut s = serde_json::to_string_pretty(r).expect("report serializes");
    s.push('\n');
    s
}

pub fn to_csv(r: &RunReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for e in &r.experiments {
        for x in &e.residuals {
            w.write_record([
                e.name.as_str(),
                x.name.as_str(),
                &x.value.to_string(),
                &x.threshold.to_string(),
                if x.pass { "true" } else { "false" },
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

pub fn to_text(r: &RunReport) -> String {
    let mut s = String::new();
    let verdict = |p: bool| if p { "PASS" } else { "FAIL" };
    let _ = writeln!(s, "nclab {}  seed {}  max-dim {}", r.version, r.seed, r.max_dim);
    for e in &r.experiments {
        let _ = writeln!(s, "[{}] {} ({})  {:.3}s", verdict(e.pass), e.name, e.kind, e.wall_time_s);
        let width = e.residuals.iter().map(|x| x.name.len()).chain(e.metrics.keys().map(|k| k.len())).max().unwrap_or(0);
        for x in &e.residuals {
            let _ = writeln!(
                s,
                "    {:width$}  {:>10.3e}  <= {:<8.1e} {}",
                x.name,
                x.value,
                x.threshold,
                if x.pass { "ok" } else { "VIOLATED" }
            );
        }
        for (k, v) in &e.metrics {
            let _ = writeln!(s, "    {k:width$}  {v}");
        }
    }
    let failed = r.experiments.iter().filter(|e| !e.pass).count();
    let _ = writeln!(s, "{} of {} experiments passed", r.experiments.len() - failed, r.experiments.len());
    s
}

pub fn render(r: &RunReport, format: Format) -> String {
    match format {
        Format::Json => to_json(r),
        Format::Csv => to_csv(r),
        Format::Text => to_text(r),
    }
}

pub fn emit_report(r: &RunReport, format: Format, out: &mut dyn Write) -> Result<(), RunError> {
    out.write_all(render(r, format).as_bytes()).and_then(|_| out.flush()).map_err(|e| RunError::Output(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize) -> RunReport {
        let residuals = (0..n).map(|i| Residual::new(format!("r{i}"), 1e-12 * i as f64, 1e-10)).collect();
        RunReport {
            version: "0.1.0".into(),
            seed: 7,
            max_dim: 128,
            pass: true,
            experiments: vec![ExperimentReport {
                name: "e".into(),
                kind: "torus".into(),
                config: serde_json::json!({"kind": "torus"}),
                seed: 7,
                residuals,
                metrics: BTreeMap::from([("dim".to_string(), 3.0)]),
                pass: true,
                wall_time_s: 0.25,
            }],
            wall_time_s: 0.5,
        }
    }

    #[test]
    fn json_round_trips() {
        let r = sample(3);
        let back: RunReport = serde_json::from_str(&to_json(&r)).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn csv_rows() {
        assert_eq!(to_csv(&sample(3)).lines().count(), 4);
        assert_eq!(to_csv(&sample(0)), "experiment,residual_name,value,threshold,pass\n");
    }

    #[test]
    fn non_finite_fails() {
        assert!(!Residual::new("x", f64::NAN, 1.0).pass);
        assert!(Residual::new("x", 0.0, 0.0).pass);
    }

    #[test]
    fn text_mentions_violations() {
        let mut r = sample(1);
        r.experiments[0].residuals[0] = Residual::new("level_independence", 0.75, 1e-9);
        assert!(to_text(&r).contains("VIOLATED"));
    }
}
