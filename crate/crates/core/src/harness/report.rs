use super::config::ExperimentConfig;
use crate::error::Result;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// How a metric value is judged against its tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// Pass iff value ≤ tolerance.
    AtMost,
    /// Pass iff value ≥ tolerance.
    AtLeast,
    /// Reported only.
    Info,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub check: Check,
    pub tolerance: Option<f64>,
    pub pass: bool,
    pub stderr: Option<f64>,
    pub samples: Option<usize>,
    /// The formula or comparison the value measures.
    pub formula: String,
}

impl Metric {
    pub fn info(name: &str, value: f64, formula: &str) -> Self {
        Self {
            name: name.into(),
            value,
            check: Check::Info,
            tolerance: None,
            pass: true,
            stderr: None,
            samples: None,
            formula: formula.into(),
        }
    }

    pub fn at_most(name: &str, value: f64, tol: f64, formula: &str) -> Self {
        Self {
            check: Check::AtMost,
            tolerance: Some(tol),
            pass: value <= tol,
            ..Self::info(name, value, formula)
        }
    }

    pub fn at_least(name: &str, value: f64, tol: f64, formula: &str) -> Self {
        Self {
            check: Check::AtLeast,
            tolerance: Some(tol),
            pass: value >= tol,
            ..Self::info(name, value, formula)
        }
    }

    /// A boolean check carried as 1/0.
    pub fn flag(name: &str, ok: bool, formula: &str) -> Self {
        Self::at_least(name, if ok { 1.0 } else { 0.0 }, 1.0, formula)
    }

    pub fn with_stats(mut self, stderr: f64, samples: usize) -> Self {
        self.stderr = Some(stderr);
        self.samples = Some(samples);
        self
    }

    /// Re-judges the metric against an overridden tolerance.
    fn apply_tolerance(&mut self, tol: f64) {
        self.tolerance = Some(tol);
        self.pass = match self.check {
            Check::AtMost => self.value <= tol,
            Check::AtLeast => self.value >= tol,
            Check::Info => true,
        };
    }
}

/// A plot-ready data file produced by an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvArtifact {
    pub name: String,
    pub contents: String,
}

impl CsvArtifact {
    /// Builds a CSV from a header and rows of numbers written with 17 significant digits.
    pub fn from_rows(name: &str, header: &[&str], rows: &[Vec<f64>]) -> Self {
        let mut s = header.join(",");
        s.push('\n');
        for r in rows {
            let mut first = true;
            for v in r {
                if !first {
                    s.push(',');
                }
                first = false;
                let _ = write!(s, "{v:.16e}");
            }
            s.push('\n');
        }
        Self {
            name: name.into(),
            contents: s,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: String,
    pub inputs: serde_json::Value,
    pub seed: u64,
    pub metrics: Vec<Metric>,
    pub wall_clock_s: f64,
    pub provenance: String,
    pub passed: bool,
    #[serde(skip)]
    pub artifacts: Vec<CsvArtifact>,
}

/// `wavekin <version> config-sha256:<first 16 hex> seed:<seed>`.
pub fn provenance(cfg: &ExperimentConfig) -> Result<String> {
    let text = cfg.to_toml_string()?;
    let digest = Sha256::digest(text.as_bytes());
    let mut hex = String::new();
    for b in &digest[..8] {
        let _ = write!(hex, "{b:02x}");
    }
    Ok(format!(
        "wavekin {} config-sha256:{hex} seed:{}",
        env!("CARGO_PKG_VERSION"),
        cfg.ensemble.seed
    ))
}

impl ExperimentReport {
    pub fn new(cfg: &ExperimentConfig, mut metrics: Vec<Metric>, artifacts: Vec<CsvArtifact>, wall_clock_s: f64) -> Result<Self> {
        for m in &mut metrics {
            if let Some(&t) = cfg.tolerances.get(&m.name) {
                m.apply_tolerance(t);
            }
        }
        Ok(Self {
            kind: cfg.kind.name().into(),
            inputs: serde_json::to_value(cfg)?,
            seed: cfg.ensemble.seed,
            passed: metrics.iter().all(|m| m.pass),
            metrics,
            wall_clock_s,
            provenance: provenance(cfg)?,
            artifacts,
        })
    }

    pub fn metric(&self, name: &str) -> Option<&Metric> {
        self.metrics.iter().find(|m| m.name == name)
    }

    /// Machine-readable pass/fail summary.
    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "kind": self.kind,
            "passed": self.passed,
            "provenance": self.provenance,
            "checks": self
                .metrics
                .iter()
                .filter(|m| m.check != Check::Info)
                .map(|m| serde_json::json!({ "name": m.name, "pass": m.pass }))
                .collect::<Vec<_>>(),
        })
    }

    /// Writes `report.json`, `summary.json` and every CSV into `dir`; returns the paths written.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut out = Vec::new();
        let p = dir.join("report.json");
        std::fs::write(&p, serde_json::to_string_pretty(self)?)?;
        out.push(p);
        let p = dir.join("summary.json");
        std::fs::write(&p, serde_json::to_string_pretty(&self.summary())?)?;
        out.push(p);
        for a in &self.artifacts {
            let p = dir.join(&a.name);
            std::fs::write(&p, &a.contents)?;
            out.push(p);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_uses_full_precision() {
        let a = CsvArtifact::from_rows("x.csv", &["a", "b"], &[vec![0.1, -2.0]]);
        assert_eq!(a.contents, "a,b\n1.0000000000000001e-1,-2.0000000000000000e0\n");
        let back: f64 = a.contents.lines().nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
        assert_eq!(back, 0.1);
    }

    #[test]
    fn overrides_rejudge_metrics() {
        let mut cfg = ExperimentConfig::new(super::super::config::ExperimentKind::Rigidity);
        cfg.tolerances.insert("x".into(), 10.0);
        let r = ExperimentReport::new(&cfg, vec![Metric::at_most("x", 5.0, 1.0, "")], vec![], 0.0).unwrap();
        assert!(r.passed && r.metrics[0].tolerance == Some(10.0));
        assert!(r.provenance.starts_with("wavekin ") && r.provenance.ends_with("seed:1"));
    }
}
