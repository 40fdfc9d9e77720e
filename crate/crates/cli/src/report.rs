use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub type Metrics = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Repetition {
    pub index: usize,
    pub seed: u64,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    /// Standard error of the mean; absent with a single repetition.
    pub stderr: Option<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Diagnostic {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub version: String,
    /// `sha256("blob <len>\0" + inputs)` over the canonical config and any input files.
    pub input_hash: String,
    /// Values that do not depend on the repetition.
    pub shared: Metrics,
    pub repetitions: Vec<Repetition>,
    pub aggregate: BTreeMap<String, Aggregate>,
    pub diagnostics: Vec<Diagnostic>,
    pub wall_clock_seconds: f64,
}

/// Git-style content hash of `bytes`.
pub fn blob_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()));
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn aggregate(reps: &[Repetition]) -> BTreeMap<String, Aggregate> {
    let mut cols: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in reps {
        for (k, &v) in &r.metrics {
            cols.entry(k.clone()).or_default().push(v);
        }
    }
    cols.into_iter()
        .map(|(k, v)| {
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let stderr = (v.len() > 1).then(|| {
                let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
                (var / n).sqrt()
            });
            (k, Aggregate { mean, stderr, count: v.len() })
        })
        .collect()
}

impl RunReport {
    pub fn new(
        config: ExperimentConfig,
        extra_inputs: &[u8],
        shared: Metrics,
        repetitions: Vec<Repetition>,
        diagnostics: Vec<Diagnostic>,
        wall_clock_seconds: f64,
    ) -> Self {
        let mut hashed = config.clone();
        hashed.out = None;
        let mut bytes = hashed.to_json().into_bytes();
        bytes.extend_from_slice(extra_inputs);
        Self {
            aggregate: aggregate(&repetitions),
            input_hash: blob_hash(&bytes),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            shared,
            repetitions,
            diagnostics,
            wall_clock_seconds,
        }
    }

    pub fn passed(&self) -> bool {
        self.diagnostics.iter().all(|d| d.passed)
    }

    pub fn mean(&self, metric: &str) -> Option<f64> {
        self.aggregate.get(metric).map(|a| a.mean)
    }

    /// `repetition,seed,metric,value`; shared values use repetition `all`.
    /// Values print in shortest round-trip form, so equal runs give equal bytes.
    pub fn metrics_csv(&self) -> String {
        let mut s = String::from("repetition,seed,metric,value\n");
        for (k, v) in &self.shared {
            let _ = writeln!(s, "all,{},{k},{v:?}", self.config.seed);
        }
        for r in &self.repetitions {
            for (k, v) in &r.metrics {
                let _ = writeln!(s, "{},{},{k},{v:?}", r.index, r.seed);
            }
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// A finished run: the report plus module-specific dumps (`name`, contents).
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: RunReport,
    pub files: Vec<(String, Vec<u8>)>,
    /// Human-readable summary for stdout.
    pub summary: String,
}

impl Outcome {
    pub fn write_to(&self, dir: &Path) -> Result<(), CliError> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.report.to_json())?;
        std::fs::write(dir.join("metrics.csv"), self.report.metrics_csv())?;
        for (name, bytes) in &self.files {
            std::fs::write(dir.join(name), bytes)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Command;

    #[test]
    fn aggregate_and_hash() {
        let rep = |i: usize, v: f64| Repetition { index: i, seed: i as u64, metrics: [("x".to_string(), v)].into() };
        let cfg = ExperimentConfig::new(Command::Oracle);
        let r = RunReport::new(cfg.clone(), b"", Metrics::new(), vec![rep(0, 1.0), rep(1, 3.0)], vec![], 0.5);
        let a = &r.aggregate["x"];
        assert_eq!(a.mean, 2.0);
        assert!((a.stderr.unwrap() - 1.0).abs() < 1e-15);
        // Output directory does not enter the hash.
        let mut moved = cfg;
        moved.out = Some("elsewhere".into());
        let r2 = RunReport::new(moved, b"", Metrics::new(), vec![], vec![], 9.0);
        assert_eq!(r.input_hash, r2.input_hash);
        // Known value of the empty blob.
        assert_eq!(blob_hash(b""), "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813");
    }
}
