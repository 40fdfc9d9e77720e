use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Parisi,
    Iamp,
    Spiked,
    AmpSe,
    Bp,
    Oracle,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Parisi => "parisi",
            Command::Iamp => "iamp",
            Command::Spiked => "spiked",
            Command::AmpSe => "amp-se",
            Command::Bp => "bp",
            Command::Oracle => "oracle",
        }
    }

    /// Optional keys each command understands.
    fn keys(&self) -> &'static [&'static str] {
        match self {
            Command::Parisi => &["xi", "boundary", "rsb", "grid", "max_evals", "restarts", "dump_pde"],
            Command::Iamp => &["xi", "n", "delta", "control", "rsb", "grid", "max_evals", "restarts", "baseline"],
            Command::Spiked => &["prior", "lambda_grid", "n", "steps"],
            Command::AmpSe => &["schedule", "gain", "table", "n", "steps", "mc_samples", "onsager", "se_method"],
            Command::Bp => &["model", "n", "alphabet", "max_degree", "scale", "max_iters", "tol", "damping"],
            Command::Oracle => &["n", "beta", "matrix"],
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Flat experiment description. Unset optional keys take command defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub repetitions: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rsb: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_evals: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dump_pde: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub onsager: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub se_method: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphabet: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_degree: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub damping: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<String>,
}

fn one() -> usize {
    1
}

impl ExperimentConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            seed: 0,
            repetitions: 1,
            out: None,
            xi: None,
            boundary: None,
            rsb: None,
            grid: None,
            max_evals: None,
            restarts: None,
            dump_pde: None,
            n: None,
            delta: None,
            control: None,
            baseline: None,
            prior: None,
            lambda_grid: None,
            steps: None,
            schedule: None,
            gain: None,
            table: None,
            mc_samples: None,
            onsager: None,
            se_method: None,
            model: None,
            alphabet: None,
            max_degree: None,
            scale: None,
            max_iters: None,
            tol: None,
            damping: None,
            beta: None,
            matrix: None,
        }
    }

    /// Names of the optional keys that are set.
    fn set_keys(&self) -> Vec<&'static str> {
        let v = serde_json::to_value(self).expect("config serializes");
        let obj = v.as_object().expect("object");
        ALL_KEYS.iter().copied().filter(|k| obj.contains_key(*k)).collect()
    }

    /// Rejects keys that the command does not use and empty repetition counts.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.repetitions == 0 {
            return Err(CliError::Usage("repetitions must be >= 1".into()));
        }
        let allowed = self.command.keys();
        let stray: Vec<&str> = self.set_keys().into_iter().filter(|k| !allowed.contains(k)).collect();
        if !stray.is_empty() {
            return Err(CliError::Usage(format!(
                "option(s) {} do not apply to '{}'",
                stray.join(", "),
                self.command
            )));
        }
        Ok(())
    }

    /// Canonical JSON (keys in declaration order, unset keys omitted).
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

const ALL_KEYS: &[&str] = &[
    "xi",
    "boundary",
    "rsb",
    "grid",
    "max_evals",
    "restarts",
    "dump_pde",
    "n",
    "delta",
    "control",
    "baseline",
    "prior",
    "lambda_grid",
    "steps",
    "schedule",
    "gain",
    "table",
    "mc_samples",
    "onsager",
    "se_method",
    "model",
    "alphabet",
    "max_degree",
    "scale",
    "max_iters",
    "tol",
    "damping",
    "beta",
    "matrix",
];

impl FromStr for ExperimentConfig {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let c: ExperimentConfig = serde_json::from_str(s).map_err(|e| CliError::Usage(format!("config: {e}")))?;
        c.validate()?;
        Ok(c)
    }
}

/// Parses `"0.5,1,1.5"`.
pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad number '{t}'")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let mut c = ExperimentConfig::new(Command::Spiked);
        c.lambda_grid = Some(vec![0.5, 1.0 / 3.0, 2.0]);
        c.prior = Some("sparse:0.2".into());
        c.seed = 17;
        let back: ExperimentConfig = c.to_json().parse().unwrap();
        assert_eq!(c, back);
        assert_eq!(back.to_json(), c.to_json());
    }

    #[test]
    fn rejects_unknown_and_stray_keys() {
        assert!(r#"{"command":"oracle","bogus":1}"#.parse::<ExperimentConfig>().is_err());
        assert!(r#"{"command":"oracle","prior":"gaussian"}"#.parse::<ExperimentConfig>().is_err());
        assert!(r#"{"command":"oracle","n":4}"#.parse::<ExperimentConfig>().is_ok());
    }
}
