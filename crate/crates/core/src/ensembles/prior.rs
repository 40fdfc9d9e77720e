use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Law of the planted coordinates `Θ*`. Every variant has `E Θ*² = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorSpec {
    /// Uniform on `{-1, +1}`.
    Rademacher,
    /// Standard normal.
    Gaussian,
    /// `±1/√ε` with probability `ε/2` each, `0` otherwise.
    SparseRademacher { eps: f64 },
    /// `a` with probability `p`, `b` otherwise.
    TwoPoint { a: f64, b: f64, p: f64 },
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PriorSpec::Rademacher | PriorSpec::Gaussian => Ok(()),
            PriorSpec::SparseRademacher { eps } => {
                if eps > 0.0 && eps <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidInput(format!("sparsity {eps} outside (0, 1]")))
                }
            }
            PriorSpec::TwoPoint { a, b, p } => {
                if !(p > 0.0 && p < 1.0) || !a.is_finite() || !b.is_finite() {
                    return Err(Error::InvalidInput(format!("bad two-point prior ({a}, {b}, {p})")));
                }
                let m2 = p * a * a + (1.0 - p) * b * b;
                if (m2 - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidInput(format!(
                        "two-point prior has second moment {m2}, expected 1"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Two-point prior with mean `mean` and unit second moment, taking the
    /// values `mean ± sqrt(1 - mean²)` with equal probability.
    pub fn two_point_with_mean(mean: f64) -> Result<Self> {
        if !(mean.abs() < 1.0) {
            return Err(Error::InvalidInput(format!("mean {mean} must lie in (-1, 1)")));
        }
        let s = (1.0 - mean * mean).sqrt();
        Ok(PriorSpec::TwoPoint { a: mean + s, b: mean - s, p: 0.5 })
    }

    /// Support and probabilities of a discrete prior; `None` for the Gaussian.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match *self {
            PriorSpec::Rademacher => Some(vec![(-1.0, 0.5), (1.0, 0.5)]),
            PriorSpec::Gaussian => None,
            PriorSpec::SparseRademacher { eps } => {
                let v = 1.0 / eps.sqrt();
                let mut atoms = vec![(-v, eps / 2.0), (v, eps / 2.0)];
                if eps < 1.0 {
                    atoms.push((0.0, 1.0 - eps));
                }
                Some(atoms)
            }
            PriorSpec::TwoPoint { a, b, p } => Some(vec![(a, p), (b, 1.0 - p)]),
        }
    }

    pub fn mean(&self) -> f64 {
        match self.atoms() {
            Some(atoms) => atoms.iter().map(|(v, p)| v * p).sum(),
            None => 0.0,
        }
    }

    pub fn second_moment(&self) -> f64 {
        match self.atoms() {
            Some(atoms) => atoms.iter().map(|(v, p)| v * v * p).sum(),
            None => 1.0,
        }
    }

    pub fn is_centered(&self) -> bool {
        self.mean().abs() < 1e-14
    }

    /// Draws one value from two uniforms (discrete priors use `u1` only).
    pub fn draw(&self, u1: f64, u2: f64) -> f64 {
        match self.atoms() {
            None => (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos(),
            Some(atoms) => {
                let mut acc = 0.0;
                for &(v, p) in &atoms {
                    acc += p;
                    if u1 < acc {
                        return v;
                    }
                }
                atoms.last().map(|a| a.0).unwrap_or(0.0)
            }
        }
    }

    /// Priors shipped with the toolkit, used by the property suites.
    pub fn shipped() -> Vec<PriorSpec> {
        vec![
            PriorSpec::Rademacher,
            PriorSpec::Gaussian,
            PriorSpec::SparseRademacher { eps: 0.2 },
            PriorSpec::two_point_with_mean(0.5).expect("valid mean"),
        ]
    }
}

impl fmt::Display for PriorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            PriorSpec::Rademacher => write!(f, "rademacher"),
            PriorSpec::Gaussian => write!(f, "gaussian"),
            PriorSpec::SparseRademacher { eps } => write!(f, "sparse:{eps}"),
            PriorSpec::TwoPoint { a, b, p } => write!(f, "twopoint:{a}:{b}:{p}"),
        }
    }
}

impl FromStr for PriorSpec {
    type Err = Error;

    /// Accepts `rademacher`, `gaussian`, `sparse:<eps>`, `twopoint:<a>:<b>:<p>`
    /// and `mean:<m>` (two-point prior with the given mean).
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |i: usize| -> Result<f64> {
            parts
                .get(i)
                .ok_or_else(|| Error::Parse(format!("missing field in prior '{s}'")))?
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("prior '{s}': {e}")))
        };
        let prior = match parts[0].to_ascii_lowercase().as_str() {
            "rademacher" => PriorSpec::Rademacher,
            "gaussian" | "normal" => PriorSpec::Gaussian,
            "sparse" => PriorSpec::SparseRademacher { eps: num(1)? },
            "twopoint" => PriorSpec::TwoPoint { a: num(1)?, b: num(2)?, p: num(3)? },
            "mean" => PriorSpec::two_point_with_mean(num(1)?)?,
            other => return Err(Error::Parse(format!("unknown prior '{other}'"))),
        };
        prior.validate()?;
        Ok(prior)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_priors_have_unit_second_moment() {
        for p in PriorSpec::shipped() {
            p.validate().unwrap();
            assert!((p.second_moment() - 1.0).abs() < 1e-12, "{p}");
        }
    }

    #[test]
    fn parse_display_roundtrip() {
        for p in PriorSpec::shipped() {
            let back: PriorSpec = p.to_string().parse().unwrap();
            assert_eq!(back, p);
        }
        assert!("twopoint:1:1:0.5".parse::<PriorSpec>().is_ok());
        assert!("twopoint:2:1:0.5".parse::<PriorSpec>().is_err());
        assert!("cauchy".parse::<PriorSpec>().is_err());
    }

    #[test]
    fn draw_respects_atoms() {
        let p = PriorSpec::SparseRademacher { eps: 0.25 };
        assert_eq!(p.draw(0.1, 0.0), -2.0);
        assert_eq!(p.draw(0.2, 0.0), 2.0);
        assert_eq!(p.draw(0.9, 0.0), 0.0);
    }
}
