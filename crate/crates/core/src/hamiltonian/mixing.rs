use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Mixing polynomial `ξ(t) = Σ_k ξ_k t^k` with `k ≥ 2` and `ξ_k ≥ 0`.
///
/// `coeffs[k]` holds `ξ_k`; entries 0 and 1 are always zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct MixingPolynomial {
    coeffs: Vec<f64>,
}

impl MixingPolynomial {
    /// Builds from `(coefficient, degree)` pairs; repeated degrees add up.
    pub fn from_terms(terms: &[(f64, usize)]) -> Result<Self> {
        let kmax = terms.iter().map(|t| t.1).max().unwrap_or(0);
        let mut coeffs = vec![0.0; kmax + 1];
        for &(c, k) in terms {
            if k < 2 {
                return Err(Error::InvalidInput(format!("degree {k} < 2 in mixing polynomial")));
            }
            if !(c >= 0.0) || !c.is_finite() {
                return Err(Error::InvalidInput(format!("coefficient {c} must be finite and >= 0")));
            }
            coeffs[k] += c;
        }
        if !coeffs.iter().any(|&c| c > 0.0) {
            return Err(Error::InvalidInput("mixing polynomial has no positive coefficient".into()));
        }
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Ok(Self { coeffs })
    }

    /// `ξ(t) = t²/2`.
    pub fn sk() -> Self {
        Self { coeffs: vec![0.0, 0.0, 0.5] }
    }

    pub fn pure(k: usize, c: f64) -> Result<Self> {
        Self::from_terms(&[(c, k)])
    }

    pub fn max_degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coefficient(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    /// Active `(degree, ξ_k)` pairs in increasing degree.
    pub fn active_terms(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.coeffs.iter().enumerate().filter(|(_, &c)| c > 0.0).map(|(k, &c)| (k, c))
    }

    /// `order`-th derivative at `t` without a domain check. Used on overlaps that
    /// may exceed 1 slightly at finite `n`.
    pub fn derivative<T: Real>(&self, order: usize, t: T) -> T {
        let mut acc = T::zero();
        for (k, c) in self.active_terms() {
            if k < order {
                continue;
            }
            let mut falling = 1.0;
            for j in 0..order {
                falling *= (k - j) as f64;
            }
            acc += T::lit(c * falling) * t.powi((k - order) as i32);
        }
        acc
    }

    fn checked<T: Real>(&self, order: usize, t: T) -> Result<T> {
        if !(t >= T::zero() && t <= T::one()) {
            return Err(Error::Domain(format!("mixing polynomial evaluated at t = {t}")));
        }
        Ok(self.derivative(order, t))
    }

    pub fn xi<T: Real>(&self, t: T) -> Result<T> {
        self.checked(0, t)
    }

    pub fn xi_prime<T: Real>(&self, t: T) -> Result<T> {
        self.checked(1, t)
    }

    pub fn xi_second<T: Real>(&self, t: T) -> Result<T> {
        self.checked(2, t)
    }

    /// Exact `∫_a^b t^p ξ″(t) dt` for integer `p ≥ 0`.
    pub fn moment_of_second<T: Real>(&self, p: usize, a: T, b: T) -> T {
        let mut acc = T::zero();
        for (k, c) in self.active_terms() {
            let e = (k - 2 + p + 1) as i32;
            let coef = T::lit(c * (k * (k - 1)) as f64 / e as f64);
            acc += coef * (b.powi(e) - a.powi(e));
        }
        acc
    }
}

impl fmt::Display for MixingPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.active_terms().map(|(k, c)| format!("{c}:{k}")).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl FromStr for MixingPolynomial {
    type Err = Error;

    /// Parses `"coeff:degree,coeff:degree"`, e.g. `"0.5:2,1:4"`.
    fn from_str(s: &str) -> Result<Self> {
        let mut terms = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (c, k) = part
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("expected coeff:degree, got '{part}'")))?;
            let c: f64 = c.trim().parse().map_err(|e| Error::Parse(format!("'{part}': {e}")))?;
            let k: usize = k.trim().parse().map_err(|e| Error::Parse(format!("'{part}': {e}")))?;
            terms.push((c, k));
        }
        Self::from_terms(&terms)
    }
}

impl TryFrom<String> for MixingPolynomial {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MixingPolynomial> for String {
    fn from(m: MixingPolynomial) -> String {
        m.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives() {
        let sk = MixingPolynomial::sk();
        for t in [0.0, 0.3, 1.0] {
            assert_eq!(sk.xi_second::<f64>(t).unwrap(), 1.0);
        }
        let cubic = MixingPolynomial::pure(3, 1.0).unwrap();
        assert!((cubic.xi_second(0.5f64).unwrap() - 3.0).abs() < 1e-15);
        let mixed: MixingPolynomial = "0.5:2,1:4".parse().unwrap();
        assert!((mixed.xi_prime(1.0f64).unwrap() - 5.0).abs() < 1e-15);
        assert!(mixed.xi(1.5f64).is_err());
        assert!(mixed.xi_second(-0.1f64).is_err());
    }

    #[test]
    fn rejects_empty_and_bad_terms() {
        assert!("0:2".parse::<MixingPolynomial>().is_err());
        assert!("1:1".parse::<MixingPolynomial>().is_err());
        assert!("-1:2".parse::<MixingPolynomial>().is_err());
        assert!("abc".parse::<MixingPolynomial>().is_err());
    }

    #[test]
    fn moment_integral() {
        let m: MixingPolynomial = "0.5:2,1:4".parse().unwrap();
        // ∫_0^1 t (1 + 12 t²) dt = 1/2 + 3
        assert!((m.moment_of_second(1, 0.0f64, 1.0) - 3.5).abs() < 1e-14);
    }

    #[test]
    fn display_roundtrip() {
        let m: MixingPolynomial = "0.5:2, 0.25:3".parse().unwrap();
        assert_eq!(m.to_string().parse::<MixingPolynomial>().unwrap(), m);
    }
}
