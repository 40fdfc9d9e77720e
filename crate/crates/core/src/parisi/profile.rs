use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::MixingPolynomial;
use crate::scalar::Real;

/// Step function `γ(t) = γ_i` on `[t_{i-1}, t_i)`, with `0 = t_0 < … < t_K = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RSBProfile<T> {
    breakpoints: Vec<T>,
    values: Vec<T>,
}

impl<T: Real> RSBProfile<T> {
    /// Nondecreasing nonnegative profile (the class of the zero-temperature Parisi
    /// formula).
    pub fn new(breakpoints: Vec<T>, values: Vec<T>) -> Result<Self> {
        let p = Self::unrestricted(breakpoints, values)?;
        if p.values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidInput("profile values must be nondecreasing".into()));
        }
        Ok(p)
    }

    /// Nonnegative profile without the monotonicity requirement.
    pub fn unrestricted(breakpoints: Vec<T>, values: Vec<T>) -> Result<Self> {
        let k = values.len();
        if k == 0 || breakpoints.len() != k + 1 {
            return Err(Error::InvalidInput(format!(
                "{} breakpoints for {k} values",
                breakpoints.len()
            )));
        }
        if breakpoints[0] != T::zero() || breakpoints[k] != T::one() {
            return Err(Error::InvalidInput("breakpoints must start at 0 and end at 1".into()));
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("breakpoints must be strictly increasing".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= T::zero())) {
            return Err(Error::InvalidInput("profile values must be finite and >= 0".into()));
        }
        Ok(Self { breakpoints, values })
    }

    /// `γ ≡ c` on `[0, 1]`.
    pub fn constant(c: T) -> Result<Self> {
        Self::new(vec![T::zero(), T::one()], vec![c])
    }

    pub fn levels(&self) -> usize {
        self.values.len()
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn is_monotone(&self) -> bool {
        self.values.windows(2).all(|w| w[1] >= w[0])
    }

    /// Index of the interval `[t_{i-1}, t_i)` containing `t` (the last one for `t = 1`).
    pub fn interval_of(&self, t: T) -> usize {
        let k = self.values.len();
        (1..k).find(|&i| t < self.breakpoints[i]).map(|i| i - 1).unwrap_or(k - 1)
    }

    pub fn gamma_at(&self, t: T) -> T {
        self.values[self.interval_of(t)]
    }

    /// `½ ∫₀¹ t ξ″(t) γ(t) dt`, exact for polynomial `ξ`.
    pub fn correction(&self, mixing: &MixingPolynomial) -> T {
        let half = T::lit(0.5);
        self.values
            .iter()
            .enumerate()
            .map(|(i, &g)| half * g * mixing.moment_of_second(1, self.breakpoints[i], self.breakpoints[i + 1]))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(RSBProfile::new(vec![0.0, 0.5, 1.0], vec![1.0, 0.5]).is_err());
        assert!(RSBProfile::unrestricted(vec![0.0, 0.5, 1.0], vec![1.0, 0.5]).is_ok());
        assert!(RSBProfile::new(vec![0.0, 0.5, 0.5, 1.0], vec![0.0, 1.0, 2.0]).is_err());
        assert!(RSBProfile::new(vec![0.1, 1.0], vec![1.0]).is_err());
        assert!(RSBProfile::new(vec![0.0, 1.0], vec![-1.0]).is_err());
    }

    #[test]
    fn lookup_is_right_continuous() {
        let p = RSBProfile::new(vec![0.0, 0.25, 0.75, 1.0], vec![0.0, 1.0, 2.0]).unwrap();
        assert_eq!(p.gamma_at(0.0), 0.0);
        assert_eq!(p.gamma_at(0.25), 1.0);
        assert_eq!(p.gamma_at(0.9), 2.0);
        assert_eq!(p.gamma_at(1.0), 2.0);
    }

    #[test]
    fn constant_profile_correction() {
        let p = RSBProfile::constant(0.8f64).unwrap();
        assert!((p.correction(&MixingPolynomial::sk()) - 0.2).abs() < 1e-15);
    }
}
