//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating point scalar: `f32` or `f64`.
///
/// Constants and special functions are evaluated in `f64` and converted, so
/// `f32` instantiations trade accuracy for memory but follow the same code path.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Never fails for finite input.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn from_usize_lossy(k: usize) -> Self {
        Self::from_usize(k).unwrap_or_else(Self::infinity)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Shorthand for [`Real::lit`].
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::lit(x)
}

/// Numerically stable `log(exp(a) + exp(b))`.
pub fn log_add_exp<T: Real>(a: T, b: T) -> T {
    if a == T::neg_infinity() {
        return b;
    }
    if b == T::neg_infinity() {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Log of a weighted sum of exponentials, `log Σ w_i exp(x_i)`, with a max shift.
pub fn log_sum_exp_weighted<T: Real>(xs: &[T], ws: &[T]) -> T {
    let shift = xs.iter().copied().fold(T::neg_infinity(), T::max);
    if !shift.is_finite() {
        return shift;
    }
    let acc: T = xs
        .iter()
        .zip(ws)
        .map(|(&x, &w)| w * (x - shift).exp())
        .sum();
    shift + acc.ln()
}

/// Fixed-block summation: the result depends only on the data, never on how the
/// caller later parallelizes the blocks.
pub fn block_sum<T: Real>(xs: &[T]) -> T {
    const BLOCK: usize = 1024;
    xs.chunks(BLOCK)
        .map(|c| c.iter().copied().sum::<T>())
        .fold(T::zero(), |a, b| a + b)
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    const BLOCK: usize = 1024;
    a.chunks(BLOCK)
        .zip(b.chunks(BLOCK))
        .map(|(x, y)| x.iter().zip(y).map(|(&p, &q)| p * q).sum::<T>())
        .fold(T::zero(), |s, v| s + v)
}

pub fn mean<T: Real>(xs: &[T]) -> T {
    if xs.is_empty() {
        return T::zero();
    }
    block_sum(xs) / T::from_usize_lossy(xs.len())
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr<T: Real>(xs: &[T]) -> (T, T) {
    let n = xs.len();
    let m = mean(xs);
    if n < 2 {
        return (m, T::zero());
    }
    let ss: T = xs.iter().map(|&x| (x - m) * (x - m)).sum();
    let var = ss / T::from_usize_lossy(n - 1);
    (m, (var / T::from_usize_lossy(n)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_add_exp_handles_extremes() {
        assert_eq!(log_add_exp(f64::NEG_INFINITY, 1.5), 1.5);
        let v = log_add_exp(1000.0_f64, 1000.0);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
        let v32 = log_add_exp(0.0_f32, 0.0);
        assert!((v32 - 2f32.ln()).abs() < 1e-6);
    }

    #[test]
    fn weighted_lse_matches_naive() {
        let xs = [0.1, -0.3, 2.0];
        let ws = [0.2, 0.5, 0.3];
        let naive: f64 = xs.iter().zip(&ws).map(|(x, w)| w * f64::exp(*x)).sum();
        assert!((log_sum_exp_weighted(&xs, &ws) - naive.ln()).abs() < 1e-14);
    }

    #[test]
    fn stderr_of_constant_is_zero() {
        let (m, se) = mean_stderr(&[2.0_f64; 10]);
        assert_eq!(m, 2.0);
        assert_eq!(se, 0.0);
    }
}
