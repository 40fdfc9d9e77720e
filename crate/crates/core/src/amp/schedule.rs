use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Separable nonlinearities `f_k(x⁰, …, xᵏ; z)` applied entrywise.
pub trait Schedule<T: Real>: Sync {
    /// `f_k` at one coordinate; `xs` holds `x⁰ … xᵏ` there.
    fn eval(&self, k: usize, xs: &[T], z: T) -> T;

    /// Analytic `∂f_k/∂xʲ`, when known.
    fn partial(&self, _k: usize, _j: usize, _xs: &[T], _z: T) -> Option<T> {
        None
    }

    /// True when `f_k` depends on `xᵏ` alone (enables quadrature state evolution).
    fn latest_only(&self) -> bool {
        false
    }

    fn lipschitz(&self) -> T {
        T::infinity()
    }

    /// Number of steps defined, `None` when unbounded.
    fn len(&self) -> Option<usize> {
        None
    }
}

/// How a partial derivative was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum DerivativeMethod {
    Analytic,
    FiniteDifference,
}

/// Step of the central-difference fallback.
pub const FD_STEP: f64 = 1e-6;

/// `∂f_k/∂xʲ` at one coordinate, analytic when available.
pub fn partial_derivative<T: Real, S: Schedule<T> + ?Sized>(
    s: &S,
    k: usize,
    j: usize,
    xs: &[T],
    z: T,
) -> (T, DerivativeMethod) {
    if let Some(d) = s.partial(k, j, xs, z) {
        if d.is_finite() {
            return (d, DerivativeMethod::Analytic);
        }
    }
    let h = T::lit(FD_STEP);
    let mut buf = xs.to_vec();
    buf[j] = xs[j] + h;
    let up = s.eval(k, &buf, z);
    buf[j] = xs[j] - h;
    let dn = s.eval(k, &buf, z);
    ((up - dn) / (h + h), DerivativeMethod::FiniteDifference)
}

/// Largest gap between analytic partials and central differences over probe points.
pub fn derivative_mismatch<T: Real, S: Schedule<T> + ?Sized>(s: &S, k: usize, probes: &[(Vec<T>, T)]) -> T {
    let h = T::lit(1e-5);
    let mut worst = T::zero();
    for (xs, z) in probes {
        for j in 0..=k {
            if let Some(d) = s.partial(k, j, xs, *z) {
                let mut buf = xs.clone();
                buf[j] = xs[j] + h;
                let up = s.eval(k, &buf, *z);
                buf[j] = xs[j] - h;
                let dn = s.eval(k, &buf, *z);
                worst = worst.max((d - (up - dn) / (h + h)).abs());
            }
        }
    }
    worst
}

type ScalarFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// The same scalar function of the latest iterate at every step.
#[derive(Clone)]
pub struct Separable<T> {
    pub name: String,
    f: ScalarFn<T>,
    df: Option<ScalarFn<T>>,
    lipschitz: T,
}

impl<T: Real> std::fmt::Debug for Separable<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Separable({})", self.name)
    }
}

impl<T: Real> Separable<T> {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(T) -> T + Send + Sync + 'static,
        df: Option<ScalarFn<T>>,
        lipschitz: T,
    ) -> Self {
        Self { name: name.into(), f: Arc::new(f), df, lipschitz }
    }

    pub fn identity() -> Self {
        Self::new("identity", |x| x, Some(Arc::new(|_| T::one())), T::one())
    }

    pub fn zero() -> Self {
        Self::new("zero", |_| T::zero(), Some(Arc::new(|_| T::zero())), T::zero())
    }

    /// `f(x) = gain · tanh(x)`.
    pub fn tanh(gain: T) -> Self {
        Self::new(
            "tanh",
            move |x: T| gain * x.tanh(),
            Some(Arc::new(move |x: T| gain * (T::one() - x.tanh() * x.tanh()))),
            gain.abs(),
        )
    }

    /// `f(x) = c · x`.
    pub fn linear(c: T) -> Self {
        Self::new("linear", move |x| c * x, Some(Arc::new(move |_| c)), c.abs())
    }

    /// Piecewise-linear interpolation of `(knots, values)`, constant beyond the ends.
    pub fn table(knots: Vec<T>, values: Vec<T>) -> Result<Self> {
        if knots.len() < 2 || knots.len() != values.len() || knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("table needs >= 2 increasing knots with matching values".into()));
        }
        let lip = knots
            .windows(2)
            .zip(values.windows(2))
            .map(|(k, v)| ((v[1] - v[0]) / (k[1] - k[0])).abs())
            .fold(T::zero(), |a, b| a.max(b));
        let (k1, v1) = (knots.clone(), values.clone());
        let f = move |x: T| {
            let j = k1.partition_point(|&k| k <= x);
            if j == 0 {
                v1[0]
            } else if j == k1.len() {
                v1[k1.len() - 1]
            } else {
                let w = (x - k1[j - 1]) / (k1[j] - k1[j - 1]);
                v1[j - 1] + w * (v1[j] - v1[j - 1])
            }
        };
        let df = move |x: T| {
            let j = knots.partition_point(|&k| k <= x);
            if j == 0 || j == knots.len() {
                T::zero()
            } else {
                (values[j] - values[j - 1]) / (knots[j] - knots[j - 1])
            }
        };
        Ok(Self::new("table", f, Some(Arc::new(df)), lip))
    }

    pub fn apply(&self, x: T) -> T {
        (self.f)(x)
    }
}

impl<T: Real> Schedule<T> for Separable<T> {
    fn eval(&self, k: usize, xs: &[T], _z: T) -> T {
        (self.f)(xs[k])
    }

    fn partial(&self, k: usize, j: usize, xs: &[T], _z: T) -> Option<T> {
        if j != k {
            return Some(T::zero());
        }
        self.df.as_ref().map(|d| d(xs[k]))
    }

    fn latest_only(&self) -> bool {
        true
    }

    fn lipschitz(&self) -> T {
        self.lipschitz
    }
}

/// Arbitrary per-step closure `f(k, xs, z)` with optional partial derivatives.
pub struct FnSchedule<T> {
    #[allow(clippy::type_complexity)]
    f: Box<dyn Fn(usize, &[T], T) -> T + Send + Sync>,
    #[allow(clippy::type_complexity)]
    df: Option<Box<dyn Fn(usize, usize, &[T], T) -> T + Send + Sync>>,
}

impl<T: Real> FnSchedule<T> {
    pub fn new(f: impl Fn(usize, &[T], T) -> T + Send + Sync + 'static) -> Self {
        Self { f: Box::new(f), df: None }
    }

    pub fn with_partials(mut self, df: impl Fn(usize, usize, &[T], T) -> T + Send + Sync + 'static) -> Self {
        self.df = Some(Box::new(df));
        self
    }
}

impl<T: Real> Schedule<T> for FnSchedule<T> {
    fn eval(&self, k: usize, xs: &[T], z: T) -> T {
        (self.f)(k, xs, z)
    }

    fn partial(&self, k: usize, j: usize, xs: &[T], z: T) -> Option<T> {
        self.df.as_ref().map(|d| d(k, j, xs, z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_partials_match_differences() {
        let probes: Vec<(Vec<f64>, f64)> = (0..7).map(|i| (vec![0.3, -1.5 + 0.5 * i as f64], 0.0)).collect();
        for s in [Separable::identity(), Separable::tanh(2.0), Separable::linear(-0.7)] {
            assert!(derivative_mismatch(&s, 1, &probes) < 1e-4);
        }
    }

    #[test]
    fn finite_difference_fallback() {
        let s = FnSchedule::new(|k: usize, xs: &[f64], _z: f64| xs[k].sin() * xs[0]);
        let (d, m) = partial_derivative(&s, 1, 1, &[2.0, 0.4], 0.0);
        assert_eq!(m, DerivativeMethod::FiniteDifference);
        assert!((d - 2.0 * 0.4f64.cos()).abs() < 1e-6);
    }

    #[test]
    fn table_interpolates() {
        let t = Separable::<f64>::table(vec![-1.0, 0.0, 1.0], vec![-2.0, 0.0, 1.0]).unwrap();
        assert_eq!(t.apply(-5.0), -2.0);
        assert!((t.apply(0.5) - 0.5).abs() < 1e-15);
        assert!((t.apply(-0.5) + 1.0).abs() < 1e-15);
        assert_eq!(t.lipschitz(), 2.0);
        assert!(Separable::<f64>::table(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
    }
}
