use std::io::Write;
use std::sync::Arc;

use serde::Serialize;

use super::run::AmpTrajectory;
use super::se::StateEvolution;
use crate::error::{Error, Result};
use crate::numerics::GaussHermite;
use crate::scalar::Real;

/// Test function `ψ(x^{≤k}, z)` for the law-of-large-numbers comparison.
#[derive(Clone)]
pub enum TestFunction<T> {
    /// `(x^k)²`.
    Square(usize),
    /// `x^j x^k`.
    Product(usize, usize),
    Constant(T),
    #[allow(clippy::type_complexity)]
    Custom { name: String, step: usize, f: Arc<dyn Fn(&[T], T) -> T + Send + Sync> },
}

impl<T: Real> TestFunction<T> {
    pub fn name(&self) -> String {
        match self {
            TestFunction::Square(k) => format!("x{k}^2"),
            TestFunction::Product(j, k) => format!("x{j}*x{k}"),
            TestFunction::Constant(c) => format!("const({c})"),
            TestFunction::Custom { name, .. } => name.clone(),
        }
    }

    pub fn step(&self) -> usize {
        match self {
            TestFunction::Square(k) => *k,
            TestFunction::Product(j, k) => *j.max(k),
            TestFunction::Constant(_) => 0,
            TestFunction::Custom { step, .. } => *step,
        }
    }

    fn eval(&self, xs: &[T], z: T) -> T {
        match self {
            TestFunction::Square(k) => xs[*k] * xs[*k],
            TestFunction::Product(j, k) => xs[*j] * xs[*k],
            TestFunction::Constant(c) => *c,
            TestFunction::Custom { f, .. } => f(xs, z),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareRow {
    pub step: usize,
    pub quantity: String,
    pub empirical: f64,
    pub predicted: f64,
    pub stderr: f64,
}

impl CompareRow {
    pub fn deviation(&self) -> f64 {
        (self.empirical - self.predicted).abs()
    }
}

/// Empirical averages `(1/n) Σ ψ(x^{≤k}_i, z_i)` against their state-evolution
/// predictions. Second moments are read off `Q`; custom functions are averaged over
/// the state-evolution samples.
pub fn se_compare<T: Real>(
    traj: &AmpTrajectory<T>,
    se: &StateEvolution<T>,
    tests: &[TestFunction<T>],
) -> Result<Vec<CompareRow>> {
    if se.steps() < traj.steps() {
        return Err(Error::InvalidInput(format!(
            "state evolution has {} steps, trajectory {}",
            se.steps(),
            traj.steps()
        )));
    }
    let n = traj.n();
    let gh = GaussHermite::<T>::new(64)?;
    let x0_second = se.law.x0.expect(&gh, |x| x * x);
    let mut rows = Vec::with_capacity(tests.len());
    for t in tests {
        let k = t.step();
        if k > traj.steps() {
            return Err(Error::InvalidInput(format!("{} refers to step {k} beyond the trajectory", t.name())));
        }
        let vals: Vec<T> = (0..n).map(|i| t.eval(&traj.row(i, k), traj.z[i])).collect();
        let empirical = crate::scalar::mean(&vals);
        let (predicted, stderr) = match t {
            TestFunction::Square(0) => (x0_second, T::zero()),
            TestFunction::Square(k) => (se.q[k - 1][k - 1], se.stderr[k - 1][k - 1]),
            TestFunction::Product(j, k) if *j == 0 && *k == 0 => (x0_second, T::zero()),
            // Gaussian iterates are centered and independent of x⁰.
            TestFunction::Product(j, k) if *j == 0 || *k == 0 => (T::zero(), T::zero()),
            TestFunction::Product(j, k) => (se.q[j - 1][k - 1], se.stderr[j - 1][k - 1]),
            TestFunction::Constant(c) => (*c, T::zero()),
            TestFunction::Custom { f, .. } => {
                let g = |xs: &[T], z: T| f(xs, z);
                (se.expect(k, &g), T::zero())
            }
        };
        rows.push(CompareRow {
            step: k,
            quantity: t.name(),
            empirical: empirical.to_f64_lossy(),
            predicted: predicted.to_f64_lossy(),
            stderr: stderr.to_f64_lossy(),
        });
    }
    Ok(rows)
}

/// All second moments `⟨x^j, x^k⟩/n`, `1 ≤ j ≤ k ≤ K`.
pub fn gram_tests<T: Real>(steps: usize) -> Vec<TestFunction<T>> {
    let mut out = Vec::new();
    for k in 1..=steps {
        for j in 1..=k {
            out.push(if j == k { TestFunction::Square(k) } else { TestFunction::Product(j, k) });
        }
    }
    out
}

/// `max_{1 ≤ j, k ≤ K} |⟨x^j, x^k⟩/n − Q_{jk}|` for each `K = 1..=steps`.
pub fn gram_deviation<T: Real>(traj: &AmpTrajectory<T>, se: &StateEvolution<T>) -> Vec<f64> {
    let steps = traj.steps().min(se.steps());
    let mut worst = 0.0f64;
    let mut out = Vec::with_capacity(steps);
    for k in 1..=steps {
        for j in 1..=k {
            let d = (traj.gram(j, k) - se.q[j - 1][k - 1]).abs().to_f64_lossy();
            worst = worst.max(d);
        }
        out.push(worst);
    }
    out
}

/// Writes `step,quantity,empirical,predicted,stderr`.
pub fn write_compare_csv<W: Write>(rows: &[CompareRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "step,quantity,empirical,predicted,stderr")?;
    for r in rows {
        writeln!(w, "{},{},{:.12e},{:.12e},{:.6e}", r.step, r.quantity, r.empirical, r.predicted, r.stderr)?;
    }
    Ok(())
}
