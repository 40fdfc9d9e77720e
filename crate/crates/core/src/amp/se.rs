use rayon::prelude::*;
use serde::Serialize;

use super::schedule::Schedule;
use crate::ensembles::{PriorSpec, Seed};
use crate::error::{Error, Result};
use crate::numerics::GaussHermite;
use crate::scalar::{dot, Real};

/// Law of one coordinate of `x⁰` or `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Marginal {
    Gaussian { mean: f64, sd: f64 },
    Prior(PriorSpec),
    Constant(f64),
}

impl Marginal {
    pub fn standard() -> Self {
        Marginal::Gaussian { mean: 0.0, sd: 1.0 }
    }

    fn draw(&self, u1: f64, u2: f64, g: f64) -> f64 {
        match *self {
            Marginal::Gaussian { mean, sd } => mean + sd * g,
            Marginal::Prior(p) => p.draw(u1, u2),
            Marginal::Constant(c) => c,
        }
    }

    /// `E f(X)`, by quadrature for Gaussians and exact sums for discrete laws.
    pub fn expect<T: Real>(&self, gh: &GaussHermite<T>, f: impl Fn(T) -> T) -> T {
        match *self {
            Marginal::Gaussian { mean, sd } => gh.expect(T::lit(mean), T::lit(sd), f),
            Marginal::Prior(p) => match p.atoms() {
                Some(atoms) => atoms.iter().map(|&(v, w)| T::lit(w) * f(T::lit(v))).sum(),
                None => gh.expect(T::zero(), T::one(), f),
            },
            Marginal::Constant(c) => f(T::lit(c)),
        }
    }
}

/// Joint law of `(X₀, Z)`, taken independent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InitLaw {
    pub x0: Marginal,
    pub z: Marginal,
}

impl Default for InitLaw {
    fn default() -> Self {
        Self { x0: Marginal::standard(), z: Marginal::Constant(0.0) }
    }
}

impl InitLaw {
    /// `n` draws of `(x⁰_i, z_i)`; coordinate `i` of each uses counters `3i..3i+2`
    /// of child streams `x0` and `z`.
    pub fn sample<T: Real>(&self, n: usize, seed: &Seed) -> (Vec<T>, Vec<T>) {
        let draw = |m: &Marginal, s: Seed| -> Vec<T> {
            let rng = s.rng();
            (0..n)
                .map(|i| {
                    let c = 3 * i as u64;
                    T::lit(m.draw(rng.uniform_at(c), rng.uniform_at(c + 1), rng.normal_at(c + 2)))
                })
                .collect()
        };
        (draw(&self.x0, seed.child("x0")), draw(&self.z, seed.child("z")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SeMethod {
    MonteCarlo,
    Quadrature,
}

/// Covariance of `(X¹, …, Xᴷ)` together with samples of the full process.
#[derive(Debug, Clone)]
pub struct StateEvolution<T> {
    /// `q[j-1][k-1] = Q_{jk}` for `1 ≤ j, k ≤ K`.
    pub q: Vec<Vec<T>>,
    /// Monte Carlo standard errors of `q` (zero for quadrature).
    pub stderr: Vec<Vec<T>>,
    pub law: InitLaw,
    pub method: SeMethod,
    pub mc_samples: usize,
    /// `samples[k][s]`: draw `s` of `X^k`, `k = 0..=K`.
    pub samples: Vec<Vec<T>>,
    pub z: Vec<T>,
}

impl<T: Real> StateEvolution<T> {
    pub fn steps(&self) -> usize {
        self.q.len()
    }

    /// `Q_{jk}` with the convention that index 0 refers to `X⁰`, independent of
    /// the Gaussian part.
    pub fn cov(&self, j: usize, k: usize) -> Option<T> {
        if j == 0 || k == 0 {
            return None;
        }
        Some(self.q[j - 1][k - 1])
    }

    /// Leading `k × k` block of `Q`.
    pub fn prefix(&self, k: usize) -> Vec<Vec<T>> {
        self.q[..k].iter().map(|r| r[..k].to_vec()).collect()
    }

    /// Monte Carlo estimate of `E ψ(X^{≤k}, Z)` on the stored samples.
    pub fn expect(&self, k: usize, psi: &(dyn Fn(&[T], T) -> T + Sync)) -> T {
        let s = self.z.len();
        let vals: Vec<T> = (0..s)
            .into_par_iter()
            .map(|i| {
                let xs: Vec<T> = (0..=k).map(|l| self.samples[l][i]).collect();
                psi(&xs, self.z[i])
            })
            .collect();
        crate::scalar::mean(&vals)
    }
}

/// Minimum samples accepted by the Monte Carlo path.
pub const MIN_MC_SAMPLES: usize = 100_000;
/// Gauss–Hermite order of the quadrature path (per dimension).
pub const SE_GH_ORDER: usize = 64;
const PSD_TOL: f64 = 1e-10;

/// Incremental Cholesky factor `L` with `L Lᵀ = Q`.
struct Cholesky<T> {
    rows: Vec<Vec<T>>,
}

impl<T: Real> Cholesky<T> {
    /// Appends the row for a new variable with covariances `c[0..k]` against the
    /// previous ones and variance `c[k]`.
    fn push(&mut self, c: &[T]) -> Result<()> {
        let k = self.rows.len();
        let mut row = vec![T::zero(); k + 1];
        for j in 0..k {
            let lj = &self.rows[j];
            let mut s = c[j];
            for i in 0..j {
                s -= row[i] * lj[i];
            }
            row[j] = if lj[j] > T::zero() { s / lj[j] } else { T::zero() };
        }
        let pivot = c[k] - row[..k].iter().map(|&v| v * v).sum::<T>();
        let scale = c[k].abs().max(T::one());
        if pivot < -T::lit(PSD_TOL) * scale {
            return Err(Error::NumericInstability(format!(
                "state-evolution covariance lost positive semidefiniteness: leading {}x{} minor has pivot {}",
                k + 1,
                k + 1,
                pivot
            )));
        }
        row[k] = pivot.max(T::zero()).sqrt();
        self.rows.push(row);
        Ok(())
    }
}

fn check_samples(mc_samples: usize) -> Result<()> {
    if mc_samples < MIN_MC_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "state evolution needs at least {MIN_MC_SAMPLES} samples, got {mc_samples}"
        )));
    }
    Ok(())
}

/// Draws the initial pair and `K` standard normal columns. The same normals are
/// reused for every `k` (common random numbers).
fn base_draws<T: Real>(law: &InitLaw, k: usize, s: usize, seed: &Seed) -> (Vec<T>, Vec<T>, Vec<Vec<T>>) {
    let (x0, z) = law.sample::<T>(s, seed);
    let g = (0..k)
        .map(|l| {
            let rng = seed.child(format!("g{l}")).rng();
            (0..s).into_par_iter().map(|i| T::lit(rng.normal_at(i as u64))).collect()
        })
        .collect();
    (x0, z, g)
}

fn combine<T: Real>(row: &[T], g: &[Vec<T>]) -> Vec<T> {
    let s = g[0].len();
    (0..s)
        .into_par_iter()
        .map(|i| row.iter().zip(g).map(|(&c, gl)| c * gl[i]).sum())
        .collect()
}

fn apply<T: Real, S: Schedule<T> + ?Sized>(sched: &S, k: usize, xs: &[Vec<T>], z: &[T]) -> Vec<T> {
    (0..z.len())
        .into_par_iter()
        .map(|i| {
            let row: Vec<T> = (0..=k).map(|l| xs[l][i]).collect();
            sched.eval(k, &row, z[i])
        })
        .collect()
}

/// State evolution by Monte Carlo: at each step the next row of `Q` is the
/// sample second moment `E f_k f_j`, and `X^{k+1}` is rebuilt from the common
/// normals through the Cholesky factor of `Q`.
pub fn state_evolution<T: Real, S: Schedule<T> + ?Sized>(
    schedule: &S,
    law: &InitLaw,
    steps: usize,
    mc_samples: usize,
    seed: &Seed,
) -> Result<StateEvolution<T>> {
    check_samples(mc_samples)?;
    let s = mc_samples;
    let sn = T::from_usize_lossy(s);
    let (x0, z, g) = base_draws::<T>(law, steps, s, seed);
    let mut xs = vec![x0];
    let mut fs: Vec<Vec<T>> = Vec::new();
    let mut q = vec![vec![T::zero(); steps]; steps];
    let mut se = vec![vec![T::zero(); steps]; steps];
    let mut chol = Cholesky { rows: Vec::new() };
    for k in 0..steps {
        let f = apply(schedule, k, &xs, &z);
        if let Some(i) = f.iter().position(|v| !v.is_finite()) {
            return Err(Error::Diverged { step: k, reason: format!("f_{k} non-finite at sample {i}") });
        }
        fs.push(f);
        let fk = &fs[k];
        let mut c = vec![T::zero(); k + 1];
        for j in 0..=k {
            let prod: Vec<T> = fk.iter().zip(&fs[j]).map(|(&a, &b)| a * b).collect();
            let m = dot(fk, &fs[j]) / sn;
            let var = prod.iter().map(|&p| (p - m) * (p - m)).sum::<T>() / (sn - T::one());
            q[k][j] = m;
            q[j][k] = m;
            se[k][j] = (var / sn).sqrt();
            se[j][k] = se[k][j];
            c[j] = m;
        }
        chol.push(&c)?;
        xs.push(combine(&chol.rows[k], &g[..=k]));
    }
    Ok(StateEvolution { q, stderr: se, law: *law, method: SeMethod::MonteCarlo, mc_samples: s, samples: xs, z })
}

/// `E f(X) g(Y)` for centered Gaussians with variances `vx, vy` and covariance `c`.
fn bivariate<T: Real>(gh: &GaussHermite<T>, vx: T, vy: T, c: T, f: impl Fn(T) -> T, g: impl Fn(T) -> T) -> T {
    let sx = vx.max(T::zero()).sqrt();
    let sy = vy.max(T::zero()).sqrt();
    if sx == T::zero() || sy == T::zero() {
        return gh.expect(T::zero(), sx, &f) * gh.expect(T::zero(), sy, &g);
    }
    let rho = (c / (sx * sy)).max(-T::one()).min(T::one());
    let perp = (T::one() - rho * rho).max(T::zero()).sqrt();
    let mut acc = T::zero();
    for (&u, &wu) in gh.nodes.iter().zip(&gh.weights) {
        let fx = f(sx * u);
        let inner = gh.expect(sy * rho * u, sy * perp, &g);
        acc += wu * fx * inner;
    }
    acc
}

/// Quadrature state evolution for schedules whose `f_k` depends on `x^k` only.
///
/// `Q` is exact up to quadrature error; samples for [`StateEvolution::expect`] are
/// still drawn (with `mc_samples` draws) from the resulting Gaussian law.
pub fn state_evolution_quadrature<T: Real, S: Schedule<T> + ?Sized>(
    schedule: &S,
    law: &InitLaw,
    steps: usize,
    mc_samples: usize,
    seed: &Seed,
) -> Result<StateEvolution<T>> {
    if !schedule.latest_only() {
        return Err(Error::Unsupported("quadrature state evolution needs f_k to depend on x^k only".into()));
    }
    if mc_samples == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let gh = GaussHermite::<T>::new(SE_GH_ORDER)?;
    let f = |k: usize| {
        move |x: T| {
            let mut xs = vec![T::zero(); k + 1];
            xs[k] = x;
            schedule.eval(k, &xs, T::zero())
        }
    };
    let mut q = vec![vec![T::zero(); steps]; steps];
    let mut chol = Cholesky { rows: Vec::new() };
    let mean0 = if steps > 0 { law.x0.expect(&gh, f(0)) } else { T::zero() };
    for k in 0..steps {
        let mut c = vec![T::zero(); k + 1];
        for j in 0..=k {
            let v = match (k, j) {
                (0, 0) => law.x0.expect(&gh, |x| f(0)(x) * f(0)(x)),
                (_, 0) => gh.expect(T::zero(), q[k - 1][k - 1].max(T::zero()).sqrt(), f(k)) * mean0,
                _ => bivariate(&gh, q[k - 1][k - 1], q[j - 1][j - 1], q[k - 1][j - 1], f(k), f(j)),
            };
            q[k][j] = v;
            q[j][k] = v;
            c[j] = v;
        }
        chol.push(&c)?;
    }
    let (x0, z, g) = base_draws::<T>(law, steps, mc_samples, seed);
    let mut xs = vec![x0];
    for k in 0..steps {
        xs.push(combine(&chol.rows[k], &g[..=k]));
    }
    Ok(StateEvolution {
        q,
        stderr: vec![vec![T::zero(); steps]; steps],
        law: *law,
        method: SeMethod::Quadrature,
        mc_samples,
        samples: xs,
        z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amp::Separable;

    #[test]
    fn identity_has_unit_first_variance() {
        let se = state_evolution_quadrature(&Separable::<f64>::identity(), &InitLaw::default(), 3, 10, &Seed::new(0, "se"))
            .unwrap();
        for k in 0..3 {
            assert!((se.q[k][k] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut c = Cholesky::<f64> { rows: Vec::new() };
        c.push(&[1.0]).unwrap();
        let err = c.push(&[2.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::NumericInstability(m) if m.contains("2x2")));
    }
}
