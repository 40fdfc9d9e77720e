use rayon::prelude::*;

use super::schedule::{partial_derivative, DerivativeMethod, Schedule};
use crate::ensembles::SymmetricMatrix;
use crate::error::{Error, Result};
use crate::scalar::{block_sum, Real};

#[derive(Debug, Clone, Copy)]
pub struct AmpOptions {
    /// Subtract the Onsager term. Turning it off gives the naive power-type
    /// iteration used as a negative control.
    pub onsager: bool,
}

impl Default for AmpOptions {
    fn default() -> Self {
        Self { onsager: true }
    }
}

#[derive(Debug, Clone)]
pub struct AmpTrajectory<T> {
    /// `x⁰ … x^K`.
    pub x: Vec<Vec<T>>,
    pub z: Vec<T>,
    /// `b[k][j-1] = b̂_{k,j}` for `j = 1..=k`; `b[0]` is empty.
    pub b: Vec<Vec<T>>,
    /// How the coefficients of row `k` were computed.
    pub methods: Vec<DerivativeMethod>,
}

impl<T: Real> AmpTrajectory<T> {
    pub fn n(&self) -> usize {
        self.z.len()
    }

    pub fn steps(&self) -> usize {
        self.x.len() - 1
    }

    /// `⟨x^j, x^k⟩ / n`.
    pub fn gram(&self, j: usize, k: usize) -> T {
        crate::scalar::dot(&self.x[j], &self.x[k]) / T::from_usize_lossy(self.n())
    }

    /// The iterates `x⁰ … x^k` at coordinate `i`.
    pub fn row(&self, i: usize, k: usize) -> Vec<T> {
        (0..=k).map(|l| self.x[l][i]).collect()
    }
}

/// Values `f_k(x^{≤k}_i; z_i)` and, when `k ≥ 1`, the Onsager row `b̂_{k,1..k}`.
fn step_values<T: Real, S: Schedule<T> + ?Sized>(
    s: &S,
    x: &[Vec<T>],
    z: &[T],
    k: usize,
    want_b: bool,
) -> (Vec<T>, Vec<T>, DerivativeMethod) {
    let n = z.len();
    let per_row: Vec<(T, Vec<T>, bool)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xs: Vec<T> = (0..=k).map(|l| x[l][i]).collect();
            let f = s.eval(k, &xs, z[i]);
            let mut fd = false;
            let d = if want_b {
                (1..=k)
                    .map(|j| {
                        let (v, m) = partial_derivative(s, k, j, &xs, z[i]);
                        fd |= m == DerivativeMethod::FiniteDifference;
                        v
                    })
                    .collect()
            } else {
                Vec::new()
            };
            (f, d, fd)
        })
        .collect();
    let f: Vec<T> = per_row.iter().map(|r| r.0).collect();
    let nn = T::from_usize_lossy(n);
    let b = if want_b {
        (0..k)
            .map(|j| block_sum(&per_row.iter().map(|r| r.1[j]).collect::<Vec<_>>()) / nn)
            .collect()
    } else {
        Vec::new()
    };
    let method = if per_row.iter().any(|r| r.2) {
        DerivativeMethod::FiniteDifference
    } else {
        DerivativeMethod::Analytic
    };
    (f, b, method)
}

/// `b̂_{k,j} = (1/n) Σ_i ∂_j f_k(x^{≤k}_i; z_i)` for `j = 1..=k`.
pub fn onsager<T: Real, S: Schedule<T> + ?Sized>(
    schedule: &S,
    traj: &AmpTrajectory<T>,
    k: usize,
) -> Result<(Vec<T>, DerivativeMethod)> {
    if k >= traj.x.len() {
        return Err(Error::InvalidInput(format!(
            "trajectory has {} iterates, step {k} requested",
            traj.x.len()
        )));
    }
    let (_, b, m) = step_values(schedule, &traj.x, &traj.z, k, true);
    Ok((b, m))
}

/// Runs `K` AMP steps on the symmetric matrix `a`:
///
/// `x^{k+1} = A f_k(x^{≤k}; z) − Σ_{j=1}^{k} b̂_{k,j} f_{j−1}(x^{≤j−1}; z)`.
///
/// There is no correction at `k = 0` since `x⁰` is independent of `A`.
pub fn amp_run<T: Real, S: Schedule<T> + ?Sized>(
    a: &SymmetricMatrix<T>,
    schedule: &S,
    x0: &[T],
    z: &[T],
    steps: usize,
    opts: &AmpOptions,
) -> Result<AmpTrajectory<T>> {
    let n = a.n();
    if x0.len() != n || z.len() != n {
        return Err(Error::InvalidDimension(format!(
            "matrix is {n}x{n}, x0 has {} entries, z has {}",
            x0.len(),
            z.len()
        )));
    }
    if let Some(len) = schedule.len() {
        if len < steps {
            return Err(Error::InvalidInput(format!("schedule defines {len} steps, {steps} requested")));
        }
    }
    let mut x = vec![x0.to_vec()];
    let mut fs: Vec<Vec<T>> = Vec::with_capacity(steps);
    let mut b = Vec::with_capacity(steps + 1);
    let mut methods = Vec::with_capacity(steps + 1);
    for k in 0..steps {
        let (f, bk, method) = step_values(schedule, &x, z, k, opts.onsager && k > 0);
        let mut next = a.matvec(&f);
        if opts.onsager {
            for (j, &c) in bk.iter().enumerate() {
                for (o, &p) in next.iter_mut().zip(&fs[j]) {
                    *o -= c * p;
                }
            }
        }
        if let Some(i) = next.iter().position(|v| !v.is_finite()) {
            return Err(Error::Diverged { step: k + 1, reason: format!("non-finite entry at row {i}") });
        }
        fs.push(f);
        b.push(bk);
        methods.push(method);
        x.push(next);
    }
    // Final row of coefficients, recorded for completeness.
    if steps > 0 {
        let (_, bk, method) = step_values(schedule, &x, z, steps, true);
        b.push(bk);
        methods.push(method);
    } else {
        b.push(Vec::new());
        methods.push(DerivativeMethod::Analytic);
    }
    Ok(AmpTrajectory { x, z: z.to_vec(), b, methods })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amp::Separable;
    use crate::ensembles::{sample_goe, Seed};

    #[test]
    fn zero_schedule_gives_zero_iterates() {
        let a = sample_goe::<f64>(50, &Seed::new(1, "amp")).unwrap();
        let x0: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let t = amp_run(&a, &Separable::zero(), &x0, &vec![0.0; 50], 4, &AmpOptions::default()).unwrap();
        for k in 1..=4 {
            assert!(t.x[k].iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn linear_schedule_has_constant_onsager() {
        let a = sample_goe::<f64>(40, &Seed::new(2, "amp")).unwrap();
        let x0 = vec![1.0; 40];
        let t = amp_run(&a, &Separable::linear(0.7), &x0, &vec![0.0; 40], 3, &AmpOptions::default()).unwrap();
        for k in 1..=3 {
            for j in 1..k {
                assert_eq!(t.b[k][j - 1], 0.0);
            }
            assert!((t.b[k][k - 1] - 0.7).abs() < 1e-15);
        }
    }
}
