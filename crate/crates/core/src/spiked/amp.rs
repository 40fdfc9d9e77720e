use serde::Serialize;

use super::scalar::{overlap_of, Denoiser, ScalarChannel};
use crate::amp::{amp_run, AmpOptions, Schedule};
use crate::ensembles::{Seed, SpikedInstance};
use crate::error::{Error, Result};
use crate::scalar::{dot, Real};

#[derive(Debug, Clone)]
pub struct BayesAmpOptions {
    pub steps: usize,
    /// Power-iteration budget for the spectral start of centered priors.
    pub power_steps: usize,
    /// Replaces every denoiser `h` by `h + ε h³` (used to probe local optimality).
    pub perturbation: f64,
}

impl Default for BayesAmpOptions {
    fn default() -> Self {
        Self { steps: 30, power_steps: 200, perturbation: 0.0 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BayesAmpResult {
    /// Final iterate `θ^K`.
    pub theta_hat: Vec<f64>,
    /// Posterior-mean estimate `h_K(θ^K)`.
    pub estimate: Vec<f64>,
    /// `|⟨θ*, θ^k⟩| / (‖θ*‖ ‖θ^k‖)` for `k = 1..=K`.
    pub overlaps: Vec<f64>,
    /// State-evolution prediction `√(γ_k/(1+γ_k))` for the same steps.
    pub predicted: Vec<f64>,
    pub gammas: Vec<f64>,
    pub spectral_start: bool,
}

pub fn overlap<T: Real>(a: &[T], b: &[T]) -> f64 {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == T::zero() || nb == T::zero() {
        return 0.0;
    }
    (dot(a, b) / (na * nb)).abs().to_f64_lossy()
}

/// SNR assumed for a spectral start below the spectral threshold.
const WEAK_GAMMA: f64 = 1e-6;

/// Per-step Bayes denoisers; `None` means no information (`h ≡ E Θ*`).
struct BayesSchedule {
    first: Option<f64>,
    denoisers: Vec<Option<Denoiser>>,
    prior_mean: f64,
    eps: f64,
}

impl<T: Real> Schedule<T> for BayesSchedule {
    fn eval(&self, k: usize, xs: &[T], _z: T) -> T {
        if k == 0 {
            if let Some(c) = self.first {
                return T::lit(c);
            }
        }
        let y = xs[k].to_f64_lossy();
        let v = match &self.denoisers[k] {
            Some(h) => {
                let v = h.eval(y);
                v + self.eps * v * v * v
            }
            None => self.prior_mean,
        };
        T::lit(v)
    }

    fn partial(&self, k: usize, j: usize, xs: &[T], _z: T) -> Option<T> {
        if j != k || (k == 0 && self.first.is_some()) {
            return Some(T::zero());
        }
        let y = xs[k].to_f64_lossy();
        Some(T::lit(match &self.denoisers[k] {
            Some(h) => {
                let v = h.eval(y);
                h.derivative(y) * (1.0 + 3.0 * self.eps * v * v)
            }
            None => 0.0,
        }))
    }

    fn latest_only(&self) -> bool {
        true
    }

    fn len(&self) -> Option<usize> {
        Some(self.denoisers.len())
    }
}

fn denoiser_for(prior: crate::ensembles::PriorSpec, gamma: f64, lambda: f64) -> Result<Option<Denoiser>> {
    if !(gamma > 1e-300) || !(lambda > 0.0) {
        return Ok(None);
    }
    let (mu, tau) = (gamma / lambda, gamma.sqrt() / lambda);
    Denoiser::new(prior, mu, tau).map(Some)
}

/// Bayes-optimal AMP on `Y = (λ/n)θ*θ*ᵀ + A`.
///
/// Non-centered priors start from the constant `E Θ*` and `γ_1 = λ²(EΘ*)²`.
/// Centered priors start from `√n v`, `v` the top eigenvector of `Y`, modelled as
/// `μ₀θ* + τ₀G` with `μ₀² = 1 − λ⁻²`, `τ₀² = λ⁻²`; the first step then carries the
/// correction `b̂₀ x⁰/λ` that makes the eigenvector a fixed point of linear AMP.
/// The denoiser parameters follow the scalar recursion `γ_{k+1} = λ²F(γ_k)`.
pub fn run_bayes_amp<T: Real>(instance: &SpikedInstance<T>, opts: &BayesAmpOptions) -> Result<BayesAmpResult> {
    let k_steps = opts.steps;
    if k_steps == 0 {
        return Err(Error::InvalidInput("Bayes AMP needs at least one step".into()));
    }
    let n = instance.y.n();
    let lambda = instance.lambda;
    let prior = instance.prior;
    let ch = ScalarChannel::new(prior)?;
    let m = prior.mean();
    let spectral = prior.is_centered();
    let mut denoisers = Vec::with_capacity(k_steps + 1);
    let mut gammas = Vec::with_capacity(k_steps + 1);
    let (x0, first, correct_first) = if spectral {
        let rng = Seed::new(0, "bayes-amp/spectral").rng();
        let start: Vec<T> = (0..n).map(|i| T::lit(rng.normal_at(i as u64))).collect();
        let p = instance.y.top_eigenvector(&start, opts.power_steps, T::lit(1e-9));
        let scale = T::from_usize_lossy(n).sqrt();
        let x0: Vec<T> = p.vector.iter().map(|&v| v * scale).collect();
        let supercritical = lambda > 1.0;
        let g0 = if supercritical { lambda * lambda - 1.0 } else { WEAK_GAMMA };
        gammas.push(g0);
        let h0 = if supercritical {
            let mu0 = (1.0 - 1.0 / (lambda * lambda)).sqrt();
            Some(Denoiser::new(prior, mu0, 1.0 / lambda)?)
        } else {
            // No usable spectral information: a weak linear start keeps the iterates nonzero.
            Some(Denoiser::new(prior, 1e-3, 1.0)?)
        };
        denoisers.push(h0);
        (x0, None, supercritical)
    } else {
        gammas.push(0.0);
        denoisers.push(None);
        (vec![T::zero(); n], Some(m), false)
    };
    let mut g = if spectral { lambda * lambda * ch.f(gammas[0]) } else { lambda * lambda * m * m };
    for _ in 1..=k_steps {
        gammas.push(g);
        denoisers.push(denoiser_for(prior, g, lambda)?);
        g = lambda * lambda * ch.f(g);
    }
    let sched = BayesSchedule { first, denoisers, prior_mean: m, eps: opts.perturbation };
    let z = vec![T::zero(); n];
    let traj = if correct_first {
        // First step by hand, then continue the engine from (x⁰, x¹).
        first_step_then_run(instance, &sched, &x0, lambda, k_steps)?
    } else {
        amp_run(&instance.y, &sched, &x0, &z, k_steps, &AmpOptions::default())?.x
    };
    let overlaps = traj[1..].iter().map(|x| overlap(&instance.theta, x)).collect();
    let predicted = gammas[1..].iter().map(|&g| overlap_of(g)).collect();
    let last = traj.last().expect("steps >= 1");
    let mut row = vec![T::zero(); k_steps + 1];
    let estimate = last
        .iter()
        .map(|&v| {
            row[k_steps] = v;
            sched.eval(k_steps, &row, T::zero()).to_f64_lossy()
        })
        .collect();
    Ok(BayesAmpResult {
        theta_hat: last.iter().map(|v| v.to_f64_lossy()).collect(),
        estimate,
        overlaps,
        predicted,
        gammas: gammas[1..].to_vec(),
        spectral_start: spectral,
    })
}

/// AMP whose first step subtracts `b̂₀ x⁰/λ` (spectral start).
fn first_step_then_run<T: Real>(
    instance: &SpikedInstance<T>,
    sched: &BayesSchedule,
    x0: &[T],
    lambda: f64,
    steps: usize,
) -> Result<Vec<Vec<T>>> {
    let n = x0.len();
    let nn = T::from_usize_lossy(n);
    let y = &instance.y;
    let lam = T::lit(lambda);
    let mut xs = vec![x0.to_vec()];
    // f_{-1} = x⁰/λ plays the role of the previous denoised iterate.
    let mut prev_f: Vec<T> = x0.iter().map(|&v| v / lam).collect();
    for k in 0..steps {
        let xk = &xs[k];
        let row = |i: usize| {
            let mut r = vec![T::zero(); k + 1];
            r[k] = xk[i];
            r
        };
        let f: Vec<T> = (0..n).map(|i| sched.eval(k, &row(i), T::zero())).collect();
        let b = (0..n)
            .map(|i| Schedule::<T>::partial(sched, k, k, &row(i), T::zero()).unwrap_or_else(T::zero))
            .fold(T::zero(), |a, v| a + v)
            / nn;
        let mut next = y.matvec(&f);
        for (o, &p) in next.iter_mut().zip(&prev_f) {
            *o -= b * p;
        }
        if let Some(i) = next.iter().position(|v| !v.is_finite()) {
            return Err(Error::Diverged { step: k + 1, reason: format!("non-finite entry at row {i}") });
        }
        prev_f = f;
        xs.push(next);
    }
    Ok(xs)
}
