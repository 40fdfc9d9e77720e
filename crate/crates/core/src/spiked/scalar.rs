use std::io::Write;

use serde::Serialize;

use crate::ensembles::PriorSpec;
use crate::error::{Error, Result};
use crate::numerics::{adaptive_simpson, bisect, golden_section, normal_pdf, GaussHermite};

/// Gauss–Hermite order for expectations over continuous priors.
pub const SCALAR_GH_ORDER: usize = 128;
const NOISE_CUTOFF: f64 = 12.0;
const NOISE_TOL: f64 = 1e-13;

/// Posterior mean `h(y) = E{Θ | μΘ + τG = y}` for a fixed prior.
#[derive(Debug, Clone)]
pub struct Denoiser {
    prior: PriorSpec,
    mu: f64,
    tau: f64,
    /// Prior nodes and weights used for continuous priors in quadrature mode.
    nodes: Option<Vec<(f64, f64)>>,
}

impl Denoiser {
    /// Closed form: finite sums for discrete priors, the linear rule for Gaussian.
    pub fn new(prior: PriorSpec, mu: f64, tau: f64) -> Result<Self> {
        prior.validate()?;
        if !(tau > 0.0) || !mu.is_finite() || !tau.is_finite() {
            return Err(Error::InvalidInput(format!("denoiser needs tau > 0, got mu={mu}, tau={tau}")));
        }
        Ok(Self { prior, mu, tau, nodes: None })
    }

    /// Ratio-of-moments form with the prior integrated by Gauss–Hermite
    /// (only differs from [`Denoiser::new`] for the Gaussian prior).
    pub fn quadrature(prior: PriorSpec, mu: f64, tau: f64, order: usize) -> Result<Self> {
        let mut d = Self::new(prior, mu, tau)?;
        d.nodes = Some(match prior.atoms() {
            Some(a) => a,
            None => {
                let gh = GaussHermite::<f64>::new(order)?;
                gh.nodes.iter().copied().zip(gh.weights.iter().copied()).collect()
            }
        });
        Ok(d)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Posterior mean and variance of `Θ` given `y`.
    pub fn posterior(&self, y: f64) -> (f64, f64) {
        let s2 = self.tau * self.tau;
        let atoms = match (&self.nodes, self.prior) {
            (Some(n), _) => n.clone(),
            (None, PriorSpec::Rademacher) => {
                let m = (self.mu * y / s2).tanh();
                return (m, 1.0 - m * m);
            }
            (None, PriorSpec::Gaussian) => {
                let d = self.mu * self.mu + s2;
                return (self.mu * y / d, s2 / d);
            }
            (None, p) => p.atoms().expect("discrete prior"),
        };
        let logw: Vec<f64> = atoms
            .iter()
            .map(|&(a, p)| p.ln() + (self.mu * y * a - 0.5 * self.mu * self.mu * a * a) / s2)
            .collect();
        let shift = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for (&(a, _), &l) in atoms.iter().zip(&logw) {
            let w = (l - shift).exp();
            z += w;
            m1 += w * a;
            m2 += w * a * a;
        }
        let m = m1 / z;
        (m, (m2 / z - m * m).max(0.0))
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.posterior(y).0
    }

    /// `h′(y) = (μ/τ²) Var(Θ | y)`.
    pub fn derivative(&self, y: f64) -> f64 {
        self.mu / (self.tau * self.tau) * self.posterior(y).1
    }

    /// Largest `|h′|` over a probe grid.
    pub fn lipschitz_on_grid(&self, lo: f64, hi: f64, points: usize) -> f64 {
        (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points.max(2) - 1) as f64)
            .map(|y| self.derivative(y).abs())
            .fold(0.0, f64::max)
    }
}

/// `E φ(G)` by adaptive Simpson on fixed unit panels of `[−12, 12]`; the panels
/// stop a coarse first estimate from being accepted when `φ` is small.
fn noise_expect(phi: impl Fn(f64) -> f64) -> f64 {
    let panels = (2.0 * NOISE_CUTOFF) as usize;
    let tol = NOISE_TOL / panels as f64;
    (0..panels)
        .map(|i| {
            let a = -NOISE_CUTOFF + i as f64;
            adaptive_simpson(|g| phi(g) * normal_pdf(g), a, a + 1.0, tol)
        })
        .sum()
}

/// The channel `Y = √γ Θ + G` with a fixed prior and quadrature rule.
#[derive(Debug, Clone)]
pub struct ScalarChannel {
    pub prior: PriorSpec,
    gh: GaussHermite<f64>,
}

impl ScalarChannel {
    pub fn new(prior: PriorSpec) -> Result<Self> {
        prior.validate()?;
        Ok(Self { prior, gh: GaussHermite::new(SCALAR_GH_ORDER)? })
    }

    /// `E_Θ E_G φ(Θ, G)`. Discrete priors are summed exactly and the noise is
    /// integrated adaptively: near `γ ≈ 10` the posterior mean has poles close to
    /// the real axis and a fixed Gauss–Hermite rule loses about six digits there.
    fn average(&self, phi: impl Fn(f64, f64) -> f64) -> f64 {
        match self.prior.atoms() {
            Some(atoms) => atoms
                .iter()
                .map(|&(a, p)| p * noise_expect(|g| phi(a, g)))
                .sum(),
            None => self.gh.expect(0.0, 1.0, |t| self.gh.expect(0.0, 1.0, |g| phi(t, g))),
        }
    }

    /// `F(γ) = E{E{Θ | √γΘ + G}²}`.
    pub fn f(&self, gamma: f64) -> f64 {
        if self.prior == PriorSpec::Gaussian {
            return gamma / (1.0 + gamma);
        }
        self.f_quadrature(gamma)
    }

    /// `F(γ)` by quadrature for every prior, including the Gaussian.
    pub fn f_quadrature(&self, gamma: f64) -> f64 {
        let gamma = gamma.max(0.0);
        let s = gamma.sqrt();
        let h = Denoiser::quadrature(self.prior, s, 1.0, SCALAR_GH_ORDER).expect("validated prior");
        self.average(|t, g| {
            let m = h.eval(s * t + g);
            m * m
        })
    }

    pub fn mmse(&self, gamma: f64) -> f64 {
        self.prior.second_moment() - self.f(gamma)
    }

    /// Mutual information `I(Θ; √γΘ + G)` in nats.
    pub fn mutual_information(&self, gamma: f64) -> f64 {
        let gamma = gamma.max(0.0);
        match self.prior.atoms() {
            None => 0.5 * gamma.ln_1p(),
            Some(atoms) => {
                let s = gamma.sqrt();
                let log_z = |y: f64| {
                    let l: Vec<f64> = atoms.iter().map(|&(a, p)| p.ln() + s * y * a - 0.5 * gamma * a * a).collect();
                    let m = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    m + l.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
                };
                0.5 * gamma * self.prior.second_moment() - self.average(|t, g| log_z(s * t + g))
            }
        }
    }
}

/// `F(γ)` for a prior (see [`ScalarChannel::f`]).
pub fn f_of_gamma(prior: &PriorSpec, gamma: f64) -> Result<f64> {
    Ok(ScalarChannel::new(*prior)?.f(gamma))
}

pub fn mutual_information(prior: &PriorSpec, gamma: f64) -> Result<f64> {
    Ok(ScalarChannel::new(*prior)?.mutual_information(gamma))
}

/// `Ψ(γ; b) = γ²/(4λ²) − γ/2 − bγ/2 + I(γ)`.
pub fn psi(prior: &PriorSpec, lambda: f64, gamma: f64, b: f64) -> Result<f64> {
    Ok(psi_with(&ScalarChannel::new(*prior)?, lambda, gamma, b))
}

fn psi_with(ch: &ScalarChannel, lambda: f64, gamma: f64, b: f64) -> f64 {
    gamma * gamma / (4.0 * lambda * lambda) - 0.5 * gamma - 0.5 * b * gamma + ch.mutual_information(gamma)
}

/// `(μ_k, τ_k, γ_k)`: the effective observation `μ_k Θ + τ_k G` after step `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalarChannelState {
    pub mu: f64,
    pub tau: f64,
    pub gamma: f64,
}

impl ScalarChannelState {
    pub fn from_gamma(gamma: f64, lambda: f64) -> Self {
        Self { mu: gamma / lambda, tau: gamma.sqrt() / lambda, gamma }
    }

    /// `√(γ/(1+γ))`.
    pub fn overlap(&self) -> f64 {
        overlap_of(self.gamma)
    }
}

pub fn overlap_of(gamma: f64) -> f64 {
    (gamma / (1.0 + gamma)).sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalarTrajectory {
    pub states: Vec<ScalarChannelState>,
    /// First `k` with `|γ_{k+1} − γ_k| < 10⁻¹⁰`.
    pub fixed_point_at: Option<usize>,
}

impl ScalarTrajectory {
    pub fn last(&self) -> &ScalarChannelState {
        self.states.last().expect("non-empty")
    }
}

/// `γ_{k+1} = λ² F(γ_k)` for `K` steps starting from `γ_0`.
pub fn se_scalar_recursion(prior: &PriorSpec, lambda: f64, steps: usize, gamma_init: f64) -> Result<ScalarTrajectory> {
    if !(lambda > 0.0) || !(gamma_init >= 0.0) {
        return Err(Error::InvalidInput(format!("need lambda > 0 and gamma_init >= 0, got {lambda}, {gamma_init}")));
    }
    let ch = ScalarChannel::new(*prior)?;
    recursion_with(&ch, lambda, steps, gamma_init)
}

fn recursion_with(ch: &ScalarChannel, lambda: f64, steps: usize, gamma_init: f64) -> Result<ScalarTrajectory> {
    let mut states = vec![ScalarChannelState::from_gamma(gamma_init, lambda)];
    let mut fixed_point_at = None;
    let mut g = gamma_init;
    for k in 0..steps {
        let next = lambda * lambda * ch.f(g);
        if fixed_point_at.is_none() && (next - g).abs() < 1e-10 {
            fixed_point_at = Some(k);
        }
        g = next;
        states.push(ScalarChannelState::from_gamma(g, lambda));
    }
    Ok(ScalarTrajectory { states, fixed_point_at })
}

/// Grid used to bracket sign changes of `λ²F(γ) − γ`.
const BRACKET_POINTS: usize = 400;
const GAMMA_FLOOR: f64 = 1e-8;

fn bracket_grid(hi: f64) -> Vec<f64> {
    let (a, b) = (GAMMA_FLOOR.ln(), hi.ln());
    (0..BRACKET_POINTS).map(|i| (a + (b - a) * i as f64 / (BRACKET_POINTS - 1) as f64).exp()).collect()
}

/// All sign changes of `λ²F(γ) − γ` on `[10⁻⁸, γ_max]`, refined by bisection.
fn fixed_points(ch: &ScalarChannel, lambda: f64, hi: f64) -> Vec<f64> {
    let g = |x: f64| lambda * lambda * ch.f(x) - x;
    let grid = bracket_grid(hi);
    let vals: Vec<f64> = grid.iter().map(|&x| g(x)).collect();
    let mut out = Vec::new();
    for i in 1..grid.len() {
        if (vals[i - 1] > 0.0) != (vals[i] > 0.0) {
            if let Some(r) = bisect(g, grid[i - 1], grid[i], 1e-13) {
                out.push(r);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Threshold {
    pub gamma: f64,
    pub rho: f64,
}

/// `γ_alg = inf{γ > 0 : λ²F(γ) < γ}`, with `ρ_alg = √(γ/(1+γ))`.
pub fn gamma_alg(prior: &PriorSpec, lambda: f64) -> Result<Threshold> {
    let ch = ScalarChannel::new(*prior)?;
    gamma_alg_with(&ch, lambda)
}

fn gamma_max(lambda: f64) -> f64 {
    f64::max(10.0, 4.0 * lambda * lambda)
}

fn gamma_alg_with(ch: &ScalarChannel, lambda: f64) -> Result<Threshold> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidInput(format!("lambda must be >= 0, got {lambda}")));
    }
    if lambda == 0.0 {
        return Ok(Threshold { gamma: 0.0, rho: 0.0 });
    }
    let g = |x: f64| lambda * lambda * ch.f(x) - x;
    let grid = bracket_grid(gamma_max(lambda));
    if g(grid[0]) < 0.0 {
        return Ok(Threshold { gamma: 0.0, rho: 0.0 });
    }
    for w in grid.windows(2) {
        if g(w[1]) < 0.0 {
            let r = bisect(g, w[0], w[1], 1e-13)
                .ok_or_else(|| Error::Indeterminate("lost the bracket of lambda^2 F(gamma) - gamma".into()))?;
            return Ok(Threshold { gamma: r, rho: overlap_of(r) });
        }
    }
    Err(Error::Indeterminate(format!(
        "lambda^2 F(gamma) >= gamma on the whole bracket [1e-8, {}]",
        gamma_max(lambda)
    )))
}

/// `γ_Bayes = argmin_γ Ψ(γ; 0)` over `[0, 4λ² + 10]`: golden section plus every
/// fixed point of `λ²F` (the critical points of `Ψ`) as candidates.
pub fn gamma_bayes(prior: &PriorSpec, lambda: f64) -> Result<Threshold> {
    let ch = ScalarChannel::new(*prior)?;
    gamma_bayes_with(&ch, lambda)
}

fn gamma_bayes_with(ch: &ScalarChannel, lambda: f64) -> Result<Threshold> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Ok(Threshold { gamma: 0.0, rho: 0.0 });
    }
    let hi = 4.0 * lambda * lambda + 10.0;
    let psi0 = |x: f64| psi_with(ch, lambda, x, 0.0);
    let mut best = (0.0, psi0(0.0));
    for x in fixed_points(ch, lambda, hi).into_iter().chain([hi]) {
        let v = psi0(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    // The golden-section point only wins if it beats every critical point outright.
    let (xg, vg) = golden_section(psi0, 0.0, hi, 1e-9);
    if vg < best.1 - 1e-10 {
        best = (xg, vg);
    }
    Ok(Threshold { gamma: best.0, rho: overlap_of(best.0) })
}

/// Fixed points of `γ ↦ λ²F(γ)` on `[10⁻⁸, 4λ² + 10]`.
pub fn se_fixed_points(prior: &PriorSpec, lambda: f64) -> Result<Vec<f64>> {
    let ch = ScalarChannel::new(*prior)?;
    Ok(fixed_points(&ch, lambda, 4.0 * lambda * lambda + 10.0))
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdRow {
    pub prior: String,
    pub lambda: f64,
    pub gamma_alg: f64,
    pub rho_alg: f64,
    pub gamma_bayes: f64,
    pub rho_bayes: f64,
}

/// Both thresholds over a grid of signal strengths.
pub fn threshold_table(prior: &PriorSpec, lambdas: &[f64]) -> Result<Vec<ThresholdRow>> {
    let ch = ScalarChannel::new(*prior)?;
    lambdas
        .iter()
        .map(|&l| {
            let a = gamma_alg_with(&ch, l)?;
            let b = gamma_bayes_with(&ch, l)?;
            Ok(ThresholdRow {
                prior: prior.to_string(),
                lambda: l,
                gamma_alg: a.gamma,
                rho_alg: a.rho,
                gamma_bayes: b.gamma,
                rho_bayes: b.rho,
            })
        })
        .collect()
}

pub fn write_threshold_csv<W: Write>(rows: &[ThresholdRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "prior,lambda,gamma_alg,rho_alg,gamma_bayes,rho_bayes")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{:.12e},{:.12e},{:.12e},{:.12e}",
            r.prior, r.lambda, r.gamma_alg, r.rho_alg, r.gamma_bayes, r.rho_bayes
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        let h = Denoiser::new(PriorSpec::Rademacher, 0.8, 0.5).unwrap();
        assert!((h.eval(0.3) - (0.8 * 0.3 / 0.25f64).tanh()).abs() < 1e-15);
        let g = Denoiser::new(PriorSpec::Gaussian, 0.8, 0.5).unwrap();
        assert!((g.eval(0.3) - 0.8 * 0.3 / (0.64 + 0.25)).abs() < 1e-15);
        let q = Denoiser::quadrature(PriorSpec::Gaussian, 0.8, 0.5, 128).unwrap();
        assert!((q.eval(0.3) - g.eval(0.3)).abs() < 1e-10);
        assert!(Denoiser::new(PriorSpec::Rademacher, 1.0, 0.0).is_err());
    }

    #[test]
    fn gaussian_f_by_quadrature() {
        let ch = ScalarChannel::new(PriorSpec::Gaussian).unwrap();
        for g in [0.0, 0.3, 1.0, 3.0, 9.0] {
            assert!((ch.f_quadrature(g) - g / (1.0 + g)).abs() < 1e-8, "{g}");
        }
    }
}
