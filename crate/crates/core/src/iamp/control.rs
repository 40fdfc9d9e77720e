use crate::ensembles::Seed;
use crate::error::{Error, Result};
use crate::hamiltonian::MixingPolynomial;
use crate::parisi::{solve_pde, Boundary, GridParams, ParisiSolution, RSBProfile};
use crate::scalar::Real;

/// Control `U_t = u(t, X_t)` driving the incremental AMP, with drift `v(t, x)` for
/// the auxiliary process `dX = v dt + dZ`.
#[derive(Debug, Clone)]
pub enum ControlField<T> {
    /// `u(t) = 1/√ξ″(t)`, `v ≡ 0`.
    Spherical { mixing: MixingPolynomial, delta: T },
    /// `u = ∂ₓₓΦ`, `v = ξ″ γ ∂ₓΦ` from an Ising Parisi solution.
    Ising { solution: Box<ParisiSolution<T>>, delta: T },
}

fn check_delta<T: Real>(delta: T) -> Result<usize> {
    let steps = (T::one() / delta).round();
    let count = steps.to_usize().unwrap_or(0);
    if !(delta > T::zero()) || count < 2 || ((steps * delta) - T::one()).abs() > T::lit(1e-9) {
        return Err(Error::InvalidInput(format!("time step {delta} must be 1/T for an integer T >= 2")));
    }
    Ok(count)
}

impl<T: Real> ControlField<T> {
    pub fn spherical(mixing: &MixingPolynomial, delta: T) -> Result<Self> {
        check_delta(delta)?;
        Ok(Self::Spherical { mixing: mixing.clone(), delta })
    }

    /// Wraps an Ising solution; it is re-solved with slices added at every
    /// multiple of `delta` when those are missing.
    pub fn ising(solution: &ParisiSolution<T>, delta: T) -> Result<Self> {
        if !matches!(solution.boundary, Boundary::Ising) {
            return Err(Error::Unsupported("control export needs an Ising-boundary solution".into()));
        }
        let steps = check_delta(delta)?;
        let times: Vec<T> = (0..=steps).map(|l| T::from_usize_lossy(l) * delta).collect();
        let missing = times.iter().any(|&t| solution.slice_index(t).is_none());
        let solution = if missing {
            let m = solution.x.len() - 1;
            let grid = GridParams {
                half_width: Some(solution.half_width),
                nodes: m,
                extra_times: times,
                ..GridParams::default()
            };
            solve_pde(&solution.profile, &solution.mixing, Boundary::Ising, &grid)?
        } else {
            solution.clone()
        };
        Ok(Self::Ising { solution: Box::new(solution), delta })
    }

    /// Solves the Ising PDE for `profile` with slices on the `delta` grid.
    pub fn ising_from_profile(
        profile: &RSBProfile<T>,
        mixing: &MixingPolynomial,
        delta: T,
        grid: &GridParams<T>,
    ) -> Result<Self> {
        let steps = check_delta(delta)?;
        let mut g = grid.clone();
        g.extra_times = (0..=steps).map(|l| T::from_usize_lossy(l) * delta).collect();
        let solution = solve_pde(profile, mixing, Boundary::Ising, &g)?;
        Ok(Self::Ising { solution: Box::new(solution), delta })
    }

    pub fn delta(&self) -> T {
        match self {
            Self::Spherical { delta, .. } | Self::Ising { delta, .. } => *delta,
        }
    }

    pub fn steps(&self) -> usize {
        check_delta(self.delta()).expect("validated at construction")
    }

    pub fn mixing(&self) -> &MixingPolynomial {
        match self {
            Self::Spherical { mixing, .. } => mixing,
            Self::Ising { solution, .. } => &solution.mixing,
        }
    }

    pub fn is_spherical(&self) -> bool {
        matches!(self, Self::Spherical { .. })
    }

    /// `u(t, x)`.
    pub fn u(&self, t: T, x: T) -> T {
        match self {
            Self::Spherical { mixing, .. } => T::one() / mixing.derivative::<T>(2, t).sqrt(),
            Self::Ising { solution, .. } => solution.eval(t, x).2.max(T::zero()),
        }
    }

    /// `(u, ∂ₓu, v, ∂ₓv)` at `(t, x)`.
    pub fn eval(&self, t: T, x: T) -> (T, T, T, T) {
        match self {
            Self::Spherical { .. } => (self.u(t, x), T::zero(), T::zero(), T::zero()),
            Self::Ising { solution, .. } => {
                let h = solution.x[1] - solution.x[0];
                let (_, p1, p2) = solution.eval(t, x);
                let up = solution.eval(t, x + h).2;
                let um = solution.eval(t, x - h).2;
                let c = solution.mixing.derivative::<T>(2, t) * solution.profile.gamma_at(t);
                (p2.max(T::zero()), (up - um) / (h + h), c * p1, c * p2)
            }
        }
    }

    /// Discrete spherical weight for the increment `z^{ℓ+1} − z^ℓ`:
    /// `√(δ / (ξ′((ℓ+1)δ) − ξ′(ℓδ)))`, so each increment has squared norm `δ`.
    pub fn spherical_weight(&self, l: usize) -> T {
        let delta = self.delta();
        let mixing = self.mixing();
        let a = T::from_usize_lossy(l) * delta;
        let b = a + delta;
        (delta / (mixing.derivative::<T>(1, b) - mixing.derivative::<T>(1, a))).sqrt()
    }

    /// Starting point `x₀ > 0` of the auxiliary process at time `δ` with
    /// `∂ₓΦ(δ, x₀) = √δ`, so that `m⁰ = ∂ₓΦ(δ, ±x₀)` has `E (m⁰)² = δ`.
    pub fn ising_start(&self) -> T {
        match self {
            Self::Spherical { .. } => T::zero(),
            Self::Ising { solution, delta } => {
                let target = delta.sqrt();
                let (mut lo, mut hi) = (T::zero(), solution.half_width);
                for _ in 0..200 {
                    let mid = (lo + hi) * T::lit(0.5);
                    if solution.eval(*delta, mid).1 < target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                (lo + hi) * T::lit(0.5)
            }
        }
    }
}

/// Path statistics of the driven process `dX = v dt + √ξ″ dB` under a control.
#[derive(Debug, Clone)]
pub struct ControlDiagnostics<T> {
    pub times: Vec<T>,
    /// `ξ″(t) E[u(t, X_t)²]` on the time grid.
    pub constraint: Vec<T>,
    /// `V(U) = ∫ ξ″(t) E[u(t, X_t)] dt` (left Riemann sum).
    pub value: T,
}

/// Simulates `paths` trajectories of the auxiliary SDE on the control's time
/// grid, refined `substeps` times, starting from `X_0 = 0`.
pub fn control_diagnostics<T: Real>(
    control: &ControlField<T>,
    paths: usize,
    substeps: usize,
    seed: &Seed,
) -> Result<ControlDiagnostics<T>> {
    if paths < 2 {
        return Err(Error::InvalidInput("need at least two paths".into()));
    }
    let steps = control.steps() * substeps.max(1);
    let dt = T::one() / T::from_usize_lossy(steps);
    let mixing = control.mixing();
    let rng = seed.rng();
    let mut x = vec![T::zero(); paths];
    let mut times = Vec::with_capacity(steps);
    let mut constraint = Vec::with_capacity(steps);
    let mut value = T::zero();
    let np = T::from_usize_lossy(paths);
    for l in 0..steps {
        let t = T::from_usize_lossy(l) * dt;
        let t1 = t + dt;
        let x2 = mixing.derivative::<T>(2, t);
        let sd = (mixing.derivative::<T>(1, t1) - mixing.derivative::<T>(1, t)).sqrt();
        let (mut su, mut su2) = (T::zero(), T::zero());
        for (p, xp) in x.iter_mut().enumerate() {
            let (u, _, v, _) = control.eval(t, *xp);
            if u.is_finite() {
                su += u;
                su2 += u * u;
            }
            *xp += v * dt + sd * T::lit(rng.normal_at((l * paths + p) as u64));
        }
        times.push(t);
        if l > 0 || x2 > T::zero() {
            constraint.push(x2 * su2 / np);
            value += x2 * su / np * dt;
        } else {
            constraint.push(T::one());
        }
    }
    Ok(ControlDiagnostics { times, constraint, value })
}
