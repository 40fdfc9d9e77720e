use serde::Serialize;

use crate::ensembles::Seed;
use crate::error::{Error, Result};
use crate::hamiltonian::MixingPolynomial;
use crate::numerics::{adaptive_simpson, nelder_mead, NelderMeadOptions};
use crate::parisi::{functional, spherical_functional_exact, Boundary, GridParams, ParisiValue, RSBProfile};
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct MinimizeOptions<T> {
    /// Nelder–Mead runs; the first starts from the default (or warm) start, later
    /// ones from a seeded perturbation of the best point so far.
    pub restarts: usize,
    /// Evaluation budget per run.
    pub max_evals: usize,
    pub f_tol: T,
    pub x_tol: T,
    pub seed: u64,
    /// Profile with at most `K` levels to start the first run from.
    pub warm_start: Option<RSBProfile<T>>,
}

impl<T: Real> Default for MinimizeOptions<T> {
    fn default() -> Self {
        Self { restarts: 5, max_evals: 2000, f_tol: T::lit(1e-10), x_tol: T::lit(1e-7), seed: 0, warm_start: None }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ParisiFit<T> {
    pub profile: RSBProfile<T>,
    pub boundary: Boundary,
    pub value: ParisiValue<T>,
    /// False when some run hit its budget before meeting the tolerances.
    pub converged: bool,
    pub evals: usize,
    /// Best value after each run.
    pub history: Vec<T>,
}

/// Breakpoints from `K - 1` free logits (the last logit is pinned to 0).
fn breakpoints<T: Real>(q: &[T]) -> Vec<T> {
    let mut logits = q.to_vec();
    logits.push(T::zero());
    let top = logits.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
    let w: Vec<T> = logits.iter().map(|&l| (l - top).exp()).collect();
    let total: T = w.iter().copied().sum();
    let mut ts = vec![T::zero()];
    let mut acc = T::zero();
    for wi in &w[..w.len() - 1] {
        acc += *wi / total;
        ts.push(acc);
    }
    ts.push(T::one());
    ts
}

fn logits<T: Real>(profile: &RSBProfile<T>) -> Vec<T> {
    let bp = profile.breakpoints();
    let k = profile.levels();
    let last = bp[k] - bp[k - 1];
    (0..k - 1).map(|i| ((bp[i + 1] - bp[i]) / last).ln()).collect()
}

fn decode_ising<T: Real>(p: &[T], k: usize) -> Result<RSBProfile<T>> {
    let mut acc = T::zero();
    let values = p[..k]
        .iter()
        .map(|&v| {
            acc += v * v;
            acc
        })
        .collect();
    RSBProfile::new(breakpoints(&p[k..]), values)
}

fn encode_ising<T: Real>(profile: &RSBProfile<T>) -> Vec<T> {
    let mut prev = T::zero();
    let mut p: Vec<T> = profile
        .values()
        .iter()
        .map(|&g| {
            let v = (g - prev).max(T::zero()).sqrt();
            prev = g;
            v
        })
        .collect();
    p.extend(logits(profile));
    p
}

fn decode_spherical<T: Real>(p: &[T], k: usize) -> Result<(RSBProfile<T>, f64)> {
    let values = p[..k].iter().map(|&v| v * v).collect();
    let profile = RSBProfile::unrestricted(breakpoints(&p[k..2 * k - 1]), values)?;
    Ok((profile, p[2 * k - 1].exp().to_f64_lossy()))
}

fn encode_spherical<T: Real>(profile: &RSBProfile<T>, multiplier: f64) -> Vec<T> {
    let mut p: Vec<T> = profile.values().iter().map(|g| g.sqrt()).collect();
    p.extend(logits(profile));
    p.push(T::lit(multiplier.ln()));
    p
}

/// Splits the last interval of `profile` until it has `k` levels.
fn embed<T: Real>(profile: &RSBProfile<T>, k: usize) -> Result<RSBProfile<T>> {
    let mut bp = profile.breakpoints().to_vec();
    let mut vals = profile.values().to_vec();
    if vals.len() > k {
        return Err(Error::InvalidInput(format!("warm start has {} > {k} levels", vals.len())));
    }
    while vals.len() < k {
        let n = bp.len();
        let mid = (bp[n - 2] + bp[n - 1]) * T::lit(0.5);
        bp.insert(n - 1, mid);
        vals.push(*vals.last().expect("nonempty"));
    }
    RSBProfile::unrestricted(bp, vals)
}

fn default_ising<T: Real>(k: usize) -> RSBProfile<T> {
    let values = (0..k)
        .map(|i| {
            let frac = if k == 1 { 0.0 } else { i as f64 / (k - 1) as f64 };
            T::lit(0.5 + 3.5 * frac)
        })
        .collect();
    let bp = (0..=k).map(|i| T::from_usize_lossy(i) / T::from_usize_lossy(k)).collect();
    RSBProfile::new(bp, values).expect("valid default profile")
}

/// Geometric breakpoints refined toward 0 and `γ` chosen so that `D(t_i)` matches
/// `√ξ″(t_i)`, the exact optimizer's curvature.
fn default_spherical<T: Real>(mixing: &MixingPolynomial, k: usize) -> (RSBProfile<T>, f64) {
    let bp: Vec<T> = std::iter::once(T::zero())
        .chain((0..k).map(|i| T::lit(0.5f64.powi((k - 1 - i) as i32))))
        .collect();
    let root = |t: T| mixing.derivative::<T>(2, t).max(T::zero()).sqrt();
    let values = (0..k)
        .map(|i| {
            let dxi = mixing.derivative::<T>(1, bp[i + 1]) - mixing.derivative::<T>(1, bp[i]);
            let secant = ((root(bp[i + 1]) - root(bp[i])) / dxi).max(T::zero());
            if i == 0 { secant * T::lit(0.5) } else { secant }
        })
        .collect();
    let profile = RSBProfile::unrestricted(bp, values).expect("valid default profile");
    (profile, root(T::one()).to_f64_lossy().max(0.1))
}

/// Minimizes `P(γ; ξ)` over `K`-level step profiles by Nelder–Mead.
///
/// Ising: values are cumulative sums of squares (monotone by construction).
/// Spherical: values are free squares together with the boundary multiplier; the
/// search evaluates the exact quadratic solution, and the returned value comes
/// from the numerical PDE at the optimum.
pub fn minimize<T: Real>(
    mixing: &MixingPolynomial,
    boundary: Boundary,
    k: usize,
    grid: &GridParams<T>,
    opts: &MinimizeOptions<T>,
) -> Result<ParisiFit<T>> {
    if !(1..=8).contains(&k) {
        return Err(Error::InvalidInput(format!("RSB levels {k} outside 1..=8")));
    }
    let spherical = matches!(boundary, Boundary::Spherical { .. });
    let big = T::lit(1e10);
    let objective = |p: &[T]| -> T {
        let r = if spherical {
            decode_spherical(p, k).and_then(|(prof, l)| spherical_functional_exact(&prof, mixing, l))
        } else {
            decode_ising(p, k).and_then(|prof| functional(&prof, mixing, boundary, grid))
        };
        r.map(|v| v.value).unwrap_or(big)
    };
    let x0 = match (&opts.warm_start, spherical) {
        (Some(w), false) => encode_ising(&embed(w, k)?),
        (Some(w), true) => {
            let l = match boundary {
                Boundary::Spherical { multiplier } => multiplier,
                Boundary::Ising => 1.0,
            };
            encode_spherical(&embed(w, k)?, l)
        }
        (None, false) => encode_ising(&default_ising::<T>(k)),
        (None, true) => {
            let (p, l) = default_spherical::<T>(mixing, k);
            encode_spherical(&p, l)
        }
    };
    let budget = if spherical { opts.max_evals * 25 } else { opts.max_evals };
    let nm = NelderMeadOptions { max_evals: budget, f_tol: opts.f_tol, x_tol: opts.x_tol, initial_step: T::lit(0.25) };
    let rng = Seed::new(opts.seed, "parisi/restarts").rng();
    let mut best_x = x0.clone();
    let mut best_v = objective(&x0);
    let mut evals = 1;
    let mut converged = true;
    let mut history = Vec::new();
    let runs = if spherical { 4 * opts.restarts.max(1) } else { opts.restarts.max(1) };
    for r in 0..runs {
        // Odd runs restart the simplex at the incumbent; even runs perturb it.
        let start: Vec<T> = if r % 2 == 1 || r == 0 {
            best_x.clone()
        } else {
            best_x
                .iter()
                .enumerate()
                .map(|(j, &v)| v + T::lit(0.1 * rng.normal_at((r * 1000 + j) as u64)))
                .collect()
        };
        let res = nelder_mead(objective, &start, &nm);
        evals += res.evals;
        if res.value < best_v {
            best_v = res.value;
            best_x = res.x;
            converged = res.converged;
        } else if r == 0 {
            converged = res.converged;
        }
        history.push(best_v);
    }
    if !(best_v < big) {
        return Err(Error::NumericInstability("no feasible profile found".into()));
    }
    let (profile, boundary) = if spherical {
        let (p, l) = decode_spherical(&best_x, k)?;
        (p, Boundary::Spherical { multiplier: l })
    } else {
        (decode_ising(&best_x, k)?, Boundary::Ising)
    };
    let value = functional(&profile, mixing, boundary, grid)?;
    Ok(ParisiFit { profile, boundary, value, converged, evals, history })
}

/// `∫₀¹ √ξ″(t) dt` by adaptive Simpson quadrature (absolute tolerance `1e-9`).
pub fn spherical_value<T: Real>(mixing: &MixingPolynomial) -> T {
    adaptive_simpson(
        |t: T| mixing.derivative::<T>(2, t).max(T::zero()).sqrt(),
        T::zero(),
        T::one(),
        T::lit(1e-9),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encodings_roundtrip() {
        let p = RSBProfile::<f64>::new(vec![0.0, 0.2, 0.7, 1.0], vec![0.1, 0.5, 2.0]).unwrap();
        let back = decode_ising(&encode_ising(&p), 3).unwrap();
        for (a, b) in back.values().iter().zip(p.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in back.breakpoints().iter().zip(p.breakpoints()) {
            assert!((a - b).abs() < 1e-12);
        }
        let (q, l) = decode_spherical(&encode_spherical(&p, 1.7), 3).unwrap();
        assert!((l - 1.7).abs() < 1e-12);
        assert!((q.values()[2] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn embedding_preserves_the_function() {
        let p = RSBProfile::new(vec![0.0, 0.4, 1.0], vec![0.3, 1.0]).unwrap();
        let e = embed(&p, 4).unwrap();
        assert_eq!(e.levels(), 4);
        for t in [0.0, 0.3, 0.5, 0.8, 0.99] {
            assert_eq!(e.gamma_at(t), p.gamma_at(t));
        }
    }
}
