//! Seeded generation of every random object: GOE matrices, p-spin tensors,
//! spiked matrices, prior vectors, random trees and potentials.

mod matrix;
mod prior;
mod seed;
mod tensor;
mod tree;

pub use matrix::{PowerIteration, SymmetricMatrix};
pub use prior::PriorSpec;
pub use seed::{CounterRng, RngStream, Seed};
pub use tensor::{SymmetricTensor, MAX_DENSE_ORDER};
pub use tree::{sample_potentials, sample_tree, Graph};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hamiltonian::{MixingPolynomial, PSpinInstance};
use crate::scalar::Real;

/// Default cap on stored tensor entries per instance (about 0.5 GB of `f64`).
pub const DEFAULT_ENTRY_BUDGET: usize = 1 << 26;

/// GOE(n): `A_ii ~ N(0, 2/n)`, `A_ij ~ N(0, 1/n)` for `i < j`, independent.
///
/// Entry `(i, j)` uses counter `packed_index(n, i, j)` of the seed's stream.
pub fn sample_goe<T: Real>(n: usize, seed: &Seed) -> Result<SymmetricMatrix<T>> {
    if n == 0 {
        return Err(Error::InvalidDimension("GOE dimension must be >= 1".into()));
    }
    let rng = seed.rng();
    let off = (1.0 / n as f64).sqrt();
    let diag = (2.0 / n as f64).sqrt();
    Ok(SymmetricMatrix::from_upper_fn(n, |i, j| {
        let sd = if i == j { diag } else { off };
        T::lit(sd * rng.normal_at(SymmetricMatrix::<T>::packed_index(n, i, j) as u64))
    }))
}

/// Raw row-major `n^order` array of i.i.d. standard normals.
pub fn sample_gaussian_tensor<T: Real>(order: usize, n: usize, seed: &Seed) -> Result<Vec<T>> {
    let len = n
        .checked_pow(order as u32)
        .ok_or_else(|| Error::ResourceLimit(format!("n^{order} overflows")))?;
    let rng = seed.rng();
    Ok((0..len).into_par_iter().map(|i| T::lit(rng.normal_at(i as u64))).collect())
}

/// Entries stored for a degree-`k` symmetric tensor (packed for `k = 2`, plus the
/// raw array needed before symmetrization for `k ≥ 3`).
fn storage_entries(k: usize, n: usize) -> Option<usize> {
    if k == 2 {
        n.checked_mul(n + 1).map(|v| v / 2)
    } else {
        n.checked_pow(k as u32).and_then(|v| v.checked_mul(2))
    }
}

/// Mixed p-spin instance with one i.i.d. Gaussian tensor per active degree,
/// drawn from child stream `k<degree>` of `seed`.
///
/// Degree 2 is drawn directly in symmetrized form (`N(0,1)` diagonal, `N(0,1/2)`
/// off the diagonal), which has the law of `(G + Gᵀ)/2`; higher degrees draw the
/// raw `n^k` array and symmetrize it.
pub fn sample_pspin<T: Real>(
    mixing: &MixingPolynomial,
    n: usize,
    seed: &Seed,
    entry_budget: usize,
) -> Result<PSpinInstance<T>> {
    if n == 0 {
        return Err(Error::InvalidDimension("p-spin dimension must be >= 1".into()));
    }
    if mixing.max_degree() > MAX_DENSE_ORDER {
        return Err(Error::ResourceLimit(format!(
            "degree {} exceeds dense storage limit {MAX_DENSE_ORDER}",
            mixing.max_degree()
        )));
    }
    let mut total = 0usize;
    for (k, _) in mixing.active_terms() {
        total = storage_entries(k, n)
            .and_then(|e| total.checked_add(e))
            .ok_or_else(|| Error::ResourceLimit("tensor size overflows".into()))?;
    }
    if total > entry_budget {
        return Err(Error::ResourceLimit(format!(
            "instance needs {total} tensor entries, budget is {entry_budget}"
        )));
    }
    let mut tensors = Vec::new();
    for (k, _) in mixing.active_terms() {
        let s = seed.child(format!("k{k}"));
        let t = if k == 2 {
            let rng = s.rng();
            let half = 0.5f64.sqrt();
            SymmetricTensor::Matrix(SymmetricMatrix::from_upper_fn(n, |i, j| {
                let sd = if i == j { 1.0 } else { half };
                T::lit(sd * rng.normal_at(SymmetricMatrix::<T>::packed_index(n, i, j) as u64))
            }))
        } else {
            SymmetricTensor::symmetrize(k, n, &sample_gaussian_tensor::<T>(k, n, &s)?)?
        };
        tensors.push(t);
    }
    PSpinInstance::new(mixing.clone(), n, tensors)
}

/// `n` i.i.d. draws from `prior`; coordinate `i` uses counters `2i` and `2i+1`.
pub fn sample_prior<T: Real>(prior: &PriorSpec, n: usize, seed: &Seed) -> Result<Vec<T>> {
    prior.validate()?;
    let rng = seed.rng();
    Ok((0..n)
        .map(|i| T::lit(prior.draw(rng.uniform_at(2 * i as u64), rng.uniform_at(2 * i as u64 + 1))))
        .collect())
}

/// Rank-one spiked observation `Y = (λ/n) θ* θ*ᵀ + A`.
#[derive(Debug, Clone)]
pub struct SpikedInstance<T> {
    pub y: SymmetricMatrix<T>,
    pub theta: Vec<T>,
    pub lambda: f64,
    pub prior: PriorSpec,
}

/// The noise `A` is `sample_goe(n, seed)` and `θ*` comes from child stream
/// `signal`, so `λ = 0` reproduces the GOE sample for the same seed exactly.
pub fn sample_spiked<T: Real>(
    n: usize,
    lambda: f64,
    prior: &PriorSpec,
    seed: &Seed,
) -> Result<SpikedInstance<T>> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidInput(format!("signal strength {lambda} must be >= 0")));
    }
    let mut y = sample_goe::<T>(n, seed)?;
    let theta = sample_prior::<T>(prior, n, &seed.child("signal"))?;
    if lambda > 0.0 {
        y.add_rank_one(T::lit(lambda / n as f64), &theta);
    }
    Ok(SpikedInstance { y, theta, lambda, prior: *prior })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn goe_basic() {
        assert!(sample_goe::<f64>(0, &Seed::new(0, "g")).is_err());
        let a = sample_goe::<f64>(1, &Seed::new(0, "g")).unwrap();
        assert_eq!(a.n(), 1);
        let b = sample_goe::<f64>(50, &Seed::new(3, "g")).unwrap();
        let c = sample_goe::<f64>(50, &Seed::new(3, "g")).unwrap();
        assert_eq!(b, c);
        let d = sample_goe::<f64>(50, &Seed::new(3, "h")).unwrap();
        assert_ne!(b, d);
    }

    #[test]
    fn pspin_guards() {
        let s = Seed::new(0, "p");
        let m5 = MixingPolynomial::pure(5, 1.0).unwrap();
        assert!(sample_pspin::<f64>(&m5, 4, &s, DEFAULT_ENTRY_BUDGET).unwrap_err().is_resource_limit());
        let m4 = MixingPolynomial::pure(4, 1.0).unwrap();
        assert!(sample_pspin::<f64>(&m4, 1000, &s, DEFAULT_ENTRY_BUDGET).unwrap_err().is_resource_limit());
        let m3 = MixingPolynomial::pure(3, 1.0).unwrap();
        let h = sample_pspin::<f64>(&m3, 30, &s, DEFAULT_ENTRY_BUDGET).unwrap();
        match &h.components()[0].tensor {
            SymmetricTensor::Dense { data, .. } => assert_eq!(data.len(), 27000),
            _ => panic!("expected dense tensor"),
        }
    }

    #[test]
    fn spiked_zero_signal_is_goe() {
        let s = Seed::new(9, "spk");
        let sp = sample_spiked::<f64>(40, 0.0, &PriorSpec::Rademacher, &s).unwrap();
        assert_eq!(sp.y, sample_goe::<f64>(40, &s).unwrap());
        assert!(sample_spiked::<f64>(40, -1.0, &PriorSpec::Rademacher, &s).is_err());
    }
}
