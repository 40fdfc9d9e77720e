use rayon::prelude::*;
use serde::Serialize;

use crate::ensembles::{sample_pspin, Seed, DEFAULT_ENTRY_BUDGET};
use crate::error::{Error, Result};
use crate::hamiltonian::{MixingPolynomial, PSpinInstance};
use crate::scalar::{log_add_exp, Real};

/// Largest `n` accepted by the enumeration oracles.
pub const MAX_ENUMERATION_N: usize = 22;

const BLOCK: usize = 1 << 12;

/// Configuration number `s`: bit `n-1-i` of `s` set means `σ_i = +1`, so increasing
/// `s` is lexicographic order with `-1 < +1`.
pub fn spins_from_index<T: Real>(s: usize, n: usize) -> Vec<T> {
    (0..n)
        .map(|i| if (s >> (n - 1 - i)) & 1 == 1 { T::one() } else { -T::one() })
        .collect()
}

fn check_enumerable<T: Real>(h: &PSpinInstance<T>) -> Result<()> {
    let n = h.n();
    if n == 0 {
        return Err(Error::InvalidDimension("empty instance".into()));
    }
    if n > MAX_ENUMERATION_N {
        return Err(Error::ResourceLimit(format!(
            "enumeration over 2^{n} states exceeds the n <= {MAX_ENUMERATION_N} cap"
        )));
    }
    Ok(())
}

/// `H(σ)` for every `σ ∈ {±1}^n` in lexicographic order.
pub fn enumerate_energies<T: Real>(h: &PSpinInstance<T>) -> Result<Vec<T>> {
    check_enumerable(h)?;
    let n = h.n();
    let total = 1usize << n;
    Ok((0..total)
        .into_par_iter()
        .with_min_len(BLOCK)
        .map(|s| h.energy_unchecked(&spins_from_index::<T>(s, n)))
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct OptResult<T> {
    /// `max_σ H(σ)/n`.
    pub value: T,
    pub argmax: Vec<T>,
    /// `⟨σ, Aσ⟩/2n` for pure degree-2 instances, where `A = G √(2/n)` is the
    /// GOE-normalized coupling matrix.
    pub quadratic_form: Option<T>,
}

/// Exact ground state over `{±1}^n`; among exact ties the lexicographically
/// smallest `σ` wins.
pub fn brute_force_opt<T: Real>(h: &PSpinInstance<T>) -> Result<OptResult<T>> {
    let energies = enumerate_energies(h)?;
    let n = h.n();
    let (best, _) = energies
        .par_chunks(BLOCK)
        .enumerate()
        .map(|(b, chunk)| {
            let mut best = (b * BLOCK, chunk[0]);
            for (k, &e) in chunk.iter().enumerate() {
                if e > best.1 {
                    best = (b * BLOCK + k, e);
                }
            }
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0usize, T::neg_infinity()), |acc, cand| if cand.1 > acc.1 { cand } else { acc });
    let value = energies[best] / T::from_usize_lossy(n);
    let comps = h.components();
    let quadratic_form = if comps.len() == 1 && comps[0].degree == 2 {
        let xi2 = T::lit(h.mixing().coefficient(2));
        Some(value / (T::lit(2.0) * xi2).sqrt())
    } else {
        None
    };
    Ok(OptResult { value, argmax: spins_from_index(best, n), quadratic_form })
}

/// `φ_n(β) = n^{-1} log Σ_σ exp(β H(σ))` by log-sum-exp over precomputed energies.
pub fn free_energy_from_energies<T: Real>(energies: &[T], n: usize, beta: T) -> Result<T> {
    if !(beta > T::zero()) {
        return Err(Error::InvalidInput(format!("beta = {beta} must be positive")));
    }
    let partial: Vec<T> = energies
        .par_chunks(BLOCK)
        .map(|chunk| {
            let m = chunk.iter().fold(T::neg_infinity(), |a, &e| a.max(beta * e));
            m + chunk.iter().map(|&e| (beta * e - m).exp()).sum::<T>().ln()
        })
        .collect();
    let lse = partial.into_iter().fold(T::neg_infinity(), log_add_exp);
    Ok(lse / T::from_usize_lossy(n))
}

pub fn free_energy<T: Real>(h: &PSpinInstance<T>, beta: T) -> Result<T> {
    let energies = enumerate_energies(h)?;
    free_energy_from_energies(&energies, h.n(), beta)
}

/// Empirical `E[H(σ1) H(σ2)]` against the prediction `n ξ(⟨σ1,σ2⟩/n)`.
#[derive(Debug, Clone, Serialize)]
pub struct CovarianceCell {
    pub overlap: f64,
    pub predicted: f64,
    pub empirical: f64,
    pub stderr: f64,
    pub within_3se: bool,
}

/// Samples `num_instances` fresh instances (child seeds `0, 1, …` of `seed`) and
/// compares `E[H(σ1)H(σ2)]` with `n ξ(overlap)` for every pair.
pub fn covariance_probe(
    mixing: &MixingPolynomial,
    n: usize,
    pairs: &[(Vec<f64>, Vec<f64>)],
    num_instances: usize,
    seed: &Seed,
) -> Result<Vec<CovarianceCell>> {
    if n == 0 || n > 100 {
        return Err(Error::InvalidDimension(format!("covariance probe needs 1 <= n <= 100, got {n}")));
    }
    if num_instances < 2 {
        return Err(Error::InvalidInput("need at least two instances".into()));
    }
    for (a, b) in pairs {
        if a.len() != n || b.len() != n {
            return Err(Error::InvalidDimension("configuration length differs from n".into()));
        }
    }
    let products: Vec<Vec<f64>> = (0..num_instances)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let h: PSpinInstance<f64> = sample_pspin(mixing, n, &seed.child(i), DEFAULT_ENTRY_BUDGET)?;
            Ok(pairs
                .iter()
                .map(|(a, b)| h.energy_unchecked(a) * h.energy_unchecked(b))
                .collect())
        })
        .collect::<Result<_>>()?;
    let m = num_instances as f64;
    Ok(pairs
        .iter()
        .enumerate()
        .map(|(p, (a, b))| {
            let overlap = a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / n as f64;
            let predicted = n as f64 * mixing.derivative(0, overlap);
            let mean = products.iter().map(|r| r[p]).sum::<f64>() / m;
            let var = products.iter().map(|r| (r[p] - mean).powi(2)).sum::<f64>() / (m - 1.0);
            let stderr = (var / m).sqrt();
            CovarianceCell {
                overlap,
                predicted,
                empirical: mean,
                stderr,
                within_3se: (mean - predicted).abs() <= 3.0 * stderr,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{SymmetricMatrix, SymmetricTensor};

    #[test]
    fn index_order_is_lexicographic() {
        assert_eq!(spins_from_index::<f64>(0, 3), vec![-1.0, -1.0, -1.0]);
        assert_eq!(spins_from_index::<f64>(1, 3), vec![-1.0, -1.0, 1.0]);
        assert_eq!(spins_from_index::<f64>(7, 3), vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn single_site_tie_breaks_to_minus() {
        let g = SymmetricMatrix::from_dense(1, &[0.7f64]).unwrap();
        let h = PSpinInstance::new(MixingPolynomial::sk(), 1, vec![SymmetricTensor::Matrix(g)]).unwrap();
        let opt = brute_force_opt(&h).unwrap();
        assert_eq!(opt.argmax, vec![-1.0]);
    }

    #[test]
    fn two_site_hand_enumeration() {
        let a = SymmetricMatrix::from_dense(2, &[0.0f64, 1.0, 1.0, 0.0]).unwrap();
        let opt = brute_force_opt(&PSpinInstance::<f64>::sk(&a)).unwrap();
        // σ = (-1,-1) and (1,1) tie at 1/2; the first wins.
        assert!((opt.value - 0.5).abs() < 1e-12);
        assert!((opt.quadratic_form.unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(opt.argmax, vec![-1.0, -1.0]);
    }

    #[test]
    fn free_energy_small_beta_limit() {
        let a = SymmetricMatrix::from_dense(2, &[0.0f64, 1.0, 1.0, 0.0]).unwrap();
        let h = PSpinInstance::sk(&a);
        let phi = free_energy(&h, 1e-9).unwrap();
        assert!((phi - 2f64.ln()).abs() < 1e-8);
        assert!(free_energy(&h, 0.0).is_err());
    }
}
