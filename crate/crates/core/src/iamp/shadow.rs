use serde::Serialize;

use crate::ensembles::Seed;
use crate::error::{Error, Result};
use crate::iamp::ControlField;
use crate::scalar::Real;

#[derive(Debug, Clone, Serialize)]
pub struct ShadowReport<T> {
    /// `E M_ℓ²` for `ℓ = 0 … T−1`.
    pub second_moments: Vec<T>,
    /// `Σ_ℓ E[U_ℓ (Z_{ℓ+1} − Z_ℓ)²]`, the predicted `H(m)/n`.
    pub value: T,
    /// Fraction of paths with `|M_{T−1}| < 1`.
    pub inside_fraction: T,
    /// Largest `|E[(Z_{ℓ+1} − Z_ℓ) Z_j]|` over `j ≤ ℓ`.
    pub martingale_defect: T,
}

/// Monte Carlo simulation of the state-evolution pair `(Z, M)` of the incremental
/// AMP, with `E[Z_{ℓ+1} Z_{j+1}] = ξ′(E[M_ℓ M_j])`.
///
/// The Gaussian vector `Z` is built one coordinate at a time from the Cholesky
/// factor of its covariance; a negative pivot beyond round-off is reported as a
/// loss of positive semidefiniteness. Ising and spherical discretizations follow
/// [`run_iamp`](crate::iamp::run_iamp), including increment normalization.
pub fn se_shadow<T: Real>(
    control: &ControlField<T>,
    mc_samples: usize,
    normalize_increments: bool,
    seed: &Seed,
) -> Result<ShadowReport<T>> {
    if mc_samples < 2 {
        return Err(Error::InvalidInput("need at least two samples".into()));
    }
    let steps = control.steps();
    let delta = control.delta();
    let mixing = control.mixing().clone();
    let s_count = T::from_usize_lossy(mc_samples);
    let rng = seed.rng();
    let x0 = control.ising_start();
    let sd = delta.sqrt();
    let signs: Vec<T> = (0..mc_samples)
        .map(|p| if rng.u64_at(p as u64) & 1 == 1 { T::one() } else { -T::one() })
        .collect();
    let mut ms: Vec<Vec<T>> = vec![signs.iter().map(|&s| s * sd).collect()];
    let mut x: Vec<T> = signs.iter().map(|&s| s * x0).collect();
    // zs[k] holds Z_{k+1}; gs[k] the standard normals generating it.
    let mut zs: Vec<Vec<T>> = Vec::new();
    let mut gs: Vec<Vec<T>> = Vec::new();
    let mut chol: Vec<Vec<T>> = Vec::new();
    let mut value = T::zero();
    let mut defect = T::zero();
    let mean = |a: &[T], b: &[T]| a.iter().zip(b).map(|(&p, &q)| p * q).sum::<T>() / s_count;
    for l in 0..steps - 1 {
        // Covariance of Z_{l+1} with Z_1..Z_{l+1}.
        let cov: Vec<T> = (0..=l).map(|j| mixing.derivative::<T>(1, mean(&ms[l], &ms[j]))).collect();
        let mut row = vec![T::zero(); l + 1];
        for j in 0..l {
            let s: T = (0..j).map(|k| row[k] * chol[j][k]).sum();
            row[j] = (cov[j] - s) / chol[j][j];
        }
        let rad = cov[l] - row[..l].iter().map(|&r| r * r).sum::<T>();
        let tol = T::lit(1e-10) * cov[l].abs().max(T::one());
        if rad < -tol {
            return Err(Error::NumericInstability(format!(
                "state-evolution covariance not PSD at step {}: pivot {rad}",
                l + 1
            )));
        }
        row[l] = rad.max(T::zero()).sqrt();
        let g: Vec<T> = (0..mc_samples)
            .map(|p| T::lit(rng.normal_at(((l as u64 + 1) << 32) + p as u64)))
            .collect();
        gs.push(g);
        let znew: Vec<T> = (0..mc_samples)
            .map(|p| (0..=l).map(|k| row[k] * gs[k][p]).sum())
            .collect();
        chol.push(row);
        let t = T::from_usize_lossy(l + 1) * delta;
        let zprev: Vec<T> = if l == 0 { vec![T::zero(); mc_samples] } else { zs[l - 1].clone() };
        let dz: Vec<T> = znew.iter().zip(&zprev).map(|(&a, &b)| a - b).collect();
        for zj in &zs {
            defect = defect.max(mean(&dz, zj).abs());
        }
        let mut ctrl: Vec<(T, T)> = if control.is_spherical() {
            vec![(control.spherical_weight(l), T::zero()); mc_samples]
        } else {
            x.iter().map(|&xi| {
                let (u, _, v, _) = control.eval(t, xi);
                (u, v)
            }).collect()
        };
        if normalize_increments && !control.is_spherical() {
            let size = ctrl.iter().zip(&dz).map(|(c, &d)| c.0 * c.0 * d * d).sum::<T>() / s_count;
            if size > T::zero() {
                let c = (delta / size).sqrt();
                ctrl.iter_mut().for_each(|v| v.0 *= c);
            }
        }
        value += ctrl.iter().zip(&dz).map(|(c, &d)| c.0 * d * d).sum::<T>() / s_count;
        let mnext: Vec<T> = ms[l].iter().zip(ctrl.iter().zip(&dz)).map(|(&m, (c, &d))| m + c.0 * d).collect();
        for (xi, (c, &d)) in x.iter_mut().zip(ctrl.iter().zip(&dz)) {
            *xi += c.1 * delta + d;
        }
        ms.push(mnext);
        zs.push(znew);
    }
    let last = ms.last().expect("nonempty");
    let inside = last.iter().filter(|v| v.abs() < T::one()).count();
    Ok(ShadowReport {
        second_moments: ms.iter().map(|m| mean(m, m)).collect(),
        value,
        inside_fraction: T::from_usize_lossy(inside) / s_count,
        martingale_defect: defect,
    })
}
