use serde::Serialize;

use crate::ensembles::Seed;
use crate::error::{Error, Result};
use crate::hamiltonian::PSpinInstance;
use crate::iamp::ControlField;
use crate::scalar::{dot, Real};

#[derive(Debug, Clone)]
pub struct IampOptions {
    /// Rescale each Ising increment so that `‖m^{ℓ+1} − m^ℓ‖²/n = δ` exactly.
    pub normalize_increments: bool,
    /// Keep the chain-rule terms (through the control's dependence on `x`) in the
    /// Onsager coefficients.
    pub chain_terms: bool,
    /// Master seed of the random sign vector used for `m⁰`.
    pub seed: u64,
    /// Tolerance on `|⟨m^{ℓ+1} − m^ℓ, m^ℓ⟩|/n`.
    pub orthogonality_tol: f64,
    /// Relative tolerance on `‖m^{ℓ+1} − m^ℓ‖²/n` against `δ`.
    pub increment_tol: f64,
}

impl Default for IampOptions {
    fn default() -> Self {
        Self { normalize_increments: true, chain_terms: true, seed: 0, orthogonality_tol: 0.05, increment_tol: 0.1 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IampStep<T> {
    pub t: T,
    pub norm: T,
    pub increment: T,
    pub orthogonality: T,
    pub energy: T,
}

#[derive(Debug, Clone)]
pub struct IampTrajectory<T> {
    pub delta: T,
    /// `m⁰ … m^{T−1}`; the last one has `‖m‖²/n ≈ 1`.
    pub m: Vec<Vec<T>>,
    /// `z⁰ = 0, z¹, …`.
    pub z: Vec<Vec<T>>,
    /// Per-step records; entry `ℓ` describes `m^ℓ` and the increment leading to it.
    pub steps: Vec<IampStep<T>>,
    /// `b_{ℓj}` for `j = 1..=ℓ`.
    pub onsager: Vec<Vec<T>>,
    /// Set when some diagnostic exceeded five times its tolerance.
    pub flagged: bool,
    pub warnings: Vec<String>,
}

impl<T: Real> IampTrajectory<T> {
    pub fn last(&self) -> &[T] {
        self.m.last().expect("at least m⁰")
    }
}

/// Incremental AMP.
///
/// `z^{ℓ+1} = ∇H(m^ℓ) − Σ_{j=1}^{ℓ} b_{ℓj} m^{j−1}`,
/// `m^{ℓ+1} = m^ℓ + u((ℓ+1)δ, x^ℓ) (z^{ℓ+1} − z^ℓ)`,
/// `x^{ℓ+1} = x^ℓ + v((ℓ+1)δ, x^ℓ) δ + z^{ℓ+1} − z^ℓ`,
/// with `b_{ℓj} = ξ″(⟨m^ℓ, m^{j−1}⟩/n) · mean_i ∂m^ℓ_i/∂z^j_i`. The derivatives
/// are tracked exactly, including the dependence of `u` on `x`.
///
/// Ising: `m⁰ = √δ s` and `x⁰ = x₀ s` with a seeded sign vector `s`. Spherical:
/// `m⁰ = √δ s` and constant weights. Runs `T − 1` increments.
pub fn run_iamp<T: Real>(
    instance: &PSpinInstance<T>,
    control: &ControlField<T>,
    opts: &IampOptions,
) -> Result<IampTrajectory<T>> {
    let n = instance.n();
    if n < 2 {
        return Err(Error::InvalidDimension("IAMP needs n >= 2".into()));
    }
    let steps = control.steps();
    let delta = control.delta();
    let nf = T::from_usize_lossy(n);
    let mixing = instance.mixing().clone();
    let rng = Seed::new(opts.seed, "iamp/init").rng();
    let signs: Vec<T> = (0..n).map(|i| if rng.u64_at(i as u64) & 1 == 1 { T::one() } else { -T::one() }).collect();
    let sd = delta.sqrt();
    let x0 = control.ising_start();
    let mut m = vec![signs.iter().map(|&s| s * sd).collect::<Vec<T>>()];
    let mut x: Vec<T> = signs.iter().map(|&s| s * x0).collect();
    let mut z = vec![vec![T::zero(); n]];
    // deriv[j-1][i] = ∂m^ℓ_i/∂z^j_i, jac[j-1][i] = ∂x^ℓ_i/∂z^j_i.
    let mut deriv: Vec<Vec<T>> = Vec::new();
    let mut jac: Vec<Vec<T>> = Vec::new();
    let mut onsager = Vec::new();
    let mut records = vec![IampStep {
        t: delta,
        norm: dot(&m[0], &m[0]) / nf,
        increment: dot(&m[0], &m[0]) / nf,
        orthogonality: T::zero(),
        energy: instance.energy_per_site(&m[0])?,
    }];
    let mut warnings = Vec::new();
    let mut flagged = false;
    for l in 0..steps - 1 {
        let ml = &m[l];
        let mut znew = instance.gradient(ml)?;
        let mut b = Vec::with_capacity(l);
        for j in 1..=l {
            let q = dot(ml, &m[j - 1]) / nf;
            let coef = mixing.derivative::<T>(2, q) * deriv[j - 1].iter().copied().sum::<T>() / nf;
            b.push(coef);
            for (zi, &mi) in znew.iter_mut().zip(&m[j - 1]) {
                *zi -= coef * mi;
            }
        }
        onsager.push(b);
        if znew.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { step: l + 1, reason: "non-finite z iterate".into() });
        }
        let t = T::from_usize_lossy(l + 1) * delta;
        let dz: Vec<T> = znew.iter().zip(&z[l]).map(|(&a, &b)| a - b).collect();
        let mut ctrl: Vec<(T, T, T, T)> = if control.is_spherical() {
            let w = control.spherical_weight(l);
            vec![(w, T::zero(), T::zero(), T::zero()); n]
        } else {
            x.iter().map(|&xi| control.eval(t, xi)).collect()
        };
        if opts.normalize_increments && !control.is_spherical() {
            let size = ctrl.iter().zip(&dz).map(|(c, &d)| c.0 * c.0 * d * d).sum::<T>() / nf;
            if size > T::zero() {
                let c = (delta / size).sqrt();
                for v in ctrl.iter_mut() {
                    v.0 *= c;
                    v.1 *= c;
                }
            }
        }
        // Derivatives of m^{ℓ+1} and x^{ℓ+1} with respect to z^1..z^{ℓ+1}.
        let mut new_deriv: Vec<Vec<T>> = Vec::with_capacity(l + 1);
        let mut new_jac: Vec<Vec<T>> = Vec::with_capacity(l + 1);
        for j in 1..=l + 1 {
            let mut d = if j <= l { deriv[j - 1].clone() } else { vec![T::zero(); n] };
            let mut jx = if j <= l { jac[j - 1].clone() } else { vec![T::zero(); n] };
            for i in 0..n {
                let (u, du, _, dv) = ctrl[i];
                let jprev = jx[i];
                let mut direct = T::zero();
                if j == l + 1 {
                    direct += u;
                }
                if j == l {
                    direct -= u;
                }
                let chain = if opts.chain_terms { du * jprev * dz[i] } else { T::zero() };
                d[i] += direct + chain;
                let mut jn = jprev * (T::one() + dv * delta);
                if j == l + 1 {
                    jn += T::one();
                }
                if j == l {
                    jn -= T::one();
                }
                jx[i] = jn;
            }
            new_deriv.push(d);
            new_jac.push(jx);
        }
        deriv = new_deriv;
        jac = new_jac;
        let inc: Vec<T> = ctrl.iter().zip(&dz).map(|(c, &d)| c.0 * d).collect();
        let mnext: Vec<T> = ml.iter().zip(&inc).map(|(&a, &b)| a + b).collect();
        for (xi, (c, &d)) in x.iter_mut().zip(ctrl.iter().zip(&dz)) {
            *xi += c.2 * delta + d;
        }
        let increment = dot(&inc, &inc) / nf;
        let orthogonality = dot(&inc, ml) / nf;
        let rec = IampStep {
            t: t + delta,
            norm: dot(&mnext, &mnext) / nf,
            increment,
            orthogonality,
            energy: instance.energy_per_site(&mnext)?,
        };
        if !rec.energy.is_finite() {
            return Err(Error::Diverged { step: l + 1, reason: "non-finite energy".into() });
        }
        let ot = T::lit(opts.orthogonality_tol);
        let it = T::lit(opts.increment_tol) * delta;
        if orthogonality.abs() > ot {
            warnings.push(format!("step {}: increment orthogonality {orthogonality}", l + 1));
        }
        if (increment - delta).abs() > it {
            warnings.push(format!("step {}: increment size {increment} vs delta {delta}", l + 1));
        }
        if orthogonality.abs() > T::lit(5.0) * ot || (increment - delta).abs() > T::lit(5.0) * it {
            flagged = true;
        }
        records.push(rec);
        m.push(mnext);
        z.push(znew);
    }
    Ok(IampTrajectory { delta, m, z, steps: records, onsager, flagged, warnings })
}
