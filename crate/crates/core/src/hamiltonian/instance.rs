use crate::ensembles::{SymmetricMatrix, SymmetricTensor};
use crate::error::{Error, Result};
use crate::hamiltonian::MixingPolynomial;
use crate::scalar::Real;

/// One active degree of a mixed p-spin Hamiltonian.
#[derive(Debug, Clone)]
pub struct Component<T> {
    pub degree: usize,
    /// `√ξ_k / n^{(k-1)/2}`.
    pub scale: T,
    pub tensor: SymmetricTensor<T>,
}

/// `H(σ) = Σ_k √ξ_k n^{-(k-1)/2} ⟨G^(k), σ^{⊗k}⟩` with symmetrized `G^(k)`.
#[derive(Debug, Clone)]
pub struct PSpinInstance<T> {
    n: usize,
    mixing: MixingPolynomial,
    components: Vec<Component<T>>,
}

impl<T: Real> PSpinInstance<T> {
    /// Assembles an instance from one symmetric tensor per active degree.
    pub fn new(mixing: MixingPolynomial, n: usize, tensors: Vec<SymmetricTensor<T>>) -> Result<Self> {
        let active: Vec<(usize, f64)> = mixing.active_terms().collect();
        if active.len() != tensors.len() {
            return Err(Error::InvalidInput(format!(
                "{} active degrees but {} tensors",
                active.len(),
                tensors.len()
            )));
        }
        let mut components = Vec::with_capacity(active.len());
        for ((k, c), tensor) in active.into_iter().zip(tensors) {
            if tensor.order() != k || tensor.n() != n {
                return Err(Error::InvalidDimension(format!(
                    "tensor of order {} and size {} for degree {k}, n = {n}",
                    tensor.order(),
                    tensor.n()
                )));
            }
            let scale = T::lit(c.sqrt() / (n as f64).powf((k as f64 - 1.0) / 2.0));
            components.push(Component { degree: k, scale, tensor });
        }
        Ok(Self { n, mixing, components })
    }

    /// The SK Hamiltonian `H(σ) = ⟨σ, Aσ⟩ / 2`, written as the `ξ(t) = t²/2`
    /// instance with `G = A √(n/2)`.
    pub fn sk(a: &SymmetricMatrix<T>) -> Self {
        let n = a.n();
        let c = T::lit((n as f64 / 2.0).sqrt());
        let g = SymmetricMatrix::from_upper_fn(n, |i, j| a.get(i, j) * c);
        Self::new(MixingPolynomial::sk(), n, vec![SymmetricTensor::Matrix(g)])
            .expect("order-2 tensor matches t²/2")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mixing(&self) -> &MixingPolynomial {
        &self.mixing
    }

    pub fn components(&self) -> &[Component<T>] {
        &self.components
    }

    fn check(&self, x: &[T]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::InvalidDimension(format!("vector of length {} for n = {}", x.len(), self.n)));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite entry in configuration".into()));
        }
        Ok(())
    }

    /// Unnormalized `H(σ)`.
    pub fn energy(&self, sigma: &[T]) -> Result<T> {
        self.check(sigma)?;
        Ok(self.energy_unchecked(sigma))
    }

    /// `H(σ)/n`.
    pub fn energy_per_site(&self, sigma: &[T]) -> Result<T> {
        Ok(self.energy(sigma)? / T::from_usize_lossy(self.n))
    }

    pub(crate) fn energy_unchecked(&self, sigma: &[T]) -> T {
        self.components
            .iter()
            .map(|c| c.scale * c.tensor.contract_full(sigma))
            .sum()
    }

    /// `∇H(m) = Σ_k k √ξ_k n^{-(k-1)/2} G^(k){m}`.
    pub fn gradient(&self, m: &[T]) -> Result<Vec<T>> {
        self.check(m)?;
        let mut g = vec![T::zero(); self.n];
        for c in &self.components {
            let w = c.scale * T::from_usize_lossy(c.degree);
            for (gi, v) in g.iter_mut().zip(c.tensor.contract_vector(m)) {
                *gi += w * v;
            }
        }
        Ok(g)
    }
}

/// Constraint set a configuration belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    /// `σ ∈ {±1}^n`.
    Ising,
    /// `‖σ‖² = n`.
    Spherical,
    /// `σ ∈ [-1, 1]^n`.
    Relaxed,
}

/// A vector tagged with the constraint it satisfies (checked to `1e-9`).
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration<T> {
    flavor: Flavor,
    values: Vec<T>,
}

impl<T: Real> Configuration<T> {
    pub fn new(flavor: Flavor, values: Vec<T>) -> Result<Self> {
        let tol = T::lit(1e-9);
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite configuration entry".into()));
        }
        let ok = match flavor {
            Flavor::Ising => values.iter().all(|v| (v.abs() - T::one()).abs() <= tol),
            Flavor::Relaxed => values.iter().all(|v| v.abs() <= T::one() + tol),
            Flavor::Spherical => {
                let n = T::from_usize_lossy(values.len());
                let sq: T = values.iter().map(|&v| v * v).sum();
                (sq - n).abs() <= tol * n.max(T::one())
            }
        };
        if !ok {
            return Err(Error::InvalidInput(format!("vector violates the {flavor:?} constraint")));
        }
        Ok(Self { flavor, values })
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn configuration_flavors() {
        assert!(Configuration::new(Flavor::Ising, vec![1.0, -1.0]).is_ok());
        assert!(Configuration::new(Flavor::Ising, vec![1.0, 0.5]).is_err());
        assert!(Configuration::new(Flavor::Spherical, vec![2.0f64.sqrt(), 0.0]).is_ok());
        assert!(Configuration::new(Flavor::Relaxed, vec![0.0, -1.0, 0.3]).is_ok());
        assert!(Configuration::new(Flavor::Relaxed, vec![f64::NAN]).is_err());
    }

    #[test]
    fn sk_energy_is_half_quadratic_form() {
        let a = SymmetricMatrix::from_dense(2, &[0.0f64, 1.0, 1.0, 0.0]).unwrap();
        let h = PSpinInstance::sk(&a);
        let e = h.energy(&[1.0, 1.0]).unwrap();
        assert!((e - 1.0).abs() < 1e-12);
        let g = h.gradient(&[1.0, 2.0]).unwrap();
        assert!((g[0] - 2.0).abs() < 1e-12 && (g[1] - 1.0).abs() < 1e-12);
        assert!(h.energy(&[f64::NAN, 0.0]).is_err());
        assert!(h.energy(&[1.0]).is_err());
    }
}
