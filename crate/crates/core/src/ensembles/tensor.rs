use rayon::prelude::*;

use crate::ensembles::SymmetricMatrix;
use crate::error::{Error, Result};
use crate::scalar::{dot, Real};

/// Symmetric coefficient tensor of order `k ≥ 2`.
///
/// Order two is kept in packed matrix form; orders three and four are dense
/// `n^k` arrays, symmetrized once at construction.
#[derive(Debug, Clone, PartialEq)]
pub enum SymmetricTensor<T> {
    Matrix(SymmetricMatrix<T>),
    Dense { order: usize, n: usize, data: Vec<T> },
}

/// Largest tensor order stored densely.
pub const MAX_DENSE_ORDER: usize = 4;

impl<T: Real> SymmetricTensor<T> {
    /// Symmetrizes a raw row-major `n^order` array: the entry at a multi-index is
    /// replaced by the average over all permutations of that index.
    pub fn symmetrize(order: usize, n: usize, raw: &[T]) -> Result<Self> {
        if !(2..=MAX_DENSE_ORDER).contains(&order) {
            return Err(Error::ResourceLimit(format!(
                "tensor order {order} outside supported range 2..={MAX_DENSE_ORDER}"
            )));
        }
        let len = n.checked_pow(order as u32).ok_or_else(|| {
            Error::ResourceLimit(format!("n^{order} overflows for n = {n}"))
        })?;
        if raw.len() != len {
            return Err(Error::InvalidDimension(format!(
                "expected {len} tensor entries, got {}",
                raw.len()
            )));
        }
        if order == 2 {
            let half = T::lit(0.5);
            return Ok(Self::Matrix(SymmetricMatrix::from_upper_fn(n, |i, j| {
                half * (raw[i * n + j] + raw[j * n + i])
            })));
        }
        let perms = permutations(order);
        let inv = T::one() / T::from_usize_lossy(perms.len());
        let data: Vec<T> = (0..len)
            .into_par_iter()
            .map(|flat| {
                let idx = unflatten(flat, n, order);
                let mut acc = T::zero();
                let mut permuted = [0usize; MAX_DENSE_ORDER];
                for p in &perms {
                    for (slot, &src) in p.iter().enumerate() {
                        permuted[slot] = idx[src];
                    }
                    acc += raw[flatten(&permuted[..order], n)];
                }
                acc * inv
            })
            .collect();
        Ok(Self::Dense { order, n, data })
    }

    pub fn order(&self) -> usize {
        match self {
            Self::Matrix(_) => 2,
            Self::Dense { order, .. } => *order,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Self::Matrix(m) => m.n(),
            Self::Dense { n, .. } => *n,
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Self::Matrix(m) => m.is_finite(),
            Self::Dense { data, .. } => data.iter().all(|v| v.is_finite()),
        }
    }

    /// `⟨G, x^{⊗k}⟩`.
    pub fn contract_full(&self, x: &[T]) -> T {
        dot(x, &self.contract_vector(x))
    }

    /// Contraction of `x` with all but the first index: `G{x}_i = Σ G_{i j…} x_j ⋯`.
    pub fn contract_vector(&self, x: &[T]) -> Vec<T> {
        match self {
            Self::Matrix(m) => m.matvec(x),
            Self::Dense { order, n, data } => {
                let n = *n;
                let stride = n.pow(*order as u32 - 1);
                data.par_chunks(stride)
                    .map(|slab| contract_slab(slab, x, n, *order - 1))
                    .collect()
            }
        }
    }
}

fn contract_slab<T: Real>(slab: &[T], x: &[T], n: usize, remaining: usize) -> T {
    if remaining == 1 {
        return dot(slab, x);
    }
    let stride = slab.len() / n;
    slab.chunks(stride)
        .zip(x)
        .map(|(sub, &xi)| xi * contract_slab(sub, x, n, remaining - 1))
        .sum()
}

fn flatten(idx: &[usize], n: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * n + i)
}

fn unflatten(mut flat: usize, n: usize, order: usize) -> [usize; MAX_DENSE_ORDER] {
    let mut idx = [0usize; MAX_DENSE_ORDER];
    for slot in (0..order).rev() {
        idx[slot] = flat % n;
        flat /= n;
    }
    idx
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; k], &mut out);
    out
}
