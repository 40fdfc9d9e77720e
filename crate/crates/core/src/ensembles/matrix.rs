use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::{dot, Real};

/// Fixed number of row blocks used by [`SymmetricMatrix::matvec`]. The partition,
/// and therefore the floating point result, is independent of the thread count.
const MATVEC_BLOCKS: usize = 16;

/// Dense symmetric matrix with the upper triangle stored once, row-major packed.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix<T> {
    n: usize,
    data: Vec<T>,
}

#[inline]
fn row_start(n: usize, i: usize) -> usize {
    // entries of rows 0..i: n + (n-1) + ... + (n-i+1)
    i * n - i * (i.saturating_sub(1)) / 2
}

impl<T: Real> SymmetricMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![T::zero(); n * (n + 1) / 2] }
    }

    /// Builds the matrix from its upper triangle, `f(i, j)` with `i <= j`.
    pub fn from_upper_fn<F: Fn(usize, usize) -> T + Sync>(n: usize, f: F) -> Self {
        let mut data = vec![T::zero(); n * (n + 1) / 2];
        let mut rows: Vec<&mut [T]> = Vec::with_capacity(n);
        let mut rest = data.as_mut_slice();
        for i in 0..n {
            let (row, tail) = rest.split_at_mut(n - i);
            rows.push(row);
            rest = tail;
        }
        rows.into_par_iter().enumerate().for_each(|(i, row)| {
            for (off, v) in row.iter_mut().enumerate() {
                *v = f(i, i + off);
            }
        });
        Self { n, data }
    }

    /// From a full row-major square array; rejects asymmetric input.
    pub fn from_dense(n: usize, dense: &[T]) -> Result<Self> {
        if dense.len() != n * n {
            return Err(Error::InvalidDimension(format!(
                "expected {} entries for n = {n}, got {}",
                n * n,
                dense.len()
            )));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if dense[i * n + j] != dense[j * n + i] {
                    return Err(Error::InvalidInput(format!("matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self::from_upper_fn(n, |i, j| dense[i * n + j]))
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Index of `(i, j)` in the packed upper triangle, for the counter RNG.
    #[inline]
    pub fn packed_index(n: usize, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        row_start(n, i) + (j - i)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[Self::packed_index(self.n, i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let k = Self::packed_index(self.n, i, j);
        self.data[k] = v;
    }

    pub fn packed(&self) -> &[T] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Upper-triangle row `i`, entries `(i, i..n)`.
    #[inline]
    pub fn upper_row(&self, i: usize) -> &[T] {
        let s = row_start(self.n, i);
        &self.data[s..s + self.n - i]
    }

    pub fn to_dense(&self) -> Vec<T> {
        let n = self.n;
        let mut out = vec![T::zero(); n * n];
        for i in 0..n {
            for (off, &v) in self.upper_row(i).iter().enumerate() {
                out[i * n + i + off] = v;
                out[(i + off) * n + i] = v;
            }
        }
        out
    }

    /// `A x`, computed over a fixed row partition and reduced in block order.
    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n, "matvec dimension mismatch");
        let n = self.n;
        if n == 0 {
            return vec![];
        }
        let bounds = self.block_bounds();
        let partials: Vec<Vec<T>> = bounds
            .par_windows(2)
            .map(|w| {
                let mut y = vec![T::zero(); n];
                for i in w[0]..w[1] {
                    let row = self.upper_row(i);
                    let xi = x[i];
                    let mut acc = row[0] * xi;
                    for (off, &a) in row.iter().enumerate().skip(1) {
                        let j = i + off;
                        acc += a * x[j];
                        y[j] += a * xi;
                    }
                    y[i] += acc;
                }
                y
            })
            .collect();
        let mut out = vec![T::zero(); n];
        for p in &partials {
            for (o, &v) in out.iter_mut().zip(p) {
                *o += v;
            }
        }
        out
    }

    fn block_bounds(&self) -> Vec<usize> {
        let n = self.n;
        let blocks = MATVEC_BLOCKS.min(n);
        let total = self.data.len();
        let mut bounds = vec![0usize];
        let mut row = 0usize;
        for b in 1..blocks {
            let target = total * b / blocks;
            while row < n && row_start(n, row) < target {
                row += 1;
            }
            if row > *bounds.last().unwrap() {
                bounds.push(row);
            }
        }
        bounds.push(n);
        bounds.dedup();
        bounds
    }

    /// `⟨x, A x⟩`.
    pub fn quadratic_form(&self, x: &[T]) -> T {
        dot(x, &self.matvec(x))
    }

    /// In-place `A += c v vᵀ`.
    pub fn add_rank_one(&mut self, c: T, v: &[T]) {
        assert_eq!(v.len(), self.n);
        let n = self.n;
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                self.data[k] += c * v[i] * v[j];
                k += 1;
            }
        }
    }

    /// Power iteration for the eigenvector of largest algebraic eigenvalue.
    ///
    /// A short unshifted phase estimates the spectral radius `ρ` from `‖A v‖`; the
    /// main phase iterates on `A + 1.05ρ I`, whose spectrum is nonnegative so the top
    /// algebraic eigenvalue dominates. Stops after `max_steps` matrix products in
    /// total or once the residual `‖A v − θ v‖` drops below `tol`.
    pub fn top_eigenvector(&self, start: &[T], max_steps: usize, tol: T) -> PowerIteration<T> {
        let norm = |v: &[T]| dot(v, v).sqrt();
        let normalize = |v: &mut Vec<T>| {
            let nv = norm(v);
            if nv > T::zero() && nv.is_finite() {
                v.iter_mut().for_each(|x| *x /= nv);
            }
        };
        let mut v: Vec<T> = start.to_vec();
        normalize(&mut v);
        let mut steps = 0;
        let mut radius = T::zero();
        let probe_steps = (max_steps / 10).clamp(1, 30);
        let mut w = v.clone();
        while steps < probe_steps {
            let aw = self.matvec(&w);
            steps += 1;
            let r = norm(&aw);
            if r == T::zero() || !r.is_finite() {
                break;
            }
            radius = radius.max(r);
            w = aw;
            normalize(&mut w);
        }
        let shift = radius * T::lit(1.05);
        let mut av = self.matvec(&v);
        steps += 1;
        let mut theta = dot(&v, &av);
        let mut residual;
        loop {
            residual = av
                .iter()
                .zip(&v)
                .map(|(&a, &x)| (a - theta * x) * (a - theta * x))
                .sum::<T>()
                .sqrt();
            if residual < tol || steps >= max_steps {
                break;
            }
            let mut next: Vec<T> = av.iter().zip(&v).map(|(&a, &x)| a + shift * x).collect();
            let nn = norm(&next);
            if nn == T::zero() || !nn.is_finite() {
                break;
            }
            next.iter_mut().for_each(|x| *x /= nn);
            v = next;
            av = self.matvec(&v);
            steps += 1;
            theta = dot(&v, &av);
        }
        PowerIteration { vector: v, eigenvalue: theta, residual, steps, converged: residual < tol }
    }
}

#[derive(Debug, Clone)]
pub struct PowerIteration<T> {
    pub vector: Vec<T>,
    pub eigenvalue: T,
    pub residual: T,
    pub steps: usize,
    pub converged: bool,
}
