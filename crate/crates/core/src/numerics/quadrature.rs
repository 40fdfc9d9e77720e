use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest order whose Newton initial guesses are reliable.
pub const MAX_GH_ORDER: usize = 180;

/// Gauss–Hermite rule normalized for expectations under `N(0, 1)`:
/// `E f(G) ≈ Σ w_i f(x_i)` with `Σ w_i = 1`.
#[derive(Debug, Clone)]
pub struct GaussHermite<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> GaussHermite<T> {
    /// Builds an `order`-point rule by Newton iteration on the orthonormal
    /// Hermite recurrence.
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 || order > MAX_GH_ORDER {
            return Err(Error::InvalidInput(format!(
                "Gauss-Hermite order must lie in 1..={MAX_GH_ORDER}, got {order}"
            )));
        }
        let (x, w) = physicists_rule(order)?;
        let total: f64 = w.iter().sum::<f64>() / std::f64::consts::PI.sqrt();
        if (total - 1.0).abs() > 1e-10 || x.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(Error::NumericInstability(format!("Gauss-Hermite rule of order {order} is degenerate")));
        }
        let sqrt_pi = std::f64::consts::PI.sqrt();
        let nodes = x.iter().map(|&z| T::lit(z * std::f64::consts::SQRT_2)).collect();
        let weights = w.iter().map(|&v| T::lit(v / sqrt_pi)).collect();
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `E f(mean + sd·G)`.
    pub fn expect<F: FnMut(T) -> T>(&self, mean: T, sd: T, mut f: F) -> T {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&z, &w)| w * f(mean + sd * z))
            .sum()
    }
}

fn physicists_rule(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    const PIM4: f64 = 0.751_125_544_464_942_5;
    const EPS: f64 = 1e-14;
    let nf = n as f64;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = 0.0_f64;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        let mut converged = false;
        for _ in 0..100 {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 1..=n {
                let jf = j as f64;
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= EPS * z.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NumericInstability(format!(
                "Gauss-Hermite root {i} of order {n} did not converge"
            )));
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    // ascending order
    x.reverse();
    w.reverse();
    Ok((x, w))
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, tol: T) -> T {
    fn rec<T: Real, F: Fn(T) -> T>(
        f: &F,
        a: T,
        b: T,
        fa: T,
        fm: T,
        fb: T,
        whole: T,
        tol: T,
        depth: u32,
    ) -> T {
        let two = T::lit(2.0);
        let m = (a + b) / two;
        let lm = (a + m) / two;
        let rm = (m + b) / two;
        let flm = f(lm);
        let frm = f(rm);
        let six = T::lit(6.0);
        let left = (m - a) / six * (fa + T::lit(4.0) * flm + fm);
        let right = (b - m) / six * (fm + T::lit(4.0) * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= T::lit(15.0) * tol {
            return left + right + delta / T::lit(15.0);
        }
        rec(f, a, m, fa, flm, fm, left, tol / two, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, tol / two, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let m = (a + b) / T::lit(2.0);
    let fm = f(m);
    let whole = (b - a) / T::lit(6.0) * (fa + T::lit(4.0) * fm + fb);
    rec(&f, a, b, fa, fm, fb, whole, tol, 48)
}
