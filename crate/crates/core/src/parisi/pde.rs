use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::MixingPolynomial;
use crate::numerics::{log_normal_cdf, normal_cdf, GaussHermite};
use crate::parisi::RSBProfile;
use crate::scalar::{log_add_exp, Real};

/// Terminal condition of the Parisi PDE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Boundary {
    /// `Φ(1, x) = |x|`.
    Ising,
    /// `Φ(1, x) = x²/(2L) + L/2`; `L = 1` is `x²/2`, and `L` is minimized over
    /// in the spherical variational problem.
    Spherical { multiplier: f64 },
}

impl Boundary {
    pub fn spherical() -> Self {
        Boundary::Spherical { multiplier: 1.0 }
    }
}

#[derive(Debug, Clone)]
pub struct GridParams<T> {
    /// Half-width `L` of the space grid; default `max(8, 6 √ξ′(1))`.
    pub half_width: Option<T>,
    /// Number of space intervals `M` (nodes `M + 1`); must be even so `x = 0` is a node.
    pub nodes: usize,
    pub gh_order: usize,
    /// Stored time slices per profile interval.
    pub substeps: usize,
    /// Additional times at which slices are stored.
    pub extra_times: Vec<T>,
}

impl<T: Real> Default for GridParams<T> {
    fn default() -> Self {
        Self { half_width: None, nodes: 2048, gh_order: 64, substeps: 4, extra_times: Vec::new() }
    }
}

/// `Φ`, `∂ₓΦ`, `∂ₓₓΦ` on the space grid at one time.
#[derive(Debug, Clone)]
pub struct Slice<T> {
    pub t: T,
    pub phi: Vec<T>,
    pub dphi: Vec<T>,
    pub d2phi: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParisiValue<T> {
    /// `Φ(0,0) − ½∫ t ξ″ γ`.
    pub value: T,
    pub correction: T,
    pub phi00: T,
}

#[derive(Debug, Clone)]
pub struct ParisiSolution<T> {
    pub boundary: Boundary,
    pub profile: RSBProfile<T>,
    pub mixing: MixingPolynomial,
    pub half_width: T,
    pub x: Vec<T>,
    /// Increasing in time; the last slice is `t = 1`.
    pub slices: Vec<Slice<T>>,
    pub value: ParisiValue<T>,
}

struct Grid<T> {
    lo: T,
    h: T,
    m: usize,
}

impl<T: Real> Grid<T> {
    fn node(&self, i: usize) -> T {
        self.lo + self.h * T::from_usize_lossy(i)
    }

    /// Catmull-Rom interpolation, exact on quadratics; quadratic Taylor expansion
    /// from the edge values outside the grid.
    fn eval(&self, s: &Slice<T>, y: T) -> (T, T, T) {
        let u = (y - self.lo) / self.h;
        let m = self.m;
        if !(u >= T::zero()) || u > T::from_usize_lossy(m) {
            let e = if u > T::zero() { m } else { 0 };
            let dx = y - self.node(e);
            let (p, p1, p2) = (s.phi[e], s.dphi[e], s.d2phi[e]);
            let half = T::lit(0.5);
            return (p + p1 * dx + half * p2 * dx * dx, p1 + p2 * dx, p2);
        }
        let j = u.floor().to_usize().unwrap_or(0).min(m - 1);
        let f = u - T::from_usize_lossy(j);
        (cubic(&s.phi, j, f), cubic(&s.dphi, j, f), cubic(&s.d2phi, j, f))
    }
}

fn cubic<T: Real>(v: &[T], j: usize, f: T) -> T {
    let m = v.len() - 1;
    let three = T::lit(3.0);
    let p1 = v[j];
    let p2 = v[j + 1];
    let p0 = if j > 0 { v[j - 1] } else { three * v[0] - three * v[1] + v[2] };
    let p3 = if j + 2 <= m { v[j + 2] } else { three * v[m] - three * v[m - 1] + v[m - 2] };
    let half = T::lit(0.5);
    let a = -half * p0 + T::lit(1.5) * p1 - T::lit(1.5) * p2 + half * p3;
    let b = p0 - T::lit(2.5) * p1 + T::lit(2.0) * p2 - half * p3;
    let c = -half * p0 + half * p2;
    ((a * f + b) * f + c) * f + p1
}

/// Exact solution on the last interval for the Ising boundary:
/// `Φ(s, x) = a⁻¹ log E exp(a |x + σZ|)` with `σ² = ξ′(1) − ξ′(s)`.
fn ising_terminal<T: Real>(a: T, var: T, x: T) -> (T, T, T) {
    if var <= T::zero() {
        let sgn = if x > T::zero() {
            T::one()
        } else if x < T::zero() {
            -T::one()
        } else {
            T::zero()
        };
        return (x.abs(), sgn, T::zero());
    }
    let sd = var.sqrt();
    let z = x / sd;
    let log_pdf = -T::lit(0.5) * z * z - T::lit(0.5 * (2.0 * std::f64::consts::PI).ln());
    if a * (x.abs() + sd) < T::lit(SMALL_SPREAD) {
        // Heat-equation solution plus the first-order correction in a.
        let n = normal_cdf(z);
        let two = T::lit(2.0);
        let pdf = log_pdf.exp();
        let m = two * sd * pdf + x * (two * n - T::one());
        let d1 = two * n - T::one();
        let var = x * x + var - m * m;
        let d2 = two * pdf / sd + a * (T::one() - d1 * d1);
        return (m + T::lit(0.5) * a * var, d1, d2);
    }
    let half = T::lit(0.5);
    let l1 = a * x + half * a * a * var + log_normal_cdf((x + a * var) / sd);
    let l2 = -a * x + half * a * a * var + log_normal_cdf((-x + a * var) / sd);
    let lf = log_add_exp(l1, l2);
    let d1 = (half * (l1 - l2)).tanh();
    let d2 = a * (T::one() - d1 * d1) + T::lit(2.0) * (log_pdf - lf).exp() / sd;
    (lf / a, d1, d2)
}

/// Below this spread of `aΦ` the log-moment-generating form is replaced by its
/// cumulant expansion.
const SMALL_SPREAD: f64 = 1e-5;

struct Propagator<T> {
    gh: GaussHermite<T>,
}

impl<T: Real> Propagator<T> {
    /// Backward step over a constant-`γ = a` stretch with `d = ξ′(t′) − ξ′(s)`:
    /// `Φ(s,x) = a⁻¹ log E exp(a Φ(t′, x + √d Z))` (heat semigroup when `a = 0`).
    /// Derivatives come from the tilted measure.
    fn at(&self, grid: &Grid<T>, right: &Slice<T>, a: T, d: T, x: T) -> (T, T, T) {
        let sd = d.max(T::zero()).sqrt();
        let k = self.gh.len();
        let mut vals = [(T::zero(), T::zero(), T::zero()); 256];
        let vals = &mut vals[..k];
        for (v, &z) in vals.iter_mut().zip(&self.gh.nodes) {
            *v = grid.eval(right, x + sd * z);
        }
        let w = &self.gh.weights;
        if a == T::zero() {
            let mut out = (T::zero(), T::zero(), T::zero());
            for (v, &wi) in vals.iter().zip(w) {
                out.0 += wi * v.0;
                out.1 += wi * v.1;
                out.2 += wi * v.2;
            }
            return out;
        }
        let shift = vals.iter().fold(T::neg_infinity(), |m, v| m.max(a * v.0));
        let floor = vals.iter().fold(T::infinity(), |m, v| m.min(a * v.0));
        let mut z = T::zero();
        let (mut m1, mut m2, mut mxx) = (T::zero(), T::zero(), T::zero());
        for (v, &wi) in vals.iter().zip(w) {
            let e = wi * (a * v.0 - shift).exp();
            z += e;
            m1 += e * v.1;
            m2 += e * v.1 * v.1;
            mxx += e * v.2;
        }
        let (m1, m2, mxx) = (m1 / z, m2 / z, mxx / z);
        let value = if shift - floor < T::lit(SMALL_SPREAD) {
            // (1/a) log E e^{aV} loses all digits when aV barely varies; use E V + a Var V / 2.
            let mean: T = vals.iter().zip(w).map(|(v, &wi)| wi * v.0).sum();
            let var: T = vals.iter().zip(w).map(|(v, &wi)| wi * (v.0 - mean) * (v.0 - mean)).sum();
            mean + T::lit(0.5) * a * var
        } else {
            (shift + z.ln()) / a
        };
        (value, m1, a * (m2 - m1 * m1).max(T::zero()) + mxx)
    }
}

fn default_half_width<T: Real>(mixing: &MixingPolynomial) -> T {
    let s: T = mixing.derivative(1, T::one()).sqrt();
    (T::lit(6.0) * s).max(T::lit(8.0))
}

struct Setup<T> {
    grid: Grid<T>,
    prop: Propagator<T>,
    half_width: T,
}

fn setup<T: Real>(mixing: &MixingPolynomial, grid: &GridParams<T>) -> Result<Setup<T>> {
    if grid.nodes < 4 || grid.nodes % 2 != 0 {
        return Err(Error::InvalidInput(format!("grid nodes {} must be even and >= 4", grid.nodes)));
    }
    if grid.gh_order == 0 || grid.gh_order > 256 {
        return Err(Error::InvalidInput(format!("Gauss-Hermite order {} outside 1..=256", grid.gh_order)));
    }
    let half_width = grid.half_width.unwrap_or_else(|| default_half_width(mixing));
    let floor = T::lit(4.0) * mixing.derivative::<T>(1, T::one()).sqrt();
    if !(half_width >= floor) {
        return Err(Error::InvalidInput(format!(
            "half-width {half_width} below 4 sqrt(xi'(1)) = {floor}"
        )));
    }
    let h = T::lit(2.0) * half_width / T::from_usize_lossy(grid.nodes);
    Ok(Setup {
        grid: Grid { lo: -half_width, h, m: grid.nodes },
        prop: Propagator { gh: GaussHermite::new(grid.gh_order)? },
        half_width,
    })
}

fn check_spherical<T: Real>(profile: &RSBProfile<T>, mixing: &MixingPolynomial, multiplier: f64) -> Result<()> {
    if !(multiplier > 0.0) || !multiplier.is_finite() {
        return Err(Error::InvalidInput(format!("spherical multiplier {multiplier} must be > 0")));
    }
    let d0 = spherical_denominator(profile, mixing, multiplier, T::zero());
    if !(d0 > T::zero()) {
        return Err(Error::Domain(format!(
            "profile too large for the spherical boundary: L - ∫γξ″ = {d0} <= 0"
        )));
    }
    Ok(())
}

/// `D(t) = L − ∫_t^1 γ ξ″`, the reciprocal curvature of the spherical solution.
pub fn spherical_denominator<T: Real>(profile: &RSBProfile<T>, mixing: &MixingPolynomial, multiplier: f64, t: T) -> T {
    let bp = profile.breakpoints();
    let mut d = T::lit(multiplier);
    for (i, &g) in profile.values().iter().enumerate() {
        let lo = bp[i].max(t);
        if lo < bp[i + 1] {
            d -= g * (mixing.derivative(1, bp[i + 1]) - mixing.derivative(1, lo));
        }
    }
    d
}

/// Exact spherical solution `Φ(t,x) = A(t) x²/2 + C(t)`; returns `(A(t), C(t))`.
pub fn spherical_coefficients<T: Real>(
    profile: &RSBProfile<T>,
    mixing: &MixingPolynomial,
    multiplier: f64,
    t: T,
) -> Result<(T, T)> {
    check_spherical(profile, mixing, multiplier)?;
    let bp = profile.breakpoints();
    let half = T::lit(0.5);
    let mut c = T::lit(multiplier) * half;
    for (i, &g) in profile.values().iter().enumerate() {
        let lo = bp[i].max(t);
        let hi = bp[i + 1];
        if lo >= hi {
            continue;
        }
        // On [lo, hi] D(s) = D(hi) − g (ξ′(hi) − ξ′(s)), so ∫ ξ″/D is explicit.
        let d_hi = spherical_denominator(profile, mixing, multiplier, hi);
        let dxi = mixing.derivative::<T>(1, hi) - mixing.derivative::<T>(1, lo);
        let integral = if g > T::zero() {
            -(-g * dxi / d_hi).ln_1p() / g
        } else {
            dxi / d_hi
        };
        c += half * integral;
    }
    Ok((T::one() / spherical_denominator(profile, mixing, multiplier, t), c))
}

/// Spherical functional from the exact quadratic solution.
pub fn spherical_functional_exact<T: Real>(
    profile: &RSBProfile<T>,
    mixing: &MixingPolynomial,
    multiplier: f64,
) -> Result<ParisiValue<T>> {
    let (_, phi00) = spherical_coefficients(profile, mixing, multiplier, T::zero())?;
    let correction = profile.correction(mixing);
    Ok(ParisiValue { value: phi00 - correction, correction, phi00 })
}

fn terminal_slice<T: Real>(grid: &Grid<T>, boundary: Boundary) -> Slice<T> {
    let xs: Vec<T> = (0..=grid.m).map(|i| grid.node(i)).collect();
    let (phi, dphi, d2phi) = match boundary {
        Boundary::Ising => (
            xs.iter().map(|x| x.abs()).collect(),
            xs.iter().map(|&x| ising_terminal(T::one(), T::zero(), x).1).collect(),
            vec![T::zero(); xs.len()],
        ),
        Boundary::Spherical { multiplier } => {
            let l = T::lit(multiplier);
            let half = T::lit(0.5);
            (
                xs.iter().map(|&x| half * x * x / l + half * l).collect(),
                xs.iter().map(|&x| x / l).collect(),
                vec![T::one() / l; xs.len()],
            )
        }
    };
    Slice { t: T::one(), phi, dphi, d2phi }
}

fn slice_times<T: Real>(profile: &RSBProfile<T>, grid: &GridParams<T>, i: usize) -> Vec<T> {
    let bp = profile.breakpoints();
    let (lo, hi) = (bp[i], bp[i + 1]);
    let s = grid.substeps.max(1);
    let mut ts: Vec<T> = (0..s)
        .map(|j| lo + (hi - lo) * T::from_usize_lossy(j) / T::from_usize_lossy(s))
        .collect();
    ts.extend(grid.extra_times.iter().copied().filter(|&t| t >= lo && t < hi));
    ts.sort_by(|a, b| b.partial_cmp(a).expect("finite times"));
    ts.dedup_by(|a, b| (*a - *b).abs() <= T::epsilon() * T::lit(16.0));
    ts
}

fn check_slice<T: Real>(s: &Slice<T>) -> Result<()> {
    let bad = s.phi.iter().chain(&s.dphi).chain(&s.d2phi).any(|v| !v.is_finite());
    if bad {
        return Err(Error::NumericInstability(format!("non-finite PDE solution at t = {}", s.t)));
    }
    Ok(())
}

/// Solves the Parisi PDE `∂ₜΦ + ½ξ″(∂ₓₓΦ + γ(∂ₓΦ)²) = 0` backward from `t = 1`.
///
/// Each constant-`γ` interval is handled exactly by the Cole–Hopf transform,
/// with the Gaussian expectation taken by Gauss–Hermite quadrature. Every stored
/// slice is computed directly from the right end of its interval, so substeps do
/// not accumulate error. For the Ising boundary the last interval is in closed form.
pub fn solve_pde<T: Real>(
    profile: &RSBProfile<T>,
    mixing: &MixingPolynomial,
    boundary: Boundary,
    grid: &GridParams<T>,
) -> Result<ParisiSolution<T>> {
    if let Boundary::Spherical { multiplier } = boundary {
        check_spherical(profile, mixing, multiplier)?;
    }
    let st = setup(mixing, grid)?;
    let g = &st.grid;
    let xs: Vec<T> = (0..=g.m).map(|i| g.node(i)).collect();
    let bp = profile.breakpoints();
    let k = profile.levels();
    let mut slices = vec![terminal_slice(g, boundary)];
    let mut right = slices[0].clone();
    for i in (0..k).rev() {
        let a = profile.values()[i];
        let hi = bp[i + 1];
        let xi_hi: T = mixing.derivative(1, hi);
        let mut left = None;
        for s in slice_times(profile, grid, i) {
            let d = xi_hi - mixing.derivative(1, s);
            let closed = matches!(boundary, Boundary::Ising) && i == k - 1;
            let vals: Vec<(T, T, T)> = xs
                .par_iter()
                .map(|&x| if closed { ising_terminal(a, d, x) } else { st.prop.at(g, &right, a, d, x) })
                .collect();
            let slice = Slice {
                t: s,
                phi: vals.iter().map(|v| v.0).collect(),
                dphi: vals.iter().map(|v| v.1).collect(),
                d2phi: vals.iter().map(|v| v.2).collect(),
            };
            check_slice(&slice)?;
            if s == bp[i] {
                left = Some(slice.clone());
            }
            slices.push(slice);
        }
        right = left.expect("interval start is always a slice time");
    }
    slices.reverse();
    let phi00 = slices[0].phi[g.m / 2];
    let correction = profile.correction(mixing);
    Ok(ParisiSolution {
        boundary,
        profile: profile.clone(),
        mixing: mixing.clone(),
        half_width: st.half_width,
        x: xs,
        slices,
        value: ParisiValue { value: phi00 - correction, correction, phi00 },
    })
}

/// `P(γ; ξ)`. Only interval endpoints are computed and the final step is
/// evaluated at `x = 0` alone.
pub fn functional<T: Real>(
    profile: &RSBProfile<T>,
    mixing: &MixingPolynomial,
    boundary: Boundary,
    grid: &GridParams<T>,
) -> Result<ParisiValue<T>> {
    if let Boundary::Spherical { multiplier } = boundary {
        check_spherical(profile, mixing, multiplier)?;
    }
    let st = setup(mixing, grid)?;
    let g = &st.grid;
    let bp = profile.breakpoints();
    let k = profile.levels();
    let ising = matches!(boundary, Boundary::Ising);
    let phi00 = if k == 1 && ising {
        ising_terminal(profile.values()[0], mixing.derivative(1, T::one()), T::zero()).0
    } else {
        let xs: Vec<T> = (0..=g.m).map(|i| g.node(i)).collect();
        let mut right = terminal_slice(g, boundary);
        let mut phi00 = T::zero();
        for i in (0..k).rev() {
            let a = profile.values()[i];
            let d = mixing.derivative::<T>(1, bp[i + 1]) - mixing.derivative::<T>(1, bp[i]);
            let closed = ising && i == k - 1;
            if i == 0 {
                phi00 = st.prop.at(g, &right, a, d, T::zero()).0;
                break;
            }
            let vals: Vec<(T, T, T)> = xs
                .par_iter()
                .map(|&x| if closed { ising_terminal(a, d, x) } else { st.prop.at(g, &right, a, d, x) })
                .collect();
            right = Slice {
                t: bp[i],
                phi: vals.iter().map(|v| v.0).collect(),
                dphi: vals.iter().map(|v| v.1).collect(),
                d2phi: vals.iter().map(|v| v.2).collect(),
            };
            check_slice(&right)?;
        }
        phi00
    };
    if !phi00.is_finite() {
        return Err(Error::NumericInstability("non-finite Φ(0,0)".into()));
    }
    let correction = profile.correction(mixing);
    Ok(ParisiValue { value: phi00 - correction, correction, phi00 })
}

impl<T: Real> ParisiSolution<T> {
    fn grid(&self) -> Grid<T> {
        let m = self.x.len() - 1;
        Grid { lo: self.x[0], h: (self.x[m] - self.x[0]) / T::from_usize_lossy(m), m }
    }

    /// Index of the stored slice whose time equals `t` up to rounding.
    pub fn slice_index(&self, t: T) -> Option<usize> {
        let tol = T::epsilon() * T::lit(64.0);
        self.slices.iter().position(|s| (s.t - t).abs() <= tol)
    }

    /// `(Φ, ∂ₓΦ, ∂ₓₓΦ)` at `(t, x)`: cubic in `x` on a stored slice, linear in `t`
    /// between the two neighbouring slices.
    pub fn eval(&self, t: T, x: T) -> (T, T, T) {
        let g = self.grid();
        let j = self.slices.partition_point(|s| s.t <= t);
        if j == 0 {
            return g.eval(&self.slices[0], x);
        }
        let lo = &self.slices[j - 1];
        if j == self.slices.len() || lo.t == t {
            return g.eval(lo, x);
        }
        let hi = &self.slices[j];
        let w = (t - lo.t) / (hi.t - lo.t);
        let a = g.eval(lo, x);
        let b = g.eval(hi, x);
        let mix = |p: T, q: T| p + w * (q - p);
        (mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
    }

    /// Smallest discrete second difference of `Φ` over all slices (convexity check).
    pub fn min_second_difference(&self) -> T {
        let h = self.x[1] - self.x[0];
        self.slices
            .iter()
            .flat_map(|s| s.phi.windows(3).map(move |w| (w[0] - T::lit(2.0) * w[1] + w[2]) / (h * h)))
            .fold(T::infinity(), |a, b| a.min(b))
    }

    /// Grid dump with columns `t,x,phi,dphi,d2phi`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,x,phi,dphi,d2phi")?;
        for s in &self.slices {
            for (i, x) in self.x.iter().enumerate() {
                writeln!(w, "{},{},{},{},{}", s.t, x, s.phi[i], s.dphi[i], s.d2phi[i])?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catmull_rom_exact_on_quadratics() {
        let g = Grid { lo: -1.0, h: 0.25, m: 8 };
        let xs: Vec<f64> = (0..=8).map(|i| g.node(i)).collect();
        let q = |x: f64| 0.3 * x * x - x + 2.0;
        let s = Slice {
            t: 1.0,
            phi: xs.iter().map(|&x| q(x)).collect(),
            dphi: xs.iter().map(|&x| 0.6 * x - 1.0).collect(),
            d2phi: vec![0.6; 9],
        };
        for y in [-1.7, -0.99, -0.3, 0.01, 0.9, 1.0, 2.5] {
            let (p, p1, p2) = g.eval(&s, y);
            assert!((p - q(y)).abs() < 1e-12, "{y}");
            assert!((p1 - (0.6 * y - 1.0)).abs() < 1e-12);
            assert!((p2 - 0.6).abs() < 1e-12);
        }
    }

    #[test]
    fn terminal_closed_form_matches_quadrature() {
        let gh = GaussHermite::<f64>::new(160).unwrap();
        for (a, var, x) in [(0.0f64, 0.5f64, 0.3f64), (1.3, 0.4, -0.7), (2.0, 0.1, 0.05)] {
            let (p, p1, p2) = ising_terminal(a, var, x);
            let sd: f64 = var.sqrt();
            if a == 0.0 {
                let want = gh.expect(x, sd, |y| y.abs());
                assert!((p - want).abs() < 1e-3);
            } else {
                let want = gh.expect(x, sd, |y| (a * y.abs()).exp()).ln() / a;
                assert!((p - want).abs() < 1e-3, "{p} {want}");
            }
            let h = 1e-4;
            let (pp, _, _) = ising_terminal(a, var, x + h);
            let (pm, _, _) = ising_terminal(a, var, x - h);
            assert!(((pp - pm) / (2.0 * h) - p1).abs() < 1e-6);
            assert!(((pp - 2.0 * p + pm) / (h * h) - p2).abs() < 1e-4);
        }
    }
}
