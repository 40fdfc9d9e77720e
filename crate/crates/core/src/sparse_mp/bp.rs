use std::io::Write;

use rayon::prelude::*;

use super::model::GraphicalModel;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// One probability vector per directed edge, indexed like
/// [`GraphicalModel::directed_edge`].
#[derive(Debug, Clone, PartialEq)]
pub struct MessageSet<T> {
    pub messages: Vec<Vec<T>>,
    pub t: usize,
}

impl<T: Real> MessageSet<T> {
    pub fn uniform(model: &GraphicalModel<T>) -> Self {
        let q = model.q();
        Self { messages: vec![vec![T::one() / T::from_usize_lossy(q); q]; model.num_directed_edges()], t: 0 }
    }

    /// Largest `|Σ_x ν(x) − 1|` over all messages.
    pub fn normalization_error(&self) -> T {
        self.messages.iter().map(|m| (m.iter().copied().sum::<T>() - T::one()).abs()).fold(T::zero(), T::max)
    }

    /// `max_d ‖ν_d − ν′_d‖_∞`.
    pub fn distance(&self, other: &Self) -> T {
        self.messages
            .iter()
            .zip(&other.messages)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| (x - y).abs()))
            .fold(T::zero(), T::max)
    }
}

/// A rule producing the new message on one directed edge from the previous set.
pub trait MessageUpdate<T: Real>: Sync {
    /// Unnormalized new message along directed edge `d`.
    fn update(&self, model: &GraphicalModel<T>, messages: &MessageSet<T>, d: usize) -> Vec<T>;
}

/// Sum-product belief propagation.
#[derive(Debug, Clone, Copy, Default)]
pub struct BeliefPropagation;

/// `Σ_{x_k} ψ(x_i, x_k) ν_{k→i}(x_k)` as a function of `x_i`, for the edge `i→k`
/// with id `d` (so the incoming message is on `d ^ 1`), scaled to sum to one.
fn incoming<T: Real>(model: &GraphicalModel<T>, messages: &MessageSet<T>, d: usize) -> Vec<T> {
    let q = model.q();
    let nu = &messages.messages[GraphicalModel::<T>::reverse(d)];
    let mut out: Vec<T> = (0..q).map(|a| (0..q).map(|b| model.potential(d, a, b) * nu[b]).sum()).collect();
    let s: T = out.iter().copied().sum();
    if s > T::zero() {
        out.iter_mut().for_each(|v| *v /= s);
    }
    out
}

impl<T: Real> MessageUpdate<T> for BeliefPropagation {
    fn update(&self, model: &GraphicalModel<T>, messages: &MessageSet<T>, d: usize) -> Vec<T> {
        let (i, j) = model.directed_edge(d);
        let mut out = vec![T::one(); model.q()];
        for &(k, dk) in model.neighbours(i) {
            if k == j {
                continue;
            }
            for (o, v) in out.iter_mut().zip(incoming(model, messages, dk)) {
                *o *= v;
            }
        }
        out
    }
}

/// One synchronous sweep of a generic update with damping
/// `ν ← (1 − damping) ν_new + damping ν_old`.
pub fn mp_step<T: Real, U: MessageUpdate<T> + ?Sized>(
    model: &GraphicalModel<T>,
    messages: &MessageSet<T>,
    rule: &U,
    damping: T,
) -> Result<MessageSet<T>> {
    let new: Vec<Result<Vec<T>>> = (0..model.num_directed_edges())
        .into_par_iter()
        .map(|d| {
            let mut m = rule.update(model, messages, d);
            normalize(&mut m).map_err(|_| {
                let (i, j) = model.directed_edge(d);
                Error::NumericInstability(format!("zero normalizer on message {i}->{j}"))
            })?;
            if damping > T::zero() {
                for (v, &old) in m.iter_mut().zip(&messages.messages[d]) {
                    *v = (T::one() - damping) * *v + damping * old;
                }
                normalize(&mut m)?;
            }
            Ok(m)
        })
        .collect();
    Ok(MessageSet { messages: new.into_iter().collect::<Result<_>>()?, t: messages.t + 1 })
}

fn normalize<T: Real>(m: &mut [T]) -> Result<()> {
    let s: T = m.iter().copied().sum();
    if !(s > T::zero()) || !s.is_finite() {
        return Err(Error::NumericInstability("zero normalizer".into()));
    }
    m.iter_mut().for_each(|v| *v /= s);
    Ok(())
}

/// One BP sweep.
pub fn bp_step<T: Real>(model: &GraphicalModel<T>, messages: &MessageSet<T>, damping: T) -> Result<MessageSet<T>> {
    mp_step(model, messages, &BeliefPropagation, damping)
}

#[derive(Debug, Clone)]
pub struct BpRun<T> {
    pub messages: MessageSet<T>,
    pub converged: bool,
    /// Sweeps performed, including the one that confirmed convergence.
    pub iterations: usize,
    /// Change in the last sweep.
    pub last_change: T,
}

/// Sweeps from uniform messages until the largest change is below `tol` or
/// `max_iters` sweeps have run.
pub fn run_bp<T: Real>(model: &GraphicalModel<T>, max_iters: usize, tol: T, damping: T) -> Result<BpRun<T>> {
    if max_iters == 0 {
        return Err(Error::InvalidInput("max_iters must be >= 1".into()));
    }
    if !(damping >= T::zero() && damping < T::one()) {
        return Err(Error::InvalidInput(format!("damping {damping} outside [0, 1)")));
    }
    let mut msgs = MessageSet::uniform(model);
    let mut change = T::infinity();
    for it in 1..=max_iters {
        let next = bp_step(model, &msgs, damping)?;
        change = next.distance(&msgs);
        msgs = next;
        if change < tol || tol == T::infinity() {
            return Ok(BpRun { messages: msgs, converged: true, iterations: it, last_change: change });
        }
    }
    Ok(BpRun { messages: msgs, converged: false, iterations: max_iters, last_change: change })
}

/// Beliefs `b_i(x) ∝ Π_{k∈∂i} Σ_{x_k} ψ_ik(x, x_k) ν_{k→i}(x_k)`.
pub fn bp_marginals<T: Real>(model: &GraphicalModel<T>, messages: &MessageSet<T>) -> Vec<Vec<T>> {
    (0..model.n())
        .map(|i| {
            let mut b = vec![T::one(); model.q()];
            for &(_, d) in model.neighbours(i) {
                for (o, v) in b.iter_mut().zip(incoming(model, messages, d)) {
                    *o *= v;
                }
            }
            let _ = normalize(&mut b);
            b
        })
        .collect()
}

/// Largest state space accepted by [`exact_marginals`].
pub const MAX_ENUMERATION_STATES: f64 = 1e7;

/// Exact marginals by enumerating all `q^n` configurations (log-weights shifted
/// by their maximum before exponentiation).
pub fn exact_marginals<T: Real>(model: &GraphicalModel<T>) -> Result<Vec<Vec<T>>> {
    let (n, q) = (model.n(), model.q());
    if (q as f64).powi(n as i32) > MAX_ENUMERATION_STATES {
        return Err(Error::ResourceLimit(format!("{q}^{n} configurations exceed {MAX_ENUMERATION_STATES:e}")));
    }
    let total = q.pow(n as u32);
    let logs: Vec<Vec<f64>> = (0..model.graph().edges.len())
        .map(|e| (0..q * q).map(|k| model.potential(2 * e, k / q, k % q).to_f64_lossy().ln()).collect())
        .collect();
    let edges = &model.graph().edges;
    let log_weight = |x: &[usize]| -> f64 { edges.iter().zip(&logs).map(|(&(u, v), t)| t[x[u] * q + x[v]]).sum() };
    let mut x = vec![0usize; n];
    let advance = |x: &mut [usize]| {
        for v in x.iter_mut() {
            *v += 1;
            if *v < q {
                return;
            }
            *v = 0;
        }
    };
    let mut shift = f64::NEG_INFINITY;
    for _ in 0..total {
        shift = shift.max(log_weight(&x));
        advance(&mut x);
    }
    let mut acc = vec![vec![0.0f64; q]; n];
    for _ in 0..total {
        let w = (log_weight(&x) - shift).exp();
        for (a, &s) in acc.iter_mut().zip(x.iter()) {
            a[s] += w;
        }
        advance(&mut x);
    }
    Ok(acc
        .into_iter()
        .map(|a| {
            let z: f64 = a.iter().sum();
            a.into_iter().map(|v| T::lit(v / z)).collect()
        })
        .collect())
}

/// Writes `vertex,state,belief`.
pub fn write_beliefs_csv<T: Real, W: Write>(beliefs: &[Vec<T>], mut w: W) -> std::io::Result<()> {
    writeln!(w, "vertex,state,belief")?;
    for (i, b) in beliefs.iter().enumerate() {
        for (a, v) in b.iter().enumerate() {
            writeln!(w, "{i},{a},{:.15e}", v.to_f64_lossy())?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isolated_edge_messages_are_uniform() {
        let m = GraphicalModel::<f64>::new(2, 3, vec![(0, 1, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0])]).unwrap();
        let s = bp_step(&m, &MessageSet::uniform(&m), 0.0).unwrap();
        for msg in &s.messages {
            assert!(msg.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
        }
    }

    #[test]
    fn exact_guard() {
        let m = GraphicalModel::<f64>::new(30, 2, vec![]).unwrap();
        assert!(exact_marginals(&m).unwrap_err().is_resource_limit());
        let one = GraphicalModel::<f64>::new(1, 4, vec![]).unwrap();
        assert_eq!(exact_marginals(&one).unwrap(), vec![vec![0.25; 4]]);
    }
}
