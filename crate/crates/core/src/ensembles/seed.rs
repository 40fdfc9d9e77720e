use sha2::{Digest, Sha256};

/// A reproducible random stream: a master seed plus a label path such as `"goe/0"`.
///
/// Every random object in the crate is drawn from a [`CounterRng`] keyed by a
/// `Seed`, and entry `i` of the object uses counter `i`. Output therefore does not
/// depend on generation order or on the number of worker threads.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Seed {
    pub master: u64,
    pub label: String,
}

impl Seed {
    pub fn new(master: u64, label: impl Into<String>) -> Self {
        Self { master, label: label.into() }
    }

    /// Extends the label path with `/<part>`.
    pub fn child(&self, part: impl std::fmt::Display) -> Self {
        let label = if self.label.is_empty() {
            part.to_string()
        } else {
            format!("{}/{}", self.label, part)
        };
        Self { master: self.master, label }
    }

    pub fn rng(&self) -> CounterRng {
        let mut h = Sha256::new();
        h.update(self.master.to_le_bytes());
        h.update(self.label.as_bytes());
        let digest = h.finalize();
        let mut key = [0u8; 8];
        key.copy_from_slice(&digest[..8]);
        CounterRng { key: u64::from_le_bytes(key) }
    }
}

/// Counter-based generator: the value at index `i` is a pure function of `(key, i)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl CounterRng {
    #[inline]
    pub fn u64_at(&self, index: u64) -> u64 {
        mix64(self.key.wrapping_add(mix64(index.wrapping_add(1)).wrapping_mul(GOLDEN)))
    }

    /// Uniform in the open interval `(0, 1)`.
    #[inline]
    pub fn uniform_at(&self, index: u64) -> f64 {
        ((self.u64_at(index) >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box–Muller; consumes counters `2i` and `2i + 1`.
    #[inline]
    pub fn normal_at(&self, index: u64) -> f64 {
        let u1 = self.uniform_at(index.wrapping_mul(2));
        let u2 = self.uniform_at(index.wrapping_mul(2).wrapping_add(1));
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Uniform integer in `0..bound` (bound > 0), by rejection.
    pub fn below_at(&self, index: u64, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        let zone = u64::MAX - u64::MAX % bound;
        let mut k = 0u64;
        loop {
            let v = self.u64_at(index.wrapping_mul(64).wrapping_add(k));
            if v < zone {
                return v % bound;
            }
            k += 1;
        }
    }

    /// Sequential cursor over this stream starting at `start`.
    pub fn stream(&self, start: u64) -> RngStream {
        RngStream { rng: *self, next: start }
    }
}

/// Sequential view of a [`CounterRng`] for code that draws a variable number of values.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: CounterRng,
    next: u64,
}

impl RngStream {
    pub fn uniform(&mut self) -> f64 {
        let v = self.rng.uniform_at(self.next);
        self.next += 1;
        v
    }

    pub fn normal(&mut self) -> f64 {
        let v = self.rng.normal_at(self.next);
        self.next += 1;
        v
    }

    pub fn below(&mut self, bound: u64) -> u64 {
        let v = self.rng.below_at(self.next, bound);
        self.next += 1;
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_separate_streams() {
        let a = Seed::new(7, "goe/0").rng();
        let b = Seed::new(7, "goe/1").rng();
        let c = Seed::new(8, "goe/0").rng();
        assert_ne!(a.u64_at(0), b.u64_at(0));
        assert_ne!(a.u64_at(0), c.u64_at(0));
        assert_eq!(a.u64_at(123), Seed::new(7, "goe/0").rng().u64_at(123));
    }

    #[test]
    fn child_paths() {
        assert_eq!(Seed::new(1, "").child("a").label, "a");
        assert_eq!(Seed::new(1, "a").child(3).label, "a/3");
    }

    #[test]
    fn normal_moments() {
        let rng = Seed::new(42, "moments").rng();
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|i| rng.normal_at(i)).collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let v = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
        let k = xs.iter().map(|x| x.powi(4)).sum::<f64>() / n as f64;
        assert!(m.abs() < 0.01, "mean {m}");
        assert!((v - 1.0).abs() < 0.015, "var {v}");
        assert!((k - 3.0).abs() < 0.08, "kurtosis {k}");
    }

    #[test]
    fn below_is_in_range_and_roughly_uniform() {
        let rng = Seed::new(3, "below").rng();
        let mut counts = [0usize; 5];
        for i in 0..50_000 {
            counts[rng.below_at(i, 5) as usize] += 1;
        }
        assert!(counts.iter().all(|&c| (9_500..10_500).contains(&c)), "{counts:?}");
    }
}
