use crate::numerics::special::normal_cdf;

#[derive(Debug, Clone, Copy)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample Kolmogorov–Smirnov test against `N(0, 1)`.
pub fn ks_normal_test(samples: &[f64]) -> KsResult {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let c: f64 = normal_cdf(x);
            (c - i as f64 / n).max((i as f64 + 1.0) / n - c)
        })
        .fold(0.0, f64::max);
    let sn = n.sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    KsResult { statistic: d, p_value: kolmogorov_q(lambda) }
}

fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_detects_shift() {
        // normal quantiles on a regular grid: near-perfect fit
        let n = 2000;
        let grid: Vec<f64> = (0..n)
            .map(|i| {
                let p = (i as f64 + 0.5) / n as f64;
                crate::numerics::bisect(|x: f64| normal_cdf(x) - p, -10.0, 10.0, 1e-12).unwrap()
            })
            .collect();
        assert!(ks_normal_test(&grid).p_value > 0.99);
        let shifted: Vec<f64> = grid.iter().map(|x| x + 0.3).collect();
        assert!(ks_normal_test(&shifted).p_value < 1e-6);
    }
}
