use crate::scalar::Real;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn erfc<T: Real>(x: T) -> T {
    T::lit(libm::erfc(x.to_f64_lossy()))
}

pub fn normal_pdf<T: Real>(x: T) -> T {
    let x = x.to_f64_lossy();
    T::lit(FRAC_1_SQRT_2PI * (-0.5 * x * x).exp())
}

/// Standard normal CDF.
pub fn normal_cdf<T: Real>(x: T) -> T {
    T::lit(0.5 * libm::erfc(-x.to_f64_lossy() * std::f64::consts::FRAC_1_SQRT_2))
}

/// `log Φ(x)`, accurate in the far left tail where `Φ` underflows.
pub fn log_normal_cdf<T: Real>(x: T) -> T {
    let x = x.to_f64_lossy();
    if x > -30.0 {
        return T::lit((0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)).ln());
    }
    // Mills ratio asymptotics.
    let x2 = x * x;
    let series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
    T::lit(-0.5 * x2 - (-x).ln() + FRAC_1_SQRT_2PI.ln() + series.ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_reference_values() {
        assert!((normal_cdf(0.0_f64) - 0.5).abs() < 1e-16);
        assert!((normal_cdf(1.96_f64) - 0.975_002_104_851_780).abs() < 1e-12);
        assert!((normal_cdf(-3.0_f64) - 0.001_349_898_031_630_094_6).abs() < 1e-15);
    }

    #[test]
    fn log_cdf_tail_is_continuous() {
        let a: f64 = log_normal_cdf(-29.999);
        let b: f64 = log_normal_cdf(-30.001);
        assert!((a - b).abs() < 0.1);
        assert!(log_normal_cdf(-50.0_f64).is_finite());
        assert!((log_normal_cdf(5.0_f64) - normal_cdf(5.0_f64).ln()).abs() < 1e-15);
    }
}
