//! Reference laws used for calibration: chi-square with `k` degrees of
//! freedom and the standard normal.

use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::erf;

/// `P(chi2_k <= x)`.
pub fn chi2_cdf(x: f64, k: u32) -> f64 {
    assert!(k >= 1, "degrees of freedom must be positive");
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    ChiSquared::new(k as f64).expect("k >= 1").cdf(x)
}

/// Upper tail `P(chi2_k > x)`, computed directly so tiny p-values keep
/// their relative precision.
pub fn chi2_sf(x: f64, k: u32) -> f64 {
    assert!(k >= 1, "degrees of freedom must be positive");
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    ChiSquared::new(k as f64).expect("k >= 1").sf(x)
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erf::erfc(-z / std::f64::consts::SQRT_2)
}

pub fn normal_sf(z: f64) -> f64 {
    0.5 * erf::erfc(z / std::f64::consts::SQRT_2)
}

/// Standard normal quantile, by Newton refinement of a bisection bracket.
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "probability must lie in (0, 1)");
    let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson integration of the chi-square density on `[0, x]`,
    /// after the substitution `t = s^2` that removes the k = 1 singularity.
    fn chi2_cdf_quadrature(x: f64, k: u32) -> f64 {
        let kf = k as f64;
        let log_norm = -(kf / 2.0) * std::f64::consts::LN_2 - statrs::function::gamma::ln_gamma(kf / 2.0);
        // density in s: f(s^2) * 2s
        let g = |s: f64| {
            if s == 0.0 {
                return if k == 1 { 2.0 * log_norm.exp() } else { 0.0 };
            }
            let t = s * s;
            2.0 * s * (log_norm + (kf / 2.0 - 1.0) * t.ln() - t / 2.0).exp()
        };
        let b = x.sqrt();
        let m = 20_000;
        let h = b / m as f64;
        let mut acc = g(0.0) + g(b);
        for i in 1..m {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * g(i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn chi2_boundaries() {
        for k in 1..6 {
            assert_eq!(chi2_cdf(0.0, k), 0.0);
            assert_eq!(chi2_sf(0.0, k), 1.0);
        }
    }

    #[test]
    fn chi2_one_df_95_percent_point() {
        assert!((chi2_cdf(3.841459, 1) - 0.95).abs() < 1e-6);
        assert!((chi2_cdf_quadrature(3.841459, 1) - 0.95).abs() < 1e-6);
    }

    #[test]
    fn chi2_matches_quadrature_oracle() {
        for &k in &[1u32, 2, 3, 5, 16] {
            for &x in &[0.3, 1.0, 2.5, 7.0, 20.0] {
                let q = chi2_cdf_quadrature(x, k);
                let c = chi2_cdf(x, k);
                assert!(
                    (c - q).abs() <= 1e-10 * q.max(1e-300) + 1e-12,
                    "k={k} x={x}: {c} vs {q}"
                );
                assert!((chi2_sf(x, k) - (1.0 - q)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn normal_symmetry_and_quantile() {
        assert_eq!(normal_cdf(0.0), 0.5);
        let c = normal_cdf(1.959963984540054);
        assert!((c - 0.975).abs() < 1e-11, "{c}");
        assert!((normal_sf(2.0) + normal_cdf(2.0) - 1.0).abs() < 1e-15);
        assert!((normal_quantile(0.975) - 1.959963984540054).abs() < 1e-9);
    }
}
