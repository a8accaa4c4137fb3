//! Random streams and samplers.
//!
//! Every stream is a xoshiro256** generator seeded through SplitMix64 from a
//! single 64-bit value; replicate `r` of a plan with base seed `s` uses seed
//! `s + r` (wrapping). Uniforms take the top 53 bits of a draw and sit at
//! cell midpoints, `((u >> 11) + 0.5) 2^-53`, so they are never 0 or 1.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

use crate::contamination::ContaminationSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Stream {
    inner: Xoshiro256StarStar,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: Xoshiro256StarStar::seed_from_u64(seed),
        }
    }

    /// Stream of replicate `index` under `base_seed`.
    pub fn for_replicate(base_seed: u64, index: u64) -> Self {
        Self::new(base_seed.wrapping_add(index))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on (0, 1).
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

/// Exponential draws `-ln(U) / theta`.
pub fn rexp(rng: &mut Stream, theta: f64, n: usize) -> Result<Vec<f64>> {
    positive("theta", theta)?;
    Ok((0..n).map(|_| -rng.uniform().ln() / theta).collect())
}

/// Pareto draws `nu U^{-1/gamma}`, supported on `x > nu`.
pub fn rpareto(rng: &mut Stream, gamma: f64, nu: f64, n: usize) -> Result<Vec<f64>> {
    if !(gamma > 1.0 && nu > 1.0 && gamma.is_finite() && nu.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "pareto needs gamma > 1 and nu > 1, got ({gamma}, {nu})"
        )));
    }
    Ok((0..n).map(|_| nu * rng.uniform().powf(-1.0 / gamma)).collect())
}

/// Draws from `(1 - lambda) Exp(theta) + lambda Pareto(gamma, nu)`. Each
/// observation first spends a uniform on the component choice, except when
/// `lambda = 0`, where the stream is exactly that of [`rexp`].
pub fn rmixture(rng: &mut Stream, theta: f64, lambda: f64, spec: &ContaminationSpec, n: usize) -> Result<Vec<f64>> {
    positive("theta", theta)?;
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!(
            "mixture weight must lie in [0, 1), got {lambda}"
        )));
    }
    if lambda == 0.0 {
        return rexp(rng, theta, n);
    }
    let (gamma, nu) = (spec.pareto_gamma, spec.pareto_nu);
    rpareto(rng, gamma, nu, 0)?;
    Ok((0..n)
        .map(|_| {
            if rng.uniform() < lambda {
                nu * rng.uniform().powf(-1.0 / gamma)
            } else {
                -rng.uniform().ln() / theta
            }
        })
        .collect())
}

/// `n` points uniform on `[0, 1]^d`, row-major.
pub fn runif_d(rng: &mut Stream, d: usize, n: usize) -> Result<Vec<f64>> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    Ok((0..n * d).map(|_| rng.uniform()).collect())
}

/// Beta(2, 2) as the median of three uniforms.
pub fn rbeta22(rng: &mut Stream) -> f64 {
    let (a, b, c) = (rng.uniform(), rng.uniform(), rng.uniform());
    a.max(b).min(a.min(b).max(c))
}

/// Standard normals by Box-Muller, both values of each pair used.
pub fn rnormal(rng: &mut Stream, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    while out.len() < n {
        let (u, v) = (rng.uniform(), rng.uniform());
        let radius = (-2.0 * u.ln()).sqrt();
        let angle = std::f64::consts::TAU * v;
        out.push(radius * angle.cos());
        out.push(radius * angle.sin());
    }
    out.truncate(n);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::ks_distance;

    fn spec() -> ContaminationSpec {
        ContaminationSpec::new(0.5, 2.0, 2.0, 1.5).unwrap()
    }

    #[test]
    fn uniforms_are_interior_and_reproducible() {
        let mut a = Stream::new(7);
        let mut b = Stream::new(7);
        for _ in 0..1000 {
            let u = a.uniform();
            assert!(u > 0.0 && u < 1.0);
            assert_eq!(u.to_bits(), b.uniform().to_bits());
        }
        assert_eq!(Stream::for_replicate(u64::MAX, 2).next_u64(), Stream::new(1).next_u64());
    }

    #[test]
    fn pareto_matches_its_cdf() {
        let mut rng = Stream::new(2024);
        let x = rpareto(&mut rng, 2.0, 1.5, 10_000).unwrap();
        assert!(x.iter().all(|&v| v > 1.5));
        let d = ks_distance(&x, |t| if t <= 1.5 { 0.0 } else { 1.0 - (1.5 / t).powi(2) });
        assert!(d < 0.02, "ks = {d}");
    }

    #[test]
    fn exponential_mean_within_three_standard_errors() {
        let mut rng = Stream::new(99);
        let theta = 2.5;
        let n = 20_000;
        let x = rexp(&mut rng, theta, n).unwrap();
        let mean = x.iter().sum::<f64>() / n as f64;
        let se = (1.0 / theta) / (n as f64).sqrt();
        assert!((mean - 1.0 / theta).abs() < 3.0 * se, "{mean}");
    }

    #[test]
    fn degenerate_mixture_is_the_exponential_stream() {
        let a = rmixture(&mut Stream::new(5), 1.3, 0.0, &spec(), 500).unwrap();
        let b = rexp(&mut Stream::new(5), 1.3, 500).unwrap();
        assert_eq!(a, b);
        let c = rmixture(&mut Stream::new(5), 1.0, 0.3, &spec(), 20_000).unwrap();
        let frac = c.iter().filter(|&&x| x > 1.5).count() as f64 / c.len() as f64;
        // P(x > 1.5) = 0.7 e^{-1.5} + 0.3
        assert!((frac - (0.7 * (-1.5f64).exp() + 0.3)).abs() < 0.015);
    }

    #[test]
    fn generator_parameter_checks() {
        let mut rng = Stream::new(1);
        assert!(rexp(&mut rng, 0.0, 3).is_err());
        assert!(rpareto(&mut rng, 1.0, 2.0, 3).is_err());
        assert!(rmixture(&mut rng, 1.0, -0.1, &spec(), 3).is_err());
        assert!(runif_d(&mut rng, 0, 3).is_err());
    }

    #[test]
    fn beta22_and_normal_moments() {
        let mut rng = Stream::new(11);
        let b: Vec<f64> = (0..20_000).map(|_| rbeta22(&mut rng)).collect();
        let d = ks_distance(&b, |t| {
            let t = t.clamp(0.0, 1.0);
            t * t * (3.0 - 2.0 * t)
        });
        assert!(d < 0.015, "ks = {d}");
        let z = rnormal(&mut rng, 20_001);
        assert_eq!(z.len(), 20_001);
        assert!(ks_distance(&z, crate::distributions::normal_cdf) < 0.015);
    }

    #[test]
    fn neighbouring_streams_are_uncorrelated() {
        let n = 10_000;
        for r in 0..5u64 {
            let mut a = Stream::for_replicate(42, r);
            let mut b = Stream::for_replicate(42, r + 1);
            let x: Vec<f64> = (0..n).map(|_| a.uniform()).collect();
            let y: Vec<f64> = (0..n).map(|_| b.uniform()).collect();
            let mx = x.iter().sum::<f64>() / n as f64;
            let my = y.iter().sum::<f64>() / n as f64;
            let cov: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
            let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
            let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
            let corr = cov / (vx * vy).sqrt();
            assert!(corr.abs() < 0.05, "r={r}: {corr}");
        }
    }
}
