//! Test of an exponential model against Pareto contamination.
//!
//! Under the alternative the density is `h(theta, lambda; x) = (1 - lambda)
//! theta e^{-theta x} + lambda r(x)` with `r(x) = gamma nu^gamma x^{-gamma-1}`
//! on `x > nu`. For a candidate null density `f_alpha` the dual functions are
//! `g = 2(f_alpha / h - 1)`, and
//!
//! ```text
//! chi2_n = inf_{alpha in Theta} sup_{(theta, lambda)} int g f_alpha - T(g, P_n)
//! ```
//!
//! where the supremum runs over the `(theta, lambda)` for which `g` is
//! integrable against `f_alpha`. Writing `w = f_alpha / h`, the objective is
//! `2 int f_alpha w - P_n w^2 - 1`. The statistic `n chi2_n` is referred to
//! a chi-square law with one degree of freedom.
//!
//! A negative `lambda` makes `h` negative far in the tail (the exponential
//! part decays faster than the Pareto part), so only `lambda >= 0` ever
//! enters the search.

pub mod optimize;
pub mod quadrature;

use serde::{Deserialize, Serialize};

use crate::divergence::legendre_transform;
use crate::error::{Error, Result};
use crate::report::{check_level, TestReport};
use crate::sample::Sample;

use optimize::{maximize_box, minimize_interval, BoxMax, BoxSearch};
use quadrature::{integrate, Quadrature};

/// Integrand magnitude below which the upper tail is cut off.
pub const TRUNCATION_LEVEL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseFamily {
    /// `theta e^{-theta x}` on `x > 0`.
    #[default]
    Exponential,
}

fn default_lambda_lo() -> f64 {
    -0.25
}

fn default_lambda_hi() -> f64 {
    0.75
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContaminationSpec {
    #[serde(default)]
    pub family: BaseFamily,
    pub theta_lo: f64,
    pub theta_hi: f64,
    #[serde(default = "default_lambda_lo")]
    pub lambda_lo: f64,
    #[serde(default = "default_lambda_hi")]
    pub lambda_hi: f64,
    pub pareto_gamma: f64,
    pub pareto_nu: f64,
}

impl ContaminationSpec {
    /// Parameter interval `[theta_lo, theta_hi]`, Pareto contaminant with
    /// shape `gamma > 1` and scale `nu > 1`, and the default
    /// `Lambda_0 = (-0.25, 0.75)`.
    pub fn new(theta_lo: f64, theta_hi: f64, pareto_gamma: f64, pareto_nu: f64) -> Result<Self> {
        let spec = Self {
            family: BaseFamily::Exponential,
            theta_lo,
            theta_hi,
            lambda_lo: default_lambda_lo(),
            lambda_hi: default_lambda_hi(),
            pareto_gamma,
            pareto_nu,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_lambda_interval(mut self, lo: f64, hi: f64) -> Result<Self> {
        self.lambda_lo = lo;
        self.lambda_hi = hi;
        self.validate()?;
        Ok(self)
    }

    /// `theta_lo == theta_hi` is accepted and gives the simple null.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        let all = [
            self.theta_lo,
            self.theta_hi,
            self.lambda_lo,
            self.lambda_hi,
            self.pareto_gamma,
            self.pareto_nu,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("contamination parameters must be finite".into());
        }
        if !(self.theta_lo > 0.0 && self.theta_lo <= self.theta_hi) {
            return bad(format!(
                "need 0 < theta_lo <= theta_hi, got [{}, {}]",
                self.theta_lo, self.theta_hi
            ));
        }
        if !(self.lambda_lo < 0.0 && 0.0 < self.lambda_hi && self.lambda_hi < 1.0) {
            return bad(format!(
                "lambda interval ({}, {}) must contain 0 and stay below 1",
                self.lambda_lo, self.lambda_hi
            ));
        }
        if self.pareto_gamma.is_nan() || self.pareto_gamma <= 1.0 {
            return bad(format!("pareto gamma must exceed 1, got {}", self.pareto_gamma));
        }
        if self.pareto_nu.is_nan() || self.pareto_nu <= 1.0 {
            return bad(format!("pareto nu must exceed 1, got {}", self.pareto_nu));
        }
        Ok(())
    }

    pub fn is_simple(&self) -> bool {
        self.theta_lo == self.theta_hi
    }

    /// `r(x)`, zero for `x <= nu`.
    pub fn pareto_density(&self, x: f64) -> f64 {
        if x <= self.pareto_nu {
            0.0
        } else {
            self.pareto_gamma * self.pareto_nu.powf(self.pareto_gamma) * x.powf(-self.pareto_gamma - 1.0)
        }
    }

    pub fn base_density(theta: f64, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            theta * (-theta * x).exp()
        }
    }

    /// `h(theta, lambda; x)`.
    pub fn mixture_density(&self, theta: f64, lambda: f64, x: f64) -> f64 {
        (1.0 - lambda) * Self::base_density(theta, x) + lambda * self.pareto_density(x)
    }

    /// The part of `Lambda_0` on which `h` stays positive on the whole
    /// half-line.
    pub fn feasible_lambda(&self) -> (f64, f64) {
        (self.lambda_lo.max(0.0), self.lambda_hi)
    }

    /// Fails with `NonPositiveDensity` at a point where `h <= 0`.
    pub fn check_density(&self, theta: f64, lambda: f64) -> Result<()> {
        if theta.is_nan() || theta <= 0.0 {
            return Err(Error::InvalidParameter(format!("theta must be positive, got {theta}")));
        }
        if lambda >= 1.0 {
            return Err(Error::NonPositiveDensity { x: 0.0 });
        }
        if lambda < 0.0 {
            // exponential decay beats the polynomial tail eventually
            let mut x = 2.0 * self.pareto_nu;
            while self.mixture_density(theta, lambda, x) > 0.0 {
                x *= 2.0;
            }
            return Err(Error::NonPositiveDensity { x });
        }
        Ok(())
    }
}

/// Dual function `g = 2(f_b / h(theta, lambda) - 1)` paired with the null
/// candidate `f_alpha`, where `b = beta` in the untied variant and
/// `b = alpha` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualGFunction {
    pub alpha: f64,
    pub theta: f64,
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

impl DualGFunction {
    pub fn new(alpha: f64, theta: f64, lambda: f64) -> Self {
        Self {
            alpha,
            theta,
            lambda,
            beta: None,
        }
    }

    pub fn with_beta(alpha: f64, theta: f64, lambda: f64, beta: f64) -> Self {
        Self {
            alpha,
            theta,
            lambda,
            beta: Some(beta),
        }
    }

    pub fn numerator_rate(&self) -> f64 {
        self.beta.unwrap_or(self.alpha)
    }

    /// `g` vanishes identically when `h` is the numerator density itself.
    pub fn is_zero(&self) -> bool {
        self.lambda == 0.0 && self.theta == self.numerator_rate()
    }

    /// `w(x) = f_b(x) / h(x)` written to avoid `0/0` and overflow far out.
    fn ratio(&self, x: f64, r: f64) -> f64 {
        let b = self.numerator_rate();
        let mut denom = (1.0 - self.lambda) * self.theta * ((b - self.theta) * x).exp();
        if self.lambda != 0.0 && r > 0.0 {
            denom += self.lambda * r * (b * x).exp();
        }
        b / denom
    }

    pub fn eval(&self, spec: &ContaminationSpec, x: f64) -> f64 {
        2.0 * (self.ratio(x, spec.pareto_density(x)) - 1.0)
    }
}

/// `int g f_alpha dx` by adaptive quadrature, split at `nu` and truncated
/// where the integrand falls below [`TRUNCATION_LEVEL`]; the analytic bound
/// on the discarded tail is part of the returned error.
pub fn model_integral(g: &DualGFunction, spec: &ContaminationSpec, abs_tol: f64) -> Result<Quadrature> {
    spec.check_density(g.theta, g.lambda)?;
    if g.is_zero() {
        return Ok(Quadrature {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let (a, b, theta, lambda) = (g.alpha, g.numerator_rate(), g.theta, g.lambda);
    let decay = a + b - theta;
    if lambda == 0.0 && decay <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "g is not integrable against f_alpha (alpha={a}, theta={theta}, lambda=0)"
        )));
    }
    let nu = spec.pareto_nu;
    let (gamma, scale) = (spec.pareto_gamma, spec.pareto_nu.powf(spec.pareto_gamma));
    // f_alpha f_b / h, evaluated like DualGFunction::ratio
    let integrand = |x: f64| {
        let mut denom = (1.0 - lambda) * theta * (decay * x).exp();
        if lambda != 0.0 && x > nu {
            denom += lambda * gamma * scale * x.powf(-gamma - 1.0) * ((a + b) * x).exp();
        }
        a * b / denom
    };
    let tail_bound = |u: f64| -> f64 {
        let mut bound = f64::INFINITY;
        if decay > 0.0 {
            bound = a * b / ((1.0 - lambda) * theta) * (-decay * u).exp() / decay;
        }
        let (s, rate) = (gamma + 1.0, a + b);
        if lambda > 0.0 && u >= 2.0 * s / rate {
            let pareto = a * b / (lambda * gamma * scale) * u.powf(s) * (-rate * u).exp() * 2.0 / rate;
            bound = bound.min(pareto);
        }
        bound
    };

    let piece_tol = abs_tol / 4.0;
    let mut upper = nu + 1.0;
    while !(integrand(upper) < TRUNCATION_LEVEL && tail_bound(upper) < piece_tol) {
        upper = nu + 2.0 * (upper - nu);
        if upper > 1e9 {
            return Err(Error::QuadratureFailure {
                estimate: tail_bound(upper),
                target: abs_tol,
            });
        }
    }
    let head = integrate(integrand, 0.0, nu, piece_tol)?;
    let body = integrate(integrand, nu, upper, piece_tol)?;
    let error = 2.0 * (head.error + body.error + tail_bound(upper));
    if error > abs_tol {
        return Err(Error::QuadratureFailure {
            estimate: error,
            target: abs_tol,
        });
    }
    Ok(Quadrature {
        value: 2.0 * (head.value + body.value - 1.0),
        error,
        evaluations: head.evaluations + body.evaluations,
    })
}

fn check_support(sample: &Sample) -> Result<()> {
    if sample.d() != 1 {
        return Err(Error::InvalidInput(format!(
            "contamination test needs univariate data, got {} columns",
            sample.d()
        )));
    }
    if let Some(x) = sample.as_flat().iter().find(|x| **x < 0.0) {
        return Err(Error::InvalidInput(format!(
            "exponential support violated: observation {x} is negative"
        )));
    }
    Ok(())
}

/// `int g f_alpha - T(g, P_n)`.
pub fn dual_objective_contam(g: &DualGFunction, sample: &Sample, spec: &ContaminationSpec) -> Result<f64> {
    check_support(sample)?;
    Objective::new(sample, spec, SearchSettings::default().quad_tol).value(g)
}

/// Precomputed sample side of the objective. Observations are sorted so
/// that the statistic does not depend on their order, bit for bit.
struct Objective<'a> {
    x: Vec<f64>,
    r: Vec<f64>,
    spec: &'a ContaminationSpec,
    quad_tol: f64,
}

impl<'a> Objective<'a> {
    fn new(sample: &Sample, spec: &'a ContaminationSpec, quad_tol: f64) -> Self {
        let mut x = sample.as_flat().to_vec();
        x.sort_by(f64::total_cmp);
        let r = x.iter().map(|&v| spec.pareto_density(v)).collect();
        Self { x, r, spec, quad_tol }
    }

    fn value(&self, g: &DualGFunction) -> Result<f64> {
        if g.is_zero() {
            self.spec.check_density(g.theta, g.lambda)?;
            return Ok(0.0);
        }
        let integral = model_integral(g, self.spec, self.quad_tol)?.value;
        let g_vals: Vec<f64> = self
            .x
            .iter()
            .zip(&self.r)
            .map(|(&x, &r)| 2.0 * (g.ratio(x, r) - 1.0))
            .collect();
        Ok(integral - legendre_transform(&g_vals)?)
    }

    /// Infeasible parameters and numerical failures count as `-inf`.
    fn value_or_neg_inf(&self, g: &DualGFunction) -> f64 {
        match self.value(g) {
            Ok(v) if !v.is_nan() => v,
            _ => f64::NEG_INFINITY,
        }
    }

    fn g_at(&self, alpha: f64, p: &[f64], beta_variant: bool) -> DualGFunction {
        if beta_variant {
            DualGFunction::with_beta(alpha, p[0], p[1], p[2])
        } else {
            DualGFunction::new(alpha, p[0], p[1])
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchSettings {
    /// Lattice points per free coordinate in the inner search.
    pub grid: usize,
    /// Simplex refinements started from the best lattice points.
    pub starts: usize,
    /// Simplex stopping tolerance on the objective.
    pub ftol: f64,
    pub max_simplex_evaluations: usize,
    /// Width of the final golden-section bracket for `alpha`.
    pub alpha_tol: f64,
    /// Grid size of the fallback when golden section fails to bracket.
    pub fallback_grid: usize,
    pub quad_tol: f64,
    /// Untie the numerator rate `beta` from `alpha`.
    pub beta_variant: bool,
    /// Also compute the reversed (sup-inf) value and report the gap.
    pub minimax_check: bool,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self {
            grid: 8,
            starts: 3,
            ftol: 1e-8,
            max_simplex_evaluations: 400,
            alpha_tol: 1e-6,
            fallback_grid: 64,
            quad_tol: 1e-10,
            beta_variant: false,
            minimax_check: false,
        }
    }
}

impl SearchSettings {
    fn box_search(&self) -> BoxSearch {
        BoxSearch {
            grid: self.grid,
            starts: self.starts,
            ftol: self.ftol,
            max_evaluations: self.max_simplex_evaluations,
        }
    }
}

fn search_box(spec: &ContaminationSpec, beta_variant: bool) -> (Vec<f64>, Vec<f64>) {
    let (l_lo, l_hi) = spec.feasible_lambda();
    let mut lower = vec![spec.theta_lo, l_lo];
    let mut upper = vec![spec.theta_hi, l_hi];
    if beta_variant {
        lower.push(spec.theta_lo);
        upper.push(spec.theta_hi);
    }
    (lower, upper)
}

/// Result of the supremum over `(theta, lambda)` for one `alpha`, with the
/// search certificate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InnerSup {
    pub alpha: f64,
    pub value: f64,
    pub theta: f64,
    pub lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub search: BoxMax,
}

fn inner_sup(obj: &Objective, alpha: f64, settings: &SearchSettings) -> Result<InnerSup> {
    let (lower, upper) = search_box(obj.spec, settings.beta_variant);
    let zero = if settings.beta_variant {
        vec![alpha, 0.0, alpha]
    } else {
        vec![alpha, 0.0]
    };
    let search = maximize_box(
        |p| obj.value_or_neg_inf(&obj.g_at(alpha, p, settings.beta_variant)),
        &lower,
        &upper,
        &[zero],
        &settings.box_search(),
    );
    if !search.value.is_finite() {
        return Err(Error::OptimizationFailure(format!(
            "no feasible (theta, lambda) found for alpha = {alpha}"
        )));
    }
    Ok(InnerSup {
        alpha,
        value: search.value,
        theta: search.x[0],
        lambda: search.x[1],
        beta: search.x.get(2).copied(),
        search,
    })
}

/// `chi2_n(f_alpha, P_n)` for a fixed null rate: the supremum of the dual
/// objective over `(theta, lambda)`. Never negative, since `(alpha, 0)`
/// is a candidate with objective 0.
pub fn chi2_simple(sample: &Sample, alpha_fixed: f64, spec: &ContaminationSpec) -> Result<InnerSup> {
    chi2_simple_with(sample, alpha_fixed, spec, &SearchSettings::default())
}

pub fn chi2_simple_with(
    sample: &Sample,
    alpha_fixed: f64,
    spec: &ContaminationSpec,
    settings: &SearchSettings,
) -> Result<InnerSup> {
    spec.validate()?;
    check_support(sample)?;
    if !(alpha_fixed >= spec.theta_lo && alpha_fixed <= spec.theta_hi) {
        return Err(Error::InvalidParameter(format!(
            "alpha {alpha_fixed} outside [{}, {}]",
            spec.theta_lo, spec.theta_hi
        )));
    }
    let obj = Objective::new(sample, spec, settings.quad_tol);
    inner_sup(&obj, alpha_fixed, settings)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContaminationFit {
    /// `inf_alpha sup_(theta, lambda)` of the dual objective.
    pub chi2_value: f64,
    pub alpha_hat: f64,
    pub theta_hat: f64,
    pub lambda_hat: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_hat: Option<f64>,
    pub outer_evaluations: usize,
    pub used_fallback_grid: bool,
    pub inner: InnerSup,
}

fn inf_sup(obj: &Objective, settings: &SearchSettings) -> Result<ContaminationFit> {
    let spec = obj.spec;
    let mut first_error = None;
    let profile = |alpha: f64| match inner_sup(obj, alpha, settings) {
        Ok(s) => s.value,
        Err(e) => {
            first_error.get_or_insert(e);
            f64::INFINITY
        }
    };
    let line = minimize_interval(
        profile,
        spec.theta_lo,
        spec.theta_hi,
        settings.alpha_tol,
        settings.ftol,
        settings.fallback_grid,
    );
    if !line.value.is_finite() {
        return Err(first_error.unwrap_or_else(|| Error::OptimizationFailure("profile is infinite on Theta".into())));
    }
    let inner = inner_sup(obj, line.x, settings)?;
    Ok(ContaminationFit {
        chi2_value: inner.value,
        alpha_hat: line.x,
        theta_hat: inner.theta,
        lambda_hat: inner.lambda,
        beta_hat: inner.beta,
        outer_evaluations: line.evaluations,
        used_fallback_grid: line.used_grid,
        inner,
    })
}

/// Admissible null rates for fixed `(theta, lambda, b)`: all of `Theta`
/// when `lambda > 0`, otherwise the rates making `g` integrable.
fn admissible_alpha(spec: &ContaminationSpec, theta: f64, lambda: f64, beta: Option<f64>) -> Option<(f64, f64)> {
    let mut lo = spec.theta_lo;
    if lambda == 0.0 {
        // alpha + b > theta, with b = alpha in the tied form
        let edge = match beta {
            Some(b) => theta - b,
            None => 0.5 * theta,
        };
        if edge >= lo {
            lo = edge + 1e-9 * edge.abs().max(1.0);
        }
    }
    (lo <= spec.theta_hi).then_some((lo, spec.theta_hi))
}

fn sup_inf(obj: &Objective, settings: &SearchSettings) -> Result<f64> {
    let spec = obj.spec;
    let (lower, upper) = search_box(spec, settings.beta_variant);
    let profile = |p: &[f64]| -> f64 {
        let beta = settings.beta_variant.then(|| p[2]);
        let Some((lo, hi)) = admissible_alpha(spec, p[0], p[1], beta) else {
            return f64::NEG_INFINITY;
        };
        let line = minimize_interval(
            |alpha| {
                let v = obj.value_or_neg_inf(&obj.g_at(alpha, p, settings.beta_variant));
                if v == f64::NEG_INFINITY {
                    f64::INFINITY
                } else {
                    v
                }
            },
            lo,
            hi,
            settings.alpha_tol,
            settings.ftol,
            settings.fallback_grid,
        );
        line.value
    };
    let search = maximize_box(profile, &lower, &upper, &[], &settings.box_search());
    if !search.value.is_finite() {
        return Err(Error::OptimizationFailure(
            "sup-inf search found no finite value".into(),
        ));
    }
    Ok(search.value)
}

/// `|inf_alpha sup_(theta,lambda) - sup_(theta,lambda) inf_alpha|` of the
/// dual objective, both computed with the same search settings.
pub fn minimax_gap(sample: &Sample, spec: &ContaminationSpec) -> Result<f64> {
    minimax_gap_with(sample, spec, &SearchSettings::default())
}

pub fn minimax_gap_with(sample: &Sample, spec: &ContaminationSpec, settings: &SearchSettings) -> Result<f64> {
    spec.validate()?;
    check_support(sample)?;
    let obj = Objective::new(sample, spec, settings.quad_tol);
    let a = inf_sup(&obj, settings)?.chi2_value;
    let b = sup_inf(&obj, settings)?;
    Ok((a - b).abs())
}

/// Fits the nested inf-sup without building a report.
pub fn fit(sample: &Sample, spec: &ContaminationSpec, settings: &SearchSettings) -> Result<ContaminationFit> {
    spec.validate()?;
    check_support(sample)?;
    inf_sup(&Objective::new(sample, spec, settings.quad_tol), settings)
}

/// `n chi2_n` against chi-square(1).
pub fn contamination_test(sample: &Sample, spec: &ContaminationSpec, alpha: f64) -> Result<TestReport> {
    contamination_test_with(sample, spec, alpha, &SearchSettings::default())
}

pub fn contamination_test_with(
    sample: &Sample,
    spec: &ContaminationSpec,
    alpha: f64,
    settings: &SearchSettings,
) -> Result<TestReport> {
    check_level(alpha)?;
    spec.validate()?;
    check_support(sample)?;
    let obj = Objective::new(sample, spec, settings.quad_tol);
    let fit = inf_sup(&obj, settings)?;
    let n = sample.n() as f64;
    let mut report = TestReport::chi_squared(n * fit.chi2_value, 1, alpha)?
        .with("n", n)
        .with("chi2_value", fit.chi2_value)
        .with("alpha_hat", fit.alpha_hat)
        .with("theta_hat", fit.theta_hat)
        .with("lambda_hat", fit.lambda_hat)
        .with("inner_evaluations", fit.inner.search.evaluations as f64)
        .with("outer_evaluations", fit.outer_evaluations as f64);
    if let Some(b) = fit.beta_hat {
        report.insert("beta_hat", b);
    }
    if fit.used_fallback_grid {
        report.warn("alpha_profile_not_unimodal");
    }
    if fit.inner.search.converged_starts < fit.inner.search.starts.len() {
        report.warn("simplex_not_converged");
    }
    if settings.minimax_check {
        let reversed = sup_inf(&obj, settings)?;
        report.insert("minimax_gap", (fit.chi2_value - reversed).abs());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> ContaminationSpec {
        ContaminationSpec::new(0.5, 2.0, 2.0, 1.5).unwrap()
    }

    #[test]
    fn default_inner_search_reaches_narrow_ridge() {
        // here the maximum sits on a thin ridge just off lambda = 0
        use crate::montecarlo::rng::{rmixture, Stream};
        let x = rmixture(&mut Stream::new(33), 1.5, 0.0, &spec(), 2000).unwrap();
        let s = Sample::univariate(x).unwrap();
        let dense = SearchSettings {
            grid: 32,
            starts: 8,
            max_simplex_evaluations: 4000,
            ..SearchSettings::default()
        };
        let quick = chi2_simple(&s, 1.490295, &spec()).unwrap();
        let slow = chi2_simple_with(&s, 1.490295, &spec(), &dense).unwrap();
        assert!(slow.value > 6e-4);
        assert!(
            (quick.value - slow.value).abs() < 1e-8,
            "{} vs {}",
            quick.value,
            slow.value
        );
    }

    /// Deterministic exponential(1) quantiles, shuffled.
    fn exp_sample(n: usize) -> Sample {
        let mut v: Vec<f64> = (0..n).map(|i| -(1.0 - (i as f64 + 0.5) / n as f64).ln()).collect();
        let mut s = 12345u64;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
            v.swap(i, (s >> 33) as usize % (i + 1));
        }
        Sample::univariate(v).unwrap()
    }

    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn spec_validation() {
        assert!(ContaminationSpec::new(2.0, 0.5, 2.0, 1.5).is_err());
        assert!(ContaminationSpec::new(0.5, 2.0, 1.0, 1.5).is_err());
        assert!(ContaminationSpec::new(0.5, 2.0, 2.0, 0.9).is_err());
        assert!(spec().with_lambda_interval(0.0, 0.5).is_err());
        assert!(ContaminationSpec::new(1.0, 1.0, 2.0, 1.5).unwrap().is_simple());
        let json = serde_json::to_string(&spec()).unwrap();
        assert_eq!(serde_json::from_str::<ContaminationSpec>(&json).unwrap(), spec());
        let minimal: ContaminationSpec =
            serde_json::from_str(r#"{"theta_lo":0.5,"theta_hi":2,"pareto_gamma":2,"pareto_nu":1.5}"#).unwrap();
        assert_eq!(minimal, spec());
    }

    #[test]
    fn negative_lambda_is_excluded() {
        let s = spec();
        match s.check_density(1.0, -0.1) {
            Err(Error::NonPositiveDensity { x }) => assert!(s.mixture_density(1.0, -0.1, x) <= 0.0),
            other => panic!("{other:?}"),
        }
        assert!(s.check_density(1.0, 0.3).is_ok());
        assert_eq!(s.feasible_lambda(), (0.0, 0.75));
    }

    #[test]
    fn model_integral_vanishes_at_the_null() {
        for a in [0.5, 1.0, 1.7] {
            let q = model_integral(&DualGFunction::new(a, a, 0.0), &spec(), 1e-10).unwrap();
            assert_eq!(q.value, 0.0);
        }
    }

    #[test]
    fn model_integral_closed_form_without_contamination() {
        for (a, t) in [(1.0, 1.5), (1.0, 0.6), (2.0, 0.5), (0.7, 1.3)] {
            let q = model_integral(&DualGFunction::new(a, t, 0.0), &spec(), 1e-10).unwrap();
            let exact = 2.0 * (a * a / (t * (2.0 * a - t)) - 1.0);
            assert!((q.value - exact).abs() < 1e-9, "a={a} t={t}: {} vs {exact}", q.value);
        }
        let q = model_integral(&DualGFunction::with_beta(1.0, 1.2, 0.0, 0.8), &spec(), 1e-10).unwrap();
        assert!((q.value - 2.0 * (0.8 / (1.2 * 0.6) - 1.0)).abs() < 1e-9);
        assert!(model_integral(&DualGFunction::new(0.5, 1.2, 0.0), &spec(), 1e-10).is_err());
    }

    #[test]
    fn model_integral_matches_fine_grid_oracle() {
        let s = spec();
        for (a, t, l) in [(1.0, 1.2, 0.2), (0.6, 1.9, 0.05), (1.8, 0.5, 0.7)] {
            let g = DualGFunction::new(a, t, l);
            let q = model_integral(&g, &s, 1e-10).unwrap();
            // `contaminated` selects the one-sided limit at the jump x = nu
            let f = |x: f64, contaminated: bool| {
                let h = (1.0 - l) * t * (-t * x).exp()
                    + if contaminated {
                        l * 2.0 * 1.5f64.powi(2) * x.powi(-3)
                    } else {
                        0.0
                    };
                2.0 * (a * (-a * x).exp() / h - 1.0) * a * (-a * x).exp()
            };
            let oracle = simpson(|x| f(x, false), 0.0, 1.5, 200_000) + simpson(|x| f(x, true), 1.5, 80.0, 2_000_000);
            assert!((q.value - oracle).abs() < 1e-6, "{g:?}: {} vs {oracle}", q.value);
        }
    }

    #[test]
    fn quadrature_is_stable_under_tighter_targets() {
        let g = DualGFunction::new(0.9, 1.4, 0.3);
        let coarse = model_integral(&g, &spec(), 1e-8).unwrap().value;
        let fine = model_integral(&g, &spec(), 5e-9).unwrap().value;
        assert!((coarse - fine).abs() < 1e-8);
    }

    #[test]
    fn objective_by_hand_on_two_points() {
        let s = Sample::univariate(vec![1.0, 2.0]).unwrap();
        let g = DualGFunction::new(1.0, 1.5, 0.0);
        // int g f_1 = 2 (1 / (1.5 * 0.5) - 1) = 2/3 and g(x) = 2 (e^{x/2} / 1.5 - 1)
        let gx = |x: f64| 2.0 * ((0.5 * x).exp() / 1.5 - 1.0);
        let t = 0.5 * (gx(1.0) + gx(1.0).powi(2) / 4.0 + gx(2.0) + gx(2.0).powi(2) / 4.0);
        let v = dual_objective_contam(&g, &s, &spec()).unwrap();
        assert!((v - (2.0 / 3.0 - t)).abs() < 1e-10);
        assert_eq!(
            dual_objective_contam(&DualGFunction::new(1.3, 1.3, 0.0), &s, &spec()).unwrap(),
            0.0
        );
    }

    #[test]
    fn chi2_simple_is_nonnegative() {
        let s = exp_sample(200);
        for a in [0.5, 1.0, 2.0] {
            let r = chi2_simple(&s, a, &spec()).unwrap();
            assert!(r.value >= 0.0);
            assert!(r.search.starts.len() <= 3);
        }
        assert!(chi2_simple(&s, 3.0, &spec()).is_err());
    }

    #[test]
    fn null_fit_is_near_the_true_rate() {
        let s = exp_sample(500);
        let r = contamination_test(&s, &spec(), 0.05).unwrap();
        assert!((r.diagnostics["alpha_hat"] - 1.0).abs() < 0.1);
        assert!(!r.reject, "{r:?}");
        assert_eq!(r.df, 1.0);
    }

    #[test]
    fn statistic_is_permutation_invariant() {
        let s = exp_sample(150);
        let mut rev = s.as_flat().to_vec();
        rev.reverse();
        let a = contamination_test(&s, &spec(), 0.05).unwrap();
        let b = contamination_test(&Sample::univariate(rev).unwrap(), &spec(), 0.05).unwrap();
        assert_eq!(a.statistic.to_bits(), b.statistic.to_bits());
    }

    #[test]
    fn singleton_theta_has_zero_gap() {
        let s = exp_sample(100);
        let simple = ContaminationSpec::new(1.0, 1.0, 2.0, 1.5).unwrap();
        assert_eq!(minimax_gap(&s, &simple).unwrap(), 0.0);
    }

    #[test]
    fn negative_data_are_rejected() {
        let s = Sample::univariate(vec![1.0, -0.5]).unwrap();
        let e = contamination_test(&s, &spec(), 0.05).unwrap_err();
        assert!(e.to_string().contains("exponential support violated"));
    }
}
