//! Test of `H0: P in Omega` for finitely many linear constraints.
//!
//! Under the null `n chi2_n` is asymptotically chi-square with `k` degrees of
//! freedom. Away from the null, `sqrt(n)(chi2_n - chi2)` is asymptotically
//! normal; its plug-in variance yields the confidence interval reported in
//! the diagnostics (never used for the decision).

use crate::distributions::normal_quantile;
use crate::divergence::{
    dual_coefficients, h1_variance_from_evaluations, moment_vectors_from_evaluations, ConstraintFamily,
};
use crate::error::Result;
use crate::report::{check_level, TestReport};
use crate::sample::Sample;

pub fn test_linear(sample: &Sample, fam: &ConstraintFamily, alpha: f64) -> Result<TestReport> {
    check_level(alpha)?;
    let evals = fam.evaluate(sample)?;
    let mv = moment_vectors_from_evaluations(&evals, &fam.targets());
    let dual = dual_coefficients(&mv)?;
    let n = sample.n() as f64;
    let k = fam.k();
    let statistic = n * dual.chi2_value;
    let var = h1_variance_from_evaluations(&evals, &dual);
    let half = normal_quantile(1.0 - alpha / 2.0) * (var / n).sqrt();
    let mut report = TestReport::chi_squared(statistic, k as u32, alpha)?
        .with("n", n)
        .with("k", k as f64)
        .with("chi2_value", dual.chi2_value)
        .with("condition_number", dual.condition_number)
        .with("h1_variance", var)
        .with("h1_ci_lower", (dual.chi2_value - half).max(0.0))
        .with("h1_ci_upper", dual.chi2_value + half)
        .with("a0", dual.a0);
    for (i, a) in dual.a.iter().enumerate() {
        report.insert(&format!("a{}", i + 1), *a);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::Constraint;
    use crate::error::Error;

    #[test]
    fn exactly_satisfied_constraints() {
        let s = Sample::univariate(vec![1.0, 2.0, 6.0]).unwrap();
        let fam = ConstraintFamily::new(vec![Constraint::new("x", 3.0, |x| x[0])]).unwrap();
        let r = test_linear(&s, &fam, 0.05).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert!(!r.reject);
        assert_eq!(r.diagnostics["k"], 1.0);
    }

    #[test]
    fn level_is_validated() {
        let s = Sample::univariate(vec![1.0, 2.0]).unwrap();
        let fam = ConstraintFamily::new(vec![Constraint::new("x", 3.0, |x| x[0])]).unwrap();
        assert_eq!(test_linear(&s, &fam, 1.5).unwrap_err(), Error::InvalidLevel(1.5));
    }

    #[test]
    fn far_target_rejects() {
        let s = Sample::univariate((0..50).map(|i| i as f64 / 50.0).collect()).unwrap();
        let fam = ConstraintFamily::new(vec![Constraint::new("x", 0.25, |x| x[0])]).unwrap();
        let r = test_linear(&s, &fam, 0.05).unwrap();
        assert!(r.reject);
        assert!(r.diagnostics["h1_ci_lower"] <= r.diagnostics["chi2_value"]);
        assert!(r.diagnostics["chi2_value"] <= r.diagnostics["h1_ci_upper"]);
    }
}
