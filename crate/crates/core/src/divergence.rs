//! Dual machinery for the chi-square divergence.
//!
//! For a probability `P` and a signed measure `Q` the divergence admits the
//! representation `chi2(Q, P) = sup_f  Qf - T(f, P)` with the Legendre
//! transform `T(f, P) = Pf + Pf^2 / 4`. For a finite family of linear
//! constraints `Qf_i = a_i` the supremum runs over `span{1, f_1..f_k}` and
//! reduces to the quadratic form `nu' S^{-1} nu`, where `nu = a - P f` and `S`
//! is the centered covariance of the `f_i` under `P`.
//!
//! Everything here is evaluated at the empirical measure `P_n`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::SpdFactor;
use crate::numeric;
use crate::sample::Sample;

pub type Evaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// One linear constraint `Q f = target`.
#[derive(Clone)]
pub struct Constraint {
    label: String,
    eval: Evaluator,
    target: f64,
}

impl Constraint {
    pub fn new<F>(label: impl Into<String>, target: f64, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            eval: Arc::new(f),
            target,
        }
    }

    pub fn from_evaluator(label: impl Into<String>, target: f64, eval: Evaluator) -> Self {
        Self {
            label: label.into(),
            eval,
            target,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn target(&self) -> f64 {
        self.target
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }
}

impl fmt::Debug for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Constraint")
            .field("label", &self.label)
            .field("target", &self.target)
            .finish()
    }
}

/// Ordered constraint functions `f_1..f_k` with targets `a_i = Q_0 f_i`.
///
/// The unit function with target 1 (total mass) is always implicitly part of
/// the family; it never appears in `constraints`.
#[derive(Debug, Clone)]
pub struct ConstraintFamily {
    constraints: Vec<Constraint>,
}

impl ConstraintFamily {
    pub fn new(constraints: Vec<Constraint>) -> Result<Self> {
        if constraints.is_empty() {
            return Err(Error::InvalidInput("constraint family is empty".into()));
        }
        if let Some(c) = constraints.iter().find(|c| !c.target.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "target of constraint '{}' is not finite",
                c.label
            )));
        }
        Ok(Self { constraints })
    }

    pub fn k(&self) -> usize {
        self.constraints.len()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn targets(&self) -> Vec<f64> {
        self.constraints.iter().map(|c| c.target).collect()
    }

    /// The first `k` constraints, as a family of its own.
    pub fn prefix(&self, k: usize) -> Result<Self> {
        Self::new(self.constraints[..k.min(self.k())].to_vec())
    }

    /// `n x k` matrix of `f_j(X_i)`.
    pub fn evaluate(&self, sample: &Sample) -> Result<DMatrix<f64>> {
        let (n, k) = (sample.n(), self.k());
        let mut m = DMatrix::zeros(n, k);
        for (i, row) in sample.rows().enumerate() {
            for (j, c) in self.constraints.iter().enumerate() {
                let v = c.eval(row);
                if !v.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "constraint '{}' is not finite at observation {i}",
                        c.label
                    )));
                }
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }
}

/// Discrepancy vector and empirical covariance of a constraint family.
#[derive(Debug, Clone)]
pub struct MomentVectors {
    /// `nu_n[i] = a_i - P_n f_i`
    pub nu_n: DVector<f64>,
    /// `P_n f_i`
    pub empirical_means: DVector<f64>,
    /// `S_n[i][j] = P_n f_i f_j - P_n f_i P_n f_j`
    pub s_n: DMatrix<f64>,
    /// `sqrt(n) (P_n - P) f`, only when the sampling law is known.
    pub gamma_n: Option<DVector<f64>>,
    /// Covariance of the `f_i` under the sampling law, when known.
    pub s: Option<DMatrix<f64>>,
    pub n: usize,
}

impl MomentVectors {
    pub fn k(&self) -> usize {
        self.nu_n.len()
    }

    /// Attaches the population quantities available in simulations.
    pub fn with_known_law(mut self, population_means: &[f64], population_cov: DMatrix<f64>) -> Self {
        let pm = DVector::from_column_slice(population_means);
        self.gamma_n = Some((&self.empirical_means - pm) * (self.n as f64).sqrt());
        self.s = Some(population_cov);
        self
    }
}

/// Optimal dual function `f*_n = a0 + sum a_i f_i` and the value it attains.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub a0: f64,
    pub a: DVector<f64>,
    pub chi2_value: f64,
    pub condition_number: f64,
}

impl DualSolution {
    /// `f*_n` at a point, given the constraint values `f_i(x)` there.
    pub fn f_star(&self, f_vals: &[f64]) -> f64 {
        self.a0 + self.a.iter().zip(f_vals).map(|(a, f)| a * f).sum::<f64>()
    }

    /// `f*_n(X_i)` for every observation.
    pub fn f_star_on(&self, evaluations: &DMatrix<f64>) -> Vec<f64> {
        (0..evaluations.nrows())
            .map(|i| self.a0 + (evaluations.row(i) * &self.a)[0])
            .collect()
    }
}

fn check_finite(f_vals: &[f64]) -> Result<()> {
    if f_vals.is_empty() {
        return Err(Error::InvalidInput("no function values".into()));
    }
    if f_vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite function value".into()));
    }
    Ok(())
}

/// `T(f, P_n) = P_n f + P_n f^2 / 4` from the values `f(X_i)`.
pub fn legendre_transform(f_vals: &[f64]) -> Result<f64> {
    check_finite(f_vals)?;
    Ok(numeric::mean(f_vals.iter().map(|&f| f + 0.25 * f * f)))
}

/// `Qf - T(f, P_n)`, i.e. `P_n m_f` with `m_f(x) = Qf - f(x) - f(x)^2/4`.
pub fn dual_objective(f_vals: &[f64], target_integral: f64) -> Result<f64> {
    if !target_integral.is_finite() {
        return Err(Error::InvalidInput("target integral is not finite".into()));
    }
    Ok(target_integral - legendre_transform(f_vals)?)
}

pub fn moment_vectors(sample: &Sample, fam: &ConstraintFamily) -> Result<MomentVectors> {
    let evals = fam.evaluate(sample)?;
    Ok(moment_vectors_from_evaluations(&evals, &fam.targets()))
}

/// Same as [`moment_vectors`] from a precomputed `n x k` evaluation matrix.
pub fn moment_vectors_from_evaluations(evals: &DMatrix<f64>, targets: &[f64]) -> MomentVectors {
    let (n, k) = evals.shape();
    let means = DVector::from_iterator(k, (0..k).map(|j| numeric::mean(evals.column(j).iter().copied())));
    let mut s_n = DMatrix::zeros(k, k);
    for a in 0..k {
        for b in a..k {
            let (ma, mb) = (means[a], means[b]);
            let v = numeric::mean((0..n).map(|i| (evals[(i, a)] - ma) * (evals[(i, b)] - mb)));
            s_n[(a, b)] = v;
            s_n[(b, a)] = v;
        }
    }
    let nu_n = DVector::from_iterator(k, (0..k).map(|j| targets[j] - means[j]));
    MomentVectors {
        nu_n,
        empirical_means: means,
        s_n,
        gamma_n: None,
        s: None,
        n,
    }
}

/// Solves `2 nu_n = S_n a`, `a0 = -sum a_i P_n f_i`.
pub fn dual_coefficients(mv: &MomentVectors) -> Result<DualSolution> {
    let factor = SpdFactor::new(&mv.s_n)?;
    let s_inv_nu = factor.solve(&mv.nu_n);
    let a = &s_inv_nu * 2.0;
    let a0 = -a.dot(&mv.empirical_means);
    let chi2_value = mv.nu_n.dot(&s_inv_nu).max(0.0);
    Ok(DualSolution {
        a0,
        a,
        chi2_value,
        condition_number: factor.condition(),
    })
}

/// `chi2_n = nu_n' S_n^{-1} nu_n`.
pub fn chi2_quadratic(mv: &MomentVectors) -> Result<f64> {
    Ok(dual_coefficients(mv)?.chi2_value)
}

/// Plug-in variance of `f*_n + f*_n^2 / 4` under `P_n`: the asymptotic
/// variance of `sqrt(n) (chi2_n - chi2)` away from the null.
pub fn h1_variance(sample: &Sample, dual: &DualSolution, fam: &ConstraintFamily) -> Result<f64> {
    let evals = fam.evaluate(sample)?;
    Ok(h1_variance_from_evaluations(&evals, dual))
}

pub fn h1_variance_from_evaluations(evals: &DMatrix<f64>, dual: &DualSolution) -> f64 {
    let g: Vec<f64> = dual.f_star_on(evals).into_iter().map(|f| f + 0.25 * f * f).collect();
    numeric::variance(&g)
}
