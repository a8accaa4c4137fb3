//! Chi-square divergence estimation through its dual (Fenchel-Legendre)
//! representation, and the hypothesis tests built on top of it:
//!
//! * [`linear`]: tests of finitely many linear (moment) constraints,
//!   calibrated by a chi-square law with `k` degrees of freedom;
//! * [`sieve`] and [`marginal`]: growing constraint families and the
//!   simultaneous goodness-of-fit test of all marginals of a sample;
//! * [`contamination`]: the exponential-vs-Pareto contamination test;
//! * [`montecarlo`]: seeded replication harness for size and power studies.
//!
//! The CLI in `src/bin/chi2dual.rs` is a thin shell over [`cli`].

pub mod cli;
pub mod contamination;
pub mod distributions;
pub mod divergence;
pub mod error;
pub mod linalg;
pub mod linear;
pub mod marginal;
pub mod montecarlo;
pub mod numeric;
pub mod report;
pub mod sample;
pub mod sieve;

pub use divergence::{
    chi2_quadratic, dual_coefficients, dual_objective, h1_variance, legendre_transform, moment_vectors, Constraint,
    ConstraintFamily, DualSolution, MomentVectors,
};
pub use error::{Error, Result};
pub use report::{ReferenceLaw, TestReport};
pub use sample::Sample;
