//! Projection of the uniform law on [0, 1] onto the signed measures with
//! mean 1/4. The projection has density 5/2 - 3x, the optimal dual function
//! is f* = 3 - 6x and the divergence is 3/4; the estimates approach these.

use chi2dual::montecarlo::rng::{runif_d, Stream};
use chi2dual::{dual_coefficients, moment_vectors, Constraint, ConstraintFamily, Sample};

fn main() -> chi2dual::Result<()> {
    let fam = ConstraintFamily::new(vec![Constraint::new("x", 0.25, |x: &[f64]| x[0])])?;
    println!("{:>8} {:>10} {:>10} {:>10}", "n", "chi2_n", "a0", "a1");
    for n in [100, 1_000, 10_000, 100_000] {
        let sample = Sample::univariate(runif_d(&mut Stream::new(7), 1, n)?)?;
        let dual = dual_coefficients(&moment_vectors(&sample, &fam)?)?;
        println!("{n:>8} {:>10.5} {:>10.5} {:>10.5}", dual.chi2_value, dual.a0, dual.a[0]);
    }
    println!("{:>8} {:>10.5} {:>10.5} {:>10.5}", "limit", 0.75, 3.0, -6.0);
    Ok(())
}
