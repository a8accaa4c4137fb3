//! Simultaneous goodness of fit of two marginals: an exponential and a
//! normal coordinate, tested first against the right laws and then against
//! a wrong rate for the first coordinate.

use chi2dual::marginal::{marginal_test, MarginalSpec};
use chi2dual::montecarlo::rng::{rexp, rnormal, Stream};
use chi2dual::Sample;

fn main() -> chi2dual::Result<()> {
    let n = 4_000;
    let mut rng = Stream::new(11);
    let x1 = rexp(&mut rng, 2.0, n)?;
    let x2 = rnormal(&mut rng, n);
    let rows: Vec<f64> = x1.iter().zip(&x2).flat_map(|(a, b)| [*a, 1.0 + 0.5 * b]).collect();
    let sample = Sample::from_flat(rows, 2)?;

    for text in ["exp(2);normal(1,0.5)", "exp(1.6);normal(1,0.5)"] {
        let spec: MarginalSpec = text.parse()?;
        let r = marginal_test(&sample, &spec, 0.05, None)?;
        println!(
            "{text:<24} z = {:>7.3}  p = {:.4}  m = {}  reject = {}",
            r.statistic, r.p_value, r.diagnostics["m"], r.reject
        );
    }
    Ok(())
}
