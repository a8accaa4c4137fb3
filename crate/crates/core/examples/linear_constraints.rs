//! Test whether a sample has the first three moments of a standard normal.

use chi2dual::linear::test_linear;
use chi2dual::montecarlo::normal_moment_family;
use chi2dual::montecarlo::rng::{rnormal, Stream};
use chi2dual::Sample;

fn main() -> chi2dual::Result<()> {
    let fam = normal_moment_family(3)?;
    let mut rng = Stream::new(1);

    let null = Sample::univariate(rnormal(&mut rng, 500))?;
    let report = test_linear(&null, &fam, 0.05)?;
    println!(
        "N(0,1) data:   n chi2 = {:8.3}  p = {:.4}  reject = {}",
        report.statistic, report.p_value, report.reject
    );

    // shifted data violate E[x] = 0 and E[x^3] = 0
    let shifted: Vec<f64> = rnormal(&mut rng, 500).into_iter().map(|z| z + 0.2).collect();
    let report = test_linear(&Sample::univariate(shifted)?, &fam, 0.05)?;
    println!(
        "N(0.2,1) data: n chi2 = {:8.3}  p = {:.4}  reject = {}",
        report.statistic, report.p_value, report.reject
    );
    println!("\n{}", report.to_json());
    Ok(())
}
