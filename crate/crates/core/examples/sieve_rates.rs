//! Growing families: check the rate conditions of a sieve along a grid of
//! sample sizes, then run the standardized test.

use chi2dual::marginal::default_plan;
use chi2dual::montecarlo::rng::{runif_d, Stream};
use chi2dual::sieve::{check_rate_conditions, sieve_test};
use chi2dual::Sample;

fn main() -> chi2dual::Result<()> {
    let grid = [1_000, 10_000, 100_000, 1_000_000, 10_000_000];
    for d in [2, 3] {
        let plan = default_plan(d);
        let rates = check_rate_conditions(&plan, &grid)?;
        println!("d = {d}: passes = {}", rates.passes);
        for row in &rates.rows {
            println!(
                "  n = {:>9}  k = {:>3}  B = {:>9.4}  D = {:>9.4}",
                row.n,
                row.k,
                row.condition_b.unwrap_or(f64::NAN),
                row.condition_d
            );
        }
        for w in &rates.warnings {
            println!("  warning: {w}");
        }
    }

    let sample = Sample::from_flat(runif_d(&mut Stream::new(3), 2, 5_000)?, 2)?;
    let report = sieve_test(&sample, &default_plan(2), 0.05)?;
    println!(
        "\nuniform square, n = 5000: z = {:.3}, k = {}",
        report.statistic, report.diagnostics["k"]
    );
    Ok(())
}
