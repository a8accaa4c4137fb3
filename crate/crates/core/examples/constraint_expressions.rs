//! Constraints written in the expression language used by the CLI.

use chi2dual::cli::parse_constraints;
use chi2dual::linear::test_linear;
use chi2dual::montecarlo::rng::{runif_d, Stream};
use chi2dual::Sample;

fn main() -> chi2dual::Result<()> {
    let fam = parse_constraints(
        r#"[
            {"label": "median of x1", "expr": "le(x1, 0.5)", "target": 0.5},
            {"label": "E[x1 x2]",     "expr": "x1 * x2",     "target": 0.25},
            {"label": "E[-log x2]",   "expr": "-log(x2)",    "target": 1}
        ]"#,
    )?;
    let sample = Sample::from_flat(runif_d(&mut Stream::new(8), 2, 1_000)?, 2)?;
    let r = test_linear(&sample, &fam, 0.05)?;
    for c in fam.constraints() {
        println!("{:<14} target {}", c.label(), c.target());
    }
    println!("n chi2 = {:.3}, p = {:.4}", r.statistic, r.p_value);
    Ok(())
}
