//! In two dimensions the marginal statistic is also a weighted least-squares
//! projection of the cell counts onto tables with uniform margins. Compare
//! the two computations and the dual coefficients they imply.

use chi2dual::marginal::{brw_min_form, build_indicator_family, CellCounts, Grid};
use chi2dual::montecarlo::rng::{runif_d, Stream};
use chi2dual::{dual_coefficients, moment_vectors, Sample};

fn main() -> chi2dual::Result<()> {
    let grid = Grid::uniform(3)?;
    let sample = Sample::from_flat(runif_d(&mut Stream::new(5), 2, 2_000)?, 2)?;
    let cells = CellCounts::from_sample(&sample, &grid)?;
    println!("cell counts:\n{}", cells.counts);

    let proj = brw_min_form(&cells, &grid)?;
    let dual = dual_coefficients(&moment_vectors(&sample, &build_indicator_family(&grid, 2, true))?)?;
    let n = sample.n() as f64;
    println!("least-squares form: {:.12}", proj.value);
    println!("n * chi2_n:         {:.12}", n * dual.chi2_value);
    println!("({} sweeps)", proj.iterations);

    let (a0, a) = proj.dual_coefficients();
    println!("\n{:>6} {:>14} {:>14}", "coef", "from tables", "from moments");
    println!("{:>6} {a0:>14.8} {:>14.8}", "a0", dual.a0);
    for (i, (x, y)) in a.iter().zip(dual.a.iter()).enumerate() {
        println!("{:>6} {x:>14.8} {y:>14.8}", format!("a{}", i + 1));
    }
    Ok(())
}
