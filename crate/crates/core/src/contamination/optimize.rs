//! Derivative-free search used by the contamination statistic: golden
//! section for the outer one-dimensional infimum, Nelder-Mead inside a box
//! for the inner supremum.

use serde::Serialize;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineMin {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
    /// True when the golden-section bracket had to be replaced by a grid scan.
    pub used_grid: bool,
}

/// Golden-section minimization of `f` on `[lo, hi]` down to an interval of
/// width `tol`.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> LineMin {
    if hi <= lo {
        return LineMin {
            x: lo,
            value: f(lo),
            evaluations: 1,
            used_grid: false,
        };
    }
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut evaluations = 2;
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        evaluations += 1;
    }
    let (x, value) = if fc <= fd { (c, fc) } else { (d, fd) };
    LineMin {
        x,
        value,
        evaluations,
        used_grid: false,
    }
}

/// Golden section on `[lo, hi]`, checked against the endpoints. If either
/// endpoint beats the golden-section result by more than `ftol` the profile
/// is not unimodal there; the minimizer then comes from a `grid`-point scan
/// refined by golden section between the neighbours of the best node.
pub fn minimize_interval<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    tol: f64,
    ftol: f64,
    grid: usize,
) -> LineMin {
    let g = golden_section(&mut f, lo, hi, tol);
    if hi <= lo {
        return g;
    }
    let (flo, fhi) = (f(lo), f(hi));
    let mut best = g;
    best.evaluations += 2;
    if flo.min(fhi) >= g.value - ftol {
        if flo < best.value {
            best.x = lo;
            best.value = flo;
        }
        if fhi < best.value {
            best.x = hi;
            best.value = fhi;
        }
        return best;
    }
    let grid = grid.max(3);
    let step = (hi - lo) / (grid - 1) as f64;
    let mut nodes: Vec<(f64, f64)> = Vec::with_capacity(grid);
    for i in 0..grid {
        let x = if i == grid - 1 { hi } else { lo + step * i as f64 };
        nodes.push((x, f(x)));
    }
    let (i_best, _) = nodes
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .expect("grid is non-empty");
    let left = nodes[i_best.saturating_sub(1)].0;
    let right = nodes[(i_best + 1).min(grid - 1)].0;
    let refined = golden_section(&mut f, left, right, tol);
    let mut out = (nodes[i_best].0, nodes[i_best].1);
    for cand in [(refined.x, refined.value), (best.x, best.value)] {
        if cand.1 < out.1 {
            out = cand;
        }
    }
    LineMin {
        x: out.0,
        value: out.1,
        evaluations: best.evaluations + grid + refined.evaluations,
        used_grid: true,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexMin {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Nelder-Mead minimization inside the box `[lower, upper]`. Trial points
/// outside the box score `+inf` (so the simplex contracts instead of being
/// flattened onto a face); coordinates with `lower == upper` stay fixed.
/// Stops when the spread of the simplex values drops below `ftol`, then
/// restarts from the best point until a restart gains no more than `ftol`.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    start: &[f64],
    steps: &[f64],
    lower: &[f64],
    upper: &[f64],
    ftol: f64,
    max_evaluations: usize,
) -> SimplexMin {
    let mut run = simplex_run(&mut f, start, steps, lower, upper, ftol, max_evaluations);
    while run.converged && run.evaluations < max_evaluations {
        let next = simplex_run(
            &mut f,
            &run.x,
            steps,
            lower,
            upper,
            ftol,
            max_evaluations - run.evaluations,
        );
        let improved = next.value < run.value - ftol;
        let evaluations = run.evaluations + next.evaluations;
        if next.value < run.value {
            run = SimplexMin { evaluations, ..next };
        } else {
            run.evaluations = evaluations;
        }
        if !improved {
            break;
        }
    }
    run
}

fn simplex_run<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    start: &[f64],
    steps: &[f64],
    lower: &[f64],
    upper: &[f64],
    ftol: f64,
    max_evaluations: usize,
) -> SimplexMin {
    let dim = start.len();
    let free: Vec<usize> = (0..dim).filter(|&j| upper[j] > lower[j]).collect();
    let clamp = |mut x: Vec<f64>| {
        for j in 0..dim {
            x[j] = x[j].clamp(lower[j], upper[j]);
        }
        x
    };
    let x0 = clamp(start.to_vec());
    let mut evaluations = 1;
    let f0 = f(&x0);
    if free.is_empty() {
        return SimplexMin {
            x: x0,
            value: f0,
            evaluations,
            converged: true,
        };
    }
    let mut simplex = vec![(x0.clone(), f0)];
    for &j in &free {
        let mut x = x0.clone();
        // step inward if the start sits on the upper face
        x[j] = if x0[j] + steps[j] <= upper[j] {
            x0[j] + steps[j]
        } else {
            x0[j] - steps[j]
        };
        let x = clamp(x);
        let v = f(&x);
        evaluations += 1;
        simplex.push((x, v));
    }
    let m = free.len();
    let mut converged = false;
    while evaluations < max_evaluations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[m].1);
        if best.is_finite() && worst - best <= ftol {
            converged = true;
            break;
        }
        let mut centroid = vec![0.0; dim];
        for (x, _) in &simplex[..m] {
            for j in 0..dim {
                centroid[j] += x[j] / m as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            (0..dim)
                .map(|j| centroid[j] + t * (simplex[m].0[j] - centroid[j]))
                .collect()
        };
        let inside = |x: &[f64]| (0..dim).all(|j| x[j] >= lower[j] && x[j] <= upper[j]);
        let mut f = |x: &[f64]| if inside(x) { f(x) } else { f64::INFINITY };
        let xr = along(-1.0);
        let fr = f(&xr);
        evaluations += 1;
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = f(&xe);
            evaluations += 1;
            simplex[m] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[m - 1].1 {
            simplex[m] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[m].1 {
                let x = along(-0.5);
                let v = f(&x);
                (x, v)
            } else {
                let x = along(0.5);
                let v = f(&x);
                (x, v)
            };
            evaluations += 1;
            if fc < simplex[m].1.min(fr) {
                simplex[m] = (xc, fc);
            } else {
                let x_best = simplex[0].0.clone();
                for (x, v) in simplex.iter_mut().skip(1) {
                    let shrunk: Vec<f64> = (0..dim).map(|j| x_best[j] + 0.5 * (x[j] - x_best[j])).collect();
                    *v = f(&shrunk);
                    *x = shrunk;
                    evaluations += 1;
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    SimplexMin {
        x,
        value,
        evaluations,
        converged,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StartPoint {
    pub x: Vec<f64>,
    pub value: f64,
}

/// Certificate of a box-constrained maximization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxMax {
    pub x: Vec<f64>,
    pub value: f64,
    pub starts: Vec<StartPoint>,
    pub evaluations: usize,
    /// Number of simplex runs that met the tolerance.
    pub converged_starts: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxSearch {
    pub grid: usize,
    pub starts: usize,
    pub ftol: f64,
    pub max_evaluations: usize,
}

impl Default for BoxSearch {
    fn default() -> Self {
        Self {
            grid: 8,
            starts: 3,
            ftol: 1e-8,
            max_evaluations: 400,
        }
    }
}

/// Maximizes `f` over the box: a `grid^dim` lattice (plus `extra` points),
/// then Nelder-Mead from the best `starts` distinct lattice points.
/// Non-finite values count as `-inf`.
pub fn maximize_box<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    lower: &[f64],
    upper: &[f64],
    extra: &[Vec<f64>],
    search: &BoxSearch,
) -> BoxMax {
    let dim = lower.len();
    let axes: Vec<Vec<f64>> = (0..dim)
        .map(|j| {
            if upper[j] <= lower[j] || search.grid < 2 {
                vec![lower[j]]
            } else {
                let h = (upper[j] - lower[j]) / (search.grid - 1) as f64;
                (0..search.grid)
                    .map(|i| {
                        if i == search.grid - 1 {
                            upper[j]
                        } else {
                            lower[j] + h * i as f64
                        }
                    })
                    .collect()
            }
        })
        .collect();
    let mut points: Vec<Vec<f64>> = vec![vec![]];
    for axis in &axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    for e in extra {
        if !points.contains(e) {
            points.push(e.clone());
        }
    }
    let safe = |v: f64| if v.is_nan() { f64::NEG_INFINITY } else { v };
    let mut scored: Vec<StartPoint> = points
        .into_iter()
        .map(|x| {
            let value = safe(f(&x));
            StartPoint { x, value }
        })
        .collect();
    let mut evaluations = scored.len();
    scored.sort_by(|a, b| b.value.total_cmp(&a.value));
    let steps: Vec<f64> = axes
        .iter()
        .enumerate()
        .map(|(j, a)| {
            if a.len() > 1 {
                0.5 * (upper[j] - lower[j]) / (a.len() - 1) as f64
            } else {
                0.0
            }
        })
        .collect();

    let mut best = scored[0].clone();
    let mut starts = Vec::new();
    let mut converged_starts = 0;
    for s in scored.iter().filter(|s| s.value.is_finite()).take(search.starts) {
        let run = nelder_mead(
            |x| -safe(f(x)),
            &s.x,
            &steps,
            lower,
            upper,
            search.ftol,
            search.max_evaluations,
        );
        evaluations += run.evaluations;
        if run.converged {
            converged_starts += 1;
        }
        if -run.value > best.value {
            best = StartPoint {
                x: run.x,
                value: -run.value,
            };
        }
        starts.push(s.clone());
    }
    BoxMax {
        x: best.x,
        value: best.value,
        starts,
        evaluations,
        converged_starts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_minimum() {
        let r = golden_section(|x| (x - 0.3).powi(2), -1.0, 2.0, 1e-9);
        assert!((r.x - 0.3).abs() < 1e-8);
    }

    #[test]
    fn grid_fallback_escapes_local_minimum() {
        // local minimum near 0.2, global at the right endpoint region
        let f = |x: f64| {
            if x < 0.8 {
                (x - 0.2).powi(2)
            } else {
                0.36 - 5.0 * (x - 0.8)
            }
        };
        let r = minimize_interval(f, 0.0, 1.0, 1e-9, 1e-12, 64);
        assert!(r.used_grid);
        assert!((r.x - 1.0).abs() < 1e-6, "{}", r.x);
    }

    #[test]
    fn nelder_mead_rosenbrock_in_box() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = nelder_mead(
            rosen,
            &[-1.0, 1.5],
            &[0.3, 0.3],
            &[-2.0, -2.0],
            &[2.0, 2.0],
            1e-14,
            5000,
        );
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-3 && (r.x[1] - 1.0).abs() < 1e-3, "{:?}", r.x);
    }

    #[test]
    fn nelder_mead_follows_ridge_off_a_face() {
        // narrow diagonal valley leaving the y = 0 face; start on the face
        let f = |p: &[f64]| 1e4 * (p[0] - 1.0 - 4.0 * p[1]).powi(2) - 0.2 * p[1] + 10.0 * p[1] * p[1];
        let r = nelder_mead(f, &[1.0, 0.0], &[0.1, 0.05], &[0.0, 0.0], &[2.0, 1.0], 1e-12, 2000);
        assert!((r.x[1] - 0.01).abs() < 1e-3, "{:?}", r.x);
        assert!((r.x[0] - 1.04).abs() < 1e-3, "{:?}", r.x);
    }

    #[test]
    fn nelder_mead_respects_bounds_and_fixed_coordinates() {
        let r = nelder_mead(
            |x| (x[0] - 5.0).powi(2) + (x[1] - 1.0).powi(2),
            &[0.0, 0.5],
            &[0.1, 0.1],
            &[0.0, 0.5],
            &[1.0, 0.5],
            1e-12,
            2000,
        );
        assert!((r.x[0] - 1.0).abs() < 1e-6);
        assert_eq!(r.x[1], 0.5);
    }

    #[test]
    fn box_maximum_with_infeasible_region() {
        let f = |x: &[f64]| {
            if x[1] < 0.0 {
                f64::NEG_INFINITY
            } else {
                -(x[0] - 0.7).powi(2) - (x[1] - 0.1).powi(2)
            }
        };
        let r = maximize_box(f, &[0.0, -1.0], &[1.0, 1.0], &[], &BoxSearch::default());
        assert!((r.x[0] - 0.7).abs() < 1e-3 && (r.x[1] - 0.1).abs() < 1e-3, "{:?}", r.x);
        assert!(r.value <= 0.0 && r.value > -1e-7);
        assert_eq!(r.starts.len(), 3);
    }
}
