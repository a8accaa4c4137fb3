//! Simultaneous goodness-of-fit test of the `d` marginals of a sample.
//!
//! Each coordinate is mapped through its hypothesized CDF, after which the
//! null says every marginal is uniform on [0, 1]. The constraint family is
//! built from a grid `0 < u_1 < ... < u_m < 1`: either the cumulative
//! indicators `1{x_j <= u_i}` (targets `u_i`) or the cell indicators
//! `1{u_{i-1} < x_j <= u_i}` (targets `p_i = u_i - u_{i-1}`). The two bases
//! differ by a unit lower-triangular change of coordinates and give the same
//! statistic.
//!
//! In two dimensions the statistic also equals a weighted least-squares
//! projection of the cell counts onto tables with the hypothesized margins
//! ([`brw_min_form`]), which serves as an algebraic cross-check.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::distributions::normal_cdf;
use crate::divergence::{chi2_quadratic, moment_vectors, Constraint, ConstraintFamily};
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigenvalues;
use crate::report::{check_level, TestReport};
use crate::sample::Sample;
use crate::sieve::{standardize, RateCondition, SievePlan};

/// Largest admissible ratio between the widest and narrowest grid cell.
pub const MAX_CELL_RATIO: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Grid {
    cuts: Vec<f64>,
    cell_probs: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Grid {
    type Error = Error;
    fn try_from(cuts: Vec<f64>) -> Result<Self> {
        Grid::new(cuts)
    }
}

impl From<Grid> for Vec<f64> {
    fn from(g: Grid) -> Self {
        g.cuts
    }
}

impl Grid {
    pub fn new(cuts: Vec<f64>) -> Result<Self> {
        if cuts.is_empty() {
            return Err(Error::InvalidSpec("grid needs at least one cut".into()));
        }
        if cuts.iter().any(|u| !(*u > 0.0 && *u < 1.0)) {
            return Err(Error::InvalidSpec("grid cuts must lie strictly inside (0, 1)".into()));
        }
        if cuts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSpec("grid cuts must be strictly increasing".into()));
        }
        let m = cuts.len();
        let mut cell_probs = Vec::with_capacity(m + 1);
        let mut prev = 0.0;
        for &u in &cuts {
            cell_probs.push(u - prev);
            prev = u;
        }
        cell_probs.push(1.0 - prev);
        let (lo, hi) = cell_probs
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &p| (lo.min(p), hi.max(p)));
        if hi / lo > MAX_CELL_RATIO {
            return Err(Error::InvalidSpec(format!(
                "grid cells too uneven: width ratio {:.3} exceeds {MAX_CELL_RATIO}",
                hi / lo
            )));
        }
        Ok(Self { cuts, cell_probs })
    }

    /// `u_i = i / (m + 1)`.
    pub fn uniform(m: usize) -> Result<Self> {
        Self::new((1..=m).map(|i| i as f64 / (m + 1) as f64).collect())
    }

    pub fn m(&self) -> usize {
        self.cuts.len()
    }

    pub fn cuts(&self) -> &[f64] {
        &self.cuts
    }

    /// `p_1..p_{m+1}`; the last entry is the unconstrained top cell.
    pub fn cell_probs(&self) -> &[f64] {
        &self.cell_probs
    }

    pub fn last_cell_prob(&self) -> f64 {
        self.cell_probs[self.m()]
    }

    /// 0-based index of the cell containing `y`: cell `i` is `(u_i, u_{i+1}]`
    /// with `u_0 = -inf` and `u_{m+1} = +inf`.
    pub fn cell_of(&self, y: f64) -> usize {
        self.cuts.partition_point(|&u| u < y)
    }
}

/// Default grid size `m(n) = max(2, ceil(n^{1/4}))`.
pub fn default_m(n: usize) -> usize {
    ((n as f64).powf(0.25).ceil() as usize).max(2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum MarginalCdf {
    Uniform {
        lo: f64,
        hi: f64,
    },
    Exponential {
        rate: f64,
    },
    Normal {
        mu: f64,
        sigma: f64,
    },
    /// Piecewise-linear interpolation of `(x, F(x))` knots, constant outside.
    Tabulated {
        knots: Vec<(f64, f64)>,
    },
}

impl MarginalCdf {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSpec(m.to_string()));
        match self {
            Self::Uniform { lo, hi } if !lo.is_finite() || !hi.is_finite() || lo >= hi => {
                bad("uniform needs finite lo < hi")
            }
            Self::Exponential { rate } if !(*rate > 0.0 && rate.is_finite()) => {
                bad("exponential rate must be positive")
            }
            Self::Normal { mu, sigma } if !(*sigma > 0.0 && sigma.is_finite() && mu.is_finite()) => {
                bad("normal needs finite mu and positive sigma")
            }
            Self::Tabulated { knots } => {
                if knots.len() < 2 {
                    return bad("tabulated CDF needs at least two knots");
                }
                if knots.windows(2).any(|w| w[1].0 <= w[0].0 || w[1].1 < w[0].1) {
                    return bad("tabulated CDF knots must have increasing x and nondecreasing F");
                }
                if knots.iter().any(|(x, p)| !x.is_finite() || !(0.0..=1.0).contains(p)) {
                    return bad("tabulated CDF values must lie in [0, 1]");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Self::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Self::Normal { mu, sigma } => normal_cdf((x - mu) / sigma),
            Self::Tabulated { knots } => {
                let first = knots[0];
                let last = knots[knots.len() - 1];
                if x <= first.0 {
                    return first.1;
                }
                if x >= last.0 {
                    return last.1;
                }
                let j = knots.partition_point(|k| k.0 <= x);
                let (x0, p0) = knots[j - 1];
                let (x1, p1) = knots[j];
                p0 + (p1 - p0) * (x - x0) / (x1 - x0)
            }
        }
    }
}

impl fmt::Display for MarginalCdf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Uniform { lo, hi } => write!(f, "uniform({lo},{hi})"),
            Self::Exponential { rate } => write!(f, "exp({rate})"),
            Self::Normal { mu, sigma } => write!(f, "normal({mu},{sigma})"),
            Self::Tabulated { knots } => {
                let parts: Vec<String> = knots.iter().map(|(x, p)| format!("{x}:{p}")).collect();
                write!(f, "table({})", parts.join(","))
            }
        }
    }
}

fn parse_number(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidSpec(format!("'{}' is not a number", s.trim())))
}

impl FromStr for MarginalCdf {
    type Err = Error;

    /// Parses `uniform(lo,hi)`, `exp(rate)`, `normal(mu,sigma)` or
    /// `table(x1:F1,x2:F2,...)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let open = s
            .find('(')
            .ok_or_else(|| Error::InvalidSpec(format!("'{s}': expected name(args)")))?;
        if !s.ends_with(')') {
            return Err(Error::InvalidSpec(format!("'{s}': missing closing parenthesis")));
        }
        let name = s[..open].trim().to_ascii_lowercase();
        let body = &s[open + 1..s.len() - 1];
        let args = || -> Result<Vec<f64>> { body.split(',').map(parse_number).collect() };
        let expect = |v: Vec<f64>, k: usize| -> Result<Vec<f64>> {
            if v.len() == k {
                Ok(v)
            } else {
                Err(Error::InvalidSpec(format!(
                    "'{s}': expected {k} arguments, got {}",
                    v.len()
                )))
            }
        };
        let cdf = match name.as_str() {
            "uniform" | "unif" => {
                let v = expect(args()?, 2)?;
                Self::Uniform { lo: v[0], hi: v[1] }
            }
            "exp" | "exponential" => {
                let v = expect(args()?, 1)?;
                Self::Exponential { rate: v[0] }
            }
            "normal" | "norm" => {
                let v = expect(args()?, 2)?;
                Self::Normal { mu: v[0], sigma: v[1] }
            }
            "table" | "tabulated" => {
                let knots = body
                    .split(',')
                    .map(|kv| {
                        let (x, p) = kv
                            .split_once(':')
                            .ok_or_else(|| Error::InvalidSpec(format!("'{kv}': expected x:F")))?;
                        Ok((parse_number(x)?, parse_number(p)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Self::Tabulated { knots }
            }
            other => return Err(Error::InvalidSpec(format!("unknown distribution '{other}'"))),
        };
        cdf.validate()?;
        Ok(cdf)
    }
}

/// Hypothesized marginal laws, one per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalSpec {
    pub cdfs: Vec<MarginalCdf>,
}

impl MarginalSpec {
    pub fn new(cdfs: Vec<MarginalCdf>) -> Result<Self> {
        if cdfs.is_empty() {
            return Err(Error::InvalidSpec("no marginals given".into()));
        }
        for c in &cdfs {
            c.validate()?;
        }
        Ok(Self { cdfs })
    }

    pub fn uniform(d: usize) -> Self {
        Self {
            cdfs: vec![MarginalCdf::Uniform { lo: 0.0, hi: 1.0 }; d],
        }
    }

    pub fn d(&self) -> usize {
        self.cdfs.len()
    }
}

impl FromStr for MarginalSpec {
    type Err = Error;

    /// Semicolon-separated list, e.g. `uniform(0,1);exp(1.0)`.
    fn from_str(s: &str) -> Result<Self> {
        Self::new(
            s.split(';')
                .filter(|p| !p.trim().is_empty())
                .map(str::parse)
                .collect::<Result<Vec<_>>>()?,
        )
    }
}

/// Coordinate-wise probability integral transform.
pub fn pit_transform(sample: &Sample, spec: &MarginalSpec) -> Result<Sample> {
    if spec.d() != sample.d() {
        return Err(Error::InvalidSpec(format!(
            "{} marginals given for {}-dimensional data",
            spec.d(),
            sample.d()
        )));
    }
    let mut out = Vec::with_capacity(sample.as_flat().len());
    for row in sample.rows() {
        for (x, cdf) in row.iter().zip(&spec.cdfs) {
            let y = cdf.cdf(*x);
            if !(0.0..=1.0).contains(&y) {
                return Err(Error::InvalidSpec(format!("CDF {cdf} returned {y} at {x}")));
            }
            out.push(y);
        }
    }
    Sample::from_flat(out, sample.d())
}

/// Indicator constraint family on `grid`, ordered coordinate-major:
/// `(f_{1,1}..f_{m,1}, f_{1,2}, .., f_{m,d})`. With `delta_form` the
/// functions are cell indicators with targets `p_i`, otherwise cumulative
/// indicators with targets `u_i`.
pub fn build_indicator_family(grid: &Grid, d: usize, delta_form: bool) -> ConstraintFamily {
    let mut cons = Vec::with_capacity(grid.m() * d);
    for j in 0..d {
        for (i, &u) in grid.cuts().iter().enumerate() {
            if delta_form {
                let lo = if i == 0 { f64::NEG_INFINITY } else { grid.cuts()[i - 1] };
                cons.push(Constraint::new(
                    format!("cell({},{})", i + 1, j + 1),
                    grid.cell_probs()[i],
                    move |x: &[f64]| if x[j] > lo && x[j] <= u { 1.0 } else { 0.0 },
                ));
            } else {
                cons.push(Constraint::new(format!("le(x{},{u})", j + 1), u, move |x: &[f64]| {
                    if x[j] <= u {
                        1.0
                    } else {
                        0.0
                    }
                }));
            }
        }
    }
    ConstraintFamily::new(cons).expect("grid has at least one cut and d >= 1")
}

/// The `m x m` matrix `U = (sqrt(p_i p_l))`.
pub fn u_matrix(grid: &Grid) -> DMatrix<f64> {
    let p = &grid.cell_probs()[..grid.m()];
    DMatrix::from_fn(grid.m(), grid.m(), |i, l| (p[i] * p[l]).sqrt())
}

/// Covariance of the cell-indicator family under the uniform law on
/// `[0,1]^d`: block diagonal with blocks `diag(p) - p p'`, which is
/// `D^{1/2} (I - V) D^{1/2}` with `V = diag(U, .., U)`.
pub fn s0_matrix(grid: &Grid, d: usize) -> DMatrix<f64> {
    let m = grid.m();
    let p = grid.cell_probs();
    let mut s = DMatrix::zeros(m * d, m * d);
    for b in 0..d {
        for i in 0..m {
            for l in 0..m {
                let v = if i == l { p[i] - p[i] * p[i] } else { -p[i] * p[l] };
                s[(b * m + i, b * m + l)] = v;
            }
        }
    }
    s
}

/// Two-way table of cell counts for bivariate data already on [0, 1]^2.
#[derive(Debug, Clone, PartialEq)]
pub struct CellCounts {
    /// `(m+1) x (m+1)`, rows indexed by the first coordinate's cell.
    pub counts: DMatrix<f64>,
}

impl CellCounts {
    pub fn from_sample(sample: &Sample, grid: &Grid) -> Result<Self> {
        if sample.d() != 2 {
            return Err(Error::InvalidInput("cell counts need bivariate data".into()));
        }
        let c = grid.m() + 1;
        let mut counts = DMatrix::zeros(c, c);
        for row in sample.rows() {
            counts[(grid.cell_of(row[0]), grid.cell_of(row[1]))] += 1.0;
        }
        Ok(Self { counts })
    }

    pub fn from_matrix(counts: DMatrix<f64>) -> Result<Self> {
        if counts.nrows() != counts.ncols() || counts.nrows() < 2 {
            return Err(Error::InvalidInput(
                "cell counts must be a square table of side >= 2".into(),
            ));
        }
        if counts.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidInput("cell counts must be nonnegative".into()));
        }
        Ok(Self { counts })
    }

    pub fn n(&self) -> f64 {
        self.counts.sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.counts.row_iter().map(|r| r.sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        self.counts.column_iter().map(|c| c.sum()).collect()
    }

    pub fn zero_cells(&self) -> Vec<(usize, usize)> {
        let c = self.counts.nrows();
        (0..c)
            .flat_map(|i| (0..c).map(move |j| (i, j)))
            .filter(|&(i, j)| self.counts[(i, j)] == 0.0)
            .collect()
    }
}

pub const BRW_TOLERANCE: f64 = 1e-10;
pub const BRW_MAX_ITER: usize = 10_000;

/// Solution of a margin-constrained weighted least-squares projection.
#[derive(Debug, Clone)]
pub struct MarginProjection {
    /// Minimized value `sum W_ij (a_i + b_j)^2`.
    pub value: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Fitted table `n q_ij = N_ij + W_ij (a_i + b_j)`.
    pub fitted: DMatrix<f64>,
    pub iterations: usize,
}

impl MarginProjection {
    /// Coefficients of `f*_n` in the cell-indicator basis, in the order of
    /// [`build_indicator_family`] with `delta_form`: `(a0, [a~_1..a~_m, b~_1..b~_m])`.
    pub fn dual_coefficients(&self) -> (f64, Vec<f64>) {
        let m = self.a.len() - 1;
        let (am, bm) = (self.a[m], self.b[m]);
        let mut coef: Vec<f64> = self.a[..m].iter().map(|a| 2.0 * (a - am)).collect();
        coef.extend(self.b[..m].iter().map(|b| 2.0 * (b - bm)));
        (2.0 * (am + bm), coef)
    }
}

/// Minimizes `sum_ij (n q_ij - N_ij)^2 / W_ij` over tables `q` with row and
/// column sums `p`, by alternating exact updates of the multipliers `a`
/// (rows) and `b` (columns). Cells with `W_ij = 0` are pinned to `N_ij`.
pub fn margin_projection(weights: &DMatrix<f64>, counts: &DMatrix<f64>, p: &[f64]) -> Result<MarginProjection> {
    let c = counts.nrows();
    let n = counts.sum();
    let row_w: Vec<f64> = weights.row_iter().map(|r| r.sum()).collect();
    let col_w: Vec<f64> = weights.column_iter().map(|r| r.sum()).collect();
    if let Some(i) = row_w.iter().chain(&col_w).position(|w| *w <= 0.0) {
        return Err(Error::InvalidInput(format!(
            "margin {} has zero total weight; the projection is infeasible",
            i % c
        )));
    }
    let row_n: Vec<f64> = counts.row_iter().map(|r| r.sum()).collect();
    let col_n: Vec<f64> = counts.column_iter().map(|r| r.sum()).collect();
    let mut a = vec![0.0; c];
    let mut b = vec![0.0; c];
    let mut iterations = 0;
    let mut change = f64::INFINITY;
    while iterations < BRW_MAX_ITER {
        iterations += 1;
        change = 0.0f64;
        for i in 0..c {
            let cross: f64 = (0..c).map(|j| b[j] * weights[(i, j)]).sum();
            let new = (n * p[i] - row_n[i] - cross) / row_w[i];
            change = change.max((new - a[i]).abs());
            a[i] = new;
        }
        for j in 0..c {
            let cross: f64 = (0..c).map(|i| a[i] * weights[(i, j)]).sum();
            let new = (n * p[j] - col_n[j] - cross) / col_w[j];
            change = change.max((new - b[j]).abs());
            b[j] = new;
        }
        if change < BRW_TOLERANCE {
            break;
        }
    }
    if change >= BRW_TOLERANCE {
        return Err(Error::NoConvergence { iterations, change });
    }
    let mut value = 0.0;
    let mut fitted = counts.clone();
    for i in 0..c {
        for j in 0..c {
            let s = a[i] + b[j];
            value += weights[(i, j)] * s * s;
            fitted[(i, j)] += weights[(i, j)] * s;
        }
    }
    Ok(MarginProjection {
        value,
        a,
        b,
        fitted,
        iterations,
    })
}

/// `min_{q} sum (n q_ij - N_ij)^2 / N_ij 1{N_ij > 0}` over tables with the
/// grid's cell probabilities as both margins. Equals `n chi2_n` of the
/// cell-indicator family when every cell is occupied; with empty cells
/// it fails with `ZeroCell` (see [`brw_min_form_allowing_zeros`]).
pub fn brw_min_form(counts: &CellCounts, grid: &Grid) -> Result<MarginProjection> {
    if let Some(&(row, col)) = counts.zero_cells().first() {
        return Err(Error::ZeroCell { row, col });
    }
    brw_min_form_allowing_zeros(counts, grid)
}

/// [`brw_min_form`] with empty cells dropped from the objective. The value
/// is then no longer guaranteed to equal the quadratic form.
pub fn brw_min_form_allowing_zeros(counts: &CellCounts, grid: &Grid) -> Result<MarginProjection> {
    check_table(counts, grid)?;
    margin_projection(&counts.counts, &counts.counts, grid.cell_probs())
}

/// `min_q sum (n q_ij - N_ij)^2 / (n p_ij)` for a known joint law `p_ij`.
/// With the true law this is `gamma_n' S^{-1} gamma_n`; it needs `P` and so
/// is only usable in simulations.
pub fn known_law_min_form(counts: &CellCounts, grid: &Grid, joint: &DMatrix<f64>) -> Result<MarginProjection> {
    check_table(counts, grid)?;
    let n = counts.n();
    margin_projection(&(joint * n), &counts.counts, grid.cell_probs())
}

fn check_table(counts: &CellCounts, grid: &Grid) -> Result<()> {
    if counts.counts.nrows() != grid.m() + 1 {
        return Err(Error::InvalidInput(format!(
            "table side {} does not match grid with {} cells",
            counts.counts.nrows(),
            grid.m() + 1
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenReport {
    pub s0_lambda_min: f64,
    pub s0_lambda_max: f64,
    /// `p_{m+1} min p_i`
    pub lower_bound: f64,
    /// `max p_i`
    pub upper_bound: f64,
    pub s0_within_bounds: bool,
    pub density_lower_bound: f64,
    pub empirical_lambda_min: Option<f64>,
    /// Whether `lambda_min(S) >= density_lower_bound * p_{m+1} min p_i`.
    pub empirical_within_bound: Option<bool>,
}

/// Checks the eigenvalue sandwich of the null covariance and, optionally,
/// the density-scaled lower bound for a supplied covariance `s` of the
/// cell-indicator family. Report only; never fails.
pub fn eigen_bounds_check(grid: &Grid, d: usize, s: Option<&DMatrix<f64>>, density_lower_bound: f64) -> EigenReport {
    let p = &grid.cell_probs()[..grid.m()];
    let min_p = p.iter().copied().fold(f64::INFINITY, f64::min);
    let max_p = p.iter().copied().fold(0.0, f64::max);
    let lower_bound = grid.last_cell_prob() * min_p;
    let ev = symmetric_eigenvalues(&s0_matrix(grid, d));
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    let empirical_lambda_min = s.map(|s| symmetric_eigenvalues(s)[0]);
    EigenReport {
        s0_lambda_min: lo,
        s0_lambda_max: hi,
        lower_bound,
        upper_bound: max_p,
        s0_within_bounds: lo >= lower_bound - 1e-10 && hi <= max_p + 1e-10,
        density_lower_bound,
        empirical_lambda_min,
        empirical_within_bound: empirical_lambda_min.map(|l| l >= density_lower_bound * lower_bound),
    }
}

/// The default sieve for the marginal test: `k = d m(n)` cell indicators on
/// the uniform grid, `lambda_1 >= p_{m+1} min p_i = (m+1)^{-2}` and
/// `delta_n = n^{-1/2}`. In two dimensions only condition (B) is required,
/// since there it reduces to `m^{3/2} n^{-1/2} log n -> 0`.
///
/// Successive families are not prefixes of each other: refining the uniform
/// grid moves every cut.
pub fn default_plan(d: usize) -> SievePlan {
    let plan = SievePlan::new(
        move |n| d * default_m(n),
        move |k| Ok(build_indicator_family(&Grid::uniform(k / d)?, d, true)),
    )
    .with_lambda1_bound(move |k| {
        let m = (k / d) as f64;
        1.0 / ((m + 1.0) * (m + 1.0))
    })
    .with_kmt_rate(|n| (n as f64).powf(-0.5));
    if d == 2 {
        plan.requiring(&[RateCondition::B])
    } else {
        plan
    }
}

/// Marginal goodness-of-fit test: probability integral transform, uniform
/// grid with `m` cuts (default [`default_m`]), cell-indicator family, and the
/// standardized statistic against the upper normal tail.
///
/// An empty marginal cell makes the constraint set restricted to the sample
/// empty; the statistic is then `+inf` and the report carries the warning
/// `degenerate_cells`.
pub fn marginal_test(sample: &Sample, spec: &MarginalSpec, alpha: f64, m: Option<usize>) -> Result<TestReport> {
    check_level(alpha)?;
    let y = pit_transform(sample, spec)?;
    let d = y.d();
    let n = y.n();
    let m = m.unwrap_or_else(|| default_m(n));
    let grid = Grid::uniform(m)?;
    let fam = build_indicator_family(&grid, d, true);
    let k = fam.k();

    let mut marginal_counts = vec![0usize; d * (m + 1)];
    for row in y.rows() {
        for (j, v) in row.iter().enumerate() {
            marginal_counts[j * (m + 1) + grid.cell_of(*v)] += 1;
        }
    }
    let min_count = marginal_counts.iter().copied().min().unwrap_or(0);
    let nf = n as f64;

    let (chi2, degenerate) = if min_count == 0 {
        (f64::INFINITY, true)
    } else {
        (chi2_quadratic(&moment_vectors(&y, &fam)?)?, false)
    };
    let z = standardize(nf * chi2, k);
    let mut report = TestReport::std_normal(z, alpha)?
        .with("n", nf)
        .with("m", m as f64)
        .with("k", k as f64)
        .with("chi2_value", chi2)
        .with("n_chi2", nf * chi2)
        .with("min_marginal_count", min_count as f64);
    if degenerate {
        report.warn("degenerate_cells");
    }
    if (n as f64) < 4.0 * ((m + 1) as f64).powi(d as i32) {
        report.warn("small_sample_for_grid");
    }
    if d == 2 {
        let cells = CellCounts::from_sample(&y, &grid)?;
        let zeros = cells.zero_cells().len();
        report.insert("zero_joint_cells", zeros as f64);
        if zeros > 0 {
            report.warn("zero_joint_cells");
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::dual_coefficients;

    fn lcg_points(n: usize, d: usize, seed: u64) -> Sample {
        let mut state = seed;
        let mut v = Vec::with_capacity(n * d);
        for _ in 0..n * d {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            v.push(((state >> 11) as f64 + 0.5) / (1u64 << 53) as f64);
        }
        Sample::from_flat(v, d).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(vec![]).is_err());
        assert!(Grid::new(vec![0.5, 0.5]).is_err());
        assert!(Grid::new(vec![0.0, 0.5]).is_err());
        assert!(Grid::new(vec![0.01, 0.5]).is_err());
        let g = Grid::uniform(3).unwrap();
        assert_eq!(g.cell_probs(), &[0.25, 0.25, 0.25, 0.25]);
        assert!((g.cell_probs().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(g.cell_of(0.25), 0);
        assert_eq!(g.cell_of(0.2500001), 1);
        assert_eq!(g.cell_of(1.0), 3);
    }

    #[test]
    fn single_cut_family() {
        let g = Grid::new(vec![0.5]).unwrap();
        for delta in [false, true] {
            let fam = build_indicator_family(&g, 1, delta);
            assert_eq!(fam.k(), 1);
            assert_eq!(fam.targets(), vec![0.5]);
            let c = &fam.constraints()[0];
            assert_eq!(c.eval(&[0.5]), 1.0);
            assert_eq!(c.eval(&[0.51]), 0.0);
        }
        let fam = build_indicator_family(&Grid::uniform(3).unwrap(), 2, true);
        assert_eq!(fam.targets(), vec![0.25; 6]);
    }

    #[test]
    fn cdf_parsing_and_boundaries() {
        let spec: MarginalSpec = "uniform(0,1); exp(1.0);normal(0,2);table(0:0,1:0.5,2:1)"
            .parse()
            .unwrap();
        assert_eq!(spec.d(), 4);
        assert_eq!(spec.cdfs[1].cdf(0.0), 0.0);
        assert_eq!(spec.cdfs[0].cdf(0.3), 0.3);
        assert_eq!(spec.cdfs[2].cdf(0.0), 0.5);
        assert_eq!(spec.cdfs[3].cdf(1.5), 0.75);
        assert_eq!(spec.cdfs[3].cdf(-1.0), 0.0);
        assert!("exp(-1)".parse::<MarginalCdf>().is_err());
        assert!("beta(2,2)".parse::<MarginalCdf>().is_err());
        assert!("table(0:0.5,1:0.2)".parse::<MarginalCdf>().is_err());
        assert!("uniform(0,1".parse::<MarginalCdf>().is_err());
        for c in &spec.cdfs {
            assert_eq!(&c.to_string().parse::<MarginalCdf>().unwrap(), c);
        }
    }

    #[test]
    fn pit_identity_and_dimension_check() {
        let s = lcg_points(20, 2, 3);
        let y = pit_transform(&s, &MarginalSpec::uniform(2)).unwrap();
        assert_eq!(y, s);
        assert!(pit_transform(&s, &MarginalSpec::uniform(3)).is_err());
    }

    #[test]
    fn delta_and_cumulative_forms_agree() {
        let s = lcg_points(300, 2, 11);
        let g = Grid::new(vec![0.15, 0.3, 0.55, 0.8]).unwrap();
        let a = chi2_quadratic(&moment_vectors(&s, &build_indicator_family(&g, 2, true)).unwrap()).unwrap();
        let b = chi2_quadratic(&moment_vectors(&s, &build_indicator_family(&g, 2, false)).unwrap()).unwrap();
        assert!((a - b).abs() <= 1e-10 * (1.0 + a), "{a} vs {b}");
    }

    #[test]
    fn s0_single_cut_is_bernoulli_variance() {
        let g = Grid::new(vec![0.5]).unwrap();
        assert_eq!(s0_matrix(&g, 1), DMatrix::from_element(1, 1, 0.25));
        let r = eigen_bounds_check(&g, 1, None, 1.0);
        assert_eq!(r.lower_bound, 0.25);
        assert_eq!(r.upper_bound, 0.5);
        assert!(r.s0_within_bounds);
    }

    #[test]
    fn s0_factorizes_through_u() {
        let g = Grid::new(vec![0.1, 0.35, 0.5, 0.7, 0.85]).unwrap();
        let p = &g.cell_probs()[..g.m()];
        let dh = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(g.m(), p.iter().map(|v| v.sqrt())));
        let block = &dh * (DMatrix::identity(g.m(), g.m()) - u_matrix(&g)) * &dh;
        let s0 = s0_matrix(&g, 2);
        assert!((s0.view((0, 0), (g.m(), g.m())) - &block).abs().max() < 1e-15);
        assert!((s0.view((g.m(), g.m()), (g.m(), g.m())) - &block).abs().max() < 1e-15);
        assert_eq!(s0.view((0, g.m()), (g.m(), g.m())).abs().max(), 0.0);
    }

    #[test]
    fn u_has_rank_one_spectrum() {
        let g = Grid::uniform(4).unwrap();
        let ev = symmetric_eigenvalues(&u_matrix(&g));
        assert!((ev[3] - (1.0 - g.last_cell_prob())).abs() < 1e-12);
        assert!(ev[..3].iter().all(|e| e.abs() < 1e-12));
    }

    #[test]
    fn eigen_check_flags_perturbed_covariance() {
        let g = Grid::uniform(3).unwrap();
        let mut s = s0_matrix(&g, 2);
        s[(0, 0)] -= 0.17;
        let r = eigen_bounds_check(&g, 2, Some(&s), 1.0);
        assert!(r.s0_within_bounds);
        assert_eq!(r.empirical_within_bound, Some(false));
    }

    #[test]
    fn brw_proportional_counts_give_zero() {
        let g = Grid::new(vec![0.2, 0.6]).unwrap();
        let p = g.cell_probs().to_vec();
        let n = 1000.0;
        let counts = DMatrix::from_fn(3, 3, |i, j| n * p[i] * p[j]);
        let sol = brw_min_form(&CellCounts::from_matrix(counts).unwrap(), &g).unwrap();
        assert!(sol.value.abs() < 1e-18);
    }

    #[test]
    fn brw_equals_quadratic_form_and_coefficients() {
        let s = lcg_points(400, 2, 5);
        let g = Grid::uniform(2).unwrap();
        let cells = CellCounts::from_sample(&s, &g).unwrap();
        let brw = brw_min_form(&cells, &g).unwrap();
        let fam = build_indicator_family(&g, 2, true);
        let mv = moment_vectors(&s, &fam).unwrap();
        let dual = dual_coefficients(&mv).unwrap();
        let n = s.n() as f64;
        assert!((brw.value - n * dual.chi2_value).abs() < 1e-8);
        let (a0, a) = brw.dual_coefficients();
        assert!((a0 - dual.a0).abs() < 1e-8);
        for (x, y) in a.iter().zip(dual.a.iter()) {
            assert!((x - y).abs() < 1e-8);
        }
        // fitted table has the target margins
        let p = g.cell_probs();
        for (i, pi) in p.iter().enumerate() {
            assert!((brw.fitted.row(i).sum() / n - pi).abs() < 1e-8);
            assert!((brw.fitted.column(i).sum() / n - pi).abs() < 1e-8);
        }
    }

    #[test]
    fn brw_zero_cell_is_reported() {
        let g = Grid::uniform(1).unwrap();
        let counts = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 2.0, 4.0]);
        let cells = CellCounts::from_matrix(counts).unwrap();
        assert_eq!(
            brw_min_form(&cells, &g).unwrap_err(),
            Error::ZeroCell { row: 0, col: 1 }
        );
        assert!(brw_min_form_allowing_zeros(&cells, &g).unwrap().value >= 0.0);
    }

    #[test]
    fn known_law_form_is_sum_of_marginal_pearson_statistics() {
        let s = lcg_points(500, 2, 9);
        let g = Grid::new(vec![0.2, 0.45, 0.7]).unwrap();
        let cells = CellCounts::from_sample(&s, &g).unwrap();
        let p = g.cell_probs();
        let joint = DMatrix::from_fn(4, 4, |i, j| p[i] * p[j]);
        let v = known_law_min_form(&cells, &g, &joint).unwrap().value;
        let n = s.n() as f64;
        let pearson = |sums: Vec<f64>| {
            sums.iter()
                .zip(p)
                .map(|(o, q)| (o - n * q).powi(2) / (n * q))
                .sum::<f64>()
        };
        let oracle = pearson(cells.row_sums()) + pearson(cells.col_sums());
        assert!((v - oracle).abs() < 1e-8, "{v} vs {oracle}");
    }

    #[test]
    fn degenerate_marginal_cell() {
        let s = Sample::univariate(vec![0.1, 0.2, 0.3, 0.45]).unwrap();
        let r = marginal_test(&s, &MarginalSpec::uniform(1), 0.05, Some(1)).unwrap();
        assert!(r.statistic.is_infinite());
        assert!(r.reject);
        assert!(r.warnings().any(|w| w == "degenerate_cells"));
    }

    #[test]
    fn pit_invariance_of_the_test() {
        let u = lcg_points(400, 2, 21);
        // x1 ~ Exp(2), x2 ~ Uniform(3, 5)
        let raw: Vec<f64> = u
            .rows()
            .flat_map(|r| [-(1.0 - r[0]).ln() / 2.0, 3.0 + 2.0 * r[1]])
            .collect();
        let raw = Sample::from_flat(raw, 2).unwrap();
        let spec: MarginalSpec = "exp(2);uniform(3,5)".parse().unwrap();
        let direct = marginal_test(&raw, &spec, 0.05, Some(3)).unwrap();
        let y = pit_transform(&raw, &spec).unwrap();
        let via = marginal_test(&y, &MarginalSpec::uniform(2), 0.05, Some(3)).unwrap();
        assert_eq!(direct, via);
    }

    #[test]
    fn default_plan_passes_two_dimensional_rate() {
        let grid = [1_000, 10_000, 100_000, 1_000_000, 10_000_000];
        let r = crate::sieve::check_rate_conditions(&default_plan(2), &grid).unwrap();
        assert_eq!(r.b_decreasing, Some(true));
        assert!(r.passes);
        assert_eq!(default_m(5000), 9);
    }
}
