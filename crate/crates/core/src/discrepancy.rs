//! Exact star discrepancy of finite point sets in [0,1)^d.
//!
//! The star discrepancy is the supremum over anchored boxes [0, beta) of
//! |count/N - volume|. Over a finite set the supremum is determined by the
//! grid of corner candidates built from the point coordinates plus 1 in each
//! axis: at a corner gamma both one-sided limits matter, the realized open
//! box (strict counts) and the closed limit approached from above (counts
//! with <=). All comparisons are exact rational. A float prefilter narrows
//! the corner scan but every surviving candidate is re-evaluated exactly, so
//! float rounding cannot change any result.

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::digits::rational_to_f64;
use crate::pointgen::PointSet;
use crate::{Error, Rational, Result};

/// Default corner budget for exact enumeration, sized so the two count
/// tables stay within a few hundred MB.
pub const DEFAULT_CELL_BUDGET: u64 = 20_000_000;

/// Which one-sided limit attains the reported value at the witness corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    /// Supremum of boxes shrinking onto the corner from above; counts use <=.
    ClosedLimit,
    /// The realized box [0, corner) itself; counts are strict.
    Open,
}

impl Side {
    pub fn label(self) -> &'static str {
        match self {
            Side::ClosedLimit => "closed-limit",
            Side::Open => "open",
        }
    }
}

/// Anchored box [0, beta) with 0 < beta_i <= 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnchoredBox {
    upper: Vec<Rational>,
}

impl AnchoredBox {
    pub fn new(upper: Vec<Rational>) -> Result<Self> {
        if upper.is_empty() {
            return Err(Error::invalid("anchored box needs at least one dimension"));
        }
        for b in &upper {
            if *b <= Rational::zero() || *b > Rational::one() {
                return Err(Error::invalid(format!("box corner {b} outside (0,1]")));
            }
        }
        Ok(AnchoredBox { upper })
    }

    pub fn dim(&self) -> usize {
        self.upper.len()
    }

    pub fn upper(&self) -> &[Rational] {
        &self.upper
    }

    pub fn volume(&self) -> Rational {
        self.upper.iter().fold(Rational::one(), |acc, b| acc * b)
    }
}

/// Exact star discrepancy value with the corner attaining it.
#[derive(Debug, Clone)]
pub struct DiscrepancyResult {
    pub value: Rational,
    /// Corner gamma of the attaining box; coordinates lie in [0,1]. For the
    /// open side the box [0, gamma) itself attains |local| = value; for the
    /// closed-limit side the value is the limit over boxes shrinking to the
    /// closed box at gamma (gamma may then have zero coordinates).
    pub witness: Vec<Rational>,
    pub side: Side,
    pub n: usize,
    pub d: usize,
}

impl DiscrepancyResult {
    pub fn value_f64(&self) -> f64 {
        rational_to_f64(&self.value)
    }
}

fn require_points(points: &PointSet) -> Result<()> {
    if points.is_empty() {
        return Err(Error::invalid("point set is empty"));
    }
    Ok(())
}

/// Signed local discrepancy of the realized box [0, beta): strict count over
/// N minus the box volume.
pub fn local_discrepancy(points: &PointSet, beta: &AnchoredBox) -> Result<Rational> {
    require_points(points)?;
    if beta.dim() != points.dim() {
        return Err(Error::invalid(format!(
            "box dimension {} does not match point dimension {}",
            beta.dim(),
            points.dim()
        )));
    }
    let inside = points
        .iter_points()
        .filter(|p| p.iter().zip(beta.upper()).all(|(x, b)| x < b))
        .count();
    let n = points.len();
    Ok(Rational::new(inside.into(), n.into()) - beta.volume())
}

/// Closed-limit local discrepancy at a corner: counts use <= and the corner
/// may touch 0 or 1. This is the limit of `local_discrepancy` over boxes
/// shrinking onto the closed box at `corner` from above.
pub fn closed_limit_local(points: &PointSet, corner: &[Rational]) -> Result<Rational> {
    require_points(points)?;
    if corner.len() != points.dim() {
        return Err(Error::invalid("corner dimension mismatch"));
    }
    for g in corner {
        if g.is_negative() || *g > Rational::one() {
            return Err(Error::invalid(format!("corner coordinate {g} outside [0,1]")));
        }
    }
    let inside = points
        .iter_points()
        .filter(|p| p.iter().zip(corner).all(|(x, g)| x <= g))
        .count();
    let n = points.len();
    let vol = corner.iter().fold(Rational::one(), |acc, g| acc * g);
    Ok(Rational::new(inside.into(), n.into()) - vol)
}

/// Exact 1-d star discrepancy by the sorted-points formula
/// max_i max(i/N - x_(i), x_(i) - (i-1)/N).
pub fn star_discrepancy_1d(points: &PointSet) -> Result<DiscrepancyResult> {
    require_points(points)?;
    if points.dim() != 1 {
        return Err(Error::invalid(format!("expected 1-d points, got d={}", points.dim())));
    }
    let n = points.len();
    let mut xs: Vec<Rational> = points.iter_points().map(|p| p[0].clone()).collect();
    xs.sort();
    let big_n = Rational::from_integer(n.into());
    let mut best: Option<(Rational, Rational, Side)> = None;
    for (i, x) in xs.iter().enumerate() {
        let rank = Rational::from_integer((i as i64 + 1).into());
        // boxes closing onto x from above hold at least i+1 points
        let closed = &rank / &big_n - x;
        // the box [0, x) itself misses at least the i+1-th point onward
        let open = x - (rank - Rational::one()) / &big_n;
        for (value, side) in [(closed, Side::ClosedLimit), (open, Side::Open)] {
            let better = match &best {
                None => true,
                Some((bv, _, _)) => value > *bv,
            };
            if better {
                best = Some((value, x.clone(), side));
            }
        }
    }
    let (value, witness, side) = best.expect("nonempty set yields a candidate");
    Ok(DiscrepancyResult { value, witness: vec![witness], side, n, d: 1 })
}

/// Corner grid for exact enumeration: per axis the sorted distinct point
/// coordinates plus 1.
struct CornerGrid {
    axes: Vec<Vec<Rational>>,
    axes_f64: Vec<Vec<f64>>,
    dims: Vec<usize>,
    cells: usize,
}

fn build_grid(points: &PointSet, budget: u64) -> Result<CornerGrid> {
    let d = points.dim();
    let mut axes: Vec<Vec<Rational>> = Vec::with_capacity(d);
    for i in 0..d {
        let mut vals: Vec<Rational> = points.iter_points().map(|p| p[i].clone()).collect();
        vals.sort();
        vals.dedup();
        vals.push(Rational::one());
        axes.push(vals);
    }
    let mut cells: u128 = 1;
    for a in &axes {
        cells = cells.saturating_mul(a.len() as u128);
    }
    if cells > budget as u128 {
        return Err(Error::BudgetExceeded {
            needed: cells,
            budget: budget as u128,
            hint: "use cover_discrepancy_interval for a certified enclosure at this size".into(),
        });
    }
    let axes_f64 = axes
        .iter()
        .map(|a| a.iter().map(rational_to_f64).collect())
        .collect();
    let dims: Vec<usize> = axes.iter().map(|a| a.len()).collect();
    Ok(CornerGrid { axes, axes_f64, dims, cells: cells as usize })
}

/// In-place prefix sum along one axis of a dense row-major array.
pub(crate) fn prefix_sum_axis(data: &mut [u32], dims: &[usize], axis: usize) {
    let stride: usize = dims[axis + 1..].iter().product();
    let block = stride * dims[axis];
    for start in (0..data.len()).step_by(block) {
        for k in 1..dims[axis] {
            let off = start + k * stride;
            for j in 0..stride {
                data[off + j] += data[off + j - stride];
            }
        }
    }
}

/// Count tables over the corner grid: open[c] counts points strictly below
/// the corner in every axis, closed[c] counts points componentwise <=.
fn count_tables(points: &PointSet, grid: &CornerGrid) -> (Vec<u32>, Vec<u32>) {
    let d = points.dim();
    let mut open = vec![0u32; grid.cells];
    let mut closed = vec![0u32; grid.cells];
    let strides: Vec<usize> = (0..d)
        .map(|i| grid.dims[i + 1..].iter().product::<usize>())
        .collect();
    for p in points.iter_points() {
        let mut lin_open = 0usize;
        let mut lin_closed = 0usize;
        for i in 0..d {
            let rank = grid.axes[i].binary_search(&p[i]).expect("point coordinate is a grid value");
            // contributes to open counts only above its own coordinate
            lin_open += (rank + 1) * strides[i];
            lin_closed += rank * strides[i];
        }
        open[lin_open] += 1;
        closed[lin_closed] += 1;
    }
    for axis in 0..d {
        prefix_sum_axis(&mut open, &grid.dims, axis);
        prefix_sum_axis(&mut closed, &grid.dims, axis);
    }
    (open, closed)
}

/// Odometer over grid cells in row-major order keeping the partial volume
/// products in f64.
struct Odometer<'a> {
    grid: &'a CornerGrid,
    idx: Vec<usize>,
    // prefix[j] = product of axis values 0..j at the current index
    prefix: Vec<f64>,
}

impl<'a> Odometer<'a> {
    fn new(grid: &'a CornerGrid) -> Self {
        let d = grid.dims.len();
        let mut o = Odometer { grid, idx: vec![0; d], prefix: vec![1.0; d + 1] };
        o.refill(0);
        o
    }

    fn refill(&mut self, from_axis: usize) {
        for j in from_axis..self.grid.dims.len() {
            self.prefix[j + 1] = self.prefix[j] * self.grid.axes_f64[j][self.idx[j]];
        }
    }

    fn volume(&self) -> f64 {
        self.prefix[self.grid.dims.len()]
    }

    /// Advance to the next cell; returns false after the last one.
    fn step(&mut self) -> bool {
        let d = self.grid.dims.len();
        for axis in (0..d).rev() {
            self.idx[axis] += 1;
            if self.idx[axis] < self.grid.dims[axis] {
                self.refill(axis);
                return true;
            }
            self.idx[axis] = 0;
        }
        false
    }
}

// Rigorous bound on the f64 error of one corner evaluation: coordinates and
// counts are unit-scale, so d+3 multiplications and subtractions at 1 ulp
// each stay far below 1e-12 for any d this module accepts. Candidates within
// this margin of the float maximum are re-evaluated exactly.
const PREFILTER_MARGIN: f64 = 1e-9;

/// Exact star discrepancy by corner enumeration. Refuses with a budget error
/// when the corner grid exceeds `budget` cells.
pub fn star_discrepancy_exact(points: &PointSet, budget: u64) -> Result<DiscrepancyResult> {
    require_points(points)?;
    if points.len() > u32::MAX as usize {
        return Err(Error::invalid("point count exceeds u32 count tables"));
    }
    let grid = build_grid(points, budget)?;
    let (open, closed) = count_tables(points, &grid);
    let n = points.len();
    let inv_n = 1.0 / n as f64;

    // float pass: locate the maximum up to PREFILTER_MARGIN
    let mut best_f64 = f64::NEG_INFINITY;
    let mut odo = Odometer::new(&grid);
    let mut lin = 0usize;
    loop {
        let vol = odo.volume();
        let c_val = closed[lin] as f64 * inv_n - vol;
        let o_val = vol - open[lin] as f64 * inv_n;
        let m = c_val.max(o_val);
        if m > best_f64 {
            best_f64 = m;
        }
        lin += 1;
        if !odo.step() {
            break;
        }
    }
    debug_assert_eq!(lin, grid.cells);

    // exact pass over near-maximal corners
    let threshold = best_f64 - PREFILTER_MARGIN;
    let mut best: Option<(Rational, Vec<usize>, Side)> = None;
    let mut odo = Odometer::new(&grid);
    let mut lin = 0usize;
    loop {
        let vol = odo.volume();
        let c_val = closed[lin] as f64 * inv_n - vol;
        let o_val = vol - open[lin] as f64 * inv_n;
        if c_val >= threshold || o_val >= threshold {
            let vol_exact = odo
                .idx
                .iter()
                .enumerate()
                .fold(Rational::one(), |acc, (i, &k)| acc * &grid.axes[i][k]);
            for (raw, side) in [
                (Rational::new((closed[lin] as i64).into(), (n as i64).into()) - &vol_exact, Side::ClosedLimit),
                (&vol_exact - Rational::new((open[lin] as i64).into(), (n as i64).into()), Side::Open),
            ] {
                let better = match &best {
                    None => true,
                    Some((bv, _, _)) => raw > *bv,
                };
                if better {
                    best = Some((raw, odo.idx.clone(), side));
                }
            }
        }
        lin += 1;
        if !odo.step() {
            break;
        }
    }
    let (value, idx, side) = best.expect("prefilter always keeps the maximum");
    let witness: Vec<Rational> = idx.iter().enumerate().map(|(i, &k)| grid.axes[i][k].clone()).collect();
    Ok(DiscrepancyResult { value, witness, side, n, d: points.dim() })
}

/// Exact corner-grid size for a point set, for budget decisions.
pub fn exact_grid_cells(points: &PointSet) -> u128 {
    let d = points.dim();
    let mut cells: u128 = 1;
    for i in 0..d {
        let mut vals: Vec<&Rational> = points.iter_points().map(|p| &p[i]).collect();
        vals.sort();
        vals.dedup();
        cells = cells.saturating_mul(vals.len() as u128 + 1);
    }
    cells
}

/// Star discrepancy of the row range lo..hi (0-based, half-open).
pub fn range_discrepancy(points: &PointSet, lo: usize, hi: usize, budget: u64) -> Result<DiscrepancyResult> {
    star_discrepancy_exact(&points.range(lo, hi)?, budget)
}

/// Rows whose 1-based index is congruent to `gamma` modulo 2^kappa, in
/// order. The class gamma = 0 selects indices 2^kappa, 2*2^kappa, ...
pub fn subsequence(points: &PointSet, kappa: u32, gamma: u64) -> Result<PointSet> {
    if kappa > 63 {
        return Err(Error::invalid(format!("kappa {kappa} too large, modulus must fit u64")));
    }
    let modulus = 1u64 << kappa;
    if gamma >= modulus {
        return Err(Error::invalid(format!("class {gamma} must be below modulus {modulus}")));
    }
    let rows: Vec<Vec<Rational>> = points
        .iter_points()
        .enumerate()
        .filter(|(i, _)| ((i + 1) as u64) % modulus == gamma)
        .map(|(_, p)| p.to_vec())
        .collect();
    PointSet::new(points.dim(), rows, points.mode(), points.seed())
}

/// Recompose a full-sequence discrepancy bound from a prefix value D_M and a
/// tail value D_{M,N}: (M*D_M + (N-M)*D_MN) / N.
pub fn compose_bound(m: usize, n: usize, d_m: &Rational, d_mn: &Rational) -> Result<Rational> {
    if m == 0 || m >= n {
        return Err(Error::invalid(format!("need 0 < M < N, got M={m}, N={n}")));
    }
    let rm = Rational::from_integer((m as i64).into());
    let rn = Rational::from_integer((n as i64).into());
    Ok((&rm * d_m + (&rn - &rm) * d_mn) / &rn)
}

/// Companion direction: bound the tail D_{M,N} by (N*D_N + M*D_M) / (N-M).
pub fn compose_bound_tail(m: usize, n: usize, d_n: &Rational, d_m: &Rational) -> Result<Rational> {
    if m == 0 || m >= n {
        return Err(Error::invalid(format!("need 0 < M < N, got M={m}, N={n}")));
    }
    let rm = Rational::from_integer((m as i64).into());
    let rn = Rational::from_integer((n as i64).into());
    Ok((&rn * d_n + &rm * d_m) / (&rn - &rm))
}
