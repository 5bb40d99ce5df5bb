//! Bracketing covers of the anchored-box family and the certified
//! star-discrepancy intervals they induce.
//!
//! A delta-bracketing cover is a finite set of brackets (v, w), v <= w
//! componentwise, such that every x in [0,1)^d satisfies v <= x <= w for some
//! bracket and every bracket has weight vol([0,w)) - vol([0,v)) <= delta.
//! Scanning the local discrepancy at all bracket corners then pins the star
//! discrepancy inside an interval of width delta.
//!
//! Product-form covers (all cells of per-axis interval lists) are stored by
//! their axis structure, so multi-million-bracket covers cost only their axis
//! tables; brackets materialize lazily.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::digits::rational_to_f64;
use crate::pointgen::{ceil_log2, PointSet};
use crate::{Error, Rational, Result};

/// Dyadic exponent factor for 1-based axis i: ceil(log2 i) + 1.
fn axis_exp(i: usize) -> u32 {
    ceil_log2(i) + 1
}

/// Corner-scan budget for certified intervals; sized for a few seconds of
/// streaming on one core.
pub const DEFAULT_CORNER_BUDGET: u64 = 400_000_000;

/// Exhaustive weight-scan limit inside validate_cover; above it the scan
/// strides deterministically and reports how many cells it checked.
const WEIGHT_SCAN_CAP: u128 = 200_000_000;

/// Cap on lattice points in the cover-property check.
const LATTICE_CAP: u128 = 2_000_000;

/// One bracket: anchored boxes [0,v) and [0,w) with v <= w componentwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bracket {
    pub v: Vec<Rational>,
    pub w: Vec<Rational>,
}

impl Bracket {
    pub fn new(v: Vec<Rational>, w: Vec<Rational>) -> Result<Self> {
        if v.is_empty() || v.len() != w.len() {
            return Err(Error::invalid("bracket corners need equal nonzero dimension"));
        }
        for (a, b) in v.iter().zip(&w) {
            if a.is_negative() || a > b || *b > Rational::one() {
                return Err(Error::invalid(format!(
                    "bracket corners must satisfy 0 <= {a} <= {b} <= 1"
                )));
            }
        }
        Ok(Bracket { v, w })
    }

    /// weight = vol([0,w)) - vol([0,v)), always >= 0
    pub fn weight(&self) -> Rational {
        let pv = self.v.iter().fold(Rational::one(), |acc, x| acc * x);
        let pw = self.w.iter().fold(Rational::one(), |acc, x| acc * x);
        pw - pv
    }

    pub fn contains(&self, x: &[Rational]) -> bool {
        x.len() == self.v.len()
            && self.v.iter().zip(x).all(|(a, b)| a <= b)
            && self.w.iter().zip(x).all(|(a, b)| a >= b)
    }
}

/// Per-axis interval (lo, hi) of a product-form cover.
type AxisPair = (Rational, Rational);

#[derive(Debug, Clone)]
enum CoverForm {
    /// Explicit bracket list.
    Explicit(Vec<Bracket>),
    /// Product form: the bracket set is the cross product of per-axis pairs.
    /// Each axis list is sorted with both endpoints nondecreasing.
    Product(Vec<Vec<AxisPair>>),
}

#[derive(Debug, Clone)]
pub struct BracketingCover {
    d: usize,
    delta: Rational,
    form: CoverForm,
}

impl BracketingCover {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn delta(&self) -> &Rational {
        &self.delta
    }

    /// Number of brackets (product of axis-list lengths in product form).
    pub fn count(&self) -> u128 {
        match &self.form {
            CoverForm::Explicit(list) => list.len() as u128,
            CoverForm::Product(axes) => axes
                .iter()
                .fold(1u128, |acc, a| acc.saturating_mul(a.len() as u128)),
        }
    }

    pub fn from_brackets(d: usize, delta: Rational, brackets: Vec<Bracket>) -> Result<Self> {
        if d == 0 || brackets.is_empty() {
            return Err(Error::invalid("cover needs d >= 1 and at least one bracket"));
        }
        if delta <= Rational::zero() || delta > Rational::one() {
            return Err(Error::invalid("delta must lie in (0,1]"));
        }
        for b in &brackets {
            if b.v.len() != d {
                return Err(Error::invalid("bracket dimension mismatch"));
            }
        }
        Ok(BracketingCover { d, delta, form: CoverForm::Explicit(brackets) })
    }

    /// Materialize the bracket list, refusing above `cap` brackets.
    pub fn materialize(&self, cap: u64) -> Result<Vec<Bracket>> {
        let count = self.count();
        if count > cap as u128 {
            return Err(Error::BudgetExceeded {
                needed: count,
                budget: cap as u128,
                hint: "cover is product-form; validate or snap it without materializing".into(),
            });
        }
        Ok(self.iter_brackets().collect())
    }

    pub fn iter_brackets(&self) -> Box<dyn Iterator<Item = Bracket> + '_> {
        match &self.form {
            CoverForm::Explicit(list) => Box::new(list.iter().cloned()),
            CoverForm::Product(axes) => Box::new(ProductIter::new(axes)),
        }
    }

    /// Exact membership test: is x bracketed by some (v, w)?
    pub fn covers_point(&self, x: &[Rational]) -> bool {
        if x.len() != self.d {
            return false;
        }
        match &self.form {
            CoverForm::Explicit(list) => list.iter().any(|b| b.contains(x)),
            CoverForm::Product(axes) => axes.iter().zip(x).all(|(pairs, xi)| {
                // endpoints are nondecreasing, so among pairs with lo <= x the
                // last one has the largest hi; it decides membership
                let k = pairs.partition_point(|(lo, _)| lo <= xi);
                k > 0 && pairs[k - 1].1 >= *xi
            }),
        }
    }
}

struct ProductIter<'a> {
    axes: &'a [Vec<AxisPair>],
    idx: Vec<usize>,
    done: bool,
}

impl<'a> ProductIter<'a> {
    fn new(axes: &'a [Vec<AxisPair>]) -> Self {
        ProductIter { axes, idx: vec![0; axes.len()], done: axes.iter().any(|a| a.is_empty()) }
    }
}

impl<'a> Iterator for ProductIter<'a> {
    type Item = Bracket;

    fn next(&mut self) -> Option<Bracket> {
        if self.done {
            return None;
        }
        let v = self.idx.iter().enumerate().map(|(i, &k)| self.axes[i][k].0.clone()).collect();
        let w = self.idx.iter().enumerate().map(|(i, &k)| self.axes[i][k].1.clone()).collect();
        let mut axis = self.axes.len();
        loop {
            if axis == 0 {
                self.done = true;
                break;
            }
            axis -= 1;
            self.idx[axis] += 1;
            if self.idx[axis] < self.axes[axis].len() {
                break;
            }
            self.idx[axis] = 0;
        }
        Some(Bracket { v, w })
    }
}

/// Affine product-grid cover: per axis the step is delta/d, so each cell's
/// weight telescopes to at most delta. For d = 1 this is the step-delta grid
/// with ceil(1/delta) brackets.
pub fn build_cover(d: usize, delta: &Rational) -> Result<BracketingCover> {
    if d == 0 {
        return Err(Error::invalid("cover dimension must be >= 1"));
    }
    if *delta <= Rational::zero() || *delta > Rational::one() {
        return Err(Error::invalid(format!("delta {delta} outside (0,1]")));
    }
    let step = delta / Rational::from_integer((d as i64).into());
    // m = ceil(1/step) cells per axis
    let m = (Rational::one() / &step).ceil().to_integer().to_u64().ok_or_else(|| {
        Error::invalid("delta too small: axis cell count exceeds u64")
    })?;
    let mut pairs: Vec<AxisPair> = Vec::with_capacity(m as usize);
    for j in 0..m {
        let lo = &step * Rational::from_integer(j.into());
        let hi_raw = &step * Rational::from_integer((j + 1).into());
        let hi = if hi_raw > Rational::one() { Rational::one() } else { hi_raw };
        pairs.push((lo, hi));
    }
    let axes = vec![pairs; d];
    Ok(BracketingCover { d, delta: delta.clone(), form: CoverForm::Product(axes) })
}

/// Largest multiple of 2^-t at or below x.
fn floor_dyadic(x: &Rational, t: u32) -> Rational {
    let scaled = x * Rational::from_integer(BigInt::one() << t);
    Rational::new(scaled.floor().to_integer(), BigInt::one() << t)
}

/// Smallest multiple of 2^-t at or above x.
fn ceil_dyadic(x: &Rational, t: u32) -> Rational {
    let scaled = x * Rational::from_integer(BigInt::one() << t);
    Rational::new(scaled.ceil().to_integer(), BigInt::one() << t)
}

/// Snap a cover at 2^-(h+2) onto coordinate-indexed dyadic grids, producing a
/// cover at 2^-h: lower corners floor to step 2^-(k_i (h+1)) and upper
/// corners ceil to step 2^-(k_i (h+2)), where k_i = ceil(log2 i) + 1 for the
/// 1-based axis i. The snapped bracket contains the original, so coverage is
/// inherited; the bracketwise map never increases the bracket count.
pub fn dyadic_snap_cover(cover: &BracketingCover, h: u32) -> Result<BracketingCover> {
    if h < 1 {
        return Err(Error::invalid("snap level h must be >= 1"));
    }
    let expected = Rational::new(BigInt::one(), BigInt::one() << (h + 2));
    if cover.delta != expected {
        return Err(Error::invalid(format!(
            "input cover is declared at {}, expected 2^-(h+2) = {expected}",
            cover.delta
        )));
    }
    // cheap honesty check on the input: exact weights, lattice coverage
    let report = validate_cover(cover, &expected, 500, 0);
    if !report.failures.is_empty() {
        return Err(Error::invalid("input is not a valid cover at 2^-(h+2)"));
    }
    let y_exp = |i: usize| axis_exp(i) * (h + 1);
    let z_exp = |i: usize| axis_exp(i) * (h + 2);
    let delta_out = Rational::new(BigInt::one(), BigInt::one() << h);
    let form = match &cover.form {
        CoverForm::Product(axes) => {
            let snapped: Vec<Vec<AxisPair>> = axes
                .iter()
                .enumerate()
                .map(|(i0, pairs)| {
                    let (ye, ze) = (y_exp(i0 + 1), z_exp(i0 + 1));
                    let mut out: Vec<AxisPair> = pairs
                        .iter()
                        .map(|(lo, hi)| (floor_dyadic(lo, ye), ceil_dyadic(hi, ze)))
                        .collect();
                    out.dedup();
                    out
                })
                .collect();
            CoverForm::Product(snapped)
        }
        CoverForm::Explicit(list) => {
            let mut out: Vec<Bracket> = list
                .iter()
                .map(|b| Bracket {
                    v: b.v.iter().enumerate().map(|(i0, x)| floor_dyadic(x, y_exp(i0 + 1))).collect(),
                    w: b.w.iter().enumerate().map(|(i0, x)| ceil_dyadic(x, z_exp(i0 + 1))).collect(),
                })
                .collect();
            out.dedup();
            CoverForm::Explicit(out)
        }
    };
    Ok(BracketingCover { d: cover.d, delta: delta_out, form })
}

/// Reference cardinality for a delta-cover: (1/2) (2e)^d (1/delta + 1)^d.
pub fn cover_cardinality_bound(d: usize, delta: &Rational) -> f64 {
    let inv = rational_to_f64(&(Rational::one() / delta));
    0.5 * (2.0 * std::f64::consts::E).powi(d as i32) * (inv + 1.0).powi(d as i32)
}

/// Cardinality form for snapped covers at level h: (1/2) (2e)^d (2^(h+2)+1)^d.
pub fn snap_cardinality_bound(d: usize, h: u32) -> f64 {
    0.5 * (2.0 * std::f64::consts::E).powi(d as i32)
        * ((2f64.powi(h as i32 + 2)) + 1.0).powi(d as i32)
}

/// Alternative cardinality form (sqrt 5)^((h+3) d); looser at small h, used
/// only as a recorded evaluator.
pub fn snap_cardinality_alt(d: usize, h: u32) -> f64 {
    5f64.sqrt().powi(((h + 3) as usize * d) as i32)
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind")]
pub enum CoverFailure {
    WeightViolation {
        bracket: u128,
        weight: String,
    },
    Uncovered {
        point: Vec<String>,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverReport {
    pub count: u128,
    pub max_weight: String,
    #[serde(skip)]
    pub max_weight_exact: Rational,
    pub bound_met: bool,
    pub failures: Vec<CoverFailure>,
    /// cells whose weights were checked exactly (== count when exhaustive)
    pub cells_checked: u128,
    pub points_checked: u128,
}

const MAX_RECORDED_FAILURES: usize = 32;

/// Integer fast path for product covers: per-axis corner numerators over a
/// common power-of-small denominator, so a cell weight comparison is two
/// u128 products.
struct AxisInts {
    lo: Vec<Vec<u128>>,
    hi: Vec<Vec<u128>>,
    denom: Vec<u128>,
}

fn axis_integers(axes: &[Vec<AxisPair>]) -> Option<AxisInts> {
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    let mut denom = Vec::new();
    let mut total: u128 = 1;
    for pairs in axes {
        let mut dn = BigInt::one();
        for (a, b) in pairs {
            dn = dn.lcm(a.denom());
            dn = dn.lcm(b.denom());
        }
        let d_u = dn.to_u128()?;
        total = total.checked_mul(d_u)?;
        let scale = |x: &Rational| -> Option<u128> {
            let v = x * Rational::from_integer(dn.clone());
            v.to_integer().to_u128()
        };
        lo.push(pairs.iter().map(|(a, _)| scale(a)).collect::<Option<Vec<_>>>()?);
        hi.push(pairs.iter().map(|(_, b)| scale(b)).collect::<Option<Vec<_>>>()?);
        denom.push(d_u);
    }
    // products of per-axis numerators stay below total <= u128 max
    Some(AxisInts { lo, hi, denom })
}

/// Validate a cover against a target delta: exact bracket weights plus the
/// cover property on a deterministic lattice and seeded random points.
pub fn validate_cover(
    cover: &BracketingCover,
    delta: &Rational,
    samples: u64,
    seed: u64,
) -> CoverReport {
    let count = cover.count();
    let mut failures: Vec<CoverFailure> = Vec::new();
    let mut max_weight = Rational::zero();
    let mut cells_checked: u128 = 0;

    match &cover.form {
        CoverForm::Explicit(list) => {
            for (i, b) in list.iter().enumerate() {
                let w = b.weight();
                if w > *delta && failures.len() < MAX_RECORDED_FAILURES {
                    failures.push(CoverFailure::WeightViolation {
                        bracket: i as u128,
                        weight: w.to_string(),
                    });
                }
                if w > max_weight {
                    max_weight = w;
                }
                cells_checked += 1;
            }
        }
        CoverForm::Product(axes) => {
            let stride = if count > WEIGHT_SCAN_CAP {
                (count / WEIGHT_SCAN_CAP + 1) as usize
            } else {
                1
            };
            match axis_integers(axes) {
                Some(ints) => {
                    let total_denom: u128 = ints.denom.iter().product();
                    // compare b_delta * (prod_hi - prod_lo) <= a_delta * total_denom
                    let a_delta = delta.numer().to_u128();
                    let b_delta = delta.denom().to_u128();
                    let mut best_num: u128 = 0;
                    let mut scan_idx: u128 = 0;
                    let dims: Vec<usize> = axes.iter().map(|a| a.len()).collect();
                    let mut idx = vec![0usize; axes.len()];
                    'outer: loop {
                        let keep = stride == 1 || scan_idx % stride as u128 == 0;
                        if keep {
                            let mut plo: u128 = 1;
                            let mut phi: u128 = 1;
                            for (i, &k) in idx.iter().enumerate() {
                                plo *= ints.lo[i][k];
                                phi *= ints.hi[i][k];
                            }
                            let wnum = phi - plo;
                            let ok = match (a_delta, b_delta) {
                                (Some(a), Some(b)) => b
                                    .checked_mul(wnum)
                                    .zip(a.checked_mul(total_denom))
                                    .map(|(l, r)| l <= r),
                                _ => None,
                            };
                            let ok = ok.unwrap_or_else(|| {
                                Rational::new(BigInt::from(wnum), BigInt::from(total_denom))
                                    <= *delta
                            });
                            if !ok && failures.len() < MAX_RECORDED_FAILURES {
                                failures.push(CoverFailure::WeightViolation {
                                    bracket: scan_idx,
                                    weight: Rational::new(
                                        BigInt::from(wnum),
                                        BigInt::from(total_denom),
                                    )
                                    .to_string(),
                                });
                            }
                            if wnum > best_num {
                                best_num = wnum;
                            }
                            cells_checked += 1;
                        }
                        scan_idx += 1;
                        let mut axis = axes.len();
                        loop {
                            if axis == 0 {
                                break 'outer;
                            }
                            axis -= 1;
                            idx[axis] += 1;
                            if idx[axis] < dims[axis] {
                                break;
                            }
                            idx[axis] = 0;
                        }
                    }
                    max_weight = Rational::new(BigInt::from(best_num), BigInt::from(total_denom));
                }
                None => {
                    // huge denominators: fall back to rational arithmetic
                    for (i, b) in cover.iter_brackets().enumerate() {
                        if stride > 1 && i % stride != 0 {
                            continue;
                        }
                        let w = b.weight();
                        if w > *delta && failures.len() < MAX_RECORDED_FAILURES {
                            failures.push(CoverFailure::WeightViolation {
                                bracket: i as u128,
                                weight: w.to_string(),
                            });
                        }
                        if w > max_weight {
                            max_weight = w;
                        }
                        cells_checked += 1;
                    }
                }
            }
        }
    }

    // cover property: deterministic lattice of ceil(1/delta)+1 values per
    // axis, all inside [0,1), then seeded random points
    let mut points_checked: u128 = 0;
    let inv = Rational::one() / delta;
    let lat = inv.ceil().to_integer().to_u64().unwrap_or(u64::MAX).saturating_add(1);
    let lattice_total = (0..cover.d).fold(1u128, |acc, _| acc.saturating_mul(lat as u128));
    if lattice_total <= LATTICE_CAP {
        let denom = BigInt::from(lat);
        let mut idx = vec![0u64; cover.d];
        'lat: loop {
            let point: Vec<Rational> = idx
                .iter()
                .map(|&k| Rational::new(BigInt::from(k), denom.clone()))
                .collect();
            points_checked += 1;
            if !cover.covers_point(&point) && failures.len() < MAX_RECORDED_FAILURES {
                failures.push(CoverFailure::Uncovered {
                    point: point.iter().map(|x| x.to_string()).collect(),
                });
            }
            let mut axis = cover.d;
            loop {
                if axis == 0 {
                    break 'lat;
                }
                axis -= 1;
                idx[axis] += 1;
                if idx[axis] < lat {
                    break;
                }
                idx[axis] = 0;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale: BigInt = BigInt::one() << 32;
    for _ in 0..samples {
        let point: Vec<Rational> = (0..cover.d)
            .map(|_| Rational::new(BigInt::from(rng.gen::<u32>()), scale.clone()))
            .collect();
        points_checked += 1;
        if !cover.covers_point(&point) && failures.len() < MAX_RECORDED_FAILURES {
            failures.push(CoverFailure::Uncovered {
                point: point.iter().map(|x| x.to_string()).collect(),
            });
        }
    }

    CoverReport {
        count,
        max_weight: max_weight.to_string(),
        max_weight_exact: max_weight,
        bound_met: (count as f64) <= cover_cardinality_bound(cover.d, delta),
        failures,
        cells_checked,
        points_checked,
    }
}

/// Certified enclosure of the star discrepancy.
#[derive(Debug, Clone)]
pub struct DiscrepancyInterval {
    pub lo: Rational,
    pub hi: Rational,
    pub delta: Rational,
    /// grid corner attaining lo
    pub witness: Vec<Rational>,
    pub corners: u128,
}

impl DiscrepancyInterval {
    pub fn lo_f64(&self) -> f64 {
        rational_to_f64(&self.lo)
    }

    pub fn hi_f64(&self) -> f64 {
        rational_to_f64(&self.hi)
    }
}

/// Signed word the corner scan runs in. The scan is exact in any width that
/// holds n * q^d, so the caller picks the narrowest sufficient one.
trait ScanWord: Copy + Ord {
    fn from_u128_lossless(v: u128) -> Self;
    fn from_u32(v: u32) -> Self;
    fn neg_one() -> Self;
    fn mul(self, rhs: Self) -> Self;
    /// |self - rhs|, exact because both operands sit below n * q^d
    fn diff_abs(self, rhs: Self) -> Self;
    fn widen(self) -> i128;
}

impl ScanWord for i64 {
    fn from_u128_lossless(v: u128) -> Self {
        debug_assert!(v <= i64::MAX as u128);
        v as i64
    }
    fn from_u32(v: u32) -> Self {
        v as i64
    }
    fn neg_one() -> Self {
        -1
    }
    fn mul(self, rhs: Self) -> Self {
        self * rhs
    }
    fn diff_abs(self, rhs: Self) -> Self {
        (self - rhs).abs()
    }
    fn widen(self) -> i128 {
        self as i128
    }
}

impl ScanWord for i128 {
    fn from_u128_lossless(v: u128) -> Self {
        debug_assert!(v <= i128::MAX as u128);
        v as i128
    }
    fn from_u32(v: u32) -> Self {
        v as i128
    }
    fn neg_one() -> Self {
        -1
    }
    fn mul(self, rhs: Self) -> Self {
        self * rhs
    }
    fn diff_abs(self, rhs: Self) -> Self {
        (self - rhs).abs()
    }
    fn widen(self) -> i128 {
        self as i128
    }
}

struct ScanInput<'a> {
    /// rest-grid indices of the points in each axis-0 rank slab
    bucket0: &'a [Vec<usize>],
    rest_dims: &'a [usize],
    corners_per_axis: usize,
    d: usize,
    /// corner coordinate numerators over the common denominator q
    coord_num: &'a [u128],
}

/// Exact max of |count * q^d - n * volume_numerator| over all grid corners,
/// streamed one axis-0 slab at a time: memory is one (d-1)-dimensional count
/// slice, never the full corner grid. Returns the scaled max and its corner.
fn corner_scan<T: ScanWord>(input: &ScanInput<'_>, k_scale: T, n: T) -> (i128, Vec<usize>) {
    let d = input.d;
    let corners_per_axis = input.corners_per_axis;
    let rest_size: usize = input.rest_dims.iter().product::<usize>().max(1);
    let coord: Vec<T> = input
        .coord_num
        .iter()
        .map(|&v| T::from_u128_lossless(v))
        .collect();
    let mut hist = vec![0u32; rest_size];
    let mut work = vec![0u32; rest_size];
    let mut best = T::neg_one();
    let mut best_corner: Vec<usize> = vec![0; d];
    // volume numerator products over axes 1..d-1 for the current rest index,
    // rebuilt per slab via an odometer
    for j0 in 0..corners_per_axis {
        for &flat in &input.bucket0[j0] {
            hist[flat] += 1;
        }
        work.copy_from_slice(&hist);
        for axis in 0..input.rest_dims.len() {
            crate::discrepancy::prefix_sum_axis(&mut work, input.rest_dims, axis);
        }
        let c0 = coord[j0];
        if d == 1 {
            let val = T::from_u32(work[0]).mul(k_scale).diff_abs(n.mul(c0));
            if val > best {
                best = val;
                best_corner = vec![j0];
            }
            continue;
        }
        let mut idx = vec![0usize; d - 1];
        let mut prefix: Vec<T> = vec![c0; d];
        for i in 0..d - 1 {
            prefix[i + 1] = prefix[i].mul(coord[idx[i]]);
        }
        let mut lin = 0usize;
        loop {
            let val = T::from_u32(work[lin]).mul(k_scale).diff_abs(n.mul(prefix[d - 1]));
            if val > best {
                best = val;
                best_corner.clear();
                best_corner.push(j0);
                best_corner.extend_from_slice(&idx);
            }
            lin += 1;
            let mut axis = d - 1;
            loop {
                if axis == 0 {
                    break;
                }
                axis -= 1;
                idx[axis] += 1;
                if idx[axis] < corners_per_axis {
                    for i in axis..d - 1 {
                        prefix[i + 1] = prefix[i].mul(coord[idx[i]]);
                    }
                    break;
                }
                idx[axis] = 0;
            }
            if lin == rest_size {
                break;
            }
        }
    }
    (best.widen(), best_corner)
}

/// Certified interval [lo, lo + delta] containing D*(P): lo is the exact
/// maximum of |local discrepancy| over the corners of the step-(delta/d)
/// product grid, and every anchored box is bracketed by adjacent corners
/// whose volumes differ by at most delta.
pub fn cover_discrepancy_interval(
    points: &PointSet,
    delta: &Rational,
    budget: u64,
) -> Result<DiscrepancyInterval> {
    if points.is_empty() {
        return Err(Error::invalid("point set is empty"));
    }
    if *delta <= Rational::zero() || *delta > Rational::one() {
        return Err(Error::invalid(format!("delta {delta} outside (0,1]")));
    }
    let d = points.dim();
    let n = points.len();
    if n > u32::MAX as usize {
        return Err(Error::invalid("point count exceeds u32 count slabs"));
    }
    let step = delta / Rational::from_integer((d as i64).into());
    let m = (Rational::one() / &step)
        .ceil()
        .to_integer()
        .to_u64()
        .and_then(|v| usize::try_from(v).ok())
        .ok_or_else(|| Error::invalid("delta too small: axis corner count exceeds usize"))?;
    let corners_per_axis = m + 1;
    let corners = (0..d).fold(1u128, |acc, _| acc.saturating_mul(corners_per_axis as u128));
    if corners > budget as u128 {
        return Err(Error::BudgetExceeded {
            needed: corners,
            budget: budget as u128,
            hint: "coarsen delta or raise the corner budget".into(),
        });
    }

    // corner numerators over denom q: coordinate j is min(j*a, q)/q
    let a_big = step.numer().clone();
    let q_big = step.denom().clone();
    let (a_u, q_u) = match (a_big.to_u128(), q_big.to_u128()) {
        (Some(a), Some(q)) => (a, q),
        _ => return Err(Error::invalid("delta numerator or denominator exceeds u128")),
    };
    let coord_num: Vec<u128> = (0..=m as u128).map(|j| (j * a_u).min(q_u)).collect();
    // exact value scale: |local| * n * q^d must fit i128 with headroom
    let mut k_scale: i128 = 1;
    for _ in 0..d {
        k_scale = k_scale
            .checked_mul(q_u as i128)
            .ok_or_else(|| Error::invalid("corner denominator power exceeds i128"))?;
    }
    let n_i = n as i128;
    if k_scale.checked_mul(n_i).is_none() {
        return Err(Error::invalid("corner value scale exceeds i128"));
    }

    // strict rank per axis: smallest j with x < j*step, i.e. floor(x/step)+1
    let mut bucket0: Vec<Vec<usize>> = vec![Vec::new(); corners_per_axis];
    let rest_dims: Vec<usize> = vec![corners_per_axis; d.saturating_sub(1)];
    let rest_strides: Vec<usize> = (0..rest_dims.len())
        .map(|i| rest_dims[i + 1..].iter().product::<usize>())
        .collect();
    for p in points.iter_points() {
        let mut ranks = Vec::with_capacity(d);
        for x in p {
            let r = (x / &step).floor().to_integer().to_usize().ok_or_else(|| {
                Error::invalid("point rank exceeds usize")
            })? + 1;
            debug_assert!(r <= m);
            ranks.push(r);
        }
        let flat_rest: usize = ranks[1..]
            .iter()
            .zip(&rest_strides)
            .map(|(&r, &s)| r * s)
            .sum();
        bucket0[ranks[0]].push(flat_rest);
    }

    // every scaled value is bounded by n * q^d, so narrower machine words
    // are exact whenever that product fits them
    let scan = ScanInput {
        bucket0: &bucket0,
        rest_dims: &rest_dims,
        corners_per_axis,
        d,
        coord_num: &coord_num,
    };
    let (best, best_corner) = if n_i.checked_mul(k_scale).is_some_and(|v| v <= i64::MAX as i128) {
        corner_scan::<i64>(&scan, k_scale as i64, n_i as i64)
    } else {
        corner_scan::<i128>(&scan, k_scale, n_i)
    };

    let denom = BigInt::from(n) * BigInt::from(k_scale);
    let lo = Rational::new(BigInt::from(best), denom);
    let hi = &lo + delta;
    let witness = best_corner
        .iter()
        .map(|&j| Rational::new(BigInt::from(coord_num[j]), BigInt::from(q_u)))
        .collect();
    Ok(DiscrepancyInterval { lo, hi, delta: delta.clone(), witness, corners })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrepancy::{star_discrepancy_exact, DEFAULT_CELL_BUDGET};
    use crate::pointgen::{halton_stream, randomized_halton};
    use crate::rational;

    #[test]
    fn affine_cover_1d_quarters() {
        let c = build_cover(1, &rational(1, 4)).unwrap();
        assert_eq!(c.count(), 4);
        let bs = c.materialize(100).unwrap();
        for (k, b) in bs.iter().enumerate() {
            assert_eq!(b.v[0], rational(k as i64, 4));
            assert_eq!(b.w[0], rational(k as i64 + 1, 4));
            assert_eq!(b.weight(), rational(1, 4));
        }
        // count stays below (1/2)(2e)(1/delta + 1) ~ 13.59
        assert!((c.count() as f64) <= cover_cardinality_bound(1, &rational(1, 4)));
        let report = validate_cover(&c, &rational(1, 4), 1000, 7);
        assert!(report.failures.is_empty());
        assert!(report.bound_met);
    }

    #[test]
    fn whole_space_cover() {
        let c = build_cover(1, &rational(1, 1)).unwrap();
        assert_eq!(c.count(), 1);
        let bs = c.materialize(10).unwrap();
        assert_eq!(bs[0].v[0], rational(0, 1));
        assert_eq!(bs[0].w[0], rational(1, 1));
    }

    #[test]
    fn affine_cover_2d_weights_and_coverage() {
        let c = build_cover(2, &rational(1, 2)).unwrap();
        assert_eq!(c.count(), 16);
        let report = validate_cover(&c, &rational(1, 2), 100_000, 3);
        assert!(report.failures.is_empty());
        // top cell attains the maximum: 1 - (3/4)^2
        assert_eq!(report.max_weight_exact, rational(7, 16));
        assert_eq!(report.cells_checked, 16);
        // halving delta must flag the heavy cells
        let halved = validate_cover(&c, &rational(1, 4), 100, 3);
        assert!(halved
            .failures
            .iter()
            .any(|f| matches!(f, CoverFailure::WeightViolation { .. })));
    }

    #[test]
    fn deleted_bracket_is_caught() {
        let full = build_cover(1, &rational(1, 4)).unwrap();
        let mut bs = full.materialize(10).unwrap();
        bs.remove(2); // hole over (1/2, 3/4)
        let holey = BracketingCover::from_brackets(1, rational(1, 4), bs).unwrap();
        let report = validate_cover(&holey, &rational(1, 4), 1000, 11);
        assert!(report
            .failures
            .iter()
            .any(|f| matches!(f, CoverFailure::Uncovered { .. })));
    }

    #[test]
    fn snap_example_point_four() {
        // valid 1-d cover at 2^-3 holding the bracket (3/10, 2/5)
        let mut bs: Vec<Bracket> = (0..8)
            .filter(|&k| k != 2 && k != 3)
            .map(|k| Bracket::new(vec![rational(k, 8)], vec![rational(k + 1, 8)]).unwrap())
            .collect();
        bs.push(Bracket::new(vec![rational(1, 4)], vec![rational(3, 10)]).unwrap());
        bs.push(Bracket::new(vec![rational(3, 10)], vec![rational(2, 5)]).unwrap());
        bs.push(Bracket::new(vec![rational(2, 5)], vec![rational(1, 2)]).unwrap());
        let cover = BracketingCover::from_brackets(1, rational(1, 8), bs).unwrap();
        let snapped = dyadic_snap_cover(&cover, 1).unwrap();
        assert_eq!(snapped.delta(), &rational(1, 2));
        // (0.3, 0.4) snaps to (1/4, 1/2): floor on step 1/4, ceil on step 1/8
        let hit = snapped
            .iter_brackets()
            .any(|b| b.v[0] == rational(1, 4) && b.w[0] == rational(1, 2));
        assert!(hit);
        assert!(snapped.count() <= cover.count());
        let report = validate_cover(&snapped, &rational(1, 2), 2000, 5);
        assert!(report.failures.is_empty());
    }

    #[test]
    fn snap_fixed_points_on_grid() {
        // uniform eighths cover: lower corners on the 1/4 grid stay put
        let c = build_cover(1, &rational(1, 8)).unwrap();
        let snapped = dyadic_snap_cover(&c, 1).unwrap();
        let bs: Vec<Bracket> = snapped.iter_brackets().collect();
        assert!(bs
            .iter()
            .any(|b| b.v[0] == rational(1, 4) && b.w[0] == rational(3, 8)));
        for b in &bs {
            assert!(b.weight() <= rational(1, 2));
        }
    }

    #[test]
    fn snap_product_cover_2d() {
        // h = 2: input at 2^-4, output at 2^-2
        let c = build_cover(2, &rational(1, 16)).unwrap();
        let snapped = dyadic_snap_cover(&c, 2).unwrap();
        assert!(snapped.count() <= c.count());
        let report = validate_cover(&snapped, &rational(1, 4), 100_000, 9);
        assert!(report.failures.is_empty(), "{:?}", report.failures);
        // denominator discipline: axis i corners live on 2^-(k_i (h+2))
        for b in snapped.iter_brackets().take(500) {
            for (i0, (v, w)) in b.v.iter().zip(&b.w).enumerate() {
                let t = axis_exp(i0 + 1) * 4;
                let scale = Rational::from_integer(BigInt::one() << t);
                assert!((v * &scale).is_integer());
                assert!((w * &scale).is_integer());
            }
        }
    }

    #[test]
    fn snap_rejects_wrong_delta() {
        let c = build_cover(1, &rational(1, 4)).unwrap();
        assert!(dyadic_snap_cover(&c, 1).is_err()); // needs 2^-3
        let bad = BracketingCover::from_brackets(
            1,
            rational(1, 8),
            vec![Bracket::new(vec![rational(0, 1)], vec![rational(1, 8)]).unwrap()],
        )
        .unwrap();
        // weights fine but nowhere near covering [0,1)
        assert!(dyadic_snap_cover(&bad, 1).is_err());
    }

    #[test]
    fn interval_contains_exact_value() {
        let p = halton_stream(&[3, 5], None, 256).unwrap();
        let exact = star_discrepancy_exact(&p, DEFAULT_CELL_BUDGET).unwrap().value;
        for k in [4u32, 5] {
            let delta = Rational::new(BigInt::one(), BigInt::one() << k);
            let iv = cover_discrepancy_interval(&p, &delta, DEFAULT_CORNER_BUDGET).unwrap();
            assert!(iv.lo <= exact, "lo must lower-bound D*");
            assert!(exact <= iv.hi, "hi must upper-bound D*");
            assert_eq!(&iv.hi - &iv.lo, delta, "width is exactly delta");
        }
    }

    #[test]
    fn interval_trivial_delta_one() {
        let p = halton_stream(&[2], None, 10).unwrap();
        let iv = cover_discrepancy_interval(&p, &rational(1, 1), u64::MAX).unwrap();
        let exact = star_discrepancy_exact(&p, DEFAULT_CELL_BUDGET).unwrap().value;
        assert!(iv.lo <= exact && exact <= iv.hi);
        assert_eq!(&iv.hi - &iv.lo, rational(1, 1));
    }

    #[test]
    fn interval_random_1d_brackets_formula() {
        for seed in 0..10u64 {
            let p = randomized_halton(1, 40, seed, 32).unwrap();
            let exact = star_discrepancy_exact(&p, DEFAULT_CELL_BUDGET).unwrap().value;
            let iv = cover_discrepancy_interval(&p, &rational(1, 64), DEFAULT_CORNER_BUDGET)
                .unwrap();
            assert!(iv.lo <= exact && exact <= iv.hi, "seed {seed}");
        }
    }

    #[test]
    fn interval_witness_reproduces_lo() {
        let p = halton_stream(&[3, 5], None, 100).unwrap();
        let iv = cover_discrepancy_interval(&p, &rational(1, 32), DEFAULT_CORNER_BUDGET).unwrap();
        // witness corner is a realized anchored box when all coords positive
        let all_positive = iv.witness.iter().all(|c| *c > Rational::zero());
        assert!(all_positive);
        let beta = crate::discrepancy::AnchoredBox::new(iv.witness.clone()).unwrap();
        let local = crate::discrepancy::local_discrepancy(&p, &beta).unwrap();
        assert_eq!(local.abs(), iv.lo);
    }

    #[test]
    fn interval_budget_refusal() {
        let p = randomized_halton(3, 50, 1, 32).unwrap();
        match cover_discrepancy_interval(&p, &rational(1, 128), 1000) {
            Err(Error::BudgetExceeded { .. }) => {}
            other => panic!("expected budget refusal, got {other:?}"),
        }
    }

    #[test]
    fn cardinality_evaluators() {
        assert!((cover_cardinality_bound(1, &rational(1, 4)) - 13.591).abs() < 0.01);
        // 5^4 = 625 against (1/2)(2e)^2 * 81 ~ 1197: the root-5 form is
        // tighter at small h and overtakes near h = 8
        assert!((snap_cardinality_alt(2, 1) - 625.0).abs() < 1e-9);
        assert!(snap_cardinality_alt(2, 1) < snap_cardinality_bound(2, 1));
        assert!(snap_cardinality_alt(2, 8) > snap_cardinality_bound(2, 8));
    }

    #[test]
    fn materialize_cap_refusal() {
        let c = build_cover(3, &rational(1, 64)).unwrap();
        assert!(c.materialize(1000).is_err());
    }
}
