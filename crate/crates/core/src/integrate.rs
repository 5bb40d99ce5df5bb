//! QMC integration with certified error bounds.
//!
//! The certificate is the variation-times-discrepancy inequality: for a
//! function of bounded anchored variation V and a point set with star
//! discrepancy D*, the sample mean is within V * D* of the integral. The
//! built-in suite consists of functions whose integrals and variations are
//! known in closed form, so the inequality is checkable exactly.

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::bounds::BoundReport;
use crate::digits::rational_to_f64;
use crate::discrepancy::AnchoredBox;
use crate::pointgen::PointSet;
use crate::{rational, Error, Rational, Result};

type ExactFn = fn(&[Rational]) -> Rational;
type ApproxFn = fn(&[f64]) -> f64;

#[derive(Clone)]
enum Kind {
    Const(Rational),
    Coordinate(usize),
    Product,
    BoxIndicator(AnchoredBox),
    Custom { exact: ExactFn, approx: ApproxFn },
}

/// An integrand with known exact integral and, when available, a known
/// anchored (Hardy-Krause style) variation.
#[derive(Clone)]
pub struct TestFunction {
    name: String,
    d: usize,
    kind: Kind,
    integral: Rational,
    vhk: Option<Rational>,
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestFunction")
            .field("name", &self.name)
            .field("d", &self.d)
            .field("integral", &self.integral)
            .field("vhk", &self.vhk)
            .finish()
    }
}

impl TestFunction {
    pub fn constant(d: usize, c: Rational) -> Self {
        TestFunction {
            name: format!("const-{c}"),
            d,
            kind: Kind::Const(c.clone()),
            integral: c,
            vhk: Some(Rational::zero()),
        }
    }

    /// Projection onto one axis (0-based).
    pub fn coordinate(d: usize, axis: usize) -> Result<Self> {
        if axis >= d {
            return Err(Error::invalid(format!("axis {axis} out of range for d = {d}")));
        }
        Ok(TestFunction {
            name: format!("coord-{}", axis + 1),
            d,
            kind: Kind::Coordinate(axis),
            integral: rational(1, 2),
            vhk: Some(Rational::one()),
        })
    }

    /// Product of all coordinates. Variation by the product identity
    /// (1 + 1)^d - 1: each factor contributes variation 1 per axis.
    pub fn product(d: usize) -> Self {
        assert!(d >= 1 && d < 64);
        let two = Rational::from_integer(2.into());
        let mut pow = Rational::one();
        for _ in 0..d {
            pow *= &two;
        }
        TestFunction {
            name: "product".into(),
            d,
            kind: Kind::Product,
            integral: Rational::one() / pow.clone(),
            vhk: Some(pow - Rational::one()),
        }
    }

    /// Indicator of the anchored box [0, beta). Every face that fixes a
    /// coordinate at 1 is identically zero (beta <= 1), and the full
    /// alternating sum has a single unit jump at the corner, so the anchored
    /// variation is 1 in every dimension.
    pub fn box_indicator(beta: AnchoredBox) -> Self {
        let upper: Vec<String> = beta.upper().iter().map(|b| b.to_string()).collect();
        TestFunction {
            name: format!("box-[{}]", upper.join(",")),
            d: beta.dim(),
            kind: Kind::BoxIndicator(beta.clone()),
            integral: beta.volume(),
            vhk: Some(Rational::one()),
        }
    }

    /// A caller-supplied integrand. The variation certificate is optional;
    /// without it only plain integration is available.
    pub fn custom(
        name: impl Into<String>,
        d: usize,
        exact: ExactFn,
        approx: ApproxFn,
        integral: Rational,
        vhk: Option<Rational>,
    ) -> Self {
        TestFunction {
            name: name.into(),
            d,
            kind: Kind::Custom { exact, approx },
            integral,
            vhk,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn exact_integral(&self) -> &Rational {
        &self.integral
    }

    pub fn vhk(&self) -> Option<&Rational> {
        self.vhk.as_ref()
    }

    pub fn eval(&self, x: &[Rational]) -> Rational {
        debug_assert_eq!(x.len(), self.d);
        match &self.kind {
            Kind::Const(c) => c.clone(),
            Kind::Coordinate(i) => x[*i].clone(),
            Kind::Product => {
                let mut p = Rational::one();
                for xi in x {
                    p *= xi;
                }
                p
            }
            Kind::BoxIndicator(beta) => {
                let inside = x.iter().zip(beta.upper()).all(|(xi, b)| xi < b);
                if inside {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            }
            Kind::Custom { exact, .. } => exact(x),
        }
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.d);
        match &self.kind {
            Kind::Const(c) => rational_to_f64(c),
            Kind::Coordinate(i) => x[*i],
            Kind::Product => x.iter().product(),
            Kind::BoxIndicator(beta) => {
                let inside = x
                    .iter()
                    .zip(beta.upper())
                    .all(|(xi, b)| *xi < rational_to_f64(b));
                if inside {
                    1.0
                } else {
                    0.0
                }
            }
            Kind::Custom { approx, .. } => approx(x),
        }
    }
}

/// The built-in suite: functions with closed-form integrals and variations.
pub fn builtin_suite(d: usize) -> Vec<TestFunction> {
    assert!((1..=8).contains(&d));
    let mut suite = vec![
        TestFunction::constant(d, Rational::one()),
        TestFunction::constant(d, rational(3, 7)),
        TestFunction::coordinate(d, 0).expect("axis 0 valid"),
        TestFunction::product(d),
    ];
    if d >= 2 {
        suite.insert(3, TestFunction::coordinate(d, d - 1).expect("last axis valid"));
    }
    let halves = AnchoredBox::new(vec![rational(1, 2); d]).expect("valid box");
    suite.push(TestFunction::box_indicator(halves));
    let mixed: Vec<Rational> = (0..d)
        .map(|j| match j % 3 {
            0 => rational(2, 3),
            1 => rational(1, 2),
            _ => rational(3, 4),
        })
        .collect();
    suite.push(TestFunction::box_indicator(
        AnchoredBox::new(mixed).expect("valid box"),
    ));
    suite
}

/// Look up a built-in suite entry by name prefix, for the CLI.
pub fn suite_function(d: usize, name: &str) -> Result<TestFunction> {
    builtin_suite(d)
        .into_iter()
        .find(|f| f.name() == name || f.name().starts_with(name))
        .ok_or_else(|| {
            let names: Vec<String> =
                builtin_suite(d).iter().map(|f| f.name().to_string()).collect();
            Error::invalid(format!("unknown function {name}; built-ins: {}", names.join(", ")))
        })
}

/// Exact sample mean (1/N) sum f(x_n) in rational arithmetic.
pub fn qmc_mean_exact(f: &TestFunction, p: &PointSet) -> Result<Rational> {
    if p.dim() != f.dim() {
        return Err(Error::invalid(format!(
            "function dimension {} != point set dimension {}",
            f.dim(),
            p.dim()
        )));
    }
    if p.is_empty() {
        return Err(Error::invalid("need at least one point"));
    }
    let mut sum = Rational::zero();
    for x in p.iter_points() {
        sum += f.eval(x);
    }
    Ok(sum / Rational::from_integer(p.len().into()))
}

/// Sample mean as f64; exact rational accumulation under the hood.
pub fn qmc_integrate(f: &TestFunction, p: &PointSet) -> Result<f64> {
    Ok(rational_to_f64(&qmc_mean_exact(f, p)?))
}

/// Certified integration error: |mean - integral| <= dstar * vhk, checked
/// in exact arithmetic. `dstar` must be a valid upper bound on the star
/// discrepancy of `p` (exact value or a cover-interval upper end).
pub fn kh_certificate(f: &TestFunction, p: &PointSet, dstar: &Rational) -> Result<BoundReport> {
    let vhk = f
        .vhk()
        .ok_or_else(|| Error::invalid(format!("function {} has no variation certificate", f.name())))?;
    if dstar < &Rational::zero() || dstar > &Rational::one() {
        return Err(Error::invalid("dstar must lie in [0, 1]"));
    }
    let mean = qmc_mean_exact(f, p)?;
    let observed = (mean - f.exact_integral()).abs();
    let bound = dstar * vhk;
    let mut report = BoundReport::checked(
        &format!("kh-{}", f.name()),
        &[
            ("d", p.dim() as f64),
            ("n", p.len() as f64),
            ("dstar", rational_to_f64(dstar)),
            ("vhk", rational_to_f64(vhk)),
        ],
        rational_to_f64(&bound),
        rational_to_f64(&observed),
    );
    // float rounding must not decide the verdict
    report.pass = Some(observed <= bound);
    Ok(report)
}

/// Serializable summary of one integration run, for the CLI.
#[derive(Debug, Clone, Serialize)]
pub struct IntegrationReport {
    pub function: String,
    pub d: usize,
    pub n: usize,
    pub estimate: f64,
    pub exact_integral: f64,
    pub abs_error: f64,
    pub dstar: Option<f64>,
    pub kh_bound: Option<f64>,
    pub kh_pass: Option<bool>,
}

/// Deterministic separable midpoint quadrature with m nodes per axis.
/// Independent of the closed-form integrals: it discretizes each axis and
/// uses only the suite functions' separability. None for custom integrands.
pub fn quadrature_oracle(f: &TestFunction, m: usize) -> Option<f64> {
    assert!(m >= 2);
    let axis_mean = |g: &dyn Fn(f64) -> f64| -> f64 {
        let mut s = 0.0;
        for j in 0..m {
            s += g((j as f64 + 0.5) / m as f64);
        }
        s / m as f64
    };
    match &f.kind {
        Kind::Const(c) => Some(rational_to_f64(c)),
        Kind::Coordinate(_) => Some(axis_mean(&|x| x)),
        Kind::Product => {
            let per_axis = axis_mean(&|x| x);
            Some(per_axis.powi(f.d as i32))
        }
        Kind::BoxIndicator(beta) => {
            let mut vol = 1.0;
            for b in beta.upper() {
                let bf = rational_to_f64(b);
                vol *= axis_mean(&|x| if x < bf { 1.0 } else { 0.0 });
            }
            Some(vol)
        }
        Kind::Custom { .. } => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrepancy::{star_discrepancy_1d, star_discrepancy_exact, DEFAULT_CELL_BUDGET};
    use crate::pointgen::{halton_stream, hybrid_matrix, randomized_halton, Mode};

    fn halton(bases: &[u32], n: usize) -> PointSet {
        halton_stream(bases, None, n).expect("valid bases")
    }

    #[test]
    fn suite_integrals_match_oracle() {
        let m = 2_000_000;
        for d in 1..=3 {
            for f in builtin_suite(d) {
                let oracle = quadrature_oracle(&f, m).expect("built-in");
                let exact = rational_to_f64(f.exact_integral());
                assert!(
                    (oracle - exact).abs() < 1e-6,
                    "{} d={d}: oracle {oracle} vs exact {exact}",
                    f.name()
                );
            }
        }
    }

    #[test]
    fn mean_spot_values() {
        let p = halton(&[3], 17);
        let one = TestFunction::constant(1, Rational::one());
        assert_eq!(qmc_mean_exact(&one, &p).unwrap(), Rational::one());

        let single = PointSet::new(1, vec![vec![rational(1, 2)]], "manual", None).unwrap();
        let coord = TestFunction::coordinate(1, 0).unwrap();
        assert_eq!(qmc_mean_exact(&coord, &single).unwrap(), rational(1, 2));
    }

    #[test]
    fn product_error_within_kh_bound() {
        let p = halton(&[3, 5], 243);
        let f = TestFunction::product(2);
        assert_eq!(*f.exact_integral(), rational(1, 4));
        assert_eq!(*f.vhk().unwrap(), rational(3, 1));
        let dstar = star_discrepancy_exact(&p, DEFAULT_CELL_BUDGET).unwrap();
        let report = kh_certificate(&f, &p, &dstar.value).unwrap();
        assert_eq!(report.pass, Some(true));
        assert!(report.observed.unwrap() <= report.bound_value);
    }

    #[test]
    fn van_der_corput_coordinate_certificates() {
        let f = TestFunction::coordinate(1, 0).unwrap();
        for n in [3usize, 9, 27] {
            let p = halton(&[3], n);
            let dstar = star_discrepancy_1d(&p).unwrap();
            let report = kh_certificate(&f, &p, &dstar.value).unwrap();
            assert_eq!(report.pass, Some(true), "N = {n}");
            // variation 1 makes the bound exactly the discrepancy
            assert_eq!(report.bound_value, rational_to_f64(&dstar.value));
        }
    }

    #[test]
    fn missing_variation_is_refused() {
        fn half_exact(_: &[Rational]) -> Rational {
            rational(1, 2)
        }
        fn half_approx(_: &[f64]) -> f64 {
            0.5
        }
        let f = TestFunction::custom("opaque", 1, half_exact, half_approx, rational(1, 2), None);
        let p = halton(&[3], 9);
        let err = kh_certificate(&f, &p, &rational(1, 10)).unwrap_err();
        assert!(err.to_string().contains("variation"));
        // integration still works without the certificate
        assert_eq!(qmc_mean_exact(&f, &p).unwrap(), rational(1, 2));
    }

    #[test]
    fn dimension_and_range_errors() {
        let f = TestFunction::product(2);
        let p = halton(&[3], 9);
        assert!(qmc_mean_exact(&f, &p).is_err());
        let p2 = halton(&[3, 5], 9);
        assert!(kh_certificate(&f, &p2, &rational(3, 2)).is_err());
        assert!(kh_certificate(&f, &p2, &rational(-1, 2)).is_err());
    }

    #[test]
    fn mean_is_permutation_invariant() {
        let p = halton(&[3, 5], 81);
        let mut rows: Vec<Vec<Rational>> = p.iter_points().map(|x| x.to_vec()).collect();
        rows.reverse();
        rows.rotate_left(13);
        let q = PointSet::new(2, rows, "permuted", None).unwrap();
        for f in builtin_suite(2) {
            assert_eq!(
                qmc_mean_exact(&f, &p).unwrap(),
                qmc_mean_exact(&f, &q).unwrap(),
                "{}",
                f.name()
            );
        }
    }

    #[test]
    fn suite_lookup_by_name() {
        assert_eq!(suite_function(2, "product").unwrap().name(), "product");
        assert_eq!(suite_function(2, "coord-1").unwrap().name(), "coord-1");
        assert!(suite_function(2, "no-such-fn").is_err());
    }

    #[test]
    fn no_kh_violations_across_generators() {
        // generator suite x function suite x N grid, exact discrepancies
        for d in 1..=2usize {
            let bases: &[u32] = if d == 1 { &[3] } else { &[3, 5] };
            for n in [27usize, 81, 243] {
                let gens = [
                    ("halton", halton(bases, n)),
                    ("rhalton", randomized_halton(d, n, 7, 96).unwrap()),
                    ("hybrid", hybrid_matrix(d, n, 11, Mode::Practical).unwrap().0),
                ];
                for (label, p) in gens {
                    let dstar = star_discrepancy_exact(&p, DEFAULT_CELL_BUDGET).unwrap();
                    for f in builtin_suite(d) {
                        let report = kh_certificate(&f, &p, &dstar.value).unwrap();
                        assert_eq!(
                            report.pass,
                            Some(true),
                            "{label} d={d} N={n} {}",
                            f.name()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn hybrid_error_decreases_in_aggregate() {
        // median over seeds of the suite-average error, shrinking along the
        // N grid; trend guard on the f64 path
        let grid = [64usize, 256, 1024];
        let suite = builtin_suite(2);
        let mut medians = Vec::new();
        for &n in &grid {
            let mut errs = Vec::new();
            for seed in 0..20u64 {
                let (p, _) = hybrid_matrix(2, n, seed, Mode::Practical).unwrap();
                let coords: Vec<Vec<f64>> = p
                    .iter_points()
                    .map(|x| x.iter().map(rational_to_f64).collect())
                    .collect();
                let mut total = 0.0;
                for f in &suite {
                    let mean: f64 =
                        coords.iter().map(|x| f.eval_f64(x)).sum::<f64>() / n as f64;
                    total += (mean - rational_to_f64(f.exact_integral())).abs();
                }
                errs.push(total / suite.len() as f64);
            }
            errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            medians.push((errs[9] + errs[10]) / 2.0);
        }
        assert!(
            medians[0] > medians[1] && medians[1] > medians[2],
            "medians not decreasing: {medians:?}"
        );
    }
}
