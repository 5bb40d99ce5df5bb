//! Batch experiment execution over (seed, d, N, measurement) grids.
//!
//! Cells are deterministic functions of the spec: every generator draws from
//! its own seed, so running cells in any order (or concurrently) produces
//! the same rows. Reports are byte-stable apart from wall-time fields.

use std::time::Instant;

use serde::Serialize;

use lowdisc::bounds::{halton_subseq_bound, hybrid_matrix_bound, normalized_dstar};
use lowdisc::cover::cover_discrepancy_interval;
use lowdisc::discrepancy::{star_discrepancy_exact, subsequence};
use lowdisc::pointgen::{halton_stream, hybrid_matrix, randomized_halton, Mode, PointSet};
use lowdisc::primes::odd_primes;
use lowdisc::{Error, Result};

use crate::spec::{ExperimentSpec, GeneratorKind, Measurement};

pub const REPORT_SCHEMA: &str = "lowdisc-report-v1";
pub const DEFAULT_RHALTON_PRECISION: usize = 96;

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRow {
    pub seed: u64,
    pub d: usize,
    pub n: usize,
    pub measurement: String,
    /// "ok" or "skipped(budget)"
    pub status: String,
    /// exact D*, certified upper end for intervals, worst class D* for
    /// subsequence measurements
    pub value: Option<f64>,
    /// certified lower end (interval measurements only)
    pub lo: Option<f64>,
    pub bound: Option<f64>,
    pub pass: Option<bool>,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub schema: String,
    pub kind: String,
    pub epsilon: f64,
    pub rows: Vec<ExperimentRow>,
    /// max over completed full-set rows of sqrt(N/d) * value
    pub normalized_max: Option<f64>,
    /// fraction of checked rows that passed
    pub pass_fraction: Option<f64>,
}

fn generate(spec: &ExperimentSpec, d: usize, n: usize, seed: u64) -> Result<PointSet> {
    match spec.kind {
        GeneratorKind::Halton => {
            let bases: Vec<u32> = match &spec.bases {
                Some(b) => b[..d].to_vec(),
                None => odd_primes(d).iter().map(|&p| p as u32).collect(),
            };
            halton_stream(&bases, None, n)
        }
        GeneratorKind::RHalton => {
            let precision = spec.h.unwrap_or(DEFAULT_RHALTON_PRECISION as u64) as usize;
            randomized_halton(d, n, seed, precision)
        }
        GeneratorKind::HybridPractical => Ok(hybrid_matrix(d, n, seed, Mode::Practical)?.0),
        GeneratorKind::HybridFaithful => Ok(hybrid_matrix(d, n, seed, Mode::Faithful)?.0),
    }
}

fn skip_on_budget<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::BudgetExceeded { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Execute every cell of the spec. Row order is the nested loop
/// seed -> d -> N -> measurement; row count is exactly the product of the
/// four grid sizes, with infeasible cells recorded as skipped(budget).
pub fn run_experiment(spec: &ExperimentSpec, budget: u64) -> Result<ExperimentReport> {
    if spec.kind == GeneratorKind::RHalton {
        if let Some(b) = &spec.bases {
            let defaults: Vec<u32> = odd_primes(b.len()).iter().map(|&p| p as u32).collect();
            if *b != defaults {
                return Err(Error::invalid(
                    "randomized Halton draws its bases from the odd primes; drop the bases key",
                ));
            }
        }
    }
    let check_headline = spec.bounds.iter().any(|b| b == "headline");
    let check_subseq = spec.bounds.iter().any(|b| b == "subseq-intermediate");

    let mut rows = Vec::new();
    let mut normalized_max: Option<f64> = None;
    for &seed in &spec.seeds {
        for &d in &spec.d_grid {
            for &n in &spec.n_grid {
                let points = generate(spec, d, n, seed)?;
                for m in &spec.measurements {
                    let started = Instant::now();
                    let mut row = ExperimentRow {
                        seed,
                        d,
                        n,
                        measurement: m.label(),
                        status: "ok".into(),
                        value: None,
                        lo: None,
                        bound: None,
                        pass: None,
                        wall_ms: 0,
                    };
                    match m {
                        Measurement::Exact => {
                            match skip_on_budget(star_discrepancy_exact(&points, budget))? {
                                Some(res) => {
                                    let v = res.value_f64();
                                    row.value = Some(v);
                                    if check_headline {
                                        let b = hybrid_matrix_bound(d, n, spec.epsilon)?;
                                        row.bound = Some(b);
                                        row.pass = Some(v <= b);
                                    }
                                    let stat = normalized_dstar(d, n, v);
                                    normalized_max =
                                        Some(normalized_max.map_or(stat, |x| x.max(stat)));
                                }
                                None => row.status = "skipped(budget)".into(),
                            }
                        }
                        Measurement::Interval(delta) => {
                            match skip_on_budget(cover_discrepancy_interval(
                                &points, delta, budget,
                            ))? {
                                Some(iv) => {
                                    let hi = iv.hi_f64();
                                    row.value = Some(hi);
                                    row.lo = Some(iv.lo_f64());
                                    if check_headline {
                                        let b = hybrid_matrix_bound(d, n, spec.epsilon)?;
                                        row.bound = Some(b);
                                        // certified upper end below the bound
                                        row.pass = Some(hi <= b);
                                    }
                                    let stat = normalized_dstar(d, n, hi);
                                    normalized_max =
                                        Some(normalized_max.map_or(stat, |x| x.max(stat)));
                                }
                                None => row.status = "skipped(budget)".into(),
                            }
                        }
                        Measurement::Subseq(kappa) => {
                            // worst class value; bound taken at the same class
                            let mut worst: Option<(f64, usize)> = None;
                            let mut all_ok = true;
                            let mut skipped = false;
                            for gamma in 0..(1u64 << kappa) {
                                let sub = subsequence(&points, *kappa, gamma)?;
                                if sub.is_empty() {
                                    continue;
                                }
                                let Some(res) =
                                    skip_on_budget(star_discrepancy_exact(&sub, budget))?
                                else {
                                    skipped = true;
                                    break;
                                };
                                let v = res.value_f64();
                                if check_subseq {
                                    let b = halton_subseq_bound(d, n, sub.len())?;
                                    if v > b {
                                        all_ok = false;
                                    }
                                }
                                if worst.is_none_or(|(w, _)| v > w) {
                                    worst = Some((v, sub.len()));
                                }
                            }
                            if skipped {
                                row.status = "skipped(budget)".into();
                            } else if let Some((v, n_sub)) = worst {
                                row.value = Some(v);
                                if check_subseq {
                                    row.bound = Some(halton_subseq_bound(d, n, n_sub)?);
                                    row.pass = Some(all_ok);
                                }
                            }
                        }
                    }
                    row.wall_ms = started.elapsed().as_millis() as u64;
                    rows.push(row);
                }
            }
        }
    }
    let checked = rows.iter().filter(|r| r.pass.is_some()).count();
    let passed = rows.iter().filter(|r| r.pass == Some(true)).count();
    Ok(ExperimentReport {
        schema: REPORT_SCHEMA.into(),
        kind: spec.kind.label().into(),
        epsilon: spec.epsilon,
        rows,
        normalized_max,
        pass_fraction: if checked > 0 {
            Some(passed as f64 / checked as f64)
        } else {
            None
        },
    })
}

fn csv_opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(String::new, |x| x.to_string())
}

/// Render a report. CSV rows are byte-stable across runs except for the
/// trailing wall_ms column; JSON is the full structure.
pub fn emit_report(report: &ExperimentReport, format: crate::Format) -> Vec<u8> {
    match format {
        crate::Format::Json => {
            let mut bytes = serde_json::to_vec_pretty(report).expect("report serializes");
            bytes.push(b'\n');
            bytes
        }
        crate::Format::Csv => {
            let mut out = String::new();
            out.push_str(&format!(
                "# schema={} kind={} epsilon={} normalized_max={} pass_fraction={}\n",
                report.schema,
                report.kind,
                report.epsilon,
                csv_opt(&report.normalized_max),
                csv_opt(&report.pass_fraction),
            ));
            out.push_str("seed,d,n,measurement,status,value,lo,bound,pass,wall_ms\n");
            for r in &report.rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{}\n",
                    r.seed,
                    r.d,
                    r.n,
                    r.measurement,
                    r.status,
                    csv_opt(&r.value),
                    csv_opt(&r.lo),
                    csv_opt(&r.bound),
                    csv_opt(&r.pass),
                    r.wall_ms,
                ));
            }
            out.into_bytes()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::parse_spec;
    use lowdisc::discrepancy::DEFAULT_CELL_BUDGET;

    fn strip_wall(csv: &str) -> String {
        csv.lines()
            .map(|l| {
                if l.starts_with('#') || l.starts_with("seed,") {
                    l.to_string()
                } else {
                    l.rsplit_once(',').map(|(head, _)| head.to_string()).unwrap_or_default()
                }
            })
            .collect::<Vec<_>>()
            .join("\n")
    }

    #[test]
    fn single_cell_matches_module_value() {
        let spec = parse_spec(
            "schema = lowdisc-experiment-v1\nkind = halton\nbases = 3\nd = 1\nn = 9\nseeds = 0\nmeasurements = exact\n",
        )
        .unwrap();
        let report = run_experiment(&spec, DEFAULT_CELL_BUDGET).unwrap();
        assert_eq!(report.rows.len(), 1);
        let p = halton_stream(&[3], None, 9).unwrap();
        let expect = star_discrepancy_exact(&p, DEFAULT_CELL_BUDGET).unwrap();
        assert_eq!(report.rows[0].value, Some(expect.value_f64()));
        assert_eq!(report.rows[0].status, "ok");
    }

    #[test]
    fn row_count_is_grid_product() {
        let spec = parse_spec(
            "schema = lowdisc-experiment-v1\nkind = rhalton\nd = 1,2\nn = 16,32,64\nseeds = 0..3\nmeasurements = exact, interval(1/8)\n",
        )
        .unwrap();
        let report = run_experiment(&spec, DEFAULT_CELL_BUDGET).unwrap();
        assert_eq!(report.rows.len(), 4 * 2 * 3 * 2);
        assert!(report.rows.iter().all(|r| r.status == "ok"));
        // intervals bracket the exact values computed in the same run
        for w in report.rows.chunks(2) {
            let (exact, interval) = (&w[0], &w[1]);
            assert!(interval.lo.unwrap() <= exact.value.unwrap());
            assert!(exact.value.unwrap() <= interval.value.unwrap());
        }
    }

    #[test]
    fn infeasible_cells_are_skipped_not_failed() {
        let spec = parse_spec(
            "schema = lowdisc-experiment-v1\nkind = rhalton\nd = 2\nn = 256\nseeds = 0\nmeasurements = exact\nbounds = headline\n",
        )
        .unwrap();
        // budget far below the 257^2 cell grid
        let report = run_experiment(&spec, 1000).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert_eq!(report.rows[0].status, "skipped(budget)");
        assert_eq!(report.rows[0].value, None);
        assert_eq!(report.rows[0].pass, None);
        assert_eq!(report.pass_fraction, None);
    }

    #[test]
    fn hybrid_rows_pass_headline_bound() {
        let spec = parse_spec(
            "schema = lowdisc-experiment-v1\nkind = hybrid-practical\nd = 2\nn = 64,128\nseeds = 0..2\nmeasurements = exact\nbounds = headline\nepsilon = 0.01\n",
        )
        .unwrap();
        let report = run_experiment(&spec, DEFAULT_CELL_BUDGET).unwrap();
        assert_eq!(report.rows.len(), 6);
        assert!(report.rows.iter().all(|r| r.pass == Some(true)));
        assert_eq!(report.pass_fraction, Some(1.0));
        assert!(report.normalized_max.unwrap() <= 30.0);
    }

    #[test]
    fn reports_are_stable_modulo_wall_time() {
        let spec = parse_spec(
            "schema = lowdisc-experiment-v1\nkind = rhalton\nd = 2\nn = 32\nseeds = 1,2\nmeasurements = exact, subseq(1)\nbounds = subseq-intermediate\n",
        )
        .unwrap();
        let a = run_experiment(&spec, DEFAULT_CELL_BUDGET).unwrap();
        let b = run_experiment(&spec, DEFAULT_CELL_BUDGET).unwrap();
        let csv_a = String::from_utf8(emit_report(&a, crate::Format::Csv)).unwrap();
        let csv_b = String::from_utf8(emit_report(&b, crate::Format::Csv)).unwrap();
        assert_eq!(strip_wall(&csv_a), strip_wall(&csv_b));
        // subsequence rows carry the intermediate bound
        assert!(a
            .rows
            .iter()
            .filter(|r| r.measurement == "subseq(1)")
            .all(|r| r.bound.is_some() && r.pass == Some(true)));
    }

    #[test]
    fn rhalton_with_custom_bases_is_rejected() {
        let spec = parse_spec(
            "schema = lowdisc-experiment-v1\nkind = rhalton\nbases = 7,11\nd = 2\nn = 16\nseeds = 0\nmeasurements = exact\n",
        )
        .unwrap();
        assert!(run_experiment(&spec, DEFAULT_CELL_BUDGET).is_err());
    }
}
