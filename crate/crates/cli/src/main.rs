//! Command-line harness: point generation, exact and certified star
//! discrepancy, cover validation, bound verification, QMC integration, and
//! batch experiments.
//!
//! Exit codes: 0 success, 1 a bound check failed, 2 usage or input error.

mod experiment;
mod spec;

use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use lowdisc::bounds::verify_battery;
use lowdisc::cover::{
    build_cover, cover_discrepancy_interval, dyadic_snap_cover, snap_cardinality_bound,
    validate_cover, CoverReport, DEFAULT_CORNER_BUDGET,
};
use lowdisc::digits::rational_to_f64;
use lowdisc::discrepancy::{
    star_discrepancy_exact, subsequence, DiscrepancyResult, DEFAULT_CELL_BUDGET,
};
use lowdisc::integrate::{kh_certificate, qmc_mean_exact, suite_function, IntegrationReport};
use lowdisc::io::{parse_rational, read_points_csv, write_digit_tapes, write_points_csv};
use lowdisc::pointgen::{
    halton_stream, randomized_halton, HybridConfig, HybridMatrixGenerator, Mode, PointSet,
};
use lowdisc::primes::odd_primes;
use lowdisc::{Error, Rational, Result};

use spec::GeneratorKind;

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Parser)]
#[command(
    name = "lowdisc",
    version,
    about = "Low-discrepancy point sets: generation, exact star discrepancy, \
             certified covers, bound verification, QMC integration"
)]
struct Cli {
    /// Seed for randomized generators and sampling checks
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Write output here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format where both are supported
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Work budget in grid cells / cover corners for exact scans
    #[arg(long, global = true)]
    budget: Option<u64>,

    #[command(subcommand)]
    cmd: Cmd,
}

/// Flags shared by every subcommand that needs a point set.
#[derive(Args, Clone)]
struct GenArgs {
    /// Generator: halton, rhalton, hybrid-practical or hybrid-faithful
    #[arg(long, default_value = "halton")]
    kind: String,

    /// Dimension
    #[arg(long, default_value_t = 2)]
    d: usize,

    /// Number of points (required unless --input is given)
    #[arg(long)]
    n: Option<usize>,

    /// Coordinate bases for halton (defaults to the first d odd primes)
    #[arg(long, value_delimiter = ',')]
    bases: Option<Vec<u32>>,

    /// Digit precision for randomized starts
    #[arg(long, default_value_t = 96)]
    precision: usize,

    /// Read points from this CSV instead of generating
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a point set and write it as exact CSV
    Generate {
        #[command(flatten)]
        gen: GenArgs,
        /// Record raw digit tapes to OUT.digits.json (hybrid kinds only)
        #[arg(long)]
        digits: bool,
    },
    /// Star discrepancy: exact corner scan, or a certified interval
    Disc {
        #[command(flatten)]
        gen: GenArgs,
        /// Certified interval at this resolution instead of the exact value
        #[arg(long)]
        delta: Option<String>,
    },
    /// Exact discrepancy of every index-congruence subsequence
    Subseq {
        #[command(flatten)]
        gen: GenArgs,
        /// Congruence depth: classes are indices equal to gamma mod 2^kappa
        #[arg(long)]
        kappa: u32,
        /// Check a single class instead of all 2^kappa
        #[arg(long)]
        gamma: Option<u64>,
    },
    /// Build a bracketing cover, optionally snap it to the dyadic grids, and
    /// validate weights and coverage
    Cover {
        /// Dimension
        #[arg(long, default_value_t = 2)]
        d: usize,
        /// Resolution (a rational like 1/16); with --snap it must equal
        /// 2^-(h+2) and may be omitted
        #[arg(long)]
        delta: Option<String>,
        /// Snap level h: build at 2^-(h+2), snap, validate at 2^-h
        #[arg(long)]
        snap: Option<u32>,
        /// Random containment samples for validation
        #[arg(long = "validate", default_value_t = 1000)]
        samples: u64,
    },
    /// Run the full bound verifier battery
    Verify,
    /// Integrate a built-in function and certify the error
    Integrate {
        /// Built-in function name (see `integrate --list`)
        #[arg(long = "fn", required_unless_present = "list")]
        function: Option<String>,
        /// Generator spec: kind, optionally kind:b1,b2 for halton bases
        #[arg(long, default_value = "halton")]
        gen: String,
        /// Number of points
        #[arg(long, required_unless_present = "list")]
        n: Option<usize>,
        /// Dimension
        #[arg(long, default_value_t = 2)]
        d: usize,
        /// List the built-in functions for this dimension and exit
        #[arg(long)]
        list: bool,
    },
    /// Run a batch experiment from a spec file
    Experiment {
        /// Path to the experiment spec
        #[arg(long = "spec")]
        spec_path: PathBuf,
        /// Validate the spec and print its canonical form without running
        #[arg(long)]
        check: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn write_output(out: &Option<PathBuf>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => fs::write(path, bytes)?,
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn rational_json(r: &Rational) -> serde_json::Value {
    json!({ "exact": r.to_string(), "approx": rational_to_f64(r) })
}

fn count_json(c: u128) -> serde_json::Value {
    match u64::try_from(c) {
        Ok(v) => json!(v),
        Err(_) => json!(c.to_string()),
    }
}

fn parse_gen_spec(s: &str) -> Result<(GeneratorKind, Option<Vec<u32>>)> {
    let (kind, rest) = match s.split_once(':') {
        Some((k, r)) => (k, Some(r)),
        None => (s, None),
    };
    let kind = GeneratorKind::parse(kind)?;
    let bases = match rest {
        Some(r) => {
            let mut bs = Vec::new();
            for part in r.split(',') {
                bs.push(
                    part.trim()
                        .parse::<u32>()
                        .map_err(|_| Error::invalid(format!("bad base {part:?}")))?,
                );
            }
            Some(bs)
        }
        None => None,
    };
    Ok((kind, bases))
}

fn default_bases(d: usize) -> Vec<u32> {
    odd_primes(d).iter().map(|&p| p as u32).collect()
}

fn generate_points(
    kind: GeneratorKind,
    d: usize,
    n: usize,
    seed: u64,
    bases: Option<&[u32]>,
    precision: usize,
) -> Result<PointSet> {
    match kind {
        GeneratorKind::Halton => {
            let bases = match bases {
                Some(b) if b.len() >= d => b[..d].to_vec(),
                Some(b) => {
                    return Err(Error::invalid(format!(
                        "{} bases given for dimension {d}",
                        b.len()
                    )))
                }
                None => default_bases(d),
            };
            halton_stream(&bases, None, n)
        }
        GeneratorKind::RHalton => randomized_halton(d, n, seed, precision),
        GeneratorKind::HybridPractical => {
            Ok(lowdisc::pointgen::hybrid_matrix(d, n, seed, Mode::Practical)?.0)
        }
        GeneratorKind::HybridFaithful => {
            Ok(lowdisc::pointgen::hybrid_matrix(d, n, seed, Mode::Faithful)?.0)
        }
    }
}

fn load_or_generate(gen: &GenArgs, seed: u64) -> Result<PointSet> {
    if let Some(path) = &gen.input {
        let file = fs::File::open(path)?;
        return read_points_csv(std::io::BufReader::new(file));
    }
    let kind = GeneratorKind::parse(&gen.kind)?;
    let n = gen.n.ok_or_else(|| Error::invalid("pass --n or --input"))?;
    generate_points(kind, gen.d, n, seed, gen.bases.as_deref(), gen.precision)
}

fn disc_json(res: &DiscrepancyResult) -> serde_json::Value {
    json!({
        "value": rational_json(&res.value),
        "witness": res.witness.iter().map(rational_json).collect::<Vec<_>>(),
        "side": res.side.label(),
        "n": res.n,
        "d": res.d,
    })
}

/// The four-key cover report shape: count, max_weight, bound_met, failures.
fn cover_json(report: &CoverReport) -> serde_json::Value {
    json!({
        "count": count_json(report.count),
        "max_weight": report.max_weight,
        "bound_met": report.bound_met,
        "failures": report.failures,
    })
}

fn run(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Generate { gen, digits } => {
            let kind = GeneratorKind::parse(&gen.kind)?;
            if digits {
                if !matches!(
                    kind,
                    GeneratorKind::HybridPractical | GeneratorKind::HybridFaithful
                ) {
                    return Err(Error::invalid("--digits records hybrid tapes only"));
                }
                let mut cfg = HybridConfig::new(gen.d, cli.seed);
                cfg.mode = if kind == GeneratorKind::HybridFaithful {
                    Mode::Faithful
                } else {
                    Mode::Practical
                };
                cfg.record_digits = true;
                let mut hybrid = HybridMatrixGenerator::new(cfg)?;
                let n = gen.n.ok_or_else(|| Error::invalid("pass --n"))?;
                let points = hybrid.generate(n)?;
                let mut buf = Vec::new();
                write_points_csv(&mut buf, &points)?;
                write_output(&cli.out, &buf)?;
                let sidecar = match &cli.out {
                    Some(path) => {
                        let mut p = path.clone().into_os_string();
                        p.push(".digits.json");
                        Some(PathBuf::from(p))
                    }
                    None => None,
                };
                let mut tape_buf = Vec::new();
                write_digit_tapes(&mut tape_buf, hybrid.recorded_digits())?;
                match sidecar {
                    Some(p) => fs::write(p, &tape_buf)?,
                    None => std::io::stdout().write_all(&tape_buf)?,
                }
                return Ok(true);
            }
            let points = load_or_generate(&gen, cli.seed)?;
            let bytes = match cli.format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    write_points_csv(&mut buf, &points)?;
                    buf
                }
                Format::Json => {
                    let rows: Vec<Vec<serde_json::Value>> = points
                        .iter_points()
                        .map(|x| x.iter().map(rational_json).collect())
                        .collect();
                    let mut v = serde_json::to_vec_pretty(&json!({
                        "d": points.dim(),
                        "n": points.len(),
                        "mode": points.mode(),
                        "seed": points.seed(),
                        "points": rows,
                    }))
                    .expect("serializes");
                    v.push(b'\n');
                    v
                }
            };
            write_output(&cli.out, &bytes)?;
            Ok(true)
        }

        Cmd::Disc { gen, delta } => {
            let points = load_or_generate(&gen, cli.seed)?;
            let value = match delta {
                None => {
                    let budget = cli.budget.unwrap_or(DEFAULT_CELL_BUDGET);
                    let res = star_discrepancy_exact(&points, budget)?;
                    disc_json(&res)
                }
                Some(delta) => {
                    let delta = parse_rational(&delta)?;
                    let budget = cli.budget.unwrap_or(DEFAULT_CORNER_BUDGET);
                    let iv = cover_discrepancy_interval(&points, &delta, budget)?;
                    json!({
                        "lo": rational_json(&iv.lo),
                        "hi": rational_json(&iv.hi),
                        "delta": rational_json(&iv.delta),
                        "witness": iv.witness.iter().map(rational_json).collect::<Vec<_>>(),
                        "corners": count_json(iv.corners),
                        "n": points.len(),
                        "d": points.dim(),
                    })
                }
            };
            let mut bytes = serde_json::to_vec_pretty(&value).expect("serializes");
            bytes.push(b'\n');
            write_output(&cli.out, &bytes)?;
            Ok(true)
        }

        Cmd::Subseq { gen, kappa, gamma } => {
            let points = load_or_generate(&gen, cli.seed)?;
            let budget = cli.budget.unwrap_or(DEFAULT_CELL_BUDGET);
            let classes: Vec<u64> = match gamma {
                Some(g) => vec![g],
                None => (0..(1u64 << kappa)).collect(),
            };
            let mut rows = Vec::new();
            let mut all_pass = true;
            for g in classes {
                let sub = subsequence(&points, kappa, g)?;
                if sub.is_empty() {
                    rows.push(json!({ "gamma": g, "n_sub": 0 }));
                    continue;
                }
                let res = star_discrepancy_exact(&sub, budget)?;
                let bound =
                    lowdisc::bounds::halton_subseq_bound(points.dim(), points.len(), sub.len())?;
                let pass = res.value_f64() <= bound;
                all_pass &= pass;
                rows.push(json!({
                    "gamma": g,
                    "n_sub": sub.len(),
                    "dstar": rational_json(&res.value),
                    "bound": bound,
                    "pass": pass,
                }));
            }
            let mut bytes = serde_json::to_vec_pretty(&json!({
                "kappa": kappa,
                "d": points.dim(),
                "n": points.len(),
                "classes": rows,
            }))
            .expect("serializes");
            bytes.push(b'\n');
            write_output(&cli.out, &bytes)?;
            Ok(all_pass)
        }

        Cmd::Cover { d, delta, snap, samples } => {
            let report = match snap {
                None => {
                    let delta = delta.ok_or_else(|| {
                        Error::invalid("pass --delta <rational> (or --snap <h>)")
                    })?;
                    let delta = parse_rational(&delta)?;
                    let cover = build_cover(d, &delta)?;
                    validate_cover(&cover, &delta, samples, cli.seed)
                }
                Some(h) => {
                    if h < 1 || h > 40 {
                        return Err(Error::invalid("snap level h must lie in 1..=40"));
                    }
                    let fine = Rational::new(1.into(), (1u128 << (h + 2)).into());
                    if let Some(given) = delta {
                        if parse_rational(&given)? != fine {
                            return Err(Error::invalid(format!(
                                "--snap {h} takes input resolution 2^-(h+2) = {fine}, got {given}"
                            )));
                        }
                    }
                    let coarse = Rational::new(1.into(), (1u128 << h).into());
                    let cover = build_cover(d, &fine)?;
                    let snapped = dyadic_snap_cover(&cover, h)?;
                    let mut report = validate_cover(&snapped, &coarse, samples, cli.seed);
                    // the cardinality claim for snapped covers carries the
                    // input resolution: count <= (1/2)(2e)^d (2^(h+2)+1)^d
                    report.bound_met =
                        (report.count as f64) <= snap_cardinality_bound(d, h);
                    report
                }
            };
            let mut bytes = serde_json::to_vec_pretty(&cover_json(&report)).expect("serializes");
            bytes.push(b'\n');
            write_output(&cli.out, &bytes)?;
            Ok(report.bound_met && report.failures.is_empty())
        }

        Cmd::Verify => {
            let reports = verify_battery(cli.seed);
            let all_pass = reports.iter().all(|r| r.pass != Some(false));
            let bytes = match cli.format {
                Format::Json => {
                    let mut v = serde_json::to_vec_pretty(&reports).expect("serializes");
                    v.push(b'\n');
                    v
                }
                Format::Csv => {
                    let mut out = String::from("name,bound_value,observed,pass,vacuous\n");
                    for r in &reports {
                        out.push_str(&format!(
                            "{},{},{},{},{}\n",
                            r.name,
                            r.bound_value,
                            r.observed.map_or_else(String::new, |v| v.to_string()),
                            r.pass.map_or_else(String::new, |v| v.to_string()),
                            r.vacuous,
                        ));
                    }
                    out.into_bytes()
                }
            };
            write_output(&cli.out, &bytes)?;
            Ok(all_pass)
        }

        Cmd::Integrate { function, gen, n, d, list } => {
            if list {
                let names: Vec<String> = lowdisc::integrate::builtin_suite(d)
                    .iter()
                    .map(|f| f.name().to_string())
                    .collect();
                let mut bytes = serde_json::to_vec_pretty(&names).expect("serializes");
                bytes.push(b'\n');
                write_output(&cli.out, &bytes)?;
                return Ok(true);
            }
            let function = function.expect("required unless --list");
            let n = n.expect("required unless --list");
            let (kind, bases) = parse_gen_spec(&gen)?;
            let points = generate_points(kind, d, n, cli.seed, bases.as_deref(), 96)?;
            let f = suite_function(d, &function)?;
            let mean = qmc_mean_exact(&f, &points)?;
            let budget = cli.budget.unwrap_or(DEFAULT_CELL_BUDGET);
            // certify against the exact discrepancy when affordable, else a
            // certified interval upper end
            let dstar = match star_discrepancy_exact(&points, budget) {
                Ok(res) => Some(res.value),
                Err(Error::BudgetExceeded { .. }) => {
                    let delta = Rational::new(1.into(), 64.into());
                    let corner_budget = cli.budget.unwrap_or(DEFAULT_CORNER_BUDGET);
                    match cover_discrepancy_interval(&points, &delta, corner_budget) {
                        Ok(iv) => Some(iv.hi),
                        Err(Error::BudgetExceeded { .. }) => None,
                        Err(e) => return Err(e),
                    }
                }
                Err(e) => return Err(e),
            };
            let kh = match &dstar {
                Some(ds) => Some(kh_certificate(&f, &points, ds)?),
                None => None,
            };
            let exact = rational_to_f64(f.exact_integral());
            let estimate = rational_to_f64(&mean);
            let report = IntegrationReport {
                function: f.name().to_string(),
                d,
                n,
                estimate,
                exact_integral: exact,
                abs_error: (estimate - exact).abs(),
                dstar: dstar.as_ref().map(rational_to_f64),
                kh_bound: kh.as_ref().map(|r| r.bound_value),
                kh_pass: kh.as_ref().and_then(|r| r.pass),
            };
            let mut bytes = serde_json::to_vec_pretty(&report).expect("serializes");
            bytes.push(b'\n');
            write_output(&cli.out, &bytes)?;
            Ok(report.kh_pass != Some(false))
        }

        Cmd::Experiment { spec_path, check } => {
            let text = fs::read_to_string(&spec_path)?;
            let parsed = spec::parse_spec(&text)?;
            if check {
                write_output(&cli.out, spec::emit_spec(&parsed).as_bytes())?;
                return Ok(true);
            }
            let budget = cli.budget.unwrap_or(DEFAULT_CELL_BUDGET);
            let report = experiment::run_experiment(&parsed, budget)?;
            let bytes = experiment::emit_report(&report, cli.format);
            let out = cli
                .out
                .clone()
                .or_else(|| parsed.out.as_ref().map(PathBuf::from));
            write_output(&out, &bytes)?;
            Ok(report.rows.iter().all(|r| r.pass != Some(false)))
        }
    }
}
