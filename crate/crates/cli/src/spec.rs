//! Experiment descriptions as flat key=value text.
//!
//! The format is line-oriented and diffable: one `key = value` pair per
//! line, `#` comments, comma lists, and `a..b` inclusive ranges for seed
//! lists. Specs round-trip losslessly through emit + parse.

use lowdisc::io::parse_rational;
use lowdisc::{Error, Rational, Result};

pub const SCHEMA: &str = "lowdisc-experiment-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    Halton,
    RHalton,
    HybridPractical,
    HybridFaithful,
}

impl GeneratorKind {
    pub fn label(self) -> &'static str {
        match self {
            GeneratorKind::Halton => "halton",
            GeneratorKind::RHalton => "rhalton",
            GeneratorKind::HybridPractical => "hybrid-practical",
            GeneratorKind::HybridFaithful => "hybrid-faithful",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "halton" => Ok(GeneratorKind::Halton),
            "rhalton" => Ok(GeneratorKind::RHalton),
            "hybrid-practical" => Ok(GeneratorKind::HybridPractical),
            "hybrid-faithful" => Ok(GeneratorKind::HybridFaithful),
            _ => Err(Error::invalid(format!(
                "unknown generator kind {s:?}; expected halton, rhalton, hybrid-practical or hybrid-faithful"
            ))),
        }
    }
}

/// What to measure on each generated set.
#[derive(Debug, Clone, PartialEq)]
pub enum Measurement {
    /// exact star discrepancy (corner grid scan)
    Exact,
    /// certified interval from a bracketing cover at this resolution
    Interval(Rational),
    /// worst subsequence discrepancy over all classes at this depth
    Subseq(u32),
}

impl Measurement {
    pub fn label(&self) -> String {
        match self {
            Measurement::Exact => "exact".into(),
            Measurement::Interval(delta) => format!("interval({delta})"),
            Measurement::Subseq(kappa) => format!("subseq({kappa})"),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "exact" {
            return Ok(Measurement::Exact);
        }
        if let Some(arg) = s.strip_prefix("interval(").and_then(|r| r.strip_suffix(')')) {
            let delta = parse_rational(arg)?;
            if delta <= Rational::new(0.into(), 1.into()) || delta > Rational::new(1.into(), 1.into()) {
                return Err(Error::invalid(format!("interval resolution {delta} outside (0,1]")));
            }
            return Ok(Measurement::Interval(delta));
        }
        if let Some(arg) = s.strip_prefix("subseq(").and_then(|r| r.strip_suffix(')')) {
            let kappa: u32 = arg
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad subsequence depth {arg:?}")))?;
            if kappa > 16 {
                return Err(Error::invalid("subsequence depth above 16 is unsupported"));
            }
            return Ok(Measurement::Subseq(kappa));
        }
        Err(Error::invalid(format!(
            "unknown measurement {s:?}; expected exact, interval(delta) or subseq(kappa)"
        )))
    }
}

/// Bound checks a spec may reference by name.
pub const KNOWN_BOUNDS: &[&str] = &["headline", "subseq-intermediate"];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: GeneratorKind,
    /// explicit coordinate bases for halton/rhalton; first-d odd primes otherwise
    pub bases: Option<Vec<u32>>,
    /// per-column digit precision for rhalton starts
    pub h: Option<u64>,
    pub d_grid: Vec<usize>,
    pub n_grid: Vec<usize>,
    pub seeds: Vec<u64>,
    pub measurements: Vec<Measurement>,
    pub bounds: Vec<String>,
    pub epsilon: f64,
    pub out: Option<String>,
}

fn parse_list<T: std::str::FromStr>(v: &str, what: &str) -> Result<Vec<T>> {
    let mut items = Vec::new();
    for part in v.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        items.push(
            part.parse::<T>()
                .map_err(|_| Error::invalid(format!("bad {what} entry {part:?}")))?,
        );
    }
    if items.is_empty() {
        return Err(Error::invalid(format!("empty {what} list")));
    }
    Ok(items)
}

fn parse_seed_list(v: &str) -> Result<Vec<u64>> {
    let mut seeds = Vec::new();
    for part in v.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        if let Some((a, b)) = part.split_once("..") {
            let a: u64 = a.trim().parse().map_err(|_| Error::invalid(format!("bad seed range start {a:?}")))?;
            let b: u64 = b.trim().parse().map_err(|_| Error::invalid(format!("bad seed range end {b:?}")))?;
            if b < a {
                return Err(Error::invalid(format!("seed range {part:?} is empty")));
            }
            seeds.extend(a..=b);
        } else {
            seeds.push(part.parse().map_err(|_| Error::invalid(format!("bad seed {part:?}")))?);
        }
    }
    if seeds.is_empty() {
        return Err(Error::invalid("empty seed list"));
    }
    Ok(seeds)
}

/// Parse a spec file. Errors carry 1-based line numbers.
pub fn parse_spec(text: &str) -> Result<ExperimentSpec> {
    let mut schema_seen = false;
    let mut kind = None;
    let mut bases = None;
    let mut h = None;
    let mut d_grid = None;
    let mut n_grid = None;
    let mut seeds = None;
    let mut measurements: Option<Vec<Measurement>> = None;
    let mut bounds = Vec::new();
    let mut epsilon = 0.01f64;
    let mut out = None;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let at = |e: Error| Error::Parse { line: lineno, msg: e.to_string() };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected key = value, found {line:?}"),
            });
        };
        let (k, v) = (k.trim(), v.trim());
        match k {
            "schema" => {
                if v != SCHEMA {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("unsupported schema {v:?}; this build reads {SCHEMA}"),
                    });
                }
                schema_seen = true;
            }
            "kind" => kind = Some(GeneratorKind::parse(v).map_err(at)?),
            "bases" => bases = Some(parse_list::<u32>(v, "bases").map_err(at)?),
            "h" => {
                h = Some(v.parse::<u64>().map_err(|_| Error::Parse {
                    line: lineno,
                    msg: format!("bad h {v:?}"),
                })?)
            }
            "d" => d_grid = Some(parse_list::<usize>(v, "d").map_err(at)?),
            "n" => n_grid = Some(parse_list::<usize>(v, "n").map_err(at)?),
            "seeds" => seeds = Some(parse_seed_list(v).map_err(at)?),
            "measurements" => {
                let mut ms = Vec::new();
                for part in v.split(',') {
                    // interval(1/16) contains no commas; safe to split
                    let part = part.trim();
                    if part.is_empty() {
                        continue;
                    }
                    ms.push(Measurement::parse(part).map_err(at)?);
                }
                measurements = Some(ms);
            }
            "bounds" => {
                for part in v.split(',') {
                    let part = part.trim();
                    if part.is_empty() {
                        continue;
                    }
                    if !KNOWN_BOUNDS.contains(&part) {
                        return Err(Error::Parse {
                            line: lineno,
                            msg: format!("unknown bound {part:?}; known: {}", KNOWN_BOUNDS.join(", ")),
                        });
                    }
                    bounds.push(part.to_string());
                }
            }
            "epsilon" => {
                epsilon = v.parse::<f64>().map_err(|_| Error::Parse {
                    line: lineno,
                    msg: format!("bad epsilon {v:?}"),
                })?;
                if !(epsilon > 0.0 && epsilon <= 1.0) {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("epsilon {epsilon} outside (0,1]"),
                    });
                }
            }
            "out" => out = Some(v.to_string()),
            _ => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("unknown key {k:?}"),
                })
            }
        }
    }

    if !schema_seen {
        return Err(Error::Parse { line: 0, msg: format!("missing schema = {SCHEMA} line") });
    }
    let kind = kind.ok_or(Error::Parse { line: 0, msg: "missing kind".into() })?;
    let d_grid = d_grid.ok_or(Error::Parse { line: 0, msg: "missing d grid".into() })?;
    let n_grid = n_grid.ok_or(Error::Parse { line: 0, msg: "missing n grid".into() })?;
    let seeds = seeds.ok_or(Error::Parse { line: 0, msg: "missing seeds".into() })?;
    let measurements = measurements
        .filter(|m| !m.is_empty())
        .ok_or(Error::Parse { line: 0, msg: "measurements list is missing or empty".into() })?;
    if let Some(b) = &bases {
        let dmax = *d_grid.iter().max().expect("nonempty");
        if b.len() < dmax {
            return Err(Error::Parse {
                line: 0,
                msg: format!("{} bases given but d grid reaches {dmax}", b.len()),
            });
        }
    }
    Ok(ExperimentSpec {
        kind,
        bases,
        h,
        d_grid,
        n_grid,
        seeds,
        measurements,
        bounds,
        epsilon,
        out,
    })
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Emit a spec in canonical form. parse_spec(emit_spec(s)) == s.
pub fn emit_spec(spec: &ExperimentSpec) -> String {
    let mut buf = String::new();
    buf.push_str(&format!("schema = {SCHEMA}\n"));
    buf.push_str(&format!("kind = {}\n", spec.kind.label()));
    if let Some(b) = &spec.bases {
        buf.push_str(&format!("bases = {}\n", join(b)));
    }
    if let Some(h) = spec.h {
        buf.push_str(&format!("h = {h}\n"));
    }
    buf.push_str(&format!("d = {}\n", join(&spec.d_grid)));
    buf.push_str(&format!("n = {}\n", join(&spec.n_grid)));
    buf.push_str(&format!("seeds = {}\n", join(&spec.seeds)));
    let ms: Vec<String> = spec.measurements.iter().map(|m| m.label()).collect();
    buf.push_str(&format!("measurements = {}\n", ms.join(",")));
    if !spec.bounds.is_empty() {
        buf.push_str(&format!("bounds = {}\n", spec.bounds.join(",")));
    }
    buf.push_str(&format!("epsilon = {}\n", spec.epsilon));
    if let Some(out) = &spec.out {
        buf.push_str(&format!("out = {out}\n"));
    }
    buf
}
