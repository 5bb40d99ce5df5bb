//! Exact point-set persistence.
//!
//! Points are written as lowest-terms fractions so files round-trip without
//! rounding. The reader also accepts terminating decimals for hand-written
//! inputs. A JSON sidecar carries raw digit tapes when a generator was asked
//! to record them.

use std::io::{BufRead, Write};
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::pointgen::{DigitSnapshot, PointSet};
use crate::{Error, Rational, Result};

/// Parse "a/b", an integer, or a terminating decimal into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::invalid("empty number"));
    }
    if let Some((num, den)) = s.split_once('/') {
        let n = BigInt::from_str(num.trim())
            .map_err(|e| Error::invalid(format!("bad numerator {num:?}: {e}")))?;
        let d = BigInt::from_str(den.trim())
            .map_err(|e| Error::invalid(format!("bad denominator {den:?}: {e}")))?;
        if d.is_zero() {
            return Err(Error::invalid("zero denominator"));
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let sign = if whole.starts_with('-') { -1 } else { 1 };
        let w = if whole.is_empty() || whole == "-" {
            BigInt::zero()
        } else {
            BigInt::from_str(whole)
                .map_err(|e| Error::invalid(format!("bad number {s:?}: {e}")))?
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::invalid(format!("bad decimal {s:?}")));
        }
        let f = BigInt::from_str(frac).expect("digits only");
        let mut scale = BigInt::one();
        for _ in 0..frac.len() {
            scale *= 10;
        }
        let numer = w.magnitude().clone() * scale.magnitude().clone() + f.magnitude().clone();
        let value = Rational::new(BigInt::from(numer), scale);
        return Ok(if sign < 0 { -value } else { value });
    }
    let n = BigInt::from_str(s).map_err(|e| Error::invalid(format!("bad number {s:?}: {e}")))?;
    Ok(Rational::from_integer(n))
}

/// Write a point set as CSV: a `#` metadata line, a column header, then one
/// exact row per point.
pub fn write_points_csv<W: Write>(w: &mut W, p: &PointSet) -> Result<()> {
    let seed = p.seed().map_or_else(|| "-".to_string(), |s| s.to_string());
    writeln!(w, "# d={} n={} mode={} seed={seed}", p.dim(), p.len(), p.mode())?;
    let cols: Vec<String> = (1..=p.dim()).map(|i| format!("x{i}")).collect();
    writeln!(w, "{}", cols.join(","))?;
    for x in p.iter_points() {
        let row: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Read a point set written by [`write_points_csv`]. The metadata line and
/// column header are optional; dimension is taken from the first row when
/// absent. Errors carry 1-based line numbers.
pub fn read_points_csv<R: BufRead>(r: R) -> Result<PointSet> {
    let mut d: Option<usize> = None;
    let mut mode = String::from("file");
    let mut seed: Option<u64> = None;
    let mut declared_n: Option<usize> = None;
    let mut rows: Vec<Vec<Rational>> = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(meta) = t.strip_prefix('#') {
            for field in meta.split_whitespace() {
                let Some((k, v)) = field.split_once('=') else { continue };
                match k {
                    "d" => {
                        d = Some(v.parse().map_err(|_| Error::Parse {
                            line: lineno,
                            msg: format!("bad d={v}"),
                        })?)
                    }
                    "n" => {
                        declared_n = Some(v.parse().map_err(|_| Error::Parse {
                            line: lineno,
                            msg: format!("bad n={v}"),
                        })?)
                    }
                    "mode" => mode = v.to_string(),
                    "seed" => {
                        seed = if v == "-" {
                            None
                        } else {
                            Some(v.parse().map_err(|_| Error::Parse {
                                line: lineno,
                                msg: format!("bad seed={v}"),
                            })?)
                        }
                    }
                    _ => {}
                }
            }
            continue;
        }
        // column header row
        if t.split(',').next().is_some_and(|c| c.trim().starts_with('x'))
            && rows.is_empty()
        {
            continue;
        }
        let row: Vec<Rational> = t
            .split(',')
            .map(|cell| {
                parse_rational(cell).map_err(|e| Error::Parse {
                    line: lineno,
                    msg: e.to_string(),
                })
            })
            .collect::<Result<_>>()?;
        if let Some(d) = d {
            if row.len() != d {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected {d} columns, found {}", row.len()),
                });
            }
        } else {
            d = Some(row.len());
        }
        rows.push(row);
    }
    let d = d.ok_or(Error::Parse { line: 0, msg: "no data rows".into() })?;
    if let Some(n) = declared_n {
        if n != rows.len() {
            return Err(Error::Parse {
                line: 0,
                msg: format!("header declares n={n}, file has {} rows", rows.len()),
            });
        }
    }
    PointSet::new(d, rows, mode, seed)
}

/// Write recorded digit tapes as a JSON sidecar: one array per row, one
/// snapshot per column.
pub fn write_digit_tapes<W: Write>(w: &mut W, tapes: &[Vec<DigitSnapshot>]) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, tapes)
        .map_err(|e| Error::invalid(format!("serialize digit tapes: {e}")))?;
    writeln!(w)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointgen::{halton_stream, hybrid_matrix, HybridConfig, HybridMatrixGenerator, Mode};
    use crate::rational;

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("1/3").unwrap(), rational(1, 3));
        assert_eq!(parse_rational("6/8").unwrap(), rational(3, 4));
        assert_eq!(parse_rational("0").unwrap(), rational(0, 1));
        assert_eq!(parse_rational("2").unwrap(), rational(2, 1));
        assert_eq!(parse_rational("0.125").unwrap(), rational(1, 8));
        assert_eq!(parse_rational("-0.5").unwrap(), rational(-1, 2));
        assert_eq!(parse_rational(".25").unwrap(), rational(1, 4));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("0.1e3").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let p = halton_stream(&[3, 5], None, 40).unwrap();
        let mut buf = Vec::new();
        write_points_csv(&mut buf, &p).unwrap();
        let q = read_points_csv(buf.as_slice()).unwrap();
        assert_eq!(q.dim(), p.dim());
        assert_eq!(q.len(), p.len());
        assert_eq!(q.mode(), p.mode());
        assert_eq!(q.seed(), p.seed());
        for (a, b) in p.iter_points().zip(q.iter_points()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn hybrid_round_trip_keeps_seed() {
        let (p, _) = hybrid_matrix(3, 10, 42, Mode::Practical).unwrap();
        let mut buf = Vec::new();
        write_points_csv(&mut buf, &p).unwrap();
        let header = String::from_utf8(buf.clone()).unwrap();
        assert!(header.starts_with("# d=3 n=10 mode=hybrid-practical seed=42"));
        let q = read_points_csv(buf.as_slice()).unwrap();
        assert_eq!(q.seed(), Some(42));
        for (a, b) in p.iter_points().zip(q.iter_points()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn reader_accepts_bare_decimal_rows() {
        let text = "0.5,0.25\n0.75,1/3\n";
        let p = read_points_csv(text.as_bytes()).unwrap();
        assert_eq!(p.dim(), 2);
        assert_eq!(p.len(), 2);
        assert_eq!(p.point(1)[1], rational(1, 3));
    }

    #[test]
    fn reader_reports_line_numbers() {
        let text = "# d=2\nx1,x2\n1/3,1/5\noops,1/7\n";
        let err = read_points_csv(text.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
        let text = "# d=2 n=5\nx1,x2\n1/3,1/5\n";
        assert!(read_points_csv(text.as_bytes()).is_err());
        let text = "# d=3\n1/3,1/5\n";
        assert!(read_points_csv(text.as_bytes()).is_err());
    }

    #[test]
    fn digit_tapes_serialize() {
        let mut cfg = HybridConfig::new(2, 5);
        cfg.record_digits = true;
        let mut gen = HybridMatrixGenerator::new(cfg).unwrap();
        gen.generate(4).unwrap();
        let mut buf = Vec::new();
        write_digit_tapes(&mut buf, gen.recorded_digits()).unwrap();
        let parsed: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        let rows = parsed.as_array().unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].as_array().unwrap().len(), 2);
    }
}
