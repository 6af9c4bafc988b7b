//! Plain-text dataset and parameter files.
//!
//! Dataset: a `k=<int> n=<int>` header, then `n` lines of `k` space-separated
//! `0`/`1` characters.
//!
//! Parameters: a `k=<int> m=<int>` header, `k` lines of `m` reals (rows of
//! `W`), one line of `k` reals (`b`), one line of `m` reals (`c`). Reals are
//! written in decimal notation with 17 significant digits.
//!
//! Compositional-class members: a `k=<int> m=<int> count=<int>` header, then
//! per member a `u=<int> j=<int>` line (0-based) followed by `k` lines of `m`
//! reals.

use std::collections::HashMap;
use std::fmt::Write as _;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::rademacher::TMember;
use crate::rbm::{BinaryDataset, RbmParams};

/// Decimal (non-exponent) rendering with 17 significant digits.
pub fn format_sig17(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{:.16e}", v.abs());
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let body = if v == 0.0 {
        format!("0.{}", &digits[1..])
    } else if exp >= 16 {
        format!("{digits}{}", "0".repeat((exp - 16) as usize))
    } else if exp >= 0 {
        let split = exp as usize + 1;
        format!("{}.{}", &digits[..split], &digits[split..])
    } else {
        format!("0.{}{digits}", "0".repeat((-exp - 1) as usize))
    };
    if v.is_sign_negative() && v != 0.0 {
        format!("-{body}")
    } else {
        body
    }
}

fn parse_header(line: Option<(usize, &str)>, keys: &[&str]) -> Result<Vec<usize>> {
    let (lineno, line) = line.ok_or(Error::Parse {
        line: 1,
        message: "missing header".into(),
    })?;
    let fields: HashMap<&str, &str> = line
        .split_whitespace()
        .filter_map(|tok| tok.split_once('='))
        .collect();
    keys.iter()
        .map(|key| {
            fields
                .get(key)
                .ok_or_else(|| Error::Parse {
                    line: lineno,
                    message: format!("header is missing `{key}=`"),
                })?
                .parse::<usize>()
                .map_err(|e| Error::Parse {
                    line: lineno,
                    message: format!("bad `{key}` value: {e}"),
                })
        })
        .collect()
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

pub fn write_dataset(data: &BinaryDataset) -> String {
    let mut out = format!("k={} n={}\n", data.dim(), data.len());
    for row in data.samples().rows() {
        let line: Vec<&str> = row.iter().map(|&b| if b == 1 { "1" } else { "0" }).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_dataset(text: &str) -> Result<BinaryDataset> {
    let mut lines = content_lines(text);
    let header = parse_header(lines.next(), &["k", "n"])?;
    let (k, n) = (header[0], header[1]);
    let mut flat = Vec::with_capacity(n * k);
    let mut rows = 0;
    for (lineno, line) in lines {
        let before = flat.len();
        for tok in line.split_whitespace() {
            match tok {
                "0" => flat.push(0u8),
                "1" => flat.push(1u8),
                other => {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("expected 0 or 1, found `{other}`"),
                    })
                }
            }
        }
        if flat.len() - before != k {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected {k} entries, found {}", flat.len() - before),
            });
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::Parse {
            line: 1,
            message: format!("header declares n={n} but {rows} rows follow"),
        });
    }
    let samples = Array2::from_shape_vec((n, k), flat).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    BinaryDataset::new(samples)
}

fn join_reals<'a, I: IntoIterator<Item = &'a f64>>(values: I) -> String {
    let mut s = String::new();
    for (i, v) in values.into_iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{}", format_sig17(*v));
    }
    s
}

pub fn write_params(params: &RbmParams) -> String {
    let mut out = format!("k={} m={}\n", params.visible(), params.hidden());
    for row in params.weights().rows() {
        out.push_str(&join_reals(row.iter()));
        out.push('\n');
    }
    out.push_str(&join_reals(params.visible_bias().iter()));
    out.push('\n');
    out.push_str(&join_reals(params.hidden_bias().iter()));
    out.push('\n');
    out
}

fn parse_reals(lineno: usize, line: &str, expected: usize) -> Result<Vec<f64>> {
    let values = line
        .split_whitespace()
        .map(|tok| {
            tok.parse::<f64>().map_err(|e| Error::Parse {
                line: lineno,
                message: format!("bad real `{tok}`: {e}"),
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    if values.len() != expected {
        return Err(Error::Parse {
            line: lineno,
            message: format!("expected {expected} reals, found {}", values.len()),
        });
    }
    Ok(values)
}

pub fn parse_params(text: &str) -> Result<RbmParams> {
    let mut lines = content_lines(text);
    let header = parse_header(lines.next(), &["k", "m"])?;
    let (k, m) = (header[0], header[1]);
    let mut next = |what: &str| {
        lines.next().ok_or_else(|| Error::Parse {
            line: 0,
            message: format!("missing {what} line"),
        })
    };
    let mut weights = Vec::with_capacity(k * m);
    for _ in 0..k {
        let (lineno, line) = next("weight row")?;
        weights.extend(parse_reals(lineno, line, m)?);
    }
    let (lineno, line) = next("visible bias")?;
    let b = parse_reals(lineno, line, k)?;
    let (lineno, line) = next("hidden bias")?;
    let c = parse_reals(lineno, line, m)?;
    let weights = Array2::from_shape_vec((k, m), weights).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    RbmParams::new(weights, Array1::from(b), Array1::from(c))
}

pub fn write_members(members: &[TMember]) -> Result<String> {
    let first = members
        .first()
        .ok_or_else(|| Error::InvalidArgument("no members to write".into()))?;
    let (k, m) = first.weights.dim();
    let mut out = format!("k={k} m={m} count={}\n", members.len());
    for member in members {
        if member.weights.dim() != (k, m) {
            return Err(Error::InvalidArgument("members must share one weight shape".into()));
        }
        let _ = writeln!(out, "u={} j={}", member.u, member.j);
        for row in member.weights.rows() {
            out.push_str(&join_reals(row.iter()));
            out.push('\n');
        }
    }
    Ok(out)
}

pub fn parse_members(text: &str) -> Result<Vec<TMember>> {
    let mut lines = content_lines(text);
    let header = parse_header(lines.next(), &["k", "m", "count"])?;
    let (k, m, count) = (header[0], header[1], header[2]);
    let mut members = Vec::with_capacity(count);
    for _ in 0..count {
        let index_line = lines.next();
        let lineno = index_line.map_or(0, |(l, _)| l);
        let idx = parse_header(index_line, &["u", "j"]).map_err(|_| Error::Parse {
            line: lineno,
            message: "expected a `u=<int> j=<int>` member line".into(),
        })?;
        let mut weights = Vec::with_capacity(k * m);
        for _ in 0..k {
            let (lineno, line) = lines.next().ok_or_else(|| Error::Parse {
                line: 0,
                message: "missing member weight row".into(),
            })?;
            weights.extend(parse_reals(lineno, line, m)?);
        }
        let weights = Array2::from_shape_vec((k, m), weights).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        members.push(TMember::new(weights, idx[0], idx[1])?);
    }
    if let Some((lineno, _)) = lines.next() {
        return Err(Error::Parse {
            line: lineno,
            message: format!("trailing content after {count} members"),
        });
    }
    Ok(members)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sig17_examples() {
        assert_eq!(format_sig17(0.0), "0.0000000000000000");
        assert_eq!(format_sig17(1.0), "1.0000000000000000");
        assert_eq!(format_sig17(-0.5), "-0.50000000000000000");
        assert_eq!(format_sig17(123.25), "123.25000000000000");
        assert_eq!(format_sig17(1e20), "100000000000000000000");
    }

    #[test]
    fn dataset_text_layout() {
        let d = BinaryDataset::from_rows(&[vec![0, 1, 1], vec![1, 0, 0]]).unwrap();
        let text = write_dataset(&d);
        assert_eq!(text, "k=3 n=2\n0 1 1\n1 0 0\n");
        assert_eq!(parse_dataset(&text).unwrap(), d);
    }

    #[test]
    fn dataset_parse_errors() {
        assert!(parse_dataset("").is_err());
        assert!(parse_dataset("k=2 n=1\n0 2\n").is_err());
        assert!(parse_dataset("k=2 n=2\n0 1\n").is_err());
        assert!(parse_dataset("k=2 n=1\n0 1 1\n").is_err());
        assert!(parse_dataset("n=1\n0\n").is_err());
    }

    #[test]
    fn params_round_trip_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = RbmParams::random_uniform(4, 3, 2.0, &mut rng).unwrap();
        let text = write_params(&p);
        assert!(text.starts_with("k=4 m=3\n"));
        assert_eq!(text.lines().count(), 1 + 4 + 2);
        assert_eq!(parse_params(&text).unwrap(), p);
    }

    #[test]
    fn params_parse_errors() {
        assert!(parse_params("k=1 m=1\n0.5\n0.1\n").is_err());
        assert!(parse_params("k=1 m=2\n0.5\n0.1\n0 0\n").is_err());
        assert!(parse_params("k=1 m=1\nabc\n0\n0\n").is_err());
    }

    #[test]
    fn members_round_trip() {
        let members = crate::rademacher::random_t_members(3, 2, 4, 1.0, 5).unwrap();
        let text = write_members(&members).unwrap();
        assert!(text.starts_with("k=3 m=2 count=4\n"));
        assert_eq!(parse_members(&text).unwrap(), members);
        assert!(parse_members("k=3 m=2 count=1\nu=3 j=0\n0 0\n0 0\n0 0\n").is_err());
        assert!(parse_members("k=1 m=1 count=1\nu=0 j=0\n0.5\n1\n").is_err());
    }

    proptest! {
        #[test]
        fn sig17_round_trips(v in prop::num::f64::NORMAL) {
            let s = format_sig17(v);
            prop_assert!(!s.contains('e'));
            prop_assert_eq!(s.parse::<f64>().unwrap(), v);
        }
    }
}
