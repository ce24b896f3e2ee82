//! Parsing of the textual number lists accepted on the command line.

use std::str::FromStr;

use anyhow::{anyhow, bail, Result};
use num_rational::BigRational;
use tnpur::{Exact, C64};

pub trait ParseScalar: Sized {
    fn parse_one(s: &str) -> Result<Self>;
}

impl ParseScalar for Exact {
    fn parse_one(s: &str) -> Result<Self> {
        let q = BigRational::from_str(s).map_err(|_| anyhow!("`{s}` is not an integer or fraction p/q"))?;
        Ok(Exact::new(q, BigRational::from_integer(0.into())))
    }
}

impl ParseScalar for C64 {
    fn parse_one(s: &str) -> Result<Self> {
        if let Some((p, q)) = s.split_once('/') {
            let (p, q): (f64, f64) = (p.trim().parse()?, q.trim().parse()?);
            return Ok(C64::new(p / q, 0.0));
        }
        C64::from_str(s).map_err(|_| anyhow!("`{s}` is not a number (examples: 3, -0.5, 1+2i)"))
    }
}

/// Comma-separated list.
pub fn parse_values<T: ParseScalar>(text: &str) -> Result<Vec<T>> {
    let items: Vec<&str> = text.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        bail!("empty value list");
    }
    items.into_iter().map(T::parse_one).collect()
}

/// Groups separated by `;`.
pub fn parse_families<T: ParseScalar>(text: &str) -> Result<Vec<Vec<T>>> {
    text.split(';').map(parse_values).collect()
}

/// `a..b` (inclusive), `a..=b`, or a comma-separated list.
pub fn parse_lengths(text: &str) -> Result<Vec<usize>> {
    let text = text.trim();
    let lengths: Vec<usize> = if let Some((lo, hi)) = text.split_once("..") {
        let hi = hi.strip_prefix('=').unwrap_or(hi);
        let (lo, hi): (usize, usize) = (lo.trim().parse()?, hi.trim().parse()?);
        (lo..=hi).collect()
    } else {
        text.split(',').map(|s| s.trim().parse::<usize>()).collect::<std::result::Result<_, _>>()?
    };
    if lengths.is_empty() || lengths.contains(&0) {
        bail!("lengths `{text}` must be a nonempty set of positive integers");
    }
    Ok(lengths)
}

fn fmt_real(x: f64) -> String {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        format!("{}", r as i64)
    } else {
        let s = format!("{x:.10}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// `{1, 2}` style rendering; imaginary parts below 1e-9 relative are dropped.
pub fn display_multiset(xs: &[C64]) -> String {
    let mut xs = xs.to_vec();
    xs.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let parts: Vec<String> = xs
        .iter()
        .map(|z| {
            if z.im.abs() <= 1e-9 * z.norm().max(1.0) {
                fmt_real(z.re)
            } else {
                let sign = if z.im < 0.0 { '-' } else { '+' };
                format!("{}{sign}{}i", fmt_real(z.re), fmt_real(z.im.abs()))
            }
        })
        .collect();
    format!("{{{}}}", parts.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lengths_syntax() {
        assert_eq!(parse_lengths("1..4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_lengths("2..=3").unwrap(), vec![2, 3]);
        assert_eq!(parse_lengths("1, 5,2").unwrap(), vec![1, 5, 2]);
        assert!(parse_lengths("0..2").is_err());
        assert!(parse_lengths("3..1").is_err());
    }

    #[test]
    fn value_syntax() {
        let q: Vec<Exact> = parse_values("3, -3/6").unwrap();
        assert_eq!(q[1].re, BigRational::new((-1).into(), 2.into()));
        let z: Vec<C64> = parse_values("1+2i,1/4").unwrap();
        assert_eq!(z, vec![C64::new(1.0, 2.0), C64::new(0.25, 0.0)]);
        assert!(parse_values::<Exact>("0.5").is_err());
    }

    #[test]
    fn multiset_display() {
        let xs = [C64::new(2.0 + 1e-13, 1e-14), C64::new(1.0, 0.0), C64::new(0.5, -1.5)];
        assert_eq!(display_multiset(&xs), "{0.5-1.5i, 1, 2}");
    }
}
