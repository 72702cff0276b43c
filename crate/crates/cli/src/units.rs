//! Time values with unit suffixes ("82ps", "0.8ns", "20e-9").

use anyhow::{anyhow, bail, Result};

const UNITS: [(&str, f64); 5] = [("ps", 1e-12), ("ns", 1e-9), ("us", 1e-6), ("ms", 1e-3), ("s", 1.0)];

fn split(s: &str) -> (&str, Option<f64>) {
    let s = s.trim();
    for (suffix, scale) in UNITS {
        if let Some(num) = s.strip_suffix(suffix) {
            return (num.trim(), Some(scale));
        }
    }
    (s, None)
}

/// Seconds; a bare number is taken as seconds.
pub fn parse_time(s: &str) -> Result<f64> {
    let (num, scale) = split(s);
    let v: f64 = num.parse().map_err(|_| anyhow!("invalid time '{s}'"))?;
    Ok(v * scale.unwrap_or(1.0))
}

/// `lo:hi`, a unit on either bound applies to a bare other bound.
pub fn parse_window(s: &str) -> Result<(f64, f64)> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| anyhow!("window '{s}' must be lo:hi"))?;
    let (lo_num, lo_scale) = split(lo);
    let (hi_num, hi_scale) = split(hi);
    let parse = |n: &str| n.parse::<f64>().map_err(|_| anyhow!("invalid window bound in '{s}'"));
    let lo_v = parse(lo_num)? * lo_scale.or(hi_scale).unwrap_or(1.0);
    let hi_v = parse(hi_num)? * hi_scale.or(lo_scale).unwrap_or(1.0);
    if !(hi_v > lo_v) {
        bail!("window '{s}' is empty");
    }
    Ok((lo_v, hi_v))
}

/// `fast,slow` pair of windows.
pub fn parse_windows(s: &str) -> Result<((f64, f64), (f64, f64))> {
    let (a, b) = s.split_once(',').ok_or_else(|| anyhow!("expected two windows 'lo:hi,lo:hi'"))?;
    Ok((parse_window(a)?, parse_window(b)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn units() {
        assert!((parse_time("82ps").unwrap() - 82e-12).abs() < 1e-24);
        assert_eq!(parse_time("2e-9").unwrap(), 2e-9);
        assert!(parse_time("fast").is_err());
        let (f, s) = parse_windows("0:0.8ns,1.8ns:20ns").unwrap();
        assert_eq!(f.0, 0.0);
        assert!((f.1 - 0.8e-9).abs() < 1e-21 && (s.0 - 1.8e-9).abs() < 1e-21 && (s.1 - 20e-9).abs() < 1e-21);
        assert!(parse_window("3ns:1ns").is_err());
    }
}
