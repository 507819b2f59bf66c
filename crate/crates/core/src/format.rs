//! Text encodings shared by the CSV writers.

/// Decimal text with 17 significant digits; parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Parses a `lo:hi:step` range (inclusive of `hi` up to rounding).
pub fn parse_range(spec: &str) -> crate::Result<Vec<f64>> {
    let bad = || crate::Error::InvalidInput(format!("bad range `{spec}`, expected lo:hi:step"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<crate::Result<_>>()?;
    let (lo, hi, step) = match parts.as_slice() {
        [v] => return Ok(vec![*v]),
        [lo, hi, step] => (*lo, *hi, *step),
        _ => return Err(bad()),
    };
    if !(lo.is_finite() && hi.is_finite() && step.is_finite()) || step <= 0.0 || hi < lo {
        return Err(bad());
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| lo + step * i as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(0.0), "0.0000000000000000e0");
        for x in [1.0 / 3.0, 1.44277e-4, -2.5e300, 5e-324] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("50:52:1").unwrap(), vec![50.0, 51.0, 52.0]);
        assert_eq!(parse_range("7").unwrap(), vec![7.0]);
        assert_eq!(parse_range("0:1:0.1").unwrap().len(), 11);
        assert!(parse_range("1:0:1").is_err());
        assert!(parse_range("0:1:0").is_err());
        assert!(parse_range("a:b").is_err());
    }
}
