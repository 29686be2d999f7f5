//! Complex literals: `a+bi`, `a-bi`, `bi`, `a`, with optional spaces.

use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub fn parse_complex(s: &str) -> Result<Complex64> {
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let compact = compact.replace('j', "i");
    if compact.is_empty() {
        return Err(Error::usage("empty complex literal"));
    }
    Complex64::from_str(&compact)
        .ok()
        .filter(|z| z.re.is_finite() && z.im.is_finite())
        .ok_or_else(|| Error::usage(format!("cannot parse complex literal '{s}'")))
}

/// Formats a complex number as `a+bi` with full round-trip precision.
pub fn format_complex(z: Complex64) -> String {
    if z.im.is_sign_negative() {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    #[allow(clippy::approx_constant)]
    fn literals() {
        assert_eq!(
            parse_complex("0.7071+0.7071i").unwrap(),
            Complex64::new(0.7071, 0.7071)
        );
        assert_eq!(
            parse_complex(" 1 - 2i ").unwrap(),
            Complex64::new(1.0, -2.0)
        );
        assert_eq!(parse_complex("i").unwrap(), Complex64::new(0.0, 1.0));
        assert_eq!(parse_complex("3i").unwrap(), Complex64::new(0.0, 3.0));
        assert_eq!(parse_complex("-2.5").unwrap(), Complex64::new(-2.5, 0.0));
        assert_eq!(
            parse_complex("1e-3+2e2i").unwrap(),
            Complex64::new(1e-3, 200.0)
        );
        assert!(parse_complex("1+").is_err());
        assert!(parse_complex("").is_err());
        assert!(parse_complex("abc").is_err());
    }

    #[test]
    fn format_round_trips() {
        for z in [
            Complex64::new(0.1, -0.2),
            Complex64::new(-3.0, 1e-17),
            Complex64::new(0.0, 0.0),
        ] {
            assert_eq!(parse_complex(&format_complex(z)).unwrap(), z);
        }
    }
}
