use num_complex::Complex64;

use crate::CliError;

/// Parses `1.5`, `-2i`, `0.3-0.2i`, `1e-3+4.5e-1i` and `i`.
pub fn complex(s: &str) -> Result<Complex64, CliError> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || CliError::Usage(format!("cannot parse complex number '{s}'"));
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix(['i', 'j']) else {
        return t.parse::<f64>().map(|re| Complex64::new(re, 0.0)).map_err(|_| bad());
    };
    let split = body
        .char_indices()
        .skip(1)
        .filter(|&(k, c)| (c == '+' || c == '-') && !matches!(body.as_bytes()[k - 1], b'e' | b'E'))
        .map(|(k, _)| k)
        .last();
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => x.parse::<f64>().map_err(|_| bad())?,
    };
    Ok(Complex64::new(re.parse::<f64>().map_err(|_| bad())?, im))
}

/// Parses `a..b`, `a..=b`, a single seed, or a comma-separated list.
pub fn seeds(s: &str) -> Result<Vec<u64>, CliError> {
    let bad = |e: String| CliError::Usage(format!("invalid seed range '{s}': {e}"));
    let num = |x: &str| x.trim().parse::<u64>().map_err(|e| bad(e.to_string()));
    let out: Vec<u64> = if let Some((a, b)) = s.split_once("..=") {
        (num(a)?..=num(b)?).collect()
    } else if let Some((a, b)) = s.split_once("..") {
        (num(a)?..num(b)?).collect()
    } else {
        s.split(',').map(num).collect::<Result<_, _>>()?
    };
    if out.is_empty() {
        return Err(bad("range is empty".into()));
    }
    Ok(out)
}

pub fn format_complex(z: Complex64) -> String {
    let tidy = |v: f64| if v.abs() < 5e-16 { 0.0 } else { v };
    format!("{:.15}{:+.15}i", tidy(z.re), tidy(z.im))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_forms() {
        assert_eq!(complex("1.5").unwrap(), Complex64::new(1.5, 0.0));
        assert_eq!(complex("0.0+1.5i").unwrap(), Complex64::new(0.0, 1.5));
        assert_eq!(complex("-0.3-0.2i").unwrap(), Complex64::new(-0.3, -0.2));
        assert_eq!(complex("1e-3+2e-1i").unwrap(), Complex64::new(1e-3, 0.2));
        assert_eq!(complex("-i").unwrap(), Complex64::new(0.0, -1.0));
        assert_eq!(complex("2.5i").unwrap(), Complex64::new(0.0, 2.5));
        assert!(complex("abc").is_err());
    }

    #[test]
    fn seed_forms() {
        assert_eq!(seeds("0..3").unwrap(), vec![0, 1, 2]);
        assert_eq!(seeds("2..=3").unwrap(), vec![2, 3]);
        assert_eq!(seeds("7").unwrap(), vec![7]);
        assert_eq!(seeds("1,4").unwrap(), vec![1, 4]);
        assert!(seeds("5..5").is_err());
    }

    #[test]
    fn eval_format() {
        assert_eq!(format_complex(Complex64::new(1.0, 0.0)), "1.000000000000000+0.000000000000000i");
        assert_eq!(format_complex(Complex64::new(0.5, -0.25)), "0.500000000000000-0.250000000000000i");
        assert_eq!(format_complex(Complex64::new(-0.0, -1e-17)), "0.000000000000000+0.000000000000000i");
    }
}
