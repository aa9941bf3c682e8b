//! Extended reals and per-state value outcomes.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A real number extended with `+inf` and `-inf`.
///
/// `Finite` never holds a NaN or an infinite float; use [`ExtReal::from_f64`]
/// when converting from raw floating-point results.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ExtReal {
    Finite(f64),
    PlusInfinity,
    MinusInfinity,
}

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal::Finite(0.0);

    /// Maps IEEE infinities onto the tagged variants. NaN has no extended-real
    /// meaning and yields `None`.
    pub fn from_f64(x: f64) -> Option<Self> {
        if x.is_nan() {
            None
        } else if x == f64::INFINITY {
            Some(ExtReal::PlusInfinity)
        } else if x == f64::NEG_INFINITY {
            Some(ExtReal::MinusInfinity)
        } else {
            Some(ExtReal::Finite(x))
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            ExtReal::Finite(x) => Some(x),
            _ => None,
        }
    }

    pub fn neg(self) -> Self {
        match self {
            ExtReal::Finite(x) => ExtReal::Finite(-x),
            ExtReal::PlusInfinity => ExtReal::MinusInfinity,
            ExtReal::MinusInfinity => ExtReal::PlusInfinity,
        }
    }

    /// Sum in the extended reals; `+inf + -inf` is undefined.
    pub fn checked_add(self, other: Self) -> Option<Self> {
        use ExtReal::*;
        match (self, other) {
            (Finite(a), Finite(b)) => Some(Finite(a + b)),
            (PlusInfinity, MinusInfinity) | (MinusInfinity, PlusInfinity) => None,
            (PlusInfinity, _) | (_, PlusInfinity) => Some(PlusInfinity),
            (MinusInfinity, _) | (_, MinusInfinity) => Some(MinusInfinity),
        }
    }

    fn rank(&self) -> (i8, f64) {
        match *self {
            ExtReal::MinusInfinity => (-1, 0.0),
            ExtReal::Finite(x) => (0, x),
            ExtReal::PlusInfinity => (1, 0.0),
        }
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        let (ra, xa) = self.rank();
        let (rb, xb) = other.rank();
        match ra.cmp(&rb) {
            Ordering::Equal => xa.partial_cmp(&xb),
            ord => Some(ord),
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ExtReal::Finite(x) => f.write_str(&format_sig(x, 12)),
            ExtReal::PlusInfinity => f.write_str("+inf"),
            ExtReal::MinusInfinity => f.write_str("-inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NonExistReason {
    /// The horizon sequence has at least two distinct accumulation points.
    Oscillation,
    /// The numeric probe could not classify the horizon sequence.
    UndeterminedNumeric,
}

impl fmt::Display for NonExistReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NonExistReason::Oscillation => f.write_str("oscillation"),
            NonExistReason::UndeterminedNumeric => f.write_str("undetermined-numeric"),
        }
    }
}

/// Infinite-horizon value of one state: the limit exists (possibly infinite)
/// or it does not.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ValueOutcome {
    Exists(ExtReal),
    NonExistent(NonExistReason),
}

impl ValueOutcome {
    pub fn finite(x: f64) -> Self {
        ValueOutcome::Exists(ExtReal::Finite(x))
    }

    /// `Some(x)` iff the value exists and is a finite real.
    pub fn finite_value(&self) -> Option<f64> {
        match self {
            ValueOutcome::Exists(v) => v.finite(),
            ValueOutcome::NonExistent(_) => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.finite_value().is_some()
    }

    pub fn exists(&self) -> bool {
        matches!(self, ValueOutcome::Exists(_))
    }
}

impl fmt::Display for ValueOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueOutcome::Exists(v) => v.fmt(f),
            ValueOutcome::NonExistent(reason) => write!(f, "nonexistent({reason})"),
        }
    }
}

/// Renders `x` with `digits` significant digits, dropping trailing zeros.
/// Plain notation is used for decimal exponents in `-6..21`, scientific
/// notation otherwise.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "+inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", digits.saturating_sub(1), x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    let negative = mantissa.starts_with('-');
    let digits_only: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let digits_only = digits_only.trim_end_matches('0');
    let digits_only = if digits_only.is_empty() { "0" } else { digits_only };
    let sign = if negative { "-" } else { "" };

    if (-6..21).contains(&exp) {
        let body = if exp < 0 {
            format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits_only)
        } else {
            let int_len = exp as usize + 1;
            if digits_only.len() <= int_len {
                format!("{}{}", digits_only, "0".repeat(int_len - digits_only.len()))
            } else {
                format!("{}.{}", &digits_only[..int_len], &digits_only[int_len..])
            }
        };
        format!("{sign}{body}")
    } else {
        let frac = &digits_only[1..];
        if frac.is_empty() {
            format!("{sign}{}e{exp}", &digits_only[..1])
        } else {
            format!("{sign}{}.{}e{exp}", &digits_only[..1], frac)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_total_on_extended_line() {
        let mut xs = vec![
            ExtReal::PlusInfinity,
            ExtReal::Finite(3.0),
            ExtReal::MinusInfinity,
            ExtReal::Finite(-7.5),
        ];
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(
            xs,
            vec![
                ExtReal::MinusInfinity,
                ExtReal::Finite(-7.5),
                ExtReal::Finite(3.0),
                ExtReal::PlusInfinity
            ]
        );
    }

    #[test]
    fn from_f64_rejects_nan() {
        assert_eq!(ExtReal::from_f64(f64::NAN), None);
        assert_eq!(ExtReal::from_f64(f64::INFINITY), Some(ExtReal::PlusInfinity));
    }

    #[test]
    fn infinite_sum_of_opposite_signs_is_undefined() {
        assert_eq!(ExtReal::PlusInfinity.checked_add(ExtReal::MinusInfinity), None);
        assert_eq!(
            ExtReal::Finite(1.0).checked_add(ExtReal::MinusInfinity),
            Some(ExtReal::MinusInfinity)
        );
    }

    #[test]
    fn significant_digit_rendering() {
        assert_eq!(format_sig(2.0, 12), "2");
        assert_eq!(format_sig(-0.525, 12), "-0.525");
        assert_eq!(format_sig(1.0 / 3.0, 12), "0.333333333333");
        assert_eq!(format_sig(-2.0 / 3.0, 12), "-0.666666666667");
        assert_eq!(format_sig(1234567.0, 12), "1234567");
        assert_eq!(format_sig(1e-9, 12), "1e-9");
        assert_eq!(format_sig(6.25e22, 12), "6.25e22");
        assert_eq!(format_sig(0.0625, 12), "0.0625");
        assert_eq!(format_sig(-0.0, 12), "0");
    }

    #[test]
    fn outcome_tokens() {
        assert_eq!(
            ValueOutcome::NonExistent(NonExistReason::Oscillation).to_string(),
            "nonexistent(oscillation)"
        );
        assert_eq!(ValueOutcome::Exists(ExtReal::MinusInfinity).to_string(), "-inf");
    }
}
