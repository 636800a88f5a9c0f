//! Working-precision policy shared by every stage of the pipeline.
//!
//! All real arithmetic runs on MPFR floats ([`rug::Float`]) at one precision
//! per pipeline run. The precision is chosen from the requested number of
//! output digits plus a budget that grows linearly with the largest
//! polynomial degree, since the Hankel moment matrix loses roughly a fixed
//! number of digits per degree.

use rug::float::Round;
use rug::ops::Pow;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Real = Float;

/// Decimal digits kept in reserve beyond `target_digits`.
pub const GUARD_DIGITS: u32 = 10;

/// Default digits budgeted per unit of polynomial degree.
pub const DEFAULT_DIGITS_PER_DEGREE: f64 = 2.0;

pub const MIN_PRECISION_BITS: u32 = 64;

const LOG2_10: f64 = std::f64::consts::LOG2_10;

/// Precision in bits needed to deliver `target_digits` correct digits for
/// degrees up to `n_max`, with the default per-degree budget.
pub fn required_precision(n_max: usize, target_digits: u32) -> u32 {
    required_precision_with(n_max, target_digits, DEFAULT_DIGITS_PER_DEGREE)
}

pub fn required_precision_with(n_max: usize, target_digits: u32, digits_per_degree: f64) -> u32 {
    let digits = f64::from(target_digits + GUARD_DIGITS) + digits_per_degree.max(0.0) * n_max as f64;
    let bits = (digits * LOG2_10).ceil() as u32;
    bits.max(MIN_PRECISION_BITS)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumericPolicy {
    pub precision_bits: u32,
    pub target_digits: u32,
    /// Precision multiplier used for audit reruns and Cholesky retries.
    pub audit_factor: u32,
}

impl NumericPolicy {
    pub fn new(precision_bits: u32, target_digits: u32) -> Result<Self> {
        let policy = NumericPolicy {
            precision_bits,
            target_digits,
            audit_factor: 2,
        };
        policy.validate()?;
        Ok(policy)
    }

    /// Policy sized for degrees up to `n_max`.
    pub fn for_degree(n_max: usize, target_digits: u32) -> Result<Self> {
        Self::new(required_precision(n_max, target_digits), target_digits)
    }

    pub fn validate(&self) -> Result<()> {
        if self.precision_bits < MIN_PRECISION_BITS {
            return Err(Error::InvalidParameter(format!(
                "precision_bits = {} is below the minimum of {MIN_PRECISION_BITS}",
                self.precision_bits
            )));
        }
        if self.target_digits == 0 {
            return Err(Error::InvalidParameter("target_digits must be positive".into()));
        }
        if self.target_digits + GUARD_DIGITS > self.working_digits() {
            return Err(Error::InvalidParameter(format!(
                "{} target digits need more than {} bits ({} guard digits)",
                self.target_digits, self.precision_bits, GUARD_DIGITS
            )));
        }
        if self.audit_factor < 2 {
            return Err(Error::InvalidParameter("audit_factor must be at least 2".into()));
        }
        Ok(())
    }

    /// Decimal digits carried by the working precision.
    pub fn working_digits(&self) -> u32 {
        (f64::from(self.precision_bits) / LOG2_10).floor() as u32
    }

    /// Same targets at `audit_factor` times the precision.
    pub fn audited(&self) -> Self {
        NumericPolicy {
            precision_bits: self.precision_bits * self.audit_factor,
            ..self.clone()
        }
    }

    pub fn real(&self, value: f64) -> Real {
        Float::with_val(self.precision_bits, value)
    }

    pub fn zero(&self) -> Real {
        Float::new(self.precision_bits)
    }

    /// `10^(-digits)` at working precision.
    pub fn ten_pow_neg(&self, digits: i64) -> Real {
        ten_pow(self.precision_bits, -digits)
    }

    /// Tolerance for identities that hold exactly: `10^(5 - target_digits)`.
    pub fn exact_tolerance(&self) -> Real {
        self.ten_pow_neg(i64::from(self.target_digits) - 5)
    }

    /// Relative agreement required between a value and its audit rerun.
    pub fn audit_tolerance(&self) -> Real {
        self.ten_pow_neg(i64::from(self.target_digits))
    }
}

pub fn ten_pow(prec: u32, exp: i64) -> Real {
    let ten = Float::with_val(prec, 10);
    let exp = i32::try_from(exp).expect("decimal exponent fits in i32");
    ten.pow(exp)
}

/// Parses a decimal string (`"2.5"`, `"1e-10"`) at the given precision.
pub fn parse_real(text: &str, prec: u32) -> Result<Real> {
    let parsed = Float::parse(text.trim())
        .map_err(|e| Error::InvalidParameter(format!("cannot parse {text:?} as a number: {e}")))?;
    Ok(Float::with_val(prec, parsed))
}

/// Scientific-notation decimal string with `digits` significant digits,
/// e.g. `-1.2500e-07`.
pub fn format_real(x: &Real, digits: u32) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let (negative, mantissa, exp) = x.to_sign_string_exp_round(10, Some(digits.max(1) as usize), Round::Nearest);
    // value = 0.mantissa * 10^exp
    let exp = i64::from(exp.unwrap_or(0)) - 1;
    let (lead, rest) = mantissa.split_at(1);
    let sign = if negative { "-" } else { "" };
    let dot = if rest.is_empty() { "" } else { "." };
    let exp_sign = if exp < 0 { '-' } else { '+' };
    format!("{sign}{lead}{dot}{rest}e{exp_sign}{:02}", exp.abs())
}

/// `|a - b| / max(|b|, 1)`.
pub fn rel_diff(a: &Real, b: &Real) -> Real {
    let prec = a.prec().max(b.prec());
    let diff = Float::with_val(prec, a - b).abs();
    let denom = Float::with_val(prec, b.abs_ref()).max(&Float::with_val(prec, 1));
    diff / denom
}

/// `|a - b| / |b|`, or `|a - b|` when `b` is zero.
pub fn rel_err(a: &Real, b: &Real) -> Real {
    let prec = a.prec().max(b.prec());
    let diff = Float::with_val(prec, a - b).abs();
    if b.is_zero() {
        diff
    } else {
        diff / Float::with_val(prec, b.abs_ref())
    }
}

/// Base-10 logarithm of `|x|` as an `f64`; `-inf` for zero.
pub fn log10_abs(x: &Real) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    Float::with_val(64, x.abs_ref()).log10().to_f64()
}
