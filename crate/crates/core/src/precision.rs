//! Precision policy and the software high-precision number type.

use dashu_float::ops::Abs;
use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use serde::{Deserialize, Serialize};

use crate::error::{QError, Result};

/// Binary software float used on every high-precision path.
pub type Hp = FBig<HalfEven, 2>;

const LOG2_10: f64 = std::f64::consts::LOG2_10;

/// Working precision (decimal digits) and the relative truncation tolerance
/// for infinite products and series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionCtx {
    pub work_digits: u32,
    pub tail_tol: f64,
}

impl Default for PrecisionCtx {
    fn default() -> Self {
        Self {
            work_digits: Self::DEFAULT_DIGITS,
            tail_tol: Self::DEFAULT_TAIL_TOL,
        }
    }
}

impl PrecisionCtx {
    pub const DEFAULT_DIGITS: u32 = 50;
    pub const DEFAULT_TAIL_TOL: f64 = 1e-30;

    pub fn new(work_digits: u32, tail_tol: f64) -> Result<Self> {
        if work_digits < 16 {
            return Err(QError::InvalidParams(format!(
                "work_digits must be at least 16, got {work_digits}"
            )));
        }
        if !(tail_tol > 0.0 && tail_tol < 1.0) {
            return Err(QError::InvalidParams(format!(
                "tail_tol must lie in (0, 1), got {tail_tol}"
            )));
        }
        Ok(Self {
            work_digits,
            tail_tol,
        })
    }

    /// Defaults overridden by `QF_DIGITS` / `QF_TAIL_TOL` when set.
    pub fn from_env() -> Result<Self> {
        let mut ctx = Self::default();
        if let Ok(s) = std::env::var("QF_DIGITS") {
            ctx.work_digits = s
                .trim()
                .parse()
                .map_err(|_| QError::InvalidParams(format!("QF_DIGITS={s} is not an integer")))?;
        }
        if let Ok(s) = std::env::var("QF_TAIL_TOL") {
            ctx.tail_tol = s
                .trim()
                .parse()
                .map_err(|_| QError::InvalidParams(format!("QF_TAIL_TOL={s} is not a number")))?;
        }
        Self::new(ctx.work_digits, ctx.tail_tol)
    }

    pub fn with_digits(self, work_digits: u32) -> Self {
        Self {
            work_digits,
            ..self
        }
    }

    /// Binary precision matching `work_digits`.
    pub fn bits(&self) -> usize {
        digits_to_bits(self.work_digits)
    }

    /// Series/product cut-off used on the high-precision path: the tighter of
    /// `tail_tol` and the working precision.
    pub fn hp_cutoff_log2(&self) -> f64 {
        let from_tol = self.tail_tol.log2();
        let from_digits = -(self.work_digits as f64) * LOG2_10;
        from_tol.min(from_digits) - 8.0
    }
}

pub fn digits_to_bits(digits: u32) -> usize {
    (digits as f64 * LOG2_10).ceil() as usize + 8
}

/// Exact conversion of a binary64 value, carried at `bits` precision.
pub fn hp(x: f64, bits: usize) -> Hp {
    Hp::try_from(x)
        .expect("finite binary64 value")
        .with_precision(bits)
        .value()
}

pub fn hp_one(bits: usize) -> Hp {
    hp(1.0, bits)
}

pub fn hp_zero(bits: usize) -> Hp {
    hp(0.0, bits)
}

/// Round to the nearest binary64 (ties to even).
pub fn to_f64(x: &Hp) -> f64 {
    x.to_f64().value()
}

pub fn is_zero(x: &Hp) -> bool {
    x.repr().significand().is_zero()
}

/// log2 |x| to within one unit; `-inf` for zero. Never underflows, unlike
/// converting to binary64 first.
pub fn log2_abs(x: &Hp) -> f64 {
    if is_zero(x) {
        return f64::NEG_INFINITY;
    }
    let r = x.repr();
    r.exponent() as f64 + r.digits() as f64
}

pub fn hp_abs(x: &Hp) -> Hp {
    x.clone().abs()
}

/// `base^n` for any integer `n` by binary powering.
pub fn hp_powi(base: &Hp, n: i64) -> Hp {
    let bits = base.precision().max(64);
    let mut acc = hp_one(bits);
    let mut b = base.clone().with_precision(bits).value();
    let mut e = n.unsigned_abs();
    while e > 0 {
        if e & 1 == 1 {
            acc = &acc * &b;
        }
        e >>= 1;
        if e > 0 {
            b = &b * &b;
        }
    }
    if n < 0 {
        hp_one(bits) / acc
    } else {
        acc
    }
}

/// Neumaier-compensated binary64 sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Compensated dot product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    compensated_sum(a.iter().zip(b).map(|(x, y)| x * y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ctx_validation() {
        assert!(PrecisionCtx::new(15, 1e-30).is_err());
        assert!(PrecisionCtx::new(16, 0.0).is_err());
        assert!(PrecisionCtx::new(16, 1.0).is_err());
        assert!(PrecisionCtx::new(16, 1e-20).is_ok());
    }

    #[test]
    fn powi_and_roundtrip() {
        let b = 256;
        let h = hp(0.5, b);
        assert_eq!(to_f64(&hp_powi(&h, 10)), 0.5f64.powi(10));
        assert_eq!(to_f64(&hp_powi(&h, -7)), 128.0);
        assert_eq!(to_f64(&hp_powi(&h, 0)), 1.0);
        let third = hp_one(b) / hp(3.0, b);
        assert_eq!(to_f64(&third), 1.0 / 3.0);
    }

    #[test]
    fn log2_tracks_magnitude_below_binary64_range() {
        let tiny = hp_powi(&hp(0.5, 128), 2000);
        assert!((log2_abs(&tiny) + 2000.0).abs() <= 1.0);
        assert_eq!(log2_abs(&hp_zero(64)), f64::NEG_INFINITY);
        assert_eq!(to_f64(&hp_abs(&hp(-3.0, 64))), 3.0);
    }

    #[test]
    fn compensated_sum_recovers_cancelled_bits() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(xs), 2.0);
    }
}
