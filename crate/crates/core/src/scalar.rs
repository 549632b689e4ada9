//! Numeric types for compartment values.
//!
//! Compartment dynamics on discrete scales contract the infective block geometrically,
//! and a seven-year daily run pushes it below `f64::MIN_POSITIVE` long before the end
//! of the horizon. [`Wide`] keeps a full `f64` mantissa with a separate 64-bit binary
//! exponent so those values stay representable and strictly positive. Inside the
//! normal `f64` range every [`Wide`] operation rounds exactly like the corresponding
//! `f64` operation, so switching scalar types never perturbs ordinary-sized results.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic needed by the model and the integrator.
pub trait Scalar:
    Copy
    + PartialOrd
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    fn from_f64(x: f64) -> Self;

    /// Nearest `f64`; saturates to `0.0` or infinity outside the `f64` range.
    fn to_f64(self) -> f64;

    fn abs(self) -> Self;

    fn is_finite(self) -> bool;

    /// Natural logarithm as an `f64`, valid for positive values of any magnitude.
    fn ln(self) -> f64;

    /// Scientific notation with 17 significant digits.
    fn sci(self) -> String;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }

    fn to_f64(self) -> f64 {
        self
    }

    fn abs(self) -> Self {
        f64::abs(self)
    }

    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }

    fn ln(self) -> f64 {
        f64::ln(self)
    }

    fn sci(self) -> String {
        format!("{:.16e}", self)
    }
}

/// Floating-point value `mant * 2^exp` with `0.5 <= |mant| < 1` (or `mant == 0`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Wide {
    mant: f64,
    exp: i64,
}

// Exponent range in which a normalized Wide converts to a normal f64 without loss.
const F64_NORMAL_EXP: std::ops::RangeInclusive<i64> = -1021..=1024;

impl Wide {
    pub const ZERO: Wide = Wide { mant: 0.0, exp: 0 };

    fn normalize(mant: f64, exp: i64) -> Wide {
        if mant == 0.0 {
            return Wide::ZERO;
        }
        if !mant.is_finite() {
            return Wide { mant, exp: 0 };
        }
        let (m, e) = libm::frexp(mant);
        Wide {
            mant: m,
            exp: exp + i64::from(e),
        }
    }

    /// Builds `mant * 2^exp` exactly.
    pub fn from_parts(mant: f64, exp: i64) -> Wide {
        Wide::normalize(mant, exp)
    }

    pub fn mantissa(self) -> f64 {
        self.mant
    }

    pub fn exponent(self) -> i64 {
        self.exp
    }

    /// `10^k` to within a few ulps.
    fn pow10(k: i64) -> Wide {
        let mut base = Wide::from_f64(10.0);
        let mut acc = Wide::from_f64(1.0);
        let mut n = k.unsigned_abs();
        while n > 0 {
            if n & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            n >>= 1;
        }
        if k < 0 {
            Wide::from_f64(1.0) / acc
        } else {
            acc
        }
    }

    fn sign(self) -> i8 {
        if self.mant > 0.0 {
            1
        } else if self.mant < 0.0 {
            -1
        } else {
            0
        }
    }

    fn order_key(self) -> i64 {
        if self.mant.is_infinite() {
            i64::MAX
        } else {
            self.exp
        }
    }
}

impl Scalar for Wide {
    fn from_f64(x: f64) -> Self {
        Wide::normalize(x, 0)
    }

    fn to_f64(self) -> f64 {
        if !self.mant.is_finite() || self.mant == 0.0 {
            return self.mant;
        }
        let e = self.exp.clamp(-4000, 4000) as i32;
        libm::ldexp(self.mant, e)
    }

    fn abs(self) -> Self {
        Wide {
            mant: self.mant.abs(),
            exp: self.exp,
        }
    }

    fn is_finite(self) -> bool {
        self.mant.is_finite()
    }

    fn ln(self) -> f64 {
        self.mant.ln() + self.exp as f64 * std::f64::consts::LN_2
    }

    fn sci(self) -> String {
        if self.mant == 0.0 || !self.mant.is_finite() || F64_NORMAL_EXP.contains(&self.exp) {
            return format!("{:.16e}", self.to_f64());
        }
        let log10 = self.mant.abs().log10() + self.exp as f64 * std::f64::consts::LOG10_2;
        let mut decade = log10.floor() as i64;
        let mut lead = (self / Wide::pow10(decade)).to_f64();
        // Rounding in the decade estimate can leave the leading factor just outside [1, 10).
        if lead.abs() >= 10.0 {
            decade += 1;
            lead = (self / Wide::pow10(decade)).to_f64();
        } else if lead.abs() < 1.0 {
            decade -= 1;
            lead = (self / Wide::pow10(decade)).to_f64();
        }
        let mut digits = format!("{:.16}", lead);
        if digits.trim_start_matches('-').starts_with("10") {
            decade += 1;
            digits = format!("{:.16}", lead / 10.0);
        }
        format!("{digits}e{decade}")
    }
}

impl Add for Wide {
    type Output = Wide;

    fn add(self, rhs: Wide) -> Wide {
        if self.mant == 0.0 {
            return rhs;
        }
        if rhs.mant == 0.0 {
            return self;
        }
        if !self.mant.is_finite() || !rhs.mant.is_finite() {
            return Wide::normalize(self.mant + rhs.mant, 0);
        }
        let (big, small) = if self.exp >= rhs.exp {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let shift = big.exp - small.exp;
        if shift > 1100 {
            return big;
        }
        Wide::normalize(big.mant + libm::ldexp(small.mant, -(shift as i32)), big.exp)
    }
}

impl Sub for Wide {
    type Output = Wide;

    fn sub(self, rhs: Wide) -> Wide {
        self + (-rhs)
    }
}

impl Mul for Wide {
    type Output = Wide;

    fn mul(self, rhs: Wide) -> Wide {
        Wide::normalize(self.mant * rhs.mant, self.exp + rhs.exp)
    }
}

impl Div for Wide {
    type Output = Wide;

    fn div(self, rhs: Wide) -> Wide {
        Wide::normalize(self.mant / rhs.mant, self.exp - rhs.exp)
    }
}

impl Neg for Wide {
    type Output = Wide;

    fn neg(self) -> Wide {
        Wide {
            mant: -self.mant,
            exp: self.exp,
        }
    }
}

impl PartialOrd for Wide {
    fn partial_cmp(&self, other: &Wide) -> Option<Ordering> {
        if self.mant.is_nan() || other.mant.is_nan() {
            return None;
        }
        let (sa, sb) = (self.sign(), other.sign());
        if sa != sb {
            return Some(sa.cmp(&sb));
        }
        if sa == 0 {
            return Some(Ordering::Equal);
        }
        let magnitude = self
            .order_key()
            .cmp(&other.order_key())
            .then(self.mant.abs().partial_cmp(&other.mant.abs())?);
        Some(if sa > 0 {
            magnitude
        } else {
            magnitude.reverse()
        })
    }
}

impl fmt::Display for Wide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.sci())
    }
}
