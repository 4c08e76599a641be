//! Sign and natural-log magnitude representation of real numbers.
//!
//! Gains and imaginary index parts of singular gallery modes range from
//! order one down to 1e-222, and intermediate factors such as `exp(-2 psi)`
//! leave the double range entirely. `LogReal` keeps these exact.


use std::cmp::Ordering;
use std::fmt;
use std::ops::{Div, Mul, Neg};

use serde::{Deserialize, Serialize};

/// `mant * 2^exp2` with `0.5 <= |mant| < 1`, or zero.
///
/// The binary exponent keeps conversions from and to `f64` exact while
/// the magnitude range is limited only by `i64`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogReal {
    mant: f64,
    exp2: i64,
}

fn frexp(v: f64) -> (f64, i64) {
    if v == 0.0 || !v.is_finite() {
        return (v, 0);
    }
    let bits = v.to_bits();
    let field = ((bits >> 52) & 0x7ff) as i64;
    if field == 0 {
        let (m, e) = frexp(v * 2f64.powi(54));
        return (m, e - 54);
    }
    let m = f64::from_bits((bits & !(0x7ff << 52)) | (1022 << 52));
    (m, field - 1022)
}

fn ldexp(mut m: f64, mut e: i64) -> f64 {
    while e > 1000 {
        m *= 2f64.powi(1000);
        e -= 1000;
        if m.is_infinite() {
            return m;
        }
    }
    while e < -1000 {
        m *= 2f64.powi(-1000);
        e += 1000;
        if m == 0.0 {
            return m;
        }
    }
    m * 2f64.powi(e as i32)
}

impl LogReal {
    pub const ZERO: LogReal = LogReal { mant: 0.0, exp2: 0 };

    pub fn from_f64(value: f64) -> Self {
        let (mant, exp2) = frexp(value);
        LogReal { mant, exp2 }
    }

    /// Builds `sign * exp(ln_abs)`. A zero sign yields zero.
    pub fn from_ln(sign: i8, ln_abs: f64) -> Self {
        if sign == 0 || ln_abs == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        let l2 = ln_abs / std::f64::consts::LN_2;
        let e = l2.floor();
        let (m, de) = frexp((ln_abs - e * std::f64::consts::LN_2).exp());
        LogReal {
            mant: f64::from(sign.signum()) * m,
            exp2: e as i64 + de,
        }
    }

    pub fn from_log10(sign: i8, log10_abs: f64) -> Self {
        Self::from_ln(sign, log10_abs * std::f64::consts::LN_10)
    }

    pub fn sign(&self) -> i8 {
        if self.mant > 0.0 {
            1
        } else if self.mant < 0.0 {
            -1
        } else {
            0
        }
    }

    pub fn ln_abs(&self) -> f64 {
        if self.mant == 0.0 {
            return f64::NEG_INFINITY;
        }
        self.mant.abs().ln() + self.exp2 as f64 * std::f64::consts::LN_2
    }

    pub fn log10_abs(&self) -> f64 {
        if self.mant == 0.0 {
            return f64::NEG_INFINITY;
        }
        self.mant.abs().log10() + self.exp2 as f64 * std::f64::consts::LOG10_2
    }

    pub fn is_zero(&self) -> bool {
        self.mant == 0.0
    }

    pub fn abs(&self) -> Self {
        LogReal {
            mant: self.mant.abs(),
            exp2: self.exp2,
        }
    }

    /// Plain floating value; saturates to 0 or infinity outside the double range.
    pub fn to_f64(&self) -> f64 {
        ldexp(self.mant, self.exp2)
    }

    /// `Some` only when the value is a normal double.
    pub fn to_f64_checked(&self) -> Option<f64> {
        let v = self.to_f64();
        if self.is_zero() || (v.is_finite() && v.abs() >= f64::MIN_POSITIVE) {
            Some(v)
        } else {
            None
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        *self * LogReal::from_f64(factor)
    }

    pub fn rel_diff(&self, other: &LogReal) -> f64 {
        if self.sign() != other.sign() {
            return f64::INFINITY;
        }
        if self.is_zero() {
            return 0.0;
        }
        let r = self.mant / other.mant * ldexp(1.0, (self.exp2 - other.exp2).clamp(-2000, 2000));
        (r - 1.0).abs()
    }
}

impl Mul for LogReal {
    type Output = LogReal;
    fn mul(self, rhs: LogReal) -> LogReal {
        let (m, e) = frexp(self.mant * rhs.mant);
        if m == 0.0 {
            return LogReal::ZERO;
        }
        LogReal {
            mant: m,
            exp2: self.exp2 + rhs.exp2 + e,
        }
    }
}

impl Div for LogReal {
    type Output = LogReal;
    fn div(self, rhs: LogReal) -> LogReal {
        assert!(!rhs.is_zero(), "LogReal division by zero");
        let (m, e) = frexp(self.mant / rhs.mant);
        if m == 0.0 {
            return LogReal::ZERO;
        }
        LogReal {
            mant: m,
            exp2: self.exp2 - rhs.exp2 + e,
        }
    }
}

impl Neg for LogReal {
    type Output = LogReal;
    fn neg(self) -> LogReal {
        LogReal {
            mant: -self.mant,
            exp2: self.exp2,
        }
    }
}

impl PartialOrd for LogReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        let mag = |a: &LogReal, b: &LogReal| {
            a.exp2
                .cmp(&b.exp2)
                .then(a.mant.abs().total_cmp(&b.mant.abs()))
        };
        match self.sign().cmp(&other.sign()) {
            Ordering::Equal => match self.sign() {
                0 => Some(Ordering::Equal),
                1 => Some(mag(self, other)),
                _ => Some(mag(other, self)),
            },
            o => Some(o),
        }
    }
}

impl fmt::Display for LogReal {
    /// Scientific notation that works outside the double range, e.g. `-1.310e-195`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let l10 = self.log10_abs();
        let mut exp = l10.floor();
        let mut mant = 10f64.powf(l10 - exp);
        let prec = f.precision().unwrap_or(3);
        let rounded = format!("{:.*}", prec, mant);
        if rounded.starts_with("10") {
            mant /= 10.0;
            exp += 1.0;
        }
        let s = if self.mant < 0.0 { "-" } else { "" };
        write!(f, "{s}{:.*}e{}", prec, mant, exp as i64)
    }
}
