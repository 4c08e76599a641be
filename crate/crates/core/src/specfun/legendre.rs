//! Associated Legendre kernels `P_l^m(cos t)`, `m P_l^m / sin t` and
//! `d/dt P_l^m(cos t)` with the Condon-Shortley phase.
//!
//! The recurrence runs on `b_lm P_l^m` (unit-norm on the sphere) and
//! carries a common log-scale, so `l ~ 700` neither overflows nor loses
//! the ratios between the three kernels when the values underflow.

use std::f64::consts::PI;

use crate::error::{Result, SgmError};
use crate::logreal::LogReal;

const RESCALE_AT: f64 = 1e200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularKernels {
    pub ell: u32,
    pub m: i32,
    pub theta: f64,
    /// Mantissas of `b_lm P`, `b_lm T1`, `b_lm T2`; multiply by
    /// `exp(ln_scale)` for the normalized values.
    pub p: f64,
    pub t1: f64,
    pub t2: f64,
    pub ln_scale: f64,
    /// `ln b_lm`.
    pub ln_norm: f64,
}

impl AngularKernels {
    /// `(b P, b T1, b T2)` as plain doubles (may underflow to zero).
    pub fn normalized(&self) -> (f64, f64, f64) {
        let s = self.ln_scale.exp();
        (self.p * s, self.t1 * s, self.t2 * s)
    }

    /// Unnormalized `(P, T1, T2)` in log form.
    pub fn raw(&self) -> (LogReal, LogReal, LogReal) {
        let s = LogReal::from_ln(1, self.ln_scale - self.ln_norm);
        (
            LogReal::from_f64(self.p) * s,
            LogReal::from_f64(self.t1) * s,
            LogReal::from_f64(self.t2) * s,
        )
    }
}

/// `ln b_lm` with `b_lm = sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!)`.
pub fn ln_norm(ell: u32, m: i32) -> f64 {
    let m = m.unsigned_abs();
    let mut ln_ratio = 0.0;
    for k in (ell - m + 1)..=(ell + m) {
        ln_ratio -= f64::from(k).ln();
    }
    0.5 * ((2.0 * f64::from(ell) + 1.0).ln() - (4.0 * PI).ln() + ln_ratio)
}

pub fn angular_kernels(ell: u32, m: i32, theta: f64) -> Result<AngularKernels> {
    let ma = m.unsigned_abs();
    if ma > ell {
        return Err(SgmError::Domain(format!("|m| = {ma} exceeds l = {ell}")));
    }
    if !(0.0..=PI).contains(&theta) {
        return Err(SgmError::Domain(format!("theta = {theta} outside [0, pi]")));
    }
    let (s, c) = theta.sin_cos();
    let at_pole = theta == 0.0 || theta == PI;
    if at_pole && m != 0 {
        return Err(SgmError::Domain(format!(
            "m = {m} kernels are singular at theta = {theta}"
        )));
    }
    let s = if at_pole { 0.0 } else { s };
    let c = if theta == PI { -1.0 } else { c };

    let mf = f64::from(ma);
    let mut ln_scale = 0.5 * ((2.0 * mf + 1.0) / (4.0 * PI)).ln();
    for k in 1..=ma {
        let k = f64::from(k);
        ln_scale += 0.5 * ((2.0 * k - 1.0) / (2.0 * k)).ln();
    }
    if ma > 0 {
        ln_scale += mf * s.ln();
    }
    let mut cur = if ma % 2 == 1 { -1.0 } else { 1.0 };
    let mut prev = 0.0;
    let mut a_prev = 1.0;
    for l in (ma + 1)..=ell {
        let lf = f64::from(l);
        let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
        let next = a * (c * cur - prev / a_prev);
        prev = cur;
        cur = next;
        a_prev = a;
        if cur.abs() > RESCALE_AT {
            cur /= RESCALE_AT;
            prev /= RESCALE_AT;
            ln_scale += RESCALE_AT.ln();
        }
    }
    let lf = f64::from(ell);
    let (t1, t2) = if at_pole {
        (0.0, 0.0)
    } else {
        let below = if ell > ma { prev } else { 0.0 };
        let cl = ((2.0 * lf + 1.0) * (lf * lf - mf * mf) / (2.0 * lf - 1.0)).sqrt();
        let cl = if ell == 0 { 0.0 } else { cl };
        (mf * cur / s, (lf * c * cur - cl * below) / s)
    };
    let sign = if m < 0 && ma % 2 == 1 { -1.0 } else { 1.0 };
    let t1_sign = if m < 0 { -1.0 } else { 1.0 };
    Ok(AngularKernels {
        ell,
        m,
        theta,
        p: sign * cur,
        t1: sign * t1_sign * t1,
        t2: sign * t2,
        ln_scale,
        ln_norm: ln_norm(ell, m),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn degree_one() {
        let k = angular_kernels(1, 0, FRAC_PI_2).unwrap();
        let (p, t1, t2) = k.raw();
        assert!(p.to_f64().abs() < 1e-16);
        assert!(t1.is_zero());
        assert_relative_eq!(t2.to_f64(), -1.0, max_relative = 1e-14);

        let k = angular_kernels(1, 1, FRAC_PI_2).unwrap();
        let (p, t1, t2) = k.raw();
        assert_relative_eq!(p.to_f64(), -1.0, max_relative = 1e-14);
        assert_relative_eq!(t1.to_f64(), -1.0, max_relative = 1e-14);
        assert!(t2.to_f64().abs() < 1e-15);
    }

    #[test]
    fn high_degree_oracle() {
        let (p, t1, t2) = angular_kernels(350, 345, 1.2).unwrap().normalized();
        assert_relative_eq!(p, -2.421_853_511_204_86e-7, max_relative = 1e-10);
        assert_relative_eq!(t1, -8.964_639_723_221_404e-5, max_relative = 1e-10);
        assert_relative_eq!(t2, -2.922_232_553_259_486e-5, max_relative = 1e-10);
    }

    #[test]
    fn negative_order_symmetry() {
        for (l, m) in [(3, 2), (7, 5), (40, 13)] {
            let a = angular_kernels(l, m, 0.7).unwrap().normalized();
            let b = angular_kernels(l, -m, 0.7).unwrap().normalized();
            let s = if m % 2 == 1 { -1.0 } else { 1.0 };
            assert_relative_eq!(b.0, s * a.0, max_relative = 1e-13);
            assert_relative_eq!(b.1, -s * a.1, max_relative = 1e-13);
            assert_relative_eq!(b.2, s * a.2, max_relative = 1e-13);
        }
    }

    #[test]
    fn poles() {
        assert!(angular_kernels(4, 1, 0.0).is_err());
        let k = angular_kernels(4, 0, 0.0).unwrap();
        let (p, t1, t2) = k.raw();
        assert_relative_eq!(p.to_f64(), 1.0, max_relative = 1e-14);
        assert!(t1.is_zero() && t2.is_zero());
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let h = 1e-6;
        for (l, m, t) in [(5, 2, 0.4), (60, 0, 1.9), (120, 100, 1.3)] {
            let k = angular_kernels(l, m, t).unwrap().normalized();
            let up = angular_kernels(l, m, t + h).unwrap().normalized().0;
            let dn = angular_kernels(l, m, t - h).unwrap().normalized().0;
            let fd = (up - dn) / (2.0 * h);
            assert!((fd - k.2).abs() <= 1e-6 * k.2.abs().max(k.0.abs()));
        }
    }

    #[test]
    fn underflowing_values_keep_ratios() {
        let k = angular_kernels(700, 700, 0.05).unwrap();
        assert_eq!(k.normalized().0, 0.0);
        assert!((k.t1 / k.p - 700.0 / 0.05f64.sin()).abs() < 1e-9 * 700.0 / 0.05);
    }
}
