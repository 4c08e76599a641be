//! Spherical Bessel and Hankel functions at large order.
//!
//! `j_l` of complex argument comes from a continued fraction for
//! `j_{l+1}/j_l` followed by downward recurrence normalized against
//! `j_0`/`j_1`; downward recurrence is the stable direction for `j_l`
//! near the turning point `|z| ~ l + 1/2`. `y_l` of real argument uses
//! upward recurrence, which is stable for the dominant solution.

use num_complex::Complex64;

use crate::error::{Result, SgmError};

/// Largest supported order.
pub const MAX_ORDER: u32 = 2000;

const TINY: f64 = 1e-150;
const RESCALE_AT: f64 = 1e200;

/// Stopping rule for the continued fraction behind [`ratio_j`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfOptions {
    /// Stop when a Lentz update changes the value by less than this.
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for CfOptions {
    fn default() -> Self {
        CfOptions {
            rel_tol: 1e-15,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HankelKind {
    First,
    Second,
}

/// `1/z` without the underflow of `|z|^2` for tiny `z`.
fn recip(z: Complex64) -> Complex64 {
    let s = z.re.abs().max(z.im.abs());
    let w = z / s;
    w.conj() / (w.norm_sqr() * s)
}

fn check_order(ell: u32) -> Result<()> {
    if ell > MAX_ORDER {
        Err(SgmError::Range {
            ell,
            max: MAX_ORDER,
        })
    } else {
        Ok(())
    }
}

/// Logarithmic derivative `j_l'(z) / j_l(z)`.
///
/// Evaluated by modified Lentz on
/// `l/z - 1/((2l+3)/z - 1/((2l+5)/z - ...))`; `j_l` itself is never
/// formed, so the result is immune to its over- or underflow.
pub fn ratio_j(ell: u32, z: Complex64) -> Result<Complex64> {
    ratio_j_with(ell, z, &CfOptions::default())
}

pub fn ratio_j_with(ell: u32, z: Complex64, opts: &CfOptions) -> Result<Complex64> {
    check_order(ell)?;
    if z.norm() == 0.0 {
        return Err(SgmError::Domain("ratio_j at z = 0".into()));
    }
    let inv_z = recip(z);
    let l = f64::from(ell);
    let mut f = inv_z * l;
    if f.norm() == 0.0 {
        f = Complex64::new(TINY, 0.0);
    }
    let mut c = f;
    let mut d = Complex64::new(0.0, 0.0);
    for k in 1..=opts.max_iter {
        let b = inv_z * (2.0 * l + 2.0 * k as f64 + 1.0);
        d = b - d;
        if d.norm() == 0.0 {
            d = Complex64::new(TINY, 0.0);
        }
        d = recip(d);
        c = b - recip(c);
        if c.norm() == 0.0 {
            c = Complex64::new(TINY, 0.0);
        }
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).norm() < opts.rel_tol {
            return Ok(f);
        }
    }
    Err(SgmError::NearZeroDenominator {
        ell,
        iterations: opts.max_iter,
    })
}

fn j0_j1(z: Complex64) -> (Complex64, Complex64) {
    let s = z.sin();
    let c = z.cos();
    let j0 = s / z;
    let j1 = if z.norm() < 0.5 {
        let z2 = z * z;
        z / 3.0 * (1.0 - z2 / 10.0 * (1.0 - z2 / 28.0 * (1.0 - z2 / 54.0)))
    } else {
        s / (z * z) - c / z
    };
    (j0, j1)
}

/// `(j_l(z), j_l'(z))` for complex `z`.
pub fn sph_bessel_j(ell: u32, z: Complex64) -> Result<(Complex64, Complex64)> {
    check_order(ell)?;
    let zero = Complex64::new(0.0, 0.0);
    if z.norm() == 0.0 {
        return Ok(match ell {
            0 => (Complex64::new(1.0, 0.0), zero),
            1 => (zero, Complex64::new(1.0 / 3.0, 0.0)),
            _ => (zero, zero),
        });
    }
    if z.im.abs() > 700.0 {
        return Err(SgmError::Overflow(format!(
            "sin(z) overflows for Im z = {}",
            z.im
        )));
    }
    let (j0t, j1t) = j0_j1(z);
    if ell == 0 {
        return Ok((j0t, -j1t));
    }
    let ratio = ratio_j(ell, z)?;
    let l = f64::from(ell);
    let inv_z = recip(z);
    // j_{l+1}/j_l
    let up = inv_z * l - ratio;

    let mut hi = up;
    let mut cur = Complex64::new(1.0, 0.0);
    let mut ln_scale = 0.0;
    let mut j1c = zero;
    for k in (1..=ell).rev() {
        let lower = inv_z * (2.0 * f64::from(k) + 1.0) * cur - hi;
        hi = cur;
        cur = lower;
        if k == 1 {
            j1c = hi;
        }
        if cur.norm() > RESCALE_AT {
            cur /= RESCALE_AT;
            hi /= RESCALE_AT;
            ln_scale += RESCALE_AT.ln();
        }
    }
    let m = cur.norm().max(j1c.norm());
    let (j0c, j1c) = (cur / m, j1c / m);
    let weight = j0c.norm_sqr() + j1c.norm_sqr();
    let norm = (j0t * j0c.conj() + j1t * j1c.conj()) / (weight * m);
    let mag = norm.norm();
    let value = if mag == 0.0 {
        zero
    } else {
        norm / mag * (mag.ln() - ln_scale).exp()
    };
    Ok((value, ratio * value))
}

/// `(y, y', ln_scale)` with `y_l(x) = y e^ln_scale`; upward recurrence
/// rescaled whenever the iterate grows past 1e250.
fn sph_bessel_y_scaled(ell: u32, x: f64) -> Result<(f64, f64, f64)> {
    check_order(ell)?;
    if x <= 0.0 || !x.is_finite() {
        return Err(SgmError::Domain(format!("y_l requires x > 0, got {x}")));
    }
    let (s, c) = x.sin_cos();
    let y0 = -c / x;
    let y1 = -c / (x * x) - s / x;
    if ell == 0 {
        return Ok((y0, -y1, 0.0));
    }
    let (mut prev, mut cur, mut ln_scale) = (y0, y1, 0.0);
    for k in 1..ell {
        let next = (2.0 * f64::from(k) + 1.0) / x * cur - prev;
        prev = cur;
        cur = next;
        let a = cur.abs();
        if a > 1e250 {
            prev /= a;
            cur /= a;
            ln_scale += a.ln();
        }
    }
    let deriv = prev - (f64::from(ell) + 1.0) / x * cur;
    Ok((cur, deriv, ln_scale))
}

/// `(y_l(x), y_l'(x))` for real `x > 0` by upward recurrence.
pub fn sph_bessel_y(ell: u32, x: f64) -> Result<(f64, f64)> {
    let (y, dy, ln_scale) = sph_bessel_y_scaled(ell, x)?;
    let f = ln_scale.exp();
    let (y, dy) = (y * f, dy * f);
    if !(y.is_finite() && dy.is_finite()) || y.abs() > 1e300 {
        return Err(SgmError::Overflow(format!("y_{ell}({x}) exceeds the double range")));
    }
    Ok((y, dy))
}

/// `(h_l(x), h_l'(x))` of the first or second kind for real `x > 0`.
pub fn sph_hankel(kind: HankelKind, ell: u32, x: f64) -> Result<(Complex64, Complex64)> {
    let (y, dy) = sph_bessel_y(ell, x)?;
    let (j, dj) = sph_bessel_j(ell, Complex64::new(x, 0.0))?;
    let h = Complex64::new(j.re, y);
    let dh = Complex64::new(dj.re, dy);
    Ok(match kind {
        HankelKind::First => (h, dh),
        HankelKind::Second => (h.conj(), dh.conj()),
    })
}

/// Ratios of `h_l^(1)` at real `x` that residuals and reflection
/// amplitudes need, free of the raw magnitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HankelRatios {
    /// `h_l^(1)'(x) / h_l^(1)(x)`.
    pub log_deriv: Complex64,
    /// `h_l^(2)(x) / h_l^(1)(x)`, of unit modulus.
    pub conj_ratio: Complex64,
}

pub fn hankel_ratios(ell: u32, x: f64) -> Result<HankelRatios> {
    let (y, dy, ln_y) = sph_bessel_y_scaled(ell, x)?;
    let (j, dj) = sph_bessel_j(ell, Complex64::new(x, 0.0))?;
    // j in units of e^ln_y; vanishes harmlessly when y is astronomically large.
    let u = (-ln_y).exp();
    let (j, dj) = (j.re * u, dj.re * u);
    let s = j.abs().max(y.abs());
    let (jn, yn, djn, dyn_) = (j / s, y / s, dj / s, dy / s);
    let den = jn * jn + yn * yn;
    let re = (jn * djn + yn * dyn_) / den;
    // Wronskian j y' - j' y = 1/x^2 fixes the imaginary part exactly.
    let im = (-2.0 * x.ln() - 2.0 * (s.ln() + ln_y) - den.ln()).exp();
    let h = Complex64::new(jn, yn);
    Ok(HankelRatios {
        log_deriv: Complex64::new(re, im),
        conj_ratio: h.conj() / h,
    })
}

/// `h_l^(1)'(x) / h_l^(1)(x)`.
pub fn hankel_log_derivative(ell: u32, x: f64) -> Result<Complex64> {
    Ok(hankel_ratios(ell, x)?.log_deriv)
}

#[cfg(test)]
fn wronskian_defect(ell: u32, x: f64) -> f64 {
    let (j, dj) = sph_bessel_j(ell, Complex64::new(x, 0.0)).unwrap();
    let (h, dh) = sph_hankel(HankelKind::First, ell, x).unwrap();
    let w = j * dh - dj * h;
    (w * x * x / Complex64::i() - 1.0).norm()
}
