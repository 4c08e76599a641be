//! Leading-order Debye expansions for `J_nu` in the oscillatory region
//! and `H^(1)_nu` in the evanescent region.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Result, SgmError};
use crate::logreal::LogReal;

/// Angles of the Debye expansion at order `nu`.
///
/// `alpha` belongs to the interior argument `zeta > nu`, `beta` to the
/// exterior argument `x < nu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DebyeAngles {
    pub nu: f64,
    pub alpha: f64,
    pub phi: f64,
    pub beta: f64,
    pub psi: f64,
}

impl DebyeAngles {
    pub fn new(nu: f64, x: f64, zeta: f64) -> Result<Self> {
        if !(zeta > nu) {
            return Err(SgmError::Domain(format!(
                "Debye expansion needs zeta > nu (zeta = {zeta}, nu = {nu})"
            )));
        }
        if !(x < nu) || x <= 0.0 {
            return Err(SgmError::Domain(format!(
                "Debye expansion needs 0 < x < nu (x = {x}, nu = {nu})"
            )));
        }
        let alpha = (nu / zeta).acos();
        let beta = (nu / x).acosh();
        Ok(DebyeAngles {
            nu,
            alpha,
            phi: nu * (alpha.tan() - alpha) - FRAC_PI_4,
            beta,
            psi: nu * (beta.tanh() - beta),
        })
    }
}

/// A value stored as `scale * mantissa` with the magnitude in `scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaled {
    pub scale: LogReal,
    pub mantissa: Complex64,
}

impl Scaled {
    /// Plain complex value; `None` when it leaves the double range.
    pub fn value(&self) -> Option<Complex64> {
        let s = self.scale.to_f64_checked()?;
        let v = self.mantissa * s;
        (v.re.is_finite() && v.im.is_finite()).then_some(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DebyeValues {
    pub angles: DebyeAngles,
    /// `J_nu(zeta)`.
    pub j: f64,
    /// `J_nu'(zeta)`.
    pub dj: f64,
    /// `H^(1)_nu(x)`.
    pub h1: Scaled,
    /// `H^(1)_nu'(x)`.
    pub dh1: Scaled,
}

/// Leading-order Debye values of the cylinder functions of order `nu`.
///
/// The Hankel pair is returned as `e^-psi * (e^{2 psi} -/+ 2i) / N`,
/// so neither `e^{-psi}` nor `e^{psi}` is ever formed on its own.
pub fn debye_eval(nu: f64, x: f64, zeta: f64) -> Result<DebyeValues> {
    let a = DebyeAngles::new(nu, x, zeta)?;
    let amp = (2.0 / (PI * nu * a.alpha.tan())).sqrt();
    let j = amp * a.phi.cos();
    let dj = -((2.0 * a.alpha).sin() / (PI * nu)).sqrt() * a.phi.sin();

    let e2psi = (2.0 * a.psi).exp();
    let h_scale = LogReal::from_ln(1, -a.psi - 0.5 * (2.0 * PI * nu * a.beta.tanh()).ln());
    let dh_scale = LogReal::from_ln(1, -a.psi + 0.5 * ((2.0 * a.beta).sinh() / (4.0 * PI * nu)).ln());
    Ok(DebyeValues {
        angles: a,
        j,
        dj,
        h1: Scaled {
            scale: h_scale,
            mantissa: Complex64::new(e2psi, -2.0),
        },
        dh1: Scaled {
            scale: dh_scale,
            mantissa: Complex64::new(e2psi, 2.0),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALPHA: f64 = 0.392_786_295_172_710_5;
    const BETA: f64 = 1.205_968_419_886_037_5;

    // (nu, J(zeta), J'(zeta), J(x), Y(x), J'(x), Y'(x)) at zeta = nu/cos(ALPHA),
    // x = nu/cosh(BETA); cylinder functions from mpmath at 50 digits.
    const GRID: [(f64, f64, f64, f64, f64, f64, f64); 5] = [
        (100.5, 0.027_090_326_161_040_912, -0.047_243_282_237_335_08, 2.929_602_829_417_78e-18, -1_294_097_700_030_977.9, 4.465_130_917_185_777e-18, 1_962_245_672_909_721.9),
        (200.5, -0.081_351_450_322_110_58, 0.013_516_848_816_683_839, 1.684_851_408_118_810_7e-34, -1.127_847_792_743_644e31, 2.564_749_224_148_36e-34, 1.712_426_396_115_565_8e31),
        (400.5, 0.001_538_358_903_268_698_5, -0.023_724_081_043_673_078, 7.854_420_070_527_155e-67, -1.211_172_394_652_905_6e63, 1.194_872_084_572_605_2e-66, 1.840_143_418_715_056_7e63),
        (600.5, 0.045_997_533_338_004_21, 0.007_809_242_984_465_91, 4.224_812_237_084_073e-99, -1.501_763_229_925_119e95, 6.425_722_236_885_149e-99, 2.282_135_709_574_471e95),
        (800.5, -0.032_440_534_653_857_875, 0.011_398_462_581_637_12, 2.409_875_151_071_763e-131, -1.974_993_903_744_512_4e127, 3.664_903_637_284_466e-131, 3.001_600_004_428_599e127),
    ];

    struct Errors {
        j: f64,
        dj: f64,
        hankel: f64,
    }

    fn errors_at(row: &(f64, f64, f64, f64, f64, f64, f64)) -> Errors {
        let &(nu, j, dj, jx, yx, djx, dyx) = row;
        let zeta = nu / ALPHA.cos();
        let x = nu / BETA.cosh();
        let d = debye_eval(nu, x, zeta).unwrap();
        let env = (2.0 / (PI * nu * ALPHA.tan())).sqrt();
        let denv = ((2.0 * ALPHA).sin() / (PI * nu)).sqrt();
        let h = d.h1.value().unwrap();
        let dh = d.dh1.value().unwrap();
        let parts = [
            (h.re - jx).abs() / jx.abs(),
            (h.im - yx).abs() / yx.abs(),
            (dh.re - djx).abs() / djx.abs(),
            (dh.im - dyx).abs() / dyx.abs(),
        ];
        Errors {
            j: (d.j - j).abs() / env,
            dj: (d.dj - dj).abs() / denv,
            hankel: parts.into_iter().fold(0.0, f64::max),
        }
    }

    #[test]
    fn angles_follow_definitions() {
        let a = DebyeAngles::new(600.5, 330.0, 650.0).unwrap();
        assert_eq!(a.alpha, (600.5f64 / 650.0).acos());
        assert_eq!(a.beta, (600.5f64 / 330.0).acosh());
        assert!(a.psi < 0.0);
        assert!((a.psi - 600.5 * (a.beta.tanh() - a.beta)).abs() < 1e-12);
    }

    #[test]
    fn domain_is_checked() {
        assert!(debye_eval(600.5, 330.0, 600.0).is_err());
        assert!(debye_eval(600.5, 601.0, 650.0).is_err());
    }

    #[test]
    fn leading_order_within_five_over_nu() {
        for row in &GRID {
            let nu = row.0;
            let e = errors_at(row);
            assert!(e.j <= 5.0 / nu, "nu={nu} J err*nu={}", e.j * nu);
            assert!(e.dj <= 5.0 / nu, "nu={nu} J' err*nu={}", e.dj * nu);
            assert!(e.hankel <= 5.0 / nu, "nu={nu} H err*nu={}", e.hankel * nu);
        }
    }

    #[test]
    fn hankel_error_decays_like_inverse_order() {
        let errs: Vec<f64> = GRID.iter().map(|r| errors_at(r).hankel).collect();
        for w in errs.windows(2) {
            assert!(w[1] < w[0]);
        }
        let (n0, nl) = (GRID[0].0, GRID[4].0);
        let slope = (errs[4].ln() - errs[0].ln()) / (nl.ln() - n0.ln());
        assert!((-1.5..=-0.5).contains(&slope), "slope {slope}");
    }

    #[test]
    fn scaled_pair_survives_extreme_orders() {
        let d = debye_eval(2000.5, 700.0, 2100.0).unwrap();
        assert!(d.h1.value().is_none());
        assert!(d.h1.scale.ln_abs() > 700.0);
        assert!(d.h1.mantissa.norm().is_finite());
    }
}
