//! Leading-order Debye equations for singular gallery modes.
//!
//! For fixed `eta` the real part of the singularity condition depends on
//! `zeta` alone; its roots are isolated between consecutive branch points
//! `phi = pi/2 + n pi` of `tan phi`, which makes the enumeration complete.
//! The imaginary part is linear in `kappa` and is solved in log form.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, LN_2, PI};

use serde::Serialize;

use crate::error::{Result, SgmError};
use crate::logreal::LogReal;
use crate::medium;
use crate::par::{map_ordered, Execution};
use crate::scattering::Polarization;
use crate::specfun::DebyeAngles;

/// Smallest order for which the leading-order equations are trusted.
pub const MIN_ELL: u32 = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Asymptotic,
    Exact,
    Dispersive,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Asymptotic => "asymptotic",
            Method::Exact => "exact",
            Method::Dispersive => "dispersive",
        })
    }
}

/// One located spectral singularity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularityRecord {
    pub pol: Polarization,
    pub ell: u32,
    pub q: u32,
    pub zeta: f64,
    pub lambda_nm: f64,
    pub kappa: LogReal,
    /// Gain coefficient in 1/cm.
    pub gain: LogReal,
    pub method: Method,
    pub radius_um: f64,
    pub eta: f64,
    pub flags: Vec<String>,
}

impl SingularityRecord {
    pub fn near_edge(&self) -> bool {
        self.flags.iter().any(|f| f == "near_edge")
    }
}

/// `ln(4 e^{-2 psi} / (1 + 4 e^{-4 psi}))`, exact for any `psi < 0`.
fn ln_evanescent_prefactor(psi: f64) -> f64 {
    let a = 2.0 * LN_2 - 2.0 * psi;
    let b = 2.0 * LN_2 - 4.0 * psi;
    let ln_den = if b > 0.0 {
        b + (-b).exp().ln_1p()
    } else {
        b.exp().ln_1p()
    };
    a - ln_den
}

/// `(1 - 4 e^{-4 psi}) / (1 + 4 e^{-4 psi})`; saturates at -1.
fn saturation(psi: f64) -> f64 {
    let t = 2.0 * LN_2 - 4.0 * psi;
    if t > 40.0 {
        -1.0 + 2.0 * (-t).exp()
    } else {
        let e = t.exp();
        (1.0 - e) / (1.0 + e)
    }
}

fn angles(ell: u32, eta: f64, zeta: f64) -> Result<DebyeAngles> {
    let nu = f64::from(ell) + 0.5;
    if !(zeta > nu && zeta < nu * eta) {
        return Err(SgmError::Domain(format!(
            "zeta = {zeta} outside the window ({nu}, {})",
            nu * eta
        )));
    }
    DebyeAngles::new(nu, zeta / eta, zeta)
}

/// Real part of the leading-order singularity condition.
pub fn real_residual(pol: Polarization, ell: u32, eta: f64, zeta: f64) -> Result<f64> {
    let a = angles(ell, eta, zeta)?;
    let base = saturation(a.psi) * a.beta.sinh();
    Ok(match pol {
        Polarization::TE => base - eta * a.phi.tan(),
        Polarization::TM => base - a.phi.tan() / eta + (eta * eta - 1.0) / (2.0 * eta * zeta),
    })
}

/// `kappa` solving the imaginary part at a root of [`real_residual`].
pub fn kappa_of_root(pol: Polarization, ell: u32, eta: f64, zeta: f64) -> Result<LogReal> {
    let a = angles(ell, eta, zeta)?;
    let ln_num = ln_evanescent_prefactor(a.psi) + a.beta.sinh().ln();
    let den = match pol {
        Polarization::TE => {
            let c = a.phi.cos();
            let ca = a.alpha.cos();
            zeta * (1.0 / (c * c) - ca * ca)
        }
        Polarization::TM => {
            let t = a.phi.tan() + 1.0 / zeta;
            let e2 = eta * eta;
            zeta / e2 * (t * t + 1.0 - (a.nu * a.nu + 2.0) / (zeta * zeta)) + 2.0 / (zeta * e2)
        }
    };
    if !(den > 0.0) {
        return Err(SgmError::NonGainKappa(-den.signum()));
    }
    Ok(LogReal::from_ln(-1, ln_num - den.ln()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumerationOptions {
    /// Relative margin kept from both window edges.
    pub margin: f64,
    /// Relative distance from a window edge that sets the `near_edge` flag.
    pub near_edge: f64,
    /// Final bracket width in `zeta`.
    pub bisect_tol: f64,
    pub newton_steps: usize,
    /// Central-difference step in `zeta`.
    pub fd_step: f64,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        EnumerationOptions {
            margin: 1e-6,
            near_edge: 1e-3,
            bisect_tol: 1e-10,
            newton_steps: 2,
            fd_step: 1e-6,
        }
    }
}

fn phi_of_alpha(nu: f64, alpha: f64) -> f64 {
    nu * (alpha.tan() - alpha) - FRAC_PI_4
}

/// `zeta` with `phi(zeta) = target`, by bisection in `alpha`.
fn zeta_at_phase(nu: f64, target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, FRAC_PI_2);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi_of_alpha(nu, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    nu / (0.5 * (lo + hi)).cos()
}

fn bisect<F: Fn(f64) -> Result<f64>>(f: &F, mut a: f64, mut b: f64, left_positive: bool, tol: f64) -> Result<f64> {
    while b - a > tol {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if (f(m)? > 0.0) == left_positive {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

fn polish<F: Fn(f64) -> Result<f64>>(f: &F, mut z: f64, a: f64, b: f64, opts: &EnumerationOptions) -> Result<f64> {
    let mut fz = f(z)?;
    for _ in 0..opts.newton_steps {
        let h = opts.fd_step;
        if z - h <= a || z + h >= b {
            break;
        }
        let d = (f(z + h)? - f(z - h)?) / (2.0 * h);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let next = z - fz / d;
        if !(next > a && next < b) {
            break;
        }
        let fn_ = f(next)?;
        if fn_.abs() >= fz.abs() {
            break;
        }
        z = next;
        fz = fn_;
    }
    Ok(z)
}

/// All roots of [`real_residual`] in the Debye window, with `q = 1, 2, ...`
/// in increasing `zeta`.
pub fn enumerate_sgm(pol: Polarization, ell: u32, radius_um: f64, eta: f64) -> Result<Vec<SingularityRecord>> {
    enumerate_sgm_with(pol, ell, radius_um, eta, &EnumerationOptions::default())
}

pub fn enumerate_sgm_with(
    pol: Polarization,
    ell: u32,
    radius_um: f64,
    eta: f64,
    opts: &EnumerationOptions,
) -> Result<Vec<SingularityRecord>> {
    if ell < MIN_ELL {
        return Err(SgmError::Domain(format!(
            "leading-order equations need l >= {MIN_ELL}, got {ell}"
        )));
    }
    if !(eta > 1.0) || !(radius_um > 0.0) {
        return Err(SgmError::Domain(format!(
            "need eta > 1 and a positive radius (eta = {eta}, a = {radius_um})"
        )));
    }
    let nu = f64::from(ell) + 0.5;
    let lo = nu * (1.0 + opts.margin);
    let hi = nu * eta * (1.0 - opts.margin);
    let phase = |z: f64| phi_of_alpha(nu, (nu / z).acos());
    let (p_lo, p_hi) = (phase(lo), phase(hi));

    let mut edges = vec![lo];
    let mut n = ((p_lo - FRAC_PI_2) / PI).ceil();
    loop {
        let p = FRAC_PI_2 + n * PI;
        if p >= p_hi {
            break;
        }
        if p > p_lo {
            edges.push(zeta_at_phase(nu, p));
        }
        n += 1.0;
    }
    edges.push(hi);

    let f = |z: f64| real_residual(pol, ell, eta, z);
    let last = edges.len() - 2;
    let mut roots = Vec::new();
    for i in 0..=last {
        let (a, b) = (edges[i], edges[i + 1]);
        let nudge = 1e-12 * (b - a);
        let a_in = if i == 0 { a } else { a + nudge };
        let b_in = if i == last { b } else { b - nudge };
        let (fa, fb) = (f(a_in)?, f(b_in)?);
        let interior = i > 0 && i < last;
        if interior && !(fa > 0.0 && fb < 0.0) {
            return Err(SgmError::Bracket(format!(
                "{pol} l = {ell}: no sign change between branch points {a} and {b} (f = {fa:e}, {fb:e})"
            )));
        }
        if !(fa > 0.0 && fb < 0.0) {
            continue;
        }
        let z = bisect(&f, a_in, b_in, true, opts.bisect_tol)?;
        roots.push(polish(&f, z, a_in, b_in, opts)?);
    }

    roots
        .iter()
        .enumerate()
        .map(|(i, &zeta)| {
            let kappa = kappa_of_root(pol, ell, eta, zeta)?;
            let lambda_nm = medium::wavelength_from_size(radius_um, zeta / eta);
            let gain = medium::gain_from_kappa(lambda_nm, kappa)?;
            let mut flags = Vec::new();
            if zeta < nu * (1.0 + opts.near_edge) || zeta > nu * eta * (1.0 - opts.near_edge) {
                flags.push("near_edge".to_string());
            }
            Ok(SingularityRecord {
                pol,
                ell,
                q: i as u32 + 1,
                zeta,
                lambda_nm,
                kappa,
                gain,
                method: Method::Asymptotic,
                radius_um,
                eta,
                flags,
            })
        })
        .collect()
}

/// [`enumerate_sgm`] over several orders; output follows `ells`.
pub fn enumerate_many(
    pol: Polarization,
    ells: &[u32],
    radius_um: f64,
    eta: f64,
    exec: Execution,
) -> Vec<Result<Vec<SingularityRecord>>> {
    map_ordered(ells, exec, |&ell| enumerate_sgm(pol, ell, radius_um, eta))
}

/// Per-order summary: mode count, wavelength range and smallest gain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub pol: Polarization,
    pub ell: u32,
    pub q_max: u32,
    pub lambda_min_nm: f64,
    pub lambda_max_nm: f64,
    pub g_min: LogReal,
}

pub fn summarize(records: &[SingularityRecord]) -> Option<SummaryRow> {
    let first = records.first()?;
    let lambda_min_nm = records.iter().map(|r| r.lambda_nm).fold(f64::INFINITY, f64::min);
    let lambda_max_nm = records.iter().map(|r| r.lambda_nm).fold(f64::NEG_INFINITY, f64::max);
    let g_min = records
        .iter()
        .map(|r| r.gain)
        .min_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal))?;
    Some(SummaryRow {
        pol: first.pol,
        ell: first.ell,
        q_max: records.len() as u32,
        lambda_min_nm,
        lambda_max_nm,
        g_min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const ETA: f64 = 1.8217;

    #[test]
    fn saturation_and_prefactor_do_not_overflow() {
        assert_eq!(saturation(-500.0), -1.0);
        assert!((saturation(0.0) + 0.6).abs() < 1e-15);
        let lp = ln_evanescent_prefactor(-300.0);
        assert!((lp + 600.0).abs() < 1e-9);
        assert!(ln_evanescent_prefactor(-1e4).is_finite());
    }

    #[test]
    fn window_is_enforced() {
        assert!(real_residual(Polarization::TE, 600, ETA, 600.0).is_err());
        assert!(real_residual(Polarization::TE, 600, ETA, 1100.0).is_err());
        assert!(enumerate_sgm(Polarization::TE, 20, 50.0, ETA).is_err());
    }

    #[test]
    fn te_first_and_hundredth_modes() {
        let recs = enumerate_sgm(Polarization::TE, 600, 50.0, ETA).unwrap();
        assert_eq!(recs.len(), 102);
        assert!((recs[0].zeta - 602.280).abs() < 2e-3);
        assert_eq!(format!("{}", recs[0].kappa), "-1.310e-195");
        assert!((recs[99].zeta - 1083.950).abs() < 2e-3);
        assert!(recs[99].kappa.rel_diff(&LogReal::from_f64(-6.452e-5)) < 0.01);
    }

    #[test]
    fn tm_third_mode_kappa() {
        let k = kappa_of_root(Polarization::TM, 600, ETA, 639.230).unwrap();
        assert!(k.rel_diff(&LogReal::from_f64(-1.504e-170)) < 0.05, "{k}");
    }

    #[test]
    fn dense_sampling_finds_the_same_roots() {
        // f cos(phi) is continuous across the branch points of tan(phi).
        for pol in [Polarization::TE, Polarization::TM] {
            let recs = enumerate_sgm(pol, 600, 50.0, ETA).unwrap();
            let nu = 600.5;
            let g = |z: f64| {
                let a = angles(600, ETA, z).unwrap();
                real_residual(pol, 600, ETA, z).unwrap() * a.phi.cos()
            };
            let (lo, hi) = (nu * (1.0 + 1e-6), nu * ETA * (1.0 - 1e-6));
            let n = 200_000;
            let mut crossings = Vec::new();
            let mut prev = g(lo);
            for i in 1..=n {
                let z = lo + (hi - lo) * i as f64 / n as f64;
                let cur = g(z);
                if cur.signum() != prev.signum() {
                    crossings.push(z);
                }
                prev = cur;
            }
            assert_eq!(crossings.len(), recs.len(), "{pol}");
            for (z, r) in crossings.iter().zip(&recs) {
                assert!((z - r.zeta).abs() < 2.0 * (hi - lo) / n as f64);
            }
        }
    }

    #[test]
    fn record_invariants() {
        for pol in [Polarization::TE, Polarization::TM] {
            for ell in [100u32, 400, 700] {
                let recs = enumerate_sgm(pol, ell, 50.0, ETA).unwrap();
                let nu = ell as f64 + 0.5;
                for (i, r) in recs.iter().enumerate() {
                    assert_eq!(r.q as usize, i + 1);
                    assert!(r.zeta > nu && r.zeta < nu * ETA);
                    let lam = 2.0 * PI * 50.0e3 * ETA / r.zeta;
                    assert!((r.lambda_nm - lam).abs() <= 1e-6);
                    assert_eq!(r.kappa.sign(), -1);
                    let g = medium::gain_from_kappa(r.lambda_nm, r.kappa).unwrap();
                    assert!(g.rel_diff(&r.gain) <= 1e-12);
                }
                for w in recs.windows(2) {
                    assert!(w[1].zeta > w[0].zeta);
                }
                let upto = recs.len().saturating_sub(3);
                for w in recs[..upto].windows(2) {
                    assert!(w[1].kappa.abs() > w[0].kappa.abs(), "{pol} l={ell} q={}", w[1].q);
                }
            }
        }
    }

    #[test]
    fn gain_decreases_with_order() {
        let s400 = summarize(&enumerate_sgm(Polarization::TE, 400, 50.0, ETA).unwrap()).unwrap();
        let s700 = summarize(&enumerate_sgm(Polarization::TE, 700, 50.0, ETA).unwrap()).unwrap();
        assert!(s700.g_min < s400.g_min);
        assert_eq!(s700.q_max, 119);
    }
}
