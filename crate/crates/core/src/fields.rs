//! Energy density, Poynting vector and the Poynting angle of one multipole,
//! plus the vector spherical harmonics they are built from.
//!
//! Fields follow the VSH form `E = -i E(r) Phi / sqrt(L)` (TE) and
//! `H = -i H(r) Phi / sqrt(L)` (TM), `L = l(l+1)`. Exported densities are
//! normalized: `u / (eps0/4)` for TE and `u / (mu0/4)` for TM; Poynting
//! components are divided by `1/(2 Z0)` (TE) or `Z0/2` (TM).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Result, SgmError};
use crate::par::{map_ordered, Execution};
use crate::scattering::{interior_ratio, solve_coefficients, Polarization};
use crate::sgm_asymptotic::SingularityRecord;
use crate::specfun::{angular_kernels, ratio_j, sph_bessel_j, sph_hankel, AngularKernels, DebyeAngles, HankelKind};

pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
pub const MU_0: f64 = 1.256_637_062_12e-6;
pub const Z_0: f64 = 376.730_313_668;

/// One `(l, m)` multipole at a fixed wavenumber.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub pol: Polarization,
    pub ell: u32,
    pub m: i32,
    /// Vacuum wavenumber in 1/µm.
    pub k_per_um: f64,
    pub n: Complex64,
    /// Sphere radius; `None` treats every `r` as interior.
    pub radius_um: Option<f64>,
}

impl Mode {
    pub fn new(pol: Polarization, ell: u32, m: i32, lambda_nm: f64, n: Complex64, radius_um: Option<f64>) -> Result<Self> {
        if ell == 0 || m.unsigned_abs() > ell {
            return Err(SgmError::Domain(format!("need l >= 1 and |m| <= l (l = {ell}, m = {m})")));
        }
        if !(lambda_nm > 0.0) {
            return Err(SgmError::Domain(format!("wavelength must be positive, got {lambda_nm}")));
        }
        Ok(Mode {
            pol,
            ell,
            m,
            k_per_um: 2.0 * PI * 1e3 / lambda_nm,
            n,
            radius_um,
        })
    }

    fn big_l(&self) -> f64 {
        let l = f64::from(self.ell);
        l * (l + 1.0)
    }
}

/// Radial factor relative to `a0`: `|E(r)/a0|^2`, `rho = r E'/E` and the
/// local permittivity.
struct Radial {
    amp2: f64,
    rho: Complex64,
    eps: Complex64,
    kr: f64,
}

fn radial(mode: &Mode, r_um: f64) -> Result<Radial> {
    if !(r_um > 0.0) {
        return Err(SgmError::Domain(format!("radius must be positive, got {r_um}")));
    }
    let kr = mode.k_per_um * r_um;
    let inside = mode.radius_um.map_or(true, |a| r_um <= a);
    if inside {
        let z = mode.n * kr;
        let (j, _) = sph_bessel_j(mode.ell, z)?;
        Ok(Radial {
            amp2: j.norm_sqr(),
            rho: z * interior_ratio(mode.ell, z)?,
            eps: mode.n * mode.n,
            kr,
        })
    } else {
        let a = mode.radius_um.unwrap_or(r_um);
        let c = solve_coefficients(mode.pol, mode.ell, mode.k_per_um * a, mode.n)?;
        let (h1, dh1) = sph_hankel(HankelKind::First, mode.ell, kr)?;
        let (h2, dh2) = (h1.conj(), dh1.conj());
        let f = c.a1 * h1 + c.a2 * h2;
        let df = c.a1 * dh1 + c.a2 * dh2;
        let g = f / c.a0;
        Ok(Radial {
            amp2: g.norm_sqr(),
            rho: kr * df / f,
            eps: Complex64::new(1.0, 0.0),
            kr,
        })
    }
}

/// Angular factors from the kernel mantissas (common scale dropped).
struct Angular {
    p: f64,
    t1: f64,
    t2: f64,
    /// `exp(2 ln_scale)`; may underflow.
    scale2: f64,
}

impl Angular {
    fn new(k: &AngularKernels) -> Self {
        Angular {
            p: k.p,
            t1: k.t1,
            t2: k.t2,
            scale2: (2.0 * k.ln_scale).exp(),
        }
    }

    fn t0_sq(&self) -> f64 {
        self.t1 * self.t1 + self.t2 * self.t2
    }
}

fn kernels(mode: &Mode, theta: f64) -> Result<Angular> {
    if !(theta > 0.0 && theta < PI) && mode.m != 0 {
        return Err(SgmError::Domain(format!("theta = {theta} must lie in (0, pi) for m != 0")));
    }
    Ok(Angular::new(&angular_kernels(mode.ell, mode.m, theta)?))
}

/// `(A, B)` with `u ∝ A T0^2 + B P^2` (b-normalized kernels).
fn energy_weights(mode: &Mode, rad: &Radial) -> (f64, f64) {
    let big_l = mode.big_l();
    let kr2 = rad.kr * rad.kr;
    let s = (rad.rho + 1.0).norm_sqr();
    match mode.pol {
        Polarization::TE => (rad.eps.re + s / kr2, big_l * big_l / kr2),
        Polarization::TM => {
            let w = rad.eps.inv().re;
            (1.0 + w * s / kr2, w * big_l * big_l / kr2)
        }
    }
}

/// Normalized time-averaged energy density at `(r, theta)`.
pub fn energy_density(mode: &Mode, r_um: f64, theta: f64, a0_abs: f64) -> Result<f64> {
    let rad = radial(mode, r_um)?;
    let ang = kernels(mode, theta)?;
    let (a, b) = energy_weights(mode, &rad);
    let shape = a * ang.t0_sq() + b * ang.p * ang.p;
    Ok(a0_abs * a0_abs * rad.amp2 / mode.big_l() * shape * ang.scale2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Poynting {
    pub s_r: f64,
    pub s_theta: f64,
    pub s_phi: f64,
    /// Angle between the Poynting vector and the tangent plane.
    pub theta_angle: f64,
    /// Tangential flow vanishes; `theta_angle` is then `pi/2`.
    pub normal_incidence: bool,
}

/// Direction components with the common positive factor removed.
fn poynting_shape(mode: &Mode, rad: &Radial, ang: &Angular) -> (f64, f64, f64) {
    let big_l = mode.big_l();
    match mode.pol {
        Polarization::TE => (ang.t0_sq() * rad.rho.im / big_l, 0.0, ang.p * ang.t1),
        Polarization::TM => {
            let w = rad.eps.inv();
            (
                ang.t0_sq() * ((rad.rho + 1.0) * w).im / big_l,
                -ang.p * ang.t2 * w.im,
                ang.p * ang.t1 * w.re,
            )
        }
    }
}

fn angle_of(s_r: f64, tangential: f64) -> (f64, bool) {
    if tangential == 0.0 {
        let angle = if s_r == 0.0 { 0.0 } else { PI / 2.0 };
        (angle, true)
    } else {
        ((-s_r / tangential).atan(), false)
    }
}

pub fn poynting_and_theta(mode: &Mode, r_um: f64, theta: f64, a0_abs: f64) -> Result<Poynting> {
    let rad = radial(mode, r_um)?;
    let ang = kernels(mode, theta)?;
    let (sr, st, sp) = poynting_shape(mode, &rad, &ang);
    let (theta_angle, normal_incidence) = angle_of(sr, st + sp);
    let pref = a0_abs * a0_abs * rad.amp2 / rad.kr * ang.scale2;
    Ok(Poynting {
        s_r: pref * sr,
        s_theta: pref * st,
        s_phi: pref * sp,
        theta_angle,
        normal_incidence,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldSample {
    pub r_um: f64,
    pub theta: f64,
    pub u: f64,
    pub s_r: f64,
    pub s_theta: f64,
    pub s_phi: f64,
    pub theta_angle: f64,
    pub normal_incidence: bool,
}

pub fn field_sample(mode: &Mode, r_um: f64, theta: f64, a0_abs: f64) -> Result<FieldSample> {
    let s = poynting_and_theta(mode, r_um, theta, a0_abs)?;
    Ok(FieldSample {
        r_um,
        theta,
        u: energy_density(mode, r_um, theta, a0_abs)?,
        s_r: s.s_r,
        s_theta: s.s_theta,
        s_phi: s.s_phi,
        theta_angle: s.theta_angle,
        normal_incidence: s.normal_incidence,
    })
}

/// Solid-angle average of [`energy_density`] in closed form.
pub fn avg_energy_density(mode: &Mode, r_um: f64, a0_abs: f64) -> Result<f64> {
    let rad = radial(mode, r_um)?;
    let kr2 = rad.kr * rad.kr;
    let bracket = (rad.rho + 1.0).norm_sqr() + mode.big_l();
    let inner = match mode.pol {
        Polarization::TE => rad.eps.re + bracket / kr2,
        Polarization::TM => 1.0 + rad.eps.inv().re * bracket / kr2,
    };
    Ok(a0_abs * a0_abs * rad.amp2 / (4.0 * PI) * inner)
}

/// `[j' + u j/zeta]^2 + (1 + v/zeta^2) j^2` at real `zeta`.
pub fn f_pm(ell: u32, zeta: f64, u: f64, v: f64) -> Result<f64> {
    let (j, dj) = sph_bessel_j(ell, Complex64::new(zeta, 0.0))?;
    let (j, dj) = (j.re, dj.re);
    let d = dj + u * j / zeta;
    Ok(d * d + (1.0 + v / (zeta * zeta)) * j * j)
}

/// Solid-angle averaged profile at `kappa = 0`.
pub fn f_bar_plus(ell: u32, zeta: f64) -> Result<f64> {
    let l = f64::from(ell);
    f_pm(ell, zeta, 1.0, l * (l + 1.0))
}

/// `(u_-, v_-)` of the first-order gain term of `Im rho`.
pub fn minus_coefficients(pol: Polarization, ell: u32) -> (f64, f64) {
    let nu = f64::from(ell) + 0.5;
    match pol {
        Polarization::TE => (0.5, -nu * nu),
        Polarization::TM => (1.5, -(nu * nu + 2.0)),
    }
}

/// Leading order in `kappa` of [`avg_energy_density`] for a0 = 1.
pub fn avg_energy_density_leading(pol: Polarization, ell: u32, zeta: f64, eta: f64) -> Result<f64> {
    let f = f_bar_plus(ell, zeta)?;
    Ok(match pol {
        Polarization::TE => eta * eta * f / (4.0 * PI),
        Polarization::TM => f / (4.0 * PI),
    })
}

/// TE Poynting angle to first order in `kappa` at `zeta = k r eta`.
pub fn theta_leading_te(ell: u32, m: i32, zeta: f64, eta: f64, kappa: f64, theta: f64) -> Result<f64> {
    let ang = Angular::new(&angular_kernels(ell, m, theta)?);
    let t2 = ang.t1 * ang.p / ang.t0_sq();
    let rj = ratio_j(ell, Complex64::new(zeta, 0.0))?.re;
    let (u, v) = minus_coefficients(Polarization::TE, ell);
    let f_over_j2 = (rj + u / zeta).powi(2) + 1.0 + v / (zeta * zeta);
    let l = f64::from(ell);
    Ok((kappa * zeta * zeta * f_over_j2 / (eta * l * (l + 1.0) * t2)).atan())
}

/// TM Poynting angle from the leading Debye phase `phi` at `zeta`.
pub fn theta_tm_debye(ell: u32, m: i32, zeta: f64, eta: f64, kappa: f64, theta: f64) -> Result<f64> {
    let nu = f64::from(ell) + 0.5;
    let a = DebyeAngles::new(nu, (zeta / eta).min(nu * (1.0 - 1e-12)), zeta)?;
    let ang = Angular::new(&angular_kernels(ell, m, theta)?);
    let t2 = ang.t1 * ang.p / ang.t0_sq();
    let l = f64::from(ell);
    let core = (zeta * a.phi.tan() + 1.0).powi(2) + zeta * zeta - nu * nu;
    Ok((kappa * core / (eta * l * (l + 1.0) * t2)).atan())
}

/// Vector spherical harmonics in the `(r, theta, phi)` basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VshTriple {
    pub y: [Complex64; 3],
    pub psi: [Complex64; 3],
    pub phi: [Complex64; 3],
    pub ell: u32,
}

impl VshTriple {
    /// `X = -i Phi / sqrt(l(l+1))`.
    pub fn x(&self) -> [Complex64; 3] {
        let l = f64::from(self.ell);
        let s = Complex64::new(0.0, -1.0 / (l * (l + 1.0)).sqrt());
        self.phi.map(|c| c * s)
    }
}

pub fn vsh(ell: u32, m: i32, theta: f64, phi: f64) -> Result<VshTriple> {
    let (p, t1, t2) = angular_kernels(ell, m, theta)?.normalized();
    let e = Complex64::from_polar(1.0, f64::from(m) * phi);
    let i = Complex64::i();
    let zero = Complex64::new(0.0, 0.0);
    Ok(VshTriple {
        y: [e * p, zero, zero],
        psi: [zero, e * t2, i * e * t1],
        phi: [zero, -i * e * t1, e * t2],
        ell,
    })
}

pub fn dot(a: &[Complex64; 3], b: &[Complex64; 3]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pm = if n <= 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// WGM: zero of `j_l`; WGM': zero of `j_l'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ModeClass {
    Wgm,
    WgmPrime,
    SgmCandidate,
    None,
}

impl std::fmt::Display for ModeClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModeClass::Wgm => "WGM",
            ModeClass::WgmPrime => "WGM'",
            ModeClass::SgmCandidate => "SGM-candidate",
            ModeClass::None => "none",
        })
    }
}

fn real_j(ell: u32, x: f64, derivative: bool) -> Result<f64> {
    let (j, dj) = sph_bessel_j(ell, Complex64::new(x, 0.0))?;
    Ok(if derivative { dj.re } else { j.re })
}

/// Zeros of `j_l` (or `j_l'`) in `[lo, hi]`, bracketed on a fine grid and bisected.
pub fn bessel_zeros(ell: u32, lo: f64, hi: f64, derivative: bool) -> Result<Vec<f64>> {
    let step = 0.05;
    let lo = lo.max(f64::from(ell) * 0.9).max(step);
    let mut zeros = Vec::new();
    if hi <= lo {
        return Ok(zeros);
    }
    let n = ((hi - lo) / step).ceil() as usize;
    let mut a = lo;
    let mut fa = real_j(ell, a, derivative)?;
    for i in 1..=n {
        let b = (lo + i as f64 * step).min(hi);
        let fb = real_j(ell, b, derivative)?;
        if fa == 0.0 {
            zeros.push(a);
        } else if fa.signum() != fb.signum() && fb != 0.0 {
            let (mut x0, mut x1, mut f0) = (a, b, fa);
            for _ in 0..100 {
                let mid = 0.5 * (x0 + x1);
                if mid <= x0 || mid >= x1 {
                    break;
                }
                let fm = real_j(ell, mid, derivative)?;
                if fm.signum() == f0.signum() {
                    x0 = mid;
                    f0 = fm;
                } else {
                    x1 = mid;
                }
            }
            zeros.push(0.5 * (x0 + x1));
        }
        a = b;
        fa = fb;
    }
    Ok(zeros)
}

/// Classifies `zeta` against zeros of `j_l`, `j_l'` and singularity records,
/// each within relative tolerance `rel_tol`.
pub fn classify_mode(ell: u32, zeta: f64, records: &[SingularityRecord], rel_tol: f64) -> Result<ModeClass> {
    if !(zeta > 0.0) {
        return Err(SgmError::Domain(format!("zeta must be positive, got {zeta}")));
    }
    let tol = rel_tol * zeta;
    let near = |zs: &[f64]| zs.iter().any(|z| (z - zeta).abs() <= tol);
    let (lo, hi) = (zeta - 2.0 * PI, zeta + 2.0 * PI);
    if near(&bessel_zeros(ell, lo, hi, false)?) {
        return Ok(ModeClass::Wgm);
    }
    if near(&bessel_zeros(ell, lo, hi, true)?) {
        return Ok(ModeClass::WgmPrime);
    }
    if records.iter().any(|r| r.ell == ell && (r.zeta - zeta).abs() <= tol) {
        return Ok(ModeClass::SgmCandidate);
    }
    Ok(ModeClass::None)
}

/// Uniform interior grid `pi (i + 1/2) / n`.
pub fn theta_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| PI * (i as f64 + 0.5) / n as f64).collect()
}

pub fn theta_profile(mode: &Mode, r_um: f64, a0_abs: f64, thetas: &[f64], exec: Execution) -> Result<Vec<FieldSample>> {
    map_ordered(thetas, exec, |&t| field_sample(mode, r_um, t, a0_abs))
        .into_iter()
        .collect()
}

pub fn radial_profile(mode: &Mode, radii_um: &[f64], a0_abs: f64, exec: Execution) -> Result<Vec<f64>> {
    map_ordered(radii_um, exec, |&r| avg_energy_density(mode, r, a0_abs))
        .into_iter()
        .collect()
}

/// Interior strict local minima of `values`.
pub fn local_minima(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1))
        .filter(|&i| values[i] < values[i - 1] && values[i] < values[i + 1])
        .collect()
}

/// Interior strict local maxima of `values`.
pub fn local_maxima(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1))
        .filter(|&i| values[i] > values[i - 1] && values[i] > values[i + 1])
        .collect()
}

/// Golden-section search for a minimum of `f` on `[a, b]`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Minimum {
    pub theta: f64,
    pub u: f64,
    /// Below `1e-6` of the profile maximum.
    pub approx_zero: bool,
}

/// `ln` of [`energy_density`] for `a0 = 1`; finite where the value underflows.
pub fn ln_energy_density(mode: &Mode, r_um: f64, theta: f64) -> Result<f64> {
    let rad = radial(mode, r_um)?;
    let k = angular_kernels(mode.ell, mode.m, theta)?;
    let ang = Angular::new(&k);
    let (a, b) = energy_weights(mode, &rad);
    let shape = a * ang.t0_sq() + b * ang.p * ang.p;
    Ok((rad.amp2 / mode.big_l() * shape).ln() + 2.0 * k.ln_scale)
}

/// Minima of `u(theta)` on the grid `thetas`, refined by golden section.
/// Works on `ln u` so decaying polar tails never produce underflow noise.
pub fn theta_minima(mode: &Mode, r_um: f64, thetas: &[f64], exec: Execution) -> Result<Vec<Minimum>> {
    let ln_u: Vec<f64> = map_ordered(thetas, exec, |&t| ln_energy_density(mode, r_um, t))
        .into_iter()
        .collect::<Result<_>>()?;
    let ln_max = ln_u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let f = |t: f64| ln_energy_density(mode, r_um, t).unwrap_or(f64::INFINITY);
    Ok(local_minima(&ln_u)
        .into_iter()
        .map(|i| {
            let (t, v) = golden_min(f, thetas[i - 1], thetas[i + 1], 1e-10);
            Minimum {
                theta: t,
                u: v.exp(),
                approx_zero: v <= ln_max + 1e-6f64.ln(),
            }
        })
        .collect())
}

/// Peaks of a profile sampled on `(0, a]`: interior maxima plus the
/// endpoint when the profile is still rising there.
pub fn count_peaks(values: &[f64]) -> usize {
    let n = values.len();
    let end = n >= 2 && values[n - 1] > values[n - 2];
    local_maxima(values).len() + usize::from(end)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mode(pol: Polarization, ell: u32, m: i32, kappa: f64) -> Mode {
        Mode::new(pol, ell, m, 808.0, Complex64::new(1.82, kappa), None).unwrap()
    }

    #[test]
    fn degree_one_harmonics() {
        let v = vsh(1, 0, PI / 2.0, 0.0).unwrap();
        let b10 = (3.0 / (4.0 * PI)).sqrt();
        assert!(v.y[0].norm() < 1e-16);
        assert_relative_eq!(v.psi[1].re, -b10, max_relative = 1e-14);
        assert!(v.psi[2].norm() < 1e-16);
    }

    #[test]
    fn pointwise_orthogonality() {
        for (l, m, t, p) in [(5, 3, 0.7, 0.3), (20, -18, 2.1, 1.0), (60, 0, 1.3, 2.0)] {
            let v = vsh(l, m, t, p).unwrap();
            for (a, b) in [(&v.y, &v.psi), (&v.y, &v.phi), (&v.psi, &v.phi)] {
                assert!(dot(a, b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(12);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert_relative_eq!(s, 2.0 / 11.0, max_relative = 1e-14);
        assert_relative_eq!(w.iter().sum::<f64>(), 2.0, max_relative = 1e-14);
    }

    #[test]
    fn zero_amplitude_gives_zero_density() {
        let md = mode(Polarization::TE, 20, 18, -1e-4);
        assert_eq!(energy_density(&md, 10.0, 1.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn lossless_interior_flow_is_tangential() {
        let md = mode(Polarization::TE, 20, 18, 0.0);
        let s = poynting_and_theta(&md, 3.0, 1.2, 1.0).unwrap();
        assert_eq!(s.s_r, 0.0);
        assert_eq!(s.theta_angle, 0.0);
        assert!(s.s_phi > 0.0);
    }

    #[test]
    fn zonal_modes_have_no_tangential_flow() {
        let md = mode(Polarization::TE, 20, 0, -1e-4);
        let s = poynting_and_theta(&md, 3.0, 1.2, 1.0).unwrap();
        assert!(s.normal_incidence);
        assert_eq!(s.theta_angle, PI / 2.0);
    }

    #[test]
    fn average_matches_leading_order_without_gain() {
        for pol in [Polarization::TE, Polarization::TM] {
            let md = mode(pol, 30, 7, 0.0);
            let r = 5.0;
            let zeta = md.k_per_um * r * 1.82;
            let exact = avg_energy_density(&md, r, 1.0).unwrap();
            let lead = avg_energy_density_leading(pol, 30, zeta, 1.82).unwrap();
            assert_relative_eq!(exact, lead, max_relative = 1e-12);
        }
    }

    #[test]
    fn bessel_zeros_interlace() {
        let zj = bessel_zeros(40, 1.0, 120.0, false).unwrap();
        let zd = bessel_zeros(40, 1.0, 120.0, true).unwrap();
        assert!(!zj.is_empty());
        assert!(zd[0] < zj[0]);
        for w in zj.windows(2) {
            assert_eq!(zd.iter().filter(|&&z| z > w[0] && z < w[1]).count(), 1);
        }
    }

    #[test]
    fn classification() {
        let z = bessel_zeros(600, 600.0, 640.0, false).unwrap();
        assert_eq!(classify_mode(600, z[0], &[], 1e-6).unwrap(), ModeClass::Wgm);
        let zd = bessel_zeros(600, 600.0, 640.0, true).unwrap();
        assert_eq!(classify_mode(600, zd[0], &[], 1e-6).unwrap(), ModeClass::WgmPrime);
        assert_eq!(classify_mode(600, 300.25, &[], 1e-6).unwrap(), ModeClass::None);
    }
}
