//! Refractive-index models and unit conversions.
//!
//! Lengths are in nm at API boundaries, radii in µm and gains in cm⁻¹.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SgmError};
use crate::logreal::LogReal;

pub const NM_PER_CM: f64 = 1e7;
pub const NM_PER_UM: f64 = 1e3;

/// `eta + i kappa`; `kappa < 0` is gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexIndex {
    pub eta: f64,
    pub kappa: LogReal,
}

impl ComplexIndex {
    /// Index of a weakly amplifying or absorbing dielectric: `eta > 1`, `|kappa| < 0.1`.
    pub fn new(eta: f64, kappa: LogReal) -> Result<Self> {
        if !(eta > 1.0) || !eta.is_finite() {
            return Err(SgmError::Domain(format!("eta must exceed 1, got {eta}")));
        }
        if kappa.abs() >= LogReal::from_f64(0.1) {
            return Err(SgmError::Domain(format!("|kappa| must stay below 0.1, got {kappa}")));
        }
        Ok(ComplexIndex { eta, kappa })
    }

    pub fn lossless(eta: f64) -> Result<Self> {
        Self::new(eta, LogReal::ZERO)
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.eta, self.kappa.to_f64())
    }

    pub fn is_gain(&self) -> bool {
        self.kappa.sign() < 0
    }
}

/// Two-level doped host: `n0`, resonance `lambda0_nm`, damping
/// `gamma_hat = gamma/omega0`, and a nominal gain bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainMaterial {
    pub n0: f64,
    pub lambda0_nm: f64,
    pub gamma_hat: f64,
    pub g0_max_per_cm: f64,
}

impl GainMaterial {
    pub fn new(n0: f64, lambda0_nm: f64, gamma_hat: f64, g0_max_per_cm: f64) -> Result<Self> {
        let m = GainMaterial {
            n0,
            lambda0_nm,
            gamma_hat,
            g0_max_per_cm,
        };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        if !(self.n0 > 1.0) {
            return Err(SgmError::Config(format!("n0 must exceed 1, got {}", self.n0)));
        }
        if !(self.lambda0_nm > 0.0) {
            return Err(SgmError::Config(format!(
                "lambda0_nm must be positive, got {}",
                self.lambda0_nm
            )));
        }
        if !(self.gamma_hat > 0.0 && self.gamma_hat < 1.0) {
            return Err(SgmError::Config(format!(
                "gamma_hat must lie in (0, 1), got {}",
                self.gamma_hat
            )));
        }
        Ok(())
    }

    /// `kappa0 = -lambda0 g0 / (4 pi)`.
    pub fn kappa0(&self, g0_per_cm: f64) -> f64 {
        -self.lambda0_nm / NM_PER_CM * g0_per_cm / (4.0 * PI)
    }

    pub fn g0_from_kappa0(&self, kappa0: f64) -> f64 {
        -4.0 * PI * kappa0 / (self.lambda0_nm / NM_PER_CM)
    }

    pub fn exceeds_gain_bound(&self, g0_per_cm: f64) -> bool {
        g0_per_cm > self.g0_max_per_cm
    }
}

pub fn preset(name: &str) -> Result<GainMaterial> {
    match name.to_ascii_lowercase().as_str() {
        "ndyag" | "nd:yag" => GainMaterial::new(1.8217, 808.0, 0.003094, 0.359),
        _ => Err(SgmError::Config(format!("unknown material preset `{name}`"))),
    }
}

/// Parses a flat `key = value` material file.
pub fn parse_material(text: &str) -> Result<GainMaterial> {
    let m: GainMaterial =
        toml::from_str(text).map_err(|e| SgmError::Config(e.message().to_string()))?;
    m.validate()?;
    Ok(m)
}

pub fn load_material(path: &Path) -> Result<GainMaterial> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SgmError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_material(&text).map_err(|e| match e {
        SgmError::Config(msg) => SgmError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// A preset name or a path to a material file.
pub fn resolve_material(spec: &str) -> Result<GainMaterial> {
    match preset(spec) {
        Ok(m) => Ok(m),
        Err(_) => load_material(Path::new(spec)),
    }
}

fn lorentz_den(w: f64, gamma_hat: f64) -> f64 {
    let d = 1.0 - w * w;
    d * d + gamma_hat * gamma_hat * w * w
}

/// Real-part dispersion factor.
pub fn f1(w: f64, gamma_hat: f64) -> f64 {
    gamma_hat * (1.0 - w * w) / lorentz_den(w, gamma_hat)
}

/// Imaginary-part dispersion factor.
pub fn f2(w: f64, gamma_hat: f64) -> f64 {
    gamma_hat * gamma_hat * w / lorentz_den(w, gamma_hat)
}

/// `kappa = -lambda g / (4 pi)`.
pub fn kappa_from_gain(lambda_nm: f64, g_per_cm: LogReal) -> Result<LogReal> {
    check_lambda(lambda_nm)?;
    Ok(-g_per_cm.scale(lambda_nm / NM_PER_CM / (4.0 * PI)))
}

/// `g = -4 pi kappa / lambda`.
pub fn gain_from_kappa(lambda_nm: f64, kappa: LogReal) -> Result<LogReal> {
    check_lambda(lambda_nm)?;
    Ok(-kappa.scale(4.0 * PI * NM_PER_CM / lambda_nm))
}

fn check_lambda(lambda_nm: f64) -> Result<()> {
    if lambda_nm > 0.0 && lambda_nm.is_finite() {
        Ok(())
    } else {
        Err(SgmError::Domain(format!("wavelength must be positive, got {lambda_nm}")))
    }
}

/// `x = k a = 2 pi a / lambda`.
pub fn size_parameter(radius_um: f64, lambda_nm: f64) -> f64 {
    2.0 * PI * radius_um * NM_PER_UM / lambda_nm
}

/// Inverse of [`size_parameter`].
pub fn wavelength_from_size(radius_um: f64, x: f64) -> f64 {
    2.0 * PI * radius_um * NM_PER_UM / x
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionOptions {
    /// Trusted wavelength band as multiples of `lambda0`.
    pub band: (f64, f64),
    /// Use the full square root of the Lorentz permittivity instead of
    /// the first-order expansion in `kappa0`.
    pub exact_sqrt: bool,
}

impl Default for DispersionOptions {
    fn default() -> Self {
        DispersionOptions {
            band: (0.4, 2.0),
            exact_sqrt: false,
        }
    }
}

impl DispersionOptions {
    pub fn contains(&self, material: &GainMaterial, lambda_nm: f64) -> bool {
        lambda_nm >= self.band.0 * material.lambda0_nm && lambda_nm <= self.band.1 * material.lambda0_nm
    }
}

/// `(eta, kappa)` at `lambda_nm` under pump strength `g0_per_cm`.
pub fn dispersive_index(material: &GainMaterial, lambda_nm: f64, g0_per_cm: f64) -> Result<ComplexIndex> {
    dispersive_index_with(material, lambda_nm, g0_per_cm, &DispersionOptions::default())
}

pub fn dispersive_index_with(
    material: &GainMaterial,
    lambda_nm: f64,
    g0_per_cm: f64,
    opts: &DispersionOptions,
) -> Result<ComplexIndex> {
    check_lambda(lambda_nm)?;
    if !opts.contains(material, lambda_nm) {
        return Err(SgmError::Domain(format!(
            "wavelength {lambda_nm} nm outside the dispersion band [{}, {}] nm",
            opts.band.0 * material.lambda0_nm,
            opts.band.1 * material.lambda0_nm
        )));
    }
    if !(g0_per_cm >= 0.0) {
        return Err(SgmError::Domain(format!("g0 must be non-negative, got {g0_per_cm}")));
    }
    let w = material.lambda0_nm / lambda_nm;
    let k0 = material.kappa0(g0_per_cm);
    let gh = material.gamma_hat;
    let (eta, kappa) = if opts.exact_sqrt {
        let wp2 = 2.0 * material.n0 * gh * k0;
        let eps = material.n0 * material.n0 - wp2 / Complex64::new(w * w - 1.0, gh * w);
        let n = eps.sqrt();
        (n.re, n.im)
    } else {
        (material.n0 + k0 * f1(w, gh), k0 * f2(w, gh))
    };
    ComplexIndex::new(eta, LogReal::from_f64(kappa))
}
