//! Exact-equation solvers seeded by the asymptotic enumeration.
//!
//! Both solvers run a two-real-unknown Newton iteration on the real and
//! imaginary parts of the exact residual. Once the dispersion model
//! enters, the residual is no longer holomorphic in the wavelength, so a
//! complex-analytic Newton step does not apply.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Result, SgmError};
use crate::logreal::LogReal;
use crate::medium::{self, DispersionOptions, GainMaterial};
use crate::par::{map_ordered, Execution};
use crate::scattering::{residual, Polarization};
use crate::sgm_asymptotic::{enumerate_sgm, Method, SingularityRecord};

/// Below this `|kappa| * zeta` the gain term is invisible to the exact
/// residual in double precision.
pub const KAPPA_RESOLUTION: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Converged when `|residual| <= tol`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-9,
            max_iter: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RefineStatus {
    Converged,
    KappaBelowFloatResolution,
    NotConverged,
    SingularJacobian,
}

impl std::fmt::Display for RefineStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RefineStatus::Converged => "converged",
            RefineStatus::KappaBelowFloatResolution => "kappa_below_float_resolution",
            RefineStatus::NotConverged => "not_converged",
            RefineStatus::SingularJacobian => "singular_jacobian",
        })
    }
}

struct NewtonRun {
    x: [f64; 2],
    norm: f64,
    iterations: usize,
    status: RefineStatus,
}

/// Damped Newton on `f: R^2 -> C` with central-difference Jacobian.
///
/// Once inside tolerance, a step is only taken if it cuts the residual by
/// at least a factor four, so a converged point is a fixed point.
fn newton2<F, S, D>(f: F, step: S, in_domain: D, x0: [f64; 2], opts: &NewtonOptions) -> Result<NewtonRun>
where
    F: Fn([f64; 2]) -> Result<Complex64>,
    S: Fn([f64; 2]) -> [f64; 2],
    D: Fn([f64; 2]) -> bool,
{
    let mut x = x0;
    let mut r = f(x)?;
    let mut norm = r.norm();
    if !norm.is_finite() {
        return Err(SgmError::Domain("residual is not finite at the seed".into()));
    }
    let mut iterations = 0;
    let mut status = RefineStatus::NotConverged;
    while iterations < opts.max_iter {
        let h = step(x);
        let mut cols = [Complex64::new(0.0, 0.0); 2];
        for k in 0..2 {
            let (mut up, mut dn) = (x, x);
            up[k] += h[k];
            dn[k] -= h[k];
            cols[k] = (f(up)? - f(dn)?) / (2.0 * h[k]);
        }
        let det = cols[0].re * cols[1].im - cols[1].re * cols[0].im;
        let scale = cols[0].norm() * cols[1].norm();
        if det.abs() <= 1e-14 * scale || !det.is_finite() {
            status = RefineStatus::SingularJacobian;
            break;
        }
        let d0 = (-r.re * cols[1].im + cols[1].re * r.im) / det;
        let d1 = (-cols[0].re * r.im + r.re * cols[0].im) / det;
        let needed = if norm <= opts.tol { 0.25 } else { 1.0 };
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..12 {
            let trial = [x[0] + t * d0, x[1] + t * d1];
            if in_domain(trial) {
                if let Ok(rt) = f(trial) {
                    if rt.norm() < needed * norm {
                        accepted = Some((trial, rt));
                        break;
                    }
                }
            }
            if norm <= opts.tol {
                break;
            }
            t *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some((trial, rt)) => {
                x = trial;
                r = rt;
                norm = rt.norm();
            }
            None => break,
        }
    }
    if status != RefineStatus::SingularJacobian && norm <= opts.tol {
        status = RefineStatus::Converged;
    }
    Ok(NewtonRun {
        x,
        norm,
        iterations,
        status,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefineOutcome {
    pub record: SingularityRecord,
    pub status: RefineStatus,
    pub residual_norm: f64,
    pub iterations: usize,
}

/// Polishes `(zeta, kappa)` of a record on the exact residual at fixed `eta`.
pub fn refine_exact(seed: &SingularityRecord) -> Result<RefineOutcome> {
    refine_exact_with(seed, &NewtonOptions::default())
}

pub fn refine_exact_with(seed: &SingularityRecord, opts: &NewtonOptions) -> Result<RefineOutcome> {
    let eta = seed.eta;
    let kappa0 = seed.kappa.to_f64();
    if seed.kappa.abs().to_f64() * seed.zeta < KAPPA_RESOLUTION {
        let mut record = seed.clone();
        record.flags.push(RefineStatus::KappaBelowFloatResolution.to_string());
        return Ok(RefineOutcome {
            record,
            status: RefineStatus::KappaBelowFloatResolution,
            residual_norm: f64::NAN,
            iterations: 0,
        });
    }
    let (pol, ell) = (seed.pol, seed.ell);
    let f = |v: [f64; 2]| residual(pol, ell, v[0] / eta, Complex64::new(eta, v[1]));
    let step = |v: [f64; 2]| [1e-7 * v[0], 1e-4 * v[1].abs()];
    let in_domain = |v: [f64; 2]| v[0] > 0.0 && v[1] < 0.0;
    let run = newton2(f, step, in_domain, [seed.zeta, kappa0], opts)?;
    let mut record = seed.clone();
    if run.status == RefineStatus::Converged {
        record.zeta = run.x[0];
        record.kappa = LogReal::from_f64(run.x[1]);
        record.lambda_nm = medium::wavelength_from_size(seed.radius_um, run.x[0] / eta);
        record.gain = medium::gain_from_kappa(record.lambda_nm, record.kappa)?;
        record.method = Method::Exact;
    } else {
        record.flags.push(run.status.to_string());
    }
    Ok(RefineOutcome {
        record,
        status: run.status,
        residual_norm: run.norm,
        iterations: run.iterations,
    })
}

/// A singularity of the dispersive medium at pump level `g0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispersiveSingularity {
    pub pol: Polarization,
    pub ell: u32,
    /// Mode number of the asymptotic seed.
    pub q_seed: u32,
    pub lambda_nm: f64,
    pub g0_per_cm: f64,
    pub eta: f64,
    pub kappa: LogReal,
    pub residual_norm: f64,
    pub status: RefineStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedFailure {
    pub q_seed: u32,
    pub lambda_nm: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct DispersiveOutcome {
    pub records: Vec<DispersiveSingularity>,
    pub failures: Vec<SeedFailure>,
    /// Seeds in the band whose gain is too small to resolve.
    pub skipped: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersiveOptions {
    pub newton: NewtonOptions,
    pub dispersion: DispersionOptions,
    /// Solutions closer than this (nm) are merged.
    pub dedup_nm: f64,
    pub exec: Execution,
}

impl Default for DispersiveOptions {
    fn default() -> Self {
        DispersiveOptions {
            newton: NewtonOptions::default(),
            dispersion: DispersionOptions::default(),
            dedup_nm: 1e-4,
            exec: Execution::Parallel,
        }
    }
}

/// Maps an asymptotic seed to `(lambda, g0)` through the inverse of the
/// imaginary dispersion factor.
pub fn seed_pump(material: &GainMaterial, seed: &SingularityRecord) -> f64 {
    let w = material.lambda0_nm / seed.lambda_nm;
    let k0 = seed.kappa.to_f64() / medium::f2(w, material.gamma_hat);
    material.g0_from_kappa0(k0)
}

fn dispersive_residual(
    pol: Polarization,
    ell: u32,
    radius_um: f64,
    material: &GainMaterial,
    opts: &DispersionOptions,
    lambda_nm: f64,
    g0: f64,
) -> Result<Complex64> {
    let n = medium::dispersive_index_with(material, lambda_nm, g0, opts)?;
    residual(pol, ell, medium::size_parameter(radius_um, lambda_nm), n.value())
}

/// Solves for `(lambda, g0)` starting from every asymptotic seed whose
/// wavelength lies in the dispersion band.
pub fn solve_dispersive(
    pol: Polarization,
    ell: u32,
    radius_um: f64,
    material: &GainMaterial,
    opts: &DispersiveOptions,
) -> Result<DispersiveOutcome> {
    let seeds = enumerate_sgm(pol, ell, radius_um, material.n0)?;
    let in_band: Vec<&SingularityRecord> = seeds
        .iter()
        .filter(|s| opts.dispersion.contains(material, s.lambda_nm))
        .collect();
    let (usable, tiny): (Vec<&SingularityRecord>, Vec<&SingularityRecord>) = in_band
        .into_iter()
        .partition(|s| s.kappa.abs().to_f64() * s.zeta >= KAPPA_RESOLUTION);

    let solved = map_ordered(&usable, opts.exec, |s| {
        let g0 = seed_pump(material, s);
        let f = |v: [f64; 2]| dispersive_residual(pol, ell, radius_um, material, &opts.dispersion, v[0], v[1]);
        let step = |v: [f64; 2]| [1e-6 * v[0], 1e-4 * v[1].abs()];
        let in_domain = |v: [f64; 2]| v[1] > 0.0 && opts.dispersion.contains(material, v[0]);
        let run = newton2(f, step, in_domain, [s.lambda_nm, g0], &opts.newton);
        (s.q, s.lambda_nm, run)
    });

    let mut out = DispersiveOutcome {
        skipped: tiny.len(),
        ..Default::default()
    };
    for (q_seed, seed_lambda, run) in solved {
        match run {
            Ok(run) if run.status == RefineStatus::Converged => {
                let n = medium::dispersive_index_with(material, run.x[0], run.x[1], &opts.dispersion)?;
                out.records.push(DispersiveSingularity {
                    pol,
                    ell,
                    q_seed,
                    lambda_nm: run.x[0],
                    g0_per_cm: run.x[1],
                    eta: n.eta,
                    kappa: n.kappa,
                    residual_norm: run.norm,
                    status: run.status,
                });
            }
            Ok(run) => out.failures.push(SeedFailure {
                q_seed,
                lambda_nm: seed_lambda,
                reason: format!("{} (|residual| = {:.3e})", run.status, run.norm),
            }),
            Err(e) => out.failures.push(SeedFailure {
                q_seed,
                lambda_nm: seed_lambda,
                reason: e.to_string(),
            }),
        }
    }
    out.records.sort_by(|a, b| a.lambda_nm.total_cmp(&b.lambda_nm));
    let mut merged: Vec<DispersiveSingularity> = Vec::with_capacity(out.records.len());
    for r in out.records.drain(..) {
        match merged.last_mut() {
            Some(last) if (r.lambda_nm - last.lambda_nm).abs() <= opts.dedup_nm => {
                if r.residual_norm < last.residual_norm {
                    *last = r;
                }
            }
            _ => merged.push(r),
        }
    }
    out.records = merged;
    Ok(out)
}

/// Records sharing a pump level within a relative tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EqualGainGroup {
    pub members: Vec<DispersiveSingularity>,
    pub mean_g0: f64,
    pub max_rel_deviation: f64,
}

fn spread(g: &[f64]) -> (f64, f64) {
    let mean = g.iter().sum::<f64>() / g.len() as f64;
    let dev = g.iter().map(|v| (v - mean).abs() / mean).fold(0.0, f64::max);
    (mean, dev)
}

/// Greedy clustering in ascending `g0`: a record joins the open group while
/// every member stays within `rel_tol` of the group mean.
pub fn equal_gain_groups(records: &[DispersiveSingularity], rel_tol: f64) -> Vec<EqualGainGroup> {
    let mut sorted: Vec<&DispersiveSingularity> = records.iter().collect();
    sorted.sort_by(|a, b| a.g0_per_cm.total_cmp(&b.g0_per_cm));
    let mut groups: Vec<Vec<&DispersiveSingularity>> = Vec::new();
    for r in sorted {
        if let Some(open) = groups.last_mut() {
            let mut g: Vec<f64> = open.iter().map(|m| m.g0_per_cm).collect();
            g.push(r.g0_per_cm);
            if spread(&g).1 <= rel_tol {
                open.push(r);
                continue;
            }
        }
        groups.push(vec![r]);
    }
    groups
        .into_iter()
        .map(|members| {
            let g: Vec<f64> = members.iter().map(|m| m.g0_per_cm).collect();
            let (mean_g0, max_rel_deviation) = spread(&g);
            EqualGainGroup {
                members: members.into_iter().cloned().collect(),
                mean_g0,
                max_rel_deviation,
            }
        })
        .collect()
}

/// Point of the threshold-gain curve: the pump that cancels the imaginary
/// part of the exact residual at a fixed wavelength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocusPoint {
    pub lambda_nm: f64,
    pub g0_per_cm: f64,
    /// Real part of the residual there; dispersive singularities are its zeros.
    pub re_residual: f64,
}

pub fn gain_locus(
    pol: Polarization,
    ell: u32,
    radius_um: f64,
    material: &GainMaterial,
    lambda_grid: &[f64],
    exec: Execution,
) -> Vec<Result<LocusPoint>> {
    let opts = DispersionOptions::default();
    map_ordered(lambda_grid, exec, |&lam| {
        let im = |g0: f64| -> Result<Complex64> {
            dispersive_residual(pol, ell, radius_um, material, &opts, lam, g0)
        };
        let (mut g_a, mut g_b) = (0.0, 1e-3);
        let mut r_a = im(g_a)?;
        let mut r_b = im(g_b)?;
        for _ in 0..6 {
            let slope = (r_b.im - r_a.im) / (g_b - g_a);
            if slope == 0.0 || !slope.is_finite() {
                break;
            }
            let next = g_b - r_b.im / slope;
            g_a = g_b;
            r_a = r_b;
            g_b = next;
            r_b = im(g_b.max(0.0))?;
            if (g_b - g_a).abs() <= 1e-12 * g_b.abs() {
                break;
            }
        }
        Ok(LocusPoint {
            lambda_nm: lam,
            g0_per_cm: g_b,
            re_residual: r_b.re,
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::preset;
    use crate::sgm_asymptotic::enumerate_sgm;

    fn fake(g0: f64) -> DispersiveSingularity {
        DispersiveSingularity {
            pol: Polarization::TE,
            ell: 1,
            q_seed: 1,
            lambda_nm: 600.0,
            g0_per_cm: g0,
            eta: 1.8,
            kappa: LogReal::ZERO,
            residual_norm: 0.0,
            status: RefineStatus::Converged,
        }
    }

    #[test]
    fn grouping() {
        assert!(equal_gain_groups(&[], 0.01).is_empty());
        let two = equal_gain_groups(&[fake(1e-3), fake(2e-3)], 0.01);
        assert_eq!(two.len(), 2);
        let table: Vec<_> = [6.67824e-3, 6.71443e-3, 6.63064e-3, 6.70446e-3].map(fake).to_vec();
        let g = equal_gain_groups(&table, 0.01);
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].members.len(), 4);
        assert!((g[0].max_rel_deviation - 0.0077).abs() < 5e-4);
    }

    #[test]
    fn tiny_kappa_is_not_refined() {
        let recs = enumerate_sgm(Polarization::TE, 600, 50.0, 1.8217).unwrap();
        let out = refine_exact(&recs[0]).unwrap();
        assert_eq!(out.status, RefineStatus::KappaBelowFloatResolution);
        assert_eq!(out.record.zeta, recs[0].zeta);
        assert_eq!(out.record.method, Method::Asymptotic);
    }

    #[test]
    fn refinement_of_hundredth_te_mode() {
        let recs = enumerate_sgm(Polarization::TE, 600, 50.0, 1.8217).unwrap();
        let seed = &recs[99];
        let out = refine_exact(seed).unwrap();
        assert_eq!(out.status, RefineStatus::Converged);
        assert!(out.residual_norm <= 1e-9);
        assert!((out.record.zeta - seed.zeta).abs() / seed.zeta <= 1e-2);
        assert!(out.record.kappa.rel_diff(&seed.kappa) <= 0.2);
        let x = out.record.zeta / 1.8217;
        let n = Complex64::new(1.8217, out.record.kappa.to_f64());
        assert!(residual(Polarization::TE, 600, x, n).unwrap().norm() <= 1e-9);

        let again = refine_exact(&out.record).unwrap();
        assert!((again.record.zeta - out.record.zeta).abs() <= 1e-12 * out.record.zeta);
        assert!(again.record.kappa.rel_diff(&out.record.kappa) <= 1e-12);

        let mut shifted = seed.clone();
        shifted.zeta += 0.3;
        let back = refine_exact(&shifted).unwrap();
        assert_eq!(back.status, RefineStatus::Converged);
        assert!((back.record.zeta - out.record.zeta).abs() <= 1e-9 * out.record.zeta);
    }

    #[test]
    fn band_excludes_everything_at_large_order() {
        let m = preset("ndyag").unwrap();
        let out = solve_dispersive(Polarization::TE, 3000.min(crate::specfun::MAX_ORDER), 5.0, &m, &Default::default()).unwrap();
        assert!(out.records.is_empty());
    }

    #[test]
    fn first_table_singularity() {
        let m = preset("ndyag").unwrap();
        let out = solve_dispersive(Polarization::TE, 485, 50.0, &m, &Default::default()).unwrap();
        let hit = out
            .records
            .iter()
            .find(|r| (r.lambda_nm - 698.540903).abs() < 0.01)
            .expect("698.54 nm singularity");
        assert!((hit.g0_per_cm / 6.67824e-3 - 1.0).abs() < 0.01);
        let n = medium::dispersive_index(&m, hit.lambda_nm, hit.g0_per_cm).unwrap();
        assert_eq!(n.eta, hit.eta);
        let x = medium::size_parameter(50.0, hit.lambda_nm);
        assert!(residual(Polarization::TE, 485, x, n.value()).unwrap().norm() <= 1e-9);
        for w in out.records.windows(2) {
            assert!(w[1].lambda_nm - w[0].lambda_nm > 1e-4);
        }
    }
}
