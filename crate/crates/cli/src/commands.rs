use std::f64::consts::PI;

use num_complex::Complex64;
use sgm_core::fields::{
    classify_mode, count_peaks, radial_profile, theta_grid, theta_minima, theta_profile, Mode,
};
use sgm_core::medium::resolve_material;
use sgm_core::par::{map_ordered, Execution};
use sgm_core::rootfind::{
    equal_gain_groups, refine_exact, solve_dispersive, DispersiveOptions, DispersiveSingularity, NewtonOptions,
};
use sgm_core::scattering::{reflection_scan, IndexModel, Polarization, Scan, ScanOptions};
use sgm_core::sgm_asymptotic::{
    enumerate_many, enumerate_sgm, summarize, EnumerationOptions, SingularityRecord, MIN_ELL,
};

use crate::args::{parse_ells, parse_grid, ClassifyArgs, DispersiveArgs, FieldArgs, ScanArgs, TableArgs};
use crate::output::{fixed, log_columns, sci, Kind, Table};
use crate::{CliError, Report};

use Kind::{Num, Text};

fn positive(v: f64, what: &str) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Config(format!("{what} must be positive, got {v}")))
    }
}

fn index_eta(eta: f64) -> Result<f64, CliError> {
    if eta > 1.0 && eta.is_finite() {
        Ok(eta)
    } else {
        Err(CliError::Config(format!("eta must exceed 1, got {eta}")))
    }
}

fn meta(t: &mut Table, k: &str, v: impl ToString) {
    t.meta.push((k.to_string(), v.to_string()));
}

pub fn sgm_table(args: &TableArgs, exec: Execution) -> Result<Report, CliError> {
    let ells = parse_ells(&args.ell)?;
    let radius = positive(args.radius_um, "radius")?;
    let eta = index_eta(args.eta)?;
    if let Some(&low) = ells.iter().find(|&&l| l < MIN_ELL) {
        return Err(CliError::Config(format!("asymptotic table needs l >= {MIN_ELL}, got {low}")));
    }
    let mut cols = vec![
        ("pol", Text),
        ("ell", Num),
        ("q", Num),
        ("zeta", Num),
        ("lambda_nm", Num),
        ("kappa_sign", Num),
        ("kappa_log10_abs", Num),
        ("kappa", Text),
        ("gain_sign", Num),
        ("gain_log10_abs", Num),
        ("gain_per_cm", Text),
        ("method", Text),
        ("flags", Text),
    ];
    if args.refine {
        cols.extend([
            ("refine_status", Text),
            ("refined_zeta", Num),
            ("refined_kappa_log10_abs", Num),
            ("refined_kappa", Text),
        ]);
    }
    let mut table = Table::new("sgm_table", &cols);
    let mut summary = Table::new(
        "sgm_summary",
        &[
            ("pol", Text),
            ("ell", Num),
            ("q_max", Num),
            ("lambda_min_nm", Num),
            ("lambda_max_nm", Num),
            ("g_min_log10_abs", Num),
            ("g_min_per_cm", Text),
        ],
    );
    let mut report = Report {
        units: ells.len(),
        ..Default::default()
    };
    let results = enumerate_many(args.pol, &ells, radius, eta, exec);
    for (&ell, res) in ells.iter().zip(results) {
        let recs = match res {
            Ok(recs) => recs,
            Err(e) => {
                report.failed += 1;
                report.notes.push(format!("l = {ell}: {e}"));
                let mut row = vec![String::new(); cols.len()];
                row[0] = args.pol.to_string();
                row[1] = ell.to_string();
                row[12] = format!("failed: {e}");
                table.push(row);
                continue;
            }
        };
        let refined = if args.refine {
            map_ordered(&recs, exec, refine_exact)
        } else {
            Vec::new()
        };
        for (i, r) in recs.iter().enumerate() {
            let mut row = record_row(r);
            if let Some(out) = refined.get(i) {
                match out {
                    Ok(o) => {
                        let [_, l10, dec] = log_columns(o.record.kappa);
                        row.extend([o.status.to_string(), fixed(o.record.zeta, 9), l10, dec]);
                    }
                    Err(e) => row.extend([format!("error: {e}"), String::new(), String::new(), String::new()]),
                }
            }
            table.push(row);
        }
        if let Some(s) = summarize(&recs) {
            let [_, l10, dec] = log_columns(s.g_min);
            summary.push(vec![
                s.pol.to_string(),
                s.ell.to_string(),
                s.q_max.to_string(),
                fixed(s.lambda_min_nm, 6),
                fixed(s.lambda_max_nm, 6),
                l10,
                dec,
            ]);
        }
    }
    let opts = EnumerationOptions::default();
    for t in [&mut table, &mut summary] {
        meta(t, "radius_um", args.radius_um);
        meta(t, "eta", args.eta);
        meta(t, "bisect_tol", opts.bisect_tol);
        meta(t, "near_edge_rel", opts.near_edge);
        if args.refine {
            meta(t, "newton_tol", NewtonOptions::default().tol);
        }
    }
    report.tables = vec![table, summary];
    Ok(report)
}

fn record_row(r: &SingularityRecord) -> Vec<String> {
    let [ks, kl, kd] = log_columns(r.kappa);
    let [gs, gl, gd] = log_columns(r.gain);
    vec![
        r.pol.to_string(),
        r.ell.to_string(),
        r.q.to_string(),
        fixed(r.zeta, 6),
        fixed(r.lambda_nm, 6),
        ks,
        kl,
        kd,
        gs,
        gl,
        gd,
        r.method.to_string(),
        r.flags.join(";"),
    ]
}

fn scan_table() -> Table {
    Table::new(
        "scan",
        &[
            ("lambda_nm", Num),
            ("log10_r2", Num),
            ("near_singular", Num),
            ("peak", Num),
            ("ell", Num),
        ],
    )
}

fn run_scans(
    pol: Polarization,
    ells: &[u32],
    radius: f64,
    model: &IndexModel,
    grid: &[f64],
    exec: Execution,
    report: &mut Report,
) -> Table {
    let opts = ScanOptions::default();
    let mut table = scan_table();
    let mut peaks = Vec::new();
    for &ell in ells {
        match reflection_scan(pol, ell, radius, model, grid, &opts, exec) {
            Ok(Scan { points, peaks: p, .. }) => {
                for (i, pt) in points.iter().enumerate() {
                    table.push(vec![
                        fixed(pt.lambda_nm, 6),
                        fixed(pt.log10_r2, 6),
                        u8::from(pt.near_singular).to_string(),
                        u8::from(p.contains(&i)).to_string(),
                        ell.to_string(),
                    ]);
                }
                peaks.extend(p.iter().map(|&i| format!("{ell}@{:.6}", points[i].lambda_nm)));
            }
            Err(e) => {
                report.failed += 1;
                report.notes.push(format!("scan l = {ell}: {e}"));
            }
        }
    }
    report.notes.push(format!("scan peaks: {}", peaks.len()));
    meta(&mut table, "peak_log10_r2", opts.peak_log10_r2);
    meta(&mut table, "near_singular_condition", opts.reflection.near_singular);
    meta(&mut table, "peak_count", peaks.len());
    meta(&mut table, "peaks", peaks.join(";"));
    table
}

pub fn dispersive(args: &DispersiveArgs, exec: Execution) -> Result<Report, CliError> {
    let material = resolve_material(&args.material)?;
    let ells = parse_ells(&args.ell)?;
    let radius = positive(args.radius_um, "radius")?;
    positive(args.group_tol, "group tolerance")?;
    let grid = args.scan.as_deref().map(parse_grid).transpose()?;
    let opts = DispersiveOptions {
        exec,
        ..Default::default()
    };
    let mut report = Report {
        units: ells.len(),
        ..Default::default()
    };
    let outs = map_ordered(&ells, exec, |&ell| solve_dispersive(args.pol, ell, radius, &material, &opts));

    let mut records: Vec<DispersiveSingularity> = Vec::new();
    let mut failures = Vec::new();
    for (&ell, out) in ells.iter().zip(outs) {
        match out {
            Ok(o) => {
                records.extend(o.records);
                failures.extend(o.failures.into_iter().map(|f| (ell, f)));
            }
            Err(e) => {
                report.failed += 1;
                report.notes.push(format!("l = {ell}: {e}"));
            }
        }
    }
    let groups: Vec<_> = equal_gain_groups(&records, args.group_tol)
        .into_iter()
        .filter(|g| g.members.len() > 1)
        .collect();
    let group_of = |r: &DispersiveSingularity| {
        groups
            .iter()
            .position(|g| g.members.iter().any(|m| m.ell == r.ell && m.lambda_nm == r.lambda_nm))
            .map(|i| (i + 1).to_string())
            .unwrap_or_default()
    };

    let mut table = Table::new(
        "dispersive",
        &[
            ("pol", Text),
            ("ell", Num),
            ("q_seed", Num),
            ("lambda_nm", Num),
            ("g0_per_cm", Num),
            ("eta", Num),
            ("kappa_sign", Num),
            ("kappa_log10_abs", Num),
            ("kappa", Text),
            ("residual_norm", Num),
            ("status", Text),
            ("group", Num),
            ("flags", Text),
        ],
    );
    for r in &records {
        let [ks, kl, kd] = log_columns(r.kappa);
        let flag = if material.exceeds_gain_bound(r.g0_per_cm) {
            "exceeds_gain_bound"
        } else {
            ""
        };
        table.push(vec![
            r.pol.to_string(),
            r.ell.to_string(),
            r.q_seed.to_string(),
            fixed(r.lambda_nm, 6),
            sci(r.g0_per_cm),
            fixed(r.eta, 12),
            ks,
            kl,
            kd,
            format!("{:.3e}", r.residual_norm),
            r.status.to_string(),
            group_of(r),
            flag.to_string(),
        ]);
    }
    for (ell, f) in &failures {
        let mut row = vec![String::new(); table.columns.len()];
        row[0] = args.pol.to_string();
        row[1] = ell.to_string();
        row[2] = f.q_seed.to_string();
        row[3] = fixed(f.lambda_nm, 6);
        row[10] = "failed".into();
        row[12] = f.reason.clone();
        table.push(row);
    }
    meta(&mut table, "radius_um", args.radius_um);
    meta(&mut table, "material", &args.material);
    meta(&mut table, "newton_tol", opts.newton.tol);
    meta(&mut table, "dedup_nm", opts.dedup_nm);
    meta(&mut table, "band_rel", format!("{}:{}", opts.dispersion.band.0, opts.dispersion.band.1));

    let mut gt = Table::new(
        "equal_gain",
        &[
            ("group", Num),
            ("size", Num),
            ("mean_g0_per_cm", Num),
            ("max_rel_deviation", Num),
            ("ells", Text),
            ("lambdas_nm", Text),
        ],
    );
    for (i, g) in groups.iter().enumerate() {
        let ells: Vec<String> = g.members.iter().map(|m| m.ell.to_string()).collect();
        let lams: Vec<String> = g.members.iter().map(|m| fixed(m.lambda_nm, 6)).collect();
        gt.push(vec![
            (i + 1).to_string(),
            g.members.len().to_string(),
            sci(g.mean_g0),
            format!("{:.3e}", g.max_rel_deviation),
            ells.join(";"),
            lams.join(";"),
        ]);
    }
    meta(&mut gt, "group_tol", args.group_tol);
    report.tables = vec![table, gt];

    if let Some(grid) = grid {
        let g0 = match args.g0 {
            Some(g) => positive(g, "g0")?,
            None => groups
                .iter()
                .max_by(|a, b| a.members.len().cmp(&b.members.len()).then(b.mean_g0.total_cmp(&a.mean_g0)))
                .map(|g| g.mean_g0)
                .ok_or_else(|| CliError::Config("--scan needs --g0 when no equal-gain group exists".into()))?,
        };
        let model = IndexModel::Dispersive { material, g0_per_cm: g0 };
        let mut scan = run_scans(args.pol, &ells, radius, &model, &grid, exec, &mut report);
        meta(&mut scan, "g0_per_cm", g0);
        report.tables.push(scan);
    }
    Ok(report)
}

pub fn scan(args: &ScanArgs, exec: Execution) -> Result<Report, CliError> {
    let ells = parse_ells(&args.ell)?;
    let radius = positive(args.radius_um, "radius")?;
    let grid = parse_grid(&args.lambda)?;
    let model = match (args.eta, &args.material, args.g0) {
        (Some(eta), None, None) => IndexModel::Fixed(Complex64::new(index_eta(eta)?, args.kappa.unwrap_or(0.0))),
        (None, Some(m), Some(g0)) if args.kappa.is_none() => IndexModel::Dispersive {
            material: resolve_material(m)?,
            g0_per_cm: positive(g0, "g0")?,
        },
        _ => {
            return Err(CliError::Config(
                "give either --eta [--kappa] or --material with --g0".into(),
            ))
        }
    };
    let mut report = Report {
        units: ells.len(),
        ..Default::default()
    };
    let mut table = run_scans(args.pol, &ells, radius, &model, &grid, exec, &mut report);
    meta(&mut table, "radius_um", args.radius_um);
    report.tables = vec![table];
    Ok(report)
}

pub fn field_profile(args: &FieldArgs, exec: Execution) -> Result<Report, CliError> {
    let eta = index_eta(args.eta)?;
    let mut records = Vec::new();
    let (lambda_nm, kappa, radius) = match args.sgm_q {
        Some(q) => {
            let a = args
                .radius_um
                .ok_or_else(|| CliError::Config("--sgm-q needs --radius-um".into()))?;
            records = enumerate_sgm(args.pol, args.ell, positive(a, "radius")?, eta).map_err(CliError::config)?;
            let rec = records
                .get((q as usize).wrapping_sub(1))
                .ok_or_else(|| CliError::Config(format!("mode q = {q} not found (q_max = {})", records.len())))?;
            (rec.lambda_nm, rec.kappa.to_f64(), Some(a))
        }
        None => (args.lambda_nm, args.kappa, args.radius_um),
    };
    let mode = Mode::new(args.pol, args.ell, args.m, lambda_nm, Complex64::new(eta, kappa), radius)
        .map_err(CliError::config)?;
    let r = match (args.r_um, radius) {
        (Some(r), _) | (None, Some(r)) => positive(r, "r")?,
        (None, None) => return Err(CliError::Config("give --r-um or --radius-um".into())),
    };
    if args.theta_points < 3 {
        return Err(CliError::Config("need at least 3 theta points".into()));
    }
    let mut report = Report {
        units: 1,
        ..Default::default()
    };

    let thetas = theta_grid(args.theta_points);
    let samples = theta_profile(&mode, r, 1.0, &thetas, exec)?;
    let minima = theta_minima(&mode, r, &thetas, exec)?;
    let mut tp = Table::new(
        "theta_profile",
        &[
            ("r_um", Num),
            ("theta_rad", Num),
            ("u_normalized", Num),
            ("S_r", Num),
            ("S_theta", Num),
            ("S_phi", Num),
            ("Theta_rad", Num),
        ],
    );
    for s in &samples {
        tp.push(vec![
            sci(s.r_um),
            sci(s.theta),
            sci(s.u),
            sci(s.s_r),
            sci(s.s_theta),
            sci(s.s_phi),
            sci(s.theta_angle),
        ]);
    }
    let positions: Vec<String> = minima.iter().map(|m| fixed(m.theta, 9)).collect();
    report.notes.push(format!("minima: {}", minima.len()));
    meta(&mut tp, "lambda_nm", lambda_nm);
    meta(&mut tp, "kappa", kappa);
    meta(&mut tp, "a0_abs", 1);
    meta(&mut tp, "minima", minima.len());
    meta(&mut tp, "minima_theta_rad", positions.join(";"));
    meta(
        &mut tp,
        "approx_zero_minima",
        minima.iter().filter(|m| m.approx_zero).count(),
    );
    meta(&mut tp, "approx_zero_rel", 1e-6);
    meta(&mut tp, "golden_tol_rad", 1e-10);
    report.tables.push(tp);

    if let Some(a) = radius {
        let n = args.radial_points.max(2);
        let radii: Vec<f64> = (1..=n).map(|i| a * i as f64 / n as f64).collect();
        let u = radial_profile(&mode, &radii, 1.0, exec)?;
        let peaks = count_peaks(&u);
        let mut rp = Table::new("radial_profile", &[("r_um", Num), ("u_avg_normalized", Num)]);
        for (r, v) in radii.iter().zip(&u) {
            rp.push(vec![sci(*r), sci(*v)]);
        }
        meta(&mut rp, "radial_peaks", peaks);
        report.notes.push(format!("radial peaks: {peaks}"));

        let zeta = 2.0 * PI * 1e3 / lambda_nm * a * eta;
        if records.is_empty() && args.ell >= MIN_ELL {
            records = enumerate_sgm(args.pol, args.ell, a, eta).unwrap_or_default();
        }
        let class = classify_mode(args.ell, zeta, &records, 1e-6)?;
        meta(&mut rp, "zeta", fixed(zeta, 6));
        meta(&mut rp, "classification", class);
        report.notes.push(format!("classification: {class}"));
        report.tables.push(rp);
    }
    Ok(report)
}

pub fn classify(args: &ClassifyArgs) -> Result<Report, CliError> {
    let eta = index_eta(args.eta)?;
    let records = if args.ell >= MIN_ELL {
        enumerate_sgm(args.pol, args.ell, 1.0, eta)?
    } else {
        Vec::new()
    };
    let mut t = Table::new("classify", &[("ell", Num), ("zeta", Num), ("class", Text)]);
    for &z in &args.zeta {
        let class = classify_mode(args.ell, positive(z, "zeta")?, &records, args.rel_tol)?;
        t.push(vec![args.ell.to_string(), fixed(z, 6), class.to_string()]);
    }
    meta(&mut t, "rel_tol", args.rel_tol);
    Ok(Report {
        tables: vec![t],
        units: args.zeta.len(),
        ..Default::default()
    })
}
