use std::collections::BTreeSet;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sgm_core::scattering::Polarization;

use crate::CliError;

#[derive(Parser, Debug)]
#[command(name = "sgm", version, about = "Spectral singularities of spherical gain media")]
pub struct Cli {
    /// Worker threads; falls back to SGM_THREADS, then to the logical CPU count
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Write each table to a file here instead of stdout
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Asymptotic singular gallery modes at a fixed real index
    SgmTable(TableArgs),
    /// Exact singularities with a dispersive gain medium
    Dispersive(DispersiveArgs),
    /// |R|^2 over a wavelength grid
    Scan(ScanArgs),
    /// Angular and radial energy-density profiles of one multipole
    FieldProfile(FieldArgs),
    /// WGM / WGM' / singular-mode classification of size parameters
    Classify(ClassifyArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct TableArgs {
    #[arg(long)]
    pub pol: Polarization,
    /// Angular momentum: `600`, `485,540`, `400..700` or `400..700:100`; repeatable
    #[arg(long, required = true)]
    pub ell: Vec<String>,
    #[arg(long)]
    pub radius_um: f64,
    #[arg(long)]
    pub eta: f64,
    /// Also refine every record on the exact equations
    #[arg(long)]
    pub refine: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct DispersiveArgs {
    #[arg(long)]
    pub pol: Polarization,
    /// Preset name (`ndyag`) or path to a TOML material file
    #[arg(long)]
    pub material: String,
    #[arg(long)]
    pub radius_um: f64,
    #[arg(long, required = true)]
    pub ell: Vec<String>,
    /// Relative tolerance for equal-gain grouping
    #[arg(long, default_value_t = 0.01)]
    pub group_tol: f64,
    /// Optional |R|^2 scan `min:max:samples` in nm
    #[arg(long)]
    pub scan: Option<String>,
    /// Pump for the scan, in 1/cm; defaults to the largest equal-gain group
    #[arg(long)]
    pub g0: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
pub struct ScanArgs {
    #[arg(long)]
    pub pol: Polarization,
    #[arg(long, required = true)]
    pub ell: Vec<String>,
    #[arg(long)]
    pub radius_um: f64,
    /// Grid `min:max:samples` in nm
    #[arg(long)]
    pub lambda: String,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub material: Option<String>,
    #[arg(long)]
    pub g0: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
pub struct FieldArgs {
    #[arg(long)]
    pub pol: Polarization,
    #[arg(long)]
    pub ell: u32,
    #[arg(long, allow_hyphen_values = true)]
    pub m: i32,
    #[arg(long)]
    pub eta: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub kappa: f64,
    #[arg(long, default_value_t = 808.0)]
    pub lambda_nm: f64,
    /// Radius of the angular profile
    #[arg(long)]
    pub r_um: Option<f64>,
    /// Sphere radius; enables the radial profile on (0, radius]
    #[arg(long)]
    pub radius_um: Option<f64>,
    /// Take wavelength and kappa from singular mode `q` of this sphere
    #[arg(long)]
    pub sgm_q: Option<u32>,
    #[arg(long, default_value_t = 4001)]
    pub theta_points: usize,
    #[arg(long, default_value_t = 4000)]
    pub radial_points: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub ell: u32,
    /// Interior size parameters; repeatable or comma separated
    #[arg(long, required = true, value_delimiter = ',')]
    pub zeta: Vec<f64>,
    #[arg(long)]
    pub eta: f64,
    #[arg(long, default_value = "te")]
    pub pol: Polarization,
    #[arg(long, default_value_t = 1e-6)]
    pub rel_tol: f64,
}

/// Sorted, deduplicated angular momenta from `--ell` values.
pub fn parse_ells(specs: &[String]) -> Result<Vec<u32>, CliError> {
    let mut out = BTreeSet::new();
    for spec in specs {
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if let Some((lo, rest)) = part.split_once("..") {
                let (hi, step) = match rest.split_once(':') {
                    Some((hi, step)) => (hi, num::<u32>(step, "ell step")?),
                    None => (rest, 1),
                };
                let (lo, hi) = (num::<u32>(lo, "ell")?, num::<u32>(hi, "ell")?);
                if lo > hi || step == 0 {
                    return Err(CliError::Config(format!("bad ell range `{part}`")));
                }
                out.extend((lo..=hi).step_by(step as usize));
            } else {
                out.insert(num::<u32>(part, "ell")?);
            }
        }
    }
    if out.is_empty() {
        return Err(CliError::Config("no ell given".into()));
    }
    Ok(out.into_iter().collect())
}

fn num<T: FromStr>(s: &str, what: &str) -> Result<T, CliError> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Config(format!("cannot parse {what} from `{s}`")))
}

/// Uniform grid from `min:max:samples`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, n] = parts[..] else {
        return Err(CliError::Config(format!("grid `{spec}` is not min:max:samples")));
    };
    let (lo, hi, n) = (num::<f64>(lo, "grid min")?, num::<f64>(hi, "grid max")?, num::<usize>(n, "grid samples")?);
    if !(lo < hi) || n < 2 {
        return Err(CliError::Config(format!("grid `{spec}` needs min < max and at least 2 samples")));
    }
    let step = (hi - lo) / (n - 1) as f64;
    Ok((0..n).map(|i| if i + 1 == n { hi } else { lo + step * i as f64 }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn ells_are_sorted_and_deduplicated() {
        assert_eq!(parse_ells(&s(&["600", "600"])).unwrap(), vec![600]);
        assert_eq!(parse_ells(&s(&["710,485", "540"])).unwrap(), vec![485, 540, 710]);
        assert_eq!(parse_ells(&s(&["400..700:100"])).unwrap(), vec![400, 500, 600, 700]);
        assert!(parse_ells(&s(&["7..3"])).is_err());
        assert!(parse_ells(&s(&["x"])).is_err());
    }

    #[test]
    fn grids() {
        let g = parse_grid("460:710:5000").unwrap();
        assert_eq!(g.len(), 5000);
        assert_eq!((g[0], g[4999]), (460.0, 710.0));
        assert!(parse_grid("5:5:10").is_err());
        assert!(parse_grid("1:5:1").is_err());
        assert!(parse_grid("1:5").is_err());
    }
}
