//! Command-line front end: `key = value` config files, flag overrides and
//! the four subcommands.
//!
//! Exit codes: 0 success, 1 config or I/O error, 2 compatibility failure,
//! 3 numerical blow-up.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::densities::{check_compatibility, CompatReport, DensitySpec, Preset};
use crate::diagnostics::{
    convergence_study, diagnose, write_convergence_csv, write_diagnostics_csv, ConvergenceRow, DiagnosticsRecord,
};
use crate::error::{Error, Result};
use crate::field::{build_field, FieldMethod, BUILD_COMPAT_TOL};
use crate::grid::PhaseGrid;
use crate::liouville::{simulate, EdgeScheme, SolverConfig};
use crate::snapshot::{write_field_csv, GridSnapshot};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_COMPAT: i32 = 2;
pub const EXIT_BLOWUP: i32 = 3;

/// Which endpoint pair to run.
#[derive(Debug, Clone, PartialEq)]
pub enum PresetChoice {
    Torus,
    GaussianShift,
    GaussianTransport,
    /// Two binary snapshots holding `f` and `g`.
    Gridded {
        f: PathBuf,
        g: PathBuf,
    },
}

impl FromStr for PresetChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "torus" => Ok(Self::Torus),
            "gaussian-shift" => Ok(Self::GaussianShift),
            "gaussian-transport" => Ok(Self::GaussianTransport),
            other => match other.strip_prefix("gridded:").and_then(|rest| rest.split_once(',')) {
                Some((f, g)) if !f.trim().is_empty() && !g.trim().is_empty() => {
                    Ok(Self::Gridded { f: PathBuf::from(f.trim()), g: PathBuf::from(g.trim()) })
                }
                _ => Err(Error::Config(format!(
                    "unknown preset '{other}' (expected torus, gaussian-shift, gaussian-transport or gridded:<f>,<g>)"
                ))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: PresetChoice,
    pub eps: f64,
    pub eta: f64,
    /// `ε` of the target torus density when it differs from the source.
    pub eps_g: Option<f64>,
    /// `(μx, μv, σx, σv)` overrides for the Gaussian presets.
    pub gaussian_f: Option<[f64; 4]>,
    pub gaussian_g: Option<[f64; 4]>,
    pub v_window: Option<(f64, f64)>,
    pub nx: usize,
    pub nv: usize,
    pub cfl_x: f64,
    pub cfl_v: f64,
    pub t_end: f64,
    pub output_times: Vec<f64>,
    /// Times at which `build-field` samples `a`; defaults to `output_times`.
    pub field_times: Option<Vec<f64>>,
    pub field_method: FieldMethod,
    pub scheme: EdgeScheme,
    pub grids: Vec<usize>,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let solver = SolverConfig::default();
        Self {
            preset: PresetChoice::Torus,
            eps: 0.3,
            eta: 0.5,
            eps_g: None,
            gaussian_f: None,
            gaussian_g: None,
            v_window: None,
            nx: 256,
            nv: 256,
            cfl_x: solver.cfl_x,
            cfl_v: solver.cfl_v,
            t_end: solver.t_end,
            output_times: solver.output_times,
            field_times: None,
            field_method: FieldMethod::ClosedForm,
            scheme: EdgeScheme::default(),
            grids: vec![64, 128, 256],
            output_dir: PathBuf::from("out"),
        }
    }
}

fn parse_f64(key: &str, s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Config(format!("{key}: '{s}' is not a number")))
}

fn parse_usize(key: &str, s: &str) -> Result<usize> {
    s.trim().parse::<usize>().map_err(|_| Error::Config(format!("{key}: '{s}' is not a non-negative integer")))
}

fn parse_list<T>(key: &str, s: &str, item: impl Fn(&str, &str) -> Result<T>) -> Result<Vec<T>> {
    s.split(',').map(|part| item(key, part)).collect()
}

fn parse_fixed<const N: usize>(key: &str, s: &str) -> Result<[f64; N]> {
    let items = parse_list(key, s, parse_f64)?;
    items.try_into().map_err(|v: Vec<f64>| Error::Config(format!("{key}: expected {N} values, got {}", v.len())))
}

impl RunConfig {
    /// Parse `key = value` lines; `#` starts a comment, lists are comma
    /// separated. Unset keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = std::collections::HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {}: duplicate key '{key}'", lineno + 1)));
            }
            cfg.set(key, value).map_err(|e| Error::Config(format!("line {}: {}", lineno + 1, strip_prefix(e))))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "preset" => self.preset = value.parse()?,
            "eps" => self.eps = parse_f64(key, value)?,
            "eta" => self.eta = parse_f64(key, value)?,
            "eps_g" => self.eps_g = Some(parse_f64(key, value)?),
            "gaussian_f" => self.gaussian_f = Some(parse_fixed(key, value)?),
            "gaussian_g" => self.gaussian_g = Some(parse_fixed(key, value)?),
            "v_window" => {
                let [lo, hi] = parse_fixed(key, value)?;
                self.v_window = Some((lo, hi));
            }
            "nx" => self.nx = parse_usize(key, value)?,
            "nv" => self.nv = parse_usize(key, value)?,
            "cfl" => {
                let c = parse_f64(key, value)?;
                self.cfl_x = c;
                self.cfl_v = c;
            }
            "cfl_x" => self.cfl_x = parse_f64(key, value)?,
            "cfl_v" => self.cfl_v = parse_f64(key, value)?,
            "t_end" => self.t_end = parse_f64(key, value)?,
            "output_times" => self.output_times = parse_list(key, value, parse_f64)?,
            "field_times" => self.field_times = Some(parse_list(key, value, parse_f64)?),
            "field_method" | "method" => self.field_method = value.parse()?,
            "scheme" => self.scheme = value.parse()?,
            "grids" => self.grids = parse_list(key, value, parse_usize)?,
            "output_dir" | "out" => self.output_dir = PathBuf::from(value),
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Parse-time checks: numeric ranges and referenced files.
    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.nv == 0 {
            return Err(Error::Config(format!("grid must be non-empty, got {}x{}", self.nx, self.nv)));
        }
        if self.grids.contains(&0) {
            return Err(Error::Config("grid sizes must be positive".into()));
        }
        self.solver_config()?;
        for t in self.field_times.iter().flatten() {
            if !(0.0..=1.0).contains(t) {
                return Err(Error::Config(format!("field time {t} outside [0, 1]")));
            }
        }
        if let PresetChoice::Gridded { f, g } = &self.preset {
            for p in [f, g] {
                if !p.is_file() {
                    return Err(Error::Config(format!("gridded density file {} not found", p.display())));
                }
            }
        }
        Ok(())
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let cfg = SolverConfig::new(self.cfl_x, self.cfl_v, self.t_end, self.output_times.clone())
            .map_err(|e| Error::Config(strip_prefix(e)))?;
        Ok(cfg.with_scheme(self.scheme))
    }

    pub fn grid(&self) -> Result<PhaseGrid> {
        PhaseGrid::new(self.nx, self.nv)
    }

    pub fn preset(&self) -> Result<Preset> {
        let gaussian = |p: [f64; 4]| DensitySpec::gaussian(p[0], p[1], p[2], p[3]);
        let preset = match &self.preset {
            PresetChoice::Torus => match self.eps_g {
                Some(eps_g) if eps_g != self.eps => {
                    Preset::from_pair("torus", DensitySpec::torus_f(self.eps)?, DensitySpec::torus_g(eps_g, self.eta)?)
                }
                _ => Preset::torus(self.eps, self.eta)?,
            },
            PresetChoice::GaussianShift => match self.gaussian_f {
                Some(p) => {
                    let f = gaussian(p)?;
                    let g = DensitySpec::sheared(f.clone(), 1.0)?;
                    Preset::from_pair("gaussian-shift", f, g)
                }
                None => Preset::gaussian_shift()?,
            },
            PresetChoice::GaussianTransport => {
                let base = Preset::gaussian_transport()?;
                let f = self.gaussian_f.map(gaussian).transpose()?.unwrap_or(base.f);
                let g = self.gaussian_g.map(gaussian).transpose()?.unwrap_or(base.g);
                let w = Preset::GAUSSIAN_WINDOW;
                Preset::from_pair("gaussian-transport", f, g).with_v_window(-w, w)?
            }
            PresetChoice::Gridded { f, g } => {
                let load = |p: &PathBuf| -> Result<DensitySpec> {
                    let snap = GridSnapshot::load(p).map_err(|e| match e {
                        Error::Io(io) => Error::Config(format!("cannot read {}: {io}", p.display())),
                        other => other,
                    })?;
                    DensitySpec::gridded(snap.into_density()?)
                };
                Preset::from_pair("gridded", load(f)?, load(g)?)
            }
        };
        match self.v_window {
            Some((lo, hi)) => preset.with_v_window(lo, hi),
            None => Ok(preset),
        }
    }
}

fn strip_prefix(e: Error) -> String {
    match e {
        Error::Config(s) | Error::InvalidArgument(s) => s,
        other => other.to_string(),
    }
}

/// Map an error to the process exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Compatibility { .. } => EXIT_COMPAT,
        Error::NonFinite { .. } | Error::Cfl { .. } => EXIT_BLOWUP,
        _ => EXIT_CONFIG,
    }
}

#[derive(Debug, Parser)]
#[command(name = "kinetic-moser", version, about = "Moser-type acceleration fields for the kinetic Liouville equation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the velocity-marginal compatibility of the endpoint pair.
    CheckCompat(CommonArgs),
    /// Build the acceleration field and write it in CSV and binary form.
    BuildField(CommonArgs),
    /// Run the Liouville solver and write diagnostics and density snapshots.
    Simulate(CommonArgs),
    /// L1 error at the final time over a sequence of grids.
    Convergence(ConvergenceArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// `key = value` config file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// torus, gaussian-shift, gaussian-transport or gridded:<f.bin>,<g.bin>
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub nv: Option<usize>,
    /// Sets both the x and v Courant numbers.
    #[arg(long)]
    pub cfl: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// closed-form or numeric
    #[arg(long)]
    pub method: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ConvergenceArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated grid sizes (square grids).
    #[arg(long, value_delimiter = ',')]
    pub grids: Option<Vec<usize>>,
}

impl CommonArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(p) = &self.preset {
            cfg.preset = p.parse()?;
        }
        if let Some(n) = self.nx {
            cfg.nx = n;
        }
        if let Some(n) = self.nv {
            cfg.nv = n;
        }
        if let Some(c) = self.cfl {
            cfg.cfl_x = c;
            cfg.cfl_v = c;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(m) = &self.method {
            cfg.field_method = m.parse()?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parse `args` (program name first) and run; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            };
        }
    };
    match execute(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(command: &Command) -> Result<()> {
    match command {
        Command::CheckCompat(args) => {
            let report = cmd_check_compat(&args.resolve()?)?;
            let mut out = std::io::stdout().lock();
            writeln!(out, "x,residual")?;
            for (x, r) in report.xs.iter().zip(&report.residuals) {
                writeln!(out, "{x},{r:e}")?;
            }
            writeln!(out, "# max residual {:.6e} at x = {:.6}", report.max_residual, report.worst_x)?;
            if report.passes(BUILD_COMPAT_TOL) {
                Ok(())
            } else {
                Err(report.to_error())
            }
        }
        Command::BuildField(args) => {
            for p in cmd_build_field(&args.resolve()?)? {
                println!("{}", p.display());
            }
            Ok(())
        }
        Command::Simulate(args) => {
            let records = cmd_simulate(&args.resolve()?)?;
            write_diagnostics_csv(std::io::stdout().lock(), &records)
        }
        Command::Convergence(args) => {
            let mut cfg = args.common.resolve()?;
            if let Some(grids) = &args.grids {
                cfg.grids = grids.clone();
            }
            cfg.validate()?;
            let rows = cmd_convergence(&cfg)?;
            write_convergence_csv(std::io::stdout().lock(), &rows)?;
            if !convergence_ok(&rows) {
                eprintln!("warning: errors not monotonically decreasing with order >= 1");
            }
            Ok(())
        }
    }
}

/// Per-x marginal residuals at the x cell centres. Does not fail on an
/// incompatible pair; the caller decides.
pub fn cmd_check_compat(cfg: &RunConfig) -> Result<CompatReport> {
    let preset = cfg.preset()?;
    let grid = cfg.grid()?;
    let axis = preset.velocity_axis(cfg.nv)?;
    Ok(check_compatibility(&preset.f, &preset.g, &grid, &axis))
}

fn time_tag(t: f64) -> String {
    format!("t{t:.4}")
}

fn create_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))
}

/// Samples `a(x, v, t)` on the node lattice `x_i = i dx`, `v_j = v_min + j dv`
/// for every field time and writes `field_<t>.csv` and `field_<t>.bin`.
pub fn cmd_build_field(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let preset = cfg.preset()?;
    let grid = cfg.grid()?;
    let axis = preset.velocity_axis(cfg.nv)?;
    let field = build_field(&preset.f, &preset.g, cfg.field_method, &grid, &axis)?;
    create_out_dir(&cfg.output_dir)?;

    let xs: Vec<f64> = (0..cfg.nx).map(|i| i as f64 * grid.dx()).collect();
    let vs: Vec<f64> = (0..cfg.nv).map(|j| axis.face(j)).collect();
    let times = cfg.field_times.as_ref().unwrap_or(&cfg.output_times);
    let mut written = Vec::new();
    for &t in times {
        let at = field.at_time(t)?;
        let values: Vec<f64> =
            xs.iter().flat_map(|&x| vs.iter().map(move |&v| (x, v))).map(|(x, v)| at.eval(x, v)).collect();
        let stem = format!("field_{}", time_tag(t));
        let csv = cfg.output_dir.join(format!("{stem}.csv"));
        let mut w = BufWriter::new(File::create(&csv)?);
        write_field_csv(&mut w, &xs, &vs, t, &values)?;
        w.flush()?;
        let bin = cfg.output_dir.join(format!("{stem}.bin"));
        GridSnapshot { nx: cfg.nx, nv: cfg.nv, t, values }.save(&bin)?;
        written.push(csv);
        written.push(bin);
    }
    Ok(written)
}

/// Full pipeline; writes `diagnostics.csv` and `rho_<t>.bin` per output time.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<Vec<DiagnosticsRecord>> {
    let preset = cfg.preset()?;
    if !preset.is_periodic() {
        return Err(Error::Config(format!(
            "preset '{}' lives on a truncated velocity window; simulate needs the periodic torus",
            preset.name
        )));
    }
    let grid = cfg.grid()?;
    let axis = preset.velocity_axis(cfg.nv)?;
    let solver = cfg.solver_config()?;
    let field = build_field(&preset.f, &preset.g, cfg.field_method, &grid, &axis)?;
    let snaps = simulate(&preset.f, &field, &grid, &solver)?;
    let records = diagnose(&snaps, &preset.f, &preset.g)?;

    create_out_dir(&cfg.output_dir)?;
    let mut w = BufWriter::new(File::create(cfg.output_dir.join("diagnostics.csv"))?);
    write_diagnostics_csv(&mut w, &records)?;
    w.flush()?;
    for s in &snaps {
        let path = cfg.output_dir.join(format!("rho_{}.bin", time_tag(s.t)));
        GridSnapshot::from_density(&s.rho, s.t).save(&path)?;
    }
    Ok(records)
}

/// Convergence study over `cfg.grids`; writes `convergence.csv`.
pub fn cmd_convergence(cfg: &RunConfig) -> Result<Vec<ConvergenceRow>> {
    if cfg.grids.len() < 2 {
        return Err(Error::Config("convergence needs at least two grids".into()));
    }
    let preset = cfg.preset()?;
    let rows = convergence_study(&preset, &cfg.grids, cfg.field_method, &cfg.solver_config()?)?;
    create_out_dir(&cfg.output_dir)?;
    let mut w = BufWriter::new(File::create(cfg.output_dir.join("convergence.csv"))?);
    write_convergence_csv(&mut w, &rows)?;
    w.flush()?;
    Ok(rows)
}

/// Errors strictly decreasing and every observed order at least 1.
pub fn convergence_ok(rows: &[ConvergenceRow]) -> bool {
    rows.windows(2).all(|w| w[1].l1_error < w[0].l1_error) && rows.iter().filter_map(|r| r.order).all(|p| p >= 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_config_file() {
        let text = "\
# torus run
preset = torus
eps = 0.3   # source
eta = 0.5
nx = 64
nv = 32
cfl = 0.5
output_times = 0, 0.5, 1
method = numeric
scheme = hancock
grids = 32, 64
";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.nx, 64);
        assert_eq!(cfg.nv, 32);
        assert_eq!((cfg.cfl_x, cfg.cfl_v), (0.5, 0.5));
        assert_eq!(cfg.output_times, vec![0.0, 0.5, 1.0]);
        assert_eq!(cfg.field_method, FieldMethod::Numeric);
        assert_eq!(cfg.scheme, EdgeScheme::Hancock);
        assert_eq!(cfg.grids, vec![32, 64]);
        cfg.validate().unwrap();
    }

    #[test]
    fn parse_rejects_bad_input() {
        for text in ["nx = -3", "bogus = 1", "nx 64", "nx = 1\nnx = 2", "gaussian_f = 1, 2", "preset = nope"] {
            assert!(matches!(RunConfig::parse(text), Err(Error::Config(_))), "{text}");
        }
        let cfg = RunConfig::parse("cfl = 1.5").unwrap();
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn preset_strings() {
        assert_eq!("torus".parse::<PresetChoice>().unwrap(), PresetChoice::Torus);
        assert_eq!(
            "gridded:a.bin,b.bin".parse::<PresetChoice>().unwrap(),
            PresetChoice::Gridded { f: "a.bin".into(), g: "b.bin".into() }
        );
        assert!("gridded:a.bin".parse::<PresetChoice>().is_err());
    }

    #[test]
    fn missing_gridded_file_is_config_error() {
        let cfg = RunConfig::parse("preset = gridded:/nonexistent/f.bin,/nonexistent/g.bin").unwrap();
        let e = cfg.validate().unwrap_err();
        assert_eq!(exit_code(&e), EXIT_CONFIG);
    }

    #[test]
    fn mismatched_pair_residual() {
        let cfg = RunConfig::parse("eps_g = 0.2\nnx = 64\nnv = 64").unwrap();
        let report = cmd_check_compat(&cfg).unwrap();
        assert!(!report.passes(BUILD_COMPAT_TOL));
        assert!((report.max_residual - 1.59e-2).abs() < 1e-4);
        assert_eq!(exit_code(&report.to_error()), EXIT_COMPAT);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::NonFinite { step: 3 }), EXIT_BLOWUP);
        assert_eq!(exit_code(&Error::Config("x".into())), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::Compatibility { max_residual: 1.0, worst_x: 0.0 }), EXIT_COMPAT);
    }
}
