//! Command-line front end.
//!
//! Every command writes one table, as CSV (header row, `,` separator,
//! numbers with 17 significant digits) or as JSON
//! `{"columns": [...], "rows": [[...], ...]}` carrying the same values.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::analysis::{
    grid_points, landauer_current, reflectionless_report, EnergyGrid, Quadrature, Reservoir, DEFAULT_TOL,
};
use crate::config::{parse_config, to_config};
use crate::dynamics::{scattering_from_dynamics, DynamicalReflection};
use crate::error::Error;
use crate::herglotz::{m_left, m_right};
use crate::jost::alpha_beta;
use crate::model::{random_perturbation, BoundaryPoint, JacobiSpec};
use crate::scattering::{green_diag, reflection_transmission, scattering_matrix, unitarity_defect};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DISAGREEMENT: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

/// Points per band used when neither `--grid` nor `--lambda` is given.
const DEFAULT_SCAN: usize = 1000;

#[derive(Debug, Parser)]
#[command(
    name = "jacobi-scatter",
    version,
    about = "Spectral and scattering analysis of Jacobi operators"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Operator configuration (JSON). Defaults to the free chain.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Energy grid `start:stop:step`; `stop` is included when within `step/2`.
    #[arg(long, global = true, allow_hyphen_values = true, conflicts_with = "lambda")]
    grid: Option<String>,
    /// Single energy.
    #[arg(long, global = true, allow_hyphen_values = true)]
    lambda: Option<f64>,
    /// Cut site (truncation half-width for `dynamics`).
    #[arg(long, global = true, allow_hyphen_values = true)]
    n: Option<i64>,
    /// Output file, written atomically. Defaults to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Verdict threshold for `reflect-check`.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Replace the configured perturbation by a seeded random one.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Canonical configuration and band edges.
    Describe,
    /// Half-line m-functions at `λ + iη`.
    Mfunc {
        #[arg(long, default_value_t = 0.0)]
        eta: f64,
    },
    /// Diagonal Green's function at `λ + iη`.
    Green {
        #[arg(long, default_value_t = 0.0)]
        eta: f64,
    },
    /// Scattering matrix of the pair decoupled at the cut site.
    Scatter,
    /// Jost expansion coefficients and reflection probabilities.
    Jost,
    /// Reflectionless criteria report.
    ReflectCheck {
        /// Cut sites `first:last`.
        #[arg(long, default_value = "-3:3", allow_hyphen_values = true)]
        cuts: String,
    },
    /// Wave-packet scattering experiments.
    Dynamics {
        #[arg(long, default_value_t = 0.05)]
        dlambda: f64,
    },
    /// Landauer-Büttiker currents.
    Transport {
        #[arg(long, default_value_t = 1.0)]
        beta_l: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        mu_l: f64,
        #[arg(long, default_value_t = 1.0)]
        beta_r: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        mu_r: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x:.16e}"),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => json!(x),
            Cell::Int(i) => json!(i),
            Cell::Bool(b) => json!(b),
        }
    }
}

#[derive(Debug, Default)]
struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut out = self.columns.join(",");
                out.push('\n');
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    let _ = writeln!(out, "{}", cells.join(","));
                }
                out
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
                    .collect();
                let mut out = serde_json::to_string_pretty(&json!({ "columns": self.columns, "rows": rows }))
                    .expect("table serializes");
                out.push('\n');
                out
            }
        }
    }
}

fn num(x: f64) -> Cell {
    Cell::Num(x)
}

/// Error wrapper carrying the exit code.
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Schema { .. }
            | Error::NonPositiveCoefficient { .. }
            | Error::NonFiniteEntry { .. }
            | Error::InvalidPeriod { .. }
            | Error::InvalidArgument(_)
            | Error::InvalidPoint(_)
            | Error::WindowTooSmall { .. } => EXIT_CONFIG,
            _ => EXIT_NUMERICAL,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        message: message.into(),
    }
}

/// Grid-point failures that drop the point instead of aborting the run.
fn skippable(e: &Error) -> bool {
    matches!(
        e,
        Error::BandEdge { .. }
            | Error::NoOpenChannel { .. }
            | Error::NormalizationPole { .. }
            | Error::DegenerateBasis { .. }
            | Error::PoleHit { .. }
    )
}

struct Context<'a> {
    spec: JacobiSpec,
    common: &'a Common,
    notes: Vec<String>,
}

impl Context<'_> {
    fn energies(&self) -> Result<Vec<f64>, Failure> {
        if let Some(g) = &self.common.grid {
            let (start, stop, step) = parse_grid(g)?;
            Ok(grid_points(start, stop, step)?)
        } else if let Some(l) = self.common.lambda {
            Ok(vec![l])
        } else {
            Ok(EnergyGrid::band_scan(&self.spec, DEFAULT_SCAN).points)
        }
    }

    fn cut(&self) -> i64 {
        self.common.n.unwrap_or(0)
    }

    /// Runs `f` per energy, dropping points with recoverable failures.
    /// Fails with exit 4 if every point was dropped.
    fn per_point(
        &mut self,
        table: &mut Table,
        mut f: impl FnMut(&JacobiSpec, f64) -> crate::Result<Vec<Cell>>,
    ) -> Result<(), Failure> {
        let energies = self.energies()?;
        let mut last = None;
        for lambda in energies.iter().copied() {
            match f(&self.spec, lambda) {
                Ok(row) => table.push(row),
                Err(e) if skippable(&e) => {
                    self.notes.push(format!("skipped λ = {lambda}: {e}"));
                    last = Some(e);
                }
                Err(e) => return Err(e.into()),
            }
        }
        if table.rows.is_empty() {
            if let Some(e) = last {
                return Err(Failure {
                    code: EXIT_NUMERICAL,
                    message: format!("no grid point could be evaluated: {e}"),
                });
            }
        }
        Ok(())
    }
}

fn parse_grid(text: &str) -> Result<(f64, f64, f64), Failure> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(usage(format!("grid `{text}` is not of the form start:stop:step")));
    }
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| usage(format!("grid `{text}`: `{s}` is not a number")))
    };
    Ok((parse(parts[0])?, parse(parts[1])?, parse(parts[2])?))
}

fn parse_cuts(text: &str) -> Result<std::ops::RangeInclusive<i64>, Failure> {
    let (a, b) = text
        .split_once(':')
        .ok_or_else(|| usage(format!("cuts `{text}` is not of the form first:last")))?;
    let parse = |s: &str| {
        s.trim()
            .parse::<i64>()
            .map_err(|_| usage(format!("cuts `{text}`: `{s}` is not an integer")))
    };
    Ok(parse(a)?..=parse(b)?)
}

fn load_spec(common: &Common) -> Result<JacobiSpec, Failure> {
    let spec = match &common.config {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => JacobiSpec::free(),
    };
    Ok(match common.seed {
        Some(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            random_perturbation(&mut rng, spec.background().clone(), 8)
        }
        None => spec,
    })
}

fn evaluation_point(lambda: f64, eta: f64) -> crate::Result<BoundaryPoint> {
    if eta == 0.0 {
        Ok(BoundaryPoint::above(lambda))
    } else {
        BoundaryPoint::upper(Complex64::new(lambda, eta))
    }
}

fn describe(ctx: &Context) -> Table {
    let mut t = Table::new(&["band", "lower", "upper"]);
    for (i, &(lo, hi)) in ctx.spec.bands().bands().iter().enumerate() {
        t.push(vec![Cell::Int(i as i64), num(lo), num(hi)]);
    }
    t
}

fn dynamics_row(d: &DynamicalReflection) -> Vec<Cell> {
    vec![
        num(d.lambda0),
        num(d.dlambda),
        Cell::Int(d.n as i64),
        num(d.t_star),
        num(d.r_dyn),
        num(d.t_dyn),
        num(d.site0_mass),
        num(d.r_stationary_avg),
        num(d.abs_error),
    ]
}

fn execute(command: &Command, ctx: &mut Context) -> Result<(Table, i32), Failure> {
    let n = ctx.cut();
    let mut code = EXIT_OK;
    let table = match command {
        Command::Describe => {
            ctx.notes
                .push(format!("configuration: {}", to_config(&ctx.spec).replace('\n', " ")));
            describe(ctx)
        }
        Command::Mfunc { eta } => {
            let eta = *eta;
            let mut t = Table::new(&["lambda", "n", "re_m_right", "im_m_right", "re_m_left", "im_m_left"]);
            ctx.per_point(&mut t, |spec, lambda| {
                let point = evaluation_point(lambda, eta)?;
                let r = m_right(spec, n, point)?.value;
                let l = m_left(spec, n, point)?.value;
                Ok(vec![
                    num(lambda),
                    Cell::Int(n),
                    num(r.re),
                    num(r.im),
                    num(l.re),
                    num(l.im),
                ])
            })?;
            t
        }
        Command::Green { eta } => {
            let eta = *eta;
            let mut t = Table::new(&["lambda", "n", "re_G", "im_G"]);
            ctx.per_point(&mut t, |spec, lambda| {
                let point = evaluation_point(lambda, eta)?;
                let g = green_diag(spec, n, point)?.value;
                Ok(vec![num(lambda), Cell::Int(n), num(g.re), num(g.im)])
            })?;
            t
        }
        Command::Scatter => {
            let mut t = Table::new(&[
                "lambda", "re_sll", "im_sll", "re_slr", "im_slr", "re_srr", "im_srr", "R", "T", "defect",
            ]);
            ctx.per_point(&mut t, |spec, lambda| {
                let s = scattering_matrix(spec, n, lambda)?;
                let rt = reflection_transmission(&s);
                Ok(vec![
                    num(lambda),
                    num(s.s_ll.re),
                    num(s.s_ll.im),
                    num(s.s_lr.re),
                    num(s.s_lr.im),
                    num(s.s_rr.re),
                    num(s.s_rr.im),
                    num(rt.r_l),
                    num(rt.t),
                    num(unitarity_defect(&s)),
                ])
            })?;
            t
        }
        Command::Jost => {
            let mut t = Table::new(&[
                "lambda",
                "re_alpha",
                "im_alpha",
                "re_beta",
                "im_beta",
                "R_spectral",
                "R_from_s",
                "residual",
            ]);
            ctx.per_point(&mut t, |spec, lambda| {
                let d = alpha_beta(spec, lambda)?;
                let s = scattering_matrix(spec, 0, lambda)?;
                Ok(vec![
                    num(lambda),
                    num(d.alpha.re),
                    num(d.alpha.im),
                    num(d.beta.re),
                    num(d.beta.im),
                    num(d.r_r),
                    num(s.s_rr.norm_sqr()),
                    num(d.residual),
                ])
            })?;
            t
        }
        Command::ReflectCheck { cuts } => {
            let cuts = parse_cuts(cuts)?;
            let tol = ctx.common.tol.unwrap_or(DEFAULT_TOL);
            let grid = EnergyGrid::explicit(&ctx.spec, &ctx.energies()?)?;
            let report = reflectionless_report(&ctx.spec, &grid, cuts, tol)?;
            for (lambda, why) in &report.dropped {
                ctx.notes.push(format!("skipped λ = {lambda}: {why}"));
            }
            if report.points.is_empty() {
                return Err(Failure {
                    code: EXIT_NUMERICAL,
                    message: "no grid point was retained".into(),
                });
            }
            let mut t = Table::new(&[
                "lambda",
                "n",
                "re_G",
                "specref_residual",
                "s_ll_mag",
                "verdict_mt",
                "verdict_spec",
                "verdict_stat",
                "agree",
            ]);
            for p in &report.points {
                for r in report.rows_at(p.lambda) {
                    t.push(vec![
                        num(r.lambda),
                        Cell::Int(r.n),
                        num(r.re_g),
                        num(r.specref_residual),
                        num(r.s_diag_mag),
                        Cell::Bool(r.verdict_mt),
                        Cell::Bool(r.verdict_spec),
                        Cell::Bool(r.verdict_stat),
                        Cell::Bool(p.agree),
                    ]);
                }
            }
            let reflecting = report.points.iter().filter(|p| !p.mt_all).count();
            ctx.notes.push(format!(
                "{} of {} energies reflectionless at tolerance {tol:e}",
                report.points.len() - reflecting,
                report.points.len()
            ));
            if !report.all_agree() {
                let bad = report.points.iter().filter(|p| !p.agree).count();
                ctx.notes.push(format!("criteria disagree at {bad} energies"));
                code = EXIT_DISAGREEMENT;
            }
            t
        }
        Command::Dynamics { dlambda } => {
            let half_width = match ctx.common.n {
                Some(v) if v > 0 => v as usize,
                Some(v) => return Err(usage(format!("truncation half-width {v} must be positive"))),
                None => 2000,
            };
            let centres = match (&ctx.common.grid, ctx.common.lambda) {
                (None, None) => return Err(usage("dynamics needs --lambda or --grid")),
                _ => ctx.energies()?,
            };
            let results = scattering_from_dynamics(&ctx.spec, &centres, *dlambda, half_width)?;
            let mut t = Table::new(&[
                "lambda0",
                "dlambda",
                "N",
                "t_star",
                "R_dyn",
                "T_dyn",
                "site0_mass",
                "R_stationary_avg",
                "abs_error",
            ]);
            results.iter().for_each(|d| t.push(dynamics_row(d)));
            t
        }
        Command::Transport {
            beta_l,
            mu_l,
            beta_r,
            mu_r,
        } => {
            let left = Reservoir {
                beta: *beta_l,
                mu: *mu_l,
            };
            let right = Reservoir {
                beta: *beta_r,
                mu: *mu_r,
            };
            let i = landauer_current(&ctx.spec, left, right, Quadrature::default())?;
            let mut t = Table::new(&["beta_l", "mu_l", "beta_r", "mu_r", "I_charge", "I_energy"]);
            t.push(vec![
                num(*beta_l),
                num(*mu_l),
                num(*beta_r),
                num(*mu_r),
                num(i.charge),
                num(i.energy),
            ]);
            t
        }
    };
    Ok((table, code))
}

/// Writes `contents` to a temporary file next to `path` and renames it.
fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{e}");
                    EXIT_CONFIG
                }
            };
        }
    };
    let outcome = load_spec(&cli.common).and_then(|spec| {
        let mut ctx = Context {
            spec,
            common: &cli.common,
            notes: Vec::new(),
        };
        let result = execute(&cli.command, &mut ctx);
        for note in &ctx.notes {
            let _ = writeln!(stderr, "note: {note}");
        }
        result
    });
    match outcome {
        Ok((table, code)) => {
            let text = table.render(cli.common.format);
            let written = match &cli.common.out {
                Some(path) => write_atomic(path, &text),
                None => stdout.write_all(text.as_bytes()),
            };
            if let Err(e) = written {
                let _ = writeln!(stderr, "error: cannot write output: {e}");
                return EXIT_NUMERICAL;
            }
            code
        }
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}
