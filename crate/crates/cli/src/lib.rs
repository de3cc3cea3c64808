//! The `hammfix` command line: argument and config-file resolution, and
//! the `coeffs`, `solve`, `scan`, `verify` and `gibbs-check` commands.
//!
//! Exit status: 0 when every gate passes, 1 on usage errors, 2 when a
//! verification gate fails, 3 for unreadable or malformed config files,
//! 4 when an enumeration would exceed its budget, 5 for anything else.

pub mod config;
pub mod output;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use hammfix::gibbs::marginal_compatibility_with;
use hammfix::{
    build_quartic, classify_discriminant, classify_regime, coefficients_closed_form, coefficients_quadrature,
    cubic_apply, fixed_functions_from, hammerstein_residual, positive_roots, rk_function_of, rk_residual,
    scan_phase, tableau_for, CoefficientTableau, DiscretizedSpin, DiscriminantReport, FixedFunction,
    GibbsCheckReport, KernelSpec, ModelSpec, Regime, RegimeClassification, ResidualOptions, RootSet, ScanGrid,
    ScanRow, SolveOptions, TableauSource,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use config::FileConfig;
use output::{csv_float, to_json};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_VERIFY: u8 = 2;
pub const EXIT_CONFIG: u8 = 3;
pub const EXIT_BUDGET: u8 = 4;
pub const EXIT_FAILURE: u8 = 5;

/// Largest cubic-map residual a fixed point may carry.
pub const CUBIC_GATE: f64 = 1e-9;
/// Largest entrywise gap between closed-form and quadrature tableaux.
pub const COEFFICIENT_GATE: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("budget: {0}")]
    Budget(String),
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::Config(_) => EXIT_CONFIG,
            Self::Budget(_) => EXIT_BUDGET,
            Self::Failure(_) => EXIT_FAILURE,
        }
    }
}

impl From<hammfix::Error> for CliError {
    fn from(e: hammfix::Error) -> Self {
        use hammfix::Error as E;
        match e {
            E::InvalidParameter(_) | E::OutOfDomain { .. } | E::NonPositiveKernel { .. } => Self::Usage(e.to_string()),
            E::BudgetExceeded { .. } => Self::Budget(e.to_string()),
            other => Self::Failure(other.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "hammfix", version, about = "Fixed points of cubic Hammerstein operators and their Gibbs measures")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Closed-form and quadrature coefficient tableaux and the quartic.
    Coeffs(Point),
    /// Regime and every positive fixed point with its residuals.
    Solve(Point),
    /// Fixed-point counts over a grid of (a, b).
    Scan,
    /// Residual verdicts for every fixed point, or re-check a saved report.
    Verify(VerifyArgs),
    /// Finite-tree Gibbs compatibility for every fixed point.
    GibbsCheck(Point),
}

#[derive(Args, Debug, Clone, Default)]
pub struct Point {
    #[arg(allow_negative_numbers = true)]
    pub a: Option<f64>,
    #[arg(allow_negative_numbers = true)]
    pub b: Option<f64>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub point: Point,
    /// JSON report from `solve` or `verify` to re-check.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Flags {
    /// Kernel parameter a (alternative to the positional form).
    #[arg(id = "a_flag", long = "a", value_name = "A", global = true, allow_negative_numbers = true)]
    pub a: Option<f64>,
    /// Kernel parameter b.
    #[arg(id = "b_flag", long = "b", value_name = "B", global = true, allow_negative_numbers = true)]
    pub b: Option<f64>,
    /// Absolute tolerance for coefficient and residual integrals.
    #[arg(long, global = true)]
    pub quad_tol: Option<f64>,
    /// Root refinement tolerance.
    #[arg(long, global = true)]
    pub root_tol: Option<f64>,
    /// Pass threshold for sup-norm residuals and Gibbs discrepancies.
    #[arg(long, global = true)]
    pub residual_tol: Option<f64>,
    #[arg(long, global = true)]
    pub a_min: Option<f64>,
    #[arg(long, global = true)]
    pub a_max: Option<f64>,
    #[arg(long, global = true)]
    pub a_steps: Option<usize>,
    #[arg(long, global = true)]
    pub b_min: Option<f64>,
    #[arg(long, global = true)]
    pub b_max: Option<f64>,
    #[arg(long, global = true)]
    pub b_steps: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Tree order.
    #[arg(long, global = true)]
    pub k: Option<u32>,
    /// Radius of the larger ball.
    #[arg(long, global = true)]
    pub n: Option<u32>,
    /// Spin discretisation size.
    #[arg(long, global = true)]
    pub m: Option<usize>,
    /// Successors of the root: k or k + 1.
    #[arg(long, global = true)]
    pub root_branching: Option<u32>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub jbeta: Option<f64>,
    /// Flat `key = value` file; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommandKind {
    Coeffs,
    Solve,
    Scan,
    Verify,
    GibbsCheck,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GibbsOptions {
    pub k: u32,
    pub n: u32,
    pub m: usize,
    pub root_branching: u32,
    pub jbeta: f64,
}

/// Fully resolved settings for one invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub quad_tol: f64,
    pub root_tol: f64,
    pub residual_tol: f64,
    pub grid: ScanGrid,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub gibbs: GibbsOptions,
    pub report: Option<PathBuf>,
}

impl RunConfig {
    pub fn resolve(cli: Cli) -> Result<Self, CliError> {
        let file = match &cli.flags.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let f = &cli.flags;
        let (command, point, report) = match cli.command {
            Command::Coeffs(p) => (CommandKind::Coeffs, p, None),
            Command::Solve(p) => (CommandKind::Solve, p, None),
            Command::Scan => (CommandKind::Scan, Point::default(), None),
            Command::Verify(v) => (CommandKind::Verify, v.point, v.report),
            Command::GibbsCheck(p) => (CommandKind::GibbsCheck, p, None),
        };
        let pick = |positional: Option<f64>, flag: Option<f64>, key: &str| -> Result<Option<f64>, CliError> {
            if let (Some(p), Some(q)) = (positional, flag) {
                if p != q {
                    return Err(CliError::Usage(format!("{key} given twice: {p} and {q}")));
                }
            }
            Ok(positional.or(flag).or(file.get(key)?))
        };
        let a = pick(point.a, f.a, "a")?;
        let b = pick(point.b, f.b, "b")?;
        let k = f.k.or(file.get("k")?).unwrap_or(3);
        let out = f.out.clone().or(file.get::<String>("out")?.map(PathBuf::from));
        let format = match (f.format, file.get::<String>("format")?) {
            (Some(fmt), _) => fmt,
            (None, Some(s)) => Format::from_str(&s, true)
                .map_err(|_| CliError::Config(format!("invalid value `{s}` for `format`")))?,
            (None, None) => Format::Json,
        };
        let cfg = Self {
            command,
            a,
            b,
            quad_tol: f.quad_tol.or(file.get("quad-tol")?).unwrap_or(1e-10),
            root_tol: f.root_tol.or(file.get("root-tol")?).unwrap_or(1e-13),
            residual_tol: f.residual_tol.or(file.get("residual-tol")?).unwrap_or(1e-6),
            grid: ScanGrid {
                a_min: f.a_min.or(file.get("a-min")?).unwrap_or(1.0),
                a_max: f.a_max.or(file.get("a-max")?).unwrap_or(20.0),
                a_steps: f.a_steps.or(file.get("a-steps")?).unwrap_or(40),
                b_min: f.b_min.or(file.get("b-min")?).unwrap_or(1.0),
                b_max: f.b_max.or(file.get("b-max")?).unwrap_or(1.0),
                b_steps: f.b_steps.or(file.get("b-steps")?).unwrap_or(1),
            },
            format,
            out,
            gibbs: GibbsOptions {
                k,
                n: f.n.or(file.get("n")?).unwrap_or(1),
                m: f.m.or(file.get("m")?).unwrap_or(24),
                root_branching: f.root_branching.or(file.get("root-branching")?).unwrap_or(k + 1),
                jbeta: f.jbeta.or(file.get("jbeta")?).unwrap_or(1.0),
            },
            report,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        for (name, v) in [
            ("quad-tol", self.quad_tol),
            ("root-tol", self.root_tol),
            ("residual-tol", self.residual_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Usage(format!("{name} must be positive, got {v}")));
            }
        }
        if self.format == Format::Csv && self.command != CommandKind::Scan {
            return Err(CliError::Usage("csv output is available for scan only".into()));
        }
        if self.report.is_some() && (self.a.is_some() || self.b.is_some()) {
            return Err(CliError::Usage("verify takes either a b or --report, not both".into()));
        }
        Ok(())
    }

    fn point(&self) -> Result<(f64, f64), CliError> {
        match (self.a, self.b) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(CliError::Usage("kernel parameters a and b are required".into())),
        }
    }

    fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            quad_tol: self.quad_tol,
            root_tol: self.root_tol,
            source: TableauSource::Auto,
        }
    }

    fn residual_options(&self) -> ResidualOptions {
        ResidualOptions {
            tol: self.quad_tol,
            ..ResidualOptions::default()
        }
    }
}

/// A finished command: the rendered report and the exit status it earned.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub body: String,
    pub status: u8,
}

impl Outcome {
    fn json<T: Serialize>(report: &T, pass: bool) -> Result<Self, CliError> {
        Ok(Self {
            body: to_json(report).map_err(|e| CliError::Failure(e.to_string()))?,
            status: if pass { EXIT_OK } else { EXIT_VERIFY },
        })
    }
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    match cfg.command {
        CommandKind::Coeffs => coeffs(cfg),
        CommandKind::Solve => {
            let report = solve_report(cfg, "solve")?;
            Outcome::json(&report, report.pass)
        }
        CommandKind::Scan => scan(cfg),
        CommandKind::Verify => match &cfg.report {
            Some(path) => reverify(cfg, path),
            None => {
                let report = solve_report(cfg, "verify")?;
                Outcome::json(&report, report.pass)
            }
        },
        CommandKind::GibbsCheck => gibbs_check(cfg),
    }
}

/// Writes the report to `--out` or standard output.
pub fn emit(cfg: &RunConfig, outcome: &Outcome) -> Result<(), CliError> {
    match &cfg.out {
        Some(path) => std::fs::write(path, &outcome.body)
            .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", path.display()))),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(outcome.body.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Failure(e.to_string()))
        }
    }
}

#[derive(Serialize)]
struct QuarticReport {
    /// `μ₀ … μ₄`
    mu: [f64; 5],
    /// Power-basis coefficients, highest degree first.
    coefficients: [f64; 5],
}

#[derive(Serialize)]
struct LinearCoefficient {
    /// `a11 − 3a21`, the coefficient the factorisation needs.
    factorised: f64,
    /// `a11 − 3a12`, the transposed form.
    transposed: f64,
    difference: f64,
}

#[derive(Serialize)]
struct CoeffsReport {
    command: &'static str,
    a: f64,
    b: f64,
    closed_form: CoefficientTableau,
    quadrature: CoefficientTableau,
    max_discrepancy: f64,
    gate: f64,
    quartic: QuarticReport,
    linear_coefficient: LinearCoefficient,
    discriminant: Option<DiscriminantReport>,
    pass: bool,
}

fn coeffs(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (a, b) = cfg.point()?;
    let closed = coefficients_closed_form(a, b)?;
    let spec = KernelSpec::trig_nonnegative(a, b)?;
    let quad = coefficients_quadrature(&spec, cfg.quad_tol)?;
    let q = build_quartic(&closed);
    let max_discrepancy = closed.max_abs_diff(&quad);
    let factorised = closed.a11 - 3.0 * closed.a21;
    let transposed = q.transposed_linear_coefficient();
    let discriminant = classify_discriminant(&closed, hammfix::polyroots::default_discriminant_eps(&closed)).ok();
    let report = CoeffsReport {
        command: "coeffs",
        a,
        b,
        closed_form: closed,
        quadrature: quad,
        max_discrepancy,
        gate: COEFFICIENT_GATE,
        quartic: QuarticReport {
            mu: [q.mu0, q.mu1, q.mu2, q.mu3, q.mu4],
            coefficients: q.coefficients(),
        },
        linear_coefficient: LinearCoefficient {
            factorised,
            transposed,
            difference: factorised - transposed,
        },
        discriminant,
        pass: max_discrepancy <= COEFFICIENT_GATE,
    };
    Outcome::json(&report, report.pass)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gates {
    pub cubic: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport {
    pub xi0: f64,
    pub x0: f64,
    pub y0: f64,
    pub multiplicity: u32,
    pub cubic_residual: f64,
    pub hammerstein_residual: f64,
    pub rk_residual: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundTrip {
    pub stored: Vec<bool>,
    pub recomputed: Vec<bool>,
    pub agree: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub command: String,
    pub a: f64,
    pub b: f64,
    pub classification: RegimeClassification,
    pub tableau: CoefficientTableau,
    pub roots: RootSet,
    pub count: usize,
    pub count_matches_regime: bool,
    pub gates: Gates,
    pub fixed_points: Vec<FixedPointReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub round_trip: Option<RoundTrip>,
    pub pass: bool,
}

fn check_point(
    spec: &KernelSpec,
    tab: &CoefficientTableau,
    (xi0, x0, y0, multiplicity): (f64, f64, f64, u32),
    gates: Gates,
    opts: &ResidualOptions,
) -> Result<FixedPointReport, CliError> {
    let (cx, cy) = cubic_apply(tab, x0, y0);
    let cubic_residual = (cx - x0).abs().max((cy - y0).abs());
    let f = FixedFunction::new([x0, y0], spec.phi().clone());
    let hammerstein_residual = hammerstein_residual(spec, &f, 3, opts)?;
    let g = rk_function_of(&f, 3)?;
    let rk_residual = rk_residual(spec, &g, 3, opts)?;
    let pass = cubic_residual < gates.cubic && hammerstein_residual < gates.residual && rk_residual < gates.residual;
    Ok(FixedPointReport {
        xi0,
        x0,
        y0,
        multiplicity,
        cubic_residual,
        hammerstein_residual,
        rk_residual,
        pass,
    })
}

fn solve_report(cfg: &RunConfig, command: &str) -> Result<SolveReport, CliError> {
    let (a, b) = cfg.point()?;
    let spec = KernelSpec::trig(a, b)?;
    let classification = classify_regime(a, b)?;
    let opts = cfg.solve_options();
    let tab = tableau_for(&spec, &opts)?;
    let roots = positive_roots(&build_quartic(&tab), cfg.root_tol)?;
    let descs = fixed_functions_from(&spec, &tab, &opts)?;
    let gates = Gates {
        cubic: CUBIC_GATE,
        residual: cfg.residual_tol,
    };
    let ropts = cfg.residual_options();
    let fixed_points = descs
        .iter()
        .map(|d| check_point(&spec, &tab, (d.xi0, d.x0, d.y0, d.multiplicity), gates, &ropts))
        .collect::<Result<Vec<_>, _>>()?;
    let count = fixed_points.len();
    let count_matches_regime = count == classification.expected_count;
    let pass = count_matches_regime && fixed_points.iter().all(|p| p.pass);
    Ok(SolveReport {
        command: command.into(),
        a,
        b,
        classification,
        tableau: tab,
        roots,
        count,
        count_matches_regime,
        gates,
        fixed_points,
        round_trip: None,
        pass,
    })
}

/// Recomputes every verdict of a saved report from its stored fixed points
/// and gates.
fn reverify(cfg: &RunConfig, path: &Path) -> Result<Outcome, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read report {}: {e}", path.display())))?;
    let stored: SolveReport = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("malformed report {}: {e}", path.display())))?;
    let spec = KernelSpec::trig(stored.a, stored.b)?;
    let tab = tableau_for(&spec, &cfg.solve_options())?;
    let classification = classify_regime(stored.a, stored.b)?;
    let ropts = cfg.residual_options();
    let fixed_points = stored
        .fixed_points
        .iter()
        .map(|p| check_point(&spec, &tab, (p.xi0, p.x0, p.y0, p.multiplicity), stored.gates, &ropts))
        .collect::<Result<Vec<_>, _>>()?;
    let count = fixed_points.len();
    let count_matches_regime = count == classification.expected_count;
    let pass = count_matches_regime && fixed_points.iter().all(|p| p.pass);
    let mut verdicts_stored: Vec<bool> = stored.fixed_points.iter().map(|p| p.pass).collect();
    verdicts_stored.push(stored.pass);
    let mut verdicts_now: Vec<bool> = fixed_points.iter().map(|p| p.pass).collect();
    verdicts_now.push(pass);
    let agree = verdicts_stored == verdicts_now;
    let report = SolveReport {
        command: "verify".into(),
        a: stored.a,
        b: stored.b,
        classification,
        tableau: tab,
        roots: stored.roots,
        count,
        count_matches_regime,
        gates: stored.gates,
        fixed_points,
        round_trip: Some(RoundTrip {
            stored: verdicts_stored,
            recomputed: verdicts_now,
            agree,
        }),
        pass,
    };
    Outcome::json(&report, pass && agree)
}

#[derive(Serialize)]
struct ScanReport<'a> {
    command: &'static str,
    grid: ScanGrid,
    rows: &'a [ScanRow],
    flagged: usize,
    pass: bool,
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var("HAMMFIX_THREADS") {
        let n: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| CliError::Usage(format!("HAMMFIX_THREADS must be a positive integer, got `{raw}`")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| CliError::Failure(e.to_string()))
}

fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::Unique => "unique",
        Regime::Two => "two",
        Regime::Three => "three",
    }
}

fn scan(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let opts = cfg.solve_options();
    let rows = thread_pool()?.install(|| scan_phase(&cfg.grid, &opts))?;
    let flagged = rows.iter().filter(|r| r.flagged || r.error.is_some()).count();
    let pass = flagged == 0;
    match cfg.format {
        Format::Json => Outcome::json(
            &ScanReport {
                command: "scan",
                grid: cfg.grid,
                rows: &rows,
                flagged,
                pass,
            },
            pass,
        ),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let fail = |e: csv::Error| CliError::Failure(e.to_string());
            w.write_record(["a", "b", "threshold", "regime", "count", "xi1", "xi2", "xi3", "max_residual"])
                .map_err(fail)?;
            for r in &rows {
                let xi = |i: usize| r.xis.get(i).map_or(String::new(), |x| csv_float(*x));
                w.write_record([
                    csv_float(r.a),
                    csv_float(r.b),
                    csv_float(r.threshold),
                    regime_name(r.regime).to_string(),
                    r.count.to_string(),
                    xi(0),
                    xi(1),
                    xi(2),
                    csv_float(r.max_residual),
                ])
                .map_err(fail)?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::Failure(e.to_string()))?;
            Ok(Outcome {
                body: String::from_utf8(bytes).expect("csv of ASCII fields"),
                status: if pass { EXIT_OK } else { EXIT_VERIFY },
            })
        }
    }
}

#[derive(Serialize)]
struct GibbsEntry {
    xi0: f64,
    #[serde(flatten)]
    report: GibbsCheckReport,
    pass: bool,
}

#[derive(Serialize)]
struct GibbsOutput {
    command: &'static str,
    a: f64,
    b: f64,
    options: GibbsOptions,
    gate: f64,
    checks: Vec<GibbsEntry>,
    pass: bool,
}

fn gibbs_check(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (a, b) = cfg.point()?;
    let spec = KernelSpec::trig(a, b)?;
    let g = cfg.gibbs;
    let model = ModelSpec::new(spec.clone(), g.k, g.jbeta)?.with_root_branching(g.root_branching)?;
    let spin = DiscretizedSpin::gauss_legendre(g.m, &spec.breakpoints())?;
    let tab = tableau_for(&spec, &cfg.solve_options())?;
    let ropts = cfg.residual_options();
    let mut checks = Vec::new();
    for d in fixed_functions_from(&spec, &tab, &cfg.solve_options())? {
        let boundary = rk_function_of(&d.f, g.k)?;
        let report = marginal_compatibility_with(&model, &spin, &boundary, g.n, &ropts)?;
        let pass = report.eq5_residual < cfg.residual_tol && report.marginal_discrepancy < cfg.residual_tol;
        checks.push(GibbsEntry {
            xi0: d.xi0,
            report,
            pass,
        });
    }
    let pass = checks.iter().all(|c| c.pass);
    Outcome::json(
        &GibbsOutput {
            command: "gibbs-check",
            a,
            b,
            options: g,
            gate: cfg.residual_tol,
            checks,
            pass,
        },
        pass,
    )
}
