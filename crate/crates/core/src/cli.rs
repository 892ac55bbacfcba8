//! Command-line front end: `gen`, `error`, `optimal` and `oracle`.

use std::fmt;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::error::Error;
use crate::io::{read_mesh, write_mesh, ReadError, Report};
use crate::optimal::{density_constant, optimal_for, saddle_ruled, Mode, OptimalResult};
use crate::oracle::{oracle_convex, oracle_max_area_interpolating, oracle_max_area_offset, SearchConfig};
use crate::quadratic::{normalize, CanonicalFrame, QuadraticSurface, SurfaceClass};
use crate::tiling::{measure, tile_region, vertex_density, Region};
use crate::vertical_error::{Deviation, Tolerance};
use crate::Vec2;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_MALFORMED: i32 = 4;
pub const EXIT_SEARCH: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "quadtri", version, about = "Optimal triangle meshes for bivariate quadratics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tile a region with the optimal triangle and write the mesh.
    Gen(GenArgs),
    /// Audit the vertical error of an existing mesh against a quadratic.
    Error(ErrorArgs),
    /// Print the optimal triangle in a canonical frame.
    Optimal(OptimalArgs),
    /// Run the brute-force area maximisation.
    Oracle(OracleArgs),
}

/// Parses exactly `N` comma-separated finite numbers.
fn parse_list<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    if vals.iter().any(|v| !v.is_finite()) {
        return Err("values must be finite".into());
    }
    vals.try_into()
        .map_err(|v: Vec<f64>| format!("expected {N} comma-separated values, got {}", v.len()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Offset,
    Interp,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Offset => Mode::UniformOffset,
            ModeArg::Interp => Mode::Interpolating,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Coefficients a,b,c,d,e,g of a·x² + 2b·x·y + c·y² + d·x + e·y + g.
    #[arg(long, value_parser = parse_list::<6>, allow_hyphen_values = true)]
    pub coeffs: [f64; 6],
    /// Vertical error budget ε > 0.
    #[arg(long)]
    pub eps: f64,
    #[arg(long, value_enum, default_value = "offset")]
    pub mode: ModeArg,
    /// Region xmin,ymin,xmax,ymax.
    #[arg(long, value_parser = parse_list::<4>, allow_hyphen_values = true)]
    pub region: [f64; 4],
    /// Saddle shape parameter; (x, y) ↦ (m·x, y/m) in the canonical frame.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub m: f64,
    /// Lattice translation tx,ty in the canonical frame.
    #[arg(long, value_parser = parse_list::<2>, allow_hyphen_values = true, default_value = "0,0")]
    pub translate: [f64; 2],
    /// Output mesh; `.off` writes OFF, anything else OBJ.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional JSON report path; the report is always printed to stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Barycentric samples per triangle edge for the error audit.
    #[arg(long, default_value_t = 12)]
    pub samples: usize,
}

#[derive(Debug, Args)]
pub struct ErrorArgs {
    /// Coefficients a,b,c,d,e,g of a·x² + 2b·x·y + c·y² + d·x + e·y + g.
    #[arg(long, value_parser = parse_list::<6>, allow_hyphen_values = true)]
    pub coeffs: [f64; 6],
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub samples: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ClassArg {
    Saddle,
    /// Interpolating saddle triangle with one edge on a ruling line.
    SaddleRuled,
    Convex,
    Concave,
}

#[derive(Debug, Args)]
pub struct OptimalArgs {
    #[arg(long, value_enum)]
    pub class: ClassArg,
    #[arg(long, value_enum, default_value = "offset")]
    pub mode: ModeArg,
    #[arg(long)]
    pub eps: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub m: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OracleKind {
    SaddleInterp,
    SaddleOffset,
    Convex,
    ConvexOffset,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, value_enum)]
    pub kind: OracleKind,
    #[arg(long, default_value_t = 1.0)]
    pub eps: f64,
    #[arg(long, default_value_t = SearchConfig::default().resolution)]
    pub resolution: usize,
    #[arg(long, default_value_t = SearchConfig::default().refinement_rounds)]
    pub rounds: usize,
    /// Search box half-width in units of √ε.
    #[arg(long, default_value_t = SearchConfig::default().half_width)]
    pub half_width: f64,
    #[arg(long, default_value_t = SearchConfig::default().feasibility_slack)]
    pub slack: f64,
}

/// Failure with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::MalformedMesh(_) => EXIT_MALFORMED,
            Error::SearchBudgetExceeded => EXIT_SEARCH,
            _ => EXIT_USAGE,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

fn io_error(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError {
        code: EXIT_IO,
        message: format!("{}: {e}", path.display()),
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serialisable output")
}

/// Validated inputs of a `gen` run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec {
    pub surface: QuadraticSurface,
    pub eps: f64,
    pub mode: Mode,
    pub m: f64,
    pub region: Region,
    pub translate: Vec2,
    pub samples: usize,
}

impl RunSpec {
    pub fn new(coeffs: [f64; 6], eps: f64, region: Region) -> crate::Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFiniteCoefficients);
        }
        Ok(Self {
            surface: QuadraticSurface::from_coefficients(coeffs),
            eps: Tolerance::new(eps)?.get(),
            mode: Mode::UniformOffset,
            m: 1.0,
            region,
            translate: Vec2::zeros(),
            samples: 12,
        })
    }

    /// Builds the mesh and its report.
    pub fn run(&self) -> crate::Result<(crate::MeshPatch, Report)> {
        let nf = normalize(&self.surface)?;
        let opt = optimal_for(nf.frame(), self.eps, self.mode, self.m)?;
        let patch = tile_region(&self.surface, &opt, &self.region, self.translate)?;
        let density = measure(&self.surface, &patch, self.eps, self.mode, self.samples)?;
        let report = Report {
            eps: self.eps,
            mode: self.mode,
            m: self.m,
            coefficients: self.surface.coefficients(),
            triangle_count: density.triangle_count,
            region: self.region,
            empirical_density: density.empirical_density,
            theoretical_density: density.theoretical_density,
            vertex_density: vertex_density(&patch, &self.region),
            sampled_max_error: density.sampled_max_error,
            dz: patch.dz,
        };
        Ok((patch, report))
    }
}

fn run_gen(a: &GenArgs) -> Result<String, CliError> {
    let region = Region::new(a.region[0], a.region[1], a.region[2], a.region[3])?;
    let mut spec = RunSpec::new(a.coeffs, a.eps, region)?;
    spec.mode = a.mode.into();
    spec.m = a.m;
    spec.translate = Vec2::new(a.translate[0], a.translate[1]);
    spec.samples = a.samples;
    let (patch, report) = spec.run()?;
    write_mesh(&a.out, &patch).map_err(|e| io_error(&a.out, e))?;
    let text = to_json(&report);
    if let Some(path) = &a.report {
        fs::write(path, format!("{text}\n")).map_err(|e| io_error(path, e))?;
    }
    Ok(text)
}

#[derive(Debug, Serialize)]
struct ErrorSummary {
    triangle_count: usize,
    max_sampled_error: f64,
    sampled_triangle: usize,
    max_exact_error: f64,
    exact_triangle: usize,
}

fn run_error(a: &ErrorArgs) -> Result<String, CliError> {
    let q = QuadraticSurface::from_coefficients(a.coeffs);
    let mesh = read_mesh(&a.mesh).map_err(|e| match e {
        ReadError::Io(e) => io_error(&a.mesh, e),
        ReadError::Mesh(e) => e.into(),
    })?;
    let mut out = ErrorSummary {
        triangle_count: mesh.triangles.len(),
        max_sampled_error: 0.0,
        sampled_triangle: 0,
        max_exact_error: 0.0,
        exact_triangle: 0,
    };
    for (k, t) in mesh.triangles.iter().enumerate() {
        let v = t.map(|i| mesh.vertices[i]);
        let plan = v.map(|p| Vec2::new(p[0], p[1]));
        let dev = Deviation::from_heights(&q, plan, v.map(|p| p[2])).map_err(|_| {
            CliError::from(Error::MalformedMesh(format!("triangle {k} has zero plan area")))
        })?;
        let sampled = dev.sampled_max_abs(a.samples);
        if sampled > out.max_sampled_error {
            out.max_sampled_error = sampled;
            out.sampled_triangle = k;
        }
        let exact = dev.max_abs().value;
        if exact > out.max_exact_error {
            out.max_exact_error = exact;
            out.exact_triangle = k;
        }
    }
    Ok(to_json(&out))
}

fn optimal_json(r: &OptimalResult, mode: Mode, m: f64) -> serde_json::Value {
    let constant = |class, mode| density_constant(class, mode).expect("non-degenerate class");
    json!({
        "frame": r.frame,
        "mode": mode,
        "eps": r.eps,
        "m": m,
        "vertices": r.vertices().map(|p| [p.x, p.y]),
        "dz": r.dz,
        "area": r.area,
        "density": r.density,
        "constants": {
            "saddle_offset": constant(SurfaceClass::Indefinite, Mode::UniformOffset),
            "saddle_interpolating": constant(SurfaceClass::Indefinite, Mode::Interpolating),
            "convex_offset": constant(SurfaceClass::PositiveDefinite, Mode::UniformOffset),
            "convex_interpolating": constant(SurfaceClass::PositiveDefinite, Mode::Interpolating),
        },
    })
}

fn run_optimal(a: &OptimalArgs) -> Result<String, CliError> {
    let mode: Mode = a.mode.into();
    let r = match a.class {
        ClassArg::Saddle => optimal_for(CanonicalFrame::SaddleXy, a.eps, mode, a.m)?,
        ClassArg::SaddleRuled => {
            if mode != Mode::Interpolating {
                return Err(CliError {
                    code: EXIT_USAGE,
                    message: "saddle-ruled is an interpolating construction; pass --mode interp".into(),
                });
            }
            saddle_ruled(a.eps)?
        }
        ClassArg::Convex => optimal_for(CanonicalFrame::Convex, a.eps, mode, a.m)?,
        ClassArg::Concave => optimal_for(CanonicalFrame::Concave, a.eps, mode, a.m)?,
    };
    Ok(to_json(&optimal_json(&r, mode, a.m)))
}

fn run_oracle(a: &OracleArgs) -> Result<String, CliError> {
    let cfg = SearchConfig {
        resolution: a.resolution,
        refinement_rounds: a.rounds,
        half_width: a.half_width,
        feasibility_slack: a.slack,
    };
    let eps = a.eps;
    let (outcome, closed_form) = match a.kind {
        OracleKind::SaddleInterp => (oracle_max_area_interpolating(eps, &cfg)?, eps * 5f64.sqrt()),
        OracleKind::SaddleOffset => (oracle_max_area_offset(eps, &cfg)?, 4.0 * eps / 3f64.sqrt()),
        OracleKind::Convex => (oracle_convex(eps, &cfg, false)?, 3.0 * 3f64.sqrt() / 4.0 * eps),
        OracleKind::ConvexOffset => (oracle_convex(eps, &cfg, true)?, 3.0 * 3f64.sqrt() / 2.0 * eps),
    };
    Ok(to_json(&json!({
        "kind": a.kind.to_possible_value().expect("no skipped variants").get_name(),
        "eps": eps,
        "config": cfg,
        "outcome": outcome,
        "closed_form_area": closed_form,
        "relative_gap": (closed_form - outcome.area) / closed_form,
    })))
}

/// Runs one command and returns what should go to stdout.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Gen(a) => run_gen(a),
        Command::Error(a) => run_error(a),
        Command::Optimal(a) => run_optimal(a),
        Command::Oracle(a) => run_oracle(a),
    }
}
