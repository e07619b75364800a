//! Command-line front end.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::binvariant::positivity_certificate;
use crate::deformation::{isometric_deformation_space, angle_sum_residual};
use crate::error::Error;
use crate::geometry::{Geometry, Vec3};
use crate::hull::{cube, icosahedron, square_prism, tetrahedron, ConvexPolyhedron};
use crate::io::{
    csv_string, lengths_from_json, polygon_from_json, polyhedron_from_str, read_text, SolutionFile,
};
use crate::isoperimetric::{is_critical, sample_isometric_competitors, solve_max_area};
use crate::metrics::{area_form_signature, convergence_experiment, moduli_metric, BarycenterKind};
use crate::polygon::Polygon;
use crate::random::{instance_rng, random_convex_polygon};
use crate::rigidity::{rigidity_diagnostics, rigidity_verdict};

const ENV_HELP: &str = "Tolerance overrides are read from the environment: \
POLYFLEX_QUADRIC_TOL (1e-9), POLYFLEX_LIGHTLIKE_TOL (1e-10), POLYFLEX_RANK_TOL (1e-8), \
POLYFLEX_CONSTRAINT_TOL (1e-8).\n\nExit codes: 0 success, 1 internal error, 2 parse error, \
3 infeasible input, 4 failed assertion.";

#[derive(Debug, Parser)]
#[command(name = "polyflex", version, about = "Deformations, rigidity and moduli metrics of polygons and polyhedra", after_help = ENV_HELP)]
pub struct Cli {
    /// Write the report here instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the angle-sum identity, deformation dimension and b-positivity on random or given polygons.
    Verify(VerifyArgs),
    /// Maximal-area polygon with prescribed edge lengths.
    #[command(alias = "solve")]
    Maxarea(MaxAreaArgs),
    /// Infinitesimal rigidity of a convex polyhedron (JSON or OFF).
    Rigidity(RigidityArgs),
    /// Gram matrix of a moduli metric at a polygon.
    Metric(MetricArgs),
    /// Convergence table of rescaled moduli metrics.
    #[command(after_help = "CSV columns: k, a_k (angle defect 2pi - sum l^k), discrepancy \
(largest |lambda - 1| over generalized eigenvalues of the two rescaled forms), samples.")]
    Converge(ConvergeArgs),
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Polygon JSON; when given, only this polygon is checked.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = "S2", value_parser = parse_geometry)]
    pub geometry: Geometry,
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    #[arg(long, default_value_t = 7, env = "POLYFLEX_SEED")]
    pub seed: u64,
}

#[derive(Debug, Args)]
#[command(after_help = "Input: {\"geometry\": \"S2|H2\", \"lengths\": [...]}. \
The optional CSV has columns sample, area: sample 0 is the solution, the rest are random \
convex polygons with the same edge lengths.")]
pub struct MaxAreaArgs {
    pub input: PathBuf,
    /// Number of isometric competitors sampled for the CSV.
    #[arg(long, default_value_t = 0)]
    pub samples: usize,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long, default_value_t = 7, env = "POLYFLEX_SEED")]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct RigidityArgs {
    /// Polyhedron as JSON {vertices, faces} or OFF.
    #[arg(required_unless_present = "solid")]
    pub input: Option<PathBuf>,
    /// Built-in solid: tetrahedron, cube, icosahedron, prism.
    #[arg(long, conflicts_with = "input")]
    pub solid: Option<String>,
    /// Drop face diagonals from the constraints and report diagnostics only.
    #[arg(long)]
    pub no_diagonals: bool,
}

#[derive(Debug, Args)]
pub struct MetricArgs {
    pub input: PathBuf,
    /// Barycenter: v, i, alpha, boundary (C_v, C_i, ... also accepted). Ignored for plane polygons.
    #[arg(long, default_value = "i", value_parser = parse_kind)]
    pub kind: BarycenterKind,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    /// Limit angles: regularN, or a comma separated list summing to 2 pi.
    #[arg(long, default_value = "regular5")]
    pub angles: String,
    #[arg(long, default_value_t = 4)]
    pub kmin: usize,
    /// Largest k; k doubles from kmin.
    #[arg(long, default_value_t = 64)]
    pub kmax: usize,
    /// Random isometric neighbours of the maximal polygon added at each k.
    #[arg(long, default_value_t = 0)]
    pub extra: usize,
    #[arg(long, default_value_t = 7, env = "POLYFLEX_SEED")]
    pub seed: u64,
}

fn parse_geometry(s: &str) -> std::result::Result<Geometry, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_kind(s: &str) -> std::result::Result<BarycenterKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Lib(#[from] Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("assertion failed: {0}")]
    Assertion(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Lib(Error::Parse(_)) => 2,
            CliError::Lib(Error::Infeasible(_)) => 3,
            CliError::Assertion(_) => 4,
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, format!("{text}\n"))?,
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{text}")?;
        }
    }
    Ok(())
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable report")
}

#[derive(Clone, Debug, Serialize)]
pub struct InstanceVerdict {
    pub index: usize,
    pub quotient_dim: usize,
    pub gap_ratio: f64,
    pub angle_sum_residual: f64,
    /// Smallest `<b(U), v_j>` over vertices and quotient basis vectors.
    pub min_positivity: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub geometry: Geometry,
    pub n: usize,
    pub seed: u64,
    pub instances: usize,
    pub passed: usize,
    /// Quotient dimension -> number of instances.
    pub quotient_dims: BTreeMap<usize, usize>,
    /// Decimal exponent of the angle-sum residual -> number of instances.
    pub residual_histogram: BTreeMap<i32, usize>,
    pub positivity_checked: usize,
    pub positivity_failures: usize,
    pub verdicts: Vec<InstanceVerdict>,
}

fn decade(x: f64) -> i32 {
    if x <= 0.0 {
        -300
    } else {
        x.log10().ceil() as i32
    }
}

pub fn verify_polygon(index: usize, p: &Polygon) -> crate::Result<InstanceVerdict> {
    let space = isometric_deformation_space(p)?;
    let mut res: f64 = 0.0;
    for j in 0..space.full_dim() {
        let (a, b) = angle_sum_residual(p, &space.full_vector(j))?;
        res = res.max(a).max(b);
    }
    let mut min_positivity = None;
    if p.geometry() != Geometry::E2 && p.is_convex() {
        let mut m = f64::INFINITY;
        for u in space.quotient_vectors() {
            m = m.min(positivity_certificate(p, &u)?.min_product);
        }
        if space.quotient_dim() > 0 {
            min_positivity = Some(m);
        }
    }
    let expected = p.n().saturating_sub(3);
    let pass = res < 1e-9 && space.quotient_dim() == expected && min_positivity.is_none_or(|m| m > 0.0);
    Ok(InstanceVerdict {
        index,
        quotient_dim: space.quotient_dim(),
        gap_ratio: space.gap_ratio,
        angle_sum_residual: res,
        min_positivity,
        pass,
    })
}

pub fn run_verify(a: &VerifyArgs) -> CliResult<(VerifyReport, bool)> {
    let polys: Vec<Polygon> = match &a.input {
        Some(path) => vec![polygon_from_json(&read_text(path)?)?],
        None => {
            if a.n < 3 {
                return Err(Error::TooFewVertices(a.n).into());
            }
            (0..a.count)
                .into_par_iter()
                .map(|i| random_convex_polygon(a.geometry, a.n, &mut instance_rng(a.seed, i as u64)))
                .collect()
        }
    };
    let verdicts: Vec<InstanceVerdict> =
        polys.par_iter().enumerate().map(|(i, p)| verify_polygon(i, p)).collect::<crate::Result<_>>()?;
    let mut quotient_dims = BTreeMap::new();
    let mut residual_histogram = BTreeMap::new();
    for v in &verdicts {
        *quotient_dims.entry(v.quotient_dim).or_insert(0) += 1;
        *residual_histogram.entry(decade(v.angle_sum_residual)).or_insert(0) += 1;
    }
    let positivity_checked = verdicts.iter().filter(|v| v.min_positivity.is_some()).count();
    let positivity_failures = verdicts.iter().filter(|v| v.min_positivity.is_some_and(|m| m <= 0.0)).count();
    let passed = verdicts.iter().filter(|v| v.pass).count();
    let report = VerifyReport {
        geometry: polys.first().map_or(a.geometry, |p| p.geometry()),
        n: polys.first().map_or(a.n, |p| p.n()),
        seed: a.seed,
        instances: verdicts.len(),
        passed,
        quotient_dims,
        residual_histogram,
        positivity_checked,
        positivity_failures,
        verdicts,
    };
    let ok = report.passed == report.instances;
    Ok((report, ok))
}

#[derive(Clone, Debug, Serialize)]
pub struct AreaRow {
    pub sample: usize,
    pub area: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MaxAreaReport {
    #[serde(flatten)]
    pub solution: SolutionFile,
    pub criticality_residual: f64,
}

pub fn run_maxarea(a: &MaxAreaArgs) -> CliResult<(MaxAreaReport, Vec<AreaRow>)> {
    let f = lengths_from_json(&read_text(&a.input)?)?;
    let sol = solve_max_area(&f.lengths, f.geometry)?;
    let crit = is_critical(&sol.polygon)?;
    let mut rows = vec![AreaRow { sample: 0, area: sol.area }];
    if a.samples > 0 {
        for (i, q) in sample_isometric_competitors(&sol.polygon, a.samples, a.seed)?.iter().enumerate() {
            rows.push(AreaRow { sample: i + 1, area: q.area()? });
        }
    }
    let report = MaxAreaReport { solution: SolutionFile::new(&f.lengths, &sol), criticality_residual: crit.residual };
    Ok((report, rows))
}

pub fn builtin_solid(name: &str) -> CliResult<ConvexPolyhedron> {
    Ok(match name.to_ascii_lowercase().as_str() {
        "tetrahedron" => tetrahedron(),
        "cube" => cube(),
        "icosahedron" => icosahedron(),
        "prism" => square_prism(),
        other => return Err(Error::Parse(format!("unknown solid {other:?}")).into()),
    })
}

pub fn run_rigidity(a: &RigidityArgs) -> CliResult<crate::rigidity::RigidityReport> {
    let p = match (&a.input, &a.solid) {
        (_, Some(s)) => builtin_solid(s)?,
        (Some(path), None) => polyhedron_from_str(&read_text(path)?)?,
        (None, None) => return Err(Error::Parse("no polyhedron given".into()).into()),
    };
    Ok(if a.no_diagonals { rigidity_diagnostics(&p, false)? } else { rigidity_verdict(&p)? })
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum MetricReport {
    Barycentric(crate::metrics::MetricSample),
    Area {
        geometry: Geometry,
        #[serde(flatten)]
        signature: crate::metrics::AreaFormSignature,
    },
}

/// Returns the report and whether it has the expected signature.
pub fn run_metric(a: &MetricArgs) -> CliResult<(MetricReport, bool)> {
    let p = polygon_from_json(&read_text(&a.input)?)?;
    if p.geometry() == Geometry::E2 {
        let x0 = p.vertices().iter().sum::<Vec3>() / p.n() as f64;
        let s = area_form_signature(&p, &x0)?;
        let ok = s.positive == 1 && s.negative + 3 == p.n();
        return Ok((MetricReport::Area { geometry: Geometry::E2, signature: s }, ok));
    }
    let m = moduli_metric(&p, a.kind)?;
    let ok = m.eigenvalues.iter().all(|&e| e > 0.0);
    Ok((MetricReport::Barycentric(m), ok))
}

pub fn parse_angles(s: &str) -> CliResult<Vec<f64>> {
    if let Some(n) = s.strip_prefix("regular") {
        let n: usize = n.parse().map_err(|_| Error::Parse(format!("invalid angle spec {s:?}")))?;
        if n < 3 {
            return Err(Error::TooFewVertices(n).into());
        }
        return Ok(vec![TAU / n as f64; n]);
    }
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Parse(format!("invalid angle {t:?}")).into()))
        .collect()
}

pub fn run_converge(a: &ConvergeArgs) -> CliResult<Vec<crate::metrics::ConvergenceRow>> {
    let alpha = parse_angles(&a.angles)?;
    if a.kmin < 2 || a.kmax < a.kmin {
        return Err(Error::Parse("need 2 <= kmin <= kmax".into()).into());
    }
    let ks: Vec<usize> = std::iter::successors(Some(a.kmin), |k| Some(k * 2)).take_while(|&k| k <= a.kmax).collect();
    Ok(convergence_experiment(&alpha, &ks, a.extra, a.seed)?)
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let out = cli.output.as_deref();
    match &cli.command {
        Command::Verify(a) => {
            let (report, ok) = run_verify(a)?;
            emit(out, &json(&report))?;
            if !ok {
                return Err(CliError::Assertion(format!("{} of {} instances failed", report.instances - report.passed, report.instances)));
            }
        }
        Command::Maxarea(a) => {
            let (report, rows) = run_maxarea(a)?;
            emit(out, &json(&report))?;
            if let Some(path) = &a.csv {
                std::fs::write(path, csv_string(&rows)?)?;
            }
        }
        Command::Rigidity(a) => emit(out, &json(&run_rigidity(a)?))?,
        Command::Metric(a) => {
            let (report, ok) = run_metric(a)?;
            emit(out, &json(&report))?;
            if !ok {
                return Err(CliError::Assertion("unexpected metric signature".into()));
            }
        }
        Command::Converge(a) => {
            let rows = run_converge(a)?;
            emit(out, csv_string(&rows)?.trim_end())?;
            if rows.iter().any(|r| !(r.a_k > 0.0)) {
                return Err(CliError::Assertion("non-positive angle defect".into()));
            }
        }
    }
    Ok(())
}

/// Parses arguments, runs, reports errors on stderr and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
