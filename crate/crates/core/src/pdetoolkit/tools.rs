use std::fmt::Write as _;
use std::path::{Component, Path};

use serde::Serialize;
use serde_json::json;
use thiserror::Error;
use tracing::debug;

use super::artifacts::*;
use super::kernels::{self, KernelError};
use super::pool::{Handle, PoolError, ResourcePool};
use super::registry::{ParamSet, ParamSpec, ParamType, SchemaViolation, ToolRegistry, ToolSpec};
use crate::exprlang::{Bindings, SourceExpr};
use crate::toolgraph::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DiagnosticLevel {
    Info,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub level: DiagnosticLevel,
    pub message: String,
}

impl Diagnostic {
    fn info(message: impl Into<String>) -> Self {
        Diagnostic { level: DiagnosticLevel::Info, message: message.into() }
    }

    fn warning(message: impl Into<String>) -> Self {
        Diagnostic { level: DiagnosticLevel::Warning, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionOutcome {
    pub handle: Handle,
    /// Human-readable observation of what the tool did.
    pub summary: String,
    /// Scalar result for tools that compute one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    pub diagnostics: Vec<Diagnostic>,
}

impl ActionOutcome {
    pub fn has_warnings(&self) -> bool {
        self.diagnostics.iter().any(|d| d.level == DiagnosticLevel::Warning)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InvokeError {
    #[error("unknown tool `{0}`")]
    UnknownTool(String),
    #[error(transparent)]
    Schema(#[from] SchemaViolation),
    #[error("{tool}: {source}")]
    Dangling { tool: String, source: PoolError },
    #[error("{tool} failed: {source}")]
    Numeric { tool: String, source: KernelError },
    #[error("{tool} failed: {message}")]
    Tool { tool: String, message: String },
}

impl InvokeError {
    /// Short category name used in action records.
    pub fn kind(&self) -> &'static str {
        match self {
            InvokeError::UnknownTool(_) => "unknown_tool",
            InvokeError::Schema(_) => "schema",
            InvokeError::Dangling { .. } => "dangling_handle",
            InvokeError::Numeric { .. } => "numeric",
            InvokeError::Tool { .. } => "tool",
        }
    }
}

pub(super) enum ToolFailure {
    Kernel(KernelError),
    Invalid(String),
}

impl From<KernelError> for ToolFailure {
    fn from(e: KernelError) -> Self {
        ToolFailure::Kernel(e)
    }
}

impl From<crate::exprlang::ExprError> for ToolFailure {
    fn from(e: crate::exprlang::ExprError) -> Self {
        ToolFailure::Kernel(e.into())
    }
}

fn invalid<T>(message: impl Into<String>) -> Result<T, ToolFailure> {
    Err(ToolFailure::Invalid(message.into()))
}

pub(super) struct ToolOutput {
    artifact: Artifact,
    summary: String,
    value: Option<f64>,
    diagnostics: Vec<Diagnostic>,
}

impl ToolOutput {
    fn new(artifact: Artifact, summary: impl Into<String>) -> Self {
        ToolOutput { artifact, summary: summary.into(), value: None, diagnostics: Vec::new() }
    }
}

pub(super) struct ToolEnv<'a> {
    pool: &'a ResourcePool,
    workdir: &'a Path,
}

macro_rules! fetch_fn {
    ($name:ident, $variant:ident, $ty:ty) => {
        fn $name(&self, p: &ParamSet, field: &str) -> Result<Option<&'a $ty>, ToolFailure> {
            let Some(h) = p.handle(field) else { return Ok(None) };
            match &**self.pool.get(&h).map_err(|e| ToolFailure::Invalid(e.to_string()))? {
                Artifact::$variant(v) => Ok(Some(v)),
                other => invalid(format!("{h} holds a {} artifact", other.kind())),
            }
        }
    };
}

impl<'a> ToolEnv<'a> {
    fetch_fn!(domain, Domain, Domain);
    fetch_fn!(time_domain, TimeDomain, TimeDomain);
    fetch_fn!(pde, Pde, PdeSpec);
    fetch_fn!(ic, Ic, InitialCondition);
    fetch_fn!(problem, Problem, Problem);
    fetch_fn!(solver, Solver, SolverConfig);
    fetch_fn!(solution, Solution, Solution);

    fn bcs(&self, p: &ParamSet, field: &str) -> Result<Vec<&'a BoundaryCondition>, ToolFailure> {
        let mut out = Vec::new();
        for h in p.handles(field).unwrap_or_default() {
            match &**self.pool.get(h).map_err(|e| ToolFailure::Invalid(e.to_string()))? {
                Artifact::Bc(bc) => out.push(bc),
                other => return invalid(format!("{h} holds a {} artifact", other.kind())),
            }
        }
        Ok(out)
    }
}

pub(super) type ToolFn = fn(&ParamSet, &ToolEnv) -> Result<ToolOutput, ToolFailure>;

fn param(name: &'static str, ty: ParamType, required: bool, description: &'static str) -> ParamSpec {
    ParamSpec { name, ty, required, description }
}

fn required<T>(v: Option<T>, field: &str) -> Result<T, ToolFailure> {
    v.ok_or_else(|| ToolFailure::Invalid(format!("missing parameter {field}")))
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn define_geometry(p: &ParamSet, _: &ToolEnv) -> Result<ToolOutput, ToolFailure> {
    let (xmin, xmax) = (required(p.real("xmin"), "xmin")?, required(p.real("xmax"), "xmax")?);
    if xmin >= xmax {
        return invalid(format!("xmin ({xmin}) must be less than xmax ({xmax})"));
    }
    let domain = match p.text("kind") {
        Some("rectangle") => {
            let (Some(ymin), Some(ymax)) = (p.real("ymin"), p.real("ymax")) else {
                return invalid("a rectangle needs ymin and ymax");
            };
            if ymin >= ymax {
                return invalid(format!("ymin ({ymin}) must be less than ymax ({ymax})"));
            }
            Domain::Rectangle { xmin, xmax, ymin, ymax }
        }
        _ => {
            if p.real("ymin").is_some() || p.real("ymax").is_some() {
                return invalid("an interval takes no y bounds");
            }
            Domain::Interval { xmin, xmax }
        }
    };
    Ok(ToolOutput::new(Artifact::Domain(domain), format!("Defined {domain}.")))
}

fn define_time_domain(p: &ParamSet, _: &ToolEnv) -> Result<ToolOutput, ToolFailure> {
    let (t0, t1) = (required(p.real("t0"), "t0")?, required(p.real("t1"), "t1")?);
    if t0 >= t1 {
        return invalid(format!("t0 ({t0}) must be less than t1 ({t1})"));
    }
    Ok(ToolOutput::new(Artifact::TimeDomain(TimeDomain { t0, t1 }), format!("Defined time interval [{t0}, {t1}].")))
}

fn equation(pde: &PdeSpec) -> String {
    let src = pde.source.as_ref().map(|s| s.source.as_str());
    let plus_src = src.map(|s| format!(" + {s}")).unwrap_or_default();
    let two_d = pde.domain.y_range().is_some();
    let lap = if two_d { "u_xx + u_yy" } else { "u_xx" };
    let opt = |v: Option<f64>| v.map(num).unwrap_or_else(|| "?".into());
    match pde.category {
        PdeCategory::Heat | PdeCategory::Diffusion => format!("u_t = {} u_xx{plus_src}", opt(pde.alpha)),
        PdeCategory::DiffusionReaction => format!("u_t = {} u_xx + {} u{plus_src}", opt(pde.alpha), opt(pde.reaction)),
        PdeCategory::Wave => format!("u_tt = {}^2 u_xx{plus_src}", opt(pde.c)),
        PdeCategory::Advection => format!("u_t + {} u_x = {}", opt(pde.a), src.unwrap_or("0")),
        PdeCategory::Laplace => format!("{lap} = 0"),
        PdeCategory::Poisson => format!("{lap} = {}", src.unwrap_or("?")),
        reserved => format!("{reserved} equation"),
    }
}

fn define_pde(p: &ParamSet, env: &ToolEnv) -> Result<ToolOutput, ToolFailure> {
    let category = PdeCategory::parse(required(p.text("category"), "category")?).expect("enum validated");
    let domain = *required(env.domain(p, "domain")?, "domain")?;
    let spec = PdeSpec {
        category,
        domain,
        alpha: p.real("alpha"),
        c: p.real("c"),
        a: p.real("a"),
        reaction: p.real("reaction"),
        source: p.expr("source").cloned(),
    };
    let positive = |v: Option<f64>, name: &str| -> Result<(), ToolFailure> {
        match v {
            None => invalid(format!("{category} needs coefficient {name}")),
            Some(x) if x <= 0.0 => invalid(format!("coefficient {name} must be positive, got {x}")),
            Some(_) => Ok(()),
        }
    };
    match category {
        PdeCategory::Heat | PdeCategory::Diffusion => positive(spec.alpha, "alpha")?,
        PdeCategory::DiffusionReaction => {
            positive(spec.alpha, "alpha")?;
            if spec.reaction.is_none() {
                return invalid("diffusion_reaction needs coefficient reaction");
            }
        }
        PdeCategory::Wave => positive(spec.c, "c")?,
        PdeCategory::Advection => {
            if spec.a.is_none() {
                return invalid("advection needs velocity a");
            }
        }
        PdeCategory::Laplace => {
            if spec.source.is_some() {
                return invalid("laplace takes no source term; use poisson");
            }
        }
        PdeCategory::Poisson => {
            if spec.source.is_none() {
                return invalid("poisson needs a source term");
            }
        }
        _ => {}
    }
    let summary = format!("Defined {category} equation {} on {domain}.", equation(&spec));
    Ok(ToolOutput::new(Artifact::Pde(spec), summary))
}

fn define_boundary_condition(p: &ParamSet, _: &ToolEnv) -> Result<ToolOutput, ToolFailure> {
    let btype = match p.text("btype") {
        Some("neumann") => BoundaryType::Neumann,
        _ => BoundaryType::Dirichlet,
    };
    let location = match required(p.text("location"), "location")? {
        "left" => Location::Left,
        "right" => Location::Right,
        "bottom" => Location::Bottom,
        "top" => Location::Top,
        _ => Location::All,
    };
    let value = required(p.expr("value"), "value")?.clone();
    let (name, lhs) = match btype {
        BoundaryType::Dirichlet => ("Dirichlet", "u"),
        BoundaryType::Neumann => ("Neumann", "du/dn"),
    };
    let place = match location {
        Location::All => "all boundaries".to_string(),
        side => format!("the {} boundary", format!("{side:?}").to_lowercase()),
    };
    let summary = format!("Defined {name} condition {lhs} = {} on {place}.", value.source);
    Ok(ToolOutput::new(Artifact::Bc(BoundaryCondition { btype, location, value }), summary))
}

fn define_initial_condition(p: &ParamSet, _: &ToolEnv) -> Result<ToolOutput, ToolFailure> {
    let value = required(p.expr("value"), "value")?.clone();
    let velocity = p.expr("velocity").cloned();
    let mut summary = format!("Defined initial condition u(x, 0) = {}", value.source);
    if let Some(v) = &velocity {
        let _ = write!(summary, " with u_t(x, 0) = {}", v.source);
    }
    summary.push('.');
    Ok(ToolOutput::new(Artifact::Ic(InitialCondition { value, velocity }), summary))
}

fn assemble_problem(p: &ParamSet, env: &ToolEnv) -> Result<ToolOutput, ToolFailure> {
    let domain = *required(env.domain(p, "domain")?, "domain")?;
    let pde = required(env.pde(p, "pde")?, "pde")?.clone();
    let time = env.time_domain(p, "timedomain")?.copied();
    let ic = env.ic(p, "ic")?.cloned();
    let bcs: Vec<BoundaryCondition> = env.bcs(p, "bcs")?.into_iter().cloned().collect();
    let category = pde.category;

    if pde.domain != domain {
        return invalid(format!("the pde was defined on {} but the problem domain is {domain}", pde.domain));
    }
    let two_d = domain.y_range().is_some();
    for bc in &bcs {
        if !two_d && matches!(bc.location, Location::Bottom | Location::Top) {
            return invalid(format!("an interval has no {:?} boundary", bc.location).to_lowercase());
        }
    }
    if category.is_time_dependent() && !category.is_reserved() {
        if two_d {
            return invalid(format!("{category} is solved on intervals only"));
        }
        if time.is_none() {
            return invalid(format!("{category} problem needs a time domain (timedomain)"));
        }
        if ic.is_none() {
            return invalid(format!("{category} problem needs an initial condition (ic)"));
        }
    }
    let needed: &[Location] = match (category, two_d) {
        (PdeCategory::Advection, _) => &[],
        (_, false) => &[Location::Left, Location::Right],
        (_, true) => &[Location::Left, Location::Right, Location::Bottom, Location::Top],
    };
    let missing: Vec<String> = needed
        .iter()
        .filter(|&&side| !bcs.iter().any(|bc| bc.location.covers(side)))
        .map(|side| format!("{side:?}").to_lowercase())
        .collect();
    if !missing.is_empty() {
        return invalid(format!("{category} problem has no boundary condition on: {}", missing.join(", ")));
    }

    let mut summary = format!("Assembled {category} problem {} on {domain}", equation(&pde));
    if let Some(t) = time {
        let _ = write!(summary, " for t in [{}, {}]", t.t0, t.t1);
    }
    let _ = write!(summary, " with {} boundary condition{}", bcs.len(), if bcs.len() == 1 { "" } else { "s" });
    if ic.is_some() {
        summary.push_str(" and an initial condition");
    }
    summary.push('.');
    Ok(ToolOutput::new(Artifact::Problem(Problem { pde, time, bcs, ic }), summary))
}

const MAX_POINTS: i64 = 100_001;
const MAX_STEPS: i64 = 10_000_000;

fn configure_solver(p: &ParamSet, _: &ToolEnv) -> Result<ToolOutput, ToolFailure> {
    let count = |name: &str, lo: i64, hi: i64| -> Result<Option<usize>, ToolFailure> {
        match p.int(name) {
            None => Ok(None),
            Some(v) if (lo..=hi).contains(&v) => Ok(Some(v as usize)),
            Some(v) => invalid(format!("{name} must lie in [{lo}, {hi}], got {v}")),
        }
    };
    let nx = required(count("nx", 3, MAX_POINTS)?, "nx")?;
    let ny = count("ny", 3, MAX_POINTS)?;
    let nt = count("nt", 1, MAX_STEPS)?;
    let scheme = p.text("scheme").and_then(Scheme::parse).unwrap_or(Scheme::Auto);
    let mut summary = format!("Configured solver with nx = {nx}");
    if let Some(ny) = ny {
        let _ = write!(summary, ", ny = {ny}");
    }
    if let Some(nt) = nt {
        let _ = write!(summary, ", nt = {nt}");
    }
    let _ = write!(summary, ", scheme {}.", serde_json::to_value(scheme).expect("scheme").as_str().unwrap_or("auto"));
    Ok(ToolOutput::new(Artifact::Solver(SolverConfig { nx, ny, nt, scheme }), summary))
}

fn solve(p: &ParamSet, env: &ToolEnv) -> Result<ToolOutput, ToolFailure> {
    let problem = required(env.problem(p, "problem")?, "problem")?;
    let cfg = required(env.solver(p, "solver")?, "solver")?;
    let solution = kernels::solve(problem, cfg)?;
    let mut diagnostics: Vec<Diagnostic> =
        solution.meta.stability.iter().map(|(k, v)| Diagnostic::info(format!("{k} = {v:.4}"))).collect();
    if let Some(r) = solution.meta.residual {
        diagnostics.push(Diagnostic::info(format!("residual {r:.3e} after {} sweeps", solution.meta.steps)));
    }
    if problem.pde.category == PdeCategory::Advection {
        let forward = problem.pde.a.unwrap_or(0.0) >= 0.0;
        let (inflow, outflow) = if forward { (Location::Left, Location::Right) } else { (Location::Right, Location::Left) };
        let side_specific = |s: Location| problem.bcs.iter().any(|bc| bc.location == s);
        if problem.bc_for(inflow).is_none() {
            diagnostics.push(Diagnostic::warning(format!(
                "no condition on the inflow ({}) boundary; the inflow value is held at its initial value",
                format!("{inflow:?}").to_lowercase()
            )));
        }
        if side_specific(outflow) && !side_specific(inflow) {
            diagnostics.push(Diagnostic::warning(format!(
                "boundary condition placed on the outflow ({}) boundary only; advection with a = {} needs it on the inflow side",
                format!("{outflow:?}").to_lowercase(),
                problem.pde.a.unwrap_or(0.0)
            )));
        }
    }
    let peak = solution.max_abs();
    if peak > 1e6 {
        diagnostics.push(Diagnostic::warning(format!("solution magnitude {peak:.3e} is implausibly large")));
    }
    let points = solution.x.len() * solution.y.as_ref().map_or(1, Vec::len);
    let mut summary = format!("Solved {} problem with {} on {points} grid points", solution.category, solution.meta.scheme);
    match solution.t {
        Some(t) => {
            let _ = write!(summary, ", {} steps to t = {t}", solution.meta.steps);
        }
        None => {
            let _ = write!(summary, " in {} sweeps", solution.meta.steps);
        }
    }
    let _ = write!(summary, "; max |u| = {peak:.6}.");
    Ok(ToolOutput { value: Some(peak), diagnostics, ..ToolOutput::new(Artifact::Solution(solution), summary) })
}

/// Linear (1-D) or bilinear (2-D) interpolation of the grid values.
pub fn interpolate(s: &Solution, point: &[f64]) -> Option<f64> {
    fn bracket(axis: &[f64], v: f64) -> Option<(usize, f64)> {
        let (lo, hi) = (axis[0], axis[axis.len() - 1]);
        let tol = 1e-12 * (hi - lo).abs().max(1.0);
        if !(lo - tol..=hi + tol).contains(&v) {
            return None;
        }
        let k = axis.partition_point(|&a| a <= v).clamp(1, axis.len() - 1) - 1;
        Some((k, ((v - axis[k]) / (axis[k + 1] - axis[k])).clamp(0.0, 1.0)))
    }
    let (i, wx) = bracket(&s.x, point[0])?;
    match (&s.y, point.len()) {
        (None, 1) => Some(s.u[i] * (1.0 - wx) + s.u[i + 1] * wx),
        (Some(y), 2) => {
            let (j, wy) = bracket(y, point[1])?;
            let lower = s.at(i, j) * (1.0 - wx) + s.at(i + 1, j) * wx;
            let upper = s.at(i, j + 1) * (1.0 - wx) + s.at(i + 1, j + 1) * wx;
            Some(lower * (1.0 - wy) + upper * wy)
        }
        _ => None,
    }
}

fn evaluate_solution(p: &ParamSet, env: &ToolEnv) -> Result<ToolOutput, ToolFailure> {
    let s = required(env.solution(p, "solution")?, "solution")?;
    let points = required(p.points("points"), "points")?;
    if points.is_empty() {
        return invalid("no points given");
    }
    let mut values = Vec::with_capacity(points.len());
    for pt in points {
        match interpolate(s, pt) {
            Some(v) => values.push(v),
            None => return invalid(format!("point {pt:?} lies outside the grid or has the wrong dimension")),
        }
    }
    let listed: Vec<String> = points
        .iter()
        .zip(&values)
        .map(|(pt, v)| {
            let coords: Vec<String> = pt.iter().map(|c| num(*c)).collect();
            format!("u({}) = {v:.6}", coords.join(", "))
        })
        .collect();
    let summary = format!("Evaluated the solution: {}.", listed.join("; "));
    let value = (values.len() == 1).then(|| values[0]);
    Ok(ToolOutput { value, ..ToolOutput::new(Artifact::Values(Values { points: points.to_vec(), values }), summary) })
}

/// Discrete L2 (cell-weighted) or max-norm error against `reference`,
/// evaluated at the solution's snapshot time.
pub fn solution_error(s: &Solution, reference: &SourceExpr, norm: &str) -> Result<f64, KernelError> {
    let t = s.t.unwrap_or(0.0);
    let dx = s.x[1] - s.x[0];
    let (ys, dy) = match &s.y {
        Some(y) => (y.iter().map(|&v| Some(v)).collect::<Vec<_>>(), y[1] - y[0]),
        None => (vec![None], 1.0),
    };
    let (mut sq, mut max) = (0.0f64, 0.0f64);
    for (j, y) in ys.iter().enumerate() {
        for (i, &x) in s.x.iter().enumerate() {
            let exact = reference.eval(&Bindings { x: Some(x), y: *y, t: Some(t) })?;
            let e = s.u[j * s.x.len() + i] - exact;
            sq += e * e;
            max = max.max(e.abs());
        }
    }
    Ok(if norm == "linf" { max } else { (sq * dx * dy).sqrt() })
}

fn compute_error(p: &ParamSet, env: &ToolEnv) -> Result<ToolOutput, ToolFailure> {
    let s = required(env.solution(p, "solution")?, "solution")?;
    let reference = required(p.expr("reference"), "reference")?;
    let norm = p.text("norm").unwrap_or("l2");
    let err = solution_error(s, reference, norm)?;
    let summary = format!("The {norm} error against {} is {err:.3e}.", reference.source);
    let artifact = Artifact::Scalar(ScalarValue { name: format!("{norm}_error"), value: err });
    Ok(ToolOutput { value: Some(err), ..ToolOutput::new(artifact, summary) })
}

fn safe_relative(path: &str) -> Result<&Path, ToolFailure> {
    let p = Path::new(path);
    if path.is_empty() || p.is_absolute() || p.components().any(|c| !matches!(c, Component::Normal(_) | Component::CurDir)) {
        return invalid(format!("export path `{path}` must be relative and stay inside the working directory"));
    }
    Ok(p)
}

/// CSV rendering of a solution: header `x[,y][,t],u`, one grid point per row.
pub fn solution_csv(s: &Solution) -> String {
    let mut header = vec!["x"];
    if s.y.is_some() {
        header.push("y");
    }
    if s.t.is_some() {
        header.push("t");
    }
    header.push("u");
    let mut out = header.join(",");
    out.push('\n');
    let ys: Vec<Option<f64>> = s.y.as_ref().map_or(vec![None], |y| y.iter().copied().map(Some).collect());
    for (j, y) in ys.iter().enumerate() {
        for (i, x) in s.x.iter().enumerate() {
            let _ = write!(out, "{x}");
            if let Some(y) = y {
                let _ = write!(out, ",{y}");
            }
            if let Some(t) = s.t {
                let _ = write!(out, ",{t}");
            }
            let _ = writeln!(out, ",{}", s.u[j * s.x.len() + i]);
        }
    }
    out
}

fn export_solution(p: &ParamSet, env: &ToolEnv) -> Result<ToolOutput, ToolFailure> {
    let s = required(env.solution(p, "solution")?, "solution")?;
    let rel = safe_relative(required(p.text("path"), "path")?)?;
    let csv_path = env.workdir.join(rel);
    let meta_path = csv_path.with_extension("meta.json");
    let io = |e: std::io::Error| ToolFailure::Invalid(format!("cannot write {}: {e}", csv_path.display()));
    if let Some(parent) = csv_path.parent() {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    std::fs::write(&csv_path, solution_csv(s)).map_err(io)?;
    let rows = s.u.len();
    let meta = json!({
        "category": s.category,
        "nx": s.x.len(),
        "ny": s.y.as_ref().map(Vec::len),
        "t": s.t,
        "rows": rows,
        "solver": s.meta,
    });
    let mut text = serde_json::to_string_pretty(&meta).expect("meta serializes");
    text.push('\n');
    std::fs::write(&meta_path, text).map_err(io)?;
    let rel_meta = rel.with_extension("meta.json");
    let summary = format!("Exported {rows} rows to {} with metadata in {}.", rel.display(), rel_meta.display());
    let artifact = Artifact::File(ExportSummary { csv: rel.display().to_string(), meta: rel_meta.display().to_string(), rows });
    Ok(ToolOutput::new(artifact, summary))
}

impl ToolRegistry {
    /// The PDE tool set.
    pub fn standard() -> Self {
        use ArtifactKind as K;
        use ParamType as T;
        let categories: Vec<&'static str> = PdeCategory::ALL.iter().map(|c| c.as_str()).collect();
        let tools: Vec<(ToolSpec, ToolFn)> = vec![
            (
                ToolSpec {
                    name: "define_geometry",
                    description: "Define the spatial domain: an interval [xmin, xmax] or a rectangle.",
                    params: vec![
                        param("kind", T::Enum(vec!["interval", "rectangle"]), true, "domain shape"),
                        param("xmin", T::Real, true, "left end"),
                        param("xmax", T::Real, true, "right end"),
                        param("ymin", T::Real, false, "bottom edge (rectangle)"),
                        param("ymax", T::Real, false, "top edge (rectangle)"),
                    ],
                    returns: K::Domain,
                },
                define_geometry as ToolFn,
            ),
            (
                ToolSpec {
                    name: "define_time_domain",
                    description: "Define the time interval [t0, t1].",
                    params: vec![param("t0", T::Real, true, "start time"), param("t1", T::Real, true, "end time")],
                    returns: K::TimeDomain,
                },
                define_time_domain,
            ),
            (
                ToolSpec {
                    name: "define_pde",
                    description: "Define the governing equation and its coefficients on a domain.",
                    params: vec![
                        param("category", T::Enum(categories), true, "equation family"),
                        param("domain", T::Handle(K::Domain), true, "domain handle"),
                        param("alpha", T::Real, false, "diffusivity"),
                        param("c", T::Real, false, "wave speed"),
                        param("a", T::Real, false, "advection velocity"),
                        param("reaction", T::Real, false, "linear reaction rate k in + k u"),
                        param("source", T::Expr, false, "source term f(x, y, t)"),
                    ],
                    returns: K::Pde,
                },
                define_pde,
            ),
            (
                ToolSpec {
                    name: "define_boundary_condition",
                    description: "Define a Dirichlet value or Neumann outward derivative on part of the boundary.",
                    params: vec![
                        param("btype", T::Enum(vec!["dirichlet", "neumann"]), true, "condition type"),
                        param("location", T::Enum(vec!["left", "right", "bottom", "top", "all"]), true, "boundary part"),
                        param("value", T::Expr, true, "boundary value g(x, y, t)"),
                    ],
                    returns: K::Bc,
                },
                define_boundary_condition,
            ),
            (
                ToolSpec {
                    name: "define_initial_condition",
                    description: "Define u at the initial time, and for the wave equation optionally u_t.",
                    params: vec![
                        param("value", T::Expr, true, "initial value u(x, 0)"),
                        param("velocity", T::Expr, false, "initial velocity u_t(x, 0)"),
                    ],
                    returns: K::Ic,
                },
                define_initial_condition,
            ),
            (
                ToolSpec {
                    name: "assemble_problem",
                    description: "Combine domain, equation, conditions and time interval into a problem.",
                    params: vec![
                        param("domain", T::Handle(K::Domain), true, "domain handle"),
                        param("timedomain", T::Handle(K::TimeDomain), false, "time interval handle"),
                        param("pde", T::Handle(K::Pde), true, "equation handle"),
                        param("bcs", T::HandleList(K::Bc), true, "boundary condition handles"),
                        param("ic", T::Handle(K::Ic), false, "initial condition handle"),
                    ],
                    returns: K::Problem,
                },
                assemble_problem,
            ),
            (
                ToolSpec {
                    name: "configure_solver",
                    description: "Choose grid resolution, number of time steps and the scheme.",
                    params: vec![
                        param("nx", T::Int, true, "grid points in x"),
                        param("ny", T::Int, false, "grid points in y"),
                        param("nt", T::Int, false, "time steps"),
                        param("scheme", T::Enum(vec!["auto", "explicit", "implicit"]), false, "time stepping"),
                    ],
                    returns: K::Solver,
                },
                configure_solver,
            ),
            (
                ToolSpec {
                    name: "solve",
                    description: "Solve an assembled problem with a solver configuration.",
                    params: vec![
                        param("problem", T::Handle(K::Problem), true, "problem handle"),
                        param("solver", T::Handle(K::Solver), true, "solver handle"),
                    ],
                    returns: K::Solution,
                },
                solve,
            ),
            (
                ToolSpec {
                    name: "evaluate_solution",
                    description: "Interpolate the solution at given points.",
                    params: vec![
                        param("solution", T::Handle(K::Solution), true, "solution handle"),
                        param("points", T::PointList, true, "x values or [x, y] pairs"),
                    ],
                    returns: K::Values,
                },
                evaluate_solution,
            ),
            (
                ToolSpec {
                    name: "compute_error",
                    description: "Compare the solution with a reference expression.",
                    params: vec![
                        param("solution", T::Handle(K::Solution), true, "solution handle"),
                        param("reference", T::Expr, true, "reference u(x, y, t)"),
                        param("norm", T::Enum(vec!["l2", "linf"]), false, "error norm"),
                    ],
                    returns: K::Scalar,
                },
                compute_error,
            ),
            (
                ToolSpec {
                    name: "export_solution",
                    description: "Write the solution as CSV plus a metadata JSON file.",
                    params: vec![
                        param("solution", T::Handle(K::Solution), true, "solution handle"),
                        param("path", T::Text, true, "relative output path"),
                    ],
                    returns: K::File,
                },
                export_solution,
            ),
        ];
        ToolRegistry::from_tools(tools)
    }
}

impl Default for ToolRegistry {
    fn default() -> Self {
        Self::standard()
    }
}

/// Validates `params` for `tool`, checks that every referenced handle is
/// live, runs the tool and stores its artifact under a fresh handle.
pub fn invoke(
    registry: &ToolRegistry,
    tool: &str,
    params: &ParamSet,
    pool: &mut ResourcePool,
    producer: &NodeId,
    seq: u32,
    workdir: &Path,
) -> Result<ActionOutcome, InvokeError> {
    let (spec, run) = registry
        .tools
        .iter()
        .find(|(s, _)| s.name == tool)
        .ok_or_else(|| InvokeError::UnknownTool(tool.to_string()))?;
    let params = spec.validate(&params.to_json())?;
    for h in params.all_handles() {
        pool.get(&h).map_err(|source| InvokeError::Dangling { tool: tool.to_string(), source })?;
    }
    let out = run(&params, &ToolEnv { pool, workdir }).map_err(|f| match f {
        ToolFailure::Kernel(source) => InvokeError::Numeric { tool: tool.to_string(), source },
        ToolFailure::Invalid(message) => InvokeError::Tool { tool: tool.to_string(), message },
    })?;
    let handle = pool
        .put(spec.returns, out.artifact, producer.clone(), seq)
        .map_err(|e| InvokeError::Tool { tool: tool.to_string(), message: e.to_string() })?;
    debug!(tool, %handle, "invoked");
    Ok(ActionOutcome { handle, summary: out.summary, value: out.value, diagnostics: out.diagnostics })
}

#[cfg(test)]
mod tests {
    use serde_json::Value;

    use super::*;

    struct Session {
        registry: ToolRegistry,
        pool: ResourcePool,
        seq: u32,
        dir: tempfile::TempDir,
    }

    impl Session {
        fn new() -> Self {
            Session { registry: ToolRegistry::standard(), pool: ResourcePool::new("t"), seq: 0, dir: tempfile::tempdir().unwrap() }
        }

        fn call(&mut self, tool: &str, params: Value) -> Result<ActionOutcome, InvokeError> {
            self.seq += 1;
            let spec = self.registry.spec(tool).ok_or_else(|| InvokeError::UnknownTool(tool.into()))?;
            let p = spec.validate(&params)?;
            invoke(&self.registry, tool, &p, &mut self.pool, &NodeId::for_seq(self.seq), self.seq, self.dir.path())
        }

        fn ok(&mut self, tool: &str, params: Value) -> String {
            self.call(tool, params).unwrap().handle.to_string()
        }
    }

    fn heat(s: &mut Session, nt: i64, scheme: &str) -> Result<ActionOutcome, InvokeError> {
        let d = s.ok("define_geometry", json!({"kind": "interval", "xmin": 0, "xmax": 1}));
        let t = s.ok("define_time_domain", json!({"t0": 0, "t1": 0.1}));
        let pde = s.ok("define_pde", json!({"category": "heat", "alpha": 1.0, "domain": d}));
        let bc = s.ok("define_boundary_condition", json!({"btype": "dirichlet", "location": "all", "value": "0"}));
        let ic = s.ok("define_initial_condition", json!({"value": "sin(pi*x)"}));
        let prob = s.ok("assemble_problem", json!({"domain": d, "timedomain": t, "pde": pde, "bcs": [bc], "ic": ic}));
        let solver = s.ok("configure_solver", json!({"nx": 101, "nt": nt, "scheme": scheme}));
        s.call("solve", json!({"problem": prob, "solver": solver}))
    }

    #[test]
    fn registry_names_are_unique_and_documented() {
        let r = ToolRegistry::standard();
        assert_eq!(r.names().len(), 11);
        let doc = r.schema_document();
        let tools = doc["tools"].as_array().unwrap();
        assert_eq!(tools.len(), 11);
        assert_eq!(tools[2]["parameters"]["properties"]["domain"]["artifact_kind"], "domain");
        assert_eq!(tools[2]["parameters"]["required"], json!(["category", "domain"]));
    }

    #[test]
    fn constructor_and_dependency_tools() {
        let mut s = Session::new();
        assert_eq!(s.ok("define_geometry", json!({"kind": "interval", "xmin": 0, "xmax": 1})), "domain:1");
        assert_eq!(s.ok("define_pde", json!({"category": "heat", "alpha": 1.0, "domain": "domain:1"})), "pde:1");
        assert_eq!(s.pool.entry(&"pde:1".parse().unwrap()).unwrap().producer, NodeId::new("n2"));
    }

    #[test]
    fn handle_kind_mismatch_is_a_schema_violation() {
        let mut s = Session::new();
        s.ok("define_geometry", json!({"kind": "interval", "xmin": 0, "xmax": 1}));
        let err = s.call("solve", json!({"problem": "domain:1", "solver": "solver:1"})).unwrap_err();
        let InvokeError::Schema(v) = err else { panic!("{err:?}") };
        assert_eq!(v.field, "problem");
    }

    #[test]
    fn dangling_handles_are_reported() {
        let mut s = Session::new();
        let err = s.call("define_pde", json!({"category": "heat", "alpha": 1.0, "domain": "domain:3"})).unwrap_err();
        assert_eq!(err.kind(), "dangling_handle");
        assert_eq!(s.pool.len(), 0);
    }

    #[test]
    fn unknown_tool() {
        let r = ToolRegistry::standard();
        let err = invoke(&r, "mesh", &ParamSet::default(), &mut ResourcePool::new("t"), &NodeId::new("n1"), 1, Path::new("."));
        assert_eq!(err.unwrap_err(), InvokeError::UnknownTool("mesh".into()));
    }

    #[test]
    fn heat_pipeline_and_error() {
        let mut s = Session::new();
        let out = heat(&mut s, 100, "auto").unwrap();
        assert!(out.summary.contains("crank_nicolson"), "{}", out.summary);
        assert!(!out.has_warnings());
        let sol = out.handle.to_string();
        let err = s
            .call("compute_error", json!({"solution": sol, "reference": "exp(-pi^2*t)*sin(pi*x)", "norm": "l2"}))
            .unwrap();
        assert!(err.value.unwrap() <= 1e-3);
        let v = s.call("evaluate_solution", json!({"solution": sol, "points": [0.5]})).unwrap();
        assert!((v.value.unwrap() - (-std::f64::consts::PI.powi(2) * 0.1).exp()).abs() < 1e-3);
        // one pool entry per successful invocation
        assert_eq!(s.pool.len(), 10);
    }

    #[test]
    fn stability_failure_names_the_tool() {
        let mut s = Session::new();
        let err = heat(&mut s, 100, "explicit").unwrap_err();
        assert_eq!(err.kind(), "numeric");
        let text = err.to_string();
        assert!(text.starts_with("solve failed: stability violation"), "{text}");
        assert!(text.contains("nt >= 2000"), "{text}");
        assert_eq!(s.pool.len(), 7);
    }

    #[test]
    fn incomplete_time_dependent_problem_is_rejected() {
        let mut s = Session::new();
        let d = s.ok("define_geometry", json!({"kind": "interval", "xmin": 0, "xmax": 1}));
        let t = s.ok("define_time_domain", json!({"t0": 0, "t1": 1}));
        let pde = s.ok("define_pde", json!({"category": "wave", "c": 1, "domain": d}));
        let bc = s.ok("define_boundary_condition", json!({"btype": "dirichlet", "location": "all", "value": "0"}));
        let err = s.call("assemble_problem", json!({"domain": d, "timedomain": t, "pde": pde, "bcs": [bc]})).unwrap_err();
        assert!(err.to_string().contains("initial condition"), "{err}");
        let left = s.ok("define_boundary_condition", json!({"btype": "dirichlet", "location": "left", "value": "0"}));
        let ic = s.ok("define_initial_condition", json!({"value": "0"}));
        let err = s.call("assemble_problem", json!({"domain": d, "timedomain": t, "pde": pde, "bcs": [left], "ic": ic})).unwrap_err();
        assert!(err.to_string().contains("right"), "{err}");
    }

    #[test]
    fn coefficient_checks() {
        let mut s = Session::new();
        let d = s.ok("define_geometry", json!({"kind": "interval", "xmin": 0, "xmax": 1}));
        assert!(s.call("define_pde", json!({"category": "heat", "domain": d})).is_err());
        assert!(s.call("define_pde", json!({"category": "heat", "alpha": -1, "domain": d})).is_err());
        assert!(s.call("define_pde", json!({"category": "poisson", "domain": d})).is_err());
        assert!(s.call("define_pde", json!({"category": "burgers", "domain": d})).is_ok());
        assert!(s.call("define_geometry", json!({"kind": "interval", "xmin": 1, "xmax": 0})).is_err());
    }

    #[test]
    fn advection_on_the_outflow_side_warns() {
        let mut s = Session::new();
        let d = s.ok("define_geometry", json!({"kind": "interval", "xmin": 0, "xmax": 1}));
        let t = s.ok("define_time_domain", json!({"t0": 0, "t1": 0.25}));
        let pde = s.ok("define_pde", json!({"category": "advection", "a": 1, "domain": d}));
        let bc = s.ok("define_boundary_condition", json!({"btype": "dirichlet", "location": "right", "value": "0"}));
        let ic = s.ok("define_initial_condition", json!({"value": "exp(-100*(x-0.3)^2)"}));
        let prob = s.ok("assemble_problem", json!({"domain": d, "timedomain": t, "pde": pde, "bcs": [bc], "ic": ic}));
        let solver = s.ok("configure_solver", json!({"nx": 101, "nt": 50}));
        let out = s.call("solve", json!({"problem": prob, "solver": solver})).unwrap();
        assert!(out.has_warnings());
    }

    #[test]
    fn export_writes_csv_and_sidecar() {
        let mut s = Session::new();
        let sol = heat(&mut s, 100, "auto").unwrap().handle.to_string();
        let out = s.call("export_solution", json!({"solution": sol, "path": "out/heat.csv"})).unwrap();
        let csv = std::fs::read_to_string(s.dir.path().join("out/heat.csv")).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("x,t,u"));
        assert_eq!(lines.next(), Some("0,0.1,0"));
        assert_eq!(csv.lines().count(), 102);
        assert!(!csv.contains('\r'));
        let meta: Value = serde_json::from_str(&std::fs::read_to_string(s.dir.path().join("out/heat.meta.json")).unwrap()).unwrap();
        assert_eq!(meta["solver"]["scheme"], "crank_nicolson");
        assert!(out.summary.contains("101 rows"));
        for bad in ["/tmp/x.csv", "../x.csv", "a/../../x.csv", ""] {
            assert!(s.call("export_solution", json!({"solution": sol, "path": bad})).is_err(), "{bad}");
        }
    }

    #[test]
    fn laplace_rectangle_pipeline() {
        let mut s = Session::new();
        let d = s.ok("define_geometry", json!({"kind": "rectangle", "xmin": 0, "xmax": 1, "ymin": 0, "ymax": 2}));
        let pde = s.ok("define_pde", json!({"category": "laplace", "domain": d}));
        let bc = s.ok("define_boundary_condition", json!({"btype": "dirichlet", "location": "all", "value": "x^2 - y^2"}));
        let prob = s.ok("assemble_problem", json!({"domain": d, "pde": pde, "bcs": [bc]}));
        let solver = s.ok("configure_solver", json!({"nx": 21, "ny": 41}));
        let sol = s.ok("solve", json!({"problem": prob, "solver": solver}));
        let err = s.call("compute_error", json!({"solution": sol, "reference": "x^2 - y^2", "norm": "linf"})).unwrap();
        assert!(err.value.unwrap() <= 1e-4);
        let v = s.call("evaluate_solution", json!({"solution": sol, "points": [[0.5, 1.0]]})).unwrap();
        assert!((v.value.unwrap() - (0.25 - 1.0)).abs() < 1e-3);
        assert!(s.call("evaluate_solution", json!({"solution": sol, "points": [[2.0, 1.0]]})).is_err());
        assert!(s.call("evaluate_solution", json!({"solution": sol, "points": [0.5]})).is_err());
    }
}
