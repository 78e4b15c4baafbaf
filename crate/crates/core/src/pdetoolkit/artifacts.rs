use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::exprlang::SourceExpr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ArtifactKind {
    Domain,
    TimeDomain,
    Pde,
    Bc,
    Ic,
    Problem,
    Solver,
    Solution,
    Values,
    Scalar,
    File,
}

impl ArtifactKind {
    pub const ALL: [ArtifactKind; 11] = [
        ArtifactKind::Domain,
        ArtifactKind::TimeDomain,
        ArtifactKind::Pde,
        ArtifactKind::Bc,
        ArtifactKind::Ic,
        ArtifactKind::Problem,
        ArtifactKind::Solver,
        ArtifactKind::Solution,
        ArtifactKind::Values,
        ArtifactKind::Scalar,
        ArtifactKind::File,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ArtifactKind::Domain => "domain",
            ArtifactKind::TimeDomain => "timedomain",
            ArtifactKind::Pde => "pde",
            ArtifactKind::Bc => "bc",
            ArtifactKind::Ic => "ic",
            ArtifactKind::Problem => "problem",
            ArtifactKind::Solver => "solver",
            ArtifactKind::Solution => "solution",
            ArtifactKind::Values => "values",
            ArtifactKind::Scalar => "scalar",
            ArtifactKind::File => "file",
        }
    }
}

impl fmt::Display for ArtifactKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ArtifactKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        ArtifactKind::ALL.into_iter().find(|k| k.as_str() == s).ok_or(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Domain {
    Interval { xmin: f64, xmax: f64 },
    Rectangle { xmin: f64, xmax: f64, ymin: f64, ymax: f64 },
}

impl Domain {
    pub fn x_range(&self) -> (f64, f64) {
        match *self {
            Domain::Interval { xmin, xmax } | Domain::Rectangle { xmin, xmax, .. } => (xmin, xmax),
        }
    }

    pub fn y_range(&self) -> Option<(f64, f64)> {
        match *self {
            Domain::Interval { .. } => None,
            Domain::Rectangle { ymin, ymax, .. } => Some((ymin, ymax)),
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Domain::Interval { xmin, xmax } => write!(f, "interval [{xmin}, {xmax}]"),
            Domain::Rectangle { xmin, xmax, ymin, ymax } => write!(f, "rectangle [{xmin}, {xmax}] x [{ymin}, {ymax}]"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeDomain {
    pub t0: f64,
    pub t1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PdeCategory {
    Heat,
    Diffusion,
    DiffusionReaction,
    Wave,
    Advection,
    Laplace,
    Poisson,
    KleinGordon,
    Burgers,
    AllenCahn,
}

impl PdeCategory {
    pub const ALL: [PdeCategory; 10] = [
        PdeCategory::Heat,
        PdeCategory::Diffusion,
        PdeCategory::DiffusionReaction,
        PdeCategory::Wave,
        PdeCategory::Advection,
        PdeCategory::Laplace,
        PdeCategory::Poisson,
        PdeCategory::KleinGordon,
        PdeCategory::Burgers,
        PdeCategory::AllenCahn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PdeCategory::Heat => "heat",
            PdeCategory::Diffusion => "diffusion",
            PdeCategory::DiffusionReaction => "diffusion_reaction",
            PdeCategory::Wave => "wave",
            PdeCategory::Advection => "advection",
            PdeCategory::Laplace => "laplace",
            PdeCategory::Poisson => "poisson",
            PdeCategory::KleinGordon => "klein_gordon",
            PdeCategory::Burgers => "burgers",
            PdeCategory::AllenCahn => "allen_cahn",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        PdeCategory::ALL.into_iter().find(|c| c.as_str() == s)
    }

    pub fn is_time_dependent(self) -> bool {
        !matches!(self, PdeCategory::Laplace | PdeCategory::Poisson)
    }

    /// Categories whose names are reserved but which no kernel handles.
    pub fn is_reserved(self) -> bool {
        matches!(self, PdeCategory::KleinGordon | PdeCategory::Burgers | PdeCategory::AllenCahn)
    }
}

impl fmt::Display for PdeCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdeSpec {
    pub category: PdeCategory,
    pub domain: Domain,
    /// Diffusivity.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Wave speed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    /// Advection velocity.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    /// Linear reaction rate `k` in `u_t = alpha u_xx + k u + f`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reaction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceExpr>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryType {
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Location {
    Left,
    Right,
    Bottom,
    Top,
    All,
}

impl Location {
    pub fn covers(self, side: Location) -> bool {
        self == Location::All || self == side
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryCondition {
    pub btype: BoundaryType,
    pub location: Location,
    /// Boundary value; for Neumann the outward normal derivative.
    pub value: SourceExpr,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitialCondition {
    pub value: SourceExpr,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub velocity: Option<SourceExpr>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Problem {
    pub pde: PdeSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeDomain>,
    pub bcs: Vec<BoundaryCondition>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ic: Option<InitialCondition>,
}

impl Problem {
    pub fn domain(&self) -> Domain {
        self.pde.domain
    }

    /// The condition governing `side`; a side-specific condition wins over `all`.
    pub fn bc_for(&self, side: Location) -> Option<&BoundaryCondition> {
        self.bcs
            .iter()
            .rev()
            .find(|bc| bc.location == side)
            .or_else(|| self.bcs.iter().rev().find(|bc| bc.location == Location::All))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Auto,
    Explicit,
    Implicit,
}

impl Scheme {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "auto" => Some(Scheme::Auto),
            "explicit" => Some(Scheme::Explicit),
            "implicit" => Some(Scheme::Implicit),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    pub nx: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ny: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nt: Option<usize>,
    pub scheme: Scheme,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverMeta {
    pub scheme: String,
    pub steps: usize,
    /// Named stability numbers, e.g. `courant` or `diffusion_number`.
    pub stability: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
}

/// Grid values. For a 2-D grid `u` is row-major with `x` varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Solution {
    pub category: PdeCategory,
    pub x: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<f64>>,
    /// Time of the stored snapshot for time-dependent problems.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    pub u: Vec<f64>,
    pub meta: SolverMeta,
}

impl Solution {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.u[j * self.x.len() + i]
    }

    pub fn max_abs(&self) -> f64 {
        self.u.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Values {
    /// Query points, each `[x]` or `[x, y]`.
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarValue {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExportSummary {
    pub csv: String,
    pub meta: String,
    pub rows: usize,
}

/// Runtime objects stored in the resource pool.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "data", rename_all = "lowercase")]
pub enum Artifact {
    Domain(Domain),
    #[serde(rename = "timedomain")]
    TimeDomain(TimeDomain),
    Pde(PdeSpec),
    Bc(BoundaryCondition),
    Ic(InitialCondition),
    Problem(Problem),
    Solver(SolverConfig),
    Solution(Solution),
    Values(Values),
    Scalar(ScalarValue),
    File(ExportSummary),
}

impl Artifact {
    pub fn kind(&self) -> ArtifactKind {
        match self {
            Artifact::Domain(_) => ArtifactKind::Domain,
            Artifact::TimeDomain(_) => ArtifactKind::TimeDomain,
            Artifact::Pde(_) => ArtifactKind::Pde,
            Artifact::Bc(_) => ArtifactKind::Bc,
            Artifact::Ic(_) => ArtifactKind::Ic,
            Artifact::Problem(_) => ArtifactKind::Problem,
            Artifact::Solver(_) => ArtifactKind::Solver,
            Artifact::Solution(_) => ArtifactKind::Solution,
            Artifact::Values(_) => ArtifactKind::Values,
            Artifact::Scalar(_) => ArtifactKind::Scalar,
            Artifact::File(_) => ArtifactKind::File,
        }
    }
}
