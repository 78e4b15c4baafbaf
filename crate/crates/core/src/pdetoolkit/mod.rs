//! Registered PDE tools, the resource pool that carries their artifacts
//! between invocations, and the finite-difference kernels behind `solve`.
//!
//! Tools never pass runtime objects to each other directly. Each successful
//! invocation stores exactly one artifact in the [`ResourcePool`] and
//! returns its [`Handle`]; later tools receive handles as parameters.

mod artifacts;
pub mod kernels;
mod pool;
mod registry;
mod tools;

pub use artifacts::{
    Artifact, ArtifactKind, BoundaryCondition, BoundaryType, Domain, ExportSummary, InitialCondition, Location,
    PdeCategory, PdeSpec, Problem, ScalarValue, Scheme, Solution, SolverConfig, SolverMeta, TimeDomain, Values,
};
pub use kernels::KernelError;
pub use pool::{Handle, PoolEntry, PoolError, PoolSnapshotEntry, ResourcePool};
pub use registry::{ParamSet, ParamSpec, ParamType, ParamValue, SchemaViolation, ToolRegistry, ToolSpec};
pub use tools::{interpolate, invoke, solution_csv, solution_error, ActionOutcome, Diagnostic, DiagnosticLevel, InvokeError};
