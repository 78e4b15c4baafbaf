//! Tool-chain orchestration for PDE problems stated in natural language.
//!
//! A planner decomposes a query into subtasks over a fixed registry of
//! numerical tools; a parser extracts typed parameters; an executor invokes
//! the tools against a session-scoped resource pool; an orchestrator
//! validates at checkpoints and drives local repair or global replanning.
//! The [`graphmetrics`] and [`textmetrics`] modules score executions
//! against reference tool chains, and [`bench`] runs case packs end to end.

pub mod agents;
pub mod bench;
pub mod exprlang;
pub mod graphmetrics;
pub mod pdetoolkit;
pub mod providers;
pub mod textmetrics;
pub mod toolgraph;

mod util;
