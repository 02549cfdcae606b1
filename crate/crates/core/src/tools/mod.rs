//! Tool contracts, their prompt rendering, and the bridge from scripts to host code.

pub mod catalog;
pub mod descriptor;
pub mod fixtures;
pub mod geometry;
pub mod registry;

pub use catalog::{full_registry, web_search_stub};
pub use descriptor::{Category, ParamSpec, ParamType, ToolDescriptor};
pub use fixtures::{FixtureError, FixtureRecord, FixtureStore};
pub use registry::{ToolArgs, ToolBinding, ToolContext, ToolError, ToolRegistry};
