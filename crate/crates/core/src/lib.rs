//! Agent runtime for histopathology analysis: tools, model adapters, the
//! thought/code loop, benchmark scoring and the experiment runner.

pub mod agent;
pub mod bench;
pub mod model;
pub mod runner;
pub mod tools;
