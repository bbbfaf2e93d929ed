//! fmcc: a compiler and simulator that turns a small C++ teaching subset
//! into flowthing graphs — diagrams of the conceptual operations a computer
//! performs while running the program.
//!
//! The pipeline is source → AST ([`frontend`]) → flowthing graph
//! ([`compile`]) → optional rewrites ([`transform`]) → token simulation
//! ([`sim`]) or serialization and rendering ([`emit`]). The [`fm`] module
//! holds the graph model itself, and [`generator`] produces random programs
//! for differential testing against the reference interpreter.

pub mod compile;
pub mod emit;
pub mod fm;
pub mod frontend;
pub mod generator;
pub mod sim;
pub mod transform;
