//! Exact expected runtimes of constant-probability integer loops.

pub mod error;
pub mod mp;
pub mod parser;
pub mod program;
pub mod rational;
pub mod reduction;
pub mod termination;
pub mod runtime;
pub mod oracles;
pub mod report;
pub mod verify;
