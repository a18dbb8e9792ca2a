//! Independent ground truth: Kleene iteration and Monte-Carlo simulation.

pub mod distribution;
pub mod kleene;
pub mod simulate;

pub use distribution::{distribution_match, DistributionReport};
pub use kleene::{kleene_converge, kleene_iterate, kleene_table, Arithmetic, KleeneConvergence, KleeneLimits, KleeneResult, KleeneTable};
pub use simulate::{simulate, termination_times, SimEstimate};
