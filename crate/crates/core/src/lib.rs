//! Constraint-automata compiler and runtime for Reo-style connectors.

pub mod ca;
pub mod cli;
pub mod compile;
pub mod connector;
pub mod region;
pub mod runtime;
pub mod scan;
