//! Config-driven experiment runner around the simulation core: config
//! schema, run/compare/sweep drivers, output writers, and the property
//! verification suite.

pub mod config;
pub mod experiment;
pub mod output;
pub mod verify;
