//! Numerical core for a magnetized kinetic plasma model on the periodic
//! plane and its quasineutral fluid-kinetic limit.

pub mod error;
pub mod evolve;
pub mod field;
pub mod grid;
pub mod algebra;
pub mod linalg;
pub mod moments;
pub mod params;
pub(crate) mod par;
pub mod phase;
pub mod qnvp;
pub mod spectral;
pub mod synth;
pub mod vp;

pub use error::{Error, Result};
