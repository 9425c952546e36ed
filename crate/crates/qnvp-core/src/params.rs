//! Physical parameters shared by the bracket and model modules.

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::TorusGrid;

/// Dimensionless parameters of the magnetized plasma model.
///
/// `epsilon` orders the transport terms, `lambda` weighs the field energy,
/// `delta` measures the departure from quasineutrality (`delta = 0` is the
/// quasineutral limit and makes the electrostatic solve singular), and `b` is
/// the out-of-plane magnetic field profile on the position grid.
#[derive(Debug, Clone)]
pub struct PhysParams {
    pub epsilon: f64,
    pub lambda: f64,
    pub delta: f64,
    pub b: ScalarField,
}

impl PhysParams {
    pub fn new(epsilon: f64, lambda: f64, delta: f64, b: ScalarField) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::Config(format!(
                "params.epsilon must be positive and finite, got {epsilon}"
            )));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Config(format!(
                "params.lambda must be positive and finite, got {lambda}"
            )));
        }
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(Error::Config(format!(
                "params.delta must be nonnegative and finite, got {delta}"
            )));
        }
        if !b.is_finite() {
            return Err(Error::NonFiniteInput {
                context: "params.b".into(),
            });
        }
        Ok(Self {
            epsilon,
            lambda,
            delta,
            b,
        })
    }

    /// Convenience constructor with a spatially uniform magnetic field.
    pub fn uniform(
        grid: TorusGrid,
        epsilon: f64,
        lambda: f64,
        delta: f64,
        b: f64,
    ) -> Result<Self> {
        Self::new(epsilon, lambda, delta, ScalarField::constant(grid, b))
    }

    /// Same parameters with a different quasineutrality measure.
    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        Self::new(self.epsilon, self.lambda, delta, self.b.clone())
    }
}
