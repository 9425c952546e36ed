//! Scalar, vector, and symmetric tensor fields on the position torus.
//!
//! Values are stored in an `Array2<f64>` indexed `[iy, ix]` so that x is the
//! fastest index, matching the row-major dump layout. Every field remembers
//! its grid; binary operations check grid agreement once at the boundary and
//! then work on raw arrays.

use crate::error::{Error, Result};
use crate::grid::TorusGrid;
use ndarray::{Array2, Zip};

/// Scalar field sampled on a [`TorusGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: TorusGrid,
    data: Array2<f64>,
}

impl ScalarField {
    pub fn zeros(grid: TorusGrid) -> Self {
        ScalarField {
            grid,
            data: Array2::zeros((grid.nq(), grid.nq())),
        }
    }

    pub fn constant(grid: TorusGrid, value: f64) -> Self {
        ScalarField {
            grid,
            data: Array2::from_elem((grid.nq(), grid.nq()), value),
        }
    }

    /// Sample `f(x, y)` at the grid points.
    pub fn from_fn(grid: TorusGrid, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let n = grid.nq();
        let data = Array2::from_shape_fn((n, n), |(iy, ix)| f(grid.coord(ix), grid.coord(iy)));
        ScalarField { grid, data }
    }

    /// Wrap an existing array; the shape must be nq x nq.
    pub fn from_array(grid: TorusGrid, data: Array2<f64>) -> Result<Self> {
        if data.dim() != (grid.nq(), grid.nq()) {
            return Err(Error::grid(format!(
                "field shape {:?} does not match grid nq = {}",
                data.dim(),
                grid.nq()
            )));
        }
        Ok(ScalarField { grid, data })
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut Array2<f64> {
        &mut self.data
    }

    pub fn into_data(self) -> Array2<f64> {
        self.data
    }

    pub fn same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::grid("scalar fields live on different grids"));
        }
        Ok(())
    }

    /// Grid average (equals the integral divided by (2pi)^2).
    pub fn mean(&self) -> f64 {
        self.data.sum() / self.data.len() as f64
    }

    /// Rectangle-rule integral over the torus.
    pub fn integral(&self) -> f64 {
        self.data.sum() * self.grid.cell_area()
    }

    /// Quadrature-weighted L2 norm.
    pub fn l2_norm(&self) -> f64 {
        (self.data.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_area()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.data.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField {
            grid: self.grid,
            data: self.data.mapv(|v| f(v)),
        }
    }

    /// self += alpha * other.
    pub fn axpy(&mut self, alpha: f64, other: &ScalarField) {
        Zip::from(&mut self.data)
            .and(&other.data)
            .for_each(|a, &b| *a += alpha * b);
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.mapv_inplace(|v| alpha * v);
    }

    pub fn add_scalar(&mut self, c: f64) {
        self.data.mapv_inplace(|v| v + c);
    }

    /// Pointwise product.
    pub fn mul(&self, other: &ScalarField) -> Self {
        ScalarField {
            grid: self.grid,
            data: &self.data * &other.data,
        }
    }

    /// Pointwise quotient; the caller guarantees the denominator is bounded
    /// away from zero.
    pub fn div(&self, other: &ScalarField) -> Self {
        ScalarField {
            grid: self.grid,
            data: &self.data / &other.data,
        }
    }

    pub fn add(&self, other: &ScalarField) -> Self {
        ScalarField {
            grid: self.grid,
            data: &self.data + &other.data,
        }
    }

    pub fn sub(&self, other: &ScalarField) -> Self {
        ScalarField {
            grid: self.grid,
            data: &self.data - &other.data,
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        ScalarField {
            grid: self.grid,
            data: self.data.mapv(|v| alpha * v),
        }
    }

    /// L2 distance to another field on the same grid.
    pub fn l2_distance(&self, other: &ScalarField) -> f64 {
        let mut acc = 0.0;
        Zip::from(&self.data).and(&other.data).for_each(|&a, &b| {
            let d = a - b;
            acc += d * d;
        });
        (acc * self.grid.cell_area()).sqrt()
    }

    pub fn linf_distance(&self, other: &ScalarField) -> f64 {
        let mut m = 0.0f64;
        Zip::from(&self.data).and(&other.data).for_each(|&a, &b| {
            m = m.max((a - b).abs());
        });
        m
    }

    /// Quadrature-weighted inner product (self, other)_{L2}.
    pub fn inner(&self, other: &ScalarField) -> f64 {
        let mut acc = 0.0;
        Zip::from(&self.data).and(&other.data).for_each(|&a, &b| {
            acc += a * b;
        });
        acc * self.grid.cell_area()
    }
}

/// Vector field with components (x, y).
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub x: ScalarField,
    pub y: ScalarField,
}

impl VectorField {
    pub fn zeros(grid: TorusGrid) -> Self {
        VectorField {
            x: ScalarField::zeros(grid),
            y: ScalarField::zeros(grid),
        }
    }

    pub fn from_fn(
        grid: TorusGrid,
        fx: impl FnMut(f64, f64) -> f64,
        fy: impl FnMut(f64, f64) -> f64,
    ) -> Self {
        VectorField {
            x: ScalarField::from_fn(grid, fx),
            y: ScalarField::from_fn(grid, fy),
        }
    }

    pub fn new(x: ScalarField, y: ScalarField) -> Result<Self> {
        x.same_grid(&y)?;
        Ok(VectorField { x, y })
    }

    pub fn grid(&self) -> TorusGrid {
        self.x.grid()
    }

    /// Pointwise dot product with another vector field.
    pub fn dot(&self, other: &VectorField) -> ScalarField {
        self.x.mul(&other.x).add(&self.y.mul(&other.y))
    }

    /// Pointwise squared magnitude |v|^2.
    pub fn norm_sq(&self) -> ScalarField {
        self.dot(self)
    }

    /// The 90-degree rotation J v = (-v_y, v_x).
    pub fn rotated(&self) -> VectorField {
        VectorField {
            x: self.y.scaled(-1.0),
            y: self.x.clone(),
        }
    }

    pub fn scaled(&self, alpha: f64) -> VectorField {
        VectorField {
            x: self.x.scaled(alpha),
            y: self.y.scaled(alpha),
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.x.scale(alpha);
        self.y.scale(alpha);
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        VectorField {
            x: self.x.add(&other.x),
            y: self.y.add(&other.y),
        }
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        VectorField {
            x: self.x.sub(&other.x),
            y: self.y.sub(&other.y),
        }
    }

    /// Multiply both components by a scalar field.
    pub fn mul_scalar_field(&self, s: &ScalarField) -> VectorField {
        VectorField {
            x: self.x.mul(s),
            y: self.y.mul(s),
        }
    }

    pub fn axpy(&mut self, alpha: f64, other: &VectorField) {
        self.x.axpy(alpha, &other.x);
        self.y.axpy(alpha, &other.y);
    }

    pub fn l2_norm(&self) -> f64 {
        let sx = self.x.l2_norm();
        let sy = self.y.l2_norm();
        (sx * sx + sy * sy).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.x.max_abs().max(self.y.max_abs())
    }

    pub fn l2_distance(&self, other: &VectorField) -> f64 {
        let dx = self.x.l2_distance(&other.x);
        let dy = self.y.l2_distance(&other.y);
        (dx * dx + dy * dy).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Componentwise quadrature inner product.
    pub fn inner(&self, other: &VectorField) -> f64 {
        self.x.inner(&other.x) + self.y.inner(&other.y)
    }
}

/// Symmetric rank-2 tensor field with components (xx, xy, yy).
#[derive(Debug, Clone)]
pub struct TensorField {
    pub xx: ScalarField,
    pub xy: ScalarField,
    pub yy: ScalarField,
}

impl TensorField {
    pub fn zeros(grid: TorusGrid) -> Self {
        TensorField {
            xx: ScalarField::zeros(grid),
            xy: ScalarField::zeros(grid),
            yy: ScalarField::zeros(grid),
        }
    }

    pub fn grid(&self) -> TorusGrid {
        self.xx.grid()
    }

    /// Trace xx + yy.
    pub fn trace(&self) -> ScalarField {
        self.xx.add(&self.yy)
    }

    /// Contract with a vector on the right: (T v)_a = T_ab v_b.
    pub fn contract(&self, v: &VectorField) -> VectorField {
        VectorField {
            x: self.xx.mul(&v.x).add(&self.xy.mul(&v.y)),
            y: self.xy.mul(&v.x).add(&self.yy.mul(&v.y)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn integral_and_mean_of_cosine_vanish() {
        let g = TorusGrid::new(16).unwrap();
        let f = ScalarField::from_fn(g, |x, _| x.cos());
        assert!(f.integral().abs() < 1e-12);
        assert!(f.mean().abs() < 1e-14);
    }

    #[test]
    fn l2_norm_of_sin_is_sqrt_half_area() {
        // integral of sin^2(x) over the torus is (2pi)^2 / 2
        let g = TorusGrid::new(32).unwrap();
        let f = ScalarField::from_fn(g, |x, _| x.sin());
        let expected = (TAU * TAU / 2.0).sqrt();
        assert!((f.l2_norm() - expected).abs() < 1e-12);
    }

    #[test]
    fn rotation_is_ninety_degrees() {
        let g = TorusGrid::new(8).unwrap();
        let v = VectorField::from_fn(g, |x, _| x.sin(), |_, y| y.cos());
        let jv = v.rotated();
        // J v = (-v_y, v_x), and J(Jv) = -v
        let jjv = jv.rotated();
        assert!(jjv.add(&v).l2_norm() < 1e-15);
        assert!(jv.dot(&v).integral().abs() < 1e-12);
    }

    #[test]
    fn tensor_contract_matches_hand_expansion() {
        let g = TorusGrid::new(8).unwrap();
        let mut t = TensorField::zeros(g);
        t.xx = ScalarField::constant(g, 2.0);
        t.xy = ScalarField::constant(g, 1.0);
        t.yy = ScalarField::constant(g, 3.0);
        let v = VectorField::from_fn(g, |_, _| 1.0, |_, _| -1.0);
        let tv = t.contract(&v);
        assert!((tv.x.mean() - 1.0).abs() < 1e-15);
        assert!((tv.y.mean() + 2.0).abs() < 1e-15);
    }
}
