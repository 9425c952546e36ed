//! Position and velocity grids.
//!
//! Position space is the doubly periodic square [0, 2pi)^2 sampled on an
//! nq x nq uniform grid. Velocity space is the square [-vmax, vmax]^2 sampled
//! at nv x nv cell centers, so no sample sits exactly on v = 0 or on the box
//! edge; integrals over velocity use the rectangle rule on those centers.

use crate::error::{Error, Result};
use std::f64::consts::TAU;

/// Uniform grid on the periodic square [0, 2pi)^2.
///
/// Grid point (ix, iy) sits at (ix * dq, iy * dq) with dq = 2pi/nq. Scalars
/// are stored row-major with x fastest, i.e. indexed `[iy][ix]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TorusGrid {
    nq: usize,
}

impl TorusGrid {
    /// nq must be even (the spectral symbol tables assume a paired +-k layout)
    /// and at least 4.
    pub fn new(nq: usize) -> Result<Self> {
        if nq % 2 != 0 {
            return Err(Error::grid("grid.nq must be even"));
        }
        if nq < 4 {
            return Err(Error::grid(format!("grid.nq must be >= 4, got {nq}")));
        }
        Ok(TorusGrid { nq })
    }

    pub fn nq(&self) -> usize {
        self.nq
    }

    /// Grid spacing 2pi/nq.
    pub fn dq(&self) -> f64 {
        TAU / self.nq as f64
    }

    /// Quadrature weight of one grid cell, (2pi/nq)^2.
    pub fn cell_area(&self) -> f64 {
        self.dq() * self.dq()
    }

    /// Number of grid points nq^2.
    pub fn len(&self) -> usize {
        self.nq * self.nq
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// x-coordinate of column ix.
    pub fn coord(&self, i: usize) -> f64 {
        i as f64 * self.dq()
    }

    /// Integer wavenumber of FFT bin j in the standard layout:
    /// 0, 1, ..., nq/2, -(nq/2 - 1), ..., -1. Bin nq/2 is the Nyquist mode.
    pub fn wavenumber(&self, j: usize) -> i64 {
        let n = self.nq as i64;
        let j = j as i64;
        if j <= n / 2 {
            j
        } else {
            j - n
        }
    }

    /// Nyquist bin index nq/2.
    pub fn nyquist(&self) -> usize {
        self.nq / 2
    }

    /// Largest wavenumber magnitude kept by the 2/3-rule dealias mask.
    pub fn dealias_cutoff(&self) -> i64 {
        ((self.nq as f64) / 2.0 * (2.0 / 3.0)).floor() as i64
    }
}

/// Cell-centered grid on the velocity box [-vmax, vmax]^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityGrid {
    nv: usize,
    vmax: f64,
}

impl VelocityGrid {
    /// nv must be even and at least 8 (the five-point velocity stencil needs
    /// room); vmax must be positive and finite.
    pub fn new(nv: usize, vmax: f64) -> Result<Self> {
        if nv % 2 != 0 {
            return Err(Error::grid("grid.nv must be even"));
        }
        if nv < 8 {
            return Err(Error::grid(format!("grid.nv must be >= 8, got {nv}")));
        }
        if !(vmax.is_finite() && vmax > 0.0) {
            return Err(Error::grid(format!("grid.vmax must be positive, got {vmax}")));
        }
        Ok(VelocityGrid { nv, vmax })
    }

    pub fn nv(&self) -> usize {
        self.nv
    }

    pub fn vmax(&self) -> f64 {
        self.vmax
    }

    /// Cell width 2 vmax / nv.
    pub fn dv(&self) -> f64 {
        2.0 * self.vmax / self.nv as f64
    }

    /// Quadrature weight of one velocity cell.
    pub fn cell_area(&self) -> f64 {
        self.dv() * self.dv()
    }

    /// Number of velocity samples nv^2.
    pub fn len(&self) -> usize {
        self.nv * self.nv
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of cell center j: -vmax + (j + 1/2) dv. The grid is
    /// symmetric: coord(j) = -coord(nv - 1 - j).
    pub fn coord(&self, j: usize) -> f64 {
        -self.vmax + (j as f64 + 0.5) * self.dv()
    }
}
