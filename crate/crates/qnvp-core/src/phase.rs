//! Phase-space distributions and their calculus.
//!
//! A [`PhaseField`] stores f(x, y, vx, vy) as a dense rank-4 array indexed
//! `[iy, ix, jy, jx]`, so the velocity plane at each position is contiguous.
//! Position derivatives are pseudo-spectral (batched over velocity planes via
//! a blocked transpose to velocity-major layout).
//!
//! Velocity derivatives come in an adjoint pair held by [`VelocityOps`]:
//!
//! - the observable derivative `d_obs` is a five-point fourth-order stencil
//!   with one-sided closures at the box edge, exact on polynomials through
//!   degree four at every row (so e.g. d|v|^2/2 = v holds identically);
//! - the density derivative `d_density = -d_obs^T` differentiates
//!   distributions, which are zero outside the box.
//!
//! The pair satisfies exact summation by parts, sum((d_obs h) g) =
//! -sum(h (d_density g)) for arbitrary grid data, and d_density annihilates
//! velocity integrals exactly. Together with spectral integration by parts in
//! position this is what pushes the conservation and bracket-identity checks
//! in the model modules down to rounding error.

use crate::error::{Error, Result};
use crate::field::{ScalarField, TensorField, VectorField};
use crate::grid::{TorusGrid, VelocityGrid};
use crate::par;
use crate::spectral::{transpose_square, SpectralOps};
use ndarray::{Array2, Array4};
use num_complex::Complex64;

/// The product grid: periodic positions times the truncated velocity box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseGrid {
    pub q: TorusGrid,
    pub v: VelocityGrid,
}

impl PhaseGrid {
    pub fn new(q: TorusGrid, v: VelocityGrid) -> Self {
        PhaseGrid { q, v }
    }

    /// Phase-space quadrature weight dq^2 dv^2.
    pub fn cell_volume(&self) -> f64 {
        self.q.cell_area() * self.v.cell_area()
    }
}

/// Distribution function on the phase-space grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseField {
    grid: PhaseGrid,
    data: Array4<f64>,
}

impl PhaseField {
    pub fn zeros(grid: PhaseGrid) -> Self {
        let nq = grid.q.nq();
        let nv = grid.v.nv();
        PhaseField {
            grid,
            data: Array4::zeros((nq, nq, nv, nv)),
        }
    }

    /// Sample `f(x, y, vx, vy)` on the grid.
    pub fn from_fn(grid: PhaseGrid, f: impl Fn(f64, f64, f64, f64) -> f64 + Sync) -> Self {
        let mut out = PhaseField::zeros(grid);
        let nq = grid.q.nq();
        let nv = grid.v.nv();
        let vplane = nv * nv;
        let slice = out.data.as_slice_mut().expect("freshly allocated");
        par::chunks_mut_indexed(slice, vplane, |iq, plane| {
            let iy = iq / nq;
            let ix = iq % nq;
            let x = grid.q.coord(ix);
            let y = grid.q.coord(iy);
            for jy in 0..nv {
                for jx in 0..nv {
                    plane[jy * nv + jx] = f(x, y, grid.v.coord(jx), grid.v.coord(jy));
                }
            }
        });
        out
    }

    /// Separable product b(q) * w(v) from a position field and a velocity
    /// plane (`w` indexed `[jy, jx]`).
    pub fn from_q_v_product(qfield: &ScalarField, vgrid: VelocityGrid, w: &Array2<f64>) -> Result<Self> {
        let nv = vgrid.nv();
        if w.dim() != (nv, nv) {
            return Err(Error::grid("velocity plane shape mismatch"));
        }
        let grid = PhaseGrid::new(qfield.grid(), vgrid);
        let mut out = PhaseField::zeros(grid);
        let vplane = nv * nv;
        let q = qfield.data().as_slice().expect("contiguous").to_vec();
        let wflat = w.as_slice().expect("contiguous").to_vec();
        let slice = out.data.as_slice_mut().expect("freshly allocated");
        par::chunks_mut_indexed(slice, vplane, |iq, plane| {
            let b = q[iq];
            for (o, wv) in plane.iter_mut().zip(wflat.iter()) {
                *o = b * wv;
            }
        });
        Ok(out)
    }

    pub fn grid(&self) -> PhaseGrid {
        self.grid
    }

    pub fn data(&self) -> &Array4<f64> {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut Array4<f64> {
        &mut self.data
    }

    pub fn from_array(grid: PhaseGrid, data: Array4<f64>) -> Result<Self> {
        let nq = grid.q.nq();
        let nv = grid.v.nv();
        if data.dim() != (nq, nq, nv, nv) {
            return Err(Error::grid(format!(
                "phase field shape {:?} does not match (nq, nq, nv, nv) = ({nq}, {nq}, {nv}, {nv})",
                data.dim()
            )));
        }
        Ok(PhaseField { grid, data })
    }

    fn flat(&self) -> &[f64] {
        self.data.as_slice().expect("phase data is contiguous")
    }

    fn flat_mut(&mut self) -> &mut [f64] {
        self.data.as_slice_mut().expect("phase data is contiguous")
    }

    pub fn is_finite(&self) -> bool {
        self.flat().iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.flat().iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.flat().iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    /// Largest |f| on the outermost ring of velocity cells, per the whole
    /// domain. States are expected to keep this below the tail tolerance.
    pub fn tail_max(&self) -> f64 {
        let nv = self.grid.v.nv();
        let mut m = 0.0f64;
        for plane in self.flat().chunks(nv * nv) {
            for j in 0..nv {
                m = m.max(plane[j].abs()); // jy = 0
                m = m.max(plane[(nv - 1) * nv + j].abs()); // jy = nv-1
                m = m.max(plane[j * nv].abs()); // jx = 0
                m = m.max(plane[j * nv + nv - 1].abs()); // jx = nv-1
            }
        }
        m
    }

    /// Integral over all of phase space.
    pub fn integral(&self) -> f64 {
        self.flat().iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// Quadrature-weighted L2 norm over phase space.
    pub fn l2_norm(&self) -> f64 {
        (self.flat().iter().map(|v| v * v).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    /// Quadrature-weighted inner product over phase space.
    pub fn inner(&self, other: &PhaseField) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        let dot: f64 = self
            .flat()
            .iter()
            .zip(other.flat().iter())
            .map(|(a, b)| a * b)
            .sum();
        dot * self.grid.cell_volume()
    }

    pub fn l2_distance(&self, other: &PhaseField) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        let acc: f64 = self
            .flat()
            .iter()
            .zip(other.flat().iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        (acc * self.grid.cell_volume()).sqrt()
    }

    pub fn linf_distance(&self, other: &PhaseField) -> f64 {
        self.flat()
            .iter()
            .zip(other.flat().iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn scale(&mut self, alpha: f64) {
        for v in self.flat_mut() {
            *v *= alpha;
        }
    }

    pub fn scaled(&self, alpha: f64) -> PhaseField {
        let mut out = self.clone();
        out.scale(alpha);
        out
    }

    pub fn axpy(&mut self, alpha: f64, other: &PhaseField) {
        debug_assert_eq!(self.grid, other.grid);
        let src = other.flat();
        par::zip_chunks(src, self.flat_mut(), 4096, |_, s, o| {
            for (a, b) in o.iter_mut().zip(s.iter()) {
                *a += alpha * b;
            }
        });
    }

    pub fn add(&self, other: &PhaseField) -> PhaseField {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &PhaseField) -> PhaseField {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Pointwise product with another phase field.
    pub fn mul(&self, other: &PhaseField) -> PhaseField {
        debug_assert_eq!(self.grid, other.grid);
        let mut out = self.clone();
        let src = other.flat();
        par::zip_chunks(src, out.flat_mut(), 4096, |_, s, o| {
            for (a, b) in o.iter_mut().zip(s.iter()) {
                *a *= b;
            }
        });
        out
    }

    /// Multiply every velocity plane by the position field value at its
    /// base point: out(q, v) = s(q) f(q, v).
    pub fn mul_q(&self, s: &ScalarField) -> PhaseField {
        debug_assert_eq!(self.grid.q, s.grid());
        let nv = self.grid.v.nv();
        let vplane = nv * nv;
        let sflat = s.data().as_slice().expect("contiguous").to_vec();
        let mut out = self.clone();
        par::chunks_mut_indexed(out.flat_mut(), vplane, |iq, plane| {
            let b = sflat[iq];
            for a in plane.iter_mut() {
                *a *= b;
            }
        });
        out
    }

    /// Multiply by a function of velocity only: out(q, v) = w(v) f(q, v),
    /// with the weight plane indexed `[jy, jx]`.
    pub fn mul_v(&self, w: &Array2<f64>) -> PhaseField {
        let nv = self.grid.v.nv();
        assert_eq!(w.dim(), (nv, nv));
        let wflat = w.as_slice().expect("contiguous").to_vec();
        let mut out = self.clone();
        par::chunks_mut_indexed(out.flat_mut(), nv * nv, |_, plane| {
            for (a, b) in plane.iter_mut().zip(wflat.iter()) {
                *a *= b;
            }
        });
        out
    }

    // ----- velocity moments -----

    /// Moment with an arbitrary velocity weight: out(q) = sum_v w(v) f(q, v) dv^2.
    pub fn moment_with(&self, w: &Array2<f64>) -> ScalarField {
        let nv = self.grid.v.nv();
        assert_eq!(w.dim(), (nv, nv));
        let wflat = w.as_slice().expect("contiguous").to_vec();
        let dv2 = self.grid.v.cell_area();
        let nq = self.grid.q.nq();
        let mut out = vec![0.0f64; nq * nq];
        par::map_chunks(self.flat(), nv * nv, &mut out, |_, plane| {
            let mut acc = 0.0;
            for (a, b) in plane.iter().zip(wflat.iter()) {
                acc += a * b;
            }
            acc * dv2
        });
        ScalarField::from_array(
            self.grid.q,
            Array2::from_shape_vec((nq, nq), out).expect("length checked"),
        )
        .expect("shape by construction")
    }

    /// Zeroth moment: density n(q) = integral of f over velocity.
    pub fn moment0(&self) -> ScalarField {
        let nv = self.grid.v.nv();
        let ones = Array2::from_elem((nv, nv), 1.0);
        self.moment_with(&ones)
    }

    /// First moment: momentum density (integral of v f).
    pub fn moment1(&self) -> VectorField {
        let vg = self.grid.v;
        let nv = vg.nv();
        let wx = Array2::from_shape_fn((nv, nv), |(_, jx)| vg.coord(jx));
        let wy = Array2::from_shape_fn((nv, nv), |(jy, _)| vg.coord(jy));
        VectorField {
            x: self.moment_with(&wx),
            y: self.moment_with(&wy),
        }
    }

    /// Second moment tensor: integral of (v tensor v) f.
    pub fn moment2(&self) -> TensorField {
        let vg = self.grid.v;
        let nv = vg.nv();
        let wxx = Array2::from_shape_fn((nv, nv), |(_, jx)| vg.coord(jx) * vg.coord(jx));
        let wxy = Array2::from_shape_fn((nv, nv), |(jy, jx)| vg.coord(jx) * vg.coord(jy));
        let wyy = Array2::from_shape_fn((nv, nv), |(jy, _)| vg.coord(jy) * vg.coord(jy));
        TensorField {
            xx: self.moment_with(&wxx),
            xy: self.moment_with(&wxy),
            yy: self.moment_with(&wyy),
        }
    }

    /// Kinetic-energy moment: integral of |v|^2/2 f over velocity.
    pub fn kinetic_moment(&self) -> ScalarField {
        let vg = self.grid.v;
        let nv = vg.nv();
        let w = Array2::from_shape_fn((nv, nv), |(jy, jx)| {
            0.5 * (vg.coord(jx) * vg.coord(jx) + vg.coord(jy) * vg.coord(jy))
        });
        self.moment_with(&w)
    }

    // ----- velocity derivatives -----

    /// Apply a banded velocity-derivative matrix along the vx axis.
    fn apply_v_matrix_x(&self, d: &Array2<f64>) -> PhaseField {
        let nv = self.grid.v.nv();
        let mut out = PhaseField::zeros(self.grid);
        par::zip_chunks(self.flat(), out.flat_mut(), nv * nv, |_, plane, o| {
            for jy in 0..nv {
                let row = &plane[jy * nv..(jy + 1) * nv];
                let orow = &mut o[jy * nv..(jy + 1) * nv];
                for jx in 0..nv {
                    let lo = jx.saturating_sub(STENCIL_BAND);
                    let hi = (jx + STENCIL_BAND + 1).min(nv);
                    let mut acc = 0.0;
                    for k in lo..hi {
                        acc += d[(jx, k)] * row[k];
                    }
                    orow[jx] = acc;
                }
            }
        });
        out
    }

    /// Apply a banded velocity-derivative matrix along the vy axis.
    fn apply_v_matrix_y(&self, d: &Array2<f64>) -> PhaseField {
        let nv = self.grid.v.nv();
        let mut out = PhaseField::zeros(self.grid);
        par::zip_chunks(self.flat(), out.flat_mut(), nv * nv, |_, plane, o| {
            for jy in 0..nv {
                let lo = jy.saturating_sub(STENCIL_BAND);
                let hi = (jy + STENCIL_BAND + 1).min(nv);
                for jx in 0..nv {
                    let mut acc = 0.0;
                    for k in lo..hi {
                        acc += d[(jy, k)] * plane[k * nv + jx];
                    }
                    o[jy * nv + jx] = acc;
                }
            }
        });
        out
    }

    /// d/dvx of an observable (smooth phase-space function).
    pub fn dv_x_obs(&self, ops: &VelocityOps) -> PhaseField {
        self.apply_v_matrix_x(ops.d_obs())
    }

    /// d/dvy of an observable (smooth phase-space function).
    pub fn dv_y_obs(&self, ops: &VelocityOps) -> PhaseField {
        self.apply_v_matrix_y(ops.d_obs())
    }

    /// Velocity gradient of an observable.
    pub fn velocity_gradient_obs(&self, ops: &VelocityOps) -> (PhaseField, PhaseField) {
        (self.dv_x_obs(ops), self.dv_y_obs(ops))
    }

    /// d/dvx of a density (distribution, zero outside the box).
    pub fn dv_x_density(&self, ops: &VelocityOps) -> PhaseField {
        self.apply_v_matrix_x(ops.d_density())
    }

    /// d/dvy of a density (distribution, zero outside the box).
    pub fn dv_y_density(&self, ops: &VelocityOps) -> PhaseField {
        self.apply_v_matrix_y(ops.d_density())
    }

    /// Velocity divergence of a density flux (gx, gy). Its velocity integral
    /// vanishes identically, so conservative transport terms built from this
    /// conserve mass to rounding error.
    pub fn velocity_divergence_density(
        gx: &PhaseField,
        gy: &PhaseField,
        ops: &VelocityOps,
    ) -> PhaseField {
        let mut out = gx.apply_v_matrix_x(ops.d_density());
        out.axpy(1.0, &gy.apply_v_matrix_y(ops.d_density()));
        out
    }

    // ----- position-space spectral operations, batched over velocity -----

    /// Gather into velocity-major complex planes and run the forward 2D FFT
    /// on each position plane.
    fn to_spectral_planes(&self, ops: &SpectralOps) -> Vec<Complex64> {
        let nq = self.grid.q.nq();
        let nv = self.grid.v.nv();
        let qtot = nq * nq;
        let vtot = nv * nv;
        let src = self.flat();
        let mut buf = vec![Complex64::new(0.0, 0.0); qtot * vtot];
        // blocked transpose (q-major real) -> (v-major complex)
        const B: usize = 64;
        for q0 in (0..qtot).step_by(B) {
            let q1 = (q0 + B).min(qtot);
            for v0 in (0..vtot).step_by(B) {
                let v1 = (v0 + B).min(vtot);
                for q in q0..q1 {
                    let base = q * vtot;
                    for v in v0..v1 {
                        buf[v * qtot + q] = Complex64::new(src[base + v], 0.0);
                    }
                }
            }
        }
        par::chunks_mut_indexed(&mut buf, qtot, |_, plane| {
            ops.forward_rows(plane);
            transpose_square(plane, nq);
            ops.forward_rows(plane);
            transpose_square(plane, nq);
        });
        buf
    }

    /// Inverse of [`to_spectral_planes`]: inverse FFT each plane, normalize,
    /// and scatter back to q-major storage.
    fn from_spectral_planes(grid: PhaseGrid, ops: &SpectralOps, mut buf: Vec<Complex64>) -> PhaseField {
        let nq = grid.q.nq();
        let nv = grid.v.nv();
        let qtot = nq * nq;
        let vtot = nv * nv;
        par::chunks_mut_indexed(&mut buf, qtot, |_, plane| {
            ops.inverse_rows_unnormalized(plane);
            transpose_square(plane, nq);
            ops.inverse_rows_unnormalized(plane);
            transpose_square(plane, nq);
        });
        let scale = 1.0 / qtot as f64;
        let mut out = PhaseField::zeros(grid);
        let dst = out.flat_mut();
        const B: usize = 64;
        for v0 in (0..vtot).step_by(B) {
            let v1 = (v0 + B).min(vtot);
            for q0 in (0..qtot).step_by(B) {
                let q1 = (q0 + B).min(qtot);
                for v in v0..v1 {
                    let base = v * qtot;
                    for q in q0..q1 {
                        dst[q * vtot + v] = buf[base + q].re * scale;
                    }
                }
            }
        }
        out
    }

    /// Position gradient (d/dx f, d/dy f), spectral in q, batched over the
    /// velocity grid.
    pub fn q_gradient(&self, ops: &SpectralOps) -> (PhaseField, PhaseField) {
        assert_eq!(ops.grid(), self.grid.q);
        let nq = self.grid.q.nq();
        let qtot = nq * nq;
        let spec = self.to_spectral_planes(ops);
        let ikx: Vec<Complex64> = (0..nq).map(|j| ops.ik(j)).collect();
        let mut bx = spec.clone();
        par::chunks_mut_indexed(&mut bx, qtot, |_, plane| {
            for jy in 0..nq {
                for jx in 0..nq {
                    plane[jy * nq + jx] *= ikx[jx];
                }
            }
        });
        let gx = PhaseField::from_spectral_planes(self.grid, ops, bx);
        let mut by = spec;
        par::chunks_mut_indexed(&mut by, qtot, |_, plane| {
            for jy in 0..nq {
                for jx in 0..nq {
                    plane[jy * nq + jx] *= ikx[jy];
                }
            }
        });
        let gy = PhaseField::from_spectral_planes(self.grid, ops, by);
        (gx, gy)
    }

    /// Position divergence d/dx gx + d/dy gy of a phase-space flux pair,
    /// spectral in q. One inverse transform instead of the four a pair of
    /// [`q_gradient`](Self::q_gradient) calls would cost.
    pub fn q_divergence(gx: &PhaseField, gy: &PhaseField, ops: &SpectralOps) -> PhaseField {
        assert_eq!(gx.grid, gy.grid, "flux components on different grids");
        assert_eq!(ops.grid(), gx.grid.q);
        let nq = gx.grid.q.nq();
        let qtot = nq * nq;
        let ikx: Vec<Complex64> = (0..nq).map(|j| ops.ik(j)).collect();
        let by = gy.to_spectral_planes(ops);
        let mut bx = gx.to_spectral_planes(ops);
        par::zip_chunks(&by, &mut bx, qtot, |_, py, px| {
            for jy in 0..nq {
                for jx in 0..nq {
                    let idx = jy * nq + jx;
                    px[idx] = px[idx] * ikx[jx] + py[idx] * ikx[jy];
                }
            }
        });
        PhaseField::from_spectral_planes(gx.grid, ops, bx)
    }

    /// Apply the square 2/3-rule dealias filter in position, every velocity
    /// plane independently.
    pub fn dealias_q(&self, ops: &SpectralOps) -> PhaseField {
        assert_eq!(ops.grid(), self.grid.q);
        let nq = self.grid.q.nq();
        let qtot = nq * nq;
        let kc = self.grid.q.dealias_cutoff();
        let keep: Vec<bool> = (0..nq)
            .map(|j| self.grid.q.wavenumber(j).abs() <= kc)
            .collect();
        let mut buf = self.to_spectral_planes(ops);
        par::chunks_mut_indexed(&mut buf, qtot, |_, plane| {
            for jy in 0..nq {
                for jx in 0..nq {
                    if !(keep[jx] && keep[jy]) {
                        plane[jy * nq + jx] = Complex64::new(0.0, 0.0);
                    }
                }
            }
        });
        PhaseField::from_spectral_planes(self.grid, ops, buf)
    }

    // ----- velocity shift by a position-dependent offset -----

    /// Evaluate f(q, v + shift(q)) by cubic Lagrange interpolation on the
    /// velocity grid, treating f as zero outside the box. Fourth-order
    /// accurate for smooth compactly supported distributions.
    pub fn shift_velocity(&self, shift: &VectorField) -> PhaseField {
        debug_assert_eq!(self.grid.q, shift.grid());
        let vg = self.grid.v;
        let nv = vg.nv();
        let vtot = nv * nv;
        let sx = shift.x.data().as_slice().expect("contiguous").to_vec();
        let sy = shift.y.data().as_slice().expect("contiguous").to_vec();
        let mut out = PhaseField::zeros(self.grid);
        par::zip_chunks(self.flat(), out.flat_mut(), vtot, |iq, plane, o| {
            let (ox, oy) = (sx[iq], sy[iq]);
            for jy in 0..nv {
                let ty = vg.coord(jy) + oy;
                let (by, wy) = lagrange_stencil(vg, ty);
                for jx in 0..nv {
                    let tx = vg.coord(jx) + ox;
                    let (bx, wx) = lagrange_stencil(vg, tx);
                    let mut acc = 0.0;
                    for (dy, wyv) in wy.iter().enumerate() {
                        let ky = by + dy as i64;
                        if !(0..nv as i64).contains(&ky) || *wyv == 0.0 {
                            continue;
                        }
                        let row = &plane[ky as usize * nv..(ky as usize + 1) * nv];
                        let mut racc = 0.0;
                        for (dx, wxv) in wx.iter().enumerate() {
                            let kx = bx + dx as i64;
                            if (0..nv as i64).contains(&kx) {
                                racc += wxv * row[kx as usize];
                            }
                        }
                        acc += wyv * racc;
                    }
                    o[jy * nv + jx] = acc;
                }
            }
        });
        out
    }
}

/// Base index and four cubic Lagrange weights for evaluating at coordinate
/// `t` on the cell-centered grid. Nodes are base, base+1, base+2, base+3.
fn lagrange_stencil(vg: VelocityGrid, t: f64) -> (i64, [f64; 4]) {
    let s = (t + vg.vmax()) / vg.dv() - 0.5;
    let j1 = s.floor();
    let th = s - j1;
    let base = j1 as i64 - 1;
    let wm1 = -th * (th - 1.0) * (th - 2.0) / 6.0;
    let w0 = (th + 1.0) * (th - 1.0) * (th - 2.0) / 2.0;
    let w1 = -(th + 1.0) * th * (th - 2.0) / 2.0;
    let w2 = (th + 1.0) * th * (th - 1.0) / 6.0;
    (base, [wm1, w0, w1, w2])
}

/// Bandwidth of the one-dimensional velocity-derivative matrices: every
/// nonzero entry of `d_obs` and `d_density` sits within this many columns of
/// the diagonal.
const STENCIL_BAND: usize = 4;

/// Adjoint pair of one-dimensional velocity-derivative matrices for a grid.
///
/// `d_obs` differentiates observables: centered five-point rows in the
/// interior with fourth-order one-sided closures at the edges, exact on
/// polynomials through degree four at every row. `d_density` is its negative
/// transpose and differentiates densities, which decay inside the box; its
/// rows agree with the centered stencil away from the edge and its column
/// sums vanish, so velocity divergences of density fluxes integrate to zero
/// identically.
pub struct VelocityOps {
    grid: VelocityGrid,
    d_obs: Array2<f64>,
    d_density: Array2<f64>,
}

impl VelocityOps {
    pub fn new(grid: VelocityGrid) -> Self {
        let nv = grid.nv();
        let inv12h = 1.0 / (12.0 * grid.dv());
        let mut d_obs = Array2::<f64>::zeros((nv, nv));
        // one-sided fourth-order closures at the left edge
        for (k, c) in [-25.0, 48.0, -36.0, 16.0, -3.0].into_iter().enumerate() {
            d_obs[(0, k)] = c * inv12h;
        }
        for (k, c) in [-3.0, -10.0, 18.0, -6.0, 1.0].into_iter().enumerate() {
            d_obs[(1, k)] = c * inv12h;
        }
        // centered interior
        for j in 2..nv - 2 {
            for (off, c) in [(-2i64, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0)] {
                d_obs[(j, (j as i64 + off) as usize)] = c * inv12h;
            }
        }
        // mirrored closures at the right edge (reflection negates a derivative)
        for j in [nv - 2, nv - 1] {
            let m = nv - 1 - j;
            for k in 0..5 {
                d_obs[(j, nv - 1 - k)] = -d_obs[(m, k)];
            }
        }
        let d_density = d_obs.t().map(|&x| -x);
        Self {
            grid,
            d_obs,
            d_density,
        }
    }

    pub fn grid(&self) -> VelocityGrid {
        self.grid
    }

    pub fn d_obs(&self) -> &Array2<f64> {
        &self.d_obs
    }

    pub fn d_density(&self) -> &Array2<f64> {
        &self.d_density
    }
}

/// Cached discrete calculus for one phase-space grid: spectral operators in
/// position and the velocity-derivative pair. Build once, share everywhere.
pub struct Discretization {
    grid: PhaseGrid,
    qops: SpectralOps,
    vops: VelocityOps,
}

impl Discretization {
    pub fn new(grid: PhaseGrid) -> Self {
        Self {
            grid,
            qops: SpectralOps::new(grid.q),
            vops: VelocityOps::new(grid.v),
        }
    }

    pub fn grid(&self) -> PhaseGrid {
        self.grid
    }

    pub fn qops(&self) -> &SpectralOps {
        &self.qops
    }

    pub fn vops(&self) -> &VelocityOps {
        &self.vops
    }
}
