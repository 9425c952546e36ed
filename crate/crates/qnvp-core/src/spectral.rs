//! Fourier pseudo-spectral operators on the position torus.
//!
//! All derivatives are exact on trigonometric interpolants. First derivatives
//! zero the Nyquist mode so that differentiating a real field returns a real
//! field and d/dx agrees with the derivative of the unique band-limited
//! interpolant. The Laplacian and its zero-mean inverse keep the full -|k|^2
//! symbol including Nyquist, so laplacian(inv_laplacian(f)) reproduces
//! f - mean(f) to machine precision.
//!
//! Discrete integration by parts holds exactly for these operators: the
//! quadrature inner product satisfies (d_x f, g) = -(f, d_x g) for any grid
//! fields f, g, with no smoothness assumption. Conservation checks elsewhere
//! in the crate lean on this identity.

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::TorusGrid;
use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Cached FFT plans and symbol tables for one grid size.
pub struct SpectralOps {
    grid: TorusGrid,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// i * k with the Nyquist entry zeroed, indexed by FFT bin.
    ik_first: Vec<Complex64>,
    /// Full integer wavenumber per bin (Nyquist kept), for |k|^2 symbols.
    k_full: Vec<f64>,
}

impl SpectralOps {
    pub fn new(grid: TorusGrid) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(grid.nq());
        let inv = planner.plan_fft_inverse(grid.nq());
        let ik_first = (0..grid.nq())
            .map(|j| {
                if j == grid.nyquist() {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, grid.wavenumber(j) as f64)
                }
            })
            .collect();
        let k_full = (0..grid.nq()).map(|j| grid.wavenumber(j) as f64).collect();
        SpectralOps {
            grid,
            fwd,
            inv,
            ik_first,
            k_full,
        }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    fn check(&self, f: &ScalarField) {
        assert_eq!(f.grid(), self.grid, "field grid does not match spectral plan");
    }

    /// Unnormalized forward 2D FFT. Output bin [jy, jx] carries wavenumber
    /// (k(jx), k(jy)).
    pub fn forward(&self, f: &ScalarField) -> Array2<Complex64> {
        self.check(f);
        let n = self.grid.nq();
        let mut buf: Vec<Complex64> = f
            .data()
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        // rows (x direction; contiguous), then columns via transpose
        self.fwd.process(&mut buf);
        transpose_square(&mut buf, n);
        self.fwd.process(&mut buf);
        transpose_square(&mut buf, n);
        Array2::from_shape_vec((n, n), buf).expect("length checked above")
    }

    /// Inverse 2D FFT with 1/nq^2 normalization; returns the real part.
    pub fn inverse(&self, mut spec: Array2<Complex64>) -> ScalarField {
        let n = self.grid.nq();
        assert_eq!(spec.dim(), (n, n));
        let scale = 1.0 / (n * n) as f64;
        {
            let buf = spec.as_slice_mut().expect("spectral array is contiguous");
            self.inv.process(buf);
            transpose_square(buf, n);
            self.inv.process(buf);
            transpose_square(buf, n);
        }
        let data = spec.mapv(|c| c.re * scale);
        ScalarField::from_array(self.grid, data).expect("shape preserved")
    }

    /// Batched forward FFTs over consecutive rows of length nq. Used by the
    /// phase-space module, which manages its own layout and transposes.
    pub fn forward_rows(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len() % self.grid.nq(), 0);
        self.fwd.process(buf);
    }

    /// Batched inverse FFTs over rows of length nq, without normalization;
    /// the caller divides by nq per transform direction.
    pub fn inverse_rows_unnormalized(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len() % self.grid.nq(), 0);
        self.inv.process(buf);
    }

    /// First-derivative symbol for bin j (Nyquist zeroed).
    pub fn ik(&self, j: usize) -> Complex64 {
        self.ik_first[j]
    }

    /// Apply a diagonal Fourier multiplier sym(kx_bin, ky_bin).
    fn apply_symbol(&self, f: &ScalarField, sym: impl Fn(usize, usize) -> Complex64) -> ScalarField {
        let mut spec = self.forward(f);
        for ((jy, jx), c) in spec.indexed_iter_mut() {
            *c *= sym(jx, jy);
        }
        self.inverse(spec)
    }

    pub fn partial_x(&self, f: &ScalarField) -> ScalarField {
        self.apply_symbol(f, |jx, _| self.ik_first[jx])
    }

    pub fn partial_y(&self, f: &ScalarField) -> ScalarField {
        self.apply_symbol(f, |_, jy| self.ik_first[jy])
    }

    /// Gradient (d_x f, d_y f) with one forward transform.
    pub fn gradient(&self, f: &ScalarField) -> VectorField {
        let spec = self.forward(f);
        let mut sx = spec.clone();
        for ((_, jx), c) in sx.indexed_iter_mut() {
            *c *= self.ik_first[jx];
        }
        let mut sy = spec;
        for ((jy, _), c) in sy.indexed_iter_mut() {
            *c *= self.ik_first[jy];
        }
        VectorField {
            x: self.inverse(sx),
            y: self.inverse(sy),
        }
    }

    /// Divergence d_x v_x + d_y v_y.
    pub fn divergence(&self, v: &VectorField) -> ScalarField {
        let mut sx = self.forward(&v.x);
        let sy = self.forward(&v.y);
        for ((jy, jx), c) in sx.indexed_iter_mut() {
            *c = *c * self.ik_first[jx] + sy[(jy, jx)] * self.ik_first[jy];
        }
        self.inverse(sx)
    }

    /// Scalar curl d_x v_y - d_y v_x.
    pub fn curl(&self, v: &VectorField) -> ScalarField {
        let mut sy = self.forward(&v.y);
        let sx = self.forward(&v.x);
        for ((jy, jx), c) in sy.indexed_iter_mut() {
            *c = *c * self.ik_first[jx] - sx[(jy, jx)] * self.ik_first[jy];
        }
        self.inverse(sy)
    }

    /// Laplacian with the full -|k|^2 symbol (Nyquist included).
    pub fn laplacian(&self, f: &ScalarField) -> ScalarField {
        self.apply_symbol(f, |jx, jy| {
            let k2 = self.k_full[jx] * self.k_full[jx] + self.k_full[jy] * self.k_full[jy];
            Complex64::new(-k2, 0.0)
        })
    }

    /// Zero-mean inverse Laplacian: returns the unique u with laplacian(u) =
    /// f - mean(f) and mean(u) = 0.
    pub fn inv_laplacian_zero_mean(&self, f: &ScalarField) -> ScalarField {
        self.apply_symbol(f, |jx, jy| {
            let k2 = self.k_full[jx] * self.k_full[jx] + self.k_full[jy] * self.k_full[jy];
            if k2 == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(-1.0 / k2, 0.0)
            }
        })
    }

    /// Hodge splitting p = grad(phi) + pi with div(pi) = 0 and mean-zero phi.
    /// Returns (phi, pi).
    ///
    /// phi solves div(grad(phi)) = div(p) with the same Nyquist-zeroed
    /// derivative symbol used by [`gradient`](Self::gradient) and
    /// [`divergence`](Self::divergence), so the splitting is exact mode by
    /// mode: div(pi) vanishes identically and the two parts are orthogonal.
    pub fn hodge_decompose(&self, p: &VectorField) -> (ScalarField, VectorField) {
        let div = self.divergence(p);
        let mut spec = self.forward(&div);
        for ((jy, jx), c) in spec.indexed_iter_mut() {
            let k2 = -(self.ik_first[jx] * self.ik_first[jx]
                + self.ik_first[jy] * self.ik_first[jy])
                .re;
            if k2 == 0.0 {
                *c = Complex64::new(0.0, 0.0);
            } else {
                *c /= -k2;
            }
        }
        let phi = self.inverse(spec);
        let grad_phi = self.gradient(&phi);
        let pi = p.sub(&grad_phi);
        (phi, pi)
    }

    /// Solve delta^2 * lambda * laplacian(phi) = n - mean(n) for the
    /// mean-zero potential phi. Fails when delta = 0; that regime must use
    /// the quasineutral model instead of a Poisson solve.
    pub fn solve_electrostatic_potential(
        &self,
        n: &ScalarField,
        delta: f64,
        lambda: f64,
    ) -> Result<ScalarField> {
        if delta == 0.0 {
            return Err(Error::QuasineutralSingularity);
        }
        if !(delta.is_finite() && lambda.is_finite() && lambda > 0.0) {
            return Err(Error::usage(format!(
                "electrostatic solve needs finite delta and lambda > 0, got delta = {delta}, lambda = {lambda}"
            )));
        }
        if !n.is_finite() {
            return Err(Error::NonFiniteInput {
                context: "electrostatic solve",
            });
        }
        let mut phi = self.inv_laplacian_zero_mean(n);
        phi.scale(1.0 / (delta * delta * lambda));
        Ok(phi)
    }

    /// Square 2/3-rule dealias filter: zero every mode with |kx| or |ky|
    /// above the cutoff. The mean is always preserved.
    pub fn dealias(&self, f: &ScalarField) -> ScalarField {
        let kc = self.grid.dealias_cutoff() as f64;
        self.apply_symbol(f, |jx, jy| {
            if self.k_full[jx].abs() <= kc && self.k_full[jy].abs() <= kc {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// True when every mode outside the dealias cutoff is below `tol` in
    /// normalized amplitude. Test helper for band-limit contracts.
    pub fn is_band_limited(&self, f: &ScalarField, tol: f64) -> bool {
        f.linf_distance(&self.dealias(f)) <= tol
    }

    /// Amplitude 2|f_hat(kx, ky)| / nq^2 of one Fourier mode, the quantity a
    /// cos/sin pair at that wavevector contributes with unit coefficient.
    pub fn mode_amplitude(&self, f: &ScalarField, kx: i64, ky: i64) -> f64 {
        let spec = self.forward(f);
        let n = self.grid.nq() as i64;
        let jx = kx.rem_euclid(n) as usize;
        let jy = ky.rem_euclid(n) as usize;
        2.0 * spec[(jy, jx)].norm() / (n * n) as f64
    }

    /// Signed cosine coefficient: 2 Re f_hat(kx, ky) / nq^2. For a field
    /// a*cos(kx x + ky y) + (other modes) this returns a.
    pub fn cosine_coefficient(&self, f: &ScalarField, kx: i64, ky: i64) -> f64 {
        let spec = self.forward(f);
        let n = self.grid.nq() as i64;
        let jx = kx.rem_euclid(n) as usize;
        let jy = ky.rem_euclid(n) as usize;
        2.0 * spec[(jy, jx)].re / (n * n) as f64
    }
}

/// In-place transpose of an n x n row-major buffer.
pub(crate) fn transpose_square(buf: &mut [Complex64], n: usize) {
    debug_assert_eq!(buf.len(), n * n);
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: TorusGrid, seed: u64) -> ScalarField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ScalarField::from_fn(grid, |_, _| rng.random::<f64>() - 0.5)
    }

    /// Independent check of the spectral derivative: a five-point centered
    /// finite-difference stencil, fourth order, on the periodic grid.
    fn fd_partial_x(f: &ScalarField) -> ScalarField {
        let n = f.grid().nq();
        let h = f.grid().dq();
        let d = f.data();
        let out = Array2::from_shape_fn((n, n), |(iy, ix)| {
            let at = |o: i64| d[(iy, (ix as i64 + o).rem_euclid(n as i64) as usize)];
            (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * h)
        });
        ScalarField::from_array(f.grid(), out).unwrap()
    }

    fn smooth_test_field(grid: TorusGrid) -> ScalarField {
        ScalarField::from_fn(grid, |x, y| (x.sin() + (2.0 * y).cos()).exp())
    }

    #[test]
    fn derivative_matches_fd_oracle_at_fourth_order() {
        // The spectral derivative is exponentially accurate, so the gap to
        // the FD oracle is the oracle's own O(h^4) truncation error and must
        // shrink ~16x per grid doubling.
        let mut gaps = Vec::new();
        for nq in [32, 64] {
            let g = TorusGrid::new(nq).unwrap();
            let f = smooth_test_field(g);
            let ops = SpectralOps::new(g);
            gaps.push(ops.partial_x(&f).linf_distance(&fd_partial_x(&f)));
        }
        let ratio = gaps[0] / gaps[1];
        assert!(
            (11.0..22.0).contains(&ratio),
            "expected ~16x convergence, got {ratio:.2} (gaps {gaps:?})"
        );
        assert!(gaps[1] < 5e-3, "oracle gap too large: {:.3e}", gaps[1]);
    }

    #[test]
    fn single_modes_differentiate_exactly() {
        let g = TorusGrid::new(32).unwrap();
        let ops = SpectralOps::new(g);
        let f = ScalarField::from_fn(g, |x, _| (3.0 * x).cos());
        let expect = ScalarField::from_fn(g, |x, _| -3.0 * (3.0 * x).sin());
        assert!(ops.partial_x(&f).linf_distance(&expect) < 1e-12);

        let h = ScalarField::from_fn(g, |x, y| (3.0 * x).cos() * (2.0 * y).cos());
        let lap = ops.laplacian(&h);
        assert!(lap.linf_distance(&h.scaled(-13.0)) < 1e-11);
    }

    #[test]
    fn nyquist_mode_has_zero_first_derivative_and_full_laplacian() {
        let g = TorusGrid::new(32).unwrap();
        let ops = SpectralOps::new(g);
        // cos(16 x) sampled at x = 2 pi i / 32 alternates +-1
        let f = ScalarField::from_fn(g, |x, _| (16.0 * x).cos());
        assert!(ops.partial_x(&f).max_abs() < 1e-12);
        assert!(ops.laplacian(&f).linf_distance(&f.scaled(-256.0)) < 1e-9);
    }

    #[test]
    fn roundtrip_and_inverse_laplacian() {
        let g = TorusGrid::new(32).unwrap();
        let ops = SpectralOps::new(g);
        let f = random_field(g, 7);
        let back = ops.inverse(ops.forward(&f));
        assert!(back.linf_distance(&f) < 1e-13);

        let u = ops.inv_laplacian_zero_mean(&f);
        assert!(u.mean().abs() < 1e-13);
        let mut target = f.clone();
        target.add_scalar(-f.mean());
        assert!(ops.laplacian(&u).linf_distance(&target) < 1e-11);
    }

    #[test]
    fn integration_by_parts_is_exact_for_arbitrary_grid_fields() {
        let g = TorusGrid::new(32).unwrap();
        let ops = SpectralOps::new(g);
        let f = random_field(g, 1);
        let h = random_field(g, 2);
        let lhs = ops.partial_x(&f).inner(&h);
        let rhs = -f.inner(&ops.partial_x(&h));
        assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
        let lhs = ops.partial_y(&f).inner(&h);
        let rhs = -f.inner(&ops.partial_y(&h));
        assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn hodge_projection_splits_and_is_idempotent() {
        let g = TorusGrid::new(32).unwrap();
        let ops = SpectralOps::new(g);
        let p = VectorField {
            x: random_field(g, 11),
            y: random_field(g, 12),
        };
        let (phi, pi) = ops.hodge_decompose(&p);
        assert!(ops.divergence(&pi).max_abs() < 1e-12);
        // exact reconstruction, orthogonality, idempotence
        let recon = ops.gradient(&phi).add(&pi);
        assert!(recon.l2_distance(&p) < 1e-12);
        assert!(ops.gradient(&phi).inner(&pi).abs() < 1e-10);
        let (phi2, pi2) = ops.hodge_decompose(&pi);
        assert!(phi2.max_abs() < 1e-12);
        assert!(pi2.l2_distance(&pi) < 1e-12);
    }

    #[test]
    fn electrostatic_solve_matches_frozen_eigenmode_value() {
        // n = n0 + a cos(x), delta = 0.1, lambda = 1:
        // delta^2 laplacian(phi) = a cos(x)  =>  phi = -(a / delta^2) cos(x),
        // so with a = 0.01 the potential at the origin is exactly -1.
        let g = TorusGrid::new(32).unwrap();
        let ops = SpectralOps::new(g);
        let a = 0.01;
        let n = ScalarField::from_fn(g, |x, _| 1.0 + a * x.cos());
        let phi = ops.solve_electrostatic_potential(&n, 0.1, 1.0).unwrap();
        let expect = ScalarField::from_fn(g, |x, _| -1.0 * x.cos());
        assert!(phi.linf_distance(&expect) < 1e-11);
        assert!((phi.data()[(0, 0)] + 1.0).abs() < 1e-11);
    }

    #[test]
    fn electrostatic_solve_rejects_delta_zero() {
        let g = TorusGrid::new(16).unwrap();
        let ops = SpectralOps::new(g);
        let n = ScalarField::constant(g, 1.0);
        let err = ops.solve_electrostatic_potential(&n, 0.0, 1.0).unwrap_err();
        assert!(err.to_string().contains("quasineutral singularity"));
    }

    #[test]
    fn dealias_keeps_cutoff_and_kills_above() {
        let g = TorusGrid::new(32).unwrap();
        let ops = SpectralOps::new(g);
        assert_eq!(g.dealias_cutoff(), 10);
        let keep = ScalarField::from_fn(g, |x, _| (10.0 * x).cos());
        let kill = ScalarField::from_fn(g, |x, y| (11.0 * x).sin() + (12.0 * y).cos());
        let mixed = keep.add(&kill);
        let filtered = ops.dealias(&mixed);
        assert!(filtered.linf_distance(&keep) < 1e-12);
        // idempotent, mean preserved
        assert!(ops.dealias(&filtered).linf_distance(&filtered) < 1e-13);
        let shifted = mixed.map(|v| v + 3.25);
        assert!((ops.dealias(&shifted).mean() - 3.25).abs() < 1e-13);
    }

    #[test]
    fn mode_amplitude_reads_cosine_coefficient() {
        let g = TorusGrid::new(32).unwrap();
        let ops = SpectralOps::new(g);
        let f = ScalarField::from_fn(g, |x, y| 0.75 * (10.0 * x).cos() + 0.1 * y.sin());
        assert!((ops.mode_amplitude(&f, 10, 0) - 0.75).abs() < 1e-12);
        assert!((ops.cosine_coefficient(&f, 10, 0) - 0.75).abs() < 1e-12);
        assert!((ops.mode_amplitude(&f, 0, 1) - 0.1).abs() < 1e-12);
        assert!(ops.cosine_coefficient(&f, 0, 1).abs() < 1e-12);
    }
}
