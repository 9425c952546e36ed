//! Dynamics of the parent kinetic model in its three coordinate systems:
//! the raw distribution f(q, v), the moment triple (n, P, rho) with rho the
//! centered conditional velocity distribution, and the fast-slow variables
//! (n0, ntilde, Phi, pi, rho) obtained by Hodge-splitting the momentum
//! density and peeling the mean density off at the scale of the smallness
//! parameter.
//!
//! Derivative discipline, repo-wide: spatial derivatives are spectral;
//! velocity derivatives of observables (functional-derivative fields,
//! kinetic-energy legs) use the observation stencil, while velocity
//! divergences of density fluxes use its negative transpose. Together with
//! exact spectral integration by parts this makes the transcribed evolution
//! equations conserve mass and the discrete Hamiltonian to rounding error,
//! not merely to truncation order.

use ndarray::Array2;

use crate::algebra::Covector;
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::VelocityGrid;
use crate::moments::{MomentState, DENSITY_FLOOR};
use crate::params::PhysParams;
use crate::phase::{Discretization, PhaseField, PhaseGrid};
use crate::spectral::SpectralOps;

/// Velocity-coordinate weight planes (vx, vy) for [`PhaseField::mul_v`].
pub(crate) fn coordinate_weights(vg: VelocityGrid) -> (Array2<f64>, Array2<f64>) {
    let nv = vg.nv();
    let wx = Array2::from_shape_fn((nv, nv), |(_, jx)| vg.coord(jx));
    let wy = Array2::from_shape_fn((nv, nv), |(jy, _)| vg.coord(jy));
    (wx, wy)
}

fn require_centered(s: &MomentState, what: &str) -> Result<()> {
    if !s.centered {
        return Err(Error::usage(format!(
            "{what} expects a centered state (apply transform_e first)"
        )));
    }
    Ok(())
}

fn require_density_floor(n: &ScalarField) -> Result<()> {
    let min = n.min();
    if !(min >= DENSITY_FLOOR) {
        return Err(Error::DensityFloor {
            min,
            floor: DENSITY_FLOOR,
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// distribution-function coordinates
// ---------------------------------------------------------------------------

/// Right-hand side of the kinetic equation for the distribution f(q, v), in
/// conservative form:
///
/// df/dt = -eps v . d_q f - d_v . ( [eps lambda grad(phi) + B J v] f ),
///
/// with phi the mean-zero electrostatic potential solved from the density.
/// The velocity term uses the density-side stencil, whose columns sum to
/// zero, so the right-hand side integrates to zero over phase space exactly
/// regardless of how the distribution behaves near the velocity box edge.
pub fn vp_rhs_f(disc: &Discretization, params: &PhysParams, f: &PhaseField) -> Result<PhaseField> {
    if !f.is_finite() {
        return Err(Error::NonFiniteInput { context: "vp_rhs_f" });
    }
    let qops = disc.qops();
    let vops = disc.vops();
    let eps = params.epsilon;
    let n = f.moment0();
    let phi = qops.solve_electrostatic_potential(&n, params.delta, params.lambda)?;
    let force = qops.gradient(&phi);
    let (wx, wy) = coordinate_weights(disc.grid().v);
    // Free streaming: the velocity factors are constant in q, so the
    // advective and conservative forms coincide exactly.
    let (fx, fy) = f.q_gradient(qops);
    let mut rhs = fx.mul_v(&wx);
    rhs.axpy(1.0, &fy.mul_v(&wy));
    rhs.scale(-eps);
    let el = eps * params.lambda;
    let fb = f.mul_q(&params.b);
    let flux_x = f.mul_q(&force.x.scaled(el)).sub(&fb.mul_v(&wy));
    let flux_y = f.mul_q(&force.y.scaled(el)).add(&fb.mul_v(&wx));
    rhs.axpy(
        -1.0,
        &PhaseField::velocity_divergence_density(&flux_x, &flux_y, vops),
    );
    Ok(rhs)
}

/// Total energy in distribution-function coordinates: kinetic energy plus
/// the electrostatic field energy of the self-consistent potential.
pub fn hamiltonian_vp(disc: &Discretization, params: &PhysParams, f: &PhaseField) -> Result<f64> {
    if !f.is_finite() {
        return Err(Error::NonFiniteInput {
            context: "hamiltonian_vp",
        });
    }
    let qops = disc.qops();
    let kinetic = f.kinetic_moment().integral();
    let n = f.moment0();
    let phi = qops.solve_electrostatic_potential(&n, params.delta, params.lambda)?;
    let grad = qops.gradient(&phi);
    let dl = params.delta * params.lambda;
    Ok(kinetic + 0.5 * dl * dl * grad.norm_sq().integral())
}

// ---------------------------------------------------------------------------
// moment coordinates (n, P, rho)
// ---------------------------------------------------------------------------

/// Time derivatives of a moment-coordinate state.
#[derive(Debug, Clone)]
pub struct MomentRates {
    /// Density rate.
    pub dn: ScalarField,
    /// Momentum-density rate.
    pub dp: VectorField,
    /// Rate of the density-weighted distribution n*rho, the combination the
    /// kinetic equation evolves in conservative form.
    pub d_weighted: PhaseField,
    /// Rate of rho itself, extracted by the product rule; restricted code
    /// paths that hold the density fixed need this directly.
    pub drho: PhaseField,
}

impl MomentRates {
    pub fn is_finite(&self) -> bool {
        self.dn.is_finite() && self.dp.is_finite() && self.d_weighted.is_finite() && self.drho.is_finite()
    }
}

/// Energy function on moment coordinates together with its analytic
/// gradient: thermal energy of the centered distribution, mean-flow energy,
/// and electrostatic field energy.
///
/// On states assembled from a distribution by the moment map followed by the
/// centering transform, the value equals [`hamiltonian_vp`] of the original
/// distribution up to interpolation error in the centering shift.
pub fn hamiltonian_e(
    disc: &Discretization,
    params: &PhysParams,
    s: &MomentState,
) -> Result<(f64, Covector)> {
    require_centered(s, "hamiltonian_e")?;
    require_density_floor(&s.n)?;
    if !(s.p.is_finite() && s.dist.is_finite()) {
        return Err(Error::NonFiniteInput {
            context: "hamiltonian_e",
        });
    }
    let qops = disc.qops();
    let n = &s.n;
    let inv_n = n.map(|x| 1.0 / x);
    // 1/2 int |xi|^2 rho dxi, as a function of position
    let internal = s.dist.kinetic_moment();
    let kinetic = internal.mul(n).integral();
    let flow = 0.5 * s.p.norm_sq().mul(&inv_n).integral();
    let phi = qops.solve_electrostatic_potential(n, params.delta, params.lambda)?;
    let grad_phi = qops.gradient(&phi);
    let dl = params.delta * params.lambda;
    let field = 0.5 * dl * dl * grad_phi.norm_sq().integral();

    let u = s.p.mul_scalar_field(&inv_n);
    let mut dn = internal;
    dn.axpy(-0.5, &u.norm_sq());
    dn.axpy(-params.lambda, &phi);
    let vg = disc.grid().v;
    let nv = vg.nv();
    let half_speed_sq = Array2::from_shape_fn((nv, nv), |(jy, jx)| {
        0.5 * (vg.coord(jx) * vg.coord(jx) + vg.coord(jy) * vg.coord(jy))
    });
    let drho = PhaseField::from_q_v_product(n, vg, &half_speed_sq)?;
    Ok((
        kinetic + flow + field,
        Covector { dn, dp: u, drho },
    ))
}

/// Evolution equations on moment coordinates for an arbitrary energy
/// functional, given its gradient covector. The density equation is in
/// divergence form, so the density rate has exactly zero mean; the kinetic
/// equation evolves n*rho in conservative form, so its rate integrates to
/// zero over phase space to rounding error.
pub fn hamiltonian_vectorfield_e(
    disc: &Discretization,
    params: &PhysParams,
    s: &MomentState,
    g: &Covector,
) -> Result<MomentRates> {
    require_centered(s, "hamiltonian_vectorfield_e")?;
    require_density_floor(&s.n)?;
    if !(s.p.is_finite() && s.dist.is_finite() && g.is_finite()) {
        return Err(Error::NonFiniteInput {
            context: "hamiltonian_vectorfield_e",
        });
    }
    let qops = disc.qops();
    let vops = disc.vops();
    let eps = params.epsilon;
    let n = &s.n;
    let rho = &s.dist;
    let inv_n = n.map(|x| 1.0 / x);
    let u = s.p.mul_scalar_field(&inv_n);
    let omega = qops.curl(&u);

    // w = (1/n) dG/drho and its derivatives and rho-averages
    let w = g.drho.mul_q(&inv_n);
    let (wvx, wvy) = w.velocity_gradient_obs(vops);
    let (wqx, wqy) = w.q_gradient(qops);
    let avg_w = w.mul(rho).moment0();
    let avg_dvw = VectorField::new(wvx.mul(rho).moment0(), wvy.mul(rho).moment0())?;
    let avg_dqw = VectorField::new(wqx.mul(rho).moment0(), wqy.mul(rho).moment0())?;
    // coupling tensor T_ij = n < d_{xi_i}(w) xi_j >
    let tx = wvx.mul(rho).moment1();
    let ty = wvy.mul(rho).moment1();
    let txx = tx.x.mul(n);
    let txy = tx.y.mul(n);
    let tyx = ty.x.mul(n);
    let tyy = ty.y.mul(n);
    // (div T)_j = d_x T_xj + d_y T_yj
    let divt = VectorField::new(
        qops.partial_x(&txx).add(&qops.partial_y(&tyx)),
        qops.partial_x(&txy).add(&qops.partial_y(&tyy)),
    )?;

    let ndp = g.dp.mul_scalar_field(n);
    let dn = qops.divergence(&ndp).scaled(-eps);

    let jdp = g.dp.rotated();
    let mut dp = qops.gradient(&g.dp.dot(&u)).mul_scalar_field(n);
    dp.axpy(1.0, &u.mul_scalar_field(&qops.divergence(&ndp)));
    dp.axpy(1.0, &jdp.mul_scalar_field(&n.mul(&omega)));
    dp.axpy(1.0, &divt);
    dp.axpy(
        1.0,
        &qops
            .gradient(&g.dn.sub(&avg_w))
            .add(&avg_dqw)
            .mul_scalar_field(n),
    );
    dp.scale(-eps);
    dp.axpy(1.0, &jdp.mul_scalar_field(&n.mul(&params.b)));

    // conservative transport of n*rho
    let nrho = rho.mul_q(n);
    let (wx, wy) = coordinate_weights(disc.grid().v);
    let fqx = nrho
        .mul_q(&g.dp.x.sub(&avg_dvw.x))
        .add(&wvx.mul(&nrho))
        .scaled(eps);
    let fqy = nrho
        .mul_q(&g.dp.y.sub(&avg_dvw.y))
        .add(&wvy.mul(&nrho))
        .scaled(eps);
    let mut d_weighted = PhaseField::q_divergence(&fqx, &fqy, qops);

    let ddp = [qops.gradient(&g.dp.x), qops.gradient(&g.dp.y)];
    let dav = [qops.gradient(&avg_dvw.x), qops.gradient(&avg_dvw.y)];
    let beff = params.b.sub(&omega.scaled(eps));
    let xi_x = nrho.mul_v(&wx);
    let xi_y = nrho.mul_v(&wy);
    let divt_n = divt.mul_scalar_field(&inv_n);
    let fvx = xi_x
        .mul_q(&ddp[0].x)
        .add(&xi_y.mul_q(&ddp[1].x))
        .scaled(-eps)
        .add(&xi_x.mul_q(&dav[0].x).add(&xi_y.mul_q(&dav[1].x)).scaled(eps))
        .add(&nrho.mul_q(&divt_n.x).scaled(eps))
        .sub(&wqx.mul(&nrho).scaled(eps))
        .add(&nrho.mul_q(&avg_dqw.x).scaled(eps))
        .sub(&wvy.mul(&nrho).mul_q(&beff))
        .add(&nrho.mul_q(&beff.mul(&avg_dvw.y)));
    let fvy = xi_x
        .mul_q(&ddp[0].y)
        .add(&xi_y.mul_q(&ddp[1].y))
        .scaled(-eps)
        .add(&xi_x.mul_q(&dav[0].y).add(&xi_y.mul_q(&dav[1].y)).scaled(eps))
        .add(&nrho.mul_q(&divt_n.y).scaled(eps))
        .sub(&wqy.mul(&nrho).scaled(eps))
        .add(&nrho.mul_q(&avg_dqw.y).scaled(eps))
        .add(&wvx.mul(&nrho).mul_q(&beff))
        .sub(&nrho.mul_q(&beff.mul(&avg_dvw.x)));
    d_weighted.axpy(
        1.0,
        &PhaseField::velocity_divergence_density(&fvx, &fvy, vops),
    );
    d_weighted.scale(-1.0);

    let drho = d_weighted.sub(&rho.mul_q(&dn)).mul_q(&inv_n);
    Ok(MomentRates {
        dn,
        dp,
        d_weighted,
        drho,
    })
}

/// Instantaneous change of the functional whose gradient is `g` along the
/// flow `r`. Vanishes to rounding error when `r` was generated by `g`
/// itself, which is the discrete expression of bracket antisymmetry.
pub fn energy_rate(g: &Covector, r: &MomentRates) -> f64 {
    g.dn.inner(&r.dn) + g.dp.inner(&r.dp) + g.drho.inner(&r.drho)
}

/// The moment-coordinate evolution equations with the energy gradient
/// substituted and simplified by hand (pressure-tensor form). Used as the
/// kinetic part of the expanded fast-slow equations and as an independent
/// route for cross-checking the general vector field.
pub(crate) fn specific_kinetic_rate(
    disc: &Discretization,
    params: &PhysParams,
    s: &MomentState,
) -> Result<PhaseField> {
    let qops = disc.qops();
    let vops = disc.vops();
    let eps = params.epsilon;
    let n = &s.n;
    let rho = &s.dist;
    let inv_n = n.map(|x| 1.0 / x);
    let u = s.p.mul_scalar_field(&inv_n);
    let omega = qops.curl(&u);
    let nrho = rho.mul_q(n);
    let (wx, wy) = coordinate_weights(disc.grid().v);
    let xi_mean = rho.moment1();

    let fqx = nrho
        .mul_q(&u.x.sub(&xi_mean.x))
        .add(&nrho.mul_v(&wx))
        .scaled(eps);
    let fqy = nrho
        .mul_q(&u.y.sub(&xi_mean.y))
        .add(&nrho.mul_v(&wy))
        .scaled(eps);
    let mut rate = PhaseField::q_divergence(&fqx, &fqy, qops);

    let m2 = rho.moment2();
    let nm_xx = m2.xx.mul(n);
    let nm_xy = m2.xy.mul(n);
    let nm_yy = m2.yy.mul(n);
    let stress_div = VectorField::new(
        qops.partial_x(&nm_xx).add(&qops.partial_y(&nm_xy)),
        qops.partial_x(&nm_xy).add(&qops.partial_y(&nm_yy)),
    )?
    .mul_scalar_field(&inv_n);
    let du = [qops.gradient(&u.x), qops.gradient(&u.y)];
    let dxi = [qops.gradient(&xi_mean.x), qops.gradient(&xi_mean.y)];
    let beff = params.b.sub(&omega.scaled(eps));
    let xi_x = nrho.mul_v(&wx);
    let xi_y = nrho.mul_v(&wy);
    // advective velocity-space flux: (xi . d_q) u, gradient-type mean-drift
    // coupling (d_qj <xi>) . xi, magnetic rotation, and the vorticity-shifted
    // rotation of the mean drift
    let fvx = nrho
        .mul_q(&stress_div.x.scaled(eps))
        .sub(&xi_x.mul_q(&du[0].x.scaled(eps)))
        .sub(&xi_y.mul_q(&du[0].y.scaled(eps)))
        .sub(&xi_y.mul_q(&params.b))
        .add(&xi_x.mul_q(&dxi[0].x.scaled(eps)))
        .add(&xi_y.mul_q(&dxi[1].x.scaled(eps)))
        .add(&nrho.mul_q(&beff.mul(&xi_mean.y)));
    let fvy = nrho
        .mul_q(&stress_div.y.scaled(eps))
        .sub(&xi_x.mul_q(&du[1].x.scaled(eps)))
        .sub(&xi_y.mul_q(&du[1].y.scaled(eps)))
        .add(&xi_x.mul_q(&params.b))
        .add(&xi_x.mul_q(&dxi[0].y.scaled(eps)))
        .add(&xi_y.mul_q(&dxi[1].y.scaled(eps)))
        .sub(&nrho.mul_q(&beff.mul(&xi_mean.x)));
    rate.axpy(
        1.0,
        &PhaseField::velocity_divergence_density(&fvx, &fvy, vops),
    );
    rate.scale(-1.0);
    Ok(rate)
}

// ---------------------------------------------------------------------------
// fast-slow coordinates (n0, ntilde, Phi, pi, rho)
// ---------------------------------------------------------------------------

/// Fast-slow decomposition of a moment state: the density split into its
/// spatial mean and a scaled zero-mean remainder, and the momentum density
/// Hodge-split into a compressible potential part and a divergence-free
/// part. The potential and remainder are the fast variables; the mean
/// density, the divergence-free momentum, and the centered distribution are
/// slow.
///
/// Construction enforces the invariants: both scalar components are
/// projected to zero mean and the vector component to zero divergence.
#[derive(Debug, Clone)]
pub struct FastSlowState {
    n0: f64,
    ntilde: ScalarField,
    phi: ScalarField,
    pi: VectorField,
    rho: PhaseField,
    scaled_split: bool,
}

impl FastSlowState {
    pub fn new(
        qops: &SpectralOps,
        n0: f64,
        ntilde: ScalarField,
        phi: ScalarField,
        pi: VectorField,
        rho: PhaseField,
    ) -> Result<Self> {
        Self::assemble(qops, n0, ntilde, phi, pi, rho, true)
    }

    fn assemble(
        qops: &SpectralOps,
        n0: f64,
        mut ntilde: ScalarField,
        mut phi: ScalarField,
        pi: VectorField,
        rho: PhaseField,
        scaled_split: bool,
    ) -> Result<Self> {
        if !(n0.is_finite()
            && ntilde.is_finite()
            && phi.is_finite()
            && pi.is_finite()
            && rho.is_finite())
        {
            return Err(Error::NonFiniteInput {
                context: "fast-slow state",
            });
        }
        if ntilde.grid() != qops.grid()
            || phi.grid() != qops.grid()
            || pi.grid() != qops.grid()
            || rho.grid().q != qops.grid()
        {
            return Err(Error::grid("fast-slow state components on mismatched grids"));
        }
        ntilde.add_scalar(-ntilde.mean());
        phi.add_scalar(-phi.mean());
        let (_, pi) = qops.hodge_decompose(&pi);
        Ok(FastSlowState {
            n0,
            ntilde,
            phi,
            pi,
            rho,
            scaled_split,
        })
    }

    pub fn n0(&self) -> f64 {
        self.n0
    }

    pub fn ntilde(&self) -> &ScalarField {
        &self.ntilde
    }

    pub fn phi(&self) -> &ScalarField {
        &self.phi
    }

    pub fn pi(&self) -> &VectorField {
        &self.pi
    }

    pub fn rho(&self) -> &PhaseField {
        &self.rho
    }

    /// Whether the density remainder carries the 1/delta scaling. The
    /// degenerate delta = 0 split stores the raw zero-mean residue instead.
    pub fn split_scaled(&self) -> bool {
        self.scaled_split
    }

    /// Reassembled momentum density grad(Phi) + pi.
    pub fn momentum(&self, qops: &SpectralOps) -> VectorField {
        qops.gradient(&self.phi).add(&self.pi)
    }

    /// Invert the decomposition back to moment coordinates.
    pub fn moment_state(&self, disc: &Discretization, params: &PhysParams) -> Result<MomentState> {
        let scale = if self.scaled_split { params.delta } else { 1.0 };
        let mut n = self.ntilde.scaled(scale);
        n.add_scalar(self.n0);
        Ok(MomentState {
            n,
            p: self.momentum(disc.qops()),
            dist: self.rho.clone(),
            centered: true,
        })
    }

    /// In-place Euler update by `dt` times a rate; used as the elementary
    /// step of time integration.
    pub fn advance(&mut self, dt: f64, r: &FastSlowRates) {
        self.n0 += dt * r.dn0;
        self.ntilde.axpy(dt, &r.dntilde);
        self.phi.axpy(dt, &r.dphi);
        self.pi.axpy(dt, &r.dpi);
        self.rho.axpy(dt, &r.drho);
    }

    /// Re-enforce the constructor invariants after arithmetic: zero means
    /// and a divergence-free vector part.
    pub fn project(&mut self, qops: &SpectralOps) {
        self.ntilde.add_scalar(-self.ntilde.mean());
        self.phi.add_scalar(-self.phi.mean());
        let (_, pi) = qops.hodge_decompose(&self.pi);
        self.pi = pi;
    }

    pub fn is_finite(&self) -> bool {
        self.n0.is_finite()
            && self.ntilde.is_finite()
            && self.phi.is_finite()
            && self.pi.is_finite()
            && self.rho.is_finite()
    }
}

/// Time derivatives of a fast-slow state. The mean-density rate is
/// identically zero — the density equation is in divergence form — and is
/// kept only so the rate mirrors the state shape.
#[derive(Debug, Clone)]
pub struct FastSlowRates {
    pub dn0: f64,
    pub dntilde: ScalarField,
    pub dphi: ScalarField,
    pub dpi: VectorField,
    pub drho: PhaseField,
}

impl FastSlowRates {
    pub fn zeros(grid: PhaseGrid) -> Self {
        FastSlowRates {
            dn0: 0.0,
            dntilde: ScalarField::zeros(grid.q),
            dphi: ScalarField::zeros(grid.q),
            dpi: VectorField::zeros(grid.q),
            drho: PhaseField::zeros(grid),
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.dn0 *= alpha;
        self.dntilde.scale(alpha);
        self.dphi.scale(alpha);
        self.dpi.scale(alpha);
        self.drho.scale(alpha);
    }

    pub fn axpy(&mut self, alpha: f64, other: &FastSlowRates) {
        self.dn0 += alpha * other.dn0;
        self.dntilde.axpy(alpha, &other.dntilde);
        self.dphi.axpy(alpha, &other.dphi);
        self.dpi.axpy(alpha, &other.dpi);
        self.drho.axpy(alpha, &other.drho);
    }

    pub fn is_finite(&self) -> bool {
        self.dn0.is_finite()
            && self.dntilde.is_finite()
            && self.dphi.is_finite()
            && self.dpi.is_finite()
            && self.drho.is_finite()
    }
}

/// Split a centered moment state into fast-slow coordinates. With a
/// positive delta the density remainder is divided by it; at delta = 0 the
/// raw zero-mean residue is stored and flagged via
/// [`FastSlowState::split_scaled`].
pub fn fastslow_transform(
    disc: &Discretization,
    params: &PhysParams,
    s: &MomentState,
) -> Result<FastSlowState> {
    require_centered(s, "fastslow_transform")?;
    if !(s.n.is_finite() && s.p.is_finite() && s.dist.is_finite()) {
        return Err(Error::NonFiniteInput {
            context: "fastslow_transform",
        });
    }
    let n0 = s.n.mean();
    let mut residue = s.n.clone();
    residue.add_scalar(-n0);
    let (scaled, ntilde) = if params.delta > 0.0 {
        (true, residue.scaled(1.0 / params.delta))
    } else {
        (false, residue)
    };
    let (phi, pi) = disc.qops().hodge_decompose(&s.p);
    FastSlowState::assemble(disc.qops(), n0, ntilde, phi, pi, s.dist.clone(), scaled)
}

/// Which route evaluates the fast-slow right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FastSlowMode {
    /// Push the energy-gradient flow in moment coordinates through the
    /// decomposition differential. Exactly consistent with the parent
    /// dynamics; the default and the ground truth.
    #[default]
    Transformed,
    /// Evaluate the expanded fast-slow equations as written, including the
    /// mean-field projection terms. Kept as an independent cross-check; the
    /// potential equation differs from the transformed route by a term
    /// quadratic in the density remainder (see the mode-comparison test).
    Printed,
}

/// Right-hand side of the fast-slow system.
pub fn fastslow_rhs(
    disc: &Discretization,
    params: &PhysParams,
    fs: &FastSlowState,
    mode: FastSlowMode,
) -> Result<FastSlowRates> {
    if params.delta == 0.0 && fs.scaled_split {
        return Err(Error::QuasineutralSingularity);
    }
    let qops = disc.qops();
    let s = fs.moment_state(disc, params)?;
    match mode {
        FastSlowMode::Transformed => {
            let (_, grad) = hamiltonian_e(disc, params, &s)?;
            let r = hamiltonian_vectorfield_e(disc, params, &s, &grad)?;
            let mut dntilde = r.dn;
            dntilde.add_scalar(-dntilde.mean());
            if fs.scaled_split {
                dntilde.scale(1.0 / params.delta);
            }
            let (dphi, dpi) = qops.hodge_decompose(&r.dp);
            Ok(FastSlowRates {
                dn0: 0.0,
                dntilde,
                dphi,
                dpi,
                drho: r.drho,
            })
        }
        FastSlowMode::Printed => {
            if params.delta == 0.0 {
                return Err(Error::QuasineutralSingularity);
            }
            let eps = params.epsilon;
            let delta = params.delta;
            require_density_floor(&s.n)?;
            let n = &s.n;
            let p = &s.p;
            let inv_n = n.map(|x| 1.0 / x);
            let m2 = s.dist.moment2();
            // stress tensor P P / n + n <xi xi>
            let txx = m2.xx.mul(n).add(&p.x.mul(&p.x).mul(&inv_n));
            let txy = m2.xy.mul(n).add(&p.x.mul(&p.y).mul(&inv_n));
            let tyy = m2.yy.mul(n).add(&p.y.mul(&p.y).mul(&inv_n));
            let double_div = qops
                .partial_x(&qops.partial_x(&txx))
                .add(&qops.partial_x(&qops.partial_y(&txy)).scaled(2.0))
                .add(&qops.partial_y(&qops.partial_y(&tyy)));
            let green = qops.inv_laplacian_zero_mean(&fs.ntilde);
            let green_grad = qops.gradient(&green);
            let jp = p.rotated().mul_scalar_field(&params.b);

            let dntilde = qops.laplacian(&fs.phi).scaled(-eps / delta);

            let mut dlap = double_div.scaled(-eps);
            dlap.axpy(eps / delta * fs.n0, &fs.ntilde);
            dlap.axpy(eps, &qops.gradient(&fs.ntilde).dot(&green_grad));
            dlap.axpy(1.0, &qops.divergence(&jp));
            let dphi = qops.inv_laplacian_zero_mean(&dlap);

            let stress_div = VectorField::new(
                qops.partial_x(&txx).add(&qops.partial_y(&txy)),
                qops.partial_x(&txy).add(&qops.partial_y(&tyy)),
            )?;
            let mut p_rate = stress_div.scaled(-eps);
            p_rate.axpy(eps, &green_grad.mul_scalar_field(&fs.ntilde));
            p_rate.axpy(1.0, &jp);
            let (_, dpi) = qops.hodge_decompose(&p_rate);

            let d_weighted = specific_kinetic_rate(disc, params, &s)?;
            let dn_full = qops.divergence(p).scaled(-eps);
            let drho = d_weighted.sub(&s.dist.mul_q(&dn_full)).mul_q(&inv_n);
            Ok(FastSlowRates {
                dn0: 0.0,
                dntilde,
                dphi,
                dpi,
                drho,
            })
        }
    }
}

/// Rates of the fast pair (density remainder, compressible potential) with
/// the slow variables frozen: the linear oscillation subsystem. Every
/// spatial mode oscillates at the same frequency, (epsilon/delta) times the
/// square root of the mean density.
pub fn langmuir_rhs(
    qops: &SpectralOps,
    params: &PhysParams,
    n0: f64,
    ntilde: &ScalarField,
    phi: &ScalarField,
) -> Result<(ScalarField, ScalarField)> {
    if params.delta == 0.0 {
        return Err(Error::QuasineutralSingularity);
    }
    if !(n0.is_finite() && n0 > 0.0) {
        return Err(Error::usage(format!(
            "langmuir_rhs needs a positive mean density, got {n0}"
        )));
    }
    if !(ntilde.is_finite() && phi.is_finite()) {
        return Err(Error::NonFiniteInput {
            context: "langmuir_rhs",
        });
    }
    let scale = 1.0 + ntilde.max_abs() + phi.max_abs();
    if ntilde.mean().abs() > 1e-10 * scale || phi.mean().abs() > 1e-10 * scale {
        return Err(Error::usage(
            "langmuir_rhs expects zero-mean inputs".to_string(),
        ));
    }
    let r = params.epsilon / params.delta;
    let dntilde = qops.laplacian(phi).scaled(-r);
    let dphi = qops.inv_laplacian_zero_mean(ntilde).scaled(r * n0);
    Ok((dntilde, dphi))
}

/// Prefactor variant for [`slow_manifold_n1`]; the alternative divides the
/// whole expression by the mean density. The two coincide at unit mean
/// density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum N1Prefactor {
    #[default]
    One,
    InvN0,
}

/// First-order coefficient of the slow-manifold expansion of the density
/// remainder: the double divergence of the stress tensor evaluated on the
/// slow base, minus the compressible part of the magnetic force on the
/// divergence-free momentum, scaled by the inverse smallness parameter.
/// Deviations of the density from its mean at first order are exactly the
/// compressive stress the electrostatic field must balance to keep the flow
/// incompressible.
pub fn slow_manifold_n1(
    disc: &Discretization,
    params: &PhysParams,
    fs: &FastSlowState,
    prefactor: N1Prefactor,
) -> Result<ScalarField> {
    let on_base = fs.ntilde.max_abs() <= 1e-10 && fs.phi.max_abs() <= 1e-10;
    if !on_base {
        return Err(Error::usage(
            "slow_manifold_n1 expects a state on the slow base (zero density remainder and zero compressible potential)"
                .to_string(),
        ));
    }
    if !(fs.n0 >= DENSITY_FLOOR) {
        return Err(Error::DensityFloor {
            min: fs.n0,
            floor: DENSITY_FLOOR,
        });
    }
    let qops = disc.qops();
    let pi = &fs.pi;
    let m2 = fs.rho.moment2();
    let txx = pi.x.mul(&pi.x).scaled(1.0 / fs.n0).add(&m2.xx.scaled(fs.n0));
    let txy = pi.x.mul(&pi.y).scaled(1.0 / fs.n0).add(&m2.xy.scaled(fs.n0));
    let tyy = pi.y.mul(&pi.y).scaled(1.0 / fs.n0).add(&m2.yy.scaled(fs.n0));
    let double_div = qops
        .partial_x(&qops.partial_x(&txx))
        .add(&qops.partial_x(&qops.partial_y(&txy)).scaled(2.0))
        .add(&qops.partial_y(&qops.partial_y(&tyy)));
    let magnetic = pi
        .rotated()
        .mul_scalar_field(&params.b)
        .scaled(1.0 / (params.epsilon * fs.n0));
    let mut out = double_div.sub(&qops.divergence(&magnetic));
    out.add_scalar(-out.mean());
    if prefactor == N1Prefactor::InvN0 {
        out.scale(1.0 / fs.n0);
    }
    Ok(out)
}
