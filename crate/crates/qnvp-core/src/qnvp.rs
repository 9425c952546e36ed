//! The quasineutral limit system on the constraint set of spatially uniform
//! density and solenoidal momentum: state and covector types, the limit
//! Hamiltonian with its gradients, the covector-extension construction that
//! realizes the induced bracket, the bracket itself by two independent
//! routes, annihilator images, and a dense-linear-algebra certificate of
//! the trivial-intersection property the whole construction rests on.
//!
//! Two routes are deliberately kept apart everywhere a formula admits them:
//! the printed closed forms are transcribed literally, and the same objects
//! are recomputed through the ambient moment-coordinate machinery, so tests
//! can compare rather than assume.

use std::f64::consts::TAU;

use ndarray::Array2;

use crate::algebra::Covector;
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::linalg;
use crate::moments::{MomentState, DENSITY_FLOOR};
use crate::params::PhysParams;
use crate::phase::{Discretization, PhaseField};
use crate::spectral::SpectralOps;
use crate::vp::{coordinate_weights, hamiltonian_vectorfield_e, specific_kinetic_rate, MomentRates};

/// A point of the constraint set: uniform density, divergence-free momentum
/// density, and the centered conditional velocity distribution. The
/// momentum is Leray-projected on construction so the solenoidal invariant
/// holds to rounding.
#[derive(Debug, Clone)]
pub struct QnvpState {
    n0: f64,
    pi: VectorField,
    rho: PhaseField,
}

impl QnvpState {
    pub fn new(qops: &SpectralOps, n0: f64, pi: VectorField, rho: PhaseField) -> Result<Self> {
        if !(n0.is_finite() && n0 > 0.0) {
            return Err(Error::usage(format!(
                "quasineutral state needs a positive uniform density, got {n0}"
            )));
        }
        if !(pi.is_finite() && rho.is_finite()) {
            return Err(Error::NonFiniteInput {
                context: "quasineutral state",
            });
        }
        if pi.x.grid() != qops.grid() || rho.grid().q != qops.grid() {
            return Err(Error::grid("quasineutral state components on mismatched grids"));
        }
        let (_, pi) = qops.hodge_decompose(&pi);
        Ok(QnvpState { n0, pi, rho })
    }

    pub fn n0(&self) -> f64 {
        self.n0
    }

    pub fn pi(&self) -> &VectorField {
        &self.pi
    }

    pub fn rho(&self) -> &PhaseField {
        &self.rho
    }

    /// Embed into moment coordinates with a constant density field.
    pub fn moment_state(&self) -> MomentState {
        let grid = self.rho.grid();
        MomentState {
            n: ScalarField::constant(grid.q, self.n0),
            p: self.pi.clone(),
            dist: self.rho.clone(),
            centered: true,
        }
    }

    /// Largest pointwise deviation of the velocity normalization from one.
    /// Tracked as a diagnostic; not enforced.
    pub fn normalization_defect(&self) -> f64 {
        let mut m0 = self.rho.moment0();
        m0.add_scalar(-1.0);
        m0.max_abs()
    }

    /// In-place Euler update by `dt` times a rate.
    pub fn advance(&mut self, dt: f64, r: &QnvpRates) {
        self.n0 += dt * r.dn0;
        self.pi.axpy(dt, &r.dpi);
        self.rho.axpy(dt, &r.drho);
    }

    /// Re-enforce the solenoidal invariant after arithmetic.
    pub fn project(&mut self, qops: &SpectralOps) {
        let (_, pi) = qops.hodge_decompose(&self.pi);
        self.pi = pi;
    }

    pub fn is_finite(&self) -> bool {
        self.n0.is_finite() && self.pi.is_finite() && self.rho.is_finite()
    }
}

/// Time derivatives of a quasineutral state. The uniform-density rate is
/// identically zero for the flow itself; it is kept so rates mirror the
/// state shape, and so cross-route comparisons can report what the ambient
/// route actually produced.
#[derive(Debug, Clone)]
pub struct QnvpRates {
    pub dn0: f64,
    pub dpi: VectorField,
    pub drho: PhaseField,
}

impl QnvpRates {
    pub fn zeros(grid: crate::phase::PhaseGrid) -> Self {
        QnvpRates {
            dn0: 0.0,
            dpi: VectorField::zeros(grid.q),
            drho: PhaseField::zeros(grid),
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.dn0 *= alpha;
        self.dpi.scale(alpha);
        self.drho.scale(alpha);
    }

    pub fn axpy(&mut self, alpha: f64, other: &QnvpRates) {
        self.dn0 += alpha * other.dn0;
        self.dpi.axpy(alpha, &other.dpi);
        self.drho.axpy(alpha, &other.drho);
    }

    pub fn is_finite(&self) -> bool {
        self.dn0.is_finite() && self.dpi.is_finite() && self.drho.is_finite()
    }
}

/// Differential of a functional on the constraint set: a constant component
/// for the uniform density, a divergence-free momentum component
/// (Leray-projected on construction), and a phase-space component.
#[derive(Debug, Clone)]
pub struct SigmaCovector {
    pub dn0: f64,
    pub dpi: VectorField,
    pub drho: PhaseField,
}

impl SigmaCovector {
    pub fn new(qops: &SpectralOps, dn0: f64, dpi: VectorField, drho: PhaseField) -> Result<Self> {
        if !(dn0.is_finite() && dpi.is_finite() && drho.is_finite()) {
            return Err(Error::NonFiniteInput {
                context: "constraint-set covector",
            });
        }
        let (_, dpi) = qops.hodge_decompose(&dpi);
        Ok(SigmaCovector { dn0, dpi, drho })
    }

    pub fn zero(grid: crate::phase::PhaseGrid) -> Self {
        SigmaCovector {
            dn0: 0.0,
            dpi: VectorField::zeros(grid.q),
            drho: PhaseField::zeros(grid),
        }
    }
}

/// A constraint-set covector completed to a covector on the ambient moment
/// space. The scalar potential completing the density slot is determined by
/// a Poisson problem; the gradient potential that could complete the
/// momentum slot is provably zero and is carried explicitly so that fact
/// stays visible (and testable) rather than assumed.
#[derive(Debug, Clone)]
pub struct ExtendedCovector {
    pub base: SigmaCovector,
    /// Zero-mean completion of the density slot.
    pub psi_g: ScalarField,
    /// Identically zero completion of the momentum slot.
    pub phi_g: ScalarField,
}

impl ExtendedCovector {
    /// Assemble the ambient covector the extension stands for.
    pub fn ambient(&self, qops: &SpectralOps) -> Covector {
        let mut dn = self.psi_g.clone();
        dn.add_scalar(self.base.dn0);
        Covector {
            dn,
            dp: self.base.dpi.add(&qops.gradient(&self.phi_g)),
            drho: self.base.drho.clone(),
        }
    }
}

/// Pairing of a constraint-set covector with a rate tuple. The constant
/// density slot pairs through its area integral.
pub fn sigma_pairing(g: &SigmaCovector, r: &QnvpRates) -> f64 {
    g.dn0 * r.dn0 * TAU * TAU + g.dpi.inner(&r.dpi) + g.drho.inner(&r.drho)
}

/// Kinetic energy of the constraint-set state, with its gradient. The
/// density-slot gradient is stored as the constant whose area integral
/// pairs against uniform density increments.
pub fn hamiltonian_sigma(disc: &Discretization, s: &QnvpState) -> Result<(f64, SigmaCovector)> {
    if !s.is_finite() {
        return Err(Error::NonFiniteInput {
            context: "hamiltonian_sigma",
        });
    }
    let grid = disc.grid();
    if s.rho.grid() != grid {
        return Err(Error::grid("state on a different grid than the discretization"));
    }
    let thermal = s.rho.kinetic_moment().integral();
    let flow = 0.5 * s.pi.norm_sq().integral() / s.n0;
    let value = s.n0 * thermal + flow;
    let dn0 = (thermal - flow / s.n0) / (TAU * TAU);
    let dpi = s.pi.scaled(1.0 / s.n0);
    let (wx, wy) = coordinate_weights(grid.v);
    let nv = grid.v.nv();
    let half_speed = Array2::from_shape_fn((nv, nv), |(jy, jx)| {
        0.5 * (wx[(jy, jx)] * wx[(jy, jx)] + wy[(jy, jx)] * wy[(jy, jx)])
    });
    let drho = PhaseField::from_q_v_product(
        &ScalarField::constant(grid.q, s.n0),
        grid.v,
        &half_speed,
    )?;
    Ok((value, SigmaCovector { dn0, dpi, drho }))
}

/// Right-hand side of the quasineutral system, transcribed from its closed
/// form: Leray-projected stress and magnetic forces drive the solenoidal
/// momentum, and the kinetic equation runs with the uniform density and the
/// vorticity of the bulk flow.
pub fn qnvp_rhs(disc: &Discretization, params: &PhysParams, s: &QnvpState) -> Result<QnvpRates> {
    if !s.is_finite() {
        return Err(Error::NonFiniteInput { context: "qnvp_rhs" });
    }
    if s.n0 < DENSITY_FLOOR {
        return Err(Error::DensityFloor {
            min: s.n0,
            floor: DENSITY_FLOOR,
        });
    }
    let qops = disc.qops();
    let eps = params.epsilon;
    let m2 = s.rho.moment2();
    // stress tensor pi pi / n0 + n0 <xi xi>
    let txx = s.pi.x.mul(&s.pi.x).scaled(1.0 / s.n0).add(&m2.xx.scaled(s.n0));
    let txy = s.pi.x.mul(&s.pi.y).scaled(1.0 / s.n0).add(&m2.xy.scaled(s.n0));
    let tyy = s.pi.y.mul(&s.pi.y).scaled(1.0 / s.n0).add(&m2.yy.scaled(s.n0));
    let stress_div = VectorField::new(
        qops.partial_x(&txx).add(&qops.partial_y(&txy)),
        qops.partial_x(&txy).add(&qops.partial_y(&tyy)),
    )?;
    let mut force = stress_div.scaled(-eps);
    force.axpy(1.0, &s.pi.rotated().mul_scalar_field(&params.b));
    let (_, dpi) = qops.hodge_decompose(&force);
    // the kinetic equation coincides with the moment-coordinate one at
    // constant density; evolve the weighted distribution and divide back
    let ms = s.moment_state();
    let drho = specific_kinetic_rate(disc, params, &ms)?.scaled(1.0 / s.n0);
    Ok(QnvpRates {
        dn0: 0.0,
        dpi,
        drho,
    })
}

fn require_zero_mean(f: &ScalarField, what: &str) -> Result<()> {
    if f.mean().abs() > 1e-10 * (1.0 + f.max_abs()) {
        return Err(Error::usage(format!("{what} must have zero mean")));
    }
    Ok(())
}

/// Completion potential and assembled extension for a constraint-set
/// covector: the zero-mean scalar solves the Poisson problem that makes the
/// generated ambient flow tangent to the constraint set, and the momentum
/// completion is identically zero.
pub fn extend_covector(
    disc: &Discretization,
    params: &PhysParams,
    s: &QnvpState,
    g: &SigmaCovector,
) -> Result<ExtendedCovector> {
    if !(s.is_finite() && g.dn0.is_finite() && g.dpi.is_finite() && g.drho.is_finite()) {
        return Err(Error::NonFiniteInput {
            context: "extend_covector",
        });
    }
    if g.drho.grid() != s.rho.grid() {
        return Err(Error::grid("covector on a different grid than the state"));
    }
    let qops = disc.qops();
    let vops = disc.vops();
    let eps = params.epsilon;
    let u = s.pi.scaled(1.0 / s.n0);
    let omega = qops.curl(&u);
    let beff = params.b.sub(&omega.scaled(eps));
    let rho = &s.rho;
    let w = g.drho.scaled(1.0 / s.n0);
    let (wvx, wvy) = w.velocity_gradient_obs(vops);
    let (wqx, wqy) = w.q_gradient(qops);
    let avg_w = w.mul(rho).moment0();
    let avg_dqw = VectorField::new(wqx.mul(rho).moment0(), wqy.mul(rho).moment0())?;
    // S_ij = <d_{xi_i}(w) xi_j>, (div S)_j = d_x S_xj + d_y S_yj
    let sx = wvx.mul(rho).moment1();
    let sy = wvy.mul(rho).moment1();
    let div_s = VectorField::new(
        qops.partial_x(&sx.x).add(&qops.partial_y(&sy.x)),
        qops.partial_x(&sx.y).add(&qops.partial_y(&sy.y)),
    )?;
    let mut vec = g.dpi.rotated().mul_scalar_field(&beff).scaled(1.0 / eps);
    vec.axpy(-1.0, &div_s);
    vec.axpy(1.0, &qops.gradient(&avg_w));
    vec.axpy(-1.0, &avg_dqw);
    let mut psi = qops.inv_laplacian_zero_mean(&qops.divergence(&vec));
    let mut advected = u.dot(&g.dpi);
    advected.add_scalar(-advected.mean());
    psi.axpy(-1.0, &advected);
    Ok(ExtendedCovector {
        base: g.clone(),
        psi_g: psi,
        phi_g: ScalarField::zeros(qops.grid()),
    })
}

/// Image under the ambient Poisson operator of an annihilator covector
/// (zero-mean density slot, gradient momentum slot, vanishing phase-space
/// slot), transcribed from its closed form. Cross-checked in tests against
/// the general ambient route with the same substitutions.
pub fn annihilator_image(
    disc: &Discretization,
    params: &PhysParams,
    s: &QnvpState,
    dn_star: &ScalarField,
    dphi_star: &ScalarField,
) -> Result<MomentRates> {
    if !(dn_star.is_finite() && dphi_star.is_finite() && s.is_finite()) {
        return Err(Error::NonFiniteInput {
            context: "annihilator_image",
        });
    }
    require_zero_mean(dn_star, "annihilator density slot")?;
    require_zero_mean(dphi_star, "annihilator potential slot")?;
    let qops = disc.qops();
    let vops = disc.vops();
    let eps = params.epsilon;
    let n0 = s.n0;
    let grad_phi = qops.gradient(dphi_star);
    let lap_phi = qops.laplacian(dphi_star);
    let u = s.pi.scaled(1.0 / n0);
    let omega = qops.curl(&u);

    let dn = lap_phi.scaled(-eps * n0);

    let mut dp = qops.gradient(&s.pi.dot(&grad_phi)).scaled(-eps);
    dp.axpy(-eps, &s.pi.mul_scalar_field(&lap_phi));
    dp.axpy(-eps * n0, &grad_phi.rotated().mul_scalar_field(&omega));
    dp.axpy(-eps * n0, &qops.gradient(dn_star));
    dp.axpy(n0, &grad_phi.rotated().mul_scalar_field(&params.b));

    // advection by the gradient field plus the velocity-space strain flux
    let (rx, ry) = s.rho.q_gradient(qops);
    let mut drho = rx
        .mul_q(&grad_phi.x)
        .add(&ry.mul_q(&grad_phi.y))
        .scaled(-eps);
    let hxx = qops.partial_x(&grad_phi.x);
    let hxy = qops.partial_x(&grad_phi.y);
    let hyy = qops.partial_y(&grad_phi.y);
    let (wx, wy) = coordinate_weights(disc.grid().v);
    let xi_x = s.rho.mul_v(&wx);
    let xi_y = s.rho.mul_v(&wy);
    let fx = xi_x.mul_q(&hxx).add(&xi_y.mul_q(&hxy)).scaled(eps);
    let fy = xi_x.mul_q(&hxy).add(&xi_y.mul_q(&hyy)).scaled(eps);
    drho.axpy(
        1.0,
        &PhaseField::velocity_divergence_density(&fx, &fy, vops),
    );

    let d_weighted = drho.scaled(n0).add(&s.rho.mul_q(&dn));
    Ok(MomentRates {
        dn,
        dp,
        d_weighted,
        drho,
    })
}

/// Which route evaluates the constraint-set bracket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BracketRoute {
    /// The printed closed-form integral, transcribed group by group.
    #[default]
    Direct,
    /// Extend both covectors to the ambient space, generate the ambient
    /// flow from one, and pair it with the other.
    Extension,
}

/// Per-covector ingredients of the direct bracket formula: gradients of the
/// scaled phase-space slot, their distribution averages, and the divergence
/// of the strain-coupling tensor.
struct KineticLegs {
    wqx: PhaseField,
    wqy: PhaseField,
    wvx: PhaseField,
    wvy: PhaseField,
    avg_qw: VectorField,
    avg_vw: VectorField,
    div_s: VectorField,
}

fn kinetic_legs(disc: &Discretization, s: &QnvpState, c: &SigmaCovector) -> Result<KineticLegs> {
    let qops = disc.qops();
    let vops = disc.vops();
    let rho = &s.rho;
    let w = c.drho.scaled(1.0 / s.n0);
    let (wvx, wvy) = w.velocity_gradient_obs(vops);
    let (wqx, wqy) = w.q_gradient(qops);
    let avg_qw = VectorField::new(wqx.mul(rho).moment0(), wqy.mul(rho).moment0())?;
    let avg_vw = VectorField::new(wvx.mul(rho).moment0(), wvy.mul(rho).moment0())?;
    let sx = wvx.mul(rho).moment1();
    let sy = wvy.mul(rho).moment1();
    let div_s = VectorField::new(
        qops.partial_x(&sx.x).add(&qops.partial_y(&sy.x)),
        qops.partial_x(&sx.y).add(&qops.partial_y(&sy.y)),
    )?;
    Ok(KineticLegs {
        wqx,
        wqy,
        wvx,
        wvy,
        avg_qw,
        avg_vw,
        div_s,
    })
}

/// The induced bracket of two constraint-set covectors at a state.
pub fn bracket_sigma(
    disc: &Discretization,
    params: &PhysParams,
    s: &QnvpState,
    f: &SigmaCovector,
    g: &SigmaCovector,
    route: BracketRoute,
) -> Result<f64> {
    if f.drho.grid() != s.rho.grid() || g.drho.grid() != s.rho.grid() {
        return Err(Error::grid("covectors on a different grid than the state"));
    }
    match route {
        BracketRoute::Direct => {
            let qops = disc.qops();
            let eps = params.epsilon;
            let n0 = s.n0;
            let rho = &s.rho;
            let u = s.pi.scaled(1.0 / n0);
            let omega = qops.curl(&u);
            let beff = params.b.sub(&omega.scaled(eps));
            let lf = kinetic_legs(disc, s, f)?;
            let lg = kinetic_legs(disc, s, g)?;
            // rotation of the momentum slots
            let g1 = n0 * beff.mul(&f.dpi.dot(&g.dpi.rotated())).integral();
            // momentum slots against mean phase-space gradients
            let g2 = -eps
                * n0
                * (f.dpi.inner(&lg.avg_qw) - g.dpi.inner(&lf.avg_qw));
            // drift-corrected momentum slots against the strain coupling
            let g3 = -eps
                * n0
                * (f.dpi.sub(&lf.avg_vw).inner(&lg.div_s)
                    - g.dpi.sub(&lg.avg_vw).inner(&lf.div_s));
            // kinetic-kinetic transport and rotation
            let transport = lf
                .wqx
                .mul(&lg.wvx)
                .add(&lf.wqy.mul(&lg.wvy))
                .sub(&lg.wqx.mul(&lf.wvx))
                .sub(&lg.wqy.mul(&lf.wvy));
            let rotation = lf.wvy.mul(&lg.wvx).sub(&lf.wvx.mul(&lg.wvy));
            let g4 = eps * n0 * transport.mul(rho).integral()
                + n0 * rotation.mul(rho).mul_q(&beff).integral();
            // mean-mean corrections
            let g5 = -eps
                * n0
                * (lf.avg_qw.inner(&lg.avg_vw) - lg.avg_qw.inner(&lf.avg_vw));
            let g6 = -n0 * beff.mul(&lf.avg_vw.dot(&lg.avg_vw.rotated())).integral();
            Ok(g1 + g2 + g3 + g4 + g5 + g6)
        }
        BracketRoute::Extension => {
            let qops = disc.qops();
            let ext_f = extend_covector(disc, params, s, f)?;
            let ext_g = extend_covector(disc, params, s, g)?;
            let ms = s.moment_state();
            let rates = hamiltonian_vectorfield_e(disc, params, &ms, &ext_g.ambient(qops))?;
            Ok(crate::vp::energy_rate(&ext_f.ambient(qops), &rates))
        }
    }
}

/// The flow generated by the limit Hamiltonian through the bracket
/// machinery: extend the energy gradient, generate the ambient flow, and
/// read the rates back on the constraint set. Independent of [`qnvp_rhs`]
/// by construction; their agreement is the content of the Hamiltonian-
/// formulation claim.
pub fn bracket_vectorfield_sigma(
    disc: &Discretization,
    params: &PhysParams,
    s: &QnvpState,
) -> Result<QnvpRates> {
    let qops = disc.qops();
    let (_, grad) = hamiltonian_sigma(disc, s)?;
    let ext = extend_covector(disc, params, s, &grad)?;
    let ms = s.moment_state();
    let rates = hamiltonian_vectorfield_e(disc, params, &ms, &ext.ambient(qops))?;
    let (_, dpi) = qops.hodge_decompose(&rates.dp);
    Ok(QnvpRates {
        dn0: rates.dn.mean(),
        dpi,
        drho: rates.drho,
    })
}

/// Real orthonormal Fourier basis, under the plain coordinate dot product,
/// of the zero-mean functions the derivative stencil resolves. The Nyquist
/// row and column are excluded: the skew-symmetric spectral first
/// derivative annihilates them by construction, so including them would
/// report a kernel that is an artifact of the derivative convention rather
/// than a degeneracy of the resolved dynamics.
fn zero_mean_orthonormal_basis(grid: crate::grid::TorusGrid) -> Vec<ScalarField> {
    let n = grid.nq();
    let npts = (n * n) as f64;
    let mut out = Vec::with_capacity(n * n - 1);
    for ky in 0..n {
        for kx in 0..n {
            if (kx == 0 && ky == 0) || kx == n / 2 || ky == n / 2 {
                continue;
            }
            let conj = ((n - kx) % n, (n - ky) % n);
            let self_conjugate = conj == (kx, ky);
            if !self_conjugate && (conj.1, conj.0) < (ky, kx) {
                continue;
            }
            let fx = kx as f64;
            let fy = ky as f64;
            if self_conjugate {
                out.push(
                    ScalarField::from_fn(grid, |x, y| (fx * x + fy * y).cos())
                        .scaled(1.0 / npts.sqrt()),
                );
            } else {
                out.push(
                    ScalarField::from_fn(grid, |x, y| (fx * x + fy * y).cos())
                        .scaled((2.0 / npts).sqrt()),
                );
                out.push(
                    ScalarField::from_fn(grid, |x, y| (fx * x + fy * y).sin())
                        .scaled((2.0 / npts).sqrt()),
                );
            }
        }
    }
    out
}

/// Dense certificate of the trivial-intersection property at a state: the
/// linear map from annihilator covectors to (non-constant density response,
/// divergence of the momentum response, phase-space response) is assembled
/// column by column over an orthonormal zero-mean basis of the modes the
/// derivative stencil resolves, and its smallest singular value is
/// returned. A strictly positive value certifies that no nonzero resolved
/// annihilator covector maps into the constraint set's tangent space at
/// this state and resolution.
pub fn poisson_dirac_certificate(
    disc: &Discretization,
    params: &PhysParams,
    s: &QnvpState,
    coarse_nq: usize,
) -> Result<f64> {
    if coarse_nq > 16 {
        return Err(Error::usage(format!(
            "coarse_nq = {coarse_nq} too large for the dense certificate (max 16)"
        )));
    }
    let grid = disc.grid();
    if grid.q.nq() != coarse_nq {
        return Err(Error::usage(format!(
            "certificate state must live on the coarse grid: state has {}, asked for {coarse_nq}",
            grid.q.nq()
        )));
    }
    if s.rho.grid() != grid {
        return Err(Error::grid("state on a different grid than the discretization"));
    }
    let qops = disc.qops();
    let basis = zero_mean_orthonormal_basis(grid.q);
    let half = basis.len();
    let nq2 = grid.q.nq() * grid.q.nq();
    let nv2 = grid.v.nv() * grid.v.nv();
    let rows = 2 * nq2 + nq2 * nv2;
    let zero = ScalarField::zeros(grid.q);
    let mut a = Array2::<f64>::zeros((rows, 2 * half));
    for (j, b) in basis.iter().enumerate() {
        for (col, dn_star, dphi_star) in [(j, b, &zero), (half + j, &zero, b)] {
            let img = annihilator_image(disc, params, s, dn_star, dphi_star)?;
            let mut dn = img.dn;
            dn.add_scalar(-dn.mean());
            let div_dp = qops.divergence(&img.dp);
            for (i, v) in dn.data().iter().enumerate() {
                a[(i, col)] = *v;
            }
            for (i, v) in div_dp.data().iter().enumerate() {
                a[(nq2 + i, col)] = *v;
            }
            for (i, v) in img.drho.data().iter().enumerate() {
                a[(2 * nq2 + i, col)] = *v;
            }
        }
    }
    linalg::smallest_singular_value(&a)
}
