//! Single-particle brackets, the fluid/kinetic Lie algebras and their
//! semidirect product, the duality pairing, and numerical certificates for
//! the Jacobi identity and for the moment map being Poisson.
//!
//! Discrete identities can only close exactly inside the exactness class of
//! the calculus: position dependence band-limited far enough below the grid
//! Nyquist that nested products stay alias-free, velocity dependence
//! polynomial within the stencil's degree. On that class every bracket below
//! equals the sampled continuum bracket, so the continuum identities
//! (antisymmetry, Leibniz, Jacobi, the moment-map commutation relation)
//! transfer to the grid at rounding level. The certificates take arbitrary
//! inputs and report the residual; the test harness feeds them in-class
//! elements.

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::VelocityGrid;
use crate::moments::{moment_map, MomentState};
use crate::params::PhysParams;
use crate::phase::{Discretization, PhaseField, PhaseGrid};
use ndarray::Array2;

/// Guards relative residuals against 0/0 when all inputs vanish.
const NORM_FLOOR: f64 = 1e-300;

/// Element ((psi, u), chi) of the semidirect-product algebra: a fluid pair
/// (scalar plus vector field on position space) acting on a phase-space
/// observable.
#[derive(Debug, Clone)]
pub struct AlgebraElement {
    pub psi: ScalarField,
    pub u: VectorField,
    pub chi: PhaseField,
}

impl AlgebraElement {
    pub fn zero(grid: PhaseGrid) -> Self {
        Self {
            psi: ScalarField::zeros(grid.q),
            u: VectorField::zeros(grid.q),
            chi: PhaseField::zeros(grid),
        }
    }

    /// Combined discrete L2 norm of the three components.
    pub fn norm(&self) -> f64 {
        let p = self.psi.l2_norm();
        let u = self.u.l2_norm();
        let c = self.chi.l2_norm();
        (p * p + u * u + c * c).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.psi.is_finite() && self.u.is_finite() && self.chi.is_finite()
    }
}

/// Differential of a functional of a moment state: components dual to
/// (n, p, distribution).
#[derive(Debug, Clone)]
pub struct Covector {
    pub dn: ScalarField,
    pub dp: VectorField,
    pub drho: PhaseField,
}

impl Covector {
    pub fn zero(grid: PhaseGrid) -> Self {
        Self {
            dn: ScalarField::zeros(grid.q),
            dp: VectorField::zeros(grid.q),
            drho: PhaseField::zeros(grid),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.dn.is_finite() && self.dp.is_finite() && self.drho.is_finite()
    }
}

/// Which single-particle bracket to evaluate: the plain magnetized bracket,
/// or the electron bracket whose rotation weight is corrected by the mean
/// flow vorticity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BracketVariant {
    Bracket0,
    BracketE,
}

/// Core bilinear form shared by both variants:
/// eps (dq h . dv k - dq k . dv h) + w (dv h . J dv k),
/// with J v = (-vy, vx), so a . J b = ay bx - ax by.
fn bracket_with_weight(
    disc: &Discretization,
    epsilon: f64,
    w: &ScalarField,
    h: &PhaseField,
    k: &PhaseField,
) -> PhaseField {
    let (hqx, hqy) = h.q_gradient(disc.qops());
    let (kqx, kqy) = k.q_gradient(disc.qops());
    let (hvx, hvy) = h.velocity_gradient_obs(disc.vops());
    let (kvx, kvy) = k.velocity_gradient_obs(disc.vops());
    let mut out = hqx.mul(&kvx);
    out.axpy(1.0, &hqy.mul(&kvy));
    out.axpy(-1.0, &kqx.mul(&hvx));
    out.axpy(-1.0, &kqy.mul(&hvy));
    out.scale(epsilon);
    let mut rot = hvy.mul(&kvx);
    rot.axpy(-1.0, &hvx.mul(&kvy));
    out.axpy(1.0, &rot.mul_q(w));
    out
}

/// Single-particle Poisson bracket of two phase-space observables.
///
/// `BracketE` subtracts `epsilon * omega` from the magnetic weight and
/// requires the vorticity field.
pub fn particle_bracket(
    disc: &Discretization,
    params: &PhysParams,
    h: &PhaseField,
    k: &PhaseField,
    variant: BracketVariant,
    omega: Option<&ScalarField>,
) -> Result<PhaseField> {
    let w = match variant {
        BracketVariant::Bracket0 => params.b.clone(),
        BracketVariant::BracketE => {
            let om = omega.ok_or_else(|| {
                Error::usage("particle_bracket: the electron variant requires a vorticity field")
            })?;
            let mut w = params.b.clone();
            w.axpy(-params.epsilon, om);
            w
        }
    };
    Ok(bracket_with_weight(disc, params.epsilon, &w, h, k))
}

/// Observable psi + v . u represented by a fluid pair.
pub fn embed(vg: VelocityGrid, psi: &ScalarField, u: &VectorField) -> PhaseField {
    let nv = vg.nv();
    let ones = Array2::from_elem((nv, nv), 1.0);
    let wx = Array2::from_shape_fn((nv, nv), |(_, jx)| vg.coord(jx));
    let wy = Array2::from_shape_fn((nv, nv), |(jy, _)| vg.coord(jy));
    let mut out =
        PhaseField::from_q_v_product(psi, vg, &ones).expect("weights built on matching grid");
    out.axpy(
        1.0,
        &PhaseField::from_q_v_product(&u.x, vg, &wx).expect("weights built on matching grid"),
    );
    out.axpy(
        1.0,
        &PhaseField::from_q_v_product(&u.y, vg, &wy).expect("weights built on matching grid"),
    );
    out
}

/// The full observable of an algebra element: embed(psi, u) + chi. Pairing a
/// moment state against the element integrates this against the distribution.
pub fn total_observable(disc: &Discretization, a: &AlgebraElement) -> PhaseField {
    let mut out = embed(disc.grid().v, &a.psi, &a.u);
    out.axpy(1.0, &a.chi);
    out
}

/// Fluid bracket on pairs (psi, u):
/// ( -[eps (u1 . dq psi2 - u2 . dq psi1) - w u1 . J u2],
///   -eps (u1 . dq u2 - u2 . dq u1) ).
pub fn lie_bracket_h(
    disc: &Discretization,
    params: &PhysParams,
    a: (&ScalarField, &VectorField),
    b: (&ScalarField, &VectorField),
) -> (ScalarField, VectorField) {
    let qops = disc.qops();
    let (psi1, u1) = a;
    let (psi2, u2) = b;
    let g1 = qops.gradient(psi1);
    let g2 = qops.gradient(psi2);
    // psi component
    let mut psi = u1.dot(&g2);
    psi.axpy(-1.0, &u2.dot(&g1));
    psi.scale(-params.epsilon);
    // a . J b = ay bx - ax by
    let mut jterm = u1.y.mul(&u2.x);
    jterm.axpy(-1.0, &u1.x.mul(&u2.y));
    psi.axpy(1.0, &jterm.mul(&params.b));
    // u component: -eps of the commutator of convective derivatives
    let conv = |u: &VectorField, w: &VectorField| -> VectorField {
        VectorField::new(u.dot(&qops.gradient(&w.x)), u.dot(&qops.gradient(&w.y)))
            .expect("components share the grid")
    };
    let mut u = conv(u1, u2);
    u.axpy(-1.0, &conv(u2, u1));
    let u = u.scaled(-params.epsilon);
    (psi, u)
}

/// Semidirect-product bracket: the fluid bracket on the pair parts, and on
/// the observable part the particle bracket of the chis plus the derivation
/// action of each pair on the other's chi.
pub fn lie_bracket_s(
    disc: &Discretization,
    params: &PhysParams,
    a: &AlgebraElement,
    b: &AlgebraElement,
) -> AlgebraElement {
    let (psi, u) = lie_bracket_h(disc, params, (&a.psi, &a.u), (&b.psi, &b.u));
    let mut chi = bracket_with_weight(disc, params.epsilon, &params.b, &a.chi, &b.chi);
    let ea = embed(disc.grid().v, &a.psi, &a.u);
    let eb = embed(disc.grid().v, &b.psi, &b.u);
    chi.axpy(
        1.0,
        &bracket_with_weight(disc, params.epsilon, &params.b, &ea, &b.chi),
    );
    chi.axpy(
        -1.0,
        &bracket_with_weight(disc, params.epsilon, &params.b, &eb, &a.chi),
    );
    AlgebraElement { psi, u, chi }
}

/// Duality pairing of a moment state with an algebra element:
/// int psi n + int u . p + int chi f.
pub fn pairing(m: &MomentState, a: &AlgebraElement) -> Result<f64> {
    if m.centered {
        return Err(Error::usage(
            "pairing expects an uncentered moment state (distribution in total velocity)",
        ));
    }
    Ok(m.n.inner(&a.psi) + m.p.inner(&a.u) + m.dist.inner(&a.chi))
}

/// Relative L2 residual of the Jacobi identity for the semidirect bracket on
/// three elements.
pub fn jacobi_residual(
    disc: &Discretization,
    params: &PhysParams,
    a: &AlgebraElement,
    b: &AlgebraElement,
    c: &AlgebraElement,
) -> f64 {
    let nest = |x: &AlgebraElement, y: &AlgebraElement, z: &AlgebraElement| {
        let inner = lie_bracket_s(disc, params, y, z);
        lie_bracket_s(disc, params, x, &inner)
    };
    let mut sum = nest(a, b, c);
    let t2 = nest(b, c, a);
    let t3 = nest(c, a, b);
    sum.psi.axpy(1.0, &t2.psi);
    sum.psi.axpy(1.0, &t3.psi);
    sum.u.axpy(1.0, &t2.u);
    sum.u.axpy(1.0, &t3.u);
    sum.chi.axpy(1.0, &t2.chi);
    sum.chi.axpy(1.0, &t3.chi);
    sum.norm() / (a.norm() * b.norm() * c.norm() + NORM_FLOOR)
}

/// Absolute defect of the moment map being Poisson, evaluated through two
/// independent routes. The first route treats each element as the linear
/// functional it induces on distributions and applies the kinetic Poisson
/// bracket (integrate the particle bracket of the two total observables
/// against f); the second pairs the collected state with the algebra
/// bracket.
pub fn poisson_map_residual(
    disc: &Discretization,
    params: &PhysParams,
    f: &PhaseField,
    a: &AlgebraElement,
    b: &AlgebraElement,
) -> Result<f64> {
    let ea = total_observable(disc, a);
    let eb = total_observable(disc, b);
    let lhs = bracket_with_weight(disc, params.epsilon, &params.b, &ea, &eb).inner(f);
    let rhs = pairing(&moment_map(f), &lie_bracket_s(disc, params, a, b))?;
    Ok((lhs - rhs).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TorusGrid;
    use crate::synth;

    fn setup(nq: usize, nv: usize) -> (Discretization, PhysParams) {
        let grid = PhaseGrid::new(
            TorusGrid::new(nq).unwrap(),
            VelocityGrid::new(nv, 6.0).unwrap(),
        );
        let disc = Discretization::new(grid);
        // gently varying magnetic field keeps the rotation terms honest
        let b = ScalarField::from_fn(grid.q, |x, _| 1.0 + 0.3 * x.cos());
        let params = PhysParams::new(0.7, 1.0, 0.1, b).unwrap();
        (disc, params)
    }

    #[test]
    fn frozen_single_term_examples() {
        let (disc, params) = setup(16, 16);
        let grid = disc.grid();
        let unit = PhysParams::uniform(grid.q, 1.0, 1.0, 0.1, 1.0).unwrap();
        // {sin x, vx} = cos x at eps = 1
        let h = PhaseField::from_fn(grid, |x, _, _, _| x.sin());
        let k = PhaseField::from_fn(grid, |_, _, vx, _| vx);
        let got = particle_bracket(&disc, &unit, &h, &k, BracketVariant::Bracket0, None).unwrap();
        let want = PhaseField::from_fn(grid, |x, _, _, _| x.cos());
        assert!(got.linf_distance(&want) < 1e-12);
        // {vx, vy} = -B, here with a varying field
        let vx = PhaseField::from_fn(grid, |_, _, vx, _| vx);
        let vy = PhaseField::from_fn(grid, |_, _, _, vy| vy);
        let got = particle_bracket(&disc, &params, &vx, &vy, BracketVariant::Bracket0, None).unwrap();
        let want = PhaseField::from_fn(grid, |x, _, _, _| -(1.0 + 0.3 * x.cos()));
        assert!(got.linf_distance(&want) < 1e-12);
    }

    #[test]
    fn bracket_antisymmetry_on_random_observables() {
        let (disc, params) = setup(32, 16);
        let h = synth::poly_observable(disc.grid(), 4, 2, 1);
        let k = synth::poly_observable(disc.grid(), 4, 2, 2);
        let hk = particle_bracket(&disc, &params, &h, &k, BracketVariant::Bracket0, None).unwrap();
        let kh = particle_bracket(&disc, &params, &k, &h, BracketVariant::Bracket0, None).unwrap();
        let mut sum = hk.clone();
        sum.axpy(1.0, &kh);
        assert!(sum.max_abs() < 1e-13 * hk.max_abs().max(1.0));
        // electron variant: same check, and the omega requirement
        let om = synth::band_limited_scalar(disc.grid().q, 3, 7);
        let he = particle_bracket(&disc, &params, &h, &k, BracketVariant::BracketE, Some(&om))
            .unwrap();
        let ke = particle_bracket(&disc, &params, &k, &h, BracketVariant::BracketE, Some(&om))
            .unwrap();
        let mut sume = he.clone();
        sume.axpy(1.0, &ke);
        assert!(sume.max_abs() < 1e-13 * he.max_abs().max(1.0));
        let missing = particle_bracket(&disc, &params, &h, &k, BracketVariant::BracketE, None);
        assert!(missing.unwrap_err().to_string().contains("vorticity"));
    }

    #[test]
    fn leibniz_rule_for_particle_bracket() {
        let (disc, params) = setup(32, 16);
        // v-degree 1 factors keep the product inside the quartic exactness
        // class; position bands 4+4+4 stay below the Nyquist mode
        let h = synth::poly_observable(disc.grid(), 4, 1, 11);
        let k = synth::poly_observable(disc.grid(), 4, 1, 12);
        let m = synth::poly_observable(disc.grid(), 4, 1, 13);
        let km = k.mul(&m);
        let lhs = particle_bracket(&disc, &params, &h, &km, BracketVariant::Bracket0, None).unwrap();
        let hk = particle_bracket(&disc, &params, &h, &k, BracketVariant::Bracket0, None).unwrap();
        let hm = particle_bracket(&disc, &params, &h, &m, BracketVariant::Bracket0, None).unwrap();
        let mut rhs = hk.mul(&m);
        rhs.axpy(1.0, &k.mul(&hm));
        let scale = lhs.max_abs().max(1.0);
        assert!(
            lhs.linf_distance(&rhs) < 1e-10 * scale,
            "Leibniz defect {:.3e}",
            lhs.linf_distance(&rhs) / scale
        );
    }

    #[test]
    fn fluid_bracket_closes_and_matches_the_embedding() {
        let (disc, params) = setup(32, 16);
        let grid = disc.grid();
        let a = synth::random_algebra_element(grid, 4, 0, 21);
        let b = synth::random_algebra_element(grid, 4, 0, 22);
        // two pure-scalar elements commute
        let sa = AlgebraElement {
            psi: a.psi.clone(),
            ..AlgebraElement::zero(grid)
        };
        let sb = AlgebraElement {
            psi: b.psi.clone(),
            ..AlgebraElement::zero(grid)
        };
        let z = lie_bracket_s(&disc, &params, &sa, &sb);
        assert!(z.norm() == 0.0);
        // zero chi inputs give exactly zero chi output (the fluid algebra
        // closes)
        let fa = AlgebraElement {
            chi: PhaseField::zeros(grid),
            ..a.clone()
        };
        let fb = AlgebraElement {
            chi: PhaseField::zeros(grid),
            ..b.clone()
        };
        let fab = lie_bracket_s(&disc, &params, &fa, &fb);
        assert!(fab.chi.max_abs() == 0.0);
        // embedding homomorphism, dual route: the particle bracket of the
        // embedded observables against the embedded fluid bracket
        let ea = embed(grid.v, &fa.psi, &fa.u);
        let eb = embed(grid.v, &fb.psi, &fb.u);
        let lhs = particle_bracket(&disc, &params, &ea, &eb, BracketVariant::Bracket0, None).unwrap();
        let rhs = embed(grid.v, &fab.psi, &fab.u);
        let scale = lhs.max_abs().max(1.0);
        assert!(
            lhs.linf_distance(&rhs) < 1e-10 * scale,
            "embedding defect {:.3e}",
            lhs.linf_distance(&rhs) / scale
        );
    }

    #[test]
    fn pairing_examples_and_bilinearity() {
        let (disc, _) = setup(16, 32);
        let grid = disc.grid();
        let f = synth::random_distribution(grid, 3, 5);
        let m = moment_map(&f);
        // psi = 1 pairs to the total mass
        let mut unit = AlgebraElement::zero(grid);
        unit.psi = ScalarField::constant(grid.q, 1.0);
        let total = pairing(&m, &unit).unwrap();
        assert!((total - f.integral()).abs() < 1e-12 * total.abs());
        // full bilinearity
        let a = synth::random_algebra_element(grid, 3, 2, 31);
        let b = synth::random_algebra_element(grid, 3, 2, 32);
        let mut combo = a.clone();
        combo.psi.axpy(2.0, &b.psi);
        combo.u.axpy(2.0, &b.u);
        combo.chi.axpy(2.0, &b.chi);
        let lhs = pairing(&m, &combo).unwrap();
        let rhs = pairing(&m, &a).unwrap() + 2.0 * pairing(&m, &b).unwrap();
        assert!((lhs - rhs).abs() < 1e-13 * (lhs.abs() + rhs.abs() + 1.0));
        // centered states are rejected
        let centered = crate::moments::transform_e(&m).unwrap();
        assert!(pairing(&centered, &a).is_err());
        // zero state pairs to zero
        let zero = moment_map(&PhaseField::zeros(grid));
        assert_eq!(pairing(&zero, &a).unwrap(), 0.0);
    }

    #[test]
    fn jacobi_identity_closes_on_the_exactness_class() {
        let (disc, params) = setup(32, 12);
        let grid = disc.grid();
        let a = synth::random_algebra_element(grid, 4, 2, 101);
        let b = synth::random_algebra_element(grid, 4, 2, 102);
        let c = synth::random_algebra_element(grid, 4, 2, 103);
        let r = jacobi_residual(&disc, &params, &a, &b, &c);
        assert!(r < 1e-10, "Jacobi residual {r:.3e}");
        // repeated slot collapses
        let rr = jacobi_residual(&disc, &params, &a, &b, &a);
        assert!(rr < 1e-10, "repeated-slot residual {rr:.3e}");
        // zero slot gives exactly zero numerator
        let z = AlgebraElement::zero(grid);
        assert_eq!(jacobi_residual(&disc, &params, &a, &z, &c), 0.0);
    }

    #[test]
    fn jacobi_identity_at_doubled_resolution() {
        let (disc, params) = setup(64, 12);
        let grid = disc.grid();
        let a = synth::random_algebra_element(grid, 8, 2, 201);
        let b = synth::random_algebra_element(grid, 8, 2, 202);
        let c = synth::random_algebra_element(grid, 8, 2, 203);
        let r = jacobi_residual(&disc, &params, &a, &b, &c);
        assert!(r < 1e-10, "Jacobi residual {r:.3e}");
    }

    #[test]
    fn moment_map_is_poisson() {
        let (disc, params) = setup(32, 16);
        let grid = disc.grid();
        let f = synth::random_distribution(grid, 3, 77);
        let a = synth::random_algebra_element(grid, 4, 2, 301);
        let b = synth::random_algebra_element(grid, 4, 2, 302);
        let scale = f.l2_norm() * a.norm() * b.norm();
        let r = poisson_map_residual(&disc, &params, &f, &a, &b).unwrap();
        assert!(r < 1e-9 * scale, "commutation defect {:.3e}", r / scale);
        // the identity is structural: it holds for rough distributions too
        let noisy = {
            use rand::prelude::*;
            use rand_chacha::ChaCha8Rng;
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let nq = grid.q.nq();
            let nv = grid.v.nv();
            let data = ndarray::Array4::from_shape_fn((nq, nq, nv, nv), |_| {
                rng.random::<f64>() - 0.5
            });
            PhaseField::from_array(grid, data).unwrap()
        };
        let rn = poisson_map_residual(&disc, &params, &noisy, &a, &b).unwrap();
        let nscale = noisy.l2_norm() * a.norm() * b.norm();
        assert!(rn < 1e-9 * nscale, "noisy defect {:.3e}", rn / nscale);
        // antisymmetric configurations vanish on both routes
        let raa = poisson_map_residual(&disc, &params, &f, &a, &a).unwrap();
        assert!(raa < 1e-12 * scale);
        let zf = PhaseField::zeros(grid);
        assert_eq!(poisson_map_residual(&disc, &params, &zf, &a, &b).unwrap(), 0.0);
    }
}
