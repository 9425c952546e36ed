//! Fixed-step explicit time integration with conservation diagnostics,
//! temporal-spectrum measurement for oscillation frequencies, and log-log
//! scaling fits.
//!
//! Only classical fourth-order Runge-Kutta is provided: the verification
//! suites lean on clean fourth-order self-convergence and bitwise
//! determinism, which adaptive stepping would muddy. Constraint projection
//! (zero means, solenoidal momentum) runs once per accepted step, not per
//! stage; the drift that reintroduces is O(dt^5) per step and the
//! projections are energy-neutral to rounding on constrained states.
//!
//! Stability is the caller's problem, by design. As a rule of thumb the
//! step should satisfy dt <~ min(0.2 delta / (epsilon sqrt(n0)),
//! 0.5 / max|B|, dv / (epsilon max-acceleration), dq / (epsilon vmax));
//! beyond that the run blows up and the driver reports a divergence error
//! with the partial series rather than guessing a safe step.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::moments::MomentState;
use crate::params::PhysParams;
use crate::phase::{Discretization, PhaseField};
use crate::qnvp::{qnvp_rhs, QnvpRates, QnvpState};
use crate::spectral::SpectralOps;
use crate::vp::{
    fastslow_rhs, hamiltonian_e, hamiltonian_vp, langmuir_rhs, vp_rhs_f, FastSlowMode,
    FastSlowRates, FastSlowState,
};

/// Channel names every model reports, in recording order. The two mode
/// channels hold the signed in-phase coefficient of the (1,0) Fourier mode
/// rather than its magnitude: the signed trace oscillates at the physical
/// frequency, where the folded magnitude would read back doubled.
pub const DIAGNOSTIC_CHANNELS: [&str; 6] = [
    "H",
    "mass",
    "div_norm",
    "ntilde_k10_amp",
    "phi_k10_amp",
    "min_rho",
];

/// Uniformly named diagnostic sequences against a shared time axis.
#[derive(Debug, Clone)]
pub struct TimeSeries {
    times: Vec<f64>,
    names: Vec<String>,
    channels: Vec<Vec<f64>>,
}

impl TimeSeries {
    pub fn new(names: &[&str]) -> TimeSeries {
        TimeSeries {
            times: Vec::new(),
            names: names.iter().map(|s| s.to_string()).collect(),
            channels: vec![Vec::new(); names.len()],
        }
    }

    /// Append one sample row. Times must arrive strictly increasing and the
    /// row must match the channel count.
    pub fn push(&mut self, t: f64, row: &[f64]) -> Result<()> {
        if row.len() != self.channels.len() {
            return Err(Error::usage(format!(
                "sample row has {} values for {} channels",
                row.len(),
                self.channels.len()
            )));
        }
        if let Some(&last) = self.times.last() {
            if t <= last {
                return Err(Error::usage(format!(
                    "sample times must be strictly increasing: {t} after {last}"
                )));
            }
        }
        self.times.push(t);
        for (c, v) in self.channels.iter_mut().zip(row) {
            c.push(*v);
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn channel(&self, name: &str) -> Result<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.channels[i].as_slice())
            .ok_or_else(|| Error::usage(format!("no channel named {name:?}")))
    }
}

/// Which system a run integrates. Carried by the config for dispatch at the
/// driver level; the integrator itself is generic over the state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    VpF,
    VpFastSlow,
    Qnvp,
    Langmuir,
}

/// Step size, horizon, and sampling cadence for one integration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub dt: f64,
    pub t_final: f64,
    pub sample_stride: usize,
    pub model: ModelKind,
}

impl RunConfig {
    pub fn new(dt: f64, t_final: f64, sample_stride: usize, model: ModelKind) -> Result<RunConfig> {
        let cfg = RunConfig {
            dt,
            t_final,
            sample_stride,
            model,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::usage(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final.is_finite() && self.t_final >= self.dt) {
            return Err(Error::usage(format!(
                "t_final {} must be at least one step dt {}",
                self.t_final, self.dt
            )));
        }
        if self.sample_stride == 0 {
            return Err(Error::usage("sample_stride must be positive".to_string()));
        }
        Ok(())
    }

    /// Whole steps inside the horizon; the last partial step is dropped.
    pub fn steps(&self) -> usize {
        ((self.t_final / self.dt) + 1e-9).floor() as usize
    }
}

/// Weighted accumulation, the only arithmetic the stage combination needs.
pub trait RateCombine {
    fn accumulate(&mut self, alpha: f64, other: &Self);
}

/// State plumbing for the stepper: advance along a rate, re-enforce the
/// model's constraints, and admit a finiteness check.
pub trait Integrable: Clone {
    type Rate: RateCombine;
    fn advance(&mut self, dt: f64, rate: &Self::Rate);
    fn enforce_constraints(&mut self, disc: &Discretization);
    fn is_finite(&self) -> bool;
}

/// A system the driver can run unattended: its vector field and one row of
/// diagnostics matching [`DIAGNOSTIC_CHANNELS`].
pub trait Model: Integrable {
    fn rhs(&self, disc: &Discretization, params: &PhysParams) -> Result<Self::Rate>;
    fn diagnostics(&self, disc: &Discretization, params: &PhysParams) -> Result<[f64; 6]>;
}

/// One classical Runge-Kutta step with post-step constraint projection.
/// A non-finite result is a divergence error (reported as step 0; the
/// driver rewraps it with the real step index).
pub fn rk4_step<S: Integrable>(
    disc: &Discretization,
    state: &S,
    rhs: &mut impl FnMut(&S) -> Result<S::Rate>,
    dt: f64,
) -> Result<S> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::usage(format!("rk4 step size must be positive, got {dt}")));
    }
    let k1 = rhs(state)?;
    let mut y = state.clone();
    y.advance(0.5 * dt, &k1);
    let k2 = rhs(&y)?;
    y = state.clone();
    y.advance(0.5 * dt, &k2);
    let k3 = rhs(&y)?;
    y = state.clone();
    y.advance(dt, &k3);
    let k4 = rhs(&y)?;
    let mut k = k1;
    k.accumulate(2.0, &k2);
    k.accumulate(2.0, &k3);
    k.accumulate(1.0, &k4);
    let mut out = state.clone();
    out.advance(dt / 6.0, &k);
    out.enforce_constraints(disc);
    if !out.is_finite() {
        return Err(Error::Diverged { step: 0, time: 0.0 });
    }
    Ok(out)
}

/// Drive a model from `init` to the horizon, recording diagnostics at t = 0
/// and then every `sample_stride` steps. The series is always returned;
/// on blowup the result carries the divergence error and the series holds
/// everything sampled before it.
pub fn integrate<S: Model>(
    disc: &Discretization,
    params: &PhysParams,
    init: S,
    config: &RunConfig,
) -> (TimeSeries, Result<S>) {
    let mut series = TimeSeries::new(&DIAGNOSTIC_CHANNELS);
    if let Err(e) = config.validate() {
        return (series, Err(e));
    }
    let mut state = init;
    let sample = |series: &mut TimeSeries, s: &S, t: f64| -> Result<()> {
        let row = s.diagnostics(disc, params)?;
        series.push(t, &row)
    };
    if let Err(e) = sample(&mut series, &state, 0.0) {
        return (series, Err(e));
    }
    let steps = config.steps();
    for step in 1..=steps {
        let t = step as f64 * config.dt;
        match rk4_step(disc, &state, &mut |s: &S| s.rhs(disc, params), config.dt) {
            Ok(next) => state = next,
            Err(_) => {
                return (
                    series,
                    Err(Error::Diverged {
                        step,
                        time: (step - 1) as f64 * config.dt,
                    }),
                );
            }
        }
        if step % config.sample_stride == 0 {
            if let Err(e) = sample(&mut series, &state, t) {
                return (series, Err(e));
            }
        }
    }
    (series, Ok(state))
}

// ---------------------------------------------------------------------------
// model wiring
// ---------------------------------------------------------------------------

impl RateCombine for PhaseField {
    fn accumulate(&mut self, alpha: f64, other: &Self) {
        self.axpy(alpha, other);
    }
}

/// Full kinetic model: the state is the distribution itself.
impl Integrable for PhaseField {
    type Rate = PhaseField;

    fn advance(&mut self, dt: f64, rate: &Self::Rate) {
        self.axpy(dt, rate);
    }

    fn enforce_constraints(&mut self, _disc: &Discretization) {}

    fn is_finite(&self) -> bool {
        PhaseField::is_finite(self)
    }
}

impl Model for PhaseField {
    fn rhs(&self, disc: &Discretization, params: &PhysParams) -> Result<Self::Rate> {
        vp_rhs_f(disc, params, self)
    }

    fn diagnostics(&self, disc: &Discretization, params: &PhysParams) -> Result<[f64; 6]> {
        let qops = disc.qops();
        let n = self.moment0();
        let p = self.moment1();
        let phi = qops.solve_electrostatic_potential(&n, params.delta, params.lambda)?;
        Ok([
            hamiltonian_vp(disc, params, self)?,
            self.integral(),
            qops.divergence(&p).l2_norm(),
            qops.cosine_coefficient(&n, 1, 0),
            qops.cosine_coefficient(&phi, 1, 0),
            self.min(),
        ])
    }
}

impl RateCombine for FastSlowRates {
    fn accumulate(&mut self, alpha: f64, other: &Self) {
        self.axpy(alpha, other);
    }
}

impl Integrable for FastSlowState {
    type Rate = FastSlowRates;

    fn advance(&mut self, dt: f64, rate: &Self::Rate) {
        FastSlowState::advance(self, dt, rate);
    }

    fn enforce_constraints(&mut self, disc: &Discretization) {
        self.project(disc.qops());
    }

    fn is_finite(&self) -> bool {
        FastSlowState::is_finite(self)
    }
}

/// Fast-slow model, integrated through the coordinate-change route (the
/// expanded printed equations are a cross-check, not the driver).
impl Model for FastSlowState {
    fn rhs(&self, disc: &Discretization, params: &PhysParams) -> Result<Self::Rate> {
        fastslow_rhs(disc, params, self, FastSlowMode::Transformed)
    }

    fn diagnostics(&self, disc: &Discretization, params: &PhysParams) -> Result<[f64; 6]> {
        let qops = disc.qops();
        let ms: MomentState = self.moment_state(disc, params)?;
        let (h, _) = hamiltonian_e(disc, params, &ms)?;
        Ok([
            h,
            ms.n.mul(&ms.dist.moment0()).integral(),
            qops.divergence(self.pi()).l2_norm(),
            qops.cosine_coefficient(self.ntilde(), 1, 0),
            qops.cosine_coefficient(self.phi(), 1, 0),
            self.rho().min(),
        ])
    }
}

impl RateCombine for QnvpRates {
    fn accumulate(&mut self, alpha: f64, other: &Self) {
        self.axpy(alpha, other);
    }
}

impl Integrable for QnvpState {
    type Rate = QnvpRates;

    fn advance(&mut self, dt: f64, rate: &Self::Rate) {
        QnvpState::advance(self, dt, rate);
    }

    fn enforce_constraints(&mut self, disc: &Discretization) {
        self.project(disc.qops());
    }

    fn is_finite(&self) -> bool {
        QnvpState::is_finite(self)
    }
}

/// Quasineutral limit model. It has no fast potential or density remainder,
/// so both mode channels read zero.
impl Model for QnvpState {
    fn rhs(&self, disc: &Discretization, params: &PhysParams) -> Result<Self::Rate> {
        qnvp_rhs(disc, params, self)
    }

    fn diagnostics(&self, disc: &Discretization, _params: &PhysParams) -> Result<[f64; 6]> {
        let qops = disc.qops();
        let (h, _) = crate::qnvp::hamiltonian_sigma(disc, self)?;
        Ok([
            h,
            self.n0() * self.rho().integral(),
            qops.divergence(self.pi()).l2_norm(),
            0.0,
            0.0,
            self.rho().min(),
        ])
    }
}

/// Linearized fast-oscillation pair around a uniform density, for
/// frequency measurements against the dispersion relation.
#[derive(Debug, Clone)]
pub struct LangmuirState {
    n0: f64,
    ntilde: ScalarField,
    phi: ScalarField,
}

impl LangmuirState {
    pub fn new(
        qops: &SpectralOps,
        n0: f64,
        mut ntilde: ScalarField,
        mut phi: ScalarField,
    ) -> Result<LangmuirState> {
        if !(n0.is_finite() && n0 > 0.0) {
            return Err(Error::usage(format!(
                "langmuir state needs a positive mean density, got {n0}"
            )));
        }
        if !(ntilde.is_finite() && phi.is_finite()) {
            return Err(Error::NonFiniteInput {
                context: "langmuir state",
            });
        }
        if ntilde.grid() != qops.grid() || phi.grid() != qops.grid() {
            return Err(Error::grid("langmuir state components on mismatched grids"));
        }
        ntilde.add_scalar(-ntilde.mean());
        phi.add_scalar(-phi.mean());
        Ok(LangmuirState { n0, ntilde, phi })
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
}

#[derive(Debug, Clone)]
pub struct LangmuirRates {
    pub dntilde: ScalarField,
    pub dphi: ScalarField,
}

impl RateCombine for LangmuirRates {
    fn accumulate(&mut self, alpha: f64, other: &Self) {
        self.dntilde.axpy(alpha, &other.dntilde);
        self.dphi.axpy(alpha, &other.dphi);
    }
}

impl Integrable for LangmuirState {
    type Rate = LangmuirRates;

    fn advance(&mut self, dt: f64, rate: &Self::Rate) {
        self.ntilde.axpy(dt, &rate.dntilde);
        self.phi.axpy(dt, &rate.dphi);
    }

    fn enforce_constraints(&mut self, _disc: &Discretization) {
        self.ntilde.add_scalar(-self.ntilde.mean());
        self.phi.add_scalar(-self.phi.mean());
    }

    fn is_finite(&self) -> bool {
        self.n0.is_finite() && self.ntilde.is_finite() && self.phi.is_finite()
    }
}

/// The oscillation-pair model. Its energy channel is the quadratic
/// invariant n0 <ntilde, -inv_laplacian ntilde> + |grad phi|^2, conserved
/// exactly by the pair in continuous time; there is no distribution, so
/// the minimum channel reads zero.
impl Model for LangmuirState {
    fn rhs(&self, disc: &Discretization, params: &PhysParams) -> Result<Self::Rate> {
        let (dntilde, dphi) = langmuir_rhs(disc.qops(), params, self.n0, &self.ntilde, &self.phi)?;
        Ok(LangmuirRates { dntilde, dphi })
    }

    fn diagnostics(&self, disc: &Discretization, _params: &PhysParams) -> Result<[f64; 6]> {
        let qops = disc.qops();
        let green = qops.inv_laplacian_zero_mean(&self.ntilde);
        let h = -self.n0 * self.ntilde.inner(&green)
            + qops.gradient(&self.phi).norm_sq().integral();
        Ok([
            h,
            self.n0 * TAU * TAU,
            0.0,
            qops.cosine_coefficient(&self.ntilde, 1, 0),
            qops.cosine_coefficient(&self.phi, 1, 0),
            0.0,
        ])
    }
}

// ---------------------------------------------------------------------------
// measurement
// ---------------------------------------------------------------------------

/// Dominant angular frequency and calibrated amplitude of one channel.
///
/// The channel is mean-removed, Hann-windowed, and transformed; the peak
/// bin is refined by a three-point parabola and the amplitude is read off
/// against the window's own response at that fractional offset, so a pure
/// sinusoid of amplitude a reports a to within two percent. Requires at
/// least 64 uniformly spaced samples. An identically zero channel reports
/// (0, 0).
pub fn dominant_oscillation(series: &TimeSeries, channel: &str) -> Result<(f64, f64)> {
    let xs = series.channel(channel)?;
    let n = xs.len();
    if n < 64 {
        return Err(Error::usage(format!(
            "dominant_oscillation needs at least 64 samples, got {n}"
        )));
    }
    let times = series.times();
    let dt = times[1] - times[0];
    for w in times.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-6 * dt {
            return Err(Error::usage(
                "dominant_oscillation needs uniform sampling".to_string(),
            ));
        }
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let window: Vec<f64> = (0..n)
        .map(|j| 0.5 * (1.0 - (TAU * j as f64 / n as f64).cos()))
        .collect();
    let mut buf: Vec<Complex64> = xs
        .iter()
        .zip(&window)
        .map(|(x, w)| Complex64::new((x - mean) * w, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    let (mut peak, mut peak_mag) = (1usize, 0.0f64);
    for (k, v) in buf.iter().enumerate().take(half + 1).skip(1) {
        let m = v.norm();
        if m > peak_mag {
            peak_mag = m;
            peak = k;
        }
    }
    if peak_mag == 0.0 {
        return Ok((0.0, 0.0));
    }
    let alpha = buf[peak - 1].norm();
    let gamma = if peak + 1 < n { buf[peak + 1].norm() } else { 0.0 };
    let denom = alpha - 2.0 * peak_mag + gamma;
    let delta = if denom.abs() < 1e-300 {
        0.0
    } else {
        (0.5 * (alpha - gamma) / denom).clamp(-0.5, 0.5)
    };
    let freq = (peak as f64 + delta) * TAU / (n as f64 * dt);
    // window response to a unit cosine at this fractional bin offset
    let mut response = Complex64::new(0.0, 0.0);
    for (j, w) in window.iter().enumerate() {
        let phase = TAU * delta * j as f64 / n as f64;
        response += Complex64::new(w * phase.cos(), w * phase.sin());
    }
    let amplitude = peak_mag / (0.5 * response.norm());
    Ok((freq, amplitude))
}

/// Least-squares power-law fit: slope, intercept, and r-squared of the line
/// through (ln x, ln y). All data must be positive and at least two points
/// are required.
pub fn scaling_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() {
        return Err(Error::usage(format!(
            "scaling_fit needs matching lengths, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::usage(format!(
            "scaling_fit needs at least two points, got {}",
            xs.len()
        )));
    }
    if xs.iter().chain(ys).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::usage(
            "scaling_fit needs strictly positive finite data".to_string(),
        ));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::usage(
            "scaling_fit needs at least two distinct x values".to_string(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ly.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok((slope, intercept, r2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::VectorField;
    use crate::grid::{TorusGrid, VelocityGrid};
    use crate::phase::PhaseGrid;
    use crate::synth::{band_limited_scalar, band_limited_vector, discrete_maxwellian};

    fn coarse() -> Discretization {
        Discretization::new(PhaseGrid::new(
            TorusGrid::new(8).unwrap(),
            VelocityGrid::new(32, 6.0).unwrap(),
        ))
    }

    /// Planar rotation toy with a known exact solution.
    #[derive(Debug, Clone)]
    struct Spin(f64, f64);

    impl RateCombine for Spin {
        fn accumulate(&mut self, alpha: f64, other: &Self) {
            self.0 += alpha * other.0;
            self.1 += alpha * other.1;
        }
    }

    impl Integrable for Spin {
        type Rate = Spin;
        fn advance(&mut self, dt: f64, rate: &Self::Rate) {
            self.0 += dt * rate.0;
            self.1 += dt * rate.1;
        }
        fn enforce_constraints(&mut self, _disc: &Discretization) {}
        fn is_finite(&self) -> bool {
            self.0.is_finite() && self.1.is_finite()
        }
    }

    fn spin_rhs(s: &Spin) -> Result<Spin> {
        Ok(Spin(-s.1, s.0))
    }

    #[test]
    fn time_series_enforces_its_invariants() {
        let mut ts = TimeSeries::new(&["a", "b"]);
        ts.push(0.0, &[1.0, 2.0]).unwrap();
        ts.push(0.5, &[3.0, 4.0]).unwrap();
        assert_eq!(ts.len(), 2);
        assert_eq!(ts.channel("b").unwrap(), &[2.0, 4.0]);
        assert!(ts.channel("missing").is_err());
        assert!(ts.push(0.5, &[0.0, 0.0]).is_err());
        assert!(ts.push(1.0, &[0.0]).is_err());
    }

    #[test]
    fn run_config_rejects_bad_parameters() {
        assert!(RunConfig::new(0.0, 1.0, 1, ModelKind::Qnvp).is_err());
        assert!(RunConfig::new(-0.1, 1.0, 1, ModelKind::Qnvp).is_err());
        assert!(RunConfig::new(0.5, 0.2, 1, ModelKind::Qnvp).is_err());
        assert!(RunConfig::new(0.1, 1.0, 0, ModelKind::Qnvp).is_err());
        let cfg = RunConfig::new(0.1, 1.0, 3, ModelKind::Langmuir).unwrap();
        assert_eq!(cfg.steps(), 10);
    }

    #[test]
    fn rk4_matches_the_rotation_to_fifth_order() {
        let disc = coarse();
        // zero stays zero
        let z = rk4_step(&disc, &Spin(0.0, 0.0), &mut spin_rhs, 0.1).unwrap();
        assert_eq!((z.0, z.1), (0.0, 0.0));
        // nonpositive step is a usage error
        assert!(rk4_step(&disc, &Spin(1.0, 0.0), &mut spin_rhs, 0.0).is_err());
        // one-step error sits at the fifth-order coefficient of the
        // rotation (|local error| = dt^5/120 + higher order)
        let err = |dt: f64| {
            let s = rk4_step(&disc, &Spin(1.0, 0.0), &mut spin_rhs, dt).unwrap();
            ((s.0 - dt.cos()).powi(2) + (s.1 - dt.sin()).powi(2)).sqrt()
        };
        let e1 = err(0.1);
        assert!(e1 < 0.1f64.powi(5) / 50.0 && e1 > 0.1f64.powi(5) / 500.0, "{e1:e}");
        let ratio = e1 / err(0.05);
        assert!((ratio - 32.0).abs() < 7.0, "local ratio {ratio}");
    }

    #[test]
    fn rk4_self_convergence_is_fourth_order_globally() {
        let disc = coarse();
        let dts = [0.1f64, 0.05, 0.025, 0.0125];
        let mut errs = Vec::new();
        for &dt in &dts {
            let steps = (1.0 / dt).round() as usize;
            let mut s = Spin(1.0, 0.0);
            for _ in 0..steps {
                s = rk4_step(&disc, &s, &mut spin_rhs, dt).unwrap();
            }
            let t = steps as f64 * dt;
            errs.push(((s.0 - t.cos()).powi(2) + (s.1 - t.sin()).powi(2)).sqrt());
        }
        let (slope, _, r2) = scaling_fit(&dts, &errs).unwrap();
        assert!((slope - 4.0).abs() < 0.3, "slope {slope}");
        assert!(r2 > 0.999, "r2 {r2}");
    }

    #[test]
    fn qnvp_equilibrium_holds_every_channel_constant() {
        let disc = coarse();
        let g = disc.grid();
        let b = ScalarField::constant(g.q, 1.2);
        let params = PhysParams::new(0.6, 1.0, 0.1, b).unwrap();
        let rho = discrete_maxwellian(g, disc.vops(), 1.0, 1.0).unwrap();
        let init = QnvpState::new(disc.qops(), 1.0, VectorField::zeros(g.q), rho).unwrap();
        let cfg = RunConfig::new(0.01, 1.0, 10, ModelKind::Qnvp).unwrap();
        let (series, end) = integrate(&disc, &params, init, &cfg);
        end.unwrap();
        assert_eq!(series.len(), 11);
        for name in DIAGNOSTIC_CHANNELS {
            let c = series.channel(name).unwrap();
            let spread = c.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v))
                - c.iter().fold(f64::INFINITY, |m, v| m.min(*v));
            assert!(
                spread <= 1e-10 * c[0].abs().max(1.0),
                "channel {name} drifted by {spread:e}"
            );
        }
    }

    #[test]
    fn qnvp_energy_drift_scales_at_fourth_order() {
        let disc = coarse();
        let g = disc.grid();
        let qops = disc.qops();
        let b = ScalarField::from_fn(g.q, |x, _| 1.0 + 0.3 * x.cos());
        let params = PhysParams::new(0.7, 1.0, 0.1, b).unwrap();
        let rho_base = discrete_maxwellian(g, disc.vops(), 1.0, 1.0).unwrap();
        let bump = band_limited_scalar(g.q, 2, 7);
        let mut amp = bump.scaled(0.3 / bump.max_abs());
        amp.add_scalar(1.0);
        let rho = rho_base.mul_q(&amp);
        let raw = band_limited_vector(g.q, 2, 8);
        let init = QnvpState::new(qops, 1.0, raw.scaled(0.4 / raw.max_abs()), rho).unwrap();
        // measured drift = (dt-independent part from the coarse grid's own
        // energy leak, quadratics of band-2 data land on the Nyquist band
        // here) + (stepper part ~ dt^4). Differencing against a fine-step
        // reference removes the spatial floor and exposes the exponent.
        let drift = |dt: f64| {
            let stride = ((0.4 / dt).round() as usize).max(1);
            let cfg = RunConfig::new(dt, 0.4, stride, ModelKind::Qnvp).unwrap();
            let (series, end) = integrate(&disc, &params, init.clone(), &cfg);
            end.unwrap();
            let h = series.channel("H").unwrap();
            ((h[h.len() - 1] - h[0]) / h[0]).abs()
        };
        let floor = drift(0.01);
        let dts = [0.08, 0.04];
        let excess: Vec<f64> = dts.iter().map(|&dt| drift(dt) - floor).collect();
        assert!(
            excess.iter().all(|e| *e > 0.0),
            "reference run should drift least: {excess:?} over floor {floor:e}"
        );
        let (slope, _, _) = scaling_fit(&dts, &excess).unwrap();
        assert!((slope - 4.0).abs() < 0.8, "drift slope {slope}, excess {excess:?}");
        assert!(floor < 1e-5, "floor {floor:e}");
    }

    #[test]
    fn fastslow_run_keeps_momentum_solenoidal_and_is_deterministic() {
        let disc = coarse();
        let g = disc.grid();
        let qops = disc.qops();
        let b = ScalarField::constant(g.q, 1.0);
        let params = PhysParams::new(0.5, 1.0, 0.1, b).unwrap();
        let rho = discrete_maxwellian(g, disc.vops(), 1.0, 1.0).unwrap();
        let nt = band_limited_scalar(g.q, 2, 31);
        let ph = band_limited_scalar(g.q, 2, 32);
        let raw = band_limited_vector(g.q, 2, 33);
        let init = FastSlowState::new(
            qops,
            1.0,
            nt.scaled(0.05 / nt.max_abs()),
            ph.scaled(0.05 / ph.max_abs()),
            raw.scaled(0.2 / raw.max_abs()),
            rho,
        )
        .unwrap();
        let cfg = RunConfig::new(0.005, 0.2, 5, ModelKind::VpFastSlow).unwrap();
        let (series, end) = integrate(&disc, &params, init.clone(), &cfg);
        end.unwrap();
        for v in series.channel("div_norm").unwrap() {
            assert!(*v < 1e-10, "div norm {v:e}");
        }
        // bitwise reproducibility of the whole series
        let (series2, _) = integrate(&disc, &params, init, &cfg);
        assert_eq!(series.times(), series2.times());
        for name in DIAGNOSTIC_CHANNELS {
            assert_eq!(series.channel(name).unwrap(), series2.channel(name).unwrap());
        }
    }

    #[test]
    fn projection_is_energy_neutral_on_constrained_states() {
        let disc = coarse();
        let g = disc.grid();
        let qops = disc.qops();
        let rho = discrete_maxwellian(g, disc.vops(), 1.0, 1.0).unwrap();
        let raw = band_limited_vector(g.q, 2, 41);
        let mut s = QnvpState::new(qops, 1.1, raw.scaled(0.3 / raw.max_abs()), rho).unwrap();
        let (h0, _) = crate::qnvp::hamiltonian_sigma(&disc, &s).unwrap();
        s.project(qops);
        let (h1, _) = crate::qnvp::hamiltonian_sigma(&disc, &s).unwrap();
        assert!(((h1 - h0) / h0).abs() < 1e-12, "{:e}", (h1 - h0) / h0);
    }

    #[test]
    fn dominant_oscillation_reads_synthetic_tones() {
        let dt = 0.01;
        let n = 2000;
        let mut pure = TimeSeries::new(&["x"]);
        let mut faint = TimeSeries::new(&["x"]);
        let mut twotone = TimeSeries::new(&["x"]);
        let mut silent = TimeSeries::new(&["x"]);
        for j in 0..n {
            let t = j as f64 * dt;
            pure.push(t, &[(10.0 * t).sin()]).unwrap();
            faint.push(t, &[0.37 * (10.0 * t).sin()]).unwrap();
            twotone
                .push(t, &[(10.0 * t).sin() + 0.4 * (25.0 * t).sin()])
                .unwrap();
            silent.push(t, &[0.0]).unwrap();
        }
        let (f, a) = dominant_oscillation(&pure, "x").unwrap();
        assert!((f - 10.0).abs() < 0.05, "frequency {f}");
        assert!((a - 1.0).abs() < 0.02, "amplitude {a}");
        let (f2, a2) = dominant_oscillation(&faint, "x").unwrap();
        assert!((f2 - 10.0).abs() < 0.05);
        assert!((a2 - 0.37).abs() < 0.02 * 0.37, "amplitude {a2}");
        let (f3, _) = dominant_oscillation(&twotone, "x").unwrap();
        assert!((f3 - 10.0).abs() < 0.05, "two-tone frequency {f3}");
        let (f4, a4) = dominant_oscillation(&silent, "x").unwrap();
        assert_eq!((f4, a4), (0.0, 0.0));
        // too few samples
        let mut short = TimeSeries::new(&["x"]);
        for j in 0..50 {
            short.push(j as f64 * dt, &[1.0]).unwrap();
        }
        assert!(dominant_oscillation(&short, "x").is_err());
    }

    #[test]
    fn langmuir_run_oscillates_at_the_dispersion_frequency() {
        let disc = coarse();
        let g = disc.grid();
        let qops = disc.qops();
        let b = ScalarField::constant(g.q, 1.0);
        let params = PhysParams::new(0.5, 1.0, 0.05, b).unwrap();
        let init = LangmuirState::new(
            qops,
            1.0,
            ScalarField::from_fn(g.q, |x, _| 1e-3 * x.cos()),
            ScalarField::zeros(g.q),
        )
        .unwrap();
        let cfg = RunConfig::new(0.01, 12.8, 10, ModelKind::Langmuir).unwrap();
        let (series, end) = integrate(&disc, &params, init, &cfg);
        end.unwrap();
        let (freq, amp) = dominant_oscillation(&series, "ntilde_k10_amp").unwrap();
        assert!((freq - 10.0).abs() < 0.1, "frequency {freq}");
        assert!((amp - 1e-3).abs() < 0.05e-3, "amplitude {amp:e}");
        // the stepper damps a pure oscillation by |R(i w dt)|^2 =
        // 1 - (w dt)^6/72 per step; the invariant's decay should match
        // that prediction, not merely stay small
        let h = series.channel("H").unwrap();
        let drift = ((h[h.len() - 1] - h[0]) / h[0]).abs();
        let theta: f64 = 10.0 * 0.01;
        let predicted = 1280.0 * theta.powi(6) / 72.0;
        assert!(
            (drift / predicted - 1.0).abs() < 0.1,
            "invariant drift {drift:e} vs predicted {predicted:e}"
        );
    }

    #[test]
    fn integrate_reports_divergence_with_the_partial_series() {
        let disc = coarse();
        let g = disc.grid();
        let b = ScalarField::constant(g.q, 1.0);
        // grossly unstable step for the oscillation pair: omega dt = 200
        let params = PhysParams::new(1.0, 1.0, 0.005, b).unwrap();
        let init = LangmuirState::new(
            disc.qops(),
            1.0,
            ScalarField::from_fn(g.q, |x, _| x.cos()),
            ScalarField::zeros(g.q),
        )
        .unwrap();
        let cfg = RunConfig::new(1.0, 400.0, 1, ModelKind::Langmuir).unwrap();
        let (series, end) = integrate(&disc, &params, init, &cfg);
        match end {
            Err(Error::Diverged { step, .. }) => assert!(step >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
        assert!(!series.is_empty());
        assert!(series.len() < 401);
    }

    #[test]
    fn scaling_fit_recovers_power_laws() {
        let xs = [0.5, 1.0, 2.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let (slope, intercept, r2) = scaling_fit(&xs, &ys).unwrap();
        assert!((slope - 2.0).abs() < 1e-12);
        assert!(intercept.abs() < 1e-12);
        assert!((r2 - 1.0).abs() < 1e-12);
        // 1% multiplicative wobble barely moves the fit
        let noisy: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, x)| 3.0 * x * if i % 2 == 0 { 1.01 } else { 0.99 })
            .collect();
        let (slope1, _, _) = scaling_fit(&xs, &noisy).unwrap();
        assert!((slope1 - 1.0).abs() < 0.05, "slope {slope1}");
        // degenerate inputs are usage errors
        assert!(scaling_fit(&[1.0], &[2.0]).is_err());
        assert!(scaling_fit(&[1.0, 2.0], &[1.0, -2.0]).is_err());
        assert!(scaling_fit(&[1.0, 2.0], &[0.0, 2.0]).is_err());
        assert!(scaling_fit(&[1.0, 2.0, 3.0], &[1.0, 2.0]).is_err());
    }
}
