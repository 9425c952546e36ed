//! Experiment drivers: initial-condition families, the single-run loop with
//! diagnostics and field dumps, the matched kinetic/quasineutral comparison,
//! and the delta-scaling sweeps.

use std::f64::consts::TAU;
use std::path::Path;

use rayon::prelude::*;
use serde_json::json;

use qnvp_core::evolve::{
    dominant_oscillation, rk4_step, scaling_fit, Integrable, LangmuirState, Model, RunConfig,
    TimeSeries, DIAGNOSTIC_CHANNELS,
};
use qnvp_core::field::{ScalarField, VectorField};
use qnvp_core::moments::inverse_e;
use qnvp_core::params::PhysParams;
use qnvp_core::phase::{Discretization, PhaseField};
use qnvp_core::qnvp::{bracket_vectorfield_sigma, QnvpRates, QnvpState};
use qnvp_core::spectral::SpectralOps;
use qnvp_core::synth::discrete_maxwellian_profile;
use qnvp_core::vp::{
    fastslow_rhs, slow_manifold_n1, FastSlowMode, FastSlowRates, FastSlowState,
};
use qnvp_core::{Error, Result};

use crate::config::{ExperimentConfig, InitialCondition, ModelName, SweepMeasure};
use crate::output;

/// A fully built starting state for whichever model the config selects.
pub enum InitialState {
    VpF(PhaseField),
    FastSlow(FastSlowState),
    Qnvp(QnvpState),
    Langmuir(LangmuirState),
}

fn eigen_plane(disc: &Discretization, sigma: f64) -> Result<ndarray::Array2<f64>> {
    let profile = discrete_maxwellian_profile(disc.vops(), sigma)?.profile;
    let nv = disc.grid().v.nv();
    Ok(ndarray::Array2::from_shape_fn((nv, nv), |(jy, jx)| {
        profile[jy] * profile[jx]
    }))
}

/// Centered distribution for the kinetic slot: the discrete equilibrium
/// profile, exactly normalized and stationary under the rotation operator.
fn eigen_rho(disc: &Discretization, sigma: f64) -> Result<PhaseField> {
    let plane = eigen_plane(disc, sigma)?;
    let one = ScalarField::constant(disc.grid().q, 1.0);
    PhaseField::from_q_v_product(&one, disc.grid().v, &plane)
}

fn mode_field(disc: &Discretization, amplitude: f64, kx: i64, ky: i64) -> ScalarField {
    ScalarField::from_fn(disc.grid().q, |x, y| {
        amplitude * (kx as f64 * x + ky as f64 * y).cos()
    })
}

fn shear_momentum(disc: &Discretization, amplitude: f64) -> VectorField {
    VectorField::from_fn(disc.grid().q, move |_, y| amplitude * y.sin(), |_, _| 0.0)
}

pub fn build_initial(cfg: &ExperimentConfig, disc: &Discretization) -> Result<InitialState> {
    let qops = disc.qops();
    let grid = disc.grid();
    let model = cfg.run.model;
    match (&cfg.initial, model) {
        (InitialCondition::Maxwellian { density, sigma }, ModelName::VpF) => {
            let plane = eigen_plane(disc, *sigma)?;
            let n = ScalarField::constant(grid.q, *density);
            Ok(InitialState::VpF(PhaseField::from_q_v_product(
                &n, grid.v, &plane,
            )?))
        }
        (InitialCondition::ShearFlow {
            amplitude,
            density,
            sigma,
        }, ModelName::VpF) => {
            // drift breaks the product structure; decenter the equilibrium
            // profile instead of sampling a fresh Gaussian per point
            let fs = shear_fastslow(disc, *amplitude, *density, *sigma)?;
            let ms = fs.moment_state(disc, &cfg.phys_params()?)?;
            Ok(InitialState::VpF(inverse_e(&ms)?.dist))
        }
        (InitialCondition::SingleMode {
            amplitude,
            kx,
            ky,
            density,
            sigma,
        }, ModelName::VpF) => {
            let plane = eigen_plane(disc, *sigma)?;
            let mut n = mode_field(disc, *amplitude, *kx, *ky);
            n.add_scalar(*density);
            Ok(InitialState::VpF(PhaseField::from_q_v_product(
                &n, grid.v, &plane,
            )?))
        }
        (InitialCondition::Maxwellian { density, sigma }, ModelName::VpFastslow) => {
            Ok(InitialState::FastSlow(FastSlowState::new(
                qops,
                *density,
                ScalarField::zeros(grid.q),
                ScalarField::zeros(grid.q),
                VectorField::zeros(grid.q),
                eigen_rho(disc, *sigma)?,
            )?))
        }
        (InitialCondition::ShearFlow {
            amplitude,
            density,
            sigma,
        }, ModelName::VpFastslow) => Ok(InitialState::FastSlow(shear_fastslow(
            disc, *amplitude, *density, *sigma,
        )?)),
        (InitialCondition::SingleMode {
            amplitude,
            kx,
            ky,
            density,
            sigma,
        }, ModelName::VpFastslow) => Ok(InitialState::FastSlow(FastSlowState::new(
            qops,
            *density,
            mode_field(disc, *amplitude, *kx, *ky),
            ScalarField::zeros(grid.q),
            VectorField::zeros(grid.q),
            eigen_rho(disc, *sigma)?,
        )?)),
        (InitialCondition::Maxwellian { density, sigma }, ModelName::Qnvp) => {
            Ok(InitialState::Qnvp(QnvpState::new(
                qops,
                *density,
                VectorField::zeros(grid.q),
                eigen_rho(disc, *sigma)?,
            )?))
        }
        (InitialCondition::ShearFlow {
            amplitude,
            density,
            sigma,
        }, ModelName::Qnvp) => Ok(InitialState::Qnvp(QnvpState::new(
            qops,
            *density,
            shear_momentum(disc, *amplitude),
            eigen_rho(disc, *sigma)?,
        )?)),
        (InitialCondition::SingleMode { amplitude, kx, ky, density, .. }, ModelName::Langmuir) => {
            Ok(InitialState::Langmuir(LangmuirState::new(
                qops,
                *density,
                mode_field(disc, *amplitude, *kx, *ky),
                ScalarField::zeros(grid.q),
            )?))
        }
        // the config validator rejects the remaining combinations
        (initial, model) => Err(Error::Config(format!(
            "initial family {initial:?} is not available for model {model:?}"
        ))),
    }
}

/// Shear band on the slow base: momentum pi = (c sin y, 0) over the
/// discrete equilibrium.
fn shear_fastslow(
    disc: &Discretization,
    amplitude: f64,
    density: f64,
    sigma: f64,
) -> Result<FastSlowState> {
    FastSlowState::new(
        disc.qops(),
        density,
        ScalarField::zeros(disc.grid().q),
        ScalarField::zeros(disc.grid().q),
        shear_momentum(disc, amplitude),
        eigen_rho(disc, sigma)?,
    )
}

// ---------------------------------------------------------------------------
// model wrappers for the config switches
// ---------------------------------------------------------------------------

/// Fast-slow model driven through the expanded printed equations instead of
/// the coordinate-change form.
#[derive(Clone)]
pub struct PrintedFastSlow(pub FastSlowState);

impl Integrable for PrintedFastSlow {
    type Rate = FastSlowRates;

    fn advance(&mut self, dt: f64, rate: &Self::Rate) {
        Integrable::advance(&mut self.0, dt, rate);
    }

    fn enforce_constraints(&mut self, disc: &Discretization) {
        Integrable::enforce_constraints(&mut self.0, disc);
    }

    fn is_finite(&self) -> bool {
        Integrable::is_finite(&self.0)
    }
}

impl Model for PrintedFastSlow {
    fn rhs(&self, disc: &Discretization, params: &PhysParams) -> Result<Self::Rate> {
        fastslow_rhs(disc, params, &self.0, FastSlowMode::Printed)
    }

    fn diagnostics(&self, disc: &Discretization, params: &PhysParams) -> Result<[f64; 6]> {
        self.0.diagnostics(disc, params)
    }
}

/// Quasineutral model driven by the bracket-generated vector field instead
/// of the closed-form equations.
#[derive(Clone)]
pub struct BracketQnvp(pub QnvpState);

impl Integrable for BracketQnvp {
    type Rate = QnvpRates;

    fn advance(&mut self, dt: f64, rate: &Self::Rate) {
        Integrable::advance(&mut self.0, dt, rate);
    }

    fn enforce_constraints(&mut self, disc: &Discretization) {
        Integrable::enforce_constraints(&mut self.0, disc);
    }

    fn is_finite(&self) -> bool {
        Integrable::is_finite(&self.0)
    }
}

impl Model for BracketQnvp {
    fn rhs(&self, disc: &Discretization, params: &PhysParams) -> Result<Self::Rate> {
        bracket_vectorfield_sigma(disc, params, &self.0)
    }

    fn diagnostics(&self, disc: &Discretization, params: &PhysParams) -> Result<[f64; 6]> {
        self.0.diagnostics(disc, params)
    }
}

// ---------------------------------------------------------------------------
// field dumping
// ---------------------------------------------------------------------------

/// What a model exposes for binary dumps: named row-major payloads.
pub trait DumpFields {
    fn fields(&self) -> Vec<(&'static str, Vec<u32>, Vec<f64>)>;
}

fn scalar_payload(f: &ScalarField) -> (Vec<u32>, Vec<f64>) {
    let n = f.grid().nq() as u32;
    (
        vec![n, n],
        f.data().as_slice().expect("row-major").to_vec(),
    )
}

fn phase_payload(f: &PhaseField) -> (Vec<u32>, Vec<f64>) {
    let nq = f.grid().q.nq() as u32;
    let nv = f.grid().v.nv() as u32;
    (
        vec![nq, nq, nv, nv],
        f.data().as_slice().expect("row-major").to_vec(),
    )
}

impl DumpFields for PhaseField {
    fn fields(&self) -> Vec<(&'static str, Vec<u32>, Vec<f64>)> {
        let (dims, data) = phase_payload(self);
        vec![("f", dims, data)]
    }
}

impl DumpFields for FastSlowState {
    fn fields(&self) -> Vec<(&'static str, Vec<u32>, Vec<f64>)> {
        let mut out = Vec::new();
        for (name, f) in [
            ("ntilde", self.ntilde()),
            ("phi", self.phi()),
            ("pi_x", &self.pi().x),
            ("pi_y", &self.pi().y),
        ] {
            let (dims, data) = scalar_payload(f);
            out.push((name, dims, data));
        }
        let (dims, data) = phase_payload(self.rho());
        out.push(("rho", dims, data));
        out
    }
}

impl DumpFields for QnvpState {
    fn fields(&self) -> Vec<(&'static str, Vec<u32>, Vec<f64>)> {
        let mut out = Vec::new();
        for (name, f) in [("pi_x", &self.pi().x), ("pi_y", &self.pi().y)] {
            let (dims, data) = scalar_payload(f);
            out.push((name, dims, data));
        }
        let (dims, data) = phase_payload(self.rho());
        out.push(("rho", dims, data));
        out
    }
}

impl DumpFields for LangmuirState {
    fn fields(&self) -> Vec<(&'static str, Vec<u32>, Vec<f64>)> {
        [("ntilde", self.ntilde()), ("phi", self.phi())]
            .into_iter()
            .map(|(name, f)| {
                let (dims, data) = scalar_payload(f);
                (name, dims, data)
            })
            .collect()
    }
}

impl DumpFields for PrintedFastSlow {
    fn fields(&self) -> Vec<(&'static str, Vec<u32>, Vec<f64>)> {
        self.0.fields()
    }
}

impl DumpFields for BracketQnvp {
    fn fields(&self) -> Vec<(&'static str, Vec<u32>, Vec<f64>)> {
        self.0.fields()
    }
}

// ---------------------------------------------------------------------------
// drivers
// ---------------------------------------------------------------------------

/// Step a model to the horizon, recording diagnostics every sample stride
/// and dumping fields every dump stride (0 disables dumps). The partial
/// series survives a divergence so it can still be written out.
fn drive<S: Model + DumpFields>(
    disc: &Discretization,
    params: &PhysParams,
    init: S,
    run_cfg: &RunConfig,
    out_dir: &Path,
    dump_stride: usize,
) -> (TimeSeries, Result<S>) {
    let mut series = TimeSeries::new(&DIAGNOSTIC_CHANNELS);
    let mut state = init;
    let record = |series: &mut TimeSeries, s: &S, t: f64| -> Result<()> {
        let row = s.diagnostics(disc, params)?;
        series.push(t, &row)
    };
    let dump = |s: &S, step: usize| -> Result<()> {
        if dump_stride == 0 {
            return Ok(());
        }
        for (name, dims, data) in s.fields() {
            output::write_dump(&output::dump_path(out_dir, name, step), &dims, &data)?;
        }
        Ok(())
    };
    if let Err(e) = record(&mut series, &state, 0.0).and_then(|()| dump(&state, 0)) {
        return (series, Err(e));
    }
    for step in 1..=run_cfg.steps() {
        match rk4_step(disc, &state, &mut |s: &S| s.rhs(disc, params), run_cfg.dt) {
            Ok(next) => state = next,
            Err(_) => {
                return (
                    series,
                    Err(Error::Diverged {
                        step,
                        time: (step - 1) as f64 * run_cfg.dt,
                    }),
                );
            }
        }
        let t = step as f64 * run_cfg.dt;
        if step % run_cfg.sample_stride == 0 {
            if let Err(e) = record(&mut series, &state, t) {
                return (series, Err(e));
            }
        }
        if dump_stride > 0 && step % dump_stride == 0 {
            if let Err(e) = dump(&state, step) {
                return (series, Err(e));
            }
        }
    }
    (series, Ok(state))
}

fn forget<S>((series, end): (TimeSeries, Result<S>)) -> (TimeSeries, Result<()>) {
    (series, end.map(|_| ()))
}

/// `run`: one integration, diagnostics CSV, optional dumps. On divergence
/// the partial CSV is still written before the error propagates.
pub fn run_command(cfg: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    output::ensure_dir(out_dir)?;
    let disc = cfg.discretization()?;
    let params = cfg.phys_params()?;
    let run_cfg = RunConfig::new(
        cfg.run.dt,
        cfg.run.t_final,
        cfg.run.sample_stride,
        cfg.run.model.kind(),
    )?;
    let ds = cfg.output.dump_stride;
    let (series, end) = match build_initial(cfg, &disc)? {
        InitialState::VpF(f) => forget(drive(&disc, &params, f, &run_cfg, out_dir, ds)),
        InitialState::FastSlow(fs) => match cfg.switches.fastslow_mode()? {
            FastSlowMode::Transformed => forget(drive(&disc, &params, fs, &run_cfg, out_dir, ds)),
            FastSlowMode::Printed => forget(drive(
                &disc,
                &params,
                PrintedFastSlow(fs),
                &run_cfg,
                out_dir,
                ds,
            )),
        },
        InitialState::Qnvp(s) => {
            if cfg.switches.bracket_rhs()? {
                forget(drive(&disc, &params, BracketQnvp(s), &run_cfg, out_dir, ds))
            } else {
                forget(drive(&disc, &params, s, &run_cfg, out_dir, ds))
            }
        }
        InitialState::Langmuir(l) => forget(drive(&disc, &params, l, &run_cfg, out_dir, ds)),
    };
    output::write_series_csv(&out_dir.join("diagnostics.csv"), &series)?;
    end
}

/// The matched pair for a comparison run: the kinetic model started on the
/// slow manifold (density remainder delta * n1) and the quasineutral model
/// from the same base data.
fn matched_pair(
    cfg: &ExperimentConfig,
    disc: &Discretization,
    params: &PhysParams,
) -> Result<(FastSlowState, QnvpState)> {
    if cfg.run.model != ModelName::VpFastslow {
        return Err(Error::Config(
            "run.model must be vp_fastslow for comparison runs".to_string(),
        ));
    }
    let base = match build_initial(cfg, disc)? {
        InitialState::FastSlow(fs) => fs,
        _ => unreachable!("model checked above"),
    };
    if base.ntilde().max_abs() != 0.0 || base.phi().max_abs() != 0.0 {
        return Err(Error::Config(
            "comparison runs need an initial family on the slow base \
             (maxwellian or shear_flow)"
                .to_string(),
        ));
    }
    let qops = disc.qops();
    let n1 = slow_manifold_n1(disc, params, &base, cfg.switches.n1_prefactor()?)?;
    let vp = FastSlowState::new(
        qops,
        base.n0(),
        n1.scaled(params.delta),
        ScalarField::zeros(disc.grid().q),
        base.pi().clone(),
        base.rho().clone(),
    )?;
    let qn = QnvpState::new(qops, base.n0(), base.pi().clone(), base.rho().clone())?;
    Ok((vp, qn))
}

fn vec_rel_diff(a: &VectorField, b: &VectorField) -> f64 {
    a.sub(b).l2_norm() / b.l2_norm().max(1e-300)
}

fn pair_row(
    disc: &Discretization,
    params: &PhysParams,
    vp: &FastSlowState,
    qn: &QnvpState,
) -> Result<[f64; 3]> {
    let pi_diff = vec_rel_diff(vp.pi(), qn.pi());
    let rho_diff = vp.rho().sub(qn.rho()).l2_norm() / qn.rho().l2_norm().max(1e-300);
    let n = vp.moment_state(disc, params)?.n;
    let n_diff = n.sub(&ScalarField::constant(disc.grid().q, qn.n0())).l2_norm()
        / (qn.n0() * TAU);
    Ok([pi_diff, rho_diff, n_diff])
}

struct PairOutcome {
    series: TimeSeries,
    end: Result<[f64; 3]>,
}

/// Co-integrate the pair at one step size, recording difference norms.
fn integrate_pair(
    disc: &Discretization,
    params: &PhysParams,
    mut vp: FastSlowState,
    mut qn: QnvpState,
    dt: f64,
    steps: usize,
    stride: usize,
) -> PairOutcome {
    let mut series = TimeSeries::new(&["pi_diff", "rho_diff", "n_diff"]);
    let record = |series: &mut TimeSeries, vp: &FastSlowState, qn: &QnvpState, t: f64| {
        pair_row(disc, params, vp, qn).and_then(|row| series.push(t, &row))
    };
    if let Err(e) = record(&mut series, &vp, &qn, 0.0) {
        return PairOutcome { series, end: Err(e) };
    }
    for step in 1..=steps {
        let advanced = rk4_step(disc, &vp, &mut |s: &FastSlowState| s.rhs(disc, params), dt)
            .and_then(|v| {
                rk4_step(disc, &qn, &mut |s: &QnvpState| s.rhs(disc, params), dt)
                    .map(|q| (v, q))
            });
        match advanced {
            Ok((v, q)) => {
                vp = v;
                qn = q;
            }
            Err(_) => {
                return PairOutcome {
                    series,
                    end: Err(Error::Diverged {
                        step,
                        time: (step - 1) as f64 * dt,
                    }),
                };
            }
        }
        if step % stride == 0 {
            if let Err(e) = record(&mut series, &vp, &qn, step as f64 * dt) {
                return PairOutcome { series, end: Err(e) };
            }
        }
    }
    let end = pair_row(disc, params, &vp, &qn);
    PairOutcome { series, end }
}

/// `compare`: slow-manifold-initialized kinetic run against the
/// quasineutral run from matched data, difference norms per sample time.
pub fn compare_command(cfg: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    output::ensure_dir(out_dir)?;
    let disc = cfg.discretization()?;
    let params = cfg.phys_params()?;
    let run_cfg = RunConfig::new(
        cfg.run.dt,
        cfg.run.t_final,
        cfg.run.sample_stride,
        cfg.run.model.kind(),
    )?;
    let (vp, qn) = matched_pair(cfg, &disc, &params)?;
    let outcome = integrate_pair(
        &disc,
        &params,
        vp,
        qn,
        run_cfg.dt,
        run_cfg.steps(),
        run_cfg.sample_stride,
    );
    output::write_series_csv(&out_dir.join("compare.csv"), &outcome.series)?;
    outcome.end.map(|_| ())
}

fn delta_tag(delta: f64) -> String {
    format!("{delta:e}").replace(['.', '-'], "_")
}

/// `sweep`: repeat the configured measurement over the delta list and fit
/// the log-log scaling. Entries run in parallel (one integration pair per
/// worker); files are written per entry and the merged report is assembled
/// in delta order, so the output set does not depend on scheduling.
pub fn sweep_command(cfg: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    let sweep = cfg.sweep.as_ref().ok_or_else(|| {
        Error::Config("sweep: config needs a sweep section for this subcommand".to_string())
    })?;
    output::ensure_dir(out_dir)?;
    let disc = cfg.discretization()?;
    let mut deltas = sweep.deltas.clone();
    deltas.sort_by(|a, b| a.partial_cmp(b).expect("finite by validation"));
    match sweep.measure {
        SweepMeasure::PiDifference => sweep_pi_difference(cfg, &disc, &deltas, out_dir),
        SweepMeasure::FastModeAmplitude => sweep_fast_amplitude(cfg, &disc, &deltas, out_dir),
    }
}

fn sweep_pi_difference(
    cfg: &ExperimentConfig,
    disc: &Discretization,
    deltas: &[f64],
    out_dir: &Path,
) -> Result<()> {
    let run_cfg = RunConfig::new(
        cfg.run.dt,
        cfg.run.t_final,
        cfg.run.sample_stride,
        cfg.run.model.kind(),
    )?;
    let entries: Vec<(f64, f64)> = deltas
        .par_iter()
        .map(|&delta| -> Result<(f64, f64)> {
            let params = cfg.phys_params_with_delta(delta)?;
            let (vp, qn) = matched_pair(cfg, disc, &params)?;
            let outcome = integrate_pair(
                disc,
                &params,
                vp,
                qn,
                run_cfg.dt,
                run_cfg.steps(),
                run_cfg.sample_stride,
            );
            output::write_series_csv(
                &out_dir.join(format!("compare_delta_{}.csv", delta_tag(delta))),
                &outcome.series,
            )?;
            let row = outcome.end?;
            Ok((delta, row[0]))
        })
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = entries.iter().map(|e| e.0).collect();
    let ys: Vec<f64> = entries.iter().map(|e| e.1).collect();
    let (slope, intercept, r2) = scaling_fit(&xs, &ys)?;
    let report = json!({
        "measure": "pi_difference",
        "t_final": cfg.run.t_final,
        "entries": entries
            .iter()
            .map(|(d, v)| json!({"delta": d, "pi_diff": v}))
            .collect::<Vec<_>>(),
        "fit": {"slope": slope, "intercept": intercept, "r_squared": r2},
    });
    write_json(&out_dir.join("sweep_result.json"), &report)
}

/// Fast-oscillation amplitude of one trajectory: integrate and read the
/// dominant oscillation of the chosen mode of the compressible potential.
fn fast_amplitude(
    disc: &Discretization,
    params: &PhysParams,
    init: FastSlowState,
    run_cfg: &RunConfig,
    mode: (i64, i64),
    csv: &Path,
) -> Result<f64> {
    let qops = disc.qops();
    let mut series = TimeSeries::new(&["fast_mode"]);
    let mut state = init;
    series.push(0.0, &[qops.cosine_coefficient(state.phi(), mode.0, mode.1)])?;
    for step in 1..=run_cfg.steps() {
        state = rk4_step(
            disc,
            &state,
            &mut |s: &FastSlowState| s.rhs(disc, params),
            run_cfg.dt,
        )
        .map_err(|_| Error::Diverged {
            step,
            time: (step - 1) as f64 * run_cfg.dt,
        })?;
        if step % run_cfg.sample_stride == 0 {
            series.push(
                step as f64 * run_cfg.dt,
                &[qops.cosine_coefficient(state.phi(), mode.0, mode.1)],
            )?;
        }
    }
    output::write_series_csv(csv, &series)?;
    let (_, amplitude) = dominant_oscillation(&series, "fast_mode")?;
    Ok(amplitude)
}

/// The in-phase mode the first manifold coefficient excites most.
fn dominant_mode(qops: &SpectralOps, n1: &ScalarField) -> (i64, i64) {
    let kc = n1.grid().dealias_cutoff();
    let mut best = (1i64, 0i64);
    let mut best_mag = 0.0f64;
    for kx in 0..=kc {
        let kys: std::ops::RangeInclusive<i64> = if kx == 0 { 1..=kc } else { -kc..=kc };
        for ky in kys {
            let mag = qops.cosine_coefficient(n1, kx, ky).abs();
            if mag > best_mag {
                best_mag = mag;
                best = (kx, ky);
            }
        }
    }
    best
}

fn sweep_fast_amplitude(
    cfg: &ExperimentConfig,
    disc: &Discretization,
    deltas: &[f64],
    out_dir: &Path,
) -> Result<()> {
    let run_cfg = RunConfig::new(
        cfg.run.dt,
        cfg.run.t_final,
        cfg.run.sample_stride,
        cfg.run.model.kind(),
    )?;
    let entries: Vec<(f64, f64, f64)> = deltas
        .par_iter()
        .map(|&delta| -> Result<(f64, f64, f64)> {
            let params = cfg.phys_params_with_delta(delta)?;
            let (manifold, _) = matched_pair(cfg, disc, &params)?;
            let naive = FastSlowState::new(
                disc.qops(),
                manifold.n0(),
                ScalarField::zeros(disc.grid().q),
                ScalarField::zeros(disc.grid().q),
                manifold.pi().clone(),
                manifold.rho().clone(),
            )?;
            let mode = dominant_mode(disc.qops(), manifold.ntilde());
            let tag = delta_tag(delta);
            let a_naive = fast_amplitude(
                disc,
                &params,
                naive,
                &run_cfg,
                mode,
                &out_dir.join(format!("fast_mode_naive_{tag}.csv")),
            )?;
            let a_manifold = fast_amplitude(
                disc,
                &params,
                manifold,
                &run_cfg,
                mode,
                &out_dir.join(format!("fast_mode_manifold_{tag}.csv")),
            )?;
            Ok((delta, a_naive, a_manifold))
        })
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = entries.iter().map(|e| e.0).collect();
    let naive: Vec<f64> = entries.iter().map(|e| e.1).collect();
    let manifold: Vec<f64> = entries.iter().map(|e| e.2).collect();
    let fit_naive = scaling_fit(&xs, &naive)?;
    let fit_manifold = scaling_fit(&xs, &manifold)?;
    let fit_json = |f: (f64, f64, f64)| {
        json!({"slope": f.0, "intercept": f.1, "r_squared": f.2})
    };
    let report = json!({
        "measure": "fast_mode_amplitude",
        "t_final": cfg.run.t_final,
        "entries": entries
            .iter()
            .map(|(d, a, m)| json!({
                "delta": d,
                "naive_amplitude": a,
                "manifold_amplitude": m,
            }))
            .collect::<Vec<_>>(),
        "fits": {
            "naive": fit_json(fit_naive),
            "slow_manifold": fit_json(fit_manifold),
        },
    });
    write_json(&out_dir.join("sweep_result.json"), &report)
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::usage(format!("serialize {}: {e}", path.display())))?;
    std::fs::write(path, text + "\n")
        .map_err(|e| Error::usage(format!("write {}: {e}", path.display())))
}
