//! JSON experiment configuration: schema, defaults, validation.
//!
//! Every section rejects unknown keys, and every diagnostic names the
//! offending key, so a typo fails the run instead of silently falling back
//! to a default. Sections other than `grid`, `params`, and `run` are
//! optional and filled with documented defaults.

use serde::Deserialize;
use std::fs;
use std::path::Path;

use qnvp_core::evolve::ModelKind;
use qnvp_core::field::ScalarField;
use qnvp_core::grid::{TorusGrid, VelocityGrid};
use qnvp_core::params::PhysParams;
use qnvp_core::phase::{Discretization, PhaseGrid};
use qnvp_core::vp::{FastSlowMode, N1Prefactor};
use qnvp_core::{Error, Result};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridSection,
    pub params: ParamsSection,
    #[serde(default)]
    pub initial: InitialCondition,
    pub run: RunSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub switches: Switches,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub nq: usize,
    pub nv: usize,
    #[serde(default = "default_vmax")]
    pub vmax: f64,
    #[serde(default = "default_dealias")]
    pub dealias_fraction: f64,
}

fn default_vmax() -> f64 {
    6.0
}

fn default_dealias() -> f64 {
    2.0 / 3.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub epsilon: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    pub delta: f64,
    #[serde(default)]
    pub b_field: BFieldSpec,
}

fn default_lambda() -> f64 {
    1.0
}

/// Magnetic field profile by name. `cosine` is the analytic family
/// 1 + c cos(x).
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum BFieldSpec {
    Constant { value: f64 },
    Cosine { c: f64 },
}

impl Default for BFieldSpec {
    fn default() -> Self {
        BFieldSpec::Constant { value: 1.0 }
    }
}

/// Initial-condition family by name. All families ride on the discrete
/// velocity equilibrium profile; `shear_flow` is the momentum band
/// pi = (c sin y, 0) and `single_mode` a cosine density disturbance.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    Maxwellian {
        #[serde(default = "default_one")]
        density: f64,
        #[serde(default = "default_one")]
        sigma: f64,
    },
    ShearFlow {
        amplitude: f64,
        #[serde(default = "default_one")]
        density: f64,
        #[serde(default = "default_one")]
        sigma: f64,
    },
    SingleMode {
        amplitude: f64,
        #[serde(default = "default_kx")]
        kx: i64,
        #[serde(default)]
        ky: i64,
        #[serde(default = "default_one")]
        density: f64,
        #[serde(default = "default_one")]
        sigma: f64,
    },
}

fn default_one() -> f64 {
    1.0
}

fn default_kx() -> i64 {
    1
}

impl Default for InitialCondition {
    fn default() -> Self {
        InitialCondition::Maxwellian {
            density: 1.0,
            sigma: 1.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub dt: f64,
    pub t_final: f64,
    #[serde(default = "default_stride")]
    pub sample_stride: usize,
    pub model: ModelName,
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    VpF,
    VpFastslow,
    Qnvp,
    Langmuir,
}

impl ModelName {
    pub fn kind(self) -> ModelKind {
        match self {
            ModelName::VpF => ModelKind::VpF,
            ModelName::VpFastslow => ModelKind::VpFastSlow,
            ModelName::Qnvp => ModelKind::Qnvp,
            ModelName::Langmuir => ModelKind::Langmuir,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_outdir")]
    pub directory: String,
    /// Steps between binary field dumps; 0 disables dumps.
    #[serde(default)]
    pub dump_stride: usize,
}

fn default_outdir() -> String {
    "out".to_string()
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            directory: default_outdir(),
            dump_stride: 0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Switches {
    /// Overall prefactor of the first slow-manifold coefficient: the JSON
    /// number 1 (the default) or the string "1/n0".
    #[serde(default = "default_prefactor")]
    pub n1_prefactor: serde_json::Value,
    #[serde(default = "default_fastslow_mode")]
    pub fastslow_mode: String,
    #[serde(default = "default_rhs_mode")]
    pub rhs_mode: String,
}

fn default_prefactor() -> serde_json::Value {
    serde_json::Value::from(1)
}

fn default_fastslow_mode() -> String {
    "transformed".to_string()
}

fn default_rhs_mode() -> String {
    "direct".to_string()
}

impl Default for Switches {
    fn default() -> Self {
        Switches {
            n1_prefactor: default_prefactor(),
            fastslow_mode: default_fastslow_mode(),
            rhs_mode: default_rhs_mode(),
        }
    }
}

impl Switches {
    pub fn n1_prefactor(&self) -> Result<N1Prefactor> {
        match &self.n1_prefactor {
            v if v.as_f64() == Some(1.0) => Ok(N1Prefactor::One),
            serde_json::Value::String(s) if s == "1/n0" || s == "inv_n0" => {
                Ok(N1Prefactor::InvN0)
            }
            other => Err(Error::Config(format!(
                "switches.n1_prefactor must be 1 or \"1/n0\", got {other}"
            ))),
        }
    }

    pub fn fastslow_mode(&self) -> Result<FastSlowMode> {
        match self.fastslow_mode.as_str() {
            "transformed" => Ok(FastSlowMode::Transformed),
            "printed" => Ok(FastSlowMode::Printed),
            other => Err(Error::Config(format!(
                "switches.fastslow_mode must be \"transformed\" or \"printed\", got {other:?}"
            ))),
        }
    }

    pub fn bracket_rhs(&self) -> Result<bool> {
        match self.rhs_mode.as_str() {
            "direct" => Ok(false),
            "bracket" => Ok(true),
            other => Err(Error::Config(format!(
                "switches.rhs_mode must be \"direct\" or \"bracket\", got {other:?}"
            ))),
        }
    }
}

/// Sweep driver settings: the scaling study repeated over a delta list.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub deltas: Vec<f64>,
    pub measure: SweepMeasure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMeasure {
    /// Oscillation amplitude of the dominant fast mode, run from both a
    /// naive and a slow-manifold start at each delta.
    FastModeAmplitude,
    /// Final-time momentum difference between matched kinetic and
    /// quasineutral runs.
    PiDifference,
}

/// Read and fully validate a config file.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("config {}: {e}", path.display())))?;
    let cfg: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("config {}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        // grid constructors carry the exact key-named diagnostics
        TorusGrid::new(self.grid.nq)?;
        VelocityGrid::new(self.grid.nv, self.grid.vmax)?;
        if (self.grid.dealias_fraction - 2.0 / 3.0).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "grid.dealias_fraction: only the 2/3 rule is supported, got {}",
                self.grid.dealias_fraction
            )));
        }
        if !(self.params.epsilon.is_finite() && self.params.epsilon > 0.0) {
            return Err(Error::Config(format!(
                "params.epsilon must be positive, got {}",
                self.params.epsilon
            )));
        }
        if !(self.params.lambda.is_finite() && self.params.lambda > 0.0) {
            return Err(Error::Config(format!(
                "params.lambda must be positive, got {}",
                self.params.lambda
            )));
        }
        if !(self.params.delta.is_finite() && self.params.delta >= 0.0) {
            return Err(Error::Config(format!(
                "params.delta must be nonnegative, got {}",
                self.params.delta
            )));
        }
        if self.params.delta == 0.0 && self.run.model != ModelName::Qnvp {
            return Err(Error::Config(
                "params.delta = 0: quasineutral singularity; use model qnvp".to_string(),
            ));
        }
        match self.params.b_field {
            BFieldSpec::Constant { value } if !value.is_finite() => {
                return Err(Error::Config(format!(
                    "params.b_field.value must be finite, got {value}"
                )));
            }
            BFieldSpec::Cosine { c } if !c.is_finite() => {
                return Err(Error::Config(format!(
                    "params.b_field.c must be finite, got {c}"
                )));
            }
            _ => {}
        }
        self.validate_initial()?;
        if !(self.run.dt.is_finite() && self.run.dt > 0.0) {
            return Err(Error::Config(format!(
                "run.dt must be positive, got {}",
                self.run.dt
            )));
        }
        if !(self.run.t_final.is_finite() && self.run.t_final >= self.run.dt) {
            return Err(Error::Config(format!(
                "run.t_final must be at least run.dt, got {}",
                self.run.t_final
            )));
        }
        if self.run.sample_stride == 0 {
            return Err(Error::Config(
                "run.sample_stride must be positive".to_string(),
            ));
        }
        self.switches.n1_prefactor()?;
        self.switches.fastslow_mode()?;
        self.switches.bracket_rhs()?;
        if let Some(sweep) = &self.sweep {
            if sweep.deltas.len() < 2 {
                return Err(Error::Config(format!(
                    "sweep.deltas needs at least two entries for a fit, got {}",
                    sweep.deltas.len()
                )));
            }
            if sweep.deltas.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
                return Err(Error::Config(
                    "sweep.deltas must all be positive".to_string(),
                ));
            }
        }
        Ok(())
    }

    fn validate_initial(&self) -> Result<()> {
        let (density, sigma, key) = match &self.initial {
            InitialCondition::Maxwellian { density, sigma } => (*density, *sigma, "maxwellian"),
            InitialCondition::ShearFlow {
                amplitude,
                density,
                sigma,
            } => {
                if !amplitude.is_finite() {
                    return Err(Error::Config(format!(
                        "initial.amplitude must be finite, got {amplitude}"
                    )));
                }
                (*density, *sigma, "shear_flow")
            }
            InitialCondition::SingleMode {
                amplitude,
                kx,
                ky,
                density,
                sigma,
            } => {
                if !amplitude.is_finite() {
                    return Err(Error::Config(format!(
                        "initial.amplitude must be finite, got {amplitude}"
                    )));
                }
                let half = (self.grid.nq / 2) as i64;
                if kx.abs() > half || ky.abs() > half {
                    return Err(Error::Config(format!(
                        "initial.kx/ky must fit on the grid (|k| <= {half}), got ({kx}, {ky})"
                    )));
                }
                if *kx == 0 && *ky == 0 {
                    return Err(Error::Config(
                        "initial.kx and initial.ky cannot both be zero".to_string(),
                    ));
                }
                (*density, *sigma, "single_mode")
            }
        };
        if !(density.is_finite() && density > 0.0) {
            return Err(Error::Config(format!(
                "initial.density must be positive, got {density}"
            )));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::Config(format!(
                "initial.sigma must be positive, got {sigma}"
            )));
        }
        let model = self.run.model;
        match (key, model) {
            ("single_mode", ModelName::Qnvp) => Err(Error::Config(
                "initial.family single_mode needs a model with a density remainder; \
                 model qnvp has none"
                    .to_string(),
            )),
            ("maxwellian" | "shear_flow", ModelName::Langmuir) => Err(Error::Config(format!(
                "initial.family {key} carries no density remainder; model langmuir \
                 needs family single_mode"
            ))),
            _ => Ok(()),
        }
    }

    pub fn discretization(&self) -> Result<Discretization> {
        let q = TorusGrid::new(self.grid.nq)?;
        let v = VelocityGrid::new(self.grid.nv, self.grid.vmax)?;
        Ok(Discretization::new(PhaseGrid::new(q, v)))
    }

    pub fn phys_params(&self) -> Result<PhysParams> {
        self.phys_params_with_delta(self.params.delta)
    }

    /// Same physics with the smallness parameter overridden (sweeps).
    pub fn phys_params_with_delta(&self, delta: f64) -> Result<PhysParams> {
        let q = TorusGrid::new(self.grid.nq)?;
        let b = match self.params.b_field {
            BFieldSpec::Constant { value } => ScalarField::constant(q, value),
            BFieldSpec::Cosine { c } => ScalarField::from_fn(q, |x, _| 1.0 + c * x.cos()),
        };
        PhysParams::new(self.params.epsilon, self.params.lambda, delta, b)
    }
}
