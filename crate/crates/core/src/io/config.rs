use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constitutive::{ClosureSet, Model, ModelParams};
use crate::discretization::{Grid, GridSpec};
use crate::error::{Error, Result};
use crate::scheme::{EntropyState, Scheme, SchemeConfig};

/// Shape of the initial fields.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    Constant,
    /// Background plus a Gaussian bump in densities and temperature.
    GaussianBump,
    /// Field dump written by a previous run.
    File,
}

/// Initial-condition block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialConfig {
    pub kind: InitialKind,
    /// Background densities, one per species; empty means 0.2 each.
    pub rho: Vec<f64>,
    pub temperature: f64,
    /// Uniform saturation; absent means local capillary equilibrium
    /// `P_c(S) + p = 0` in every cell.
    pub saturation: Option<f64>,
    /// Relative density amplitude of the bump.
    pub amplitude: f64,
    /// Absolute temperature amplitude of the bump.
    pub temperature_amplitude: f64,
    /// Bump centre per axis in normalized coordinates.
    pub center: Vec<f64>,
    /// Bump width in normalized coordinates.
    pub width: f64,
    pub path: Option<PathBuf>,
    /// Relative amplitude of seeded uniform noise on densities and temperature.
    pub noise: f64,
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig {
            kind: InitialKind::Constant,
            rho: Vec::new(),
            temperature: 1.0,
            saturation: None,
            amplitude: 0.5,
            temperature_amplitude: 0.2,
            center: vec![0.5],
            width: 0.1,
            path: None,
            noise: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldFormat {
    Csv,
    Vtk,
}

/// Output block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// Field dumps every `cadence` steps; the initial and final states are
    /// always written. Zero disables intermediate dumps.
    pub cadence: usize,
    pub formats: Vec<FieldFormat>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: PathBuf::from("out"),
            cadence: 10,
            formats: vec![FieldFormat::Csv],
        }
    }
}

/// Parameter lists swept by `sweep`; an empty list keeps the scheme value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub tau: Vec<f64>,
    pub eps: Vec<f64>,
    pub delta: Vec<f64>,
    /// Time step of the reference run used for observed temporal orders.
    pub reference_tau: Option<f64>,
}

/// Horizon and noise seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunControl {
    pub horizon: f64,
    pub seed: u64,
}

impl Default for RunControl {
    fn default() -> Self {
        RunControl { horizon: 0.1, seed: 0 }
    }
}

/// Complete run configuration.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunControl,
    pub model: ModelParams,
    pub closures: ClosureSet,
    pub grid: GridSpec,
    pub scheme: SchemeConfig,
    pub initial: InitialConfig,
    pub output: OutputConfig,
    pub sweep: SweepConfig,
}

/// Parses and validates a TOML configuration. Missing keys take their
/// defaults, unknown keys are rejected.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg = parse_config_unchecked(text)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Parses without running [`RunConfig::validate`]; unknown keys are still
/// rejected.
pub fn parse_config_unchecked(text: &str) -> Result<RunConfig> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

pub fn serialize_config(cfg: &RunConfig) -> Result<String> {
    toml::to_string(cfg).map_err(|e| Error::Config(e.to_string()))
}

impl RunConfig {
    pub fn model(&self) -> Model {
        Model {
            params: self.model.clone(),
            closures: self.closures.clone(),
        }
    }

    /// Hypotheses on the closures, scheme parameters including every swept
    /// value, grid geometry and initial data.
    pub fn validate(&self) -> Result<()> {
        let model = self.model();
        let report = model.validate_hypotheses();
        if let Some(f) = report.failures().first() {
            return Err(Error::Hypothesis {
                name: f.name.to_string(),
                detail: f.witness.clone(),
            });
        }
        self.scheme.validate(&model)?;
        for point in self.sweep_points() {
            point.scheme.validate(&model)?;
        }
        if let Some(t) = self.sweep.reference_tau {
            if !(t > 0.0) {
                return Err(Error::Config("sweep.reference_tau must be positive".into()));
            }
        }
        Grid::new(&self.grid)?;
        let n = self.model.species;
        let init = &self.initial;
        if !init.rho.is_empty() && init.rho.len() != n {
            return Err(Error::Dimension { expected: n, found: init.rho.len() });
        }
        if init.rho.iter().any(|r| !(*r > 0.0)) || !(init.temperature > 0.0) {
            return Err(Error::Config("initial densities and temperature must be positive".into()));
        }
        if let Some(s) = init.saturation {
            if !(s > 0.0 && s < 1.0) {
                return Err(Error::Config("initial saturation must lie in (0, 1)".into()));
            }
        }
        if !(init.noise >= 0.0 && init.noise < 1.0) || !(init.width > 0.0) {
            return Err(Error::Config("initial noise must lie in [0, 1) and width be positive".into()));
        }
        if init.kind == InitialKind::File && init.path.is_none() {
            return Err(Error::Config("initial.kind = \"file\" requires initial.path".into()));
        }
        if !(self.run.horizon >= 0.0) {
            return Err(Error::Config("run.horizon must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn build_scheme(&self) -> Result<Scheme> {
        Scheme::new(self.model(), Grid::new(&self.grid)?, self.scheme.clone())
    }

    /// Cartesian sweep, `eps` outermost and `delta` innermost. Without any
    /// sweep lists the single point is the configuration itself.
    pub fn sweep_points(&self) -> Vec<RunConfig> {
        let or = |v: &Vec<f64>, d: f64| if v.is_empty() { vec![d] } else { v.clone() };
        let mut out = Vec::new();
        for &eps in &or(&self.sweep.eps, self.scheme.eps) {
            for &tau in &or(&self.sweep.tau, self.scheme.tau) {
                for &delta in &or(&self.sweep.delta, self.scheme.delta) {
                    let mut c = self.clone();
                    c.scheme.eps = eps;
                    c.scheme.tau = tau;
                    c.scheme.delta = delta;
                    out.push(c);
                }
            }
        }
        out
    }

    /// Initial entropy state on the grid of `scheme`.
    pub fn initial_state(&self, scheme: &Scheme) -> Result<EntropyState> {
        let init = &self.initial;
        let eps = scheme.config.eps;
        let model = &scheme.model;
        if init.kind == InitialKind::File {
            let path = init.path.as_ref().expect("validated");
            let dump = super::read_fields(path)?;
            if dump.cell.len() != scheme.grid.num_cells() {
                return Err(Error::Dimension { expected: scheme.grid.num_cells(), found: dump.cell.len() });
            }
            return dump.to_state(model, eps);
        }
        let n = model.params.species;
        let base: Vec<f64> = if init.rho.is_empty() { vec![0.2; n] } else { init.rho.clone() };
        let mut rng = ChaCha8Rng::seed_from_u64(self.run.seed);
        let g = &scheme.grid;
        let mut rho = Vec::with_capacity(g.num_cells());
        let mut t = Vec::with_capacity(g.num_cells());
        for c in 0..g.num_cells() {
            let bump = match init.kind {
                InitialKind::GaussianBump => {
                    let x = g.center(c);
                    let r2: f64 = x
                        .iter()
                        .zip(g.extent())
                        .enumerate()
                        .map(|(a, (xa, l))| {
                            let ca = init.center.get(a).or(init.center.first()).copied().unwrap_or(0.5);
                            (xa / l - ca).powi(2)
                        })
                        .sum();
                    (-r2 / (2.0 * init.width * init.width)).exp()
                }
                _ => 0.0,
            };
            let mut noisy = |v: f64| {
                if init.noise > 0.0 {
                    v * (1.0 + init.noise * rng.gen_range(-1.0..1.0))
                } else {
                    v
                }
            };
            let cell_rho: Vec<f64> = base.iter().map(|r| noisy(r * (1.0 + init.amplitude * bump))).collect();
            rho.push(cell_rho);
            t.push(noisy(init.temperature + init.temperature_amplitude * bump));
        }
        let s = match init.saturation {
            Some(s) => vec![s; g.num_cells()],
            None => {
                let mut s = Vec::with_capacity(g.num_cells());
                for c in 0..g.num_cells() {
                    let p = model.pressure(&rho[c], t[c], eps)?;
                    s.push(scheme.equilibrium_saturation(p).ok_or_else(|| {
                        Error::Config(format!(
                            "no capillary equilibrium saturation for pressure {p} in cell {c}; set initial.saturation"
                        ))
                    })?);
                }
                s
            }
        };
        EntropyState::from_physical(model, &rho, &t, &s, eps)
    }
}
