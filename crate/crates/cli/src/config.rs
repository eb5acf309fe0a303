use std::path::{Path, PathBuf};

use lsqkf_core::predictor::default_t_init;
use lsqkf_core::sysmodel::observability_matrix;
use lsqkf_core::{EpochSchedule, KalmanSolution, Matrix, Preset, StateSpaceModel};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// One experiment: a model, a horizon, a seed list and the predictor settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Horizon `N`; each run observes `y_0..y_N`.
    pub steps: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Horizons at which cumulative regret is recorded; defaults to `[steps]`.
    #[serde(default)]
    pub checkpoints: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub model: ModelSpec,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
}

/// A catalog preset or inline matrices (nested row arrays).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Matrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Matrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Matrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Matrix>,
    /// Initial covariance; the steady-state `P` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma0: Option<Matrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_init: Option<usize>,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            t_init: None,
            beta: default_beta(),
            lambda: default_lambda(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    #[serde(default = "yes")]
    pub logdet: bool,
    #[serde(default = "yes")]
    pub arma: bool,
    #[serde(default = "yes")]
    pub pe: bool,
    #[serde(default = "default_pe_grid_ratio")]
    pub pe_grid_ratio: f64,
    #[serde(default = "yes")]
    pub whiteness: bool,
    #[serde(default = "default_whiteness_lags")]
    pub whiteness_lags: usize,
    #[serde(default)]
    pub alternative_regret: bool,
    /// FIR order `p* = ceil(p_star_factor ln N)`.
    #[serde(default = "default_p_star_factor")]
    pub p_star_factor: f64,
    #[serde(default = "default_fir_rho")]
    pub fir_rho: f64,
    #[serde(default = "default_fir_l")]
    pub fir_l: f64,
    /// Horizon of the multi-step predictor; off when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_step: Option<usize>,
    /// State prediction through the true observability matrix (needs `f_step >= n`).
    #[serde(default)]
    pub state_prediction: bool,
    /// Keep per-step losses in the run records.
    #[serde(default)]
    pub per_step_losses: bool,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        toml::from_str("").expect("all diagnostics fields have defaults")
    }
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}
fn default_beta() -> f64 {
    2.0
}
fn default_lambda() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_pe_grid_ratio() -> f64 {
    1.25
}
fn default_whiteness_lags() -> usize {
    5
}
fn default_p_star_factor() -> f64 {
    3.0
}
fn default_fir_rho() -> f64 {
    0.95
}
fn default_fir_l() -> f64 {
    1.0
}

pub const DEFAULT_OUTPUT: &str = "results";

/// Reads, defaults and validates a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let mut config: ExperimentConfig =
        toml::from_str(text).map_err(|e| CliError::Config(format!("parse error: {e}")))?;
    config.fill_defaults();
    config.validate()?;
    Ok(config)
}

impl ExperimentConfig {
    fn fill_defaults(&mut self) {
        if self.schedule.t_init.is_none() {
            self.schedule.t_init = Some(default_t_init(self.schedule.beta));
        }
        if self.checkpoints.is_empty() {
            self.checkpoints = vec![self.steps];
        }
    }

    pub fn schedule(&self) -> Result<EpochSchedule, CliError> {
        let s = &self.schedule;
        let t_init = s.t_init.unwrap_or_else(|| default_t_init(s.beta));
        EpochSchedule::new(t_init, s.beta, s.lambda)
            .map_err(|e| CliError::Config(format!("schedule: {e}")))
    }

    /// The model as specified, with `Sigma0` possibly still unset.
    pub fn base_model(&self) -> Result<(StateSpaceModel, bool), CliError> {
        let spec = &self.model;
        let inline = [&spec.a, &spec.c, &spec.q, &spec.r];
        match spec.preset {
            Some(preset) => {
                if inline.iter().any(|m| m.is_some()) {
                    return Err(CliError::Config(
                        "model: give either preset or inline matrices a, c, q, r, not both".into(),
                    ));
                }
                let mut model = preset.base_model();
                let explicit = spec.sigma0.is_some();
                if let Some(s0) = &spec.sigma0 {
                    model = StateSpaceModel::new(model.a, model.c, model.q, model.r, s0.clone())
                        .map_err(|e| CliError::Config(format!("model: {e}")))?;
                }
                Ok((model, explicit))
            }
            None => {
                let [Some(a), Some(c), Some(q), Some(r)] = inline else {
                    return Err(CliError::Config(
                        "model: inline models need all of a, c, q, r (or name a preset)".into(),
                    ));
                };
                let sigma0 = spec.sigma0.clone().unwrap_or_else(|| q.clone());
                let model =
                    StateSpaceModel::new(a.clone(), c.clone(), q.clone(), r.clone(), sigma0)
                        .map_err(|e| CliError::Config(format!("model: {e}")))?;
                Ok((model, spec.sigma0.is_some()))
            }
        }
    }

    /// Model with `Sigma0 = P` unless an initial covariance was given.
    pub fn resolve_model(&self, kalman: &KalmanSolution) -> Result<StateSpaceModel, CliError> {
        let (model, explicit) = self.base_model()?;
        Ok(if explicit {
            model
        } else {
            model.with_stationary_initial(kalman)
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |msg: String| Err(CliError::Config(msg));
        let schedule = self.schedule()?;
        if self.steps < schedule.t_init() {
            return fail(format!(
                "steps = {} must be at least T_init = {}",
                self.steps,
                schedule.t_init()
            ));
        }
        if self.seeds.is_empty() {
            return fail("seeds must not be empty".into());
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        if seeds.len() != self.seeds.len() {
            return fail("seeds must be distinct".into());
        }
        if self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return fail("checkpoints must be strictly increasing".into());
        }
        if let Some(&c) = self.checkpoints.iter().find(|&&c| c == 0 || c > self.steps) {
            return fail(format!("checkpoint {c} outside 1..={}", self.steps));
        }
        let (model, _) = self.base_model()?;
        let d = &self.diagnostics;
        if d.whiteness && (d.whiteness_lags == 0 || self.steps + 1 < 100 * d.whiteness_lags) {
            return fail(format!(
                "whiteness check needs whiteness_lags >= 1 and at least 100 samples per lag (steps = {})",
                self.steps
            ));
        }
        if d.pe && !(d.pe_grid_ratio > 1.0) {
            return fail("pe_grid_ratio must exceed 1".into());
        }
        if d.alternative_regret {
            if !(d.p_star_factor > 0.0 && d.fir_rho > 0.0 && d.fir_l > 0.0) {
                return fail("p_star_factor, fir_rho and fir_l must be positive".into());
            }
            let p_star = self.p_star();
            if p_star == 0 || p_star > self.steps {
                return fail(format!("FIR order {p_star} outside 1..={}", self.steps));
            }
        }
        match d.f_step {
            Some(0) => return fail("f_step must be at least 1".into()),
            Some(f) if f > schedule.t_init() => {
                return fail(format!(
                    "f_step = {f} exceeds T_init = {}",
                    schedule.t_init()
                ))
            }
            _ => {}
        }
        if d.state_prediction {
            let n = model.state_dim();
            let Some(f) = d.f_step.filter(|&f| f >= n) else {
                return fail(format!(
                    "state_prediction needs f_step >= state dimension {n}"
                ));
            };
            let o = observability_matrix(&model.a, &model.c, f)
                .map_err(|e| CliError::Config(e.to_string()))?;
            if lsqkf_core::linalg::pseudo_inverse_tall(&o).is_err() {
                return fail(format!(
                    "state_prediction needs a full-column-rank O_f (f = {f})"
                ));
            }
        }
        Ok(())
    }

    /// `ceil(p_star_factor ln N)`.
    pub fn p_star(&self) -> usize {
        (self.diagnostics.p_star_factor * (self.steps as f64).ln())
            .ceil()
            .max(1.0) as usize
    }

    /// Canonical TOML of the effective config, without the output directory.
    pub fn canonical(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        toml::to_string(&c).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of the canonical form with the
    /// seed list and output directory removed, so that every seed of one
    /// experiment lands in the same directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        c.seeds.clear();
        let digest = Sha256::digest(toml::to_string(&c).expect("config serializes").as_bytes());
        hex::encode(digest)[..16].to_string()
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output
            .clone()
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT))
    }
}
