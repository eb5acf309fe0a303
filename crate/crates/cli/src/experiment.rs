use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use lsqkf_core::analysis::{
    alternative_regret, check_arma_bound, check_persistency_observations, compute_regret,
    cumulative_at, multistep_regret, state_regret_terms, AlternativeRegret, ArmaDiagnostics,
    LogdetCheck, PEReport, PeOptions, RegretReport,
};
use lsqkf_core::kalman::{
    innovation_whiteness, run_filter, solve_riccati, RiccatiOptions, WhitenessReport,
};
use lsqkf_core::predictor::{run_online, run_online_multistep, state_predictions, EpochRecord};
use lsqkf_core::sysmodel::{closed_loop_responses, observability_matrix, simulate, validate};
use lsqkf_core::{EpochSchedule, KalmanSolution, ModelValidation, StateSpaceModel};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output;

/// Cumulative value at one checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochDiagnostics {
    #[serde(flatten)]
    pub record: EpochRecord,
    pub logdet_check: LogdetCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FStepReport {
    pub f: usize,
    /// Stacked-forecast regret against `O_f x^_k`.
    pub regret: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_regret: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logdet_all_pass: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arma: Option<ArmaDiagnostics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pe: Option<PEReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub whiteness: Option<WhitenessReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alternative_regret: Option<AlternativeRegret>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_step: Option<FStepReport>,
}

/// Everything produced for one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub seed: u64,
    pub steps: usize,
    pub regret_curve: Vec<CurvePoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_regret_curve: Option<Vec<CurvePoint>>,
    pub regret: RegretReport,
    /// Past horizon of the final epoch.
    pub final_p: usize,
    /// `||G~_N - G_p||_F` against the true closed-loop responses.
    pub estimation_error: f64,
    pub epochs: Vec<EpochDiagnostics>,
    pub diagnostics: Diagnostics,
    /// Wall-clock seconds per phase; the only nondeterministic field.
    pub timings: BTreeMap<String, f64>,
}

/// A validated config with its model solved, ready to run seeds.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub hash: String,
    pub model: StateSpaceModel,
    pub solution: KalmanSolution,
    pub schedule: EpochSchedule,
    pub validation: ModelValidation,
}

fn numerical(seed: Option<u64>, phase: &'static str) -> impl FnOnce(lsqkf_core::Error) -> CliError {
    move |source| CliError::Numerical {
        seed,
        phase,
        source,
    }
}

struct Clock(BTreeMap<String, f64>, Instant);

impl Clock {
    fn new() -> Self {
        Clock(BTreeMap::new(), Instant::now())
    }

    fn lap(&mut self, phase: &str) {
        let now = Instant::now();
        self.0
            .insert(phase.to_string(), (now - self.1).as_secs_f64());
        self.1 = now;
    }
}

impl Experiment {
    pub fn prepare(config: ExperimentConfig) -> Result<Self, CliError> {
        config.validate()?;
        let schedule = config.schedule()?;
        let (base, _) = config.base_model()?;
        let solution =
            solve_riccati(&base, &RiccatiOptions::default()).map_err(numerical(None, "riccati"))?;
        let model = config.resolve_model(&solution)?;
        let validation = validate(&model, Some(&solution)).map_err(numerical(None, "validate"))?;
        Ok(Self {
            hash: config.hash(),
            config,
            model,
            solution,
            schedule,
            validation,
        })
    }

    pub fn run_seed(&self, seed: u64) -> Result<RunRecord, CliError> {
        let cfg = &self.config;
        let diag_cfg = &cfg.diagnostics;
        let (model, sol) = (&self.model, &self.solution);
        let some = Some(seed);
        let mut clock = Clock::new();

        let traj = simulate(model, cfg.steps, seed).map_err(numerical(some, "simulate"))?;
        let y = &traj.observations;
        clock.lap("simulate");
        let run = run_filter(sol, model, y).map_err(numerical(some, "filter"))?;
        clock.lap("filter");
        let log = run_online(y, &self.schedule).map_err(numerical(some, "predictor"))?;
        clock.lap("predictor");

        let mut regret = compute_regret(y, &run, &log, 1).map_err(numerical(some, "regret"))?;
        let losses = regret
            .per_step_losses
            .as_ref()
            .expect("computed with losses");
        let regret_curve = zip_curve(&cfg.checkpoints, losses.regret_at(1, &cfg.checkpoints))
            .map_err(numerical(some, "regret"))?;
        if !diag_cfg.per_step_losses {
            regret.per_step_losses = None;
        }
        let final_state = log
            .final_state
            .as_ref()
            .expect("steps >= T_init opens an epoch");
        let final_p = final_state.p;
        let g_p = closed_loop_responses(&model.a, &model.c, &sol.k, final_p)
            .map_err(numerical(some, "regret"))?;
        let estimation_error = (final_state.g_tilde() - &g_p).frobenius_norm();
        let epochs: Vec<EpochDiagnostics> = log
            .epochs
            .iter()
            .map(|record| EpochDiagnostics {
                logdet_check: LogdetCheck::from_epoch(record),
                record: record.clone(),
            })
            .collect();
        clock.lap("regret");

        let mut diagnostics = Diagnostics::default();
        if diag_cfg.logdet {
            diagnostics.logdet_all_pass = Some(epochs.iter().all(|e| e.logdet_check.pass));
        }
        if diag_cfg.arma {
            let mut arma =
                check_arma_bound(y, model, sol, &run, final_p).map_err(numerical(some, "arma"))?;
            if !diag_cfg.per_step_losses {
                arma.residual_norms.clear();
            }
            diagnostics.arma = Some(arma);
            clock.lap("arma");
        }
        if diag_cfg.pe {
            let opts = PeOptions {
                grid_ratio: diag_cfg.pe_grid_ratio,
                ..PeOptions::default()
            };
            // The stable-case comparison needs a bounded window covariance.
            let stable = (self.validation.rho_a < 1.0 - 1e-6).then_some(sol);
            diagnostics.pe = Some(
                check_persistency_observations(y, final_p, model, stable, &opts)
                    .map_err(numerical(some, "pe"))?,
            );
            clock.lap("pe");
        }
        if diag_cfg.whiteness {
            diagnostics.whiteness = Some(
                innovation_whiteness(&run.innovations, diag_cfg.whiteness_lags)
                    .map_err(numerical(some, "whiteness"))?,
            );
            clock.lap("whiteness");
        }
        if diag_cfg.alternative_regret {
            diagnostics.alternative_regret = Some(
                alternative_regret(
                    y,
                    &run,
                    Some(&log),
                    cfg.p_star(),
                    diag_cfg.fir_rho,
                    diag_cfg.fir_l,
                )
                .map_err(numerical(some, "alternative_regret"))?,
            );
            clock.lap("alternative_regret");
        }
        let mut state_regret_curve = None;
        if let Some(f) = diag_cfg.f_step {
            let mlog =
                run_online_multistep(y, &self.schedule, f).map_err(numerical(some, "f_step"))?;
            let o_f =
                observability_matrix(&model.a, &model.c, f).map_err(numerical(some, "f_step"))?;
            let f_regret =
                multistep_regret(y, &o_f, &run, &mlog, 1).map_err(numerical(some, "f_step"))?;
            let mut state_regret = None;
            if diag_cfg.state_prediction {
                let x_tilde =
                    state_predictions(&mlog, &o_f).map_err(numerical(some, "state_prediction"))?;
                let terms = state_regret_terms(&traj.states, &run.x_hat, &x_tilde)
                    .map_err(numerical(some, "state_prediction"))?;
                let curve = zip_curve(&cfg.checkpoints, cumulative_at(&terms, 1, &cfg.checkpoints))
                    .map_err(numerical(some, "state_prediction"))?;
                state_regret = Some(terms[1..].iter().sum());
                state_regret_curve = Some(curve);
            }
            diagnostics.f_step = Some(FStepReport {
                f,
                regret: f_regret,
                state_regret,
            });
            clock.lap("f_step");
        }

        Ok(RunRecord {
            config_hash: self.hash.clone(),
            seed,
            steps: cfg.steps,
            regret_curve,
            state_regret_curve,
            regret,
            final_p,
            estimation_error,
            epochs,
            diagnostics,
            timings: clock.0,
        })
    }

    /// Directory holding this experiment's outputs under `root`.
    pub fn directory(&self, root: &Path) -> PathBuf {
        root.join(&self.hash)
    }
}

fn zip_curve(
    checkpoints: &[usize],
    values: lsqkf_core::Result<Vec<f64>>,
) -> lsqkf_core::Result<Vec<CurvePoint>> {
    Ok(checkpoints
        .iter()
        .zip(values?)
        .map(|(&n, value)| CurvePoint { n, value })
        .collect())
}

/// Runs every seed, `jobs` at a time (all cores when `None`). With
/// `output = Some(root)` each record is written to
/// `root/<hash>/runs/<seed>.json` as soon as it completes, together with the
/// canonical config. Records come back sorted by seed.
pub fn run_experiment(
    experiment: &Experiment,
    jobs: Option<usize>,
    output: Option<&Path>,
) -> Result<Vec<RunRecord>, CliError> {
    let dir = output.map(|root| experiment.directory(root));
    if let Some(dir) = &dir {
        output::prepare_dir(dir, &experiment.config)?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    let mut records = pool.install(|| {
        experiment
            .config
            .seeds
            .par_iter()
            .map(|&seed| {
                let record = experiment.run_seed(seed)?;
                if let Some(dir) = &dir {
                    output::write_record(dir, &record)?;
                }
                Ok(record)
            })
            .collect::<Result<Vec<_>, CliError>>()
    })?;
    records.sort_by_key(|r| r.seed);
    Ok(records)
}
