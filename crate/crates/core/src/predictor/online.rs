use serde::{Deserialize, Serialize};

use super::ridge::{fit_range, past_window, RidgeState};
use super::schedule::{Epoch, EpochSchedule};
use crate::error::{Error, Result};
use crate::linalg::{pseudo_inverse_tall, Matrix};

/// Online estimator inside one epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorState {
    pub epoch: usize,
    pub p: usize,
    pub ridge: RidgeState,
}

impl PredictorState {
    /// Current estimate `G~`, of shape `fm x mp`.
    pub fn g_tilde(&self) -> &Matrix {
        &self.ridge.g
    }

    /// `G~ Z`; does not mutate the state.
    pub fn predict_next(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.ridge.predict(z)
    }

    /// Folds in the newest `(target, Z)` pair and returns the posterior
    /// quadratic form `Z^T V_k^{-1} Z`.
    pub fn recursive_update(&mut self, target: &[f64], z: &[f64]) -> Result<f64> {
        self.ridge.update(z, target)
    }
}

/// Per-epoch bookkeeping, closed when the next epoch starts or the run ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub index: usize,
    pub start: usize,
    /// One past the last prediction made in this epoch.
    pub end: usize,
    pub p: usize,
    /// Number of recursive updates applied after the batch fit.
    pub updates: usize,
    /// `sum Z_k^T V_k^{-1} Z_k` over the in-epoch updates.
    pub quadratic_sum: f64,
    /// `ln det V` after the batch fit that opened the epoch.
    pub logdet_start: f64,
    /// Incrementally maintained `ln det V` at the end of the epoch.
    pub logdet_end: f64,
    /// `ln det V` at the end of the epoch from a fresh factorization.
    pub logdet_end_recomputed: f64,
    /// `||V V^{-1} - I||_F` at the end of the epoch.
    pub inverse_residual: f64,
}

/// Predictions of a complete online run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionLog {
    /// Prediction horizon `f` (1 for one-step prediction).
    pub horizon: usize,
    /// `predictions[k]` is formed from `y_0..y_{k-1}`; zero during warm-up.
    pub predictions: Vec<Vec<f64>>,
    pub epochs: Vec<EpochRecord>,
    pub final_state: Option<PredictorState>,
}

/// Streaming form of the epoch-doubling least-squares predictor.
///
/// Each call to [`OnlinePredictor::step`] returns the prediction for the
/// next observation before that observation is stored, so predictions are
/// causal by construction.
#[derive(Debug, Clone)]
pub struct OnlinePredictor {
    schedule: EpochSchedule,
    output_dim: usize,
    horizon: usize,
    history: Vec<Vec<f64>>,
    state: Option<PredictorState>,
    current: Option<EpochRecord>,
    epochs: Vec<EpochRecord>,
}

impl OnlinePredictor {
    pub fn new(schedule: EpochSchedule, output_dim: usize) -> Self {
        Self::multistep(schedule, output_dim, 1).expect("horizon 1 is valid")
    }

    /// Predicts the stacked future `[y_k; ...; y_{k+f-1}]` from `Z_{k,p}`.
    pub fn multistep(schedule: EpochSchedule, output_dim: usize, horizon: usize) -> Result<Self> {
        if horizon == 0 || output_dim == 0 {
            return Err(Error::IndexOutOfRange {
                index: 0,
                reason: "output dimension and horizon must be at least 1".into(),
            });
        }
        Ok(Self {
            schedule,
            output_dim,
            horizon,
            history: Vec::new(),
            state: None,
            current: None,
            epochs: Vec::new(),
        })
    }

    pub fn state(&self) -> Option<&PredictorState> {
        self.state.as_ref()
    }

    /// Returns the prediction for the next observation, then stores `y`.
    pub fn step(&mut self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.output_dim {
            return Err(Error::LengthMismatch {
                expected: self.output_dim,
                actual: y.len(),
            });
        }
        let k = self.history.len();
        let f = self.horizon;
        if let Some(epoch) = self.schedule.epoch_of(k).filter(|e| e.start == k) {
            self.open_epoch(epoch)?;
        }
        let prediction = match &self.state {
            Some(st) => st.predict_next(&past_window(&self.history, k, st.p)?)?,
            None => vec![0.0; f * self.output_dim],
        };
        self.history.push(y.to_vec());

        if let Some(st) = self.state.as_mut() {
            let record = self.current.as_mut().expect("open epoch");
            record.end = k + 1;
            // The pair whose target window ends at y_k.
            if let Some(t) = (k + 1).checked_sub(f).filter(|&t| t >= st.p) {
                let z = past_window(&self.history, t, st.p)?;
                let target = self.history[t..t + f].concat();
                record.quadratic_sum += st.recursive_update(&target, &z)?;
                record.updates += 1;
            }
        }
        Ok(prediction)
    }

    fn open_epoch(&mut self, epoch: Epoch) -> Result<()> {
        self.close_epoch()?;
        let ridge = fit_range(
            &self.history,
            epoch.p,
            self.horizon,
            (epoch.start + 1).saturating_sub(self.horizon),
            self.schedule.lambda(),
            self.output_dim,
        )?;
        self.current = Some(EpochRecord {
            index: epoch.index,
            start: epoch.start,
            end: epoch.start,
            p: epoch.p,
            updates: 0,
            quadratic_sum: 0.0,
            logdet_start: ridge.logdet,
            logdet_end: ridge.logdet,
            logdet_end_recomputed: ridge.logdet,
            inverse_residual: 0.0,
        });
        self.state = Some(PredictorState {
            epoch: epoch.index,
            p: epoch.p,
            ridge,
        });
        Ok(())
    }

    fn close_epoch(&mut self) -> Result<()> {
        if let (Some(mut record), Some(st)) = (self.current.take(), self.state.as_ref()) {
            record.logdet_end = st.ridge.logdet;
            record.logdet_end_recomputed = st.ridge.recomputed_logdet()?;
            record.inverse_residual = st.ridge.inverse_residual()?;
            self.epochs.push(record);
        }
        Ok(())
    }

    /// Closes the running epoch and returns the full log.
    pub fn finish(mut self, predictions: Vec<Vec<f64>>) -> Result<PredictionLog> {
        self.close_epoch()?;
        Ok(PredictionLog {
            horizon: self.horizon,
            predictions,
            epochs: self.epochs,
            final_state: self.state,
        })
    }
}

/// Runs the one-step predictor over `y_0..y_N`.
pub fn run_online(observations: &[Vec<f64>], schedule: &EpochSchedule) -> Result<PredictionLog> {
    run_online_multistep(observations, schedule, 1)
}

/// Runs the `f`-step predictor; `predictions[k]` stacks forecasts of
/// `y_k..y_{k+f-1}` formed from data through `y_{k-1}`.
pub fn run_online_multistep(
    observations: &[Vec<f64>],
    schedule: &EpochSchedule,
    f: usize,
) -> Result<PredictionLog> {
    let m = observations
        .first()
        .map(Vec::len)
        .ok_or(Error::IndexOutOfRange {
            index: 0,
            reason: "no observations".into(),
        })?;
    let mut predictor = OnlinePredictor::multistep(*schedule, m, f)?;
    let predictions = observations
        .iter()
        .map(|y| predictor.step(y))
        .collect::<Result<Vec<_>>>()?;
    predictor.finish(predictions)
}

/// `x~ = O_f^+ G~_f Z`.
pub fn predict_state(g_tilde_f: &Matrix, o_f: &Matrix, z: &[f64]) -> Result<Vec<f64>> {
    if o_f.rows() != g_tilde_f.rows() {
        return Err(Error::DimensionMismatch(format!(
            "O_f has {} rows, the estimate {}",
            o_f.rows(),
            g_tilde_f.rows()
        )));
    }
    pseudo_inverse_tall(o_f)?.mul_vec(&g_tilde_f.mul_vec(z)?)
}

/// Maps every stacked prediction of an `f`-step log through `O_f^+`.
pub fn state_predictions(log: &PredictionLog, o_f: &Matrix) -> Result<Vec<Vec<f64>>> {
    let pinv = pseudo_inverse_tall(o_f)?;
    log.predictions.iter().map(|y| pinv.mul_vec(y)).collect()
}
