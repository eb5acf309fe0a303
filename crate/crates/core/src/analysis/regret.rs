use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kalman::FilterRun;
use crate::linalg::{dot, Matrix};
use crate::predictor::PredictionLog;

/// Online-versus-Kalman regret with its square-loss / martingale split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    /// Last index summed.
    pub n: usize,
    pub start: usize,
    /// `sum ||y - y~||^2 - sum ||y - y^||^2`.
    pub regret: f64,
    /// `sum ||y^ - y~||^2`.
    pub square_loss: f64,
    /// `sum e^T (y^ - y~)`.
    pub martingale_term: f64,
    /// `|regret - square_loss - 2 martingale_term|`.
    pub identity_residual: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_step_losses: Option<PerStepLosses>,
}

/// `online[k] = ||y_k - y~_k||^2`, `kalman[k] = ||y_k - y^_k||^2` for `k = 0..=N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerStepLosses {
    pub online: Vec<f64>,
    pub kalman: Vec<f64>,
}

impl PerStepLosses {
    /// Cumulative regret `sum_{k=start}^{c} (online_k - kalman_k)` at each checkpoint `c`.
    pub fn regret_at(&self, start: usize, checkpoints: &[usize]) -> Result<Vec<f64>> {
        let diffs: Vec<f64> = self
            .online
            .iter()
            .zip(&self.kalman)
            .map(|(a, b)| a - b)
            .collect();
        cumulative_at(&diffs, start, checkpoints)
    }
}

impl RegretReport {
    /// Whether the decomposition identity holds to `1e-6 (1 + |R_N|)`.
    pub fn identity_holds(&self) -> bool {
        self.identity_residual <= 1e-6 * (1.0 + self.regret.abs())
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `sum_{k=start}^{c} diffs[k]` for every checkpoint `c`.
pub fn cumulative_at(diffs: &[f64], start: usize, checkpoints: &[usize]) -> Result<Vec<f64>> {
    checkpoints
        .iter()
        .map(|&c| {
            if c >= diffs.len() {
                return Err(Error::IndexOutOfRange {
                    index: c,
                    reason: format!(
                        "checkpoint beyond horizon {}",
                        diffs.len().saturating_sub(1)
                    ),
                });
            }
            Ok(diffs.get(start..=c).map_or(0.0, |s| s.iter().sum()))
        })
        .collect()
}

fn check_lengths(expected: usize, lens: &[usize]) -> Result<()> {
    match lens.iter().find(|&&l| l != expected) {
        Some(&actual) => Err(Error::LengthMismatch { expected, actual }),
        None => Ok(()),
    }
}

/// Regret of the online predictions against the Kalman predictions over
/// `k = start..=N`.
pub fn compute_regret(
    observations: &[Vec<f64>],
    kalman_run: &FilterRun,
    online_log: &PredictionLog,
    start: usize,
) -> Result<RegretReport> {
    if online_log.horizon != 1 {
        return Err(Error::DimensionMismatch(
            "regret needs one-step predictions".into(),
        ));
    }
    let len = observations.len();
    check_lengths(len, &[kalman_run.len(), online_log.predictions.len()])?;
    let mut online = Vec::with_capacity(len);
    let mut kalman = Vec::with_capacity(len);
    let (mut regret, mut square_loss, mut martingale_term) = (0.0, 0.0, 0.0);
    for k in 0..len {
        let y = &observations[k];
        let y_hat = &kalman_run.y_hat[k];
        let y_tilde = &online_log.predictions[k];
        check_lengths(y.len(), &[y_tilde.len(), y_hat.len()])?;
        let lo = sq_dist(y, y_tilde);
        let lk = sq_dist(y, y_hat);
        online.push(lo);
        kalman.push(lk);
        if k >= start {
            let gap: Vec<f64> = y_hat.iter().zip(y_tilde).map(|(a, b)| a - b).collect();
            regret += lo - lk;
            square_loss += dot(&gap, &gap);
            martingale_term += dot(&kalman_run.innovations[k], &gap);
        }
    }
    Ok(RegretReport {
        n: len.saturating_sub(1),
        start,
        regret,
        square_loss,
        martingale_term,
        identity_residual: (regret - square_loss - 2.0 * martingale_term).abs(),
        per_step_losses: Some(PerStepLosses { online, kalman }),
    })
}

/// Per-step state regret terms `||x_k - x~_k||^2 - ||x_k - x^_k||^2`.
pub fn state_regret_terms(
    states: &[Vec<f64>],
    kalman_states: &[Vec<f64>],
    online_states: &[Vec<f64>],
) -> Result<Vec<f64>> {
    check_lengths(states.len(), &[kalman_states.len(), online_states.len()])?;
    states
        .iter()
        .zip(kalman_states)
        .zip(online_states)
        .map(|((x, xh), xt)| {
            check_lengths(x.len(), &[xh.len(), xt.len()])?;
            Ok(sq_dist(x, xt) - sq_dist(x, xh))
        })
        .collect()
}

/// `sum_{k=start}^{N} ||x_k - x~_k||^2 - ||x_k - x^_k||^2`.
pub fn state_regret(
    states: &[Vec<f64>],
    kalman_states: &[Vec<f64>],
    online_states: &[Vec<f64>],
    start: usize,
) -> Result<f64> {
    let terms = state_regret_terms(states, kalman_states, online_states)?;
    Ok(terms.get(start..).map_or(0.0, |s| s.iter().sum()))
}

/// Regret of the stacked `f`-step predictions against the Kalman forecasts
/// `O_f x^_k`, over every `k >= start` whose future window is observed.
pub fn multistep_regret(
    observations: &[Vec<f64>],
    observability: &Matrix,
    kalman_run: &FilterRun,
    online_log: &PredictionLog,
    start: usize,
) -> Result<f64> {
    let f = online_log.horizon;
    let len = observations.len();
    check_lengths(len, &[kalman_run.len(), online_log.predictions.len()])?;
    let mut total = 0.0;
    for k in start..(len + 1).saturating_sub(f) {
        let target = observations[k..k + f].concat();
        let kalman = observability.mul_vec(&kalman_run.x_hat[k])?;
        check_lengths(
            target.len(),
            &[kalman.len(), online_log.predictions[k].len()],
        )?;
        total += sq_dist(&target, &online_log.predictions[k]) - sq_dist(&target, &kalman);
    }
    Ok(total)
}
