use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kalman::FilterRun;
use crate::linalg::{spectral_norm, Cholesky, Matrix};
use crate::predictor::PredictionLog;

/// Relative diagonal jitter used when the FIR Gram matrix is singular.
pub const FIR_JITTER: f64 = 1e-10;

/// Comparison against the best order-`p*` FIR predictor fitted in hindsight
/// over the whole record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlternativeRegret {
    pub p_star: usize,
    /// `sum_k ||y_k - y^_k||^2`.
    pub kalman_loss: f64,
    /// `min_G sum_k ||y_k - G Z_k||^2` with zero padding before time 0.
    pub fir_loss: f64,
    /// `kalman_loss - fir_loss`.
    pub kalman_regret: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub online_loss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub online_regret: Option<f64>,
    /// `max_t ||g_t|| / (L rho^t)` over the fitted taps.
    pub class_ratio: f64,
    /// Every fitted tap satisfies `||g_t|| <= L rho^t`.
    pub in_class: bool,
    /// The Gram matrix needed jitter to factor.
    pub jittered: bool,
}

/// Zero-padded `[y_{k-p}; ...; y_{k-1}]`.
fn padded_window(observations: &[Vec<f64>], k: usize, p: usize, m: usize, out: &mut Vec<f64>) {
    out.clear();
    for t in (k as isize - p as isize)..k as isize {
        if t < 0 {
            out.extend(std::iter::repeat_n(0.0, m));
        } else {
            out.extend_from_slice(&observations[t as usize]);
        }
    }
}

/// Fits the order-`p_star` FIR predictor by unregularized least squares
/// over `k = 0..=N` and reports the Kalman (and optionally online) loss
/// above its infimum. The class `||g_t|| <= L rho^t` is checked after the fit.
pub fn alternative_regret(
    observations: &[Vec<f64>],
    kalman_run: &FilterRun,
    online_log: Option<&PredictionLog>,
    p_star: usize,
    rho: f64,
    l_bound: f64,
) -> Result<AlternativeRegret> {
    let len = observations.len();
    if p_star == 0 || p_star >= len {
        return Err(Error::IndexOutOfRange {
            index: p_star,
            reason: format!("FIR order must lie in 1..{len}"),
        });
    }
    if kalman_run.len() != len {
        return Err(Error::LengthMismatch {
            expected: len,
            actual: kalman_run.len(),
        });
    }
    let m = observations[0].len();
    let dim = m * p_star;
    let mut gram = Matrix::zeros(dim, dim);
    let mut cross = Matrix::zeros(m, dim);
    let mut z = Vec::with_capacity(dim);
    for k in 0..len {
        padded_window(observations, k, p_star, m, &mut z);
        gram.add_outer(1.0, &z, &z);
        cross.add_outer(1.0, &observations[k], &z);
    }
    let (chol, jittered) = match Cholesky::new(&gram) {
        Ok(ch) => (ch, false),
        Err(Error::NotPositiveDefinite) => {
            let mut jit = gram.clone();
            jit.add_diag(FIR_JITTER * (gram.trace() / dim as f64).max(f64::MIN_POSITIVE));
            (Cholesky::new(&jit)?, true)
        }
        Err(e) => return Err(e),
    };
    let g = chol.solve(&cross.transpose())?.transpose();

    let sq =
        |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum() };
    let mut fir_loss = 0.0;
    let mut kalman_loss = 0.0;
    for k in 0..len {
        padded_window(observations, k, p_star, m, &mut z);
        fir_loss += sq(&observations[k], &g.mul_vec(&z)?);
        kalman_loss += sq(&observations[k], &kalman_run.y_hat[k]);
    }
    let online_loss = match online_log {
        Some(log) => {
            if log.predictions.len() != len {
                return Err(Error::LengthMismatch {
                    expected: len,
                    actual: log.predictions.len(),
                });
            }
            Some(
                (0..len)
                    .map(|k| sq(&observations[k], &log.predictions[k]))
                    .sum::<f64>(),
            )
        }
        None => None,
    };

    // Tap g_t multiplies y_{k-t}, which sits at block p* - t of Z_k.
    let mut class_ratio: f64 = 0.0;
    for t in 1..=p_star {
        let tap = g.block(0, (p_star - t) * m, m, m);
        let bound = l_bound * rho.powi(t as i32);
        let norm = spectral_norm(&tap)?;
        let ratio = if bound > 0.0 {
            norm / bound
        } else if norm > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        class_ratio = class_ratio.max(ratio);
    }
    Ok(AlternativeRegret {
        p_star,
        kalman_loss,
        fir_loss,
        kalman_regret: kalman_loss - fir_loss,
        online_loss,
        online_regret: online_loss.map(|l| l - fir_loss),
        class_ratio,
        in_class: class_ratio <= 1.0,
        jittered,
    })
}
