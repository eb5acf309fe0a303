use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, Cholesky, Matrix};
use crate::predictor::EpochRecord;

/// Both sides of the self-normalized log-determinant inequality
/// `sum Z_k^T V_k^{-1} Z_k <= ln det V_end - ln det V_start`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogdetCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// Slack allowed on the right-hand side.
pub const LOGDET_SLACK: f64 = 1e-9;

impl LogdetCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            pass: lhs <= rhs + LOGDET_SLACK,
        }
    }

    /// The inequality as tracked by the online predictor over one epoch,
    /// with the right-hand side taken from fresh factorizations.
    pub fn from_epoch(record: &EpochRecord) -> Self {
        Self::new(
            record.quadratic_sum,
            record.logdet_end_recomputed - record.logdet_start,
        )
    }
}

/// Evaluates the inequality directly: `V` starts at
/// `lambda I + sum_{prior} Z Z^T`, then each epoch window `Z_k` is added and
/// `Z_k^T V_k^{-1} Z_k` is measured against the updated `V_k` by a fresh
/// Cholesky solve.
pub fn check_logdet_lemma(
    prior_windows: &[Vec<f64>],
    epoch_windows: &[Vec<f64>],
    lambda: f64,
) -> Result<LogdetCheck> {
    let dim = match prior_windows.first().or(epoch_windows.first()) {
        Some(z) => z.len(),
        None => return Ok(LogdetCheck::new(0.0, 0.0)),
    };
    let mut v = Matrix::identity(dim).scale(lambda);
    for z in prior_windows {
        add(&mut v, z)?;
    }
    let start = Cholesky::new(&v)?.log_det();
    let mut lhs = 0.0;
    let mut end = start;
    for z in epoch_windows {
        add(&mut v, z)?;
        let ch = Cholesky::new(&v)?;
        lhs += dot(z, &ch.solve_vec(z));
        end = ch.log_det();
    }
    Ok(LogdetCheck::new(lhs, end - start))
}

fn add(v: &mut Matrix, z: &[f64]) -> Result<()> {
    if z.len() != v.rows() {
        return Err(Error::LengthMismatch {
            expected: v.rows(),
            actual: z.len(),
        });
    }
    v.add_outer(1.0, z, z);
    Ok(())
}
