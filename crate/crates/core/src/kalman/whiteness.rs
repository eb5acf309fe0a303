use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Normalized empirical cross-correlations of an innovation sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhitenessReport {
    pub samples: usize,
    pub max_lag: usize,
    /// Band `4 / sqrt(N)`.
    pub threshold: f64,
    /// `corr[l - 1][(i, j)] = sum_k e_{k+l,i} e_{k,j} / (N sqrt(c_ii c_jj))`.
    pub correlations: Vec<Matrix>,
    pub max_abs_correlation: f64,
    /// Empirical `E e e^T` (no mean removal).
    pub lag0_covariance: Matrix,
    pub pass: bool,
}

/// Flags the sequence white when every normalized cross-correlation at
/// lags `1..=max_lag` lies inside `4 / sqrt(N)`.
pub fn innovation_whiteness(innovations: &[Vec<f64>], max_lag: usize) -> Result<WhitenessReport> {
    let n = innovations.len();
    if max_lag == 0 || n < 100 * max_lag {
        return Err(Error::IndexOutOfRange {
            index: n,
            reason: format!(
                "whiteness check needs at least 100 samples per lag (max_lag {max_lag})"
            ),
        });
    }
    let m = innovations[0].len();
    let nf = n as f64;
    let cross = |lag: usize| -> Matrix {
        let mut c = Matrix::zeros(m, m);
        for k in 0..(n - lag) {
            c.add_outer(1.0, &innovations[k + lag], &innovations[k]);
        }
        c.scale(1.0 / nf)
    };
    let lag0 = cross(0);
    let mut correlations = Vec::with_capacity(max_lag);
    let mut max_abs: f64 = 0.0;
    let mut degenerate = false;
    for lag in 1..=max_lag {
        let mut c = cross(lag);
        for i in 0..m {
            for j in 0..m {
                let denom = (lag0[(i, i)] * lag0[(j, j)]).sqrt();
                if denom > 0.0 {
                    c[(i, j)] /= denom;
                } else {
                    degenerate = true;
                    c[(i, j)] = f64::NAN;
                }
                max_abs = max_abs.max(c[(i, j)].abs());
            }
        }
        correlations.push(c);
    }
    let threshold = 4.0 / nf.sqrt();
    Ok(WhitenessReport {
        samples: n,
        max_lag,
        threshold,
        correlations,
        max_abs_correlation: max_abs,
        lag0_covariance: lag0,
        pass: !degenerate && max_abs <= threshold,
    })
}
