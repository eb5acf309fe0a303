use serde::{Deserialize, Serialize};

use super::KalmanSolution;
use crate::error::{Error, Result};
use crate::linalg::{axpy, sub_vec};
use crate::sysmodel::StateSpaceModel;

/// Output of the steady-state filter `x_{k+1} = A x_k + K e_k`, `x_0 = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterRun {
    pub x_hat: Vec<Vec<f64>>,
    pub y_hat: Vec<Vec<f64>>,
    pub innovations: Vec<Vec<f64>>,
}

impl FilterRun {
    pub fn len(&self) -> usize {
        self.y_hat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y_hat.is_empty()
    }
}

/// Runs the constant-gain predictor over `observations` (`y_0..y_N`).
pub fn run_filter(
    solution: &KalmanSolution,
    model: &StateSpaceModel,
    observations: &[Vec<f64>],
) -> Result<FilterRun> {
    let n = model.state_dim();
    let m = model.output_dim();
    if solution.k.shape() != (n, m) {
        return Err(Error::DimensionMismatch("gain does not match model".into()));
    }
    let len = observations.len();
    let mut x_hat = Vec::with_capacity(len);
    let mut y_hat = Vec::with_capacity(len);
    let mut innovations = Vec::with_capacity(len);
    let mut x = vec![0.0; n];
    for y in observations {
        if y.len() != m {
            return Err(Error::LengthMismatch {
                expected: m,
                actual: y.len(),
            });
        }
        let yh = model.c.mul_vec(&x)?;
        let e = sub_vec(y, &yh);
        let mut next = model.a.mul_vec(&x)?;
        axpy(1.0, &solution.k.mul_vec(&e)?, &mut next);
        x_hat.push(std::mem::replace(&mut x, next));
        y_hat.push(yh);
        innovations.push(e);
    }
    Ok(FilterRun {
        x_hat,
        y_hat,
        innovations,
    })
}
