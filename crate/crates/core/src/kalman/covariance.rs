use serde::{Deserialize, Serialize};

use super::KalmanSolution;
use crate::error::{Error, Result};
use crate::linalg::{spectral_radius_gelfand, Matrix, DEFAULT_GELFAND_POWER};
use crate::sysmodel::{observability_matrix, toeplitz_response, StateSpaceModel};

const GAMMA_INF_TOL: f64 = 1e-12;
const GAMMA_INF_CAP: usize = 1_000_000;
const MARGINAL_RHO: f64 = 1.0 - 1e-6;

/// Covariances `Gamma_k = E x_hat_k x_hat_k^T` of the filter state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceDiagnostics {
    /// `Gamma_0 = 0, ..., Gamma_{k_max}`.
    pub gamma: Vec<Matrix>,
    /// Fixed point of the Lyapunov recursion; absent when `A` is not
    /// (estimated) strictly stable.
    pub gamma_inf: Option<Matrix>,
}

/// Runs `Gamma_k = A Gamma_{k-1} A^T + K R_bar K^T` from `Gamma_0 = 0`.
pub fn state_covariances(
    solution: &KalmanSolution,
    model: &StateSpaceModel,
    k_max: usize,
) -> Result<CovarianceDiagnostics> {
    if k_max == 0 {
        return Err(Error::IndexOutOfRange {
            index: 0,
            reason: "k_max must be at least 1".into(),
        });
    }
    let n = model.state_dim();
    let a = &model.a;
    let at = a.transpose();
    let drive = &(&solution.k * &solution.r_bar) * &solution.k.transpose();
    let step = |g: &Matrix| -> Matrix {
        let mut next = &(&(a * g) * &at) + &drive;
        next.symmetrize();
        next
    };

    let mut gamma = Vec::with_capacity(k_max + 1);
    gamma.push(Matrix::zeros(n, n));
    for k in 1..=k_max {
        let next = step(&gamma[k - 1]);
        gamma.push(next);
    }

    let rho = spectral_radius_gelfand(a, DEFAULT_GELFAND_POWER)?;
    let gamma_inf = if rho < MARGINAL_RHO {
        let mut g = gamma[k_max].clone();
        let mut converged = false;
        for _ in 0..GAMMA_INF_CAP {
            let next = step(&g);
            let change = (&next - &g).frobenius_norm();
            let scale = next.frobenius_norm();
            g = next;
            if change <= GAMMA_INF_TOL * scale || scale == 0.0 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NoConvergence {
                what: "Lyapunov fixed-point iteration",
                iterations: GAMMA_INF_CAP,
                estimate: g.frobenius_norm(),
            });
        }
        Some(g)
    } else {
        None
    };
    Ok(CovarianceDiagnostics { gamma, gamma_inf })
}

/// `Sigma_E = T_p diag(R_bar, ..., R_bar) T_p^T`, the covariance of the
/// innovation part of a past window.
pub fn innovation_window_covariance(
    solution: &KalmanSolution,
    model: &StateSpaceModel,
    p: usize,
) -> Result<Matrix> {
    let m = model.output_dim();
    let t = toeplitz_response(&model.a, &model.c, &solution.k, p)?;
    let mut blocks = Matrix::zeros(m * p, m * p);
    for i in 0..p {
        blocks.set_block(i * m, i * m, &solution.r_bar);
    }
    let mut out = &(&t * &blocks) * &t.transpose();
    out.symmetrize();
    Ok(out)
}

/// `Gamma_{Z,k} = O_p Gamma_{k-p} O_p^T + Sigma_E`, the covariance of the
/// past window `Z_{k,p}` when `Sigma0 = P`.
pub fn past_window_covariance(
    solution: &KalmanSolution,
    model: &StateSpaceModel,
    p: usize,
    k: usize,
) -> Result<Matrix> {
    if k < p {
        return Err(Error::IndexOutOfRange {
            index: k,
            reason: format!("window needs k >= p = {p}"),
        });
    }
    let o = observability_matrix(&model.a, &model.c, p)?;
    let gamma = if k == p {
        Matrix::zeros(model.state_dim(), model.state_dim())
    } else {
        state_covariances(solution, model, k - p)?
            .gamma
            .pop()
            .expect("nonempty")
    };
    let mut out =
        &(&(&o * &gamma) * &o.transpose()) + &innovation_window_covariance(solution, model, p)?;
    out.symmetrize();
    Ok(out)
}
