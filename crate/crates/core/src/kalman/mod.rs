//! Steady-state Kalman filter of a known model: Riccati solution, filter
//! recursion, covariance recursions and an innovation whiteness check.

mod covariance;
mod filter;
mod whiteness;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{spectral_radius_gelfand, Cholesky, Matrix, DEFAULT_GELFAND_POWER};
use crate::sysmodel::StateSpaceModel;

pub use covariance::{
    innovation_window_covariance, past_window_covariance, state_covariances, CovarianceDiagnostics,
};
pub use filter::{run_filter, FilterRun};
pub use whiteness::{innovation_whiteness, WhitenessReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KalmanSolution {
    /// Stabilizing solution of the prediction Riccati equation.
    pub p: Matrix,
    /// Gain `K = A P C^T (C P C^T + R)^{-1}`.
    pub k: Matrix,
    /// Innovation covariance `C P C^T + R`.
    pub r_bar: Matrix,
    /// `A - K C`.
    pub closed_loop: Matrix,
    pub rho_closed_loop: f64,
    pub iterations: usize,
    /// `||P - (A-KC) P (A-KC)^T - Q - K R K^T||_F / ||P||_F`.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiccatiOptions {
    /// Relative Frobenius change between iterates at which to stop.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for RiccatiOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 1_000_000,
        }
    }
}

/// Iterates `P <- A P A^T - A P C^T (C P C^T + R)^{-1} C P A^T + Q` from
/// `P = Q` until the relative change drops below `opts.tol`.
pub fn solve_riccati(model: &StateSpaceModel, opts: &RiccatiOptions) -> Result<KalmanSolution> {
    model.check_dimensions()?;
    if Cholesky::new(&model.r).is_err() {
        return Err(Error::AssumptionViolated(
            "R must be positive definite".into(),
        ));
    }
    let (a, c, q, r) = (&model.a, &model.c, &model.q, &model.r);
    let at = a.transpose();
    let ct = c.transpose();

    let mut p = q.clone();
    let mut iterations = 0;
    loop {
        if iterations == opts.max_iter {
            return Err(Error::NoConvergence {
                what: "Riccati fixed-point iteration",
                iterations,
                estimate: p.frobenius_norm(),
            });
        }
        iterations += 1;
        let apct = &(a * &p) * &ct;
        let s = &(&(c * &p) * &ct) + r;
        let ch = Cholesky::new(&s).map_err(|_| {
            Error::AssumptionViolated("innovation covariance lost definiteness".into())
        })?;
        // A P C^T S^{-1} C P A^T = Y^T Y with Y = L^{-1} (A P C^T)^T.
        let mut y = apct.transpose();
        for j in 0..y.cols() {
            let mut col = y.col_vec(j);
            ch.forward_in_place(&mut col);
            for (i, v) in col.into_iter().enumerate() {
                y[(i, j)] = v;
            }
        }
        let mut next = &(&(&(a * &p) * &at) - &(&y.transpose() * &y)) + q;
        next.symmetrize();
        if !next.is_finite() {
            return Err(Error::NoConvergence {
                what: "Riccati fixed-point iteration (diverged)",
                iterations,
                estimate: f64::INFINITY,
            });
        }
        let scale = next.frobenius_norm();
        let change = (&next - &p).frobenius_norm();
        p = next;
        if change <= opts.tol * scale {
            break;
        }
    }
    from_riccati_solution(model, p, iterations)
}

fn from_riccati_solution(
    model: &StateSpaceModel,
    p: Matrix,
    iterations: usize,
) -> Result<KalmanSolution> {
    let (a, c) = (&model.a, &model.c);
    let ct = c.transpose();
    let r_bar = {
        let mut s = &(&(c * &p) * &ct) + &model.r;
        s.symmetrize();
        s
    };
    // K = A P C^T R_bar^{-1}, i.e. R_bar K^T = (A P C^T)^T.
    let apct = &(a * &p) * &ct;
    let k = Cholesky::new(&r_bar)?.solve(&apct.transpose())?.transpose();
    let closed_loop = a - &(&k * c);
    let lhs = &(&(&closed_loop * &p) * &closed_loop.transpose())
        + &(&model.q + &(&(&k * &model.r) * &k.transpose()));
    let p_norm = p.frobenius_norm();
    let residual = if p_norm == 0.0 {
        (&p - &lhs).frobenius_norm()
    } else {
        (&p - &lhs).frobenius_norm() / p_norm
    };
    let rho_closed_loop = spectral_radius_gelfand(&closed_loop, DEFAULT_GELFAND_POWER)?;
    Ok(KalmanSolution {
        p,
        k,
        r_bar,
        closed_loop,
        rho_closed_loop,
        iterations,
        residual,
    })
}
