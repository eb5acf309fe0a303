//! Linear-Gaussian state-space models: validation, simulation and
//! structural block matrices.
//!
//! ```text
//! x_{k+1} = A x_k + w_k,   w_k ~ N(0, Q)
//! y_k     = C x_k + v_k,   v_k ~ N(0, R),   x_0 ~ N(0, Sigma0)
//! ```

mod presets;
mod simulate;
mod structure;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kalman::KalmanSolution;
use crate::linalg::{
    numerical_rank, spectral_radius_gelfand, symmetric_eigenvalues, Matrix, DEFAULT_GELFAND_POWER,
};

pub use presets::{Preset, PresetInfo};
pub use simulate::{psd_factor, simulate, simulate_with_factors, NoiseFactors, Trajectory};
pub use structure::{
    closed_loop_responses, controllability_matrix, kalman_controllability, observability_matrix,
    toeplitz_response,
};

/// Relative tolerance on Gram eigenvalues used for every rank decision.
pub const RANK_TOL: f64 = 1e-10;
/// Allowance on the Gelfand estimate of `rho(A)` before a model counts as explosive.
pub const NON_EXPLOSIVE_SLACK: f64 = 1e-6;
const PSD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpaceModel {
    pub a: Matrix,
    pub c: Matrix,
    pub q: Matrix,
    pub r: Matrix,
    pub sigma0: Matrix,
}

impl StateSpaceModel {
    /// Checks dimensions, symmetry, `Q, Sigma0 >= 0` and `R > 0`.
    pub fn new(a: Matrix, c: Matrix, q: Matrix, r: Matrix, sigma0: Matrix) -> Result<Self> {
        let model = Self { a, c, q, r, sigma0 };
        model.check()?;
        Ok(model)
    }

    pub fn state_dim(&self) -> usize {
        self.a.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.c.rows()
    }

    pub fn check_dimensions(&self) -> Result<()> {
        let n = self.a.rows();
        let m = self.c.rows();
        let fail = |what: &str, got: (usize, usize), want: (usize, usize)| {
            Err(Error::DimensionMismatch(format!(
                "{what} is {}x{}, expected {}x{}",
                got.0, got.1, want.0, want.1
            )))
        };
        if n == 0 || !self.a.is_square() {
            return fail("A", self.a.shape(), (n, n));
        }
        if m == 0 || self.c.cols() != n {
            return fail("C", self.c.shape(), (m.max(1), n));
        }
        if self.q.shape() != (n, n) {
            return fail("Q", self.q.shape(), (n, n));
        }
        if self.r.shape() != (m, m) {
            return fail("R", self.r.shape(), (m, m));
        }
        if self.sigma0.shape() != (n, n) {
            return fail("Sigma0", self.sigma0.shape(), (n, n));
        }
        Ok(())
    }

    fn check(&self) -> Result<()> {
        self.check_dimensions()?;
        for (name, mat) in [("Q", &self.q), ("Sigma0", &self.sigma0)] {
            check_psd(name, mat)?;
        }
        check_symmetric("R", &self.r)?;
        let eig = symmetric_eigenvalues(&self.r)?;
        if !(eig[0] > 0.0) {
            return Err(Error::AssumptionViolated(format!(
                "R must be positive definite (smallest eigenvalue {:.3e})",
                eig[0]
            )));
        }
        Ok(())
    }

    /// Returns the model with `Sigma0 = P`, the steady-state prediction
    /// covariance, so that the constant-gain filter is exactly optimal from
    /// time zero.
    pub fn with_stationary_initial(mut self, kalman: &KalmanSolution) -> Self {
        self.sigma0 = kalman.p.clone();
        self
    }
}

fn check_symmetric(name: &str, m: &Matrix) -> Result<()> {
    if !m.is_symmetric(1e-10 * m.max_abs().max(1.0)) {
        return Err(Error::AssumptionViolated(format!(
            "{name} must be symmetric"
        )));
    }
    Ok(())
}

fn check_psd(name: &str, m: &Matrix) -> Result<()> {
    check_symmetric(name, m)?;
    let eig = symmetric_eigenvalues(m)?;
    let scale = eig.iter().fold(0.0_f64, |s, e| s.max(e.abs()));
    if eig[0] < -PSD_TOL * scale {
        return Err(Error::AssumptionViolated(format!(
            "{name} must be positive semidefinite (smallest eigenvalue {:.3e})",
            eig[0]
        )));
    }
    Ok(())
}

/// Structural properties of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelValidation {
    pub observable: bool,
    pub controllable_process: bool,
    /// `(A, K)` controllability; only known once a Kalman gain is supplied.
    pub controllable_gain: Option<bool>,
    pub rho_a: f64,
    pub rho_closed_loop: Option<f64>,
    pub non_explosive: bool,
}

impl ModelValidation {
    /// Observability, process controllability and non-explosiveness all hold.
    pub fn standing_assumptions_hold(&self) -> bool {
        self.observable && self.controllable_process && self.non_explosive
    }

    /// Human-readable warnings for every violated property.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.observable {
            out.push("(A, C) is not observable".to_string());
        }
        if !self.controllable_process {
            out.push("(A, Q^1/2) is not controllable".to_string());
        }
        if self.controllable_gain == Some(false) {
            out.push("(A, K) is not controllable; the innovation form is not minimal".to_string());
        }
        if !self.non_explosive {
            out.push(format!(
                "Gelfand estimate of rho(A) = {:.6} exceeds 1 + {NON_EXPLOSIVE_SLACK:e}; \
                 the estimate is biased upward for Jordan blocks, proceeding anyway",
                self.rho_a
            ));
        }
        if let Some(r) = self.rho_closed_loop {
            if r >= 1.0 {
                out.push(format!(
                    "closed-loop matrix A - KC is not stable (rho ~ {r:.6})"
                ));
            }
        }
        out
    }
}

/// Computes the structural flags. Ranks use Gram-eigenvalue thresholding
/// at [`RANK_TOL`]; radii use the Gelfand estimate with `k = 512`.
pub fn validate(
    model: &StateSpaceModel,
    kalman: Option<&KalmanSolution>,
) -> Result<ModelValidation> {
    model.check_dimensions()?;
    let n = model.state_dim();
    let observable = numerical_rank(&observability_matrix(&model.a, &model.c, n)?, RANK_TOL)? == n;
    // Gramian sum_i A^i Q A^i^T has the rank of [Q^1/2, A Q^1/2, ...].
    let mut gramian = Matrix::zeros(n, n);
    let mut ai = Matrix::identity(n);
    for _ in 0..n {
        gramian = &gramian + &(&(&ai * &model.q) * &ai.transpose());
        ai = &ai * &model.a;
    }
    let controllable_process = numerical_rank(&gramian, RANK_TOL)? == n;
    let rho_a = spectral_radius_gelfand(&model.a, DEFAULT_GELFAND_POWER)?;
    let (controllable_gain, rho_closed_loop) = match kalman {
        Some(sol) => {
            let ctrb = controllability_matrix(&model.a, &sol.k, n)?;
            (
                Some(numerical_rank(&ctrb, RANK_TOL)? == n),
                Some(sol.rho_closed_loop),
            )
        }
        None => (None, None),
    };
    Ok(ModelValidation {
        observable,
        controllable_process,
        controllable_gain,
        rho_a,
        rho_closed_loop,
        non_explosive: rho_a <= 1.0 + NON_EXPLOSIVE_SLACK,
    })
}
