use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kalman::{FilterRun, KalmanSolution};
use crate::linalg::{
    minimal_polynomial, norm2, spectral_norm, Matrix, MinimalPolynomial, DEFAULT_MINPOLY_TOL,
};
use crate::predictor::past_window;
use crate::sysmodel::StateSpaceModel;

/// Residuals of the ARMA-like recursion of the observation windows,
/// `delta_k = Z_k - sum_i a_i Z_{k-d+i}`, against the bound
/// `||delta_k|| <= Delta max_{i <= k-1} ||e_i||`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmaDiagnostics {
    pub minimal_polynomial: MinimalPolynomial,
    pub p: usize,
    /// `(d + 1) ||a||_1 max{||C|| ||K|| max_{0<=i<d} ||A^i||, 1} sqrt(p)`.
    pub delta_bound: f64,
    /// First window index checked (`p + d`).
    pub first_k: usize,
    /// `||delta_k||` for `k = first_k..`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub residual_norms: Vec<f64>,
    pub max_residual_norm: f64,
    pub sup_innovation_norm: f64,
    /// `max_k ||delta_k|| / (Delta max_{i<=k-1} ||e_i||)`; at most 1 when the bound holds.
    pub max_bound_ratio: f64,
    /// Largest gap between the window recursion and the innovation
    /// expansion `sum_s diag(M_s) E_{k-s}`, relative to `1 + ||delta_k||`.
    pub max_reconstruction_error: f64,
    pub pass: bool,
}

/// Moving-average taps `M_0 = I`,
/// `M_s = C A^{s-1} K - a_{d-s} I - sum_{t=1}^{s-1} a_{d-t} C A^{s-t-1} K`.
pub fn moving_average_taps(
    model: &StateSpaceModel,
    gain: &Matrix,
    poly: &MinimalPolynomial,
) -> Result<Vec<Matrix>> {
    let d = poly.degree;
    let m = model.output_dim();
    let a = &poly.coefficients;
    // cak[j] = C A^j K
    let mut cak = Vec::with_capacity(d);
    let mut ak = gain.clone();
    for _ in 0..d {
        cak.push(model.c.matmul(&ak)?);
        ak = model.a.matmul(&ak)?;
    }
    let eye = Matrix::identity(m);
    let mut taps = vec![eye.clone()];
    for s in 1..=d {
        let mut tap = &cak[s - 1] - &eye.scale(a[d - s]);
        for t in 1..s {
            tap = &tap - &cak[s - t - 1].scale(a[d - t]);
        }
        taps.push(tap);
    }
    Ok(taps)
}

/// The residual bound constant `Delta`.
pub fn arma_delta(
    model: &StateSpaceModel,
    gain: &Matrix,
    poly: &MinimalPolynomial,
    p: usize,
) -> Result<f64> {
    let mut max_power: f64 = 0.0;
    let mut power = Matrix::identity(model.state_dim());
    for _ in 0..poly.degree {
        max_power = max_power.max(spectral_norm(&power)?);
        power = power.matmul(&model.a)?;
    }
    let gain_term = spectral_norm(&model.c)? * spectral_norm(gain)? * max_power;
    Ok((poly.degree as f64 + 1.0) * poly.l1_norm * gain_term.max(1.0) * (p as f64).sqrt())
}

/// Checks the residual bound at every `k = p + d ..= N` of a filtered run.
pub fn check_arma_bound(
    observations: &[Vec<f64>],
    model: &StateSpaceModel,
    solution: &KalmanSolution,
    kalman_run: &FilterRun,
    p: usize,
) -> Result<ArmaDiagnostics> {
    if kalman_run.len() != observations.len() {
        return Err(Error::LengthMismatch {
            expected: observations.len(),
            actual: kalman_run.len(),
        });
    }
    let poly = minimal_polynomial(&model.a, DEFAULT_MINPOLY_TOL)?;
    let d = poly.degree;
    let delta_bound = arma_delta(model, &solution.k, &poly, p)?;
    let taps = moving_average_taps(model, &solution.k, &poly)?;
    let first_k = p + d;
    let last_k = observations.len().saturating_sub(1);
    let innovations = &kalman_run.innovations;

    // running_sup[k] = max_{i <= k - 1} ||e_i||
    let mut running_sup = Vec::with_capacity(innovations.len() + 1);
    running_sup.push(0.0_f64);
    for e in innovations {
        let prev = *running_sup.last().expect("nonempty");
        running_sup.push(prev.max(norm2(e)));
    }

    let mut residual_norms = Vec::new();
    let mut max_bound_ratio: f64 = 0.0;
    let mut max_reconstruction_error: f64 = 0.0;
    for k in first_k..=last_k {
        let mut delta = past_window(observations, k, p)?;
        for (i, &ai) in poly.coefficients.iter().enumerate() {
            let lagged = past_window(observations, k - d + i, p)?;
            delta
                .iter_mut()
                .zip(&lagged)
                .for_each(|(x, l)| *x -= ai * l);
        }
        let mut expansion = vec![0.0; delta.len()];
        for (s, tap) in taps.iter().enumerate() {
            let window = past_window(innovations, k - s, p)?;
            for (block, chunk) in expansion
                .chunks_mut(tap.rows())
                .zip(window.chunks(tap.cols()))
            {
                let contribution = tap.mul_vec(chunk)?;
                block
                    .iter_mut()
                    .zip(&contribution)
                    .for_each(|(x, c)| *x += c);
            }
        }
        let norm = norm2(&delta);
        let gap: f64 = delta
            .iter()
            .zip(&expansion)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        max_reconstruction_error = max_reconstruction_error.max(gap / (1.0 + norm));
        let scale = delta_bound * running_sup[k];
        let ratio = if scale > 0.0 {
            norm / scale
        } else if norm > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        max_bound_ratio = max_bound_ratio.max(ratio);
        residual_norms.push(norm);
    }
    let max_residual_norm = residual_norms.iter().cloned().fold(0.0, f64::max);
    Ok(ArmaDiagnostics {
        minimal_polynomial: poly,
        p,
        delta_bound,
        first_k,
        residual_norms,
        max_residual_norm,
        sup_innovation_norm: running_sup[last_k],
        max_bound_ratio,
        max_reconstruction_error,
        pass: max_bound_ratio <= 1.0,
    })
}
