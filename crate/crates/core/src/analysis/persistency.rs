use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kalman::{innovation_window_covariance, state_covariances, KalmanSolution};
use crate::linalg::{min_eigenvalue_spd, symmetric_eigenvalues, Cholesky, Matrix};
use crate::predictor::past_window;
use crate::sysmodel::{observability_matrix, StateSpaceModel};

/// Settings of the excitation check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeOptions {
    /// Ratio between consecutive window counts on the check grid.
    pub grid_ratio: f64,
    pub eig_tol: f64,
    pub eig_max_iter: usize,
}

impl Default for PeOptions {
    fn default() -> Self {
        Self {
            grid_ratio: 1.25,
            eig_tol: 1e-8,
            eig_max_iter: 10_000,
        }
    }
}

/// One grid point of the excitation check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PePoint {
    pub k: usize,
    /// `lambda_min(sum_{j=p}^{k} Z_j Z_j^T)`.
    pub lambda_min: f64,
    pub gram_trace: f64,
    /// `lambda_min >= (k - p + 1) sigma_min(R) / 4`.
    pub holds: bool,
    /// `lambda_min(Gamma_Z^{-1/2} Gram Gamma_Z^{-T/2}) / ((k - p + 1) / 32)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stable_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PEReport {
    pub p: usize,
    pub first_k: usize,
    pub last_k: usize,
    /// `sigma_min(R) / 4`.
    pub sigma_r_quarter: f64,
    /// `min_k lambda_min / (k - p + 1)` over the grid.
    pub min_normalized: f64,
    /// `min_normalized` restricted to grid points from `n0_hat` on.
    pub min_normalized_after_n0: Option<f64>,
    /// Smallest grid `k` from which the bound holds at every later grid point.
    pub n0_hat: Option<usize>,
    /// Smallest stable-case ratio over grid points from `n0_hat` on.
    pub stable_bound_ratio: Option<f64>,
    pub points: Vec<PePoint>,
    pub pass: bool,
}

/// Window counts `1, ..., total` growing geometrically by `ratio`.
pub fn geometric_grid(total: usize, ratio: f64) -> Vec<usize> {
    let mut out = Vec::new();
    let mut c = 1usize;
    while c < total {
        out.push(c);
        c = ((c as f64 * ratio).ceil() as usize).max(c + 1);
    }
    if total > 0 {
        out.push(total);
    }
    out
}

/// Checks the linear growth of `lambda_min` for windows
/// `windows[i] = Z_{first_k + i}` with `first_k = p`.
///
/// `gamma_z(k)` supplies the window covariance for the stable-case ratio.
pub fn check_persistency(
    windows: &[Vec<f64>],
    p: usize,
    sigma_min_r: f64,
    gamma_z: Option<&dyn Fn(usize) -> Result<Matrix>>,
    opts: &PeOptions,
) -> Result<PEReport> {
    let dim = windows
        .first()
        .map(Vec::len)
        .ok_or(Error::IndexOutOfRange {
            index: 0,
            reason: "no windows".into(),
        })?;
    let sigma_r_quarter = sigma_min_r / 4.0;
    let grid = geometric_grid(windows.len(), opts.grid_ratio);
    let mut gram = Matrix::zeros(dim, dim);
    let mut used = 0;
    let mut warm: Option<Vec<f64>> = None;
    let mut points = Vec::with_capacity(grid.len());
    for &count in &grid {
        for z in &windows[used..count] {
            if z.len() != dim {
                return Err(Error::LengthMismatch {
                    expected: dim,
                    actual: z.len(),
                });
            }
            gram.add_outer(1.0, z, z);
        }
        used = count;
        let lambda_min =
            match min_eigenvalue_spd(&gram, warm.as_deref(), opts.eig_tol, opts.eig_max_iter) {
                Ok((value, vector)) => {
                    warm = Some(vector);
                    value
                }
                Err(Error::NotPositiveDefinite) => 0.0,
                Err(Error::NoConvergence { .. }) => symmetric_eigenvalues(&gram)?[0],
                Err(e) => return Err(e),
            };
        let k = p + count - 1;
        let stable_ratio = match gamma_z {
            Some(gz) => Some(generalized_min_eigenvalue(&gram, &gz(k)?)? * 32.0 / count as f64),
            None => None,
        };
        points.push(PePoint {
            k,
            lambda_min,
            gram_trace: gram.trace(),
            holds: lambda_min >= count as f64 * sigma_r_quarter,
            stable_ratio,
        });
    }

    let tail_start = points.iter().rposition(|pt| !pt.holds).map_or(0, |i| i + 1);
    let n0_hat = points.get(tail_start).map(|pt| pt.k);
    let normalized = |pt: &PePoint| pt.lambda_min / (pt.k + 1 - p) as f64;
    let min_over = |pts: &[PePoint]| pts.iter().map(normalized).fold(f64::INFINITY, f64::min);
    let tail = &points[tail_start..];
    let stable_bound_ratio = tail
        .iter()
        .filter_map(|pt| pt.stable_ratio)
        .reduce(f64::min);
    Ok(PEReport {
        p,
        first_k: p,
        last_k: p + windows.len() - 1,
        sigma_r_quarter,
        min_normalized: min_over(&points),
        min_normalized_after_n0: (!tail.is_empty()).then(|| min_over(tail)),
        n0_hat,
        stable_bound_ratio,
        points,
        pass: n0_hat.is_some(),
    })
}

/// `lambda_min(L^{-1} G L^{-T})` where `Gamma = L L^T`.
fn generalized_min_eigenvalue(gram: &Matrix, gamma: &Matrix) -> Result<f64> {
    let ch = Cholesky::new(gamma)?;
    let n = gram.rows();
    // W = L^{-1} G, then M = L^{-1} W^T = L^{-1} G L^{-T}
    let mut w = Matrix::zeros(n, n);
    for j in 0..n {
        let mut col = gram.col_vec(j);
        ch.forward_in_place(&mut col);
        for (i, v) in col.into_iter().enumerate() {
            w[(i, j)] = v;
        }
    }
    let wt = w.transpose();
    let mut m = Matrix::zeros(n, n);
    for j in 0..n {
        let mut col = wt.col_vec(j);
        ch.forward_in_place(&mut col);
        for (i, v) in col.into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    m.symmetrize();
    Ok(symmetric_eigenvalues(&m)?[0])
}

/// Excitation check on the windows `Z_{k,p}`, `k = p..=N`, of an
/// observation record. With `stable = Some(..)` the stable-case ratio
/// against `Gamma_{Z,k} / 32` is reported too.
pub fn check_persistency_observations(
    observations: &[Vec<f64>],
    p: usize,
    model: &StateSpaceModel,
    stable: Option<&KalmanSolution>,
    opts: &PeOptions,
) -> Result<PEReport> {
    let n = observations.len().saturating_sub(1);
    if n < p {
        return Err(Error::IndexOutOfRange {
            index: n,
            reason: format!("need at least p = {p} observations"),
        });
    }
    let windows = (p..=n)
        .map(|k| past_window(observations, k, p))
        .collect::<Result<Vec<_>>>()?;
    let sigma_min_r = symmetric_eigenvalues(&model.r)?[0];
    match stable {
        None => check_persistency(&windows, p, sigma_min_r, None, opts),
        Some(sol) => {
            let gamma = state_covariances(sol, model, (n - p).max(1))?.gamma;
            let o = observability_matrix(&model.a, &model.c, p)?;
            let ot = o.transpose();
            let sigma_e = innovation_window_covariance(sol, model, p)?;
            let gamma_z = move |k: usize| -> Result<Matrix> {
                let mut g = &(&(&o * &gamma[k - p]) * &ot) + &sigma_e;
                g.symmetrize();
                Ok(g)
            };
            check_persistency(&windows, p, sigma_min_r, Some(&gamma_z), opts)
        }
    }
}
