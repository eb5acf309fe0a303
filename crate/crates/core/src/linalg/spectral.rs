use super::{dot, norm2, Cholesky, Matrix};
use crate::error::{Error, Result};

pub const DEFAULT_GELFAND_POWER: usize = 512;
const POWER_ITER_TOL: f64 = 1e-10;
const POWER_ITER_CAP: usize = 100_000;
const RESCALE_HI: f64 = 1e150;
const RESCALE_LO: f64 = 1e-150;

/// Largest singular value via power iteration on `M^T M`.
///
/// The matrix is rescaled by its largest entry first so that the Gram
/// product cannot overflow. On hitting the iteration cap the best estimate
/// is returned inside [`Error::NoConvergence`].
pub fn spectral_norm(m: &Matrix) -> Result<f64> {
    if m.rows() == 0 || m.cols() == 0 {
        return Err(Error::DimensionMismatch(
            "spectral norm of empty matrix".into(),
        ));
    }
    let scale = m.max_abs();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let ms = m.scale(1.0 / scale);
    // Work with the smaller Gram matrix; both share the nonzero spectrum.
    let gram = if ms.cols() <= ms.rows() {
        &ms.transpose() * &ms
    } else {
        &ms * &ms.transpose()
    };
    let (lambda, converged) = dominant_eigenvalue_psd(&gram);
    let sigma = lambda.max(0.0).sqrt() * scale;
    if converged {
        Ok(sigma)
    } else {
        Err(Error::NoConvergence {
            what: "spectral norm power iteration",
            iterations: POWER_ITER_CAP,
            estimate: sigma,
        })
    }
}

fn dominant_eigenvalue_psd(b: &Matrix) -> (f64, bool) {
    let n = b.rows();
    // Start from the column of largest norm: it cannot be orthogonal to
    // the dominant eigenvector of a nonzero PSD matrix.
    let start = (0..n)
        .map(|j| b.col_vec(j))
        .max_by(|x, y| norm2(x).total_cmp(&norm2(y)))
        .unwrap_or_default();
    let nrm = norm2(&start);
    if nrm == 0.0 {
        return (0.0, true);
    }
    let mut v: Vec<f64> = start.iter().map(|x| x / nrm).collect();
    let mut lambda_prev = f64::NAN;
    for _ in 0..POWER_ITER_CAP {
        let w = b.mul_vec(&v).expect("square");
        let lambda = dot(&v, &w);
        let wn = norm2(&w);
        if wn == 0.0 {
            return (0.0, true);
        }
        if (lambda - lambda_prev).abs() <= POWER_ITER_TOL * lambda.abs() {
            return (lambda, true);
        }
        lambda_prev = lambda;
        v = w.into_iter().map(|x| x / wn).collect();
    }
    (lambda_prev, false)
}

/// Gelfand estimate `||M^k||_2^{1/k}` of the spectral radius.
///
/// Powers are formed by repeated squaring. Whenever the running products
/// leave `[1e-150, 1e150]` they are rescaled and the exponent is tracked in
/// log space, so the estimate stays finite for any `k`. The estimate is
/// biased upward for defective matrices (a Jordan block at 1 gives
/// `k^{1/k}`-ish values).
pub fn spectral_radius_gelfand(m: &Matrix, k: usize) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(
            "spectral radius of non-square matrix".into(),
        ));
    }
    if k == 0 {
        return Err(Error::IndexOutOfRange {
            index: 0,
            reason: "Gelfand power must be at least 1".into(),
        });
    }
    let n = m.rows();
    let mut result = Matrix::identity(n);
    let mut result_log = 0.0;
    let mut base = m.clone();
    let mut base_log = 0.0;
    rescale(&mut base, &mut base_log);
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            result = &result * &base;
            result_log += base_log;
            rescale(&mut result, &mut result_log);
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
            base_log *= 2.0;
            rescale(&mut base, &mut base_log);
        }
    }
    let sigma = match spectral_norm(&result) {
        Ok(s) => s,
        Err(Error::NoConvergence { estimate, .. }) => estimate,
        Err(e) => return Err(e),
    };
    if sigma == 0.0 {
        return Ok(0.0);
    }
    Ok(((sigma.ln() + result_log) / k as f64).exp())
}

fn rescale(m: &mut Matrix, log_scale: &mut f64) {
    let s = m.max_abs();
    if s > 0.0 && !(RESCALE_LO..=RESCALE_HI).contains(&s) {
        *m = m.scale(1.0 / s);
        *log_scale += s.ln();
    }
}

/// Eigenvalues of a symmetric matrix (ascending), by cyclic Jacobi
/// rotations.
pub fn symmetric_eigenvalues(a: &Matrix) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(
            "eigenvalues of non-square matrix".into(),
        ));
    }
    let n = a.rows();
    let mut m = a.clone();
    m.symmetrize();
    let total = m.frobenius_norm();
    if total == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let off = |m: &Matrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[(i, j)] * m[(i, j)];
                }
            }
        }
        s.sqrt()
    };
    const MAX_SWEEPS: usize = 100;
    let mut sweeps = 0;
    while off(&m) > 1e-15 * total {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence {
                what: "Jacobi eigenvalue sweeps",
                iterations: MAX_SWEEPS,
                estimate: off(&m),
            });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
            }
        }
        sweeps += 1;
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// Numerical rank by thresholding the eigenvalues of the smaller Gram
/// matrix at `rel_tol` times the largest one.
pub fn numerical_rank(m: &Matrix, rel_tol: f64) -> Result<usize> {
    let scale = m.max_abs();
    if scale == 0.0 {
        return Ok(0);
    }
    let ms = m.scale(1.0 / scale);
    let gram = if ms.cols() <= ms.rows() {
        &ms.transpose() * &ms
    } else {
        &ms * &ms.transpose()
    };
    let eig = symmetric_eigenvalues(&gram)?;
    let max = eig.last().copied().unwrap_or(0.0);
    Ok(eig.iter().filter(|&&l| l > rel_tol * max).count())
}

/// Smallest eigenvalue of a symmetric positive definite matrix by inverse
/// power iteration on its Cholesky factorization.
///
/// Returns the Rayleigh quotient estimate together with the converged
/// eigenvector, which callers can pass back as `start` for a warm start on a
/// nearby matrix.
pub fn min_eigenvalue_spd(
    a: &Matrix,
    start: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<(f64, Vec<f64>)> {
    let ch = Cholesky::new(a)?;
    let n = a.rows();
    let mut v: Vec<f64> = match start {
        Some(s) if s.len() == n && norm2(s) > 0.0 => s.to_vec(),
        _ => (0..n).map(|i| 1.0 + 0.01 * i as f64).collect(),
    };
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut lambda = dot(&v, &a.mul_vec(&v)?);
    for _ in 0..max_iter {
        let w = ch.solve_vec(&v);
        let wn = norm2(&w);
        v = w.into_iter().map(|x| x / wn).collect();
        let next = dot(&v, &a.mul_vec(&v)?);
        let done = (lambda - next).abs() <= tol * next.abs();
        lambda = next;
        if done {
            return Ok((lambda, v));
        }
    }
    Err(Error::NoConvergence {
        what: "inverse power iteration",
        iterations: max_iter,
        estimate: lambda,
    })
}
