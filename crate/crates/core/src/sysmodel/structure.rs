//! Structural block matrices of the state-space and innovation forms.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

fn check_count(k: usize, what: &str) -> Result<()> {
    if k == 0 {
        return Err(Error::IndexOutOfRange {
            index: 0,
            reason: format!("{what} must be at least 1"),
        });
    }
    Ok(())
}

fn check_triple(a: &Matrix, c: &Matrix, k: &Matrix) -> Result<()> {
    let n = a.rows();
    if !a.is_square() || c.cols() != n || k.rows() != n || k.cols() != c.rows() {
        return Err(Error::DimensionMismatch(format!(
            "A {:?}, C {:?}, K {:?} are not conformal",
            a.shape(),
            c.shape(),
            k.shape()
        )));
    }
    Ok(())
}

/// `[C; CA; ...; CA^{k-1}]`, of size `km x n`.
pub fn observability_matrix(a: &Matrix, c: &Matrix, k: usize) -> Result<Matrix> {
    check_count(k, "observability horizon")?;
    if !a.is_square() || c.cols() != a.rows() {
        return Err(Error::DimensionMismatch("A and C are not conformal".into()));
    }
    let (m, n) = c.shape();
    let mut out = Matrix::zeros(k * m, n);
    let mut block = c.clone();
    for i in 0..k {
        out.set_block(i * m, 0, &block);
        if i + 1 < k {
            block = block.matmul(a)?;
        }
    }
    Ok(out)
}

/// `[B, AB, ..., A^{k-1}B]`, of size `n x k*cols(B)`.
pub fn controllability_matrix(a: &Matrix, b: &Matrix, k: usize) -> Result<Matrix> {
    check_count(k, "controllability horizon")?;
    if !a.is_square() || b.rows() != a.rows() {
        return Err(Error::DimensionMismatch("A and B are not conformal".into()));
    }
    let (n, r) = b.shape();
    let mut out = Matrix::zeros(n, k * r);
    let mut block = b.clone();
    for i in 0..k {
        out.set_block(0, i * r, &block);
        if i + 1 < k {
            block = a.matmul(&block)?;
        }
    }
    Ok(out)
}

/// `[(A-KC)^{p-1}K, ..., (A-KC)K, K]`, of size `n x mp`.
pub fn kalman_controllability(a: &Matrix, c: &Matrix, k: &Matrix, p: usize) -> Result<Matrix> {
    check_count(p, "past horizon")?;
    check_triple(a, c, k)?;
    let closed = a - &(k * c);
    let (n, m) = k.shape();
    let mut out = Matrix::zeros(n, m * p);
    let mut block = k.clone();
    for j in (0..p).rev() {
        out.set_block(0, j * m, &block);
        if j > 0 {
            block = closed.matmul(&block)?;
        }
    }
    Ok(out)
}

/// Closed-loop response matrix `[C(A-KC)^{p-1}K, ..., CK]`, of size `m x mp`.
///
/// Computed as `C` times [`kalman_controllability`], so the identity
/// `G_p = C K_p` holds bit for bit.
pub fn closed_loop_responses(a: &Matrix, c: &Matrix, k: &Matrix, p: usize) -> Result<Matrix> {
    c.matmul(&kalman_controllability(a, c, k, p)?)
}

/// Lower block-triangular Toeplitz matrix with identity diagonal blocks
/// and `C A^{j-1} K` on the j-th block sub-diagonal; size `fm x fm`.
pub fn toeplitz_response(a: &Matrix, c: &Matrix, k: &Matrix, f: usize) -> Result<Matrix> {
    check_count(f, "future horizon")?;
    check_triple(a, c, k)?;
    let m = c.rows();
    let mut out = Matrix::zeros(f * m, f * m);
    let eye = Matrix::identity(m);
    for i in 0..f {
        out.set_block(i * m, i * m, &eye);
    }
    let mut ak = k.clone();
    for j in 1..f {
        let block = c.matmul(&ak)?;
        for i in j..f {
            out.set_block(i * m, (i - j) * m, &block);
        }
        ak = a.matmul(&ak)?;
    }
    Ok(out)
}
