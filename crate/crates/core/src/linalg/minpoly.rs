use serde::{Deserialize, Serialize};

use super::{axpy, dot, norm2, Matrix};
use crate::error::{Error, Result};

pub const DEFAULT_MINPOLY_TOL: f64 = 1e-8;

/// Monic annihilating polynomial `a(s) = s^d - a_{d-1} s^{d-1} - ... - a_0`.
///
/// `coefficients[i]` holds `a_i`. `l1_norm` is `1 + sum |a_i|`, the form
/// that bounds the moving-average taps of the ARMA representation;
/// `l2_norm` is `sqrt(sum a_i^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimalPolynomial {
    pub degree: usize,
    pub coefficients: Vec<f64>,
    pub l1_norm: f64,
    pub l2_norm: f64,
    /// `||a(A)||_F / ||A^d||_F` at the accepted degree (0 when `A^d = 0`).
    pub relative_residual: f64,
}

impl MinimalPolynomial {
    fn new(coefficients: Vec<f64>, relative_residual: f64) -> Self {
        let l1_norm = 1.0 + coefficients.iter().map(|a| a.abs()).sum::<f64>();
        let l2_norm = coefficients.iter().map(|a| a * a).sum::<f64>().sqrt();
        Self {
            degree: coefficients.len(),
            coefficients,
            l1_norm,
            l2_norm,
            relative_residual,
        }
    }

    /// Evaluates `a(M) = M^d - sum a_i M^i`.
    pub fn evaluate(&self, m: &Matrix) -> Result<Matrix> {
        let n = m.rows();
        let mut power = Matrix::identity(n);
        let mut acc = Matrix::zeros(n, n);
        for &a in &self.coefficients {
            acc = &acc - &power.scale(a);
            power = power.matmul(m)?;
        }
        Ok(&acc + &power)
    }
}

/// Smallest-degree polynomial whose vectorized power `vec(A^d)` lies within
/// relative residual `tol` of `span{vec(I), ..., vec(A^{d-1})}`.
///
/// The span is kept as an orthonormal basis (modified Gram-Schmidt with one
/// reorthogonalization pass) so the projection never forms normal
/// equations. Degree `n` is accepted unconditionally (Cayley-Hamilton).
pub fn minimal_polynomial(a: &Matrix, tol: f64) -> Result<MinimalPolynomial> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(
            "minimal polynomial of non-square matrix".into(),
        ));
    }
    let n = a.rows();
    if n == 0 {
        return Err(Error::DimensionMismatch(
            "minimal polynomial of empty matrix".into(),
        ));
    }
    // B = Q R with B's columns vec(A^0), vec(A^1), ...
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut r: Vec<Vec<f64>> = Vec::with_capacity(n); // r[j] = column j of R (length j+1)
    let mut power = Matrix::identity(n);

    for d in 0..=n {
        let v = power.as_slice().to_vec();
        let vnorm = norm2(&v);
        let mut resid = v.clone();
        let mut coeffs = vec![0.0; q.len()];
        for _ in 0..2 {
            for (j, qj) in q.iter().enumerate() {
                let c = dot(qj, &resid);
                coeffs[j] += c;
                axpy(-c, qj, &mut resid);
            }
        }
        let rnorm = norm2(&resid);
        let rel = if vnorm == 0.0 { 0.0 } else { rnorm / vnorm };
        if d > 0 && (rel <= tol || d == n) {
            let a_coeffs = back_substitute(&r, &coeffs);
            return Ok(MinimalPolynomial::new(a_coeffs, rel));
        }
        // d = 0 is the identity, never zero.
        resid.iter_mut().for_each(|x| *x /= rnorm);
        q.push(resid);
        coeffs.push(rnorm);
        r.push(coeffs);
        power = power.matmul(a)?;
    }
    unreachable!("degree n is always accepted")
}

/// Solves `R x = c` where `r[j]` is the j-th column of upper-triangular R.
fn back_substitute(r: &[Vec<f64>], c: &[f64]) -> Vec<f64> {
    let d = c.len();
    let mut x = c.to_vec();
    for i in (0..d).rev() {
        for j in (i + 1)..d {
            x[i] -= r[j][i] * x[j];
        }
        x[i] /= r[i][i];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_has_degree_one() {
        let mp = minimal_polynomial(&Matrix::identity(2), DEFAULT_MINPOLY_TOL).unwrap();
        assert_eq!(mp.degree, 1);
        assert!((mp.coefficients[0] - 1.0).abs() < 1e-14);
        assert!((mp.l1_norm - 2.0).abs() < 1e-14);
    }

    #[test]
    fn nilpotent_block() {
        let n = Matrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let mp = minimal_polynomial(&n, DEFAULT_MINPOLY_TOL).unwrap();
        assert_eq!(mp.degree, 2);
        assert!(mp.coefficients.iter().all(|c| c.abs() < 1e-14));
    }

    #[test]
    fn repeated_eigenvalue_diagonal() {
        let a = Matrix::from_diag(&[0.5, 0.5, 0.9]);
        let mp = minimal_polynomial(&a, DEFAULT_MINPOLY_TOL).unwrap();
        assert_eq!(mp.degree, 2);
        // (s - 0.5)(s - 0.9) = s^2 - 1.4 s + 0.45
        assert!((mp.coefficients[1] - 1.4).abs() < 1e-12);
        assert!((mp.coefficients[0] + 0.45).abs() < 1e-12);
        assert!(mp.evaluate(&a).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn zero_matrix() {
        let mp = minimal_polynomial(&Matrix::zeros(3, 3), DEFAULT_MINPOLY_TOL).unwrap();
        assert_eq!(mp.degree, 1);
        assert_eq!(mp.coefficients, vec![0.0]);
    }

    #[test]
    fn jordan_integrator() {
        let j = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let mp = minimal_polynomial(&j, DEFAULT_MINPOLY_TOL).unwrap();
        assert_eq!(mp.degree, 2);
        assert!((mp.coefficients[1] - 2.0).abs() < 1e-12);
        assert!((mp.coefficients[0] + 1.0).abs() < 1e-12);
    }
}
