use super::{dot, symmetric_eigenvalues, Matrix};
use crate::error::{Error, Result};

/// Relative pivot threshold used by [`solve_linear`].
pub const DEFAULT_PIVOT_TOL: f64 = 1e-14;

/// Solves `A X = B` by LU factorization with partial pivoting.
///
/// Fails with [`Error::SingularMatrix`] when a pivot falls below
/// `1e-14 * ||A||_F`. For symmetric positive definite systems prefer
/// [`solve_spd`].
pub fn solve_linear(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    solve_linear_tol(a, b, DEFAULT_PIVOT_TOL)
}

pub fn solve_linear_tol(a: &Matrix, b: &Matrix, rel_pivot_tol: f64) -> Result<Matrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "solve_linear needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if b.rows() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "right-hand side has {} rows, matrix has {}",
            b.rows(),
            a.rows()
        )));
    }
    let n = a.rows();
    let threshold = rel_pivot_tol * a.frobenius_norm();
    let mut lu = a.clone();
    let mut x = b.clone();
    let nrhs = b.cols();

    for k in 0..n {
        let (piv_row, piv_abs) =
            (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold(
                    (k, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
        if piv_abs <= threshold || piv_abs == 0.0 {
            return Err(Error::SingularMatrix {
                pivot: piv_abs,
                threshold,
            });
        }
        if piv_row != k {
            swap_rows(&mut lu, k, piv_row);
            swap_rows(&mut x, k, piv_row);
        }
        let pivot = lu[(k, k)];
        for i in (k + 1)..n {
            let factor = lu[(i, k)] / pivot;
            if factor == 0.0 {
                continue;
            }
            lu[(i, k)] = factor;
            for j in (k + 1)..n {
                let v = lu[(k, j)];
                lu[(i, j)] -= factor * v;
            }
            for j in 0..nrhs {
                let v = x[(k, j)];
                x[(i, j)] -= factor * v;
            }
        }
    }

    for k in (0..n).rev() {
        let pivot = lu[(k, k)];
        for j in 0..nrhs {
            let mut s = x[(k, j)];
            for i in (k + 1)..n {
                s -= lu[(k, i)] * x[(i, j)];
            }
            x[(k, j)] = s / pivot;
        }
    }
    Ok(x)
}

fn swap_rows(m: &mut Matrix, a: usize, b: usize) {
    let cols = m.cols();
    let data = m.as_mut_slice();
    for j in 0..cols {
        data.swap(a * cols + j, b * cols + j);
    }
}

/// Lower-triangular Cholesky factor `L` with `A = L L^T`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    /// Factors a symmetric positive definite matrix. Only the lower
    /// triangle of `a` is read.
    pub fn new(a: &Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch(
                "Cholesky of non-square matrix".into(),
            ));
        }
        let n = a.rows();
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let row_j = &l.row_slice(j)[..j];
            let d = a[(j, j)] - dot(row_j, row_j);
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite);
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in (j + 1)..n {
                let s = a[(i, j)] - dot(&l.row_slice(i)[..j], &l.row_slice(j)[..j]);
                l[(i, j)] = s / djj;
            }
        }
        Ok(Self { l })
    }

    pub fn factor(&self) -> &Matrix {
        &self.l
    }

    pub fn into_factor(self) -> Matrix {
        self.l
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    /// `ln det A = 2 * sum ln L_ii`.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim()).map(|i| self.l[(i, i)].ln()).sum::<f64>()
    }

    /// Solves `L y = b` in place.
    pub fn forward_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let s = b[i] - dot(&self.l.row_slice(i)[..i], &b[..i]);
            b[i] = s / self.l[(i, i)];
        }
    }

    /// Solves `L^T x = y` in place.
    pub fn backward_in_place(&self, y: &mut [f64]) {
        let n = self.dim();
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
    }

    pub fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.forward_in_place(&mut x);
        self.backward_in_place(&mut x);
        x
    }

    pub fn solve(&self, b: &Matrix) -> Result<Matrix> {
        if b.rows() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side has {} rows, factor has {}",
                b.rows(),
                self.dim()
            )));
        }
        let mut out = Matrix::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            let x = self.solve_vec(&b.col_vec(j));
            for (i, v) in x.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        Ok(out)
    }

    /// Explicit symmetric inverse.
    pub fn inverse(&self) -> Matrix {
        let n = self.dim();
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = 0.0);
            e[j] = 1.0;
            let col = self.solve_vec(&e);
            for (i, v) in col.into_iter().enumerate() {
                inv[(i, j)] = v;
            }
        }
        inv.symmetrize();
        inv
    }
}

/// Symmetric positive definite solve through Cholesky.
pub fn solve_spd(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    Cholesky::new(a)?.solve(b)
}

/// Left pseudo-inverse `(M^T M)^{-1} M^T` of a tall full-column-rank matrix.
pub fn pseudo_inverse_tall(m: &Matrix) -> Result<Matrix> {
    if m.rows() < m.cols() {
        return Err(Error::DimensionMismatch(format!(
            "pseudo-inverse needs rows >= cols, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let mt = m.transpose();
    let gram = &mt * m;
    let eig = symmetric_eigenvalues(&gram)?;
    let max = eig.iter().cloned().fold(0.0_f64, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > 1e-12 * max) {
        return Err(Error::RankDeficient { sigma_min: min });
    }
    solve_spd(&gram, &mt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gaussian_sample, seeded_rng};

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = seeded_rng(seed, 0);
        let z = gaussian_sample(
            &vec![0.0; rows * cols],
            &Matrix::identity(rows * cols),
            &mut rng,
        );
        Matrix::from_row_slice(rows, cols, &z)
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let b = random_matrix(3, 2, 1);
        let x = solve_linear(&Matrix::identity(3), &b).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn diagonal_solve() {
        let a = Matrix::from_diag(&[2.0, 4.0]);
        let x = solve_linear(&a, &Matrix::column(&[1.0, 1.0])).unwrap();
        assert_eq!(x.as_slice(), &[0.5, 0.25]);
    }

    #[test]
    fn recovers_known_solution() {
        let mut a = random_matrix(8, 8, 7);
        a.add_diag(6.0);
        let x0 = random_matrix(8, 3, 8);
        let b = &a * &x0;
        let x = solve_linear(&a, &b).unwrap();
        assert!((&x - &x0).max_abs() < 1e-9);
        let residual = (&(&a * &x) - &b).frobenius_norm();
        assert!(residual <= 1e-10 * (a.frobenius_norm() * x.frobenius_norm() + b.frobenius_norm()));
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let err = solve_linear(&a, &Matrix::identity(2)).unwrap_err();
        assert!(matches!(err, Error::SingularMatrix { .. }));
    }

    #[test]
    fn cholesky_logdet_and_inverse() {
        let a = Matrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 3.0]);
        let ch = Cholesky::new(&a).unwrap();
        assert!((ch.log_det() - 8.0_f64.ln()).abs() < 1e-14);
        let prod = &a * &ch.inverse();
        assert!((&prod - &Matrix::identity(2)).max_abs() < 1e-14);
        assert!(Cholesky::new(&Matrix::from_diag(&[1.0, -1.0])).is_err());
        assert!(Cholesky::new(&Matrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn spd_path_matches_lu() {
        let g = random_matrix(6, 4, 3);
        let mut a = &g.transpose() * &g;
        a.add_diag(0.1);
        let b = random_matrix(4, 2, 4);
        let x1 = solve_spd(&a, &b).unwrap();
        let x2 = solve_linear(&a, &b).unwrap();
        assert!((&x1 - &x2).max_abs() < 1e-9);
    }

    #[test]
    fn pseudo_inverse_cases() {
        assert_eq!(
            pseudo_inverse_tall(&Matrix::identity(3)).unwrap(),
            Matrix::identity(3)
        );
        let p = pseudo_inverse_tall(&Matrix::column(&[1.0, 1.0])).unwrap();
        assert_eq!(p.shape(), (1, 2));
        assert!((p[(0, 0)] - 0.5).abs() < 1e-15 && (p[(0, 1)] - 0.5).abs() < 1e-15);

        let m = random_matrix(6, 3, 11);
        let left = &pseudo_inverse_tall(&m).unwrap() * &m;
        assert!((&left - &Matrix::identity(3)).max_abs() < 1e-9);

        let deficient = Matrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        assert!(matches!(
            pseudo_inverse_tall(&deficient),
            Err(Error::RankDeficient { .. })
        ));
    }
}
