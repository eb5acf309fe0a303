use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, Cholesky, Matrix};

/// `Z_{k,p} = [y_{k-p}; ...; y_{k-1}]`, oldest observation first.
pub fn past_window(observations: &[Vec<f64>], k: usize, p: usize) -> Result<Vec<f64>> {
    if k < p {
        return Err(Error::IndexOutOfRange {
            index: k,
            reason: format!("past window needs k >= p = {p}"),
        });
    }
    if k > observations.len() {
        return Err(Error::IndexOutOfRange {
            index: k,
            reason: format!("only {} observations available", observations.len()),
        });
    }
    Ok(observations[k - p..k].concat())
}

/// `Y_{t,f} = [y_t; ...; y_{t+f-1}]`.
pub fn future_window(observations: &[Vec<f64>], t: usize, f: usize) -> Result<Vec<f64>> {
    if t + f > observations.len() {
        return Err(Error::IndexOutOfRange {
            index: t + f - 1,
            reason: format!("only {} observations available", observations.len()),
        });
    }
    Ok(observations[t..t + f].concat())
}

/// Ridge regression state `G = S V^{-1}` with `V = lambda I + sum z z^T`
/// and `S = sum target z^T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeState {
    pub g: Matrix,
    pub v_bar: Matrix,
    pub v_bar_inv: Matrix,
    /// `ln det V`, maintained incrementally between refactorizations.
    pub logdet: f64,
    pub lambda: f64,
    pub samples: usize,
}

impl RidgeState {
    /// The empty fit: `G = 0`, `V = lambda I`.
    pub fn prior(lambda: f64, outputs: usize, dim: usize) -> Self {
        Self {
            g: Matrix::zeros(outputs, dim),
            v_bar: Matrix::identity(dim).scale(lambda),
            v_bar_inv: Matrix::identity(dim).scale(1.0 / lambda),
            logdet: dim as f64 * lambda.ln(),
            lambda,
            samples: 0,
        }
    }

    /// Exact batch solution over `(regressor, target)` pairs. The inverse and
    /// log-determinant come from a fresh Cholesky factorization.
    pub fn fit<I>(lambda: f64, outputs: usize, dim: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<f64>, Vec<f64>)>,
    {
        let mut v_bar = Matrix::identity(dim).scale(lambda);
        let mut cross = Matrix::zeros(outputs, dim);
        let mut samples = 0;
        for (z, target) in pairs {
            check_len(dim, z.len())?;
            check_len(outputs, target.len())?;
            v_bar.add_outer(1.0, &z, &z);
            cross.add_outer(1.0, &target, &z);
            samples += 1;
        }
        let chol = Cholesky::new(&v_bar).map_err(|_| singular(&v_bar))?;
        // G^T = V^{-1} S^T
        let g = chol.solve(&cross.transpose())?.transpose();
        Ok(Self {
            g,
            v_bar_inv: chol.inverse(),
            logdet: chol.log_det(),
            v_bar,
            lambda,
            samples,
        })
    }

    pub fn dim(&self) -> usize {
        self.v_bar.rows()
    }

    pub fn outputs(&self) -> usize {
        self.g.rows()
    }

    pub fn predict(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.g.mul_vec(z)
    }

    /// Adds one pair by the rank-one inverse update and returns the
    /// posterior quadratic form `z^T V_new^{-1} z`.
    pub fn update(&mut self, z: &[f64], target: &[f64]) -> Result<f64> {
        check_len(self.dim(), z.len())?;
        check_len(self.outputs(), target.len())?;
        let u = self.v_bar_inv.mul_vec(z)?;
        let s = dot(z, &u);
        let denom = 1.0 + s;
        let residual: Vec<f64> = self
            .g
            .mul_vec(z)?
            .iter()
            .zip(target)
            .map(|(p, y)| y - p)
            .collect();
        // V_new^{-1} z = u / (1 + s)
        self.g.add_outer(1.0 / denom, &residual, &u);
        self.v_bar_inv.add_outer(-1.0 / denom, &u, &u);
        self.v_bar.add_outer(1.0, z, z);
        self.logdet += denom.ln();
        self.samples += 1;
        Ok(s / denom)
    }

    /// `ln det V` from a fresh Cholesky factorization.
    pub fn recomputed_logdet(&self) -> Result<f64> {
        Ok(Cholesky::new(&self.v_bar)
            .map_err(|_| singular(&self.v_bar))?
            .log_det())
    }

    /// `||V V^{-1} - I||_F`, the drift of the maintained inverse.
    pub fn inverse_residual(&self) -> Result<f64> {
        let mut prod = self.v_bar.matmul(&self.v_bar_inv)?;
        prod.add_diag(-1.0);
        Ok(prod.frobenius_norm())
    }
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::LengthMismatch { expected, actual });
    }
    Ok(())
}

fn singular(v: &Matrix) -> Error {
    let pivot = (0..v.rows())
        .map(|i| v[(i, i)])
        .fold(f64::INFINITY, f64::min);
    Error::SingularMatrix {
        pivot,
        threshold: 0.0,
    }
}

/// Regularized least squares of `y_t` on `Z_{t,p}` over `t = p..=k`.
pub fn batch_fit(observations: &[Vec<f64>], p: usize, k: usize, lambda: f64) -> Result<RidgeState> {
    fit_multistep(observations, p, 1, k + 1, lambda)
}

/// Regularized least squares of `Y_{t,f}` on `Z_{t,p}` over `t = p..=k-f`;
/// the estimate has shape `fm x mp`.
pub fn fit_multistep(
    observations: &[Vec<f64>],
    p: usize,
    f: usize,
    k: usize,
    lambda: f64,
) -> Result<RidgeState> {
    if p == 0 || f == 0 {
        return Err(Error::IndexOutOfRange {
            index: 0,
            reason: "p and f must be at least 1".into(),
        });
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidSchedule(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    if k < p + f {
        return Err(Error::IndexOutOfRange {
            index: k,
            reason: format!("need k - f >= p (p = {p}, f = {f})"),
        });
    }
    if k > observations.len() {
        return Err(Error::IndexOutOfRange {
            index: k,
            reason: format!("only {} observations available", observations.len()),
        });
    }
    let m = observations.first().map_or(0, Vec::len);
    fit_range(observations, p, f, k + 1 - f, lambda, m)
}

/// Ridge fit over pairs `t = p..end` (possibly empty).
pub(crate) fn fit_range(
    observations: &[Vec<f64>],
    p: usize,
    f: usize,
    end: usize,
    lambda: f64,
    m: usize,
) -> Result<RidgeState> {
    let pairs = (p..end).map(|t| {
        (
            observations[t - p..t].concat(),
            observations[t..t + f].concat(),
        )
    });
    RidgeState::fit(lambda, f * m, p * m, pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gaussian_sample, seeded_rng};
    use proptest::prelude::*;

    fn scalar_series(v: &[f64]) -> Vec<Vec<f64>> {
        v.iter().map(|&x| vec![x]).collect()
    }

    fn random_series(len: usize, m: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = seeded_rng(seed, 0);
        let eye = Matrix::identity(m);
        (0..len)
            .map(|_| gaussian_sample(&vec![0.0; m], &eye, &mut rng))
            .collect()
    }

    #[test]
    fn window_examples() {
        let y = scalar_series(&[10.0, 20.0, 30.0, 40.0]);
        assert_eq!(past_window(&y, 3, 2).unwrap(), vec![20.0, 30.0]);
        assert_eq!(past_window(&y, 4, 1).unwrap(), vec![40.0]);
        assert!(matches!(
            past_window(&y, 1, 2),
            Err(Error::IndexOutOfRange { .. })
        ));
        let y2: Vec<Vec<f64>> = vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]];
        let z = past_window(&y2, 3, 2).unwrap();
        assert_eq!(&z[2..], y2[2].as_slice());
        assert_eq!(future_window(&y2, 1, 2).unwrap(), vec![3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn zero_data_gives_zero_estimate() {
        let y = vec![vec![0.0, 0.0]; 50];
        let fit = batch_fit(&y, 3, 49, 1.0).unwrap();
        assert_eq!(fit.g.max_abs(), 0.0);
        assert!((fit.logdet).abs() < 1e-12);
    }

    #[test]
    fn scalar_single_step() {
        let mut st = RidgeState::prior(1.0, 1, 1);
        let q = st.update(&[1.0], &[0.0]).unwrap();
        assert!((st.v_bar_inv[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((st.logdet - 2f64.ln()).abs() < 1e-15);
        assert!((q - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_regressor_leaves_state() {
        let y = random_series(40, 2, 3);
        let mut st = batch_fit(&y, 2, 39, 1.0).unwrap();
        let before = st.clone();
        st.update(&[0.0; 4], &[5.0, -1.0]).unwrap();
        assert_eq!(st.g, before.g);
        assert_eq!(st.v_bar_inv, before.v_bar_inv);
        assert_eq!(st.logdet, before.logdet);
    }

    #[test]
    fn noiseless_recovery() {
        // Data generated by a fixed stable second-order filter driven through
        // fresh excitation at each step keeps the Gram well conditioned.
        let g0 = [0.3, -0.2, 0.5];
        let p = 3;
        let mut rng = seeded_rng(99, 0);
        let mut y: Vec<Vec<f64>> = (0..p)
            .map(|_| gaussian_sample(&[0.0], &Matrix::identity(1), &mut rng))
            .collect();
        for t in p..400 {
            let z = past_window(&y, t, p).unwrap();
            y.push(vec![dot(&g0, &z)]);
            // re-excite so the noiseless recursion does not decay to zero
            if t % 7 == 0 {
                let kick = gaussian_sample(&[0.0], &Matrix::identity(1), &mut rng)[0];
                let last = y.len() - 1;
                y[last][0] += kick;
            }
        }
        // Use only the pairs that satisfy the noiseless relation exactly.
        let pairs = (p..400)
            .filter(|t| t % 7 != 0)
            .map(|t| (past_window(&y, t, p).unwrap(), y[t].clone()));
        let fit = RidgeState::fit(1e-8, 1, p, pairs).unwrap();
        let err: f64 = fit
            .g
            .as_slice()
            .iter()
            .zip(&g0)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-5, "error {err}");
        let z = past_window(&y, 400, p).unwrap();
        assert!((fit.predict(&z).unwrap()[0] - dot(&g0, &z)).abs() < 1e-5);
    }

    #[test]
    fn batch_recursive_500_steps() {
        let y = random_series(600, 2, 8);
        let p = 3;
        let mut st = batch_fit(&y, p, 50, 1.0).unwrap();
        for k in 51..551 {
            st.update(&past_window(&y, k, p).unwrap(), &y[k]).unwrap();
        }
        let batch = batch_fit(&y, p, 550, 1.0).unwrap();
        let dev = (&st.g - &batch.g).frobenius_norm() / (1.0 + batch.g.frobenius_norm());
        assert!(dev < 1e-8, "{dev}");
        assert!((st.logdet - batch.logdet).abs() < 1e-8);
        assert!(st.inverse_residual().unwrap() < 1e-6);
    }

    #[test]
    fn multistep_reductions() {
        let y = random_series(300, 2, 4);
        let one = fit_multistep(&y, 4, 1, 250, 1.0).unwrap();
        assert_eq!(one, batch_fit(&y, 4, 249, 1.0).unwrap());
        // Same regressors: the first m rows of the f = 2 fit over t <= 248
        // equal the f = 1 fit over the same range.
        let two = fit_multistep(&y, 4, 2, 250, 1.0).unwrap();
        let ref_one = batch_fit(&y, 4, 248, 1.0).unwrap();
        let top = two.g.block(0, 0, 2, 8);
        assert!((&top - &ref_one.g).frobenius_norm() <= 1e-8);
        assert!(fit_multistep(&y, 4, 2, 5, 1.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn prediction_is_linear(seed in 0u64..1000, alpha in -5.0f64..5.0) {
            let y = random_series(80, 2, seed);
            let st = batch_fit(&y, 3, 79, 1.0).unwrap();
            let z = past_window(&y, 40, 3).unwrap();
            let scaled: Vec<f64> = z.iter().map(|v| alpha * v).collect();
            let a = st.predict(&scaled).unwrap();
            let b = st.predict(&z).unwrap();
            for (x, w) in a.iter().zip(&b) {
                prop_assert!((x - alpha * w).abs() <= 1e-12 * (1.0 + x.abs()));
            }
        }

        #[test]
        fn recursive_matches_batch(seed in 0u64..10_000, p in 1usize..5, lambda in 0.1f64..10.0) {
            let y = random_series(160, 1, seed);
            let mut st = batch_fit(&y, p, 40, lambda).unwrap();
            for k in 41..160 {
                st.update(&past_window(&y, k, p).unwrap(), &y[k]).unwrap();
                let batch = batch_fit(&y, p, k, lambda).unwrap();
                let dev = (&st.g - &batch.g).frobenius_norm() / (1.0 + batch.g.frobenius_norm());
                prop_assert!(dev <= 1e-8);
            }
        }
    }
}
