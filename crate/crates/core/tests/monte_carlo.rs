//! Statistical checks of the simulator, the filter and the window covariances.

use lsqkf_core::kalman::{past_window_covariance, run_filter};
use lsqkf_core::linalg::{dot, sub_vec};
use lsqkf_core::predictor::past_window;
use lsqkf_core::sysmodel::{simulate, Preset};
use lsqkf_core::Matrix;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[test]
fn stable_state_covariance_matches_lyapunov() {
    let model = Preset::Stable4.base_model();
    // Sigma = A Sigma A^T + Q by fixed-point iteration.
    let mut sigma = Matrix::zeros(4, 4);
    for _ in 0..2000 {
        sigma = &(&(&model.a * &sigma) * &model.a.transpose()) + &model.q;
    }
    let model = lsqkf_core::StateSpaceModel {
        sigma0: sigma.clone(),
        ..model
    };
    let traj = simulate(&model, 200_000, 31).unwrap();
    let mut emp = Matrix::zeros(4, 4);
    for x in &traj.states {
        emp.add_outer(1.0, x, x);
    }
    let emp = emp.scale(1.0 / traj.states.len() as f64);
    let rel = (&emp - &sigma).frobenius_norm() / sigma.frobenius_norm();
    assert!(rel < 0.10, "relative error {rel}");
}

#[test]
fn kalman_beats_naive_predictors() {
    let (model, sol) = Preset::ScalarStable.model().unwrap();
    let (mut kalman, mut zero, mut lag) = (Vec::new(), Vec::new(), Vec::new());
    for seed in 0..20 {
        let traj = simulate(&model, 20_000, seed).unwrap();
        let run = run_filter(&sol, &model, &traj.observations).unwrap();
        let y = &traj.observations;
        kalman.push(run.innovations.iter().map(|e| dot(e, e)).sum::<f64>());
        zero.push(y.iter().map(|v| dot(v, v)).sum::<f64>());
        lag.push(
            (0..y.len())
                .map(|k| {
                    let prev = if k == 0 { vec![0.0] } else { y[k - 1].clone() };
                    let d = sub_vec(&y[k], &prev);
                    dot(&d, &d)
                })
                .sum::<f64>(),
        );
    }
    let k = median(kalman);
    assert!(k < median(zero) && k < median(lag));
}

#[test]
fn window_covariance_matches_monte_carlo() {
    for preset in [Preset::ScalarStable, Preset::Stable4] {
        let (model, sol) = preset.model().unwrap();
        let (p, k) = (3, 12);
        let gamma = past_window_covariance(&sol, &model, p, k).unwrap();
        let dim = gamma.rows();
        let mut emp = Matrix::zeros(dim, dim);
        let draws = 100_000;
        for seed in 0..draws {
            let traj = simulate(&model, k, seed).unwrap();
            let z = past_window(&traj.observations, k, p).unwrap();
            emp.add_outer(1.0, &z, &z);
        }
        let emp = emp.scale(1.0 / draws as f64);
        let rel = (&emp - &gamma).frobenius_norm() / gamma.frobenius_norm();
        assert!(rel < 0.10, "{preset}: relative error {rel}");
    }
}
