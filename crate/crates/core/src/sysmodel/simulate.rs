use serde::{Deserialize, Serialize};

use super::StateSpaceModel;
use crate::error::{Error, Result};
use crate::linalg::{gaussian_sample, seeded_rng, Cholesky, Matrix};

const JITTER: f64 = 1e-12;

/// ChaCha stream ids of the three noise sources.
const STREAM_INITIAL: u64 = 0;
const STREAM_PROCESS: u64 = 1;
const STREAM_MEASUREMENT: u64 = 2;

/// Square-root factors driving a simulation.
#[derive(Debug, Clone)]
pub struct NoiseFactors {
    pub q: Matrix,
    pub r: Matrix,
    pub sigma0: Matrix,
}

impl NoiseFactors {
    pub fn from_model(model: &StateSpaceModel) -> Result<Self> {
        Ok(Self {
            q: psd_factor(&model.q)?,
            r: psd_factor(&model.r)?,
            sigma0: psd_factor(&model.sigma0)?,
        })
    }
}

/// Lower Cholesky factor of a PSD matrix. Singular PSD inputs are
/// factored after adding `1e-12 * max(1, max|M_ij|)` to the diagonal; the
/// zero matrix maps to the zero factor.
pub fn psd_factor(m: &Matrix) -> Result<Matrix> {
    if m.max_abs() == 0.0 {
        return Ok(Matrix::zeros(m.rows(), m.cols()));
    }
    match Cholesky::new(m) {
        Ok(ch) => Ok(ch.into_factor()),
        Err(Error::NotPositiveDefinite) => {
            let mut jittered = m.clone();
            jittered.add_diag(JITTER * m.max_abs().max(1.0));
            Ok(Cholesky::new(&jittered)?.into_factor())
        }
        Err(e) => Err(e),
    }
}

/// Seeded realization of states `x_0..x_N` and observations `y_0..y_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub seed: u64,
    pub states: Vec<Vec<f64>>,
    pub observations: Vec<Vec<f64>>,
}

impl Trajectory {
    /// The horizon `N`; the trajectory holds `N + 1` samples.
    pub fn steps(&self) -> usize {
        self.observations.len().saturating_sub(1)
    }
}

/// Simulates `N` steps of the model from `seed`.
pub fn simulate(model: &StateSpaceModel, steps: usize, seed: u64) -> Result<Trajectory> {
    let factors = NoiseFactors::from_model(model)?;
    simulate_with_factors(model, &factors, steps, seed)
}

/// Simulation with explicit noise factors; the initial state, process
/// noise and measurement noise each come from their own ChaCha stream of
/// the same seed.
pub fn simulate_with_factors(
    model: &StateSpaceModel,
    factors: &NoiseFactors,
    steps: usize,
    seed: u64,
) -> Result<Trajectory> {
    model.check_dimensions()?;
    if steps == 0 {
        return Err(Error::IndexOutOfRange {
            index: 0,
            reason: "simulation needs at least one step".into(),
        });
    }
    let n = model.state_dim();
    let m = model.output_dim();
    let mut init_rng = seeded_rng(seed, STREAM_INITIAL);
    let mut w_rng = seeded_rng(seed, STREAM_PROCESS);
    let mut v_rng = seeded_rng(seed, STREAM_MEASUREMENT);

    let mut states = Vec::with_capacity(steps + 1);
    let mut observations = Vec::with_capacity(steps + 1);
    let mut x = gaussian_sample(&vec![0.0; n], &factors.sigma0, &mut init_rng);
    for k in 0..=steps {
        let cx = model.c.mul_vec(&x)?;
        observations.push(gaussian_sample(&cx, &factors.r, &mut v_rng));
        debug_assert_eq!(observations[k].len(), m);
        let ax = model.a.mul_vec(&x)?;
        let next = gaussian_sample(&ax, &factors.q, &mut w_rng);
        states.push(std::mem::replace(&mut x, next));
    }
    Ok(Trajectory {
        seed,
        states,
        observations,
    })
}
