use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::Matrix;

/// Generator used for every simulated noise stream.
///
/// ChaCha8 seeded through `seed_from_u64`, one ChaCha stream id per noise
/// source; standard normals come from `rand_distr::StandardNormal`
/// (ziggurat). Sequences are reproducible from `(seed, stream)` within a
/// build of this crate.
pub type SimRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws `mean + L z` with `z` a vector of independent standard normals,
/// `L` being a (lower-triangular) covariance factor.
pub fn gaussian_sample<R: Rng + ?Sized>(
    mean: &[f64],
    cov_factor: &Matrix,
    rng: &mut R,
) -> Vec<f64> {
    assert_eq!(
        cov_factor.rows(),
        mean.len(),
        "factor rows must match mean length"
    );
    let z: Vec<f64> = (0..cov_factor.cols())
        .map(|_| rng.sample(StandardNormal))
        .collect();
    let mut out = mean.to_vec();
    for (i, o) in out.iter_mut().enumerate() {
        let row = cov_factor.row_slice(i);
        *o += row.iter().zip(&z).map(|(l, zi)| l * zi).sum::<f64>();
    }
    out
}
