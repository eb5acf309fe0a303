use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::StateSpaceModel;
use crate::error::{Error, Result};
use crate::kalman::{solve_riccati, KalmanSolution, RiccatiOptions};
use crate::linalg::Matrix;

/// Built-in model catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Preset {
    /// Scalar AR(1): a = 0.5, c = 1, q = 1, r = 1.
    ScalarStable,
    /// Rotation by 0.7 rad observed through its first coordinate; rho(A) = 1.
    RotationMarginal,
    /// 2x2 Jordan block at 1 (double integrator), first coordinate observed.
    Integrator2,
    /// Fixed stable 4x4 system with two outputs, rho(A) ~ 0.873.
    Stable4,
}

const STABLE4_A: [f64; 16] = [
    0.78, 0.26, 0.00, 0.13, //
    -0.13, 0.65, 0.39, 0.00, //
    0.00, -0.26, 0.91, 0.26, //
    0.13, 0.00, -0.13, 0.52,
];
const STABLE4_C: [f64; 8] = [
    1.0, 0.0, 0.0, 0.0, //
    0.0, 0.0, 1.0, 0.0,
];

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::ScalarStable,
        Preset::RotationMarginal,
        Preset::Integrator2,
        Preset::Stable4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::ScalarStable => "SCALAR_STABLE",
            Preset::RotationMarginal => "ROTATION_MARGINAL",
            Preset::Integrator2 => "INTEGRATOR2",
            Preset::Stable4 => "STABLE4",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Preset::ScalarStable => "scalar AR(1), a=0.5, c=1, q=1, r=1",
            Preset::RotationMarginal => "2x2 rotation by 0.7 rad, C=(1 0), Q=I, R=1",
            Preset::Integrator2 => "2x2 Jordan block at 1, C=(1 0), Q=I, R=1",
            Preset::Stable4 => "fixed stable 4x4, two outputs, Q=I, R=0.5 I",
        }
    }

    /// Size of the largest Jordan block on the unit circle, `None` when
    /// `rho(A) < 1`.
    pub fn kappa(self) -> Option<usize> {
        match self {
            Preset::ScalarStable | Preset::Stable4 => None,
            Preset::RotationMarginal => Some(1),
            Preset::Integrator2 => Some(2),
        }
    }

    /// Size of the largest Jordan block over all eigenvalues.
    pub fn kappa_max(self) -> usize {
        match self {
            Preset::Integrator2 => 2,
            _ => 1,
        }
    }

    /// The model with `Sigma0` still set to `Q`; see [`Preset::model`].
    pub fn base_model(self) -> StateSpaceModel {
        let s = |x| Matrix::from_row_slice(1, 1, &[x]);
        let (a, c, q, r) = match self {
            Preset::ScalarStable => (s(0.5), s(1.0), s(1.0), s(1.0)),
            Preset::RotationMarginal => {
                let (sn, cs) = 0.7_f64.sin_cos();
                (
                    Matrix::from_row_slice(2, 2, &[cs, -sn, sn, cs]),
                    Matrix::row(&[1.0, 0.0]),
                    Matrix::identity(2),
                    s(1.0),
                )
            }
            Preset::Integrator2 => (
                Matrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]),
                Matrix::row(&[1.0, 0.0]),
                Matrix::identity(2),
                s(1.0),
            ),
            Preset::Stable4 => (
                Matrix::from_row_slice(4, 4, &STABLE4_A),
                Matrix::from_row_slice(2, 4, &STABLE4_C),
                Matrix::identity(4),
                Matrix::identity(2).scale(0.5),
            ),
        };
        let sigma0 = q.clone();
        StateSpaceModel::new(a, c, q, r, sigma0).expect("preset models are well formed")
    }

    /// Solves the Riccati equation and returns the model with `Sigma0 = P`
    /// together with the steady-state filter.
    pub fn model(self) -> Result<(StateSpaceModel, KalmanSolution)> {
        let base = self.base_model();
        let sol = solve_riccati(&base, &RiccatiOptions::default())?;
        Ok((base.with_stationary_initial(&sol), sol))
    }

    pub fn info(self) -> Result<PresetInfo> {
        let (model, sol) = self.model()?;
        let inv_log = 1.0 / (1.0 / sol.rho_closed_loop).ln();
        // Order of the horizon multiplier required by the regret bounds:
        // kappa / log(1/rho(A-KC)) when marginal, 1 / log(1/rho(A-KC)) when stable.
        let beta_floor = match self.kappa() {
            Some(k) => k as f64 * inv_log,
            None => inv_log,
        };
        Ok(PresetInfo {
            name: self.name().to_string(),
            description: self.description().to_string(),
            state_dim: model.state_dim(),
            output_dim: model.output_dim(),
            kappa: self.kappa(),
            kappa_max: self.kappa_max(),
            rho_closed_loop: sol.rho_closed_loop,
            beta_floor: beta_floor.is_finite().then_some(beta_floor),
        })
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::AssumptionViolated(format!("unknown preset {s:?}")))
    }
}

/// Catalog entry as printed by the `presets` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetInfo {
    pub name: String,
    pub description: String,
    pub state_dim: usize,
    pub output_dim: usize,
    pub kappa: Option<usize>,
    pub kappa_max: usize,
    pub rho_closed_loop: f64,
    pub beta_floor: Option<f64>,
}
