use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Doubling schedule `T_i = 2^{i-1} T_init` with past horizons
/// `p_i = ceil(beta ln T_i)`, plus the ridge parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochSchedule {
    t_init: usize,
    beta: f64,
    lambda: f64,
}

/// One epoch of the schedule: predictions `start..end` (end exclusive) use
/// past horizon `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Epoch {
    pub index: usize,
    pub start: usize,
    pub end: usize,
    pub p: usize,
}

impl EpochSchedule {
    pub fn new(t_init: usize, beta: f64, lambda: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidSchedule(format!(
                "beta must be positive, got {beta}"
            )));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidSchedule(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        if t_init < 2 {
            return Err(Error::InvalidSchedule(format!(
                "T_init must be at least 2, got {t_init}"
            )));
        }
        let floor = beta * (t_init as f64).ln();
        if !(t_init as f64 > floor) {
            return Err(Error::InvalidSchedule(format!(
                "T_init = {t_init} must exceed beta ln T_init = {floor:.4}"
            )));
        }
        Ok(Self {
            t_init,
            beta,
            lambda,
        })
    }

    /// Schedule with `T_init` set to the smallest power of two above `8 beta`.
    pub fn with_default_t_init(beta: f64, lambda: f64) -> Result<Self> {
        Self::new(default_t_init(beta), beta, lambda)
    }

    pub fn t_init(&self) -> usize {
        self.t_init
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `ceil(beta ln t)` clamped to `[1, t - 1]`.
    pub fn horizon(&self, t: usize) -> usize {
        let raw = (self.beta * (t as f64).ln()).ceil();
        let upper = t.saturating_sub(1).max(1);
        if raw.is_nan() || raw < 1.0 {
            1
        } else {
            (raw as usize).min(upper)
        }
    }

    /// Epochs covering predictions up to index `last` inclusive. The final
    /// epoch is truncated at `last + 1`.
    pub fn epochs(&self, last: usize) -> Vec<Epoch> {
        let mut out = Vec::new();
        let mut start = self.t_init;
        let mut index = 1;
        while start <= last {
            out.push(Epoch {
                index,
                start,
                end: (2 * start).min(last + 1),
                p: self.horizon(start),
            });
            start *= 2;
            index += 1;
        }
        out
    }

    /// The epoch containing prediction index `k`, `None` during warm-up.
    pub fn epoch_of(&self, k: usize) -> Option<Epoch> {
        if k < self.t_init {
            return None;
        }
        let ratio = k / self.t_init;
        let index = (usize::BITS - ratio.leading_zeros()) as usize;
        let start = self.t_init << (index - 1);
        Some(Epoch {
            index,
            start,
            end: 2 * start,
            p: self.horizon(start),
        })
    }
}

/// Smallest power of two strictly greater than `8 beta` (at least 2).
pub fn default_t_init(beta: f64) -> usize {
    let target = 8.0 * beta;
    let mut t = 2usize;
    while (t as f64) <= target {
        t *= 2;
    }
    t
}
