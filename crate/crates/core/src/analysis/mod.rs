//! Regret accounting and empirical checks of the predictor's analysis:
//! log-determinant self-normalization, the ARMA residual bound,
//! persistency of excitation and the hindsight-FIR regret.

mod alternative;
mod arma;
mod logdet;
mod persistency;
mod regret;

pub use alternative::{alternative_regret, AlternativeRegret, FIR_JITTER};
pub use arma::{arma_delta, check_arma_bound, moving_average_taps, ArmaDiagnostics};
pub use logdet::{check_logdet_lemma, LogdetCheck, LOGDET_SLACK};
pub use persistency::{
    check_persistency, check_persistency_observations, geometric_grid, PEReport, PeOptions, PePoint,
};
pub use regret::{
    compute_regret, cumulative_at, multistep_regret, state_regret, state_regret_terms,
    PerStepLosses, RegretReport,
};
