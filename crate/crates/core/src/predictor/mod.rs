//! Online least-squares prediction of observations with an epoch-doubling
//! past horizon, and its multi-step and state-prediction extensions.

mod online;
mod ridge;
mod schedule;

pub use online::{
    predict_state, run_online, run_online_multistep, state_predictions, EpochRecord,
    OnlinePredictor, PredictionLog, PredictorState,
};
pub use ridge::{batch_fit, fit_multistep, future_window, past_window, RidgeState};
pub use schedule::{default_t_init, Epoch, EpochSchedule};
