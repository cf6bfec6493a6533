//! Scenario compilation, induced-stream sampling and Monte Carlo estimates
//! of false-alarm time and detection delay.

mod montecarlo;
mod scenario;
mod stream;

pub use montecarlo::{
    calibrate_threshold, estimate_delay, estimate_delay_at, estimate_tfa, llr_drift, tfa_budget,
    tradeoff_sweep, worst_case_delay_protocol, Calibration, DelayEstimate, OperatingGrid, Regime,
    TfaEstimate, TradeoffCurve, TradeoffRow, WaddEstimate, CALIBRATION_MAX_ITER, CALIBRATION_RTOL,
    CENSOR_WARN_FRACTION, TFA_BUDGET_FACTOR,
};
pub use scenario::{
    auto_block_length, auto_window, compile, compile_states, AnyDetector, BlockChange, ChangePoint,
    CompiledScenario, DetectorKind, ScenarioConfig, Schedule,
};
pub use stream::{sample_stream, BlockStream};
