//! Exact two-qubit quantum mechanics and the non-i.i.d. source models.

mod source;
mod state;

pub use source::{
    chsh_l_value, chsh_success_rate, optimal_correlated_strategy, sample_block, sample_rounds,
    CorrelatedLhv, MemoryStrategy, QuantumSource, SettingsSampler, SourceModel, StateSchedule,
};
pub use state::{born_probability, DensityMatrix, LocalMeasurements, MeasurementSetting, C64};
