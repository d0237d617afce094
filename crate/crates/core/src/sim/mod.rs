//! Discrete-event simulation of the ABR explicit-rate feedback loop.
//!
//! Rates inside the simulator are `f64` Mbps (bits per microsecond); time is
//! integer nanoseconds. Events are ordered by time, then by insertion
//! sequence, so a run is a pure function of its scenario and seed.

mod cell;
mod config;
mod conservation;
mod engine;
mod merge;
mod probe;
mod queue;
mod rates;
mod source;
mod trace;

pub use cell::{Cell, CellKind, CELL_BITS};
pub use config::{ConfigError, MerUpdate, MergeAlgorithm, MergeMode, SimConfig, SourceConfig};
pub use conservation::{conservation_check, MergePointReport};
pub use engine::{
    run_simulation, FeedbackStats, MergeCounters, PortAccounting, SimulationResult, Simulator, SourceSummary,
    SteadyState, SwitchSourceRate, AMPLITUDE_TOLERANCE,
};
pub use merge::{MergeAction, MergePointState};
pub use probe::{feedback_delay_probe, probe_network, ProbeRow, PROBE_LEAF};
pub use queue::{count_interleavings, MergeQueue, QueueUnit};
pub use rates::{water_level, AccountingKey, SwitchRateState};
pub use source::SourceState;
pub use trace::{Trace, TraceRow};
