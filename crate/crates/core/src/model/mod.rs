//! CSI domain types and the multipath channel generator.
//!
//! A channel is the sum of a static part (line-of-sight plus reflections off
//! immobile objects) and a set of dynamic paths whose length changes as a
//! body moves. The generator evaluates
//!
//! ```text
//! H(f, t) = e^{-j2πΔf t} (H_s(f, t) + Σ_k a_k(t) e^{-j(2π d_k(t)/λ + φ_k)}) + n
//! ```
//!
//! for every Tx-Rx pair and subcarrier. Downstream stages only look at
//! `|H|`, whose power oscillates at `v_k/λ` for a path moving at `v_k`.

mod catalog;
mod generator;
mod schedule;
mod taps;
mod types;

pub use catalog::{action_names, action_speed_profile};
pub use generator::{generate_trace, SyntheticChannelConfig};
pub use schedule::{SpeedSchedule, SpeedSegment};
pub use taps::{tap_profile, Tap};
pub use types::{CsiFrame, CsiTrace, DynamicPath, StaticPath, StaticPathSet, Sway, TraceMeta};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("invalid channel config: {0}")]
    InvalidConfig(String),
    #[error("duration must be positive and finite, got {0}")]
    InvalidDuration(f64),
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error("pair index {index} out of range for {pairs} pairs")]
    PairOutOfRange { index: usize, pairs: usize },
    #[error("unknown action {0:?}")]
    UnknownAction(String),
}
