//! Low-rate overuse flow detection.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod bound;
pub mod error;
pub mod estimate;
pub mod experiment;
pub mod hash;
pub mod model;
pub mod monitor;
pub mod pipeline;
pub mod sampler;
pub mod traffic;
pub mod update;

pub use error::{LoftError, Result};
pub use model::{
    ClockConfig, DetectorConfig, EstimateMode, FlowId, FlowSpec, PacketRecord, SamplerMode,
};
