//! Synthetic traffic scenarios, packet sizing, ground truth and trace files.

mod calendar;
mod generate;
mod imix;
mod trace;
mod truth;
mod tuple;

pub use generate::{regulate, PacketSizing, ScenarioConfig, ScenarioKind, TraceGenerator};
pub use imix::{Imix, ImixEntry};
pub use trace::{
    read_csv, read_trace, write_csv, write_trace, TraceReader, TRACE_HEADER_BYTES, TRACE_MAGIC,
    TRACE_RECORD_BYTES, TRACE_VERSION,
};
pub use truth::{read_ground_truth, write_ground_truth, GroundTruth, GroundTruthBuilder};
pub use tuple::five_tuple_to_flow_id;
