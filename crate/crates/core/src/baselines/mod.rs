//! Comparison detectors. Each nominates candidates at major-cycle boundaries
//! through [`CandidateSource`](crate::pipeline::CandidateSource), so they share
//! the blacklist and the precise monitors with LOFT.

mod eardet;
mod hashpipe;
mod heavykeeper;
mod msf;

pub use eardet::{eardet_counter_budget, EarDet, EarDetConfig};
pub use hashpipe::HashPipe;
pub use heavykeeper::HeavyKeeper;
pub use msf::{cm_stages, MultistageFilter};

use crate::model::FlowId;

/// Sorts `(flow, score)` pairs by score descending, then flow id, and keeps
/// the first `k` flows.
pub(crate) fn top_k(mut scored: Vec<(FlowId, u64)>, k: usize) -> Vec<FlowId> {
    scored.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(k);
    scored.into_iter().map(|(f, _)| f).collect()
}
