//! Monotone priority queue of (timestamp, flow) pairs for the generator.

use std::collections::VecDeque;

/// Calendar queue: fixed-width time buckets, each sorted only when it
/// becomes current. Pops come out in (timestamp, flow) order; pushes must
/// not precede the last pop.
#[derive(Debug)]
pub(crate) struct Calendar {
    width_ns: u64,
    /// Start of the current bucket.
    base_ns: u64,
    /// Current bucket, sorted descending so the minimum sits at the end.
    current: Vec<(u64, u64)>,
    /// Buckets after the current one; `future[i]` starts at
    /// `base_ns + (i + 1) * width_ns`.
    future: VecDeque<Vec<(u64, u64)>>,
    len: usize,
}

impl Calendar {
    pub(crate) fn new(width_ns: u64) -> Self {
        Calendar {
            width_ns: width_ns.max(1),
            base_ns: 0,
            current: Vec::new(),
            future: VecDeque::new(),
            len: 0,
        }
    }

    pub(crate) fn push(&mut self, ts: u64, flow: u64) {
        debug_assert!(ts >= self.base_ns);
        self.len += 1;
        let slot = (ts - self.base_ns) / self.width_ns;
        if slot == 0 {
            let item = (ts, flow);
            let at = self.current.partition_point(|x| *x > item);
            self.current.insert(at, item);
            return;
        }
        let i = (slot - 1) as usize;
        if i >= self.future.len() {
            self.future.resize_with(i + 1, Vec::new);
        }
        self.future[i].push((ts, flow));
    }

    pub(crate) fn peek(&mut self) -> Option<(u64, u64)> {
        if self.len == 0 {
            return None;
        }
        while self.current.is_empty() {
            let mut next = self.future.pop_front().unwrap_or_default();
            self.base_ns += self.width_ns;
            next.sort_unstable_by(|a, b| b.cmp(a));
            self.current = next;
        }
        self.current.last().copied()
    }

    pub(crate) fn pop(&mut self) -> Option<(u64, u64)> {
        self.peek()?;
        self.len -= 1;
        self.current.pop()
    }
}
