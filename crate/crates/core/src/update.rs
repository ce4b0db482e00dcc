//! Fast path: one W-wide counter array per minor cycle, keyed by a fresh hash
//! function each minor cycle. Completed arrays are archived, immutable, for
//! the estimate path.

use crate::error::{LoftError, Result};
use crate::hash::{hash_flow, HashSeed, MinorSeed};
use crate::model::PacketRecord;

/// Counters of one minor cycle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CounterArray {
    pub major: u64,
    pub minor: u32,
    pub minor_global: u64,
    pub seed: MinorSeed,
    pub counters: Vec<u64>,
}

impl CounterArray {
    pub fn new(width: usize, minor_global: u64, minors_per_major: u32, seed: &HashSeed) -> Self {
        let z = u64::from(minors_per_major);
        CounterArray {
            major: minor_global / z,
            minor: (minor_global % z) as u32,
            minor_global,
            seed: seed.for_minor(minor_global),
            counters: vec![0; width],
        }
    }

    pub fn width(&self) -> usize {
        self.counters.len()
    }

    #[inline]
    pub fn index_of(&self, pkt: &PacketRecord) -> usize {
        hash_flow(self.seed, pkt.flow_id, self.counters.len())
    }

    pub fn total_bytes(&self) -> u64 {
        self.counters.iter().sum()
    }
}

/// Operation counts of the fast path, for checking its per-packet cost.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct UpdateStats {
    pub packets: u64,
    pub hashes: u64,
    pub reads: u64,
    pub writes: u64,
}

/// Holds the arrays of the in-progress major cycle and of the most recently
/// completed one.
#[derive(Debug)]
pub struct ArchiveStore {
    minors_per_major: u32,
    in_progress: Vec<CounterArray>,
    completed: Option<(u64, Vec<CounterArray>)>,
}

impl ArchiveStore {
    pub fn new(minors_per_major: u32) -> Self {
        ArchiveStore {
            minors_per_major,
            in_progress: Vec::with_capacity(minors_per_major as usize),
            completed: None,
        }
    }

    fn push(&mut self, array: CounterArray) {
        debug_assert!(self
            .in_progress
            .last()
            .is_none_or(|a| a.minor_global + 1 == array.minor_global));
        self.in_progress.push(array);
        if self.in_progress.len() == self.minors_per_major as usize {
            let major = self.in_progress[0].major;
            let arrays = std::mem::replace(
                &mut self.in_progress,
                Vec::with_capacity(self.minors_per_major as usize),
            );
            self.completed = Some((major, arrays));
        }
    }

    fn check(&self, major: u64, current_major: u64) -> Result<()> {
        match &self.completed {
            Some((j, _)) if *j == major => Ok(()),
            _ if major >= current_major => Err(LoftError::IncompleteMajorCycle {
                requested: major,
                current: current_major,
            }),
            _ => Err(LoftError::ArchiveEvicted(major)),
        }
    }

    /// Arrays of a completed major cycle, in minor order.
    pub fn major_cycle_arrays(&self, major: u64, current_major: u64) -> Result<&[CounterArray]> {
        self.check(major, current_major)?;
        Ok(&self.completed.as_ref().expect("checked").1)
    }

    /// Hands the arrays of a completed major cycle over to the caller.
    pub fn take_major(&mut self, major: u64, current_major: u64) -> Result<Vec<CounterArray>> {
        self.check(major, current_major)?;
        Ok(self.completed.take().expect("checked").1)
    }

    pub fn clear(&mut self) {
        self.in_progress.clear();
        self.completed = None;
    }

    pub fn held_arrays(&self) -> usize {
        self.in_progress.len() + self.completed.as_ref().map_or(0, |(_, a)| a.len())
    }
}

/// The update path of one detector instance.
#[derive(Debug)]
pub struct UpdatePath {
    width: usize,
    minors_per_major: u32,
    seed: HashSeed,
    current: CounterArray,
    archive: ArchiveStore,
    stats: UpdateStats,
}

impl UpdatePath {
    pub fn new(width: usize, minors_per_major: u32, seed: HashSeed) -> Self {
        assert!(width >= 1 && minors_per_major >= 1);
        UpdatePath {
            width,
            minors_per_major,
            seed,
            current: CounterArray::new(width, 0, minors_per_major, &seed),
            archive: ArchiveStore::new(minors_per_major),
            stats: UpdateStats::default(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn seed(&self) -> HashSeed {
        self.seed
    }

    pub fn current(&self) -> &CounterArray {
        &self.current
    }

    pub fn current_major(&self) -> u64 {
        self.current.major
    }

    pub fn stats(&self) -> UpdateStats {
        self.stats
    }

    /// Adds the packet's size to its flow's counter in the current array.
    ///
    /// The caller has already advanced the path to the packet's minor cycle.
    #[inline]
    pub fn update(&mut self, pkt: &PacketRecord) {
        let x = self.current.index_of(pkt);
        let cell = &mut self.current.counters[x];
        let before = *cell;
        *cell = before
            .checked_add(u64::from(pkt.size_bytes))
            .expect("64-bit counter overflow");
        self.stats.packets += 1;
        self.stats.hashes += 1;
        self.stats.reads += 1;
        self.stats.writes += 1;
    }

    /// Archives the current array and starts an empty one for the next minor cycle.
    pub fn rotate_minor_cycle(&mut self) -> &CounterArray {
        let next = CounterArray::new(
            self.width,
            self.current.minor_global + 1,
            self.minors_per_major,
            &self.seed,
        );
        let archived = std::mem::replace(&mut self.current, next);
        self.archive.push(archived);
        match &self.archive.in_progress.last() {
            Some(a) => a,
            None => self
                .archive
                .completed
                .as_ref()
                .expect("just archived")
                .1
                .last()
                .unwrap(),
        }
    }

    /// Rotates until the current array belongs to global minor cycle `minor_global`.
    /// Returns the number of rotations.
    pub fn advance_to(&mut self, minor_global: u64) -> u64 {
        let mut n = 0;
        while self.current.minor_global < minor_global {
            self.rotate_minor_cycle();
            n += 1;
        }
        n
    }

    pub fn major_cycle_arrays(&self, major: u64) -> Result<&[CounterArray]> {
        self.archive.major_cycle_arrays(major, self.current.major)
    }

    pub fn take_major(&mut self, major: u64) -> Result<Vec<CounterArray>> {
        self.archive.take_major(major, self.current.major)
    }

    pub fn archive(&self) -> &ArchiveStore {
        &self.archive
    }

    /// Drops archived arrays (the in-progress array keeps counting).
    pub fn clear_archive(&mut self) {
        self.archive.clear();
    }
}
