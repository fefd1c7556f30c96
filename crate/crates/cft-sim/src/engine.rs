//! Deterministic event-queue core: a simulated clock and an ordered event
//! dispatch queue.
//!
//! Events are dispatched in strict `(fire_at, seq)` order, where `seq` is a
//! monotone insertion counter. The tie-break by insertion order makes runs
//! reproducible without relying on hash order or pointer identity.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;

/// Simulated time in seconds. Continuous, real-valued, never negative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct SimTime(f64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0.0);

    /// Wraps a number of seconds. Panics on NaN, infinite, or negative input.
    pub fn new(seconds: f64) -> Self {
        assert!(
            seconds.is_finite() && seconds >= 0.0,
            "SimTime must be finite and non-negative, got {seconds}"
        );
        SimTime(seconds)
    }

    pub fn seconds(self) -> f64 {
        self.0
    }

    /// Time `delta` seconds after `self`. Panics on negative or non-finite delta.
    pub fn after(self, delta: f64) -> Self {
        assert!(
            delta.is_finite() && delta >= 0.0,
            "time offset must be finite and non-negative, got {delta}"
        );
        SimTime(self.0 + delta)
    }
}

impl Eq for SimTime {}

impl Ord for SimTime {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6}", self.0)
    }
}

impl From<f64> for SimTime {
    fn from(seconds: f64) -> Self {
        SimTime::new(seconds)
    }
}

struct Scheduled<E> {
    fire_at: SimTime,
    seq: u64,
    payload: E,
}

impl<E> PartialEq for Scheduled<E> {
    fn eq(&self, other: &Self) -> bool {
        self.fire_at == other.fire_at && self.seq == other.seq
    }
}

impl<E> Eq for Scheduled<E> {}

impl<E> PartialOrd for Scheduled<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Scheduled<E> {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; reverse to pop the earliest (fire_at, seq).
        match other.fire_at.cmp(&self.fire_at) {
            Ordering::Equal => other.seq.cmp(&self.seq),
            ord => ord,
        }
    }
}

/// Priority queue of scheduled events with a simulated clock.
///
/// `(fire_at, seq)` is a strict total order over all events ever scheduled;
/// popping advances the clock and asserts that dispatch order is
/// nondecreasing in time.
pub struct EventQueue<E> {
    heap: BinaryHeap<Scheduled<E>>,
    clock: SimTime,
    next_seq: u64,
}

impl<E> Default for EventQueue<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> EventQueue<E> {
    pub fn new() -> Self {
        EventQueue {
            heap: BinaryHeap::new(),
            clock: SimTime::ZERO,
            next_seq: 0,
        }
    }

    /// Current simulated time.
    pub fn clock(&self) -> SimTime {
        self.clock
    }

    /// Enqueues `payload` to fire at `at`.
    ///
    /// Scheduling in the past is a programming error and halts the run.
    pub fn schedule(&mut self, at: SimTime, payload: E) {
        assert!(
            at >= self.clock,
            "event scheduled in the past: fire_at={} < clock={}",
            at,
            self.clock
        );
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Scheduled {
            fire_at: at,
            seq,
            payload,
        });
    }

    /// Pops the next event in `(fire_at, seq)` order and advances the clock.
    pub fn pop(&mut self) -> Option<(SimTime, E)> {
        let ev = self.heap.pop()?;
        debug_assert!(ev.fire_at >= self.clock, "dispatch order regressed");
        self.clock = ev.fire_at;
        Some((ev.fire_at, ev.payload))
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }
}
