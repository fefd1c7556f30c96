//! The connection fault-tolerant commit protocol: domain types, message
//! path delays, and the event-driven role machines.
//!
//! Roles: a home mobile host initiates a transaction; a fixed-network
//! coordinator collects votes under an execution timeout; each participating
//! mobile host is fronted by a fixed-network agent that relays all traffic
//! and guards the exchange with a connection timeout; fixed hosts vote over
//! wired links. When an agent cannot reach its host before the connection
//! timeout expires, a decision algorithm answers on the host's behalf:
//! WRITE work is queued for deferred delivery and voted Yes (presumed
//! commit), READ work is voted No (presumed abort).

mod sim;

pub use sim::{DeferredEntry, RunOutput, Simulation};

use crate::connectivity::Channel;
use crate::rng::RngStream;

/// Transaction identifier; dense, assigned in arrival order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TxnId(pub u64);

/// Mobile host identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MhId(pub usize);

/// Fixed host identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FhId(pub usize);

/// A transaction participant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Participant {
    Mobile(MhId),
    Fixed(FhId),
}

/// The function a transaction performs. WRITE covers insert, update and
/// delete; the kind is per transaction, so every fragment shares it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FnKind {
    Read,
    Write,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vote {
    Yes,
    No,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Decision {
    Commit,
    Abort,
}

/// Why a transaction aborted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbortReason {
    /// The home host found no channel within the initiation window.
    InitiationFailed,
    /// A participant (or the decision algorithm) voted No.
    VoteNo,
    /// The coordinator's execution timeout expired with votes outstanding.
    ExecTimeoutExpired,
}

/// The coordinator's execution timeout: the deadline for collecting all
/// votes, and (after a decision) the window for collecting acknowledgements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExecTimeout {
    Bounded(f64),
    Unlimited,
}

impl ExecTimeout {
    pub fn bounded(self) -> Option<f64> {
        match self {
            ExecTimeout::Bounded(s) => Some(s),
            ExecTimeout::Unlimited => None,
        }
    }

    pub fn is_unlimited(self) -> bool {
        matches!(self, ExecTimeout::Unlimited)
    }
}

/// One distributed mobile transaction as produced by the workload generator.
///
/// The home host is always a member of `part_mhs` and executes a fragment
/// like any other participant. Fragment execution times are drawn at
/// generation time so the workload is byte-identical across protocol
/// variants run from the same seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Transaction {
    pub id: TxnId,
    pub arrival: f64,
    pub home: MhId,
    pub part_mhs: Vec<MhId>,
    pub part_fhs: Vec<FhId>,
    pub kind: FnKind,
    /// Execution time of each mobile fragment, parallel to `part_mhs`.
    pub mh_exec: Vec<f64>,
    /// Execution time of each fixed fragment, parallel to `part_fhs`.
    pub fh_exec: Vec<f64>,
}

/// A message path through the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessagePath {
    /// Fixed network hop (coordinator, agents, fixed hosts).
    Wired,
    /// Base-station wireless hop between an agent and its host.
    Wireless,
    /// Relay through a neighbor: ad-hoc hop to the neighbor, the neighbor's
    /// wireless hop to a base station, then a wired hop.
    AdhocRelay,
}

/// Per-hop transmission delay ranges (uniform draws, seconds).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayRanges {
    pub wired: (f64, f64),
    pub wireless: (f64, f64),
    pub adhoc: (f64, f64),
}

impl Default for DelayRanges {
    fn default() -> Self {
        DelayRanges {
            wired: (0.01, 0.03),
            wireless: (0.2, 1.0),
            adhoc: (0.4, 2.0),
        }
    }
}

impl DelayRanges {
    /// Fixed delays for scripted walkthroughs and the oracle harness.
    pub fn fixed(wired: f64, wireless: f64, adhoc: f64) -> Self {
        DelayRanges {
            wired: (wired, wired),
            wireless: (wireless, wireless),
            adhoc: (adhoc, adhoc),
        }
    }

    /// Samples the transmission delay of one message over `path`.
    pub fn sample(&self, path: MessagePath, s: &mut RngStream) -> f64 {
        match path {
            MessagePath::Wired => s.uniform(self.wired.0, self.wired.1),
            MessagePath::Wireless => s.uniform(self.wireless.0, self.wireless.1),
            MessagePath::AdhocRelay => {
                s.uniform(self.adhoc.0, self.adhoc.1)
                    + s.uniform(self.wireless.0, self.wireless.1)
                    + s.uniform(self.wired.0, self.wired.1)
            }
        }
    }

    /// Delay of the hop between an agent and its mobile host over `channel`.
    pub fn mobile_hop(&self, channel: Channel, s: &mut RngStream) -> f64 {
        match channel {
            Channel::Standard => self.sample(MessagePath::Wireless, s),
            Channel::Adhoc => self.sample(MessagePath::AdhocRelay, s),
        }
    }
}

/// Protocol knobs for one simulation instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolParams {
    pub exec_timeout: ExecTimeout,
    pub conn_timeout: f64,
    /// When false, agents relay indefinitely and never answer on a host's
    /// behalf; missing votes are resolved by the execution timeout alone.
    pub daalg_enabled: bool,
    pub delays: DelayRanges,
    /// Probability that a fixed host votes No; 0 in every experiment, the
    /// knob exists for forced-abort tests.
    pub fh_abort_prob: f64,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        ProtocolParams {
            exec_timeout: ExecTimeout::Bounded(5.0),
            conn_timeout: 2.4,
            daalg_enabled: true,
            delays: DelayRanges::default(),
            fh_abort_prob: 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamFactory;

    #[test]
    fn wired_delay_stays_in_range() {
        let ranges = DelayRanges::default();
        let mut s = StreamFactory::new(1).stream("delays");
        for _ in 0..10_000 {
            let d = ranges.sample(MessagePath::Wired, &mut s);
            assert!((0.01..=0.03).contains(&d));
        }
    }

    #[test]
    fn standard_mobile_to_coordinator_path_is_interval_sum() {
        // wireless + wired, so [0.21, 1.03]
        let ranges = DelayRanges::default();
        let mut s = StreamFactory::new(2).stream("delays");
        for _ in 0..10_000 {
            let d = ranges.sample(MessagePath::Wireless, &mut s)
                + ranges.sample(MessagePath::Wired, &mut s);
            assert!((0.21..=1.03).contains(&d), "delay {d}");
        }
    }

    #[test]
    fn adhoc_relay_path_is_interval_sum() {
        // adhoc + wireless + wired, so [0.61, 3.03]
        let ranges = DelayRanges::default();
        let mut s = StreamFactory::new(3).stream("delays");
        for _ in 0..10_000 {
            let d = ranges.sample(MessagePath::AdhocRelay, &mut s);
            assert!((0.61..=3.03).contains(&d), "delay {d}");
        }
    }
}
