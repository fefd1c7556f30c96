//! Deterministic discrete-event simulation of connection fault-tolerant
//! commit processing for mobile distributed transactions.
//!
//! The simulator models a two-phase-commit variant in which every mobile
//! participant is fronted by a fixed-network agent. Mobile hosts lose and
//! regain base-station coverage; an optional ad-hoc relay channel through
//! neighboring hosts add a second path to the fixed network; and when an
//! agent cannot reach its host before a connection timeout expires, a
//! decision algorithm votes on the host's behalf (presumed commit for WRITE
//! work, queued for deferred delivery; presumed abort for READ work).
//!
//! Runs are bit-level deterministic: identical (seed, configuration) pairs
//! produce identical event traces and identical metrics. All randomness is
//! drawn from named streams so that scenario sweeps can use common random
//! numbers across protocol variants.

pub mod config;
pub mod connectivity;
pub mod engine;
pub mod metrics;
pub mod oracle;
pub mod protocol;
pub mod rng;
pub mod scenario;
pub mod sweep;
pub mod trace;
pub mod workload;

pub use config::{ScenarioConfig, Variant};
pub use engine::SimTime;
pub use metrics::ScenarioStats;
pub use protocol::{Decision, FnKind, Simulation};
pub use scenario::run_scenario;
