//! Event-driven execution of the commit protocol role machines.
//!
//! All role state machines run inside one single-threaded simulation
//! instance; handlers are run-to-completion per event, so no handler ever
//! observes a partially applied state transition. Everything is driven by
//! the `(fire_at, seq)`-ordered event queue, which makes a run a pure
//! function of (workload, connectivity schedule, delay stream).

use std::collections::VecDeque;

use crate::connectivity::Connectivity;
use crate::engine::{EventQueue, SimTime};
use crate::metrics::{Ledger, OutcomeRecord};
use crate::rng::RngStream;
use crate::trace::TraceHandle;

use super::{
    AbortReason, Decision, MhId, Participant, ProtocolParams, Transaction, TxnId, Vote,
};

/// One deferred WRITE fragment held in an agent's FIFO queue.
#[derive(Debug, Clone, PartialEq)]
pub struct DeferredEntry {
    pub txn: TxnId,
    pub mh: MhId,
    pub enqueued_at: f64,
    pub delivered_at: Option<f64>,
    pub discarded: bool,
}

/// Everything a finished run exposes.
pub struct RunOutput {
    pub ledger: Ledger,
    /// Every WRITE fragment the decision algorithm ever queued, with its
    /// delivery or discard disposition.
    pub deferred: Vec<DeferredEntry>,
    pub events_dispatched: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Lifecycle {
    Created,
    Initiated,
    Preparing,
    Decided,
    Finalized,
}

#[derive(Debug, Default)]
struct AgentTxn {
    ct_deadline: Option<SimTime>,
    ct_epoch: u32,
    fragment_sent: bool,
    fragment_delivered: bool,
    vote_received: bool,
    daalg_fired: bool,
}

struct TxnRuntime {
    txn: Transaction,
    state: Lifecycle,
    abort_reason: Option<AbortReason>,
    et_deadline: Option<SimTime>,
    votes: Vec<(Participant, Option<Vote>)>,
    decision: Option<Decision>,
    decision_at: Option<SimTime>,
    agents: Vec<AgentTxn>,
    fh_prepare_at: Vec<Option<SimTime>>,
    fh_decision_at: Vec<Option<SimTime>>,
    applied: Vec<(Participant, Decision)>,
    acks: Vec<Participant>,
    acks_unreachable: usize,
}

impl TxnRuntime {
    fn new(txn: Transaction) -> Self {
        let votes = txn
            .part_mhs
            .iter()
            .map(|&m| (Participant::Mobile(m), None))
            .chain(txn.part_fhs.iter().map(|&f| (Participant::Fixed(f), None)))
            .collect();
        let agents = txn.part_mhs.iter().map(|_| AgentTxn::default()).collect();
        let n_fh = txn.part_fhs.len();
        TxnRuntime {
            state: Lifecycle::Created,
            abort_reason: None,
            et_deadline: None,
            votes,
            decision: None,
            decision_at: None,
            agents,
            fh_prepare_at: vec![None; n_fh],
            fh_decision_at: vec![None; n_fh],
            applied: Vec::new(),
            acks: Vec::new(),
            acks_unreachable: 0,
            txn,
        }
    }

    fn participants(&self) -> usize {
        self.txn.part_mhs.len() + self.txn.part_fhs.len()
    }

    fn finalized(&self) -> bool {
        self.state == Lifecycle::Finalized
    }
}

#[derive(Debug)]
enum Event {
    Arrival { txn: TxnId },
    InitRetry { txn: TxnId },
    InitWindowExpiry { txn: TxnId },
    InitAtCoordinator { txn: TxnId },
    PrepareAtFixed { txn: TxnId, fh: usize },
    PrepareAtAgent { txn: TxnId, mh: usize },
    DeliveryRetry { txn: TxnId, mh: usize },
    FragmentAtMobile { txn: TxnId, mh: usize },
    ConnTimeoutExpiry { txn: TxnId, mh: usize, epoch: u32 },
    VoteReady { txn: TxnId, mh: usize },
    VoteSendRetry { txn: TxnId, mh: usize },
    VoteAtAgent { txn: TxnId, mh: usize, vote: Vote },
    VoteAtCoordinator { txn: TxnId, from: Participant, vote: Vote },
    ExecTimeoutExpiry { txn: TxnId },
    DecisionAtFixed { txn: TxnId, fh: usize },
    DecisionAtAgent { txn: TxnId, mh: usize },
    DecisionDeliveryRetry { txn: TxnId, mh: usize },
    DecisionAtMobile { txn: TxnId, mh: usize },
    AckSendRetry { txn: TxnId, mh: usize },
    AckAtCoordinator { txn: TxnId, from: Participant },
    AckWindowExpiry { txn: TxnId },
    FlushQueue { mh: MhId },
    FlushAtMobile { mh: MhId, entries: Vec<usize> },
}

fn emit(trace: &Option<TraceHandle>, t: SimTime, role: String, event: &str, txn: Option<TxnId>) {
    if let Some(handle) = trace {
        let id = txn.map_or_else(|| "-".to_string(), |x| x.0.to_string());
        handle
            .borrow_mut()
            .push(format!("t={t} role={role} event={event} txn={id}"));
    }
}

macro_rules! trace_ev {
    ($self:expr, $t:expr, $role:expr, $event:expr, $txn:expr) => {
        if $self.trace.is_some() {
            emit(&$self.trace, $t, $role.to_string(), $event, $txn);
        }
    };
}

/// One deterministic simulation instance: owns its engine, streams,
/// connectivity, and metrics. Instances share no mutable state, so separate
/// seeds or scenario points can run concurrently.
pub struct Simulation {
    params: ProtocolParams,
    conn: Connectivity,
    delays: RngStream,
    queue: EventQueue<Event>,
    txns: Vec<TxnRuntime>,
    agent_queues: Vec<VecDeque<usize>>,
    deferred_log: Vec<DeferredEntry>,
    ledger: Ledger,
    trace: Option<TraceHandle>,
    events_dispatched: u64,
}

impl Simulation {
    /// Builds an instance over a pre-generated workload. Transaction ids
    /// must be dense and in arrival order.
    pub fn new(
        params: ProtocolParams,
        conn: Connectivity,
        transactions: Vec<Transaction>,
        delays: RngStream,
        trace: Option<TraceHandle>,
    ) -> Self {
        let n_hosts = conn.n_hosts();
        for (i, txn) in transactions.iter().enumerate() {
            assert_eq!(txn.id.0 as usize, i, "transaction ids must be dense");
            assert!(
                txn.part_mhs.contains(&txn.home),
                "home host must participate in its own transaction"
            );
            assert!(
                txn.part_mhs.iter().all(|m| m.0 < n_hosts),
                "participant refers to an unregistered mobile host"
            );
            assert_eq!(txn.mh_exec.len(), txn.part_mhs.len());
            assert_eq!(txn.fh_exec.len(), txn.part_fhs.len());
        }
        let txns: Vec<TxnRuntime> = transactions.into_iter().map(TxnRuntime::new).collect();
        Simulation {
            params,
            conn,
            delays,
            queue: EventQueue::new(),
            txns,
            agent_queues: (0..n_hosts).map(|_| VecDeque::new()).collect(),
            deferred_log: Vec::new(),
            ledger: Ledger::new(),
            trace,
            events_dispatched: 0,
        }
    }

    /// Runs to completion: every generated transaction is drained to a
    /// finalized outcome, even past the generation horizon.
    pub fn run(mut self) -> RunOutput {
        for rt in &self.txns {
            self.queue
                .schedule(SimTime::new(rt.txn.arrival), Event::Arrival { txn: rt.txn.id });
        }
        while let Some((t, ev)) = self.queue.pop() {
            self.events_dispatched += 1;
            self.dispatch(t, ev);
        }
        for rt in &self.txns {
            assert!(
                rt.finalized(),
                "protocol invariant violated: transaction {:?} not finalized at drain",
                rt.txn.id
            );
        }
        RunOutput {
            ledger: self.ledger,
            deferred: self.deferred_log,
            events_dispatched: self.events_dispatched,
        }
    }

    fn dispatch(&mut self, t: SimTime, ev: Event) {
        match ev {
            Event::Arrival { txn } => self.hmh_initiate(t, txn),
            Event::InitRetry { txn } => self.on_init_retry(t, txn),
            Event::InitWindowExpiry { txn } => self.on_init_window_expiry(t, txn),
            Event::InitAtCoordinator { txn } => self.co_on_init(t, txn),
            Event::PrepareAtFixed { txn, fh } => self.fh_on_prepare(t, txn, fh),
            Event::PrepareAtAgent { txn, mh } => self.ag_on_prepare(t, txn, mh),
            Event::DeliveryRetry { txn, mh } => self.on_delivery_retry(t, txn, mh),
            Event::FragmentAtMobile { txn, mh } => self.mh_on_fragment(t, txn, mh),
            Event::ConnTimeoutExpiry { txn, mh, epoch } => {
                self.on_conn_timeout(t, txn, mh, epoch)
            }
            Event::VoteReady { txn, mh } => self.on_vote_ready(t, txn, mh),
            Event::VoteSendRetry { txn, mh } => self.on_vote_send_retry(t, txn, mh),
            Event::VoteAtAgent { txn, mh, vote } => self.ag_on_vote(t, txn, mh, vote),
            Event::VoteAtCoordinator { txn, from, vote } => self.co_on_vote(t, txn, from, vote),
            Event::ExecTimeoutExpiry { txn } => self.on_exec_timeout(t, txn),
            Event::DecisionAtFixed { txn, fh } => self.fh_on_decision(t, txn, fh),
            Event::DecisionAtAgent { txn, mh } => self.ag_on_decision(t, txn, mh),
            Event::DecisionDeliveryRetry { txn, mh } => {
                self.on_decision_delivery_retry(t, txn, mh)
            }
            Event::DecisionAtMobile { txn, mh } => self.mh_on_decision(t, txn, mh),
            Event::AckSendRetry { txn, mh } => self.on_ack_send_retry(t, txn, mh),
            Event::AckAtCoordinator { txn, from } => self.co_on_ack(t, txn, from),
            Event::AckWindowExpiry { txn } => self.on_ack_window_expiry(t, txn),
            Event::FlushQueue { mh } => self.ag_on_reconnect(t, mh),
            Event::FlushAtMobile { mh, entries } => self.mh_on_flush(t, mh, entries),
        }
    }

    /// Guard for configurations that could never resolve: a permanently
    /// unreachable participant can only be tolerated when the execution
    /// timeout or the decision algorithm will eventually answer.
    fn stall_guard(&self, what: &str) {
        if self.params.exec_timeout.is_unlimited() && !self.params.daalg_enabled {
            panic!(
                "protocol invariant violated: {what} is permanently unreachable \
                 with an unlimited execution timeout and the decision algorithm disabled"
            );
        }
    }

    // ---- initiation ----------------------------------------------------

    fn hmh_initiate(&mut self, t: SimTime, id: TxnId) {
        let home = self.txns[id.0 as usize].txn.home;
        trace_ev!(self, t, "home", "arrival", Some(id));
        if let Some(ch) = self.conn.effective_channel(home.0, t) {
            self.send_init(t, id, ch);
            return;
        }
        // Deferred initiation: wait for a channel inside the initiation
        // window (the configured execution timeout; unbounded when the
        // timeout is unlimited).
        trace_ev!(self, t, "home", "init_deferred", Some(id));
        let window_end = self
            .params
            .exec_timeout
            .bounded()
            .map(|et| SimTime::new(self.txns[id.0 as usize].txn.arrival).after(et));
        match self.conn.next_channel_available(home.0, t) {
            None => self.init_failed(t, id),
            Some(r) => match window_end {
                Some(w) if r > w => self.queue.schedule(w, Event::InitWindowExpiry { txn: id }),
                _ => self.queue.schedule(r, Event::InitRetry { txn: id }),
            },
        }
    }

    fn on_init_retry(&mut self, t: SimTime, id: TxnId) {
        debug_assert_eq!(self.txns[id.0 as usize].state, Lifecycle::Created);
        let home = self.txns[id.0 as usize].txn.home;
        let ch = self
            .conn
            .effective_channel(home.0, t)
            .expect("initiation retry scheduled at a channel-available instant");
        self.send_init(t, id, ch);
    }

    fn send_init(&mut self, t: SimTime, id: TxnId, ch: crate::connectivity::Channel) {
        let rt = &mut self.txns[id.0 as usize];
        rt.state = Lifecycle::Initiated;
        let hop = self.params.delays.mobile_hop(ch, &mut self.delays)
            + self
                .params
                .delays
                .sample(super::MessagePath::Wired, &mut self.delays);
        trace_ev!(self, t, "home", "init_sent", Some(id));
        self.queue
            .schedule(t.after(hop), Event::InitAtCoordinator { txn: id });
    }

    fn on_init_window_expiry(&mut self, t: SimTime, id: TxnId) {
        if self.txns[id.0 as usize].state == Lifecycle::Created {
            self.init_failed(t, id);
        }
    }

    fn init_failed(&mut self, t: SimTime, id: TxnId) {
        let rt = &mut self.txns[id.0 as usize];
        rt.decision = Some(Decision::Abort);
        rt.decision_at = Some(t);
        rt.abort_reason = Some(AbortReason::InitiationFailed);
        trace_ev!(self, t, "home", "init_failed", Some(id));
        self.finalize(t, id);
    }

    // ---- vote phase ----------------------------------------------------

    fn co_on_init(&mut self, t: SimTime, id: TxnId) {
        let Self {
            txns,
            queue,
            delays,
            params,
            trace,
            ..
        } = self;
        let rt = &mut txns[id.0 as usize];
        debug_assert_eq!(rt.state, Lifecycle::Initiated);
        rt.state = Lifecycle::Preparing;
        emit(trace, t, "coordinator".into(), "receive_init", Some(id));
        if let Some(et) = params.exec_timeout.bounded() {
            let deadline = t.after(et);
            rt.et_deadline = Some(deadline);
            queue.schedule(deadline, Event::ExecTimeoutExpiry { txn: id });
        }
        for fh in 0..rt.txn.part_fhs.len() {
            let d = params.delays.sample(super::MessagePath::Wired, delays);
            queue.schedule(t.after(d), Event::PrepareAtFixed { txn: id, fh });
        }
        for mh in 0..rt.txn.part_mhs.len() {
            let d = params.delays.sample(super::MessagePath::Wired, delays);
            queue.schedule(t.after(d), Event::PrepareAtAgent { txn: id, mh });
        }
    }

    fn fh_on_prepare(&mut self, t: SimTime, id: TxnId, fh: usize) {
        let Self {
            txns,
            queue,
            delays,
            params,
            trace,
            ..
        } = self;
        let rt = &mut txns[id.0 as usize];
        if rt.finalized() {
            return;
        }
        rt.fh_prepare_at[fh] = Some(t);
        let fh_id = rt.txn.part_fhs[fh];
        emit(trace, t, format!("fixed:{}", fh_id.0), "prepare", Some(id));
        let vote = if params.fh_abort_prob >= 1.0 {
            Vote::No
        } else if params.fh_abort_prob > 0.0 && delays.chance(params.fh_abort_prob) {
            Vote::No
        } else {
            Vote::Yes
        };
        let exec = rt.txn.fh_exec[fh];
        let wire = params.delays.sample(super::MessagePath::Wired, delays);
        queue.schedule(
            t.after(exec + wire),
            Event::VoteAtCoordinator {
                txn: id,
                from: Participant::Fixed(fh_id),
                vote,
            },
        );
    }

    fn ag_on_prepare(&mut self, t: SimTime, id: TxnId, mh: usize) {
        {
            let rt = &mut self.txns[id.0 as usize];
            if rt.finalized() || rt.decision.is_some() {
                return;
            }
            if self.params.daalg_enabled {
                let deadline = t.after(self.params.conn_timeout);
                let agent = &mut rt.agents[mh];
                agent.ct_deadline = Some(deadline);
                let epoch = agent.ct_epoch;
                self.queue
                    .schedule(deadline, Event::ConnTimeoutExpiry { txn: id, mh, epoch });
            }
        }
        let mh_id = self.txns[id.0 as usize].txn.part_mhs[mh];
        trace_ev!(self, t, format!("agent:{}", mh_id.0), "prepare", Some(id));
        self.attempt_fragment_delivery(t, id, mh);
    }

    fn attempt_fragment_delivery(&mut self, t: SimTime, id: TxnId, mh: usize) {
        let mh_id = self.txns[id.0 as usize].txn.part_mhs[mh];
        if let Some(ch) = self.conn.effective_channel(mh_id.0, t) {
            let hop = self.params.delays.mobile_hop(ch, &mut self.delays);
            let rt = &mut self.txns[id.0 as usize];
            rt.agents[mh].fragment_sent = true;
            trace_ev!(
                self,
                t,
                format!("agent:{}", mh_id.0),
                "fragment_sent",
                Some(id)
            );
            self.queue
                .schedule(t.after(hop), Event::FragmentAtMobile { txn: id, mh });
            return;
        }
        let next = self.conn.next_channel_available(mh_id.0, t);
        let rt = &self.txns[id.0 as usize];
        if self.params.daalg_enabled {
            // Retry only if the channel recovers strictly before the
            // connection timeout; otherwise the expiry answers.
            if let Some(r) = next {
                if r < rt.agents[mh].ct_deadline.expect("deadline set on prepare") {
                    self.queue.schedule(r, Event::DeliveryRetry { txn: id, mh });
                }
            }
        } else {
            match next {
                Some(r) => self.queue.schedule(r, Event::DeliveryRetry { txn: id, mh }),
                None => self.stall_guard("a participant's fragment delivery"),
            }
        }
    }

    fn on_delivery_retry(&mut self, t: SimTime, id: TxnId, mh: usize) {
        let rt = &self.txns[id.0 as usize];
        if rt.finalized() || rt.decision.is_some() {
            return;
        }
        let agent = &rt.agents[mh];
        if agent.fragment_sent || agent.daalg_fired {
            return;
        }
        self.attempt_fragment_delivery(t, id, mh);
    }

    fn mh_on_fragment(&mut self, t: SimTime, id: TxnId, mh: usize) {
        let Self {
            txns,
            queue,
            params,
            trace,
            ..
        } = self;
        let rt = &mut txns[id.0 as usize];
        if rt.finalized() {
            return;
        }
        let mh_id = rt.txn.part_mhs[mh];
        emit(
            trace,
            t,
            format!("mobile:{}", mh_id.0),
            "fragment_delivered",
            Some(id),
        );
        let agent = &mut rt.agents[mh];
        agent.fragment_delivered = true;
        // Confirmed hand-off restarts the connection timeout as the window
        // for the vote to come back through the agent.
        if params.daalg_enabled && !agent.daalg_fired && rt.decision.is_none() {
            agent.ct_epoch += 1;
            let deadline = t.after(params.conn_timeout);
            agent.ct_deadline = Some(deadline);
            let epoch = agent.ct_epoch;
            queue.schedule(deadline, Event::ConnTimeoutExpiry { txn: id, mh, epoch });
            emit(trace, t, format!("agent:{}", mh_id.0), "ct_reset", Some(id));
        }
        let exec = rt.txn.mh_exec[mh];
        queue.schedule(t.after(exec), Event::VoteReady { txn: id, mh });
    }

    fn on_vote_ready(&mut self, t: SimTime, id: TxnId, mh: usize) {
        if self.txns[id.0 as usize].finalized() {
            return;
        }
        let mh_id = self.txns[id.0 as usize].txn.part_mhs[mh];
        trace_ev!(self, t, format!("mobile:{}", mh_id.0), "vote_ready", Some(id));
        self.attempt_vote_send(t, id, mh);
    }

    fn attempt_vote_send(&mut self, t: SimTime, id: TxnId, mh: usize) {
        let mh_id = self.txns[id.0 as usize].txn.part_mhs[mh];
        if let Some(ch) = self.conn.effective_channel(mh_id.0, t) {
            let hop = self.params.delays.mobile_hop(ch, &mut self.delays);
            self.queue.schedule(
                t.after(hop),
                Event::VoteAtAgent {
                    txn: id,
                    mh,
                    vote: Vote::Yes,
                },
            );
            return;
        }
        match self.conn.next_channel_available(mh_id.0, t) {
            Some(r) => self.queue.schedule(r, Event::VoteSendRetry { txn: id, mh }),
            None => self.stall_guard("a participant's vote return"),
        }
    }

    fn on_vote_send_retry(&mut self, t: SimTime, id: TxnId, mh: usize) {
        let rt = &self.txns[id.0 as usize];
        if rt.finalized() || rt.decision.is_some() {
            return;
        }
        self.attempt_vote_send(t, id, mh);
    }

    fn ag_on_vote(&mut self, t: SimTime, id: TxnId, mh: usize, vote: Vote) {
        let Self {
            txns,
            queue,
            delays,
            params,
            trace,
            ..
        } = self;
        let rt = &mut txns[id.0 as usize];
        if rt.finalized() {
            return;
        }
        let mh_id = rt.txn.part_mhs[mh];
        let agent = &mut rt.agents[mh];
        if agent.vote_received {
            emit(
                trace,
                t,
                format!("agent:{}", mh_id.0),
                "vote_duplicate_dropped",
                Some(id),
            );
            return;
        }
        agent.vote_received = true;
        if agent.daalg_fired {
            // The relay gate is closed once the connection timeout expired:
            // the agent already answered on the host's behalf, so the late
            // genuine vote is dropped rather than forwarded.
            emit(
                trace,
                t,
                format!("agent:{}", mh_id.0),
                "late_vote_dropped",
                Some(id),
            );
            return;
        }
        if params.daalg_enabled {
            // Genuine vote beat the connection timeout; cancel the pending
            // expiry by bumping the epoch.
            agent.ct_epoch += 1;
        }
        emit(trace, t, format!("agent:{}", mh_id.0), "vote_relayed", Some(id));
        let wire = params.delays.sample(super::MessagePath::Wired, delays);
        queue.schedule(
            t.after(wire),
            Event::VoteAtCoordinator {
                txn: id,
                from: Participant::Mobile(mh_id),
                vote,
            },
        );
    }

    fn on_conn_timeout(&mut self, t: SimTime, id: TxnId, mh: usize, epoch: u32) {
        let (mh_id, kind) = {
            let rt = &mut self.txns[id.0 as usize];
            if rt.finalized() || rt.decision.is_some() {
                return;
            }
            let agent = &mut rt.agents[mh];
            if agent.ct_epoch != epoch || agent.vote_received {
                return; // stale timer
            }
            agent.daalg_fired = true;
            (rt.txn.part_mhs[mh], rt.txn.kind)
        };
        // The decision algorithm answers on the host's behalf: queue WRITE
        // work and vote Yes (presumed commit); vote No for READ work
        // (presumed abort).
        let vote = match kind {
            super::FnKind::Write => {
                let entry_idx = self.deferred_log.len();
                self.deferred_log.push(DeferredEntry {
                    txn: id,
                    mh: mh_id,
                    enqueued_at: t.seconds(),
                    delivered_at: None,
                    discarded: false,
                });
                self.agent_queues[mh_id.0].push_back(entry_idx);
                if let Some(r) = self.conn.next_channel_available(mh_id.0, t) {
                    self.queue.schedule(r, Event::FlushQueue { mh: mh_id });
                }
                trace_ev!(self, t, format!("agent:{}", mh_id.0), "daalg_yes", Some(id));
                Vote::Yes
            }
            super::FnKind::Read => {
                trace_ev!(self, t, format!("agent:{}", mh_id.0), "daalg_no", Some(id));
                Vote::No
            }
        };
        let wire = self
            .params
            .delays
            .sample(super::MessagePath::Wired, &mut self.delays);
        self.queue.schedule(
            t.after(wire),
            Event::VoteAtCoordinator {
                txn: id,
                from: Participant::Mobile(mh_id),
                vote,
            },
        );
    }

    fn co_on_vote(&mut self, t: SimTime, id: TxnId, from: Participant, vote: Vote) {
        {
            let rt = &mut self.txns[id.0 as usize];
            if rt.finalized() {
                return;
            }
            if rt.decision.is_some() {
                trace_ev!(self, t, "coordinator", "late_vote_ignored", Some(id));
                return;
            }
            let slot = rt
                .votes
                .iter_mut()
                .find(|(p, _)| *p == from)
                .expect("vote from a non-participant");
            if slot.1.is_some() {
                trace_ev!(self, t, "coordinator", "duplicate_vote_ignored", Some(id));
                return;
            }
            slot.1 = Some(vote);
        }
        trace_ev!(self, t, "coordinator", "vote_recorded", Some(id));
        let rt = &self.txns[id.0 as usize];
        if vote == Vote::No {
            self.co_decide(t, id, Decision::Abort, Some(AbortReason::VoteNo));
        } else if rt.votes.iter().all(|(_, v)| *v == Some(Vote::Yes)) {
            self.co_decide(t, id, Decision::Commit, None);
        }
    }

    fn on_exec_timeout(&mut self, t: SimTime, id: TxnId) {
        let rt = &self.txns[id.0 as usize];
        if rt.decision.is_none() && rt.state == Lifecycle::Preparing {
            self.co_decide(t, id, Decision::Abort, Some(AbortReason::ExecTimeoutExpired));
        }
    }

    fn co_decide(&mut self, t: SimTime, id: TxnId, d: Decision, reason: Option<AbortReason>) {
        let Self {
            txns,
            queue,
            delays,
            params,
            trace,
            ..
        } = self;
        let rt = &mut txns[id.0 as usize];
        if rt.decision.is_some() {
            panic!(
                "protocol invariant violated: second decision attempt for {:?}",
                id
            );
        }
        if d == Decision::Commit {
            assert!(
                rt.votes.iter().all(|(_, v)| *v == Some(Vote::Yes)),
                "protocol invariant violated: commit without unanimous yes votes"
            );
            assert!(
                rt.et_deadline.is_none_or(|dl| t <= dl),
                "protocol invariant violated: commit decided after the execution deadline"
            );
        }
        rt.decision = Some(d);
        rt.decision_at = Some(t);
        rt.abort_reason = reason;
        rt.state = Lifecycle::Decided;
        emit(
            trace,
            t,
            "coordinator".into(),
            if d == Decision::Commit {
                "decide_commit"
            } else {
                "decide_abort"
            },
            Some(id),
        );
        for fh in 0..rt.txn.part_fhs.len() {
            let wire = params.delays.sample(super::MessagePath::Wired, delays);
            queue.schedule(t.after(wire), Event::DecisionAtFixed { txn: id, fh });
        }
        for mh in 0..rt.txn.part_mhs.len() {
            let wire = params.delays.sample(super::MessagePath::Wired, delays);
            queue.schedule(t.after(wire), Event::DecisionAtAgent { txn: id, mh });
        }
        // Fresh window for acknowledgement collection.
        if let Some(et) = params.exec_timeout.bounded() {
            queue.schedule(t.after(et), Event::AckWindowExpiry { txn: id });
        }
    }

    // ---- decision propagation and acknowledgements ----------------------

    fn fh_on_decision(&mut self, t: SimTime, id: TxnId, fh: usize) {
        let Self {
            txns,
            queue,
            delays,
            params,
            trace,
            ..
        } = self;
        let rt = &mut txns[id.0 as usize];
        if rt.finalized() {
            return;
        }
        let d = rt.decision.expect("decision broadcast without a decision");
        rt.fh_decision_at[fh] = Some(t);
        let fh_id = rt.txn.part_fhs[fh];
        rt.applied.push((Participant::Fixed(fh_id), d));
        emit(trace, t, format!("fixed:{}", fh_id.0), "decision_applied", Some(id));
        let wire = params.delays.sample(super::MessagePath::Wired, delays);
        queue.schedule(
            t.after(wire),
            Event::AckAtCoordinator {
                txn: id,
                from: Participant::Fixed(fh_id),
            },
        );
    }

    fn ag_on_decision(&mut self, t: SimTime, id: TxnId, mh: usize) {
        let (mh_id, d) = {
            let rt = &self.txns[id.0 as usize];
            if rt.finalized() {
                return;
            }
            (
                rt.txn.part_mhs[mh],
                rt.decision.expect("decision broadcast without a decision"),
            )
        };
        if d == Decision::Abort {
            // An aborted transaction's queued WRITE fragments must never be
            // delivered; drop them here.
            let queue_ref = &mut self.agent_queues[mh_id.0];
            queue_ref.retain(|&entry_idx| {
                let entry = &mut self.deferred_log[entry_idx];
                if entry.txn == id {
                    entry.discarded = true;
                    false
                } else {
                    true
                }
            });
        }
        trace_ev!(self, t, format!("agent:{}", mh_id.0), "decision_received", Some(id));
        self.attempt_decision_delivery(t, id, mh);
    }

    fn attempt_decision_delivery(&mut self, t: SimTime, id: TxnId, mh: usize) {
        let mh_id = self.txns[id.0 as usize].txn.part_mhs[mh];
        if let Some(ch) = self.conn.effective_channel(mh_id.0, t) {
            let hop = self.params.delays.mobile_hop(ch, &mut self.delays);
            self.queue
                .schedule(t.after(hop), Event::DecisionAtMobile { txn: id, mh });
            return;
        }
        match self.conn.next_channel_available(mh_id.0, t) {
            Some(r) => self
                .queue
                .schedule(r, Event::DecisionDeliveryRetry { txn: id, mh }),
            None => {
                // Channel never recovers: this acknowledgement can never
                // arrive. Outcome classification is unaffected.
                self.txns[id.0 as usize].acks_unreachable += 1;
                self.maybe_finalize_on_acks(t, id);
            }
        }
    }

    fn on_decision_delivery_retry(&mut self, t: SimTime, id: TxnId, mh: usize) {
        if self.txns[id.0 as usize].finalized() {
            return;
        }
        self.attempt_decision_delivery(t, id, mh);
    }

    fn mh_on_decision(&mut self, t: SimTime, id: TxnId, mh: usize) {
        let (mh_id, d) = {
            let rt = &mut self.txns[id.0 as usize];
            if rt.finalized() {
                return;
            }
            let mh_id = rt.txn.part_mhs[mh];
            let d = rt.decision.expect("decision delivery without a decision");
            rt.applied.push((Participant::Mobile(mh_id), d));
            (mh_id, d)
        };
        let _ = d;
        trace_ev!(self, t, format!("mobile:{}", mh_id.0), "decision_applied", Some(id));
        self.attempt_ack_send(t, id, mh);
    }

    fn attempt_ack_send(&mut self, t: SimTime, id: TxnId, mh: usize) {
        let mh_id = self.txns[id.0 as usize].txn.part_mhs[mh];
        if let Some(ch) = self.conn.effective_channel(mh_id.0, t) {
            let hop = self.params.delays.mobile_hop(ch, &mut self.delays)
                + self
                    .params
                    .delays
                    .sample(super::MessagePath::Wired, &mut self.delays);
            self.queue.schedule(
                t.after(hop),
                Event::AckAtCoordinator {
                    txn: id,
                    from: Participant::Mobile(mh_id),
                },
            );
            return;
        }
        match self.conn.next_channel_available(mh_id.0, t) {
            Some(r) => self.queue.schedule(r, Event::AckSendRetry { txn: id, mh }),
            None => {
                self.txns[id.0 as usize].acks_unreachable += 1;
                self.maybe_finalize_on_acks(t, id);
            }
        }
    }

    fn on_ack_send_retry(&mut self, t: SimTime, id: TxnId, mh: usize) {
        if self.txns[id.0 as usize].finalized() {
            return;
        }
        self.attempt_ack_send(t, id, mh);
    }

    fn co_on_ack(&mut self, t: SimTime, id: TxnId, from: Participant) {
        let rt = &mut self.txns[id.0 as usize];
        if rt.finalized() {
            trace_ev!(self, t, "coordinator", "late_ack_ignored", Some(id));
            return;
        }
        if !rt.acks.contains(&from) {
            rt.acks.push(from);
        }
        trace_ev!(self, t, "coordinator", "ack", Some(id));
        self.maybe_finalize_on_acks(t, id);
    }

    fn maybe_finalize_on_acks(&mut self, t: SimTime, id: TxnId) {
        let rt = &self.txns[id.0 as usize];
        if !rt.finalized() && rt.acks.len() + rt.acks_unreachable == rt.participants() {
            self.finalize(t, id);
        }
    }

    fn on_ack_window_expiry(&mut self, t: SimTime, id: TxnId) {
        if !self.txns[id.0 as usize].finalized() {
            self.finalize(t, id);
        }
    }

    // ---- deferred-write queue -------------------------------------------

    /// Fired at a channel-available instant for `mh`: sends every queued
    /// fragment whose transaction is still pending or has committed, in
    /// FIFO order, as one message. Entries of aborted transactions are
    /// discarded, never delivered.
    fn ag_on_reconnect(&mut self, t: SimTime, mh: MhId) {
        let mut batch = Vec::new();
        while let Some(&entry_idx) = self.agent_queues[mh.0].front() {
            self.agent_queues[mh.0].pop_front();
            let txn = self.deferred_log[entry_idx].txn;
            let decision = self.txns[txn.0 as usize].decision;
            if decision == Some(Decision::Abort) {
                self.deferred_log[entry_idx].discarded = true;
                trace_ev!(self, t, format!("agent:{}", mh.0), "deferred_discarded", Some(txn));
            } else {
                batch.push(entry_idx);
            }
        }
        if batch.is_empty() {
            return;
        }
        // Atomicity check: nothing launched for an aborted transaction.
        for &entry_idx in &batch {
            let txn = self.deferred_log[entry_idx].txn;
            assert_ne!(
                self.txns[txn.0 as usize].decision,
                Some(Decision::Abort),
                "protocol invariant violated: deferred write launched for an aborted transaction"
            );
        }
        let ch = self
            .conn
            .effective_channel(mh.0, t)
            .expect("queue flush scheduled at a channel-available instant");
        let hop = self.params.delays.mobile_hop(ch, &mut self.delays);
        trace_ev!(self, t, format!("agent:{}", mh.0), "flush_sent", None);
        self.queue
            .schedule(t.after(hop), Event::FlushAtMobile { mh, entries: batch });
    }

    fn mh_on_flush(&mut self, t: SimTime, mh: MhId, entries: Vec<usize>) {
        for entry_idx in entries {
            let entry = &mut self.deferred_log[entry_idx];
            entry.delivered_at = Some(t.seconds());
            let txn = entry.txn;
            trace_ev!(self, t, format!("mobile:{}", mh.0), "deferred_applied", Some(txn));
        }
    }

    // ---- finalization ----------------------------------------------------

    fn finalize(&mut self, t: SimTime, id: TxnId) {
        let rt = &mut self.txns[id.0 as usize];
        assert!(!rt.finalized(), "double finalize for {id:?}");
        rt.state = Lifecycle::Finalized;
        let decision = rt
            .decision
            .expect("finalize requires a recorded decision");
        // Split-decision check: every participant that applied a decision
        // applied the coordinator's.
        for (p, applied) in &rt.applied {
            assert_eq!(
                *applied, decision,
                "protocol invariant violated: split decision at {p:?} for {id:?}"
            );
        }
        let daalg_involved = rt.agents.iter().any(|a| a.daalg_fired);
        if rt.txn.kind == super::FnKind::Read && daalg_involved {
            assert_eq!(
                decision,
                Decision::Abort,
                "protocol invariant violated: READ transaction survived a presumed-abort vote"
            );
        }
        let fh_blocking: Vec<f64> = rt
            .fh_prepare_at
            .iter()
            .zip(&rt.fh_decision_at)
            .filter_map(|(p, d)| match (p, d) {
                (Some(p), Some(d)) => Some(d.seconds() - p.seconds()),
                _ => None,
            })
            .collect();
        let rec = OutcomeRecord {
            txn: id,
            kind: rt.txn.kind,
            decision,
            daalg_involved,
            latency: t.seconds() - rt.txn.arrival,
            fh_blocking,
            abort_reason: rt.abort_reason,
        };
        trace_ev!(self, t, "coordinator", "finalized", Some(id));
        self.ledger.record(rec);
    }
}
