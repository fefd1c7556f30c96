//! Outcome ledger and the performance measures: commit rate,
//! presumed-commit rate, and fixed-participant blocking time.

use std::collections::HashSet;

use crate::protocol::{AbortReason, Decision, FnKind, TxnId};

/// Final record for one transaction.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeRecord {
    pub txn: TxnId,
    pub kind: FnKind,
    pub decision: Decision,
    /// Whether any agent answered on a host's behalf for this transaction.
    pub daalg_involved: bool,
    /// Finalization time minus arrival time, seconds.
    pub latency: f64,
    /// Per fixed participant: decision receipt minus prepare receipt.
    pub fh_blocking: Vec<f64>,
    pub abort_reason: Option<AbortReason>,
}

/// Append-only outcome ledger for one simulation instance.
#[derive(Debug, Default)]
pub struct Ledger {
    records: Vec<OutcomeRecord>,
    seen: HashSet<TxnId>,
}

impl Ledger {
    pub fn new() -> Self {
        Ledger::default()
    }

    /// Appends one record. A duplicate transaction id indicates a
    /// double-finalize bug and halts the run.
    pub fn record(&mut self, rec: OutcomeRecord) {
        assert!(
            rec.latency >= 0.0,
            "protocol invariant violated: negative latency for {:?}",
            rec.txn
        );
        assert!(
            self.seen.insert(rec.txn),
            "protocol invariant violated: duplicate outcome record for {:?}",
            rec.txn
        );
        self.records.push(rec);
    }

    pub fn records(&self) -> &[OutcomeRecord] {
        &self.records
    }

    pub fn generated(&self) -> usize {
        self.records.len()
    }

    pub fn committed(&self) -> usize {
        self.records
            .iter()
            .filter(|r| r.decision == Decision::Commit)
            .count()
    }

    pub fn aborted(&self) -> usize {
        self.records
            .iter()
            .filter(|r| r.decision == Decision::Abort)
            .count()
    }

    /// Committed transactions in which the decision algorithm took part.
    pub fn presumed_committed(&self) -> usize {
        self.records
            .iter()
            .filter(|r| r.decision == Decision::Commit && r.daalg_involved)
            .count()
    }

    /// committed / generated; absent for an empty run.
    pub fn commit_rate(&self) -> Option<f64> {
        if self.records.is_empty() {
            None
        } else {
            Some(self.committed() as f64 / self.generated() as f64)
        }
    }

    /// presumed-committed / generated; the denominator counts every
    /// generated transaction so this is directly comparable to (and bounded
    /// by) the commit rate. The share-of-commits reading is exposed
    /// separately.
    pub fn presumed_commit_rate(&self) -> Option<f64> {
        if self.records.is_empty() {
            None
        } else {
            Some(self.presumed_committed() as f64 / self.generated() as f64)
        }
    }

    /// presumed-committed / committed; absent when nothing committed.
    pub fn presumed_share_of_commits(&self) -> Option<f64> {
        let committed = self.committed();
        if committed == 0 {
            None
        } else {
            Some(self.presumed_committed() as f64 / committed as f64)
        }
    }

    /// Mean over all (fixed host, transaction) pairs of the interval from
    /// prepare receipt to decision receipt; absent with no participations.
    pub fn mean_fh_blocking(&self) -> Option<f64> {
        let mut sum = 0.0;
        let mut n = 0usize;
        for rec in &self.records {
            for &b in &rec.fh_blocking {
                sum += b;
                n += 1;
            }
        }
        if n == 0 {
            None
        } else {
            Some(sum / n as f64)
        }
    }

    /// Summarizes the ledger, checking conservation.
    pub fn stats(&self, seed: u64) -> ScenarioStats {
        let generated = self.generated();
        let committed = self.committed();
        let aborted = self.aborted();
        assert_eq!(
            generated,
            committed + aborted,
            "protocol invariant violated: generated != committed + aborted"
        );
        ScenarioStats {
            seed,
            generated,
            committed,
            aborted,
            presumed_committed: self.presumed_committed(),
            commit_rate: self.commit_rate(),
            presumed_commit_rate: self.presumed_commit_rate(),
            presumed_share_of_commits: self.presumed_share_of_commits(),
            mean_fh_blocking: self.mean_fh_blocking(),
        }
    }
}

/// Per-run summary of one scenario execution.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioStats {
    pub seed: u64,
    pub generated: usize,
    pub committed: usize,
    pub aborted: usize,
    pub presumed_committed: usize,
    pub commit_rate: Option<f64>,
    pub presumed_commit_rate: Option<f64>,
    pub presumed_share_of_commits: Option<f64>,
    pub mean_fh_blocking: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: u64, decision: Decision, daalg: bool) -> OutcomeRecord {
        OutcomeRecord {
            txn: TxnId(id),
            kind: FnKind::Write,
            decision,
            daalg_involved: daalg,
            latency: 1.0,
            fh_blocking: vec![],
            abort_reason: None,
        }
    }

    #[test]
    fn conservation_and_rates() {
        let mut ledger = Ledger::new();
        for i in 0..3 {
            ledger.record(rec(i, Decision::Commit, false));
        }
        ledger.record(rec(3, Decision::Abort, false));
        let stats = ledger.stats(0);
        assert_eq!(stats.generated, 4);
        assert_eq!(stats.committed + stats.aborted, 4);
        assert_eq!(stats.commit_rate, Some(0.75));
    }

    #[test]
    fn all_committed_rate_is_one_and_none_is_zero() {
        let mut all = Ledger::new();
        let mut none = Ledger::new();
        for i in 0..5 {
            all.record(rec(i, Decision::Commit, false));
            none.record(rec(i, Decision::Abort, false));
        }
        assert_eq!(all.commit_rate(), Some(1.0));
        assert_eq!(none.commit_rate(), Some(0.0));
    }

    #[test]
    #[should_panic(expected = "duplicate outcome record")]
    fn duplicate_id_halts() {
        let mut ledger = Ledger::new();
        ledger.record(rec(7, Decision::Commit, false));
        ledger.record(rec(7, Decision::Abort, false));
    }

    #[test]
    fn empty_run_reports_absent_rates() {
        let ledger = Ledger::new();
        assert_eq!(ledger.commit_rate(), None);
        assert_eq!(ledger.presumed_commit_rate(), None);
        assert_eq!(ledger.mean_fh_blocking(), None);
    }

    #[test]
    fn presumed_rate_counts_daalg_commits_over_generated() {
        // 100 generated, 80 committed, 20 of the commits via the decision
        // algorithm: presumed-commit rate 0.20.
        let mut ledger = Ledger::new();
        for i in 0..20 {
            ledger.record(rec(i, Decision::Commit, true));
        }
        for i in 20..80 {
            ledger.record(rec(i, Decision::Commit, false));
        }
        for i in 80..100 {
            ledger.record(rec(i, Decision::Abort, false));
        }
        assert_eq!(ledger.presumed_commit_rate(), Some(0.20));
        assert_eq!(ledger.presumed_share_of_commits(), Some(0.25));
    }

    #[test]
    fn aborted_daalg_records_do_not_count_as_presumed_commits() {
        let mut ledger = Ledger::new();
        ledger.record(rec(0, Decision::Abort, true));
        ledger.record(rec(1, Decision::Commit, false));
        assert_eq!(ledger.presumed_committed(), 0);
        assert_eq!(ledger.aborted(), 1);
    }

    #[test]
    fn presumed_equals_commit_rate_when_all_commits_via_daalg() {
        let mut ledger = Ledger::new();
        for i in 0..4 {
            ledger.record(rec(i, Decision::Commit, true));
        }
        ledger.record(rec(4, Decision::Abort, false));
        assert_eq!(ledger.presumed_commit_rate(), ledger.commit_rate());
    }

    #[test]
    fn mean_fh_blocking_averages_all_pairs() {
        let mut ledger = Ledger::new();
        let mut a = rec(0, Decision::Commit, false);
        a.fh_blocking = vec![1.0, 2.0];
        let mut b = rec(1, Decision::Commit, false);
        b.fh_blocking = vec![3.0];
        ledger.record(a);
        ledger.record(b);
        assert_eq!(ledger.mean_fh_blocking(), Some(2.0));
    }
}
