//! Transaction stream generation: Poisson arrivals, random participant
//! sets, and the READ/WRITE mix.
//!
//! The generator consumes only the `arrivals`, `participants` and
//! `functions` streams, so the same master seed yields a byte-identical
//! transaction list no matter which protocol variant consumes it.

use thiserror::Error;

use crate::protocol::{FhId, FnKind, MhId, Transaction, TxnId};
use crate::rng::RngStream;

/// Fragment execution time range for mobile participants, seconds.
pub const MH_EXEC_RANGE: (f64, f64) = (0.3, 0.7);
/// Fragment execution time range for fixed participants, seconds.
pub const FH_EXEC_RANGE: (f64, f64) = (0.1, 0.3);

#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadConfig {
    /// Generation horizon, seconds. Arrivals stop here; transactions in
    /// flight at the horizon still run to completion.
    pub horizon: f64,
    pub mean_interarrival: f64,
    /// Inclusive bounds on the number of mobile participants (the home
    /// host counts as one of them).
    pub part_mh_range: (usize, usize),
    /// Inclusive bounds on the number of fixed participants.
    pub part_fh_range: (usize, usize),
    /// Probability that a transaction's function is WRITE.
    pub write_fraction: f64,
    pub mh_population: usize,
    pub fh_population: usize,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        WorkloadConfig {
            horizon: 36_000.0,
            mean_interarrival: 30.0,
            part_mh_range: (3, 5),
            part_fh_range: (1, 5),
            write_fraction: 0.5,
            mh_population: 20,
            fh_population: 10,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum WorkloadError {
    #[error("mobile population {population} is smaller than the participant upper bound {bound}")]
    MobilePopulationTooSmall { population: usize, bound: usize },
    #[error("fixed population {population} is smaller than the participant upper bound {bound}")]
    FixedPopulationTooSmall { population: usize, bound: usize },
    #[error("write fraction {0} is not a probability")]
    BadWriteFraction(f64),
    #[error("participant range is empty or zero")]
    BadParticipantRange,
    #[error("mean interarrival must be positive, got {0}")]
    BadInterarrival(f64),
    #[error("horizon must be non-negative, got {0}")]
    BadHorizon(f64),
}

impl WorkloadConfig {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        if self.part_mh_range.0 == 0 || self.part_mh_range.0 > self.part_mh_range.1 {
            return Err(WorkloadError::BadParticipantRange);
        }
        if self.part_fh_range.0 == 0 || self.part_fh_range.0 > self.part_fh_range.1 {
            return Err(WorkloadError::BadParticipantRange);
        }
        if self.mh_population < self.part_mh_range.1 {
            return Err(WorkloadError::MobilePopulationTooSmall {
                population: self.mh_population,
                bound: self.part_mh_range.1,
            });
        }
        if self.fh_population < self.part_fh_range.1 {
            return Err(WorkloadError::FixedPopulationTooSmall {
                population: self.fh_population,
                bound: self.part_fh_range.1,
            });
        }
        if !(0.0..=1.0).contains(&self.write_fraction) {
            return Err(WorkloadError::BadWriteFraction(self.write_fraction));
        }
        if self.mean_interarrival <= 0.0 {
            return Err(WorkloadError::BadInterarrival(self.mean_interarrival));
        }
        if !(self.horizon >= 0.0) {
            return Err(WorkloadError::BadHorizon(self.horizon));
        }
        Ok(())
    }
}

/// WRITE with probability `write_fraction`, READ otherwise.
pub fn assign_function(functions: &mut RngStream, write_fraction: f64) -> FnKind {
    if functions.chance(write_fraction) {
        FnKind::Write
    } else {
        FnKind::Read
    }
}

/// Draws a participant set: the home host plus 2-4 further mobile hosts
/// (so 3-5 in total by default), and 1-5 fixed hosts, all uniform without
/// replacement.
pub fn sample_participants(
    cfg: &WorkloadConfig,
    participants: &mut RngStream,
) -> (MhId, Vec<MhId>, Vec<FhId>) {
    let home = MhId(participants.below(cfg.mh_population));
    let n_mh = participants.int_range(cfg.part_mh_range.0, cfg.part_mh_range.1);
    let mut part_mhs = vec![home];
    // Draw the remaining mobile participants from the population minus the
    // home host, remapping indices around it.
    let others = participants.sample_distinct(cfg.mh_population - 1, n_mh - 1);
    part_mhs.extend(others.into_iter().map(|i| {
        let idx = if i >= home.0 { i + 1 } else { i };
        MhId(idx)
    }));
    let n_fh = participants.int_range(cfg.part_fh_range.0, cfg.part_fh_range.1);
    let part_fhs = participants
        .sample_distinct(cfg.fh_population, n_fh)
        .into_iter()
        .map(FhId)
        .collect();
    (home, part_mhs, part_fhs)
}

/// Generates the full transaction stream for one run: a Poisson process
/// truncated at the horizon, with participants, function kind, and fragment
/// execution times drawn per transaction.
pub fn generate(
    cfg: &WorkloadConfig,
    arrivals: &mut RngStream,
    participants: &mut RngStream,
    functions: &mut RngStream,
) -> Result<Vec<Transaction>, WorkloadError> {
    cfg.validate()?;
    let mut out = Vec::new();
    let mut t = arrivals.exponential(cfg.mean_interarrival);
    while t <= cfg.horizon {
        let (home, part_mhs, part_fhs) = sample_participants(cfg, participants);
        let kind = assign_function(functions, cfg.write_fraction);
        let mh_exec = part_mhs
            .iter()
            .map(|_| participants.uniform(MH_EXEC_RANGE.0, MH_EXEC_RANGE.1))
            .collect();
        let fh_exec = part_fhs
            .iter()
            .map(|_| participants.uniform(FH_EXEC_RANGE.0, FH_EXEC_RANGE.1))
            .collect();
        out.push(Transaction {
            id: TxnId(out.len() as u64),
            arrival: t,
            home,
            part_mhs,
            part_fhs,
            kind,
            mh_exec,
            fh_exec,
        });
        t += arrivals.exponential(cfg.mean_interarrival);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{streams, StreamFactory};

    fn generate_with_seed(cfg: &WorkloadConfig, seed: u64) -> Vec<Transaction> {
        let f = StreamFactory::new(seed);
        generate(
            cfg,
            &mut f.stream(streams::ARRIVALS),
            &mut f.stream(streams::PARTICIPANTS),
            &mut f.stream(streams::FUNCTIONS),
        )
        .unwrap()
    }

    #[test]
    fn ten_hour_run_yields_about_twelve_hundred_transactions() {
        let cfg = WorkloadConfig::default();
        for seed in 0..10 {
            let txns = generate_with_seed(&cfg, seed);
            let n = txns.len() as f64;
            assert!(
                (1080.0..=1320.0).contains(&n),
                "seed {seed}: {n} transactions, expected 1200 +/- 10%"
            );
        }
    }

    #[test]
    fn zero_horizon_yields_empty_stream() {
        let cfg = WorkloadConfig {
            horizon: 0.0,
            ..WorkloadConfig::default()
        };
        assert!(generate_with_seed(&cfg, 1).is_empty());
    }

    #[test]
    fn interarrival_mean_within_five_percent() {
        let cfg = WorkloadConfig::default();
        let txns = generate_with_seed(&cfg, 3);
        let mut prev = 0.0;
        let gaps: Vec<f64> = txns
            .iter()
            .map(|t| {
                let g = t.arrival - prev;
                prev = t.arrival;
                g
            })
            .collect();
        let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
        assert!(
            (mean - 30.0).abs() / 30.0 < 0.05,
            "interarrival mean {mean}"
        );
    }

    #[test]
    fn write_share_tracks_write_fraction() {
        let cfg = WorkloadConfig {
            write_fraction: 0.5,
            ..WorkloadConfig::default()
        };
        let txns = generate_with_seed(&cfg, 5);
        let writes = txns.iter().filter(|t| t.kind == FnKind::Write).count();
        let share = writes as f64 / txns.len() as f64;
        assert!((share - 0.5).abs() < 0.03, "WRITE share {share}");
    }

    #[test]
    fn degenerate_write_fractions_are_exact() {
        let all_read = WorkloadConfig {
            write_fraction: 0.0,
            ..WorkloadConfig::default()
        };
        assert!(generate_with_seed(&all_read, 7)
            .iter()
            .all(|t| t.kind == FnKind::Read));
        let all_write = WorkloadConfig {
            write_fraction: 1.0,
            ..WorkloadConfig::default()
        };
        assert!(generate_with_seed(&all_write, 7)
            .iter()
            .all(|t| t.kind == FnKind::Write));
    }

    #[test]
    fn heavy_write_share_within_tolerance() {
        let cfg = WorkloadConfig {
            write_fraction: 0.9,
            horizon: 300_000.0,
            ..WorkloadConfig::default()
        };
        let txns = generate_with_seed(&cfg, 11);
        assert!(txns.len() >= 9000);
        let writes = txns.iter().filter(|t| t.kind == FnKind::Write).count();
        let share = writes as f64 / txns.len() as f64;
        assert!((share - 0.9).abs() < 0.02, "WRITE share {share}");
    }

    #[test]
    fn participant_sets_respect_bounds_and_have_no_duplicates() {
        let cfg = WorkloadConfig::default();
        let txns = generate_with_seed(&cfg, 9);
        for txn in &txns {
            assert!((3..=5).contains(&txn.part_mhs.len()));
            assert!((1..=5).contains(&txn.part_fhs.len()));
            assert!(txn.part_mhs.contains(&txn.home));
            let mut mhs: Vec<_> = txn.part_mhs.iter().map(|m| m.0).collect();
            mhs.sort_unstable();
            mhs.dedup();
            assert_eq!(mhs.len(), txn.part_mhs.len(), "duplicate mobile participant");
            let mut fhs: Vec<_> = txn.part_fhs.iter().map(|f| f.0).collect();
            fhs.sort_unstable();
            fhs.dedup();
            assert_eq!(fhs.len(), txn.part_fhs.len(), "duplicate fixed participant");
            assert!(mhs.iter().all(|&m| m < cfg.mh_population));
            assert!(fhs.iter().all(|&f| f < cfg.fh_population));
        }
    }

    #[test]
    fn mobile_count_is_uniform_over_its_range() {
        let f = StreamFactory::new(13);
        let mut participants = f.stream(streams::PARTICIPANTS);
        let cfg = WorkloadConfig::default();
        let mut counts = [0usize; 3];
        let draws = 10_000;
        for _ in 0..draws {
            let (_, mhs, _) = sample_participants(&cfg, &mut participants);
            counts[mhs.len() - 3] += 1;
        }
        for (i, &c) in counts.iter().enumerate() {
            let freq = c as f64 / draws as f64;
            assert!(
                (freq - 1.0 / 3.0).abs() < 0.02,
                "count {} frequency {freq}",
                i + 3
            );
        }
    }

    #[test]
    fn same_seed_yields_identical_stream() {
        let cfg = WorkloadConfig::default();
        assert_eq!(generate_with_seed(&cfg, 21), generate_with_seed(&cfg, 21));
    }

    #[test]
    fn small_population_is_rejected() {
        let cfg = WorkloadConfig {
            mh_population: 4,
            ..WorkloadConfig::default()
        };
        assert_eq!(
            generate_with_seed_err(&cfg, 1),
            WorkloadError::MobilePopulationTooSmall {
                population: 4,
                bound: 5
            }
        );
    }

    fn generate_with_seed_err(cfg: &WorkloadConfig, seed: u64) -> WorkloadError {
        let f = StreamFactory::new(seed);
        generate(
            cfg,
            &mut f.stream(streams::ARRIVALS),
            &mut f.stream(streams::PARTICIPANTS),
            &mut f.stream(streams::FUNCTIONS),
        )
        .unwrap_err()
    }
}
