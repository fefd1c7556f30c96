//! Assembles one deterministic simulation instance from a scenario
//! configuration and runs it.

use crate::config::ScenarioConfig;
use crate::connectivity::{Connectivity, GroupConfig};
use crate::metrics::ScenarioStats;
use crate::protocol::{RunOutput, Simulation};
use crate::rng::{streams, StreamFactory};
use crate::trace::TraceHandle;
use crate::workload;

/// Runs one instance with an explicit seed, returning the full output
/// (ledger plus deferred-write dispositions).
pub fn run_once(cfg: &ScenarioConfig, seed: u64, trace: Option<TraceHandle>) -> RunOutput {
    let factory = StreamFactory::new(seed);
    let txns = workload::generate(
        &cfg.workload(),
        &mut factory.stream(streams::ARRIVALS),
        &mut factory.stream(streams::PARTICIPANTS),
        &mut factory.stream(streams::FUNCTIONS),
    )
    .expect("scenario config was validated");
    let groups = GroupConfig::new(cfg.adhoc_levels.clone());
    let conn = Connectivity::build(
        cfg.mh_population,
        cfg.disconnection_rate,
        &groups,
        cfg.standard_mean_off,
        cfg.adhoc_mean_off,
        cfg.variant.adhoc_enabled(),
        &factory,
    );
    let sim = Simulation::new(
        cfg.protocol(),
        conn,
        txns,
        factory.stream(streams::DELAYS),
        trace,
    );
    sim.run()
}

/// Runs the scenario at seeds `seed .. seed + replications`, one stats row
/// per seed.
pub fn run_scenario(cfg: &ScenarioConfig) -> Vec<ScenarioStats> {
    (0..cfg.replications as u64)
        .map(|k| {
            let seed = cfg.seed + k;
            run_once(cfg, seed, None).ledger.stats(seed)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Variant;
    use crate::protocol::ExecTimeout;

    fn small_cfg() -> ScenarioConfig {
        ScenarioConfig {
            horizon: 1800.0,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn same_config_twice_yields_identical_stats() {
        let cfg = small_cfg();
        assert_eq!(run_scenario(&cfg), run_scenario(&cfg));
    }

    #[test]
    fn conservation_holds_per_run() {
        let cfg = small_cfg();
        for stats in run_scenario(&cfg) {
            assert_eq!(stats.generated, stats.committed + stats.aborted);
            assert!(stats.generated > 0);
        }
    }

    #[test]
    fn standard2pc_with_no_disconnection_commits_everything() {
        let cfg = ScenarioConfig {
            variant: Variant::Standard2pc,
            disconnection_rate: 0.0,
            ..small_cfg()
        };
        for stats in run_scenario(&cfg) {
            assert_eq!(stats.commit_rate, Some(1.0));
        }
    }

    #[test]
    fn daalg_beats_standard_under_heavy_writes_and_disconnection() {
        let base = ScenarioConfig {
            write_fraction: 0.9,
            disconnection_rate: 0.8,
            adhoc_levels: vec![0.5],
            ..small_cfg()
        };
        let daalg = ScenarioConfig {
            variant: Variant::AdhocDaalg,
            ..base.clone()
        };
        let standard = ScenarioConfig {
            variant: Variant::Standard2pc,
            ..base
        };
        let a = run_scenario(&daalg)[0].commit_rate.unwrap();
        let b = run_scenario(&standard)[0].commit_rate.unwrap();
        assert!(
            a > b,
            "same-seed paired comparison: daalg {a} vs standard {b}"
        );
    }

    #[test]
    fn workload_is_identical_across_variants() {
        let factory = StreamFactory::new(33);
        let cfg_a = ScenarioConfig {
            variant: Variant::Standard2pc,
            conn_timeout: 0.0,
            ..small_cfg()
        };
        let cfg_b = ScenarioConfig {
            variant: Variant::AdhocDaalg,
            conn_timeout: 5.0,
            ..small_cfg()
        };
        let gen = |cfg: &ScenarioConfig| {
            workload::generate(
                &cfg.workload(),
                &mut factory.stream(streams::ARRIVALS),
                &mut factory.stream(streams::PARTICIPANTS),
                &mut factory.stream(streams::FUNCTIONS),
            )
            .unwrap()
        };
        assert_eq!(gen(&cfg_a), gen(&cfg_b));
    }

    #[test]
    fn unlimited_timeout_without_disconnection_still_terminates() {
        let cfg = ScenarioConfig {
            exec_timeout: ExecTimeout::Unlimited,
            disconnection_rate: 0.3,
            horizon: 600.0,
            ..ScenarioConfig::default()
        };
        let stats = run_scenario(&cfg);
        assert_eq!(stats[0].generated, stats[0].committed + stats[0].aborted);
    }
}
