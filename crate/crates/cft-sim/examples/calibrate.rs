//! Calibration probe for the connection-timeout knee.
//!
//! Sweeps the link mean-off duration over {2,3,4,5,6} s and reports, per
//! ad-hoc support level, the commit-rate gains over the connection-timeout
//! segments 0 -> 2.4 s and 2.4 -> 5.0 s (all-READ workload, unlimited
//! execution timeout). The shipped default mean-off is the value for which
//! the second gain falls below half the first across every level, with the
//! knee closest to 2.4 s. Run with:
//!
//! ```text
//! cargo run --release --example calibrate
//! ```

use cft_sim::config::{ScenarioConfig, Variant};
use cft_sim::protocol::ExecTimeout;
use cft_sim::scenario::run_once;
use rayon::prelude::*;

const SEEDS: u64 = 10;
const LEVELS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];
const CT_POINTS: [f64; 4] = [0.0, 1.2, 2.4, 5.0];

fn mean_commit_rate(cfg: &ScenarioConfig) -> f64 {
    let total: f64 = (0..SEEDS)
        .into_par_iter()
        .map(|k| {
            run_once(cfg, 1 + k, None)
                .ledger
                .stats(1 + k)
                .commit_rate
                .unwrap_or(0.0)
        })
        .sum();
    total / SEEDS as f64
}

fn main() {
    let disconnections: Vec<f64> = std::env::args()
        .nth(1)
        .map(|s| vec![s.parse().unwrap()])
        .unwrap_or_else(|| vec![0.2, 0.3, 0.5]);
    for &mean_off in &[2.0f64, 3.0, 4.0, 5.0, 6.0] {
        for &d in &disconnections {
            println!("== mean_off {mean_off} s, disconnection {d} ==");
            let mut all_ok = true;
            for &level in &LEVELS {
                let rate_at = |ct: f64| {
                    mean_commit_rate(&ScenarioConfig {
                        variant: Variant::AdhocDaalg,
                        disconnection_rate: d,
                        adhoc_levels: vec![level],
                        write_fraction: 0.0,
                        exec_timeout: ExecTimeout::Unlimited,
                        conn_timeout: ct,
                        standard_mean_off: mean_off,
                        adhoc_mean_off: mean_off,
                        ..ScenarioConfig::default()
                    })
                };
                let rates: Vec<f64> = CT_POINTS.iter().map(|&ct| rate_at(ct)).collect();
                let low_gain = rates[2] - rates[0];
                let high_gain = rates[3] - rates[2];
                let ok = high_gain < 0.5 * low_gain;
                all_ok &= ok;
                println!(
                    "  level {level:.1}: cr(0)={:.4} cr(1.2)={:.4} cr(2.4)={:.4} cr(5)={:.4} \
                     gain(0..2.4)={low_gain:.4} gain(2.4..5)={high_gain:.4} ratio={:.3} {}",
                    rates[0],
                    rates[1],
                    rates[2],
                    rates[3],
                    high_gain / low_gain.max(1e-12),
                    if ok { "OK" } else { "X" },
                );
            }
            println!(
                "  half-gain condition across all levels: {}",
                if all_ok { "SATISFIED" } else { "violated" }
            );
        }
    }
}
