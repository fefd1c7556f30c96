//! Shared helpers for the integration and acceptance suites.
//!
//! Each test binary compiles this module independently and uses a subset,
//! hence the allow.
#![allow(dead_code)]

use cft_sim::config::ScenarioConfig;
use cft_sim::scenario::run_once;
use rayon::prelude::*;

/// Commit rate of one run; 0 for an empty run (never happens at the
/// horizons used here).
pub fn commit_rate(cfg: &ScenarioConfig, seed: u64) -> f64 {
    run_once(cfg, seed, None)
        .ledger
        .stats(seed)
        .commit_rate
        .unwrap_or(0.0)
}

/// Commit rates over `seeds`, computed concurrently (instances are fully
/// isolated).
pub fn commit_rates(cfg: &ScenarioConfig, seeds: &[u64]) -> Vec<f64> {
    seeds.par_iter().map(|&s| commit_rate(cfg, s)).collect()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// One-sided sign test p-value for the hypothesis that paired differences
/// are positive. Ties are dropped, per the standard test.
pub fn sign_test_p(diffs: &[f64]) -> f64 {
    let pos = diffs.iter().filter(|&&d| d > 0.0).count();
    let n = diffs.iter().filter(|&&d| d != 0.0).count();
    if n == 0 {
        return 1.0;
    }
    let mut tail = 0.0;
    for k in pos..=n {
        tail += binomial(n, k);
    }
    tail / 2f64.powi(n as i32)
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

/// Paired per-seed differences `a - b` under common random numbers.
pub fn paired_diffs(a: &ScenarioConfig, b: &ScenarioConfig, seeds: &[u64]) -> Vec<f64> {
    let ra = commit_rates(a, seeds);
    let rb = commit_rates(b, seeds);
    ra.into_iter().zip(rb).map(|(x, y)| x - y).collect()
}

pub fn seeds(base: u64, n: u64) -> Vec<u64> {
    (base..base + n).collect()
}
