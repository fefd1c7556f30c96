//! Per-mobile-host stochastic availability of the standard (base-station)
//! channel and the ad-hoc relay channel.
//!
//! Each channel is an alternating renewal process: off-durations are
//! exponential with mean `mean_off`, on-durations exponential with
//! `mean_on = mean_off * availability / (1 - availability)`, which makes the
//! long-run on-time fraction converge to `availability`. Memoryless phases
//! are the minimal-assumption shape when only a time fraction is specified.
//!
//! Interval schedules are generated lazily from a per-link stream and
//! memoized, so querying times out of order yields the same schedule as
//! querying in order, and the trace for a given master seed is identical
//! across scenario variants.

use crate::engine::SimTime;
use crate::rng::{RngStream, StreamFactory};

const MIN_INTERVAL: f64 = 1e-12;

enum Phases {
    /// Permanently on or off (availability exactly 1 or 0).
    Fixed,
    /// Lazily extended alternating exponential on/off schedule.
    Renewal { mean_on: f64, mean_off: f64, rng: RngStream },
    /// Explicit switch times; the state after the last switch persists.
    Scripted,
}

/// Alternating on/off availability process for one host channel.
pub struct LinkProcess {
    availability: f64,
    initial_on: bool,
    /// Ascending instants at which the state flips. The state on
    /// `[switches[i-1], switches[i])` is `initial_on` xor (i odd).
    switches: Vec<f64>,
    phases: Phases,
}

impl LinkProcess {
    /// Builds an exponential on/off renewal process with the given long-run
    /// on fraction. The initial phase is drawn from the stationary
    /// distribution. Availability 0 or 1 degenerates to a constant state.
    pub fn renewal(availability: f64, mean_off: f64, mut rng: RngStream) -> Self {
        assert!(
            (0.0..=1.0).contains(&availability),
            "availability out of range: {availability}"
        );
        assert!(mean_off > 0.0, "mean_off must be positive, got {mean_off}");
        if availability == 0.0 || availability == 1.0 {
            return LinkProcess {
                availability,
                initial_on: availability == 1.0,
                switches: Vec::new(),
                phases: Phases::Fixed,
            };
        }
        let mean_on = mean_off * availability / (1.0 - availability);
        let initial_on = rng.chance(availability);
        LinkProcess {
            availability,
            initial_on,
            switches: Vec::new(),
            phases: Phases::Renewal {
                mean_on,
                mean_off,
                rng,
            },
        }
    }

    /// A channel that is permanently on or permanently off.
    pub fn always(on: bool) -> Self {
        LinkProcess {
            availability: if on { 1.0 } else { 0.0 },
            initial_on: on,
            switches: Vec::new(),
            phases: Phases::Fixed,
        }
    }

    /// A channel following an explicit switch-time script. The state after
    /// the last switch persists forever.
    pub fn scripted(initial_on: bool, switches: Vec<f64>) -> Self {
        assert!(
            switches.windows(2).all(|w| w[0] < w[1]),
            "scripted switch times must be strictly ascending"
        );
        assert!(
            switches.iter().all(|&s| s > 0.0),
            "scripted switch times must be positive"
        );
        LinkProcess {
            availability: f64::NAN,
            initial_on,
            switches,
            phases: Phases::Scripted,
        }
    }

    pub fn availability(&self) -> f64 {
        self.availability
    }

    /// Extends the lazy schedule until it covers `t`.
    fn extend_past(&mut self, t: f64) {
        if let Phases::Renewal {
            mean_on,
            mean_off,
            rng,
        } = &mut self.phases
        {
            while self.switches.last().copied().unwrap_or(0.0) <= t {
                let n = self.switches.len();
                // State of the segment that the next draw terminates.
                let seg_on = self.initial_on ^ (n % 2 == 1);
                let mean = if seg_on { *mean_on } else { *mean_off };
                let dur = rng.exponential(mean).max(MIN_INTERVAL);
                let start = self.switches.last().copied().unwrap_or(0.0);
                self.switches.push(start + dur);
            }
        }
    }

    /// Whether the channel is on at `t`. Switch instants belong to the new
    /// segment (`[switch, next)` half-open intervals).
    pub fn is_up(&mut self, t: f64) -> bool {
        self.extend_past(t);
        let flips = self.switches.partition_point(|&s| s <= t);
        self.initial_on ^ (flips % 2 == 1)
    }

    /// Earliest `t' >= t` at which the channel is on, or `None` if it never
    /// comes up again.
    pub fn next_up(&mut self, t: f64) -> Option<f64> {
        if self.is_up(t) {
            return Some(t);
        }
        let idx = self.switches.partition_point(|&s| s <= t);
        match self.phases {
            Phases::Fixed => None,
            Phases::Renewal { .. } => Some(self.switches[idx]),
            Phases::Scripted => {
                // Off now, so the next switch (if any) flips to on.
                self.switches.get(idx).copied()
            }
        }
    }

    /// Fraction of `[0, horizon]` spent on; used by calibration and tests.
    pub fn on_fraction(&mut self, horizon: f64) -> f64 {
        assert!(horizon > 0.0);
        self.extend_past(horizon);
        let mut on_time = 0.0;
        let mut prev = 0.0;
        let mut state = self.initial_on;
        for &s in &self.switches {
            let end = s.min(horizon);
            if end > prev {
                if state {
                    on_time += end - prev;
                }
                prev = end;
            }
            if s >= horizon {
                break;
            }
            state = !state;
        }
        if prev < horizon && state {
            on_time += horizon - prev;
        }
        on_time / horizon
    }
}

/// Which channel a mobile host can currently use to reach the fixed network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    /// Direct base-station coverage.
    Standard,
    /// Relay through a neighboring host.
    Adhoc,
}

/// The two availability processes of one mobile host.
pub struct HostLinks {
    pub standard: LinkProcess,
    pub adhoc: LinkProcess,
}

/// Round-robin assignment of mobile hosts to ad-hoc support groups.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupConfig {
    levels: Vec<f64>,
}

impl GroupConfig {
    pub fn new(levels: Vec<f64>) -> Self {
        assert!(
            !levels.is_empty() && levels.len() <= 3,
            "between one and three ad-hoc groups are supported"
        );
        assert!(
            levels.iter().all(|l| (0.0..=1.0).contains(l)),
            "ad-hoc support levels must be fractions"
        );
        GroupConfig { levels }
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn group_of(&self, mh: usize) -> usize {
        mh % self.levels.len()
    }

    pub fn level_for(&self, mh: usize) -> f64 {
        self.levels[self.group_of(mh)]
    }
}

/// Registry of per-host link processes plus the ad-hoc enable flag.
pub struct Connectivity {
    hosts: Vec<HostLinks>,
    adhoc_enabled: bool,
}

impl Connectivity {
    /// Builds the standard and ad-hoc processes for `n_hosts` mobile hosts.
    /// Standard availability is `1 - disconnection_rate` for every host;
    /// ad-hoc availability comes from the host's group level.
    pub fn build(
        n_hosts: usize,
        disconnection_rate: f64,
        groups: &GroupConfig,
        standard_mean_off: f64,
        adhoc_mean_off: f64,
        adhoc_enabled: bool,
        factory: &StreamFactory,
    ) -> Self {
        let hosts = (0..n_hosts)
            .map(|i| HostLinks {
                standard: LinkProcess::renewal(
                    1.0 - disconnection_rate,
                    standard_mean_off,
                    factory.stream(&format!("links/standard/{i}")),
                ),
                adhoc: LinkProcess::renewal(
                    groups.level_for(i),
                    adhoc_mean_off,
                    factory.stream(&format!("links/adhoc/{i}")),
                ),
            })
            .collect();
        Connectivity {
            hosts,
            adhoc_enabled,
        }
    }

    /// Wraps explicitly constructed links (scripted traces in tests and the
    /// oracle harness).
    pub fn from_links(hosts: Vec<HostLinks>, adhoc_enabled: bool) -> Self {
        Connectivity {
            hosts,
            adhoc_enabled,
        }
    }

    pub fn n_hosts(&self) -> usize {
        self.hosts.len()
    }

    pub fn adhoc_enabled(&self) -> bool {
        self.adhoc_enabled
    }

    fn host(&mut self, mh: usize) -> &mut HostLinks {
        assert!(mh < self.hosts.len(), "unknown mobile host {mh}");
        &mut self.hosts[mh]
    }

    pub fn is_standard_up(&mut self, mh: usize, t: SimTime) -> bool {
        self.host(mh).standard.is_up(t.seconds())
    }

    /// Ad-hoc channel state; always false when ad-hoc support is disabled.
    pub fn is_adhoc_up(&mut self, mh: usize, t: SimTime) -> bool {
        if !self.adhoc_enabled {
            return false;
        }
        self.host(mh).adhoc.is_up(t.seconds())
    }

    /// The channel the host would use at `t`: the standard link whenever it
    /// is up, the ad-hoc relay only as a fallback, otherwise none.
    pub fn effective_channel(&mut self, mh: usize, t: SimTime) -> Option<Channel> {
        if self.is_standard_up(mh, t) {
            Some(Channel::Standard)
        } else if self.is_adhoc_up(mh, t) {
            Some(Channel::Adhoc)
        } else {
            None
        }
    }

    /// Earliest `t' >= t` with a usable channel, or `None` if no channel
    /// ever becomes available.
    pub fn next_channel_available(&mut self, mh: usize, t: SimTime) -> Option<SimTime> {
        let adhoc_enabled = self.adhoc_enabled;
        let host = self.host(mh);
        let std_next = host.standard.next_up(t.seconds());
        let adhoc_next = if adhoc_enabled {
            host.adhoc.next_up(t.seconds())
        } else {
            None
        };
        match (std_next, adhoc_next) {
            (Some(a), Some(b)) => Some(SimTime::new(a.min(b))),
            (Some(a), None) => Some(SimTime::new(a)),
            (None, Some(b)) => Some(SimTime::new(b)),
            (None, None) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamFactory;

    fn stream(seed: u64) -> crate::rng::RngStream {
        StreamFactory::new(seed).stream("links/test")
    }

    #[test]
    fn availability_one_is_always_up() {
        let mut p = LinkProcess::renewal(1.0, 4.0, stream(1));
        for t in [0.0, 17.3, 9999.0] {
            assert!(p.is_up(t));
            assert_eq!(p.next_up(t), Some(t));
        }
    }

    #[test]
    fn availability_zero_is_never_up() {
        let mut p = LinkProcess::renewal(0.0, 4.0, stream(2));
        for t in [0.0, 17.3, 9999.0] {
            assert!(!p.is_up(t));
            assert_eq!(p.next_up(t), None);
        }
    }

    #[test]
    fn long_run_on_fraction_matches_availability() {
        let mut p = LinkProcess::renewal(0.6, 4.0, stream(3));
        let frac = p.on_fraction(1_000_000.0);
        assert!((frac - 0.6).abs() < 0.01, "on fraction {frac}");
    }

    #[test]
    fn sampled_up_fraction_at_ninety_five_percent_disconnection() {
        let mut p = LinkProcess::renewal(0.05, 4.0, stream(4));
        let n = 100_000;
        let up = (0..n).filter(|i| p.is_up(*i as f64 * 10.0)).count();
        let frac = up as f64 / n as f64;
        assert!((frac - 0.05).abs() < 0.01, "sampled up fraction {frac}");
    }

    #[test]
    fn is_up_is_pure_per_instant() {
        let mut p = LinkProcess::renewal(0.5, 4.0, stream(5));
        for i in 0..100 {
            let t = i as f64 * 3.7;
            assert_eq!(p.is_up(t), p.is_up(t));
        }
    }

    #[test]
    fn out_of_order_queries_yield_the_same_schedule() {
        let mut fwd = LinkProcess::renewal(0.5, 4.0, stream(6));
        let mut rev = LinkProcess::renewal(0.5, 4.0, stream(6));
        let times: Vec<f64> = (0..200).map(|i| i as f64 * 5.3).collect();
        let forward: Vec<bool> = times.iter().map(|&t| fwd.is_up(t)).collect();
        let backward: Vec<bool> = times.iter().rev().map(|&t| rev.is_up(t)).collect();
        let backward_reversed: Vec<bool> = backward.into_iter().rev().collect();
        assert_eq!(forward, backward_reversed);
    }

    #[test]
    fn next_up_reads_the_generated_interval_schedule() {
        // Scripted: on [0,10), off [10,14), on from 14.
        let mut p = LinkProcess::scripted(true, vec![10.0, 14.0]);
        assert!(p.is_up(3.0));
        assert_eq!(p.next_up(3.0), Some(3.0));
        assert!(!p.is_up(11.0));
        assert_eq!(p.next_up(11.0), Some(14.0));
        assert!(p.is_up(14.0));
    }

    #[test]
    fn scripted_trailing_off_state_never_recovers() {
        let mut p = LinkProcess::scripted(true, vec![5.0]);
        assert_eq!(p.next_up(6.0), None);
    }

    #[test]
    fn next_up_lands_on_an_on_instant() {
        let mut p = LinkProcess::renewal(0.3, 2.0, stream(7));
        let mut t = 0.0;
        for _ in 0..100 {
            if !p.is_up(t) {
                let up = p.next_up(t).unwrap();
                assert!(up >= t);
                assert!(p.is_up(up));
                t = up;
            }
            t += 1.7;
        }
    }

    #[test]
    fn standard_and_adhoc_processes_are_independent() {
        let factory = StreamFactory::new(11);
        let groups = GroupConfig::new(vec![0.5]);
        let mut conn = Connectivity::build(1, 0.5, &groups, 4.0, 4.0, true, &factory);
        let n = 100_000;
        let (mut std_up, mut adhoc_up, mut both) = (0usize, 0usize, 0usize);
        for i in 0..n {
            let t = SimTime::new(i as f64 * 2.1);
            let s = conn.is_standard_up(0, t);
            let a = conn.is_adhoc_up(0, t);
            std_up += s as usize;
            adhoc_up += a as usize;
            both += (s && a) as usize;
        }
        let (ps, pa, pb) = (
            std_up as f64 / n as f64,
            adhoc_up as f64 / n as f64,
            both as f64 / n as f64,
        );
        let corr = pb - ps * pa;
        assert!(corr.abs() < 0.01, "empirical correlation {corr}");
    }

    #[test]
    fn adhoc_disabled_is_always_down() {
        let factory = StreamFactory::new(12);
        let groups = GroupConfig::new(vec![0.9]);
        let mut conn = Connectivity::build(2, 0.5, &groups, 4.0, 4.0, false, &factory);
        for i in 0..100 {
            assert!(!conn.is_adhoc_up(0, SimTime::new(i as f64)));
        }
    }

    #[test]
    fn standard_takes_precedence_over_adhoc() {
        let hosts = vec![HostLinks {
            standard: LinkProcess::always(true),
            adhoc: LinkProcess::always(true),
        }];
        let mut conn = Connectivity::from_links(hosts, true);
        assert_eq!(
            conn.effective_channel(0, SimTime::ZERO),
            Some(Channel::Standard)
        );
    }

    #[test]
    fn adhoc_is_used_when_standard_is_down() {
        let hosts = vec![HostLinks {
            standard: LinkProcess::always(false),
            adhoc: LinkProcess::always(true),
        }];
        let mut conn = Connectivity::from_links(hosts, true);
        assert_eq!(
            conn.effective_channel(0, SimTime::ZERO),
            Some(Channel::Adhoc)
        );
    }

    #[test]
    fn no_channel_when_both_down() {
        let hosts = vec![HostLinks {
            standard: LinkProcess::always(false),
            adhoc: LinkProcess::always(false),
        }];
        let mut conn = Connectivity::from_links(hosts, true);
        assert_eq!(conn.effective_channel(0, SimTime::ZERO), None);
        assert_eq!(conn.next_channel_available(0, SimTime::ZERO), None);
    }

    #[test]
    fn next_channel_available_is_now_when_up() {
        let hosts = vec![HostLinks {
            standard: LinkProcess::always(true),
            adhoc: LinkProcess::always(false),
        }];
        let mut conn = Connectivity::from_links(hosts, true);
        let t = SimTime::new(12.5);
        assert_eq!(conn.next_channel_available(0, t), Some(t));
    }

    #[test]
    fn next_channel_available_reads_standard_schedule_when_adhoc_disabled() {
        let hosts = vec![HostLinks {
            standard: LinkProcess::scripted(true, vec![10.0, 14.0]),
            adhoc: LinkProcess::always(true),
        }];
        let mut conn = Connectivity::from_links(hosts, false);
        assert_eq!(
            conn.next_channel_available(0, SimTime::new(11.0)),
            Some(SimTime::new(14.0))
        );
    }

    #[test]
    fn round_robin_groups_differ_by_at_most_one() {
        let groups = GroupConfig::new(vec![0.1, 0.2, 0.3]);
        let mut counts = [0usize; 3];
        for mh in 0..20 {
            counts[groups.group_of(mh)] += 1;
        }
        let max = counts.iter().max().unwrap();
        let min = counts.iter().min().unwrap();
        assert!(max - min <= 1);
    }

    #[test]
    #[should_panic(expected = "unknown mobile host")]
    fn unknown_host_is_rejected() {
        let mut conn = Connectivity::from_links(Vec::new(), false);
        conn.is_standard_up(0, SimTime::ZERO);
    }
}
