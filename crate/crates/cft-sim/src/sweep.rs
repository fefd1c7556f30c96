//! Scenario sweeps over the experiment families, and CSV/plot-data
//! emission.
//!
//! Each figure family fixes a parameter grid:
//!
//! * f3/f4/f5 — commit rate vs. disconnection rate, standard-only against
//!   ad-hoc, with one, two, and three ad-hoc support groups.
//! * f6 — commit rate vs. connection timeout per ad-hoc support level,
//!   unlimited execution timeout, all-READ workload.
//! * f7 (plus its presumed-commit companion f8) — commit rate vs.
//!   disconnection rate per WRITE fraction, sparse ad-hoc support.
//! * f9/f10 — the same with dense ad-hoc support.
//!
//! Grid points and seeds execute concurrently as fully isolated simulation
//! instances; row order in the output is deterministic regardless of
//! completion order.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::{trim_float, ScenarioConfig, Variant};
use crate::metrics::ScenarioStats;
use crate::protocol::ExecTimeout;
use crate::scenario::run_once;

/// Disconnection-rate grid shared by the disconnection-axis families.
pub const DISCONNECTION_GRID: [f64; 11] = [
    0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95,
];

/// Connection-timeout grid for the f6 family.
pub const CT_GRID: [f64; 11] = [0.0, 0.4, 0.8, 1.2, 1.6, 2.0, 2.4, 3.0, 3.6, 4.2, 5.0];

/// Ad-hoc support levels plotted as separate curves in the f6 family.
pub const F6_LEVELS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

/// Fixed disconnection rate for the f6 family (the connection-timeout study
/// varies the timeout, not the outage level). At this rate the knee sits
/// just below 2.4 s for every calibrated mean-off value; see the
/// `calibrate` example.
pub const F6_DISCONNECTION: f64 = 0.15;

/// WRITE-fraction curves for the f7/f9 families.
pub const WRITE_FRACTION_GRID: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

/// Two-group support levels for the f4 family.
pub const F4_LEVELS: [f64; 2] = [0.9, 0.3];

/// Three-group sparse support levels (f5 and f7/f8).
pub const SPARSE_LEVELS: [f64; 3] = [0.1, 0.2, 0.3];

/// Three-group dense support levels (f9/f10).
pub const DENSE_LEVELS: [f64; 3] = [0.7, 0.8, 0.9];

/// A figure family tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    F3,
    F4,
    F5,
    F6,
    /// Commit-rate and presumed-commit-rate pair at sparse ad-hoc support.
    F7,
    /// Commit-rate and presumed-commit-rate pair at dense ad-hoc support.
    F9,
}

impl Figure {
    pub fn tag(self) -> &'static str {
        match self {
            Figure::F3 => "f3",
            Figure::F4 => "f4",
            Figure::F5 => "f5",
            Figure::F6 => "f6",
            Figure::F7 => "f7",
            Figure::F9 => "f9",
        }
    }

    pub fn parse(s: &str) -> Option<Vec<Figure>> {
        match s {
            "f3" => Some(vec![Figure::F3]),
            "f4" => Some(vec![Figure::F4]),
            "f5" => Some(vec![Figure::F5]),
            "f6" => Some(vec![Figure::F6]),
            "f7" => Some(vec![Figure::F7]),
            "f9" => Some(vec![Figure::F9]),
            "all" => Some(vec![
                Figure::F3,
                Figure::F4,
                Figure::F5,
                Figure::F6,
                Figure::F7,
                Figure::F9,
            ]),
            _ => None,
        }
    }
}

/// A sweep request: which family, how many seeds per point, base seed.
#[derive(Debug, Clone, Copy)]
pub struct SweepSpec {
    pub figure: Figure,
    pub base_seed: u64,
    pub seeds: u64,
}

/// One output row: a grid point, a seed, and the resulting stats.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub figure: &'static str,
    pub variant: Variant,
    pub seed: u64,
    pub disconnection_rate: f64,
    pub adhoc_levels: String,
    pub write_fraction: f64,
    pub conn_timeout: f64,
    pub exec_timeout: ExecTimeout,
    pub stats: ScenarioStats,
}

fn base_config() -> ScenarioConfig {
    ScenarioConfig::default()
}

/// Enumerates the grid points of a family in deterministic order.
pub fn grid_points(figure: Figure) -> Vec<ScenarioConfig> {
    let mut points = Vec::new();
    match figure {
        Figure::F3 | Figure::F4 | Figure::F5 => {
            let levels: Vec<f64> = match figure {
                Figure::F3 => vec![0.9],
                Figure::F4 => F4_LEVELS.to_vec(),
                _ => SPARSE_LEVELS.to_vec(),
            };
            for &d in &DISCONNECTION_GRID {
                for variant in [Variant::Standard2pc, Variant::AdhocOnly] {
                    points.push(ScenarioConfig {
                        variant,
                        disconnection_rate: d,
                        adhoc_levels: levels.clone(),
                        exec_timeout: ExecTimeout::Bounded(5.0),
                        ..base_config()
                    });
                }
            }
        }
        Figure::F6 => {
            for &ct in &CT_GRID {
                for &level in &F6_LEVELS {
                    points.push(ScenarioConfig {
                        variant: Variant::AdhocDaalg,
                        disconnection_rate: F6_DISCONNECTION,
                        adhoc_levels: vec![level],
                        exec_timeout: ExecTimeout::Unlimited,
                        conn_timeout: ct,
                        write_fraction: 0.0,
                        ..base_config()
                    });
                }
            }
        }
        Figure::F7 | Figure::F9 => {
            let levels: Vec<f64> = if figure == Figure::F7 {
                SPARSE_LEVELS.to_vec()
            } else {
                DENSE_LEVELS.to_vec()
            };
            for &d in &DISCONNECTION_GRID {
                for variant in [Variant::Standard2pc, Variant::AdhocOnly] {
                    points.push(ScenarioConfig {
                        variant,
                        disconnection_rate: d,
                        adhoc_levels: levels.clone(),
                        ..base_config()
                    });
                }
                for &wf in &WRITE_FRACTION_GRID {
                    points.push(ScenarioConfig {
                        variant: Variant::AdhocDaalg,
                        disconnection_rate: d,
                        adhoc_levels: levels.clone(),
                        write_fraction: wf,
                        ..base_config()
                    });
                }
            }
        }
    }
    points
}

/// Runs a sweep: every grid point at `seeds` seeds, concurrently, with
/// deterministic row order (figure, grid point, variant, seed).
pub fn run_sweep(spec: SweepSpec) -> Vec<SweepRow> {
    let points = grid_points(spec.figure);
    let jobs: Vec<(ScenarioConfig, u64)> = points
        .into_iter()
        .flat_map(|cfg| (0..spec.seeds).map(move |k| (cfg.clone(), spec.base_seed + k)))
        .collect();
    jobs.into_par_iter()
        .map(|(cfg, seed)| {
            let stats = run_once(&cfg, seed, None).ledger.stats(seed);
            SweepRow {
                figure: spec.figure.tag(),
                variant: cfg.variant,
                seed,
                disconnection_rate: cfg.disconnection_rate,
                adhoc_levels: cfg.adhoc_levels_label(),
                write_fraction: cfg.write_fraction,
                conn_timeout: cfg.conn_timeout,
                exec_timeout: cfg.exec_timeout,
                stats,
            }
        })
        .collect()
}

fn fmt_opt_rate(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6}")).unwrap_or_default()
}

fn fmt_et(et: ExecTimeout) -> String {
    match et {
        ExecTimeout::Bounded(s) => trim_float(s),
        ExecTimeout::Unlimited => "unlimited".to_string(),
    }
}

pub const RESULTS_HEADER: &str = "figure,variant,seed,disconnection_rate,adhoc_levels,write_fraction,ct,et,generated,committed,aborted,presumed_committed,commit_rate,presumed_commit_rate,presumed_share_of_commits,mean_fh_blocking";

/// Renders the results table. One row per (grid point, variant, seed).
pub fn render_results_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for row in rows {
        let s = &row.stats;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            row.figure,
            row.variant,
            row.seed,
            trim_float(row.disconnection_rate),
            row.adhoc_levels,
            trim_float(row.write_fraction),
            trim_float(row.conn_timeout),
            fmt_et(row.exec_timeout),
            s.generated,
            s.committed,
            s.aborted,
            s.presumed_committed,
            fmt_opt_rate(s.commit_rate),
            fmt_opt_rate(s.presumed_commit_rate),
            fmt_opt_rate(s.presumed_share_of_commits),
            fmt_opt_rate(s.mean_fh_blocking),
        ));
    }
    out
}

/// Orders rows by (figure, grid point, variant, seed).
pub fn sort_rows(rows: &mut [SweepRow]) {
    rows.sort_by(|a, b| {
        a.figure
            .cmp(b.figure)
            .then(a.disconnection_rate.total_cmp(&b.disconnection_rate))
            .then(a.conn_timeout.total_cmp(&b.conn_timeout))
            .then(a.write_fraction.total_cmp(&b.write_fraction))
            .then(a.adhoc_levels.cmp(&b.adhoc_levels))
            .then(a.variant.name().cmp(b.variant.name()))
            .then(a.seed.cmp(&b.seed))
    });
}

struct Series {
    name: String,
    /// x value -> (sum, count) of the plotted rate.
    points: Vec<(f64, f64, usize)>,
}

impl Series {
    fn add(&mut self, x: f64, y: Option<f64>) {
        let Some(y) = y else { return };
        match self.points.iter_mut().find(|(px, ..)| *px == x) {
            Some((_, sum, n)) => {
                *sum += y;
                *n += 1;
            }
            None => self.points.push((x, y, 1)),
        }
    }

    fn mean_at(&self, x: f64) -> Option<f64> {
        self.points
            .iter()
            .find(|(px, ..)| *px == x)
            .map(|(_, sum, n)| sum / *n as f64)
    }
}

fn render_plot(xs: &[f64], x_name: &str, series: &[Series]) -> String {
    let mut out = String::from(x_name);
    for s in series {
        out.push(',');
        out.push_str(&s.name);
    }
    out.push('\n');
    for &x in xs {
        out.push_str(&trim_float(x));
        for s in series {
            out.push(',');
            if let Some(m) = s.mean_at(x) {
                out.push_str(&format!("{m:.6}"));
            }
        }
        out.push('\n');
    }
    out
}

fn dedup_sorted(mut xs: Vec<f64>) -> Vec<f64> {
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

/// Plot-data files for one figure family: the x axis first, one column per
/// curve (seed-averaged).
pub fn render_plot_files(figure: Figure, rows: &[SweepRow]) -> Vec<(String, String)> {
    let rows: Vec<&SweepRow> = rows.iter().filter(|r| r.figure == figure.tag()).collect();
    let mut files = Vec::new();
    match figure {
        Figure::F3 | Figure::F4 | Figure::F5 => {
            let xs = dedup_sorted(rows.iter().map(|r| r.disconnection_rate).collect());
            let mut series = vec![
                Series {
                    name: "standard2pc".into(),
                    points: vec![],
                },
                Series {
                    name: "adhoc_only".into(),
                    points: vec![],
                },
            ];
            for r in &rows {
                let idx = if r.variant == Variant::Standard2pc { 0 } else { 1 };
                series[idx].add(r.disconnection_rate, r.stats.commit_rate);
            }
            files.push((
                format!("plot_{}.csv", figure.tag()),
                render_plot(&xs, "disconnection_rate", &series),
            ));
        }
        Figure::F6 => {
            let xs = dedup_sorted(rows.iter().map(|r| r.conn_timeout).collect());
            let levels = {
                let mut l: Vec<String> = rows.iter().map(|r| r.adhoc_levels.clone()).collect();
                l.sort();
                l.dedup();
                l
            };
            let mut series: Vec<Series> = levels
                .iter()
                .map(|l| Series {
                    name: format!("support_{l}"),
                    points: vec![],
                })
                .collect();
            for r in &rows {
                let idx = levels.iter().position(|l| *l == r.adhoc_levels).unwrap();
                series[idx].add(r.conn_timeout, r.stats.commit_rate);
            }
            files.push((
                "plot_f6.csv".to_string(),
                render_plot(&xs, "ct", &series),
            ));
        }
        Figure::F7 | Figure::F9 => {
            let xs = dedup_sorted(rows.iter().map(|r| r.disconnection_rate).collect());
            let mut commit_series = vec![
                Series {
                    name: "standard2pc".into(),
                    points: vec![],
                },
                Series {
                    name: "adhoc_only".into(),
                    points: vec![],
                },
            ];
            let mut presumed_series: Vec<Series> = Vec::new();
            for &wf in &WRITE_FRACTION_GRID {
                commit_series.push(Series {
                    name: format!("daalg_wf_{}", trim_float(wf * 100.0)),
                    points: vec![],
                });
                presumed_series.push(Series {
                    name: format!("daalg_wf_{}", trim_float(wf * 100.0)),
                    points: vec![],
                });
            }
            for r in &rows {
                match r.variant {
                    Variant::Standard2pc => {
                        commit_series[0].add(r.disconnection_rate, r.stats.commit_rate)
                    }
                    Variant::AdhocOnly => {
                        commit_series[1].add(r.disconnection_rate, r.stats.commit_rate)
                    }
                    Variant::AdhocDaalg => {
                        let pos = WRITE_FRACTION_GRID
                            .iter()
                            .position(|&wf| wf == r.write_fraction)
                            .expect("daalg row off the write-fraction grid");
                        commit_series[2 + pos].add(r.disconnection_rate, r.stats.commit_rate);
                        presumed_series[pos]
                            .add(r.disconnection_rate, r.stats.presumed_commit_rate);
                    }
                }
            }
            let (commit_name, presumed_name) = if figure == Figure::F7 {
                ("plot_f7.csv", "plot_f8.csv")
            } else {
                ("plot_f9.csv", "plot_f10.csv")
            };
            files.push((
                commit_name.to_string(),
                render_plot(&xs, "disconnection_rate", &commit_series),
            ));
            files.push((
                presumed_name.to_string(),
                render_plot(&xs, "disconnection_rate", &presumed_series),
            ));
        }
    }
    files
}

/// Writes `results.csv` plus one plot-data file per figure family present
/// in `rows`. Returns the written paths.
pub fn emit_outputs(
    rows: &mut Vec<SweepRow>,
    figures: &[Figure],
    outdir: &Path,
) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(outdir)?;
    sort_rows(rows);
    let mut written = Vec::new();
    let results = outdir.join("results.csv");
    fs::File::create(&results)?.write_all(render_results_csv(rows).as_bytes())?;
    written.push(results);
    for &figure in figures {
        for (name, content) in render_plot_files(figure, rows) {
            let path = outdir.join(name);
            fs::File::create(&path)?.write_all(content.as_bytes())?;
            written.push(path);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_header_has_sixteen_columns() {
        assert_eq!(RESULTS_HEADER.split(',').count(), 16);
    }

    #[test]
    fn rows_render_with_sixteen_columns() {
        let cfg = ScenarioConfig {
            horizon: 300.0,
            ..ScenarioConfig::default()
        };
        let stats = run_once(&cfg, 1, None).ledger.stats(1);
        let row = SweepRow {
            figure: "f3",
            variant: Variant::AdhocDaalg,
            seed: 1,
            disconnection_rate: 0.5,
            adhoc_levels: "10|20|30".to_string(),
            write_fraction: 0.5,
            conn_timeout: 2.4,
            exec_timeout: ExecTimeout::Bounded(5.0),
            stats,
        };
        let csv = render_results_csv(&[row]);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap().split(',').count(), 16);
        let data = lines.next().unwrap();
        assert_eq!(data.split(',').count(), 16);
        assert!(data.contains("10|20|30"));
    }

    #[test]
    fn f3_grid_covers_disconnection_range_for_both_variants() {
        let points = grid_points(Figure::F3);
        assert_eq!(points.len(), DISCONNECTION_GRID.len() * 2);
        assert!(points
            .iter()
            .all(|p| p.adhoc_levels == vec![0.9] && !p.variant.daalg_enabled()));
    }

    #[test]
    fn f6_grid_is_all_read_with_unlimited_timeout() {
        let points = grid_points(Figure::F6);
        assert_eq!(points.len(), CT_GRID.len() * F6_LEVELS.len());
        assert!(points.iter().all(|p| {
            p.write_fraction == 0.0
                && p.exec_timeout == ExecTimeout::Unlimited
                && p.variant == Variant::AdhocDaalg
        }));
    }

    #[test]
    fn sort_is_figure_then_grid_then_variant_then_seed() {
        let stats = ScenarioStats {
            seed: 0,
            generated: 0,
            committed: 0,
            aborted: 0,
            presumed_committed: 0,
            commit_rate: None,
            presumed_commit_rate: None,
            presumed_share_of_commits: None,
            mean_fh_blocking: None,
        };
        let mk = |disc: f64, variant: Variant, seed: u64| SweepRow {
            figure: "f3",
            variant,
            seed,
            disconnection_rate: disc,
            adhoc_levels: "90".into(),
            write_fraction: 0.5,
            conn_timeout: 2.4,
            exec_timeout: ExecTimeout::Bounded(5.0),
            stats: stats.clone(),
        };
        let mut rows = vec![
            mk(0.2, Variant::Standard2pc, 2),
            mk(0.1, Variant::AdhocOnly, 1),
            mk(0.1, Variant::AdhocOnly, 0),
            mk(0.1, Variant::Standard2pc, 0),
        ];
        sort_rows(&mut rows);
        assert_eq!(rows[0].disconnection_rate, 0.1);
        assert_eq!(rows[0].variant, Variant::AdhocOnly);
        assert_eq!(rows[0].seed, 0);
        assert_eq!(rows[1].seed, 1);
        assert_eq!(rows[2].variant, Variant::Standard2pc);
        assert_eq!(rows[3].disconnection_rate, 0.2);
    }
}
