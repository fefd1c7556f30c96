use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cft_sim::config::ScenarioConfig;
use cft_sim::oracle;
use cft_sim::scenario::run_once;
use cft_sim::sweep::{self, Figure, SweepRow, SweepSpec};
use cft_sim::trace;

/// Deterministic simulator of connection fault-tolerant commit processing
/// for mobile distributed transactions.
#[derive(Parser)]
#[command(name = "cft-sim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single scenario from a config file.
    Run {
        /// Path to a `key = value` scenario config.
        #[arg(long)]
        config: PathBuf,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: $CFT_SIM_OUT or ./out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write a per-event trace file per replication.
        #[arg(long)]
        trace: bool,
    },
    /// Sweep an experiment family and emit results plus plot data.
    Sweep {
        /// Family: f3 | f4 | f5 | f6 | f7 | f9 | all.
        #[arg(long)]
        figure: String,
        /// Replications (seeds) per grid point.
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        /// Base seed; replications use seed..seed+K-1.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output directory (default: $CFT_SIM_OUT or ./out).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the small-instance brute-force equivalence suite.
    Oracle {
        /// Case name, or `all`.
        #[arg(long, default_value = "all")]
        case: String,
    },
}

const EXIT_CONFIG: u8 = 2;
const EXIT_INVARIANT: u8 = 3;

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("CFT_SIM_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            seed,
            out,
            trace,
        } => cmd_run(&config, seed, out_dir(out), trace),
        Command::Sweep {
            figure,
            seeds,
            seed,
            out,
        } => cmd_sweep(&figure, seeds, seed, out_dir(out)),
        Command::Oracle { case } => cmd_oracle(&case),
    }
}

fn cmd_run(config: &PathBuf, seed: Option<u64>, outdir: PathBuf, want_trace: bool) -> ExitCode {
    let (mut cfg, warnings) = match ScenarioConfig::parse_file(config) {
        Ok(parsed) => parsed,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    for w in warnings {
        eprintln!("warning: {w}");
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Err(e) = std::fs::create_dir_all(&outdir) {
        eprintln!("cannot create output directory {}: {e}", outdir.display());
        return ExitCode::from(EXIT_CONFIG);
    }

    let mut rows: Vec<SweepRow> = Vec::new();
    for k in 0..cfg.replications as u64 {
        let run_seed = cfg.seed + k;
        let handle = want_trace.then(trace::buffer);
        let run_trace = handle.clone();
        let cfg_ref = &cfg;
        let result = panic::catch_unwind(AssertUnwindSafe(move || {
            run_once(cfg_ref, run_seed, run_trace)
        }));
        let output = match result {
            Ok(output) => output,
            Err(payload) => {
                report_invariant_violation(payload);
                if let Some(handle) = &handle {
                    let path = outdir.join(format!("trace_{run_seed}.txt"));
                    if std::fs::write(&path, trace::render(handle)).is_ok() {
                        eprintln!("trace dumped to {}", path.display());
                    }
                }
                return ExitCode::from(EXIT_INVARIANT);
            }
        };
        if let Some(handle) = &handle {
            let path = outdir.join(format!("trace_{run_seed}.txt"));
            if let Err(e) = std::fs::write(&path, trace::render(handle)) {
                eprintln!("cannot write trace {}: {e}", path.display());
            }
        }
        let stats = output.ledger.stats(run_seed);
        println!(
            "seed {run_seed}: generated {} committed {} aborted {} commit_rate {}",
            stats.generated,
            stats.committed,
            stats.aborted,
            stats
                .commit_rate
                .map(|r| format!("{r:.4}"))
                .unwrap_or_else(|| "-".into()),
        );
        rows.push(SweepRow {
            figure: "custom",
            variant: cfg.variant,
            seed: run_seed,
            disconnection_rate: cfg.disconnection_rate,
            adhoc_levels: cfg.adhoc_levels_label(),
            write_fraction: cfg.write_fraction,
            conn_timeout: cfg.conn_timeout,
            exec_timeout: cfg.exec_timeout,
            stats,
        });
    }
    match sweep::emit_outputs(&mut rows, &[], &outdir) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("cannot write outputs: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn cmd_sweep(figure: &str, seeds: u64, base_seed: u64, outdir: PathBuf) -> ExitCode {
    let Some(figures) = Figure::parse(figure) else {
        eprintln!("config error: unknown figure `{figure}` (expected f3|f4|f5|f6|f7|f9|all)");
        return ExitCode::from(EXIT_CONFIG);
    };
    if seeds == 0 {
        eprintln!("config error: --seeds must be at least 1");
        return ExitCode::from(EXIT_CONFIG);
    }
    let result = panic::catch_unwind(AssertUnwindSafe(|| {
        let mut rows = Vec::new();
        for &fig in &figures {
            rows.extend(sweep::run_sweep(SweepSpec {
                figure: fig,
                base_seed,
                seeds,
            }));
            eprintln!("swept {}", fig.tag());
        }
        rows
    }));
    let mut rows = match result {
        Ok(rows) => rows,
        Err(payload) => {
            report_invariant_violation(payload);
            return ExitCode::from(EXIT_INVARIANT);
        }
    };
    match sweep::emit_outputs(&mut rows, &figures, &outdir) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("cannot write outputs: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn cmd_oracle(case: &str) -> ExitCode {
    let selected = if case == "all" {
        oracle::cases()
    } else {
        match oracle::find_case(case) {
            Some(c) => vec![c],
            None => {
                let names: Vec<String> = oracle::cases().into_iter().map(|c| c.name).collect();
                eprintln!(
                    "config error: unknown oracle case `{case}` (available: {}, all)",
                    names.join(", ")
                );
                return ExitCode::from(EXIT_CONFIG);
            }
        }
    };
    let mut all_agree = true;
    for c in &selected {
        let result = oracle::run_case(c);
        let status = if result.agree() { "PASS" } else { "FAIL" };
        println!(
            "{status} {:<20} simulator={:?} enumerator={:?} interleavings={}",
            result.case.name, result.simulator, result.enumerated, result.interleavings
        );
        all_agree &= result.agree();
    }
    if all_agree {
        ExitCode::SUCCESS
    } else {
        eprintln!("oracle disagreement: simulator and enumerator diverged");
        ExitCode::from(EXIT_INVARIANT)
    }
}

fn report_invariant_violation(payload: Box<dyn std::any::Any + Send>) {
    let msg = payload
        .downcast_ref::<String>()
        .map(String::as_str)
        .or_else(|| payload.downcast_ref::<&str>().copied())
        .unwrap_or("unknown panic");
    eprintln!("internal invariant violation: {msg}");
}
