use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use simsync_bench::{emit_report, parse_counts, render_table, run_sync_benchmark, BenchConfig, Mode};
use simsync_server::Server;

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Batched,
    Single,
    Both,
}

/// Times batched versus per-object scene synchronization.
#[derive(Parser)]
struct Args {
    #[arg(long, value_enum, default_value = "both")]
    mode: ModeArg,
    /// `lo..hi:step` or a comma list.
    #[arg(long, default_value = "10..100:10")]
    counts: String,
    #[arg(long, default_value_t = simsync_bench::DEFAULT_ITERATIONS)]
    iterations: usize,
    #[arg(long, default_value_t = simsync_bench::DEFAULT_WARMUP)]
    warmup: usize,
    /// World server to benchmark. Without it a server is started in-process.
    #[arg(long, env = "SIMSYNC_ADDR")]
    addr: Option<String>,
    /// CSV output path. Without it only the table is printed.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    reconnect_per_request: bool,
}

fn main() -> ExitCode {
    env_logger_init();
    let args = Args::parse();
    let counts = match parse_counts(&args.counts) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let _server;
    let addr = match args.addr {
        Some(a) => a,
        None => match Server::start_local() {
            Ok(s) => {
                let a = s.local_addr().to_string();
                _server = s;
                a
            }
            Err(e) => {
                eprintln!("error: cannot start a local server: {e}");
                return ExitCode::from(2);
            }
        },
    };
    let modes = match args.mode {
        ModeArg::Batched => vec![Mode::Batched],
        ModeArg::Single => vec![Mode::Single],
        ModeArg::Both => vec![Mode::Batched, Mode::Single],
    };
    let started = Instant::now();
    let mut results = Vec::new();
    let mut aborted = None;
    for mode in modes {
        let cfg = BenchConfig {
            mode,
            object_counts: counts.clone(),
            iterations: args.iterations,
            warmup: args.warmup,
            addr: addr.clone(),
            reconnect_per_request: args.reconnect_per_request,
        };
        match run_sync_benchmark(&cfg) {
            Ok(report) => {
                results.extend(report.results);
                if report.aborted.is_some() {
                    aborted = report.aborted;
                    break;
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        }
    }
    let written = match &args.out {
        Some(path) if !results.is_empty() => emit_report(&results, path).map(|_| ()),
        _ => {
            print!("{}", render_table(&results));
            Ok(())
        }
    };
    eprintln!("finished in {:.1} s", started.elapsed().as_secs_f64());
    if let Some(reason) = aborted {
        eprintln!("aborted, partial results: {reason}");
        return ExitCode::from(2);
    }
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}

fn env_logger_init() {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
}
