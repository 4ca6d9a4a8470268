//! Times one full scene synchronization (get every object's state, set every object's pose)
//! against a world server, in two modes:
//!
//! * [`Mode::Batched`]: one `get_model_states` and one `set_model_states` request.
//! * [`Mode::Single`]: `N` `get_model_state` and `N` `set_model_state` round trips.
//!
//! Requests are issued sequentially from one thread.

mod proxy;
mod report;

pub use proxy::CountingProxy;
pub use report::{emit_report, read_report, render_table};

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use simsync_core::Vector3;
use simsync_protocol::model_xml::ModelXmlDocument;
use simsync_protocol::{Client, ClientError, EntryStatus, ModelState};

pub const DEFAULT_ITERATIONS: usize = 500;
pub const DEFAULT_WARMUP: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Mode {
    Batched,
    Single,
}

impl Mode {
    pub fn requests_per_iteration(self, n: usize) -> usize {
        match self {
            Mode::Batched => 2,
            Mode::Single => 2 * n,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Batched => "BATCHED",
            Mode::Single => "SINGLE",
        })
    }
}

impl FromStr for Mode {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "batched" => Ok(Mode::Batched),
            "single" => Ok(Mode::Single),
            _ => Err(BenchError::Config(format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("server rejected {name}: {status:?}")]
    Rejected { name: String, status: EntryStatus },
    #[error("invalid benchmark configuration: {0}")]
    Config(String),
    #[error("no results to report")]
    Empty,
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub mode: Mode,
    pub object_counts: Vec<usize>,
    /// Timed iterations per object count.
    pub iterations: usize,
    /// Untimed iterations run first.
    pub warmup: usize,
    pub addr: String,
    /// Open a new connection for every request.
    pub reconnect_per_request: bool,
}

impl BenchConfig {
    /// Defaults: counts 10, 20, ..., 100; 500 iterations; 50 warm-up iterations.
    pub fn new(mode: Mode, addr: impl Into<String>) -> Self {
        BenchConfig {
            mode,
            object_counts: (1..=10).map(|i| i * 10).collect(),
            iterations: DEFAULT_ITERATIONS,
            warmup: DEFAULT_WARMUP,
            addr: addr.into(),
            reconnect_per_request: false,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.object_counts.is_empty() || self.object_counts.contains(&0) {
            return Err(BenchError::Config("object counts must be non-empty and at least 1".into()));
        }
        if self.iterations == 0 {
            return Err(BenchError::Config("iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Parses `10..100:10` (inclusive range with step) or a comma list such as `10,20,50`.
pub fn parse_counts(text: &str) -> Result<Vec<usize>, BenchError> {
    let bad = || BenchError::Config(format!("cannot parse object counts {text:?}"));
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    let counts = if let Some((range, step)) = text.split_once(':') {
        let (lo, hi) = range.split_once("..").ok_or_else(bad)?;
        let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
        if step == 0 || lo > hi {
            return Err(bad());
        }
        (lo..=hi).step_by(step).collect()
    } else {
        text.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if counts.is_empty() || counts.contains(&0) {
        return Err(bad());
    }
    Ok(counts)
}

/// Timing statistics for one (mode, N) pair, in microseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub mode: Mode,
    pub n_objects: usize,
    pub iterations: usize,
    pub mean_us: f64,
    /// Population standard deviation.
    pub std_us: f64,
    pub min_us: f64,
    pub max_us: f64,
}

impl BenchResult {
    pub fn from_samples(mode: Mode, n_objects: usize, samples_us: &[f64]) -> Self {
        let n = samples_us.len() as f64;
        let mean = samples_us.iter().sum::<f64>() / n;
        let var = samples_us.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        BenchResult {
            mode,
            n_objects,
            iterations: samples_us.len(),
            mean_us: mean,
            std_us: var.sqrt(),
            min_us: samples_us.iter().cloned().fold(f64::INFINITY, f64::min),
            max_us: samples_us.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Results of a run. `aborted` is set when the run stopped early; `results` then holds the
/// object counts that completed.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub results: Vec<BenchResult>,
    pub aborted: Option<String>,
}

pub fn object_name(i: usize) -> String {
    format!("bench_obj_{i:04}")
}

enum Connection {
    Persistent(Client),
    PerRequest,
}

/// `N` objects on a server plus the connection used to synchronize them.
pub struct SyncWorkload {
    mode: Mode,
    addr: String,
    names: Vec<String>,
    conn: Connection,
    iteration: u64,
}

impl SyncWorkload {
    /// Spawns whichever of the `n` benchmark objects are missing.
    pub fn prepare(addr: &str, mode: Mode, n: usize, reconnect_per_request: bool) -> Result<Self, BenchError> {
        let setup = Client::connect(addr)?;
        let names: Vec<String> = (0..n).map(object_name).collect();
        let xml = ModelXmlDocument::single_box("bench_obj", Vector3::new(0.1, 0.1, 0.1)).to_xml();
        for (i, entry) in setup.get_model_states(&names)?.into_iter().enumerate() {
            if entry.status == EntryStatus::NotFound {
                let pose = simsync_core::Pose::from_position(Vector3::new(i as f64, 0.0, 0.05));
                setup.spawn_model(&names[i], &xml, pose)?;
            }
        }
        drop(setup);
        let conn = if reconnect_per_request {
            Connection::PerRequest
        } else {
            Connection::Persistent(Client::connect(addr)?)
        };
        Ok(SyncWorkload {
            mode,
            addr: addr.to_string(),
            names,
            conn,
            iteration: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    fn with_client<T>(&self, f: impl FnOnce(&Client) -> Result<T, ClientError>) -> Result<T, BenchError> {
        match &self.conn {
            Connection::Persistent(c) => Ok(f(c)?),
            Connection::PerRequest => {
                let c = Client::connect(self.addr.as_str())?;
                Ok(f(&c)?)
            }
        }
    }

    fn nudge(&self, state: &mut ModelState) {
        state.pose.position.z = 0.05 + 1e-4 * (self.iteration % 100) as f64;
    }

    /// One full synchronization. Returns the elapsed wall time.
    pub fn iterate(&mut self) -> Result<Duration, BenchError> {
        self.iteration += 1;
        let start = Instant::now();
        match self.mode {
            Mode::Batched => {
                let entries = self.with_client(|c| c.get_model_states(&self.names))?;
                let mut states = Vec::with_capacity(entries.len());
                for (name, e) in self.names.iter().zip(entries) {
                    match e.state {
                        Some(s) if e.status == EntryStatus::Ok => states.push(s),
                        _ => {
                            return Err(BenchError::Rejected {
                                name: name.clone(),
                                status: e.status,
                            })
                        }
                    }
                }
                states.iter_mut().for_each(|s| self.nudge(s));
                let statuses = self.with_client(|c| c.set_model_states(&states))?;
                if let Some((i, s)) = statuses.iter().enumerate().find(|(_, s)| **s != EntryStatus::Ok) {
                    return Err(BenchError::Rejected {
                        name: self.names[i].clone(),
                        status: *s,
                    });
                }
            }
            Mode::Single => {
                let mut states = Vec::with_capacity(self.names.len());
                for name in &self.names {
                    states.push(self.with_client(|c| c.get_model_state(name))?);
                }
                for s in &mut states {
                    self.nudge(s);
                    let status = self.with_client(|c| c.set_model_state(s))?;
                    if status != EntryStatus::Ok {
                        return Err(BenchError::Rejected {
                            name: s.name.clone(),
                            status,
                        });
                    }
                }
            }
        }
        Ok(start.elapsed())
    }
}

/// Runs every configured object count in order. A failure mid-run stops the run and is
/// reported in [`BenchReport::aborted`]; configuration errors are returned directly.
pub fn run_sync_benchmark(cfg: &BenchConfig) -> Result<BenchReport, BenchError> {
    cfg.validate()?;
    let mut report = BenchReport {
        results: Vec::new(),
        aborted: None,
    };
    for &n in &cfg.object_counts {
        match measure(cfg, n) {
            Ok(r) => {
                log::info!("{} N={} mean {:.1} us", r.mode, n, r.mean_us);
                report.results.push(r);
            }
            Err(e) => {
                report.aborted = Some(format!("{} N={n}: {e}", cfg.mode));
                break;
            }
        }
    }
    Ok(report)
}

fn measure(cfg: &BenchConfig, n: usize) -> Result<BenchResult, BenchError> {
    let mut w = SyncWorkload::prepare(&cfg.addr, cfg.mode, n, cfg.reconnect_per_request)?;
    for _ in 0..cfg.warmup {
        w.iterate()?;
    }
    let mut samples = Vec::with_capacity(cfg.iterations);
    for _ in 0..cfg.iterations {
        samples.push(w.iterate()?.as_secs_f64() * 1e6);
    }
    Ok(BenchResult::from_samples(cfg.mode, n, &samples))
}

/// Least-squares slope of mean time against object count, per mode.
pub fn slope_us_per_object(results: &[BenchResult], mode: Mode) -> Option<f64> {
    let pts: Vec<(f64, f64)> = results
        .iter()
        .filter(|r| r.mode == mode)
        .map(|r| (r.n_objects as f64, r.mean_us))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Largest over smallest mean time across object counts, per mode.
pub fn spread_ratio(results: &[BenchResult], mode: Mode) -> Option<f64> {
    let means: Vec<f64> = results.iter().filter(|r| r.mode == mode).map(|r| r.mean_us).collect();
    if means.is_empty() {
        return None;
    }
    let max = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = means.iter().cloned().fold(f64::INFINITY, f64::min);
    Some(max / min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_parse() {
        assert_eq!(parse_counts("10..100:10").unwrap(), (1..=10).map(|i| i * 10).collect::<Vec<_>>());
        assert_eq!(parse_counts("5,7, 9").unwrap(), vec![5, 7, 9]);
        assert_eq!(parse_counts("1..4:2").unwrap(), vec![1, 3]);
        for bad in ["", "0", "10..5:1", "1..5:0", "x"] {
            assert!(parse_counts(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn stats_are_ordered() {
        let r = BenchResult::from_samples(Mode::Batched, 3, &[1.0, 2.0, 3.0, 6.0]);
        assert_eq!(r.mean_us, 3.0);
        assert!((r.std_us - 3.5f64.sqrt()).abs() < 1e-12);
        assert!(r.min_us <= r.mean_us && r.mean_us <= r.max_us);
    }

    #[test]
    fn slope_and_spread() {
        let mk = |n, m| BenchResult::from_samples(Mode::Single, n, &[m]);
        let rs = vec![mk(10, 25.0), mk(20, 45.0), mk(30, 65.0)];
        assert!((slope_us_per_object(&rs, Mode::Single).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(spread_ratio(&rs, Mode::Single).unwrap(), 2.6);
        assert!(slope_us_per_object(&rs, Mode::Batched).is_none());
    }

    #[test]
    fn mode_parse_and_display() {
        assert_eq!("batched".parse::<Mode>().unwrap(), Mode::Batched);
        assert_eq!("SINGLE".parse::<Mode>().unwrap(), Mode::Single);
        assert_eq!(Mode::Single.to_string(), "SINGLE");
        assert_eq!(Mode::Single.requests_per_iteration(10), 20);
    }
}
