use std::net::TcpListener;
use std::process::Command;
use std::thread;
use std::time::Duration;

use simsync_bench::*;
use simsync_server::Server;

fn closed_port() -> String {
    let l = TcpListener::bind("127.0.0.1:0").unwrap();
    l.local_addr().unwrap().to_string()
}

fn count_requests(mode: Mode, n: usize, reconnect: bool) {
    let server = Server::start_local().unwrap();
    let proxy = CountingProxy::start(server.local_addr()).unwrap();
    let addr = proxy.local_addr().to_string();
    let mut w = SyncWorkload::prepare(&addr, mode, n, reconnect).unwrap();
    // Settles the proxy's accounting of the setup connections.
    w.iterate().unwrap();
    for iterations in 1..=3u64 {
        proxy.reset();
        for _ in 0..iterations {
            w.iterate().unwrap();
        }
        let expected = iterations * mode.requests_per_iteration(n) as u64;
        assert_eq!(proxy.requests(), expected, "{mode} N={n} reconnect={reconnect}");
        if reconnect {
            assert_eq!(proxy.connections(), expected);
        } else {
            assert_eq!(proxy.connections(), 0);
        }
    }
}

#[test]
fn batched_sends_two_requests_per_iteration() {
    for n in [1, 10, 37] {
        count_requests(Mode::Batched, n, false);
    }
    count_requests(Mode::Batched, 12, true);
}

#[test]
fn single_sends_two_requests_per_object() {
    for n in [1, 10, 37] {
        count_requests(Mode::Single, n, false);
    }
    count_requests(Mode::Single, 6, true);
}

#[test]
fn iterations_write_the_server() {
    let server = Server::start_local().unwrap();
    let addr = server.local_addr().to_string();
    let mut w = SyncWorkload::prepare(&addr, Mode::Batched, 4, false).unwrap();
    assert_eq!(server.with_world(|wd| wd.model_count()), 4);
    w.iterate().unwrap();
    let z = server.with_world(|wd| wd.model(&object_name(3)).unwrap().pose.position.z);
    assert!((z - (0.05 + 1e-4)).abs() < 1e-12, "{z}");
    // A second workload over the same objects spawns nothing new.
    SyncWorkload::prepare(&addr, Mode::Single, 6, false).unwrap();
    assert_eq!(server.with_world(|wd| wd.model_count()), 6);
}

#[test]
fn small_run_reports_every_count() {
    let server = Server::start_local().unwrap();
    let mut cfg = BenchConfig::new(Mode::Single, server.local_addr().to_string());
    cfg.object_counts = vec![2, 4, 8];
    cfg.iterations = 20;
    cfg.warmup = 2;
    let report = run_sync_benchmark(&cfg).unwrap();
    assert!(report.aborted.is_none());
    assert_eq!(report.results.iter().map(|r| r.n_objects).collect::<Vec<_>>(), [2, 4, 8]);
    for r in &report.results {
        assert_eq!(r.iterations, 20);
        assert!(r.min_us > 0.0 && r.min_us <= r.mean_us && r.mean_us <= r.max_us);
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    emit_report(&report.results, &path).unwrap();
    assert_eq!(read_report(&path).unwrap(), report.results);
}

#[test]
fn bad_configs_are_rejected() {
    let mut cfg = BenchConfig::new(Mode::Batched, closed_port());
    cfg.iterations = 0;
    assert!(matches!(run_sync_benchmark(&cfg), Err(BenchError::Config(_))));
    cfg.iterations = 1;
    cfg.object_counts = vec![];
    assert!(matches!(run_sync_benchmark(&cfg), Err(BenchError::Config(_))));
}

#[test]
fn closed_port_aborts_with_no_results() {
    let mut cfg = BenchConfig::new(Mode::Batched, closed_port());
    cfg.object_counts = vec![1, 2];
    let report = run_sync_benchmark(&cfg).unwrap();
    assert!(report.results.is_empty());
    assert!(report.aborted.unwrap().contains("N=1"));
}

#[test]
fn server_loss_keeps_partial_results() {
    let mut server = Server::start_local().unwrap();
    let mut cfg = BenchConfig::new(Mode::Batched, server.local_addr().to_string());
    cfg.object_counts = vec![1, 2];
    cfg.iterations = 10_000_000;
    cfg.warmup = 0;
    let run = thread::spawn(move || run_sync_benchmark(&cfg).unwrap());
    thread::sleep(Duration::from_millis(300));
    server.shutdown();
    let report = run.join().unwrap();
    assert!(report.results.is_empty());
    assert!(report.aborted.is_some());

    // With a short first count, that count survives the abort.
    let mut server = Server::start_local().unwrap();
    let mut cfg = BenchConfig::new(Mode::Batched, server.local_addr().to_string());
    cfg.object_counts = vec![1, 2];
    cfg.iterations = 5;
    cfg.warmup = 0;
    let first = run_sync_benchmark(&BenchConfig {
        object_counts: vec![1],
        ..cfg.clone()
    })
    .unwrap();
    assert_eq!(first.results.len(), 1);
    cfg.iterations = 10_000_000;
    cfg.object_counts = vec![2, 3];
    let run = thread::spawn(move || run_sync_benchmark(&cfg).unwrap());
    thread::sleep(Duration::from_millis(300));
    server.shutdown();
    let report = run.join().unwrap();
    assert!(report.aborted.unwrap().contains("N=2"));
}

fn bench() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_bench"));
    c.env_remove("SIMSYNC_ADDR");
    c
}

#[test]
fn cli_writes_csv_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("results.csv");
    let out = bench()
        .args(["--mode", "both", "--counts", "1..3:1", "--iterations", "5", "--warmup", "1", "--out"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_report(&path).unwrap();
    let keys: Vec<_> = rows.iter().map(|r| (r.mode, r.n_objects)).collect();
    let mut expected = Vec::new();
    for mode in [Mode::Batched, Mode::Single] {
        for n in 1..=3 {
            expected.push((mode, n));
        }
    }
    assert_eq!(keys, expected);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.starts_with("mode"));
    assert_eq!(stdout.lines().count(), 7);
}

#[test]
fn cli_against_an_external_server() {
    let server = Server::start_local().unwrap();
    let out = bench()
        .args(["--mode", "batched", "--counts", "4", "--iterations", "3", "--reconnect-per-request"])
        .env("SIMSYNC_ADDR", server.local_addr().to_string())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(server.with_world(|w| w.model_count()), 4);
}

#[test]
fn cli_exit_codes_on_failure() {
    let out = bench().args(["--counts", "2", "--addr", &closed_port()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("aborted"));

    let out = bench().args(["--counts", "0"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = bench()
        .args(["--counts", "1", "--iterations", "1", "--out", "/nonexistent-dir/r.csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
