use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use simsync_core::{Pose, Twist, Vector3};
use simsync_protocol::model_xml::ModelXmlDocument;
use simsync_protocol::*;
use simsync_server::{Server, ServerConfig, World};

fn box_xml() -> String {
    ModelXmlDocument::single_box("box", Vector3::ONE).to_xml()
}

fn started(names: &[&str]) -> (Server, Client) {
    let server = Server::start_local().unwrap();
    let client = Client::connect(server.local_addr()).unwrap();
    for n in names {
        client.spawn_model(n, &box_xml(), Pose::IDENTITY).unwrap();
    }
    (server, client)
}

fn at(x: f64) -> Pose {
    Pose::from_position(Vector3::new(x, 0.0, 0.0))
}

#[test]
fn read_your_writes_over_tcp() {
    let (_server, c) = started(&["agent0", "agent1"]);
    let statuses = c
        .set_model_states(&[
            ModelState::new("agent0", at(1.0), Twist::ZERO),
            ModelState::new("agent1", at(2.0), Twist::ZERO),
        ])
        .unwrap();
    assert_eq!(statuses, vec![EntryStatus::Ok, EntryStatus::Ok]);
    let got = c.get_model_states(&["agent0", "agent1"]).unwrap();
    assert_eq!(got[0].state.as_ref().unwrap().pose, at(1.0));
    assert_eq!(got[1].state.as_ref().unwrap().pose, at(2.0));
    assert_eq!(c.get_model_state("agent1").unwrap().pose, at(2.0));
}

#[test]
fn error_replies() {
    let (_server, c) = started(&["box0"]);
    let e = c.get_model_state("ghost").unwrap_err();
    assert_eq!(e.code(), Some(ErrorCode::NotFound));
    let e = c.spawn_model("box0", &box_xml(), Pose::IDENTITY).unwrap_err();
    assert_eq!(e.code(), Some(ErrorCode::DuplicateName));
    let e = c.spawn_model("box1", "<model>", Pose::IDENTITY).unwrap_err();
    assert_eq!(e.code(), Some(ErrorCode::ParseError));
    c.delete_model("box0").unwrap();
    assert_eq!(c.delete_model("box0").unwrap_err().code(), Some(ErrorCode::NotFound));
}

#[test]
fn malformed_lines_get_protocol_errors() {
    let server = Server::start_local().unwrap();
    let mut s = TcpStream::connect(server.local_addr()).unwrap();
    let mut r = BufReader::new(s.try_clone().unwrap());
    let mut line = String::new();

    s.write_all(b"not json\n").unwrap();
    r.read_line(&mut line).unwrap();
    assert!(line.starts_with("{\"id\":0,\"ok\":false,\"error\":\"PROTOCOL_ERROR: "), "{line}");

    line.clear();
    s.write_all(b"{\"id\":5,\"op\":\"teleport\",\"body\":{}}\n").unwrap();
    r.read_line(&mut line).unwrap();
    assert!(line.starts_with("{\"id\":5,\"ok\":false,\"error\":\"UNSUPPORTED_OP: "), "{line}");

    line.clear();
    s.write_all(b"{\"id\":6,\"op\":\"delete_model\",\"body\":{}}\n").unwrap();
    r.read_line(&mut line).unwrap();
    assert!(line.starts_with("{\"id\":6,\"ok\":false,\"error\":\"PROTOCOL_ERROR: "), "{line}");

    // The session survives bad input.
    line.clear();
    s.write_all(b"{\"id\":7,\"op\":\"get_model_states\",\"body\":{\"names\":[]}}\n").unwrap();
    r.read_line(&mut line).unwrap();
    assert_eq!(line, "{\"id\":7,\"ok\":true,\"body\":{\"results\":[]}}\n");
}

#[test]
fn clock_messages_per_tick() {
    let (_server, c) = started(&[]);
    let (tx, rx) = mpsc::channel();
    c.subscribe(Topic::Clock, move |m| {
        tx.send(m.sim_time_ns()).unwrap();
    })
    .unwrap();
    assert_eq!(c.advance_clock(25).unwrap(), 25_000_000);
    let got: Vec<u64> = (0..25)
        .map(|_| rx.recv_timeout(Duration::from_secs(5)).unwrap())
        .collect();
    let want: Vec<u64> = (1..=25).map(|i| i * 1_000_000).collect();
    assert_eq!(got, want);
    assert!(rx.recv_timeout(Duration::from_millis(100)).is_err());
    assert_eq!(c.advance_clock(0).unwrap(), 25_000_000);
}

#[test]
fn state_topics_follow_publish_cadence() {
    let (_server, c) = started(&["a"]);
    let seen = Arc::new(Mutex::new(Vec::new()));
    let sink = Arc::clone(&seen);
    c.subscribe(Topic::ModelStates, move |m| {
        if let TopicMessage::ModelStates(s) = m {
            sink.lock().unwrap().push((s.sim_time_ns, s.states.len()));
        }
    })
    .unwrap();
    let (tx, rx) = mpsc::channel();
    c.subscribe(Topic::VisualStates, move |m| tx.send(m.clone()).unwrap()).unwrap();
    c.advance_clock(35).unwrap();
    let deadline = Instant::now() + Duration::from_secs(5);
    while seen.lock().unwrap().len() < 3 && Instant::now() < deadline {
        std::thread::sleep(Duration::from_millis(5));
    }
    assert_eq!(
        *seen.lock().unwrap(),
        vec![(10_000_000, 1), (20_000_000, 1), (30_000_000, 1)]
    );
    let v = rx.recv_timeout(Duration::from_secs(5)).unwrap();
    assert_eq!(v.topic(), Topic::VisualStates);
}

#[test]
fn unsubscribe_stops_delivery() {
    let (_server, c) = started(&[]);
    let (tx, rx) = mpsc::channel();
    let id = c.subscribe(Topic::Clock, move |m| tx.send(m.sim_time_ns()).unwrap()).unwrap();
    c.advance_clock(1).unwrap();
    rx.recv_timeout(Duration::from_secs(5)).unwrap();
    assert!(c.unsubscribe(id).unwrap());
    assert!(!c.unsubscribe(id).unwrap());
    c.advance_clock(5).unwrap();
    assert!(rx.recv_timeout(Duration::from_millis(100)).is_err());
}

#[test]
fn batch_atomicity_under_concurrent_reads() {
    let names: Vec<String> = (0..20).map(|i| format!("m{i}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let (server, writer) = started(&refs);
    let stop = Arc::new(AtomicBool::new(false));
    let mut readers = Vec::new();
    for _ in 0..3 {
        let reader = Client::connect(server.local_addr()).unwrap();
        let names = names.clone();
        let stop = Arc::clone(&stop);
        readers.push(std::thread::spawn(move || {
            let mut checks = 0;
            while !stop.load(Ordering::Relaxed) {
                let got = reader.get_model_states(&names).unwrap();
                let xs: Vec<f64> = got
                    .iter()
                    .map(|e| e.state.as_ref().unwrap().pose.position.x)
                    .collect();
                assert!(xs.iter().all(|x| *x == xs[0]), "torn batch: {xs:?}");
                checks += 1;
            }
            checks
        }));
    }
    for k in 1..=300 {
        let batch: Vec<ModelState> = names
            .iter()
            .map(|n| ModelState::new(n.as_str(), at(k as f64), Twist::ZERO))
            .collect();
        writer.set_model_states(&batch).unwrap();
    }
    stop.store(true, Ordering::Relaxed);
    for r in readers {
        assert!(r.join().unwrap() > 0);
    }
}

#[test]
fn independent_sessions() {
    let (server, a) = started(&["x"]);
    let b = Client::connect(server.local_addr()).unwrap();
    a.set_model_state(&ModelState::new("x", at(4.0), Twist::ZERO)).unwrap();
    assert_eq!(b.get_model_state("x").unwrap().pose, at(4.0));
    assert_eq!(a.requests_sent(), 2);
    assert_eq!(b.requests_sent(), 1);
    assert_eq!(server.session_count(), 2);
    let counts = server.request_counts();
    assert_eq!(counts["spawn_model"], 1);
    assert_eq!(counts["get_model_state"], 1);
    assert_eq!(server.total_requests(), 3);
}

#[test]
fn slow_subscriber_drops_instead_of_blocking() {
    let config = ServerConfig {
        session_queue: 4,
        ..ServerConfig::ephemeral()
    };
    let server = Server::start(config, World::default()).unwrap();
    // A raw session that subscribes and then never reads.
    let mut raw = TcpStream::connect(server.local_addr()).unwrap();
    raw.write_all(b"{\"id\":1,\"op\":\"subscribe\",\"body\":{\"topics\":[\"clock\"]}}\n")
        .unwrap();
    let deadline = Instant::now() + Duration::from_secs(5);
    while server.session_count() < 1 && Instant::now() < deadline {
        std::thread::sleep(Duration::from_millis(5));
    }
    std::thread::sleep(Duration::from_millis(50));
    let started = Instant::now();
    // Enough ticks to overflow both the session queue and the socket buffers.
    for _ in 0..20 {
        server.advance(10_000);
    }
    assert!(started.elapsed() < Duration::from_secs(20));
    let dropped: u64 = server
        .session_stats()
        .iter()
        .map(|s| s.dropped_topic_messages)
        .sum();
    assert!(dropped > 0);
    drop(raw);
}

#[test]
fn free_running_clock_ticks() {
    let config = ServerConfig {
        rate: 1000.0,
        ..ServerConfig::ephemeral()
    };
    let server = Server::start(config, World::default()).unwrap();
    let c = Client::connect(server.local_addr()).unwrap();
    let (tx, rx) = mpsc::channel();
    c.subscribe(Topic::Clock, move |m| {
        let _ = tx.send(m.sim_time_ns());
    })
    .unwrap();
    let mut last = 0;
    for _ in 0..20 {
        let t = rx.recv_timeout(Duration::from_secs(5)).unwrap();
        assert!(t > last);
        assert_eq!(t % 1_000_000, 0);
        last = t;
    }
}

#[test]
fn kinematic_motion_visible_over_tcp() {
    let (_server, c) = started(&["mover"]);
    let mut s = c.get_model_state("mover").unwrap();
    s.twist = Twist::new(Vector3::new(1.0, 0.0, 0.0), Vector3::ZERO);
    c.set_model_state(&s).unwrap();
    c.advance_clock(1000).unwrap();
    let p = c.get_model_state("mover").unwrap().pose.position;
    assert!((p.x - 1.0).abs() < 1e-9);
}

#[test]
fn client_reports_disconnect() {
    let (mut server, c) = started(&[]);
    server.shutdown();
    let deadline = Instant::now() + Duration::from_secs(5);
    while !c.is_closed() && Instant::now() < deadline {
        std::thread::sleep(Duration::from_millis(5));
    }
    assert!(matches!(
        c.get_model_states(&["x"]),
        Err(ClientError::Disconnected) | Err(ClientError::Io(_))
    ));
}

#[test]
fn connect_refused_names_address() {
    let server = Server::start_local().unwrap();
    let addr = server.local_addr();
    drop(server);
    match Client::connect(addr) {
        Err(ClientError::Connect { addr: a, .. }) => assert!(a.contains(&addr.port().to_string())),
        Err(e) => panic!("unexpected error {e}"),
        Ok(_) => panic!("connected to a stopped server"),
    }
}
