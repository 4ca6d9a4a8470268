//! TCP front end: sessions, request dispatch, clock ticking and topic fan-out.

use std::collections::BTreeMap;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicU8, Ordering};
use std::sync::mpsc::{sync_channel, Receiver, SyncSender, TrySendError};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use parking_lot::{Mutex, RwLock};
use simsync_protocol::*;

use crate::world::{World, DEFAULT_STEP_NS};

#[derive(Debug, Clone)]
pub struct ServerConfig {
    /// Address to listen on; port 0 picks a free port.
    pub bind: SocketAddr,
    /// Free-running ticks per second; 0 keeps the clock paused.
    pub rate: f64,
    /// State topics are published every this many ticks.
    pub publish_every: u64,
    /// Outgoing lines buffered per session before topic messages start being dropped.
    pub session_queue: usize,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            bind: SocketAddr::from(([127, 0, 0, 1], default_port())),
            rate: 0.0,
            publish_every: 10,
            session_queue: 16_384,
        }
    }
}

impl ServerConfig {
    /// Loopback on an ephemeral port, paused clock.
    pub fn ephemeral() -> Self {
        ServerConfig {
            bind: SocketAddr::from(([127, 0, 0, 1], 0)),
            ..ServerConfig::default()
        }
    }
}

type Line = Arc<[u8]>;

struct Session {
    id: u64,
    topics: AtomicU8,
    tx: SyncSender<Line>,
    dropped: AtomicU64,
    stream: TcpStream,
}

impl Session {
    fn wants(&self, topic: Topic) -> bool {
        self.topics.load(Ordering::Acquire) & topic_bit(topic) != 0
    }
}

fn topic_bit(t: Topic) -> u8 {
    1 << (t as u8)
}

/// Per-session counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionStats {
    pub id: u64,
    pub dropped_topic_messages: u64,
}

struct Shared {
    world: RwLock<World>,
    /// Ticks since start; drives the state-topic cadence.
    ticks: AtomicU64,
    publish_every: u64,
    sessions: Mutex<Vec<Arc<Session>>>,
    next_session: AtomicU64,
    op_counts: Vec<AtomicU64>,
    shutdown: AtomicBool,
    session_queue: usize,
}

impl Shared {
    fn sessions_wanting(&self, topic: Topic) -> Vec<Arc<Session>> {
        self.sessions
            .lock()
            .iter()
            .filter(|s| s.wants(topic))
            .cloned()
            .collect()
    }

    fn publish(&self, sessions: &[Arc<Session>], line: &Line) {
        for s in sessions {
            match s.tx.try_send(Arc::clone(line)) {
                Ok(()) => {}
                Err(TrySendError::Full(_)) => {
                    s.dropped.fetch_add(1, Ordering::Relaxed);
                }
                Err(TrySendError::Disconnected(_)) => {}
            }
        }
    }

    /// Steps the world `n` times under one write lock, publishing as it goes.
    fn advance(&self, n: u64) -> u64 {
        let mut world = self.world.write();
        let clock_subs = self.sessions_wanting(Topic::Clock);
        let model_subs = self.sessions_wanting(Topic::ModelStates);
        let link_subs = self.sessions_wanting(Topic::LinkStates);
        let visual_subs = self.sessions_wanting(Topic::VisualStates);
        for _ in 0..n {
            let t = world.tick();
            let tick = self.ticks.fetch_add(1, Ordering::Relaxed) + 1;
            if !clock_subs.is_empty() {
                let m = Message::Topic(TopicMessage::Clock(ClockBody { sim_time_ns: t }));
                self.publish_encoded(&clock_subs, &m);
            }
            if tick % self.publish_every == 0 {
                if !model_subs.is_empty() {
                    let m = Message::Topic(TopicMessage::ModelStates(TopicStates {
                        sim_time_ns: t,
                        states: world.models().cloned().collect(),
                    }));
                    self.publish_encoded(&model_subs, &m);
                }
                if !link_subs.is_empty() {
                    let m = Message::Topic(TopicMessage::LinkStates(TopicStates {
                        sim_time_ns: t,
                        states: world.links().cloned().collect(),
                    }));
                    self.publish_encoded(&link_subs, &m);
                }
                if !visual_subs.is_empty() {
                    let m = Message::Topic(TopicMessage::VisualStates(TopicStates {
                        sim_time_ns: t,
                        states: world.visuals().cloned().collect(),
                    }));
                    self.publish_encoded(&visual_subs, &m);
                }
            }
        }
        world.sim_time_ns()
    }

    fn publish_encoded(&self, sessions: &[Arc<Session>], m: &Message) {
        match m.encode() {
            Ok(bytes) => self.publish(sessions, &Line::from(bytes)),
            Err(e) => log::error!("cannot encode topic message: {e}"),
        }
    }

    fn count(&self, op: &str) {
        if let Some(i) = OPERATIONS.iter().position(|o| *o == op) {
            self.op_counts[i].fetch_add(1, Ordering::Relaxed);
        }
    }

    fn handle(&self, session: &Session, id: u64, request: Request) -> Vec<u8> {
        self.count(request.op());
        let encoded = match request {
            Request::GetModelStates(q) => {
                let results = self.world.read().get_model_states(&q.names);
                Response::encode_ok(id, &GetResults { results })
            }
            Request::SetModelStates(b) => {
                let statuses = self.world.write().set_model_states(&b.states);
                Response::encode_ok(id, &StatusList { statuses })
            }
            Request::GetModelState(q) => match self.world.read().get_model_state(&q.name) {
                Ok(state) => Response::encode_ok(id, &StateBody { state }),
                Err(e) => return error_line(id, e),
            },
            Request::SetModelState(b) => {
                let status = self.world.write().set_model_state(&b.state);
                Response::encode_ok(id, &StatusBody { status })
            }
            Request::GetLinkStates(q) => {
                let results = self.world.read().get_link_states(&q);
                Response::encode_ok(id, &GetResults { results })
            }
            Request::SetLinkStates(b) => {
                let statuses = self.world.write().set_link_states(&b.states);
                Response::encode_ok(id, &StatusList { statuses })
            }
            Request::GetVisualStates(q) => {
                let results = self.world.read().get_visual_states(&q);
                Response::encode_ok(id, &GetResults { results })
            }
            Request::SetVisualStates(b) => {
                let statuses = self.world.write().set_visual_states(&b.states);
                Response::encode_ok(id, &StatusList { statuses })
            }
            Request::GetLightStates(q) => {
                let results = self.world.read().get_light_states(&q.names);
                Response::encode_ok(id, &GetResults { results })
            }
            Request::SetLightStates(b) => {
                let statuses = self.world.write().set_light_states(&b.states);
                Response::encode_ok(id, &StatusList { statuses })
            }
            Request::SpawnModel(s) => {
                match self
                    .world
                    .write()
                    .spawn(&s.name, &s.model_xml, s.initial_pose)
                {
                    Ok(()) => Response::encode_ok(id, &EmptyBody {}),
                    Err(e) => return error_line(id, e),
                }
            }
            Request::DeleteModel(q) => match self.world.write().delete(&q.name) {
                Ok(()) => Response::encode_ok(id, &EmptyBody {}),
                Err(e) => return error_line(id, e),
            },
            Request::Subscribe(s) => {
                let mask = s.topics.iter().fold(0u8, |m, t| m | topic_bit(*t));
                session.topics.store(mask, Ordering::Release);
                Response::encode_ok(id, &EmptyBody {})
            }
            Request::AdvanceClock(a) => {
                let sim_time_ns = self.advance(a.ticks);
                Response::encode_ok(id, &ClockBody { sim_time_ns })
            }
        };
        encoded.unwrap_or_else(|e| {
            error_line(id, ErrorReply::new(ErrorCode::Internal, e.to_string()))
        })
    }
}

fn error_line(id: u64, reply: ErrorReply) -> Vec<u8> {
    Message::Response(Response::error(id, reply))
        .encode()
        .expect("error replies always encode")
}

/// A running world server. Dropping it shuts the server down.
pub struct Server {
    addr: SocketAddr,
    shared: Arc<Shared>,
    acceptor: Option<JoinHandle<()>>,
    timer: Option<JoinHandle<()>>,
}

impl Server {
    pub fn start(config: ServerConfig, world: World) -> io::Result<Server> {
        if config.publish_every == 0 {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                "publish_every must be at least 1",
            ));
        }
        if !(config.rate >= 0.0 && config.rate.is_finite()) {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                "rate must be finite and non-negative",
            ));
        }
        let listener = TcpListener::bind(config.bind)?;
        let addr = listener.local_addr()?;
        let shared = Arc::new(Shared {
            world: RwLock::new(world),
            ticks: AtomicU64::new(0),
            publish_every: config.publish_every,
            sessions: Mutex::new(Vec::new()),
            next_session: AtomicU64::new(1),
            op_counts: OPERATIONS.iter().map(|_| AtomicU64::new(0)).collect(),
            shutdown: AtomicBool::new(false),
            session_queue: config.session_queue.max(1),
        });
        let acceptor = {
            let shared = Arc::clone(&shared);
            std::thread::Builder::new()
                .name("simsync-accept".into())
                .spawn(move || accept_loop(listener, shared))?
        };
        let timer = if config.rate > 0.0 {
            let shared = Arc::clone(&shared);
            let period = Duration::from_secs_f64(1.0 / config.rate);
            Some(
                std::thread::Builder::new()
                    .name("simsync-clock".into())
                    .spawn(move || timer_loop(shared, period))?,
            )
        } else {
            None
        };
        log::info!("world server listening on {addr}");
        Ok(Server {
            addr,
            shared,
            acceptor: Some(acceptor),
            timer,
        })
    }

    /// Paused server with default settings and an empty world, on an ephemeral loopback port.
    pub fn start_local() -> io::Result<Server> {
        Server::start(ServerConfig::ephemeral(), World::new(DEFAULT_STEP_NS))
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Runs `f` against a consistent snapshot of the world.
    pub fn with_world<R>(&self, f: impl FnOnce(&World) -> R) -> R {
        f(&self.shared.world.read())
    }

    /// Mutates the world directly, as one atomic step.
    pub fn with_world_mut<R>(&self, f: impl FnOnce(&mut World) -> R) -> R {
        f(&mut self.shared.world.write())
    }

    /// Steps the clock in-process, exactly as an `advance_clock` request would.
    pub fn advance(&self, ticks: u64) -> u64 {
        self.shared.advance(ticks)
    }

    /// Requests served so far, per operation name.
    pub fn request_counts(&self) -> BTreeMap<&'static str, u64> {
        OPERATIONS
            .iter()
            .zip(&self.shared.op_counts)
            .map(|(op, c)| (*op, c.load(Ordering::Relaxed)))
            .collect()
    }

    pub fn total_requests(&self) -> u64 {
        self.shared
            .op_counts
            .iter()
            .map(|c| c.load(Ordering::Relaxed))
            .sum()
    }

    pub fn session_stats(&self) -> Vec<SessionStats> {
        self.shared
            .sessions
            .lock()
            .iter()
            .map(|s| SessionStats {
                id: s.id,
                dropped_topic_messages: s.dropped.load(Ordering::Relaxed),
            })
            .collect()
    }

    pub fn session_count(&self) -> usize {
        self.shared.sessions.lock().len()
    }

    pub fn shutdown(&mut self) {
        if self.shared.shutdown.swap(true, Ordering::SeqCst) {
            return;
        }
        // Wake the blocking accept.
        let _ = TcpStream::connect(self.addr);
        if let Some(a) = self.acceptor.take() {
            let _ = a.join();
        }
        if let Some(t) = self.timer.take() {
            let _ = t.join();
        }
        for s in self.shared.sessions.lock().drain(..) {
            let _ = s.stream.shutdown(Shutdown::Both);
        }
    }

    /// Blocks until the server is shut down from another thread or the acceptor fails.
    pub fn wait(mut self) {
        if let Some(a) = self.acceptor.take() {
            let _ = a.join();
        }
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        self.shutdown();
    }
}

fn accept_loop(listener: TcpListener, shared: Arc<Shared>) {
    for stream in listener.incoming() {
        if shared.shutdown.load(Ordering::SeqCst) {
            break;
        }
        match stream {
            Ok(stream) => {
                if let Err(e) = open_session(stream, &shared) {
                    log::warn!("cannot start session: {e}");
                }
            }
            Err(e) => log::warn!("accept failed: {e}"),
        }
    }
}

fn open_session(stream: TcpStream, shared: &Arc<Shared>) -> io::Result<()> {
    stream.set_nodelay(true)?;
    let (tx, rx) = sync_channel::<Line>(shared.session_queue);
    let session = Arc::new(Session {
        id: shared.next_session.fetch_add(1, Ordering::Relaxed),
        topics: AtomicU8::new(0),
        tx,
        dropped: AtomicU64::new(0),
        stream: stream.try_clone()?,
    });
    let write_half = stream.try_clone()?;
    std::thread::Builder::new()
        .name(format!("simsync-write-{}", session.id))
        .spawn(move || write_loop(write_half, rx))?;
    shared.sessions.lock().push(Arc::clone(&session));
    let shared = Arc::clone(shared);
    std::thread::Builder::new()
        .name(format!("simsync-read-{}", session.id))
        .spawn(move || {
            read_loop(stream, &shared, &session);
            shared.sessions.lock().retain(|s| s.id != session.id);
        })?;
    Ok(())
}

fn write_loop(stream: TcpStream, rx: Receiver<Line>) {
    let mut out = BufWriter::new(stream);
    while let Ok(line) = rx.recv() {
        if out.write_all(&line).is_err() {
            return;
        }
        // Batch whatever else is already queued before flushing.
        while let Ok(more) = rx.try_recv() {
            if out.write_all(&more).is_err() {
                return;
            }
        }
        if out.flush().is_err() {
            return;
        }
    }
}

fn read_loop(stream: TcpStream, shared: &Shared, session: &Session) {
    let mut reader = BufReader::new(stream);
    let mut line = Vec::with_capacity(4096);
    loop {
        line.clear();
        match reader.read_until(b'\n', &mut line) {
            Ok(0) | Err(_) => break,
            Ok(_) => {}
        }
        if line.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        let reply = match Message::decode(&line) {
            Ok(Message::Request(env)) => shared.handle(session, env.id, env.request),
            Ok(other) => {
                log::debug!("session {}: ignoring non-request message {other:?}", session.id);
                continue;
            }
            Err(e) => error_line(
                e.request_id.unwrap_or(0),
                ErrorReply::new(e.code(), e.to_string()),
            ),
        };
        if session.tx.send(Line::from(reply)).is_err() {
            break;
        }
    }
}

fn timer_loop(shared: Arc<Shared>, period: Duration) {
    let mut next = Instant::now() + period;
    while !shared.shutdown.load(Ordering::SeqCst) {
        let now = Instant::now();
        if now < next {
            std::thread::sleep((next - now).min(Duration::from_millis(50)));
            continue;
        }
        shared.advance(1);
        next += period;
        // Falling far behind: skip ahead instead of bursting.
        if Instant::now() > next + period * 100 {
            next = Instant::now() + period;
        }
    }
}
