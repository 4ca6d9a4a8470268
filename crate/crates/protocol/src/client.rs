//! Blocking TCP client with a background reader that demultiplexes responses and topics.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::{Shutdown, SocketAddr, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{sync_channel, RecvTimeoutError, SyncSender};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use parking_lot::Mutex;
use serde::de::DeserializeOwned;
use simsync_core::Pose;

use crate::message::*;
use crate::pending::{Completion, PendingTable};
use crate::records::*;
use crate::EncodeError;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(5);

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("cannot connect to {addr}: {source}")]
    Connect {
        addr: String,
        source: std::io::Error,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error("request {0} timed out")]
    Timeout(u64),
    #[error("connection closed")]
    Disconnected,
    #[error("{0}")]
    Server(ErrorReply),
    #[error("unexpected response body: {0}")]
    Body(serde_json::Error),
}

impl ClientError {
    /// The server's error code, if this is an error reply.
    pub fn code(&self) -> Option<ErrorCode> {
        match self {
            ClientError::Server(r) => Some(r.code),
            _ => None,
        }
    }
}

impl From<ResponseError> for ClientError {
    fn from(e: ResponseError) -> Self {
        match e {
            ResponseError::Server(r) => ClientError::Server(r),
            ResponseError::Body(e) => ClientError::Body(e),
        }
    }
}

pub type TopicHandler = Arc<dyn Fn(&TopicMessage) + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubscriptionId(u64);

#[derive(Default)]
struct Handlers {
    next: u64,
    by_id: BTreeMap<u64, (Topic, TopicHandler)>,
}

impl Handlers {
    fn topics(&self) -> BTreeSet<Topic> {
        self.by_id.values().map(|(t, _)| *t).collect()
    }
}

struct Shared {
    writer: Mutex<BufWriter<TcpStream>>,
    pending: Mutex<PendingTable<SyncSender<Response>>>,
    handlers: Mutex<Handlers>,
    /// Serializes subscription changes so the server-side set matches `handlers`.
    subscribe_lock: Mutex<()>,
    requests_sent: AtomicU64,
    closed: AtomicBool,
}

/// One session to a world server.
///
/// Calls block until the matching response arrives or the timeout elapses. Several threads may
/// share a client; ids stay strictly increasing on the wire because allocation and write happen
/// under one lock. Topic handlers run on the reader thread and must not block.
pub struct Client {
    shared: Arc<Shared>,
    stream: TcpStream,
    peer: SocketAddr,
    reader: Option<JoinHandle<()>>,
    timeout: Duration,
}

impl Client {
    pub fn connect(addr: impl ToSocketAddrs + std::fmt::Debug) -> Result<Client, ClientError> {
        let label = format!("{addr:?}");
        let stream = TcpStream::connect(&addr).map_err(|source| ClientError::Connect {
            addr: label.trim_matches('"').to_string(),
            source,
        })?;
        Client::from_stream(stream)
    }

    pub fn from_stream(stream: TcpStream) -> Result<Client, ClientError> {
        stream.set_nodelay(true)?;
        let peer = stream.peer_addr()?;
        let read_half = stream.try_clone()?;
        let shared = Arc::new(Shared {
            writer: Mutex::new(BufWriter::new(stream.try_clone()?)),
            pending: Mutex::new(PendingTable::new()),
            handlers: Mutex::new(Handlers::default()),
            subscribe_lock: Mutex::new(()),
            requests_sent: AtomicU64::new(0),
            closed: AtomicBool::new(false),
        });
        let reader_shared = Arc::clone(&shared);
        let reader = std::thread::Builder::new()
            .name("simsync-client-reader".into())
            .spawn(move || read_loop(read_half, reader_shared))?;
        Ok(Client {
            shared,
            stream,
            peer,
            reader: Some(reader),
            timeout: DEFAULT_TIMEOUT,
        })
    }

    pub fn peer_addr(&self) -> SocketAddr {
        self.peer
    }

    pub fn set_timeout(&mut self, timeout: Duration) {
        self.timeout = timeout;
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    /// Number of request lines written on this session.
    pub fn requests_sent(&self) -> u64 {
        self.shared.requests_sent.load(Ordering::Relaxed)
    }

    pub fn is_closed(&self) -> bool {
        self.shared.closed.load(Ordering::Acquire)
    }

    /// Sends one request and waits for its response, success or error reply alike.
    pub fn request(&self, request: Request) -> Result<Response, ClientError> {
        if self.is_closed() {
            return Err(ClientError::Disconnected);
        }
        let (tx, rx) = sync_channel(1);
        let id = {
            let mut writer = self.shared.writer.lock();
            let id = self.shared.pending.lock().issue(tx);
            let line = Message::Request(Envelope::new(id, request)).encode();
            let written = match line {
                Ok(line) => writer
                    .write_all(&line)
                    .and_then(|_| writer.flush())
                    .map_err(ClientError::Io),
                Err(e) => Err(ClientError::Encode(e)),
            };
            if let Err(e) = written {
                self.shared.pending.lock().cancel(id);
                return Err(e);
            }
            self.shared.requests_sent.fetch_add(1, Ordering::Relaxed);
            id
        };
        match rx.recv_timeout(self.timeout) {
            Ok(r) => Ok(r),
            Err(RecvTimeoutError::Timeout) => {
                self.shared.pending.lock().cancel(id);
                Err(ClientError::Timeout(id))
            }
            Err(RecvTimeoutError::Disconnected) => Err(ClientError::Disconnected),
        }
    }

    /// Sends a request and decodes the success body.
    pub fn call<T: DeserializeOwned>(&self, request: Request) -> Result<T, ClientError> {
        Ok(self.request(request)?.into_body()?)
    }

    pub fn get_model_states<S: AsRef<str>>(
        &self,
        names: &[S],
    ) -> Result<Vec<GetEntry<ModelState>>, ClientError> {
        let names = names.iter().map(|n| n.as_ref().to_string()).collect();
        let r: GetResults<ModelState> = self.call(Request::GetModelStates(NamesQuery { names }))?;
        Ok(r.results)
    }

    pub fn set_model_states(&self, states: &[ModelState]) -> Result<Vec<EntryStatus>, ClientError> {
        let r: StatusList = self.call(Request::SetModelStates(StatesBody {
            states: states.to_vec(),
        }))?;
        Ok(r.statuses)
    }

    /// Legacy one-model read. A missing model is a `NOT_FOUND` error reply.
    pub fn get_model_state(&self, name: &str) -> Result<ModelState, ClientError> {
        let r: StateBody<ModelState> = self.call(Request::GetModelState(NameQuery {
            name: name.to_string(),
        }))?;
        Ok(r.state)
    }

    /// Legacy one-model write.
    pub fn set_model_state(&self, state: &ModelState) -> Result<EntryStatus, ClientError> {
        let r: StatusBody = self.call(Request::SetModelState(StateBody {
            state: state.clone(),
        }))?;
        Ok(r.status)
    }

    pub fn get_link_states(&self, query: LinkQuery) -> Result<Vec<GetEntry<LinkState>>, ClientError> {
        let r: GetResults<LinkState> = self.call(Request::GetLinkStates(query))?;
        Ok(r.results)
    }

    pub fn set_link_states(&self, states: &[LinkState]) -> Result<Vec<EntryStatus>, ClientError> {
        let r: StatusList = self.call(Request::SetLinkStates(StatesBody {
            states: states.to_vec(),
        }))?;
        Ok(r.statuses)
    }

    pub fn get_visual_states(
        &self,
        query: VisualQuery,
    ) -> Result<Vec<GetEntry<VisualState>>, ClientError> {
        let r: GetResults<VisualState> = self.call(Request::GetVisualStates(query))?;
        Ok(r.results)
    }

    pub fn set_visual_states(&self, states: &[VisualState]) -> Result<Vec<EntryStatus>, ClientError> {
        let r: StatusList = self.call(Request::SetVisualStates(StatesBody {
            states: states.to_vec(),
        }))?;
        Ok(r.statuses)
    }

    pub fn get_light_states<S: AsRef<str>>(
        &self,
        names: &[S],
    ) -> Result<Vec<GetEntry<LightState>>, ClientError> {
        let names = names.iter().map(|n| n.as_ref().to_string()).collect();
        let r: GetResults<LightState> = self.call(Request::GetLightStates(NamesQuery { names }))?;
        Ok(r.results)
    }

    pub fn set_light_states(&self, states: &[LightState]) -> Result<Vec<EntryStatus>, ClientError> {
        let r: StatusList = self.call(Request::SetLightStates(StatesBody {
            states: states.to_vec(),
        }))?;
        Ok(r.statuses)
    }

    pub fn spawn_model(&self, name: &str, model_xml: &str, initial_pose: Pose) -> Result<(), ClientError> {
        let _: EmptyBody = self.call(Request::SpawnModel(SpawnRequest {
            name: name.to_string(),
            model_xml: model_xml.to_string(),
            initial_pose,
        }))?;
        Ok(())
    }

    pub fn delete_model(&self, name: &str) -> Result<(), ClientError> {
        let _: EmptyBody = self.call(Request::DeleteModel(NameQuery {
            name: name.to_string(),
        }))?;
        Ok(())
    }

    /// Steps a paused server `ticks` times and returns the new simulation time.
    pub fn advance_clock(&self, ticks: u64) -> Result<u64, ClientError> {
        let r: ClockBody = self.call(Request::AdvanceClock(AdvanceClockRequest { ticks }))?;
        Ok(r.sim_time_ns)
    }

    /// Registers `handler` for `topic`. The server subscription is updated only when the set
    /// of topics with at least one handler changes.
    pub fn subscribe<F>(&self, topic: Topic, handler: F) -> Result<SubscriptionId, ClientError>
    where
        F: Fn(&TopicMessage) + Send + Sync + 'static,
    {
        let _guard = self.shared.subscribe_lock.lock();
        let (id, before, after) = {
            let mut h = self.shared.handlers.lock();
            let before = h.topics();
            h.next += 1;
            let id = h.next;
            h.by_id.insert(id, (topic, Arc::new(handler)));
            (id, before, h.topics())
        };
        if before != after {
            if let Err(e) = self.send_subscription(&after) {
                self.shared.handlers.lock().by_id.remove(&id);
                return Err(e);
            }
        }
        Ok(SubscriptionId(id))
    }

    /// Removes a handler. Returns false if it was not registered.
    pub fn unsubscribe(&self, id: SubscriptionId) -> Result<bool, ClientError> {
        let _guard = self.shared.subscribe_lock.lock();
        let (before, after) = {
            let mut h = self.shared.handlers.lock();
            let before = h.topics();
            if h.by_id.remove(&id.0).is_none() {
                return Ok(false);
            }
            (before, h.topics())
        };
        if before != after {
            self.send_subscription(&after)?;
        }
        Ok(true)
    }

    fn send_subscription(&self, topics: &BTreeSet<Topic>) -> Result<(), ClientError> {
        let _: EmptyBody = self.call(Request::Subscribe(SubscribeRequest {
            topics: topics.iter().copied().collect(),
        }))?;
        Ok(())
    }

    /// Closes the connection. Outstanding calls fail with [`ClientError::Disconnected`].
    pub fn close(&mut self) {
        self.shared.closed.store(true, Ordering::Release);
        let _ = self.stream.shutdown(Shutdown::Both);
        if let Some(reader) = self.reader.take() {
            let _ = reader.join();
        }
    }
}

impl Drop for Client {
    fn drop(&mut self) {
        self.close();
    }
}

fn read_loop(stream: TcpStream, shared: Arc<Shared>) {
    let mut reader = BufReader::new(stream);
    let mut line = Vec::with_capacity(4096);
    loop {
        line.clear();
        match reader.read_until(b'\n', &mut line) {
            Ok(0) => break,
            Ok(_) => {}
            Err(e) => {
                if !shared.closed.load(Ordering::Acquire) {
                    log::warn!("client read failed: {e}");
                }
                break;
            }
        }
        match Message::decode(&line) {
            Ok(Message::Response(r)) => {
                let waiter = shared.pending.lock().complete(r.id);
                if let Completion::Completed(tx) = waiter {
                    let _ = tx.send(r);
                }
            }
            Ok(Message::Topic(t)) => {
                let topic = t.topic();
                let handlers: Vec<TopicHandler> = shared
                    .handlers
                    .lock()
                    .by_id
                    .values()
                    .filter(|(tp, _)| *tp == topic)
                    .map(|(_, h)| Arc::clone(h))
                    .collect();
                for h in handlers {
                    h(&t);
                }
            }
            Ok(Message::Request(e)) => {
                log::warn!("server sent a request (id {}); ignored", e.id);
            }
            Err(e) => log::warn!("undecodable line from server dropped: {e}"),
        }
    }
    shared.closed.store(true, Ordering::Release);
    // Dropping the senders wakes every blocked caller with Disconnected.
    shared.pending.lock().drain();
}
