//! Message framing: requests, responses and topic publications.
//!
//! Every message is one JSON object on one LF-terminated UTF-8 line:
//!
//! ```text
//! {"id":1,"op":"get_model_states","body":{"names":["agent0"]}}
//! {"id":1,"ok":true,"body":{"results":[...]}}
//! {"id":2,"ok":false,"error":"NOT_FOUND: model 'ghost' does not exist"}
//! {"topic":"clock","body":{"sim_time_ns":42000000}}
//! ```

use std::borrow::Cow;
use std::fmt;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use simsync_core::Pose;

use crate::records::*;
use crate::{DecodeError, DecodeErrorKind, EncodeError, ValidationError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamesQuery {
    pub names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NameQuery {
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatesBody<T> {
    pub states: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateBody<T> {
    pub state: T,
}

/// Explicit keys, plus every link of the listed models (appended after the keyed results).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LinkQuery {
    pub keys: Vec<LinkKey>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub models: Vec<String>,
}

/// Explicit keys, plus every visual of the listed models (appended after the keyed results).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VisualQuery {
    pub keys: Vec<VisualKey>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub models: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpawnRequest {
    pub name: String,
    pub model_xml: String,
    pub initial_pose: Pose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubscribeRequest {
    pub topics: Vec<Topic>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvanceClockRequest {
    pub ticks: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GetResults<T> {
    pub results: Vec<GetEntry<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatusList {
    pub statuses: Vec<EntryStatus>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatusBody {
    pub status: EntryStatus,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EmptyBody {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClockBody {
    pub sim_time_ns: u64,
}

impl Validate for NamesQuery {
    fn validate(&self) -> Result<(), ValidationError> {
        Ok(())
    }
}

impl Validate for NameQuery {
    fn validate(&self) -> Result<(), ValidationError> {
        Ok(())
    }
}

impl<T: Validate> Validate for StatesBody<T> {
    fn validate(&self) -> Result<(), ValidationError> {
        self.states.validate()
    }
}

impl<T: Validate> Validate for StateBody<T> {
    fn validate(&self) -> Result<(), ValidationError> {
        self.state.validate()
    }
}

impl Validate for LinkQuery {
    fn validate(&self) -> Result<(), ValidationError> {
        self.keys.validate()
    }
}

impl Validate for VisualQuery {
    fn validate(&self) -> Result<(), ValidationError> {
        self.keys.validate()
    }
}

impl Validate for SpawnRequest {
    fn validate(&self) -> Result<(), ValidationError> {
        if self.name.is_empty() {
            return Err(ValidationError::EmptyName("name"));
        }
        self.initial_pose.validate()
    }
}

impl Validate for SubscribeRequest {
    fn validate(&self) -> Result<(), ValidationError> {
        Ok(())
    }
}

impl Validate for AdvanceClockRequest {
    fn validate(&self) -> Result<(), ValidationError> {
        Ok(())
    }
}

macro_rules! op_table {
    ($($variant:ident($body:ty) => $name:literal,)*) => {
        /// A request body tagged with its operation name.
        #[derive(Debug, Clone, PartialEq)]
        pub enum Request {
            $($variant($body),)*
        }

        /// The fixed operation table, in wire spelling.
        pub const OPERATIONS: &[&str] = &[$($name),*];

        impl Request {
            pub fn op(&self) -> &'static str {
                match self {
                    $(Request::$variant(_) => $name,)*
                }
            }

            fn validate(&self) -> Result<(), ValidationError> {
                match self {
                    $(Request::$variant(b) => b.validate(),)*
                }
            }

            fn write_body(&self, out: &mut Vec<u8>) -> serde_json::Result<()> {
                match self {
                    $(Request::$variant(b) => serde_json::to_writer(out, b),)*
                }
            }

            fn from_body(op: &str, body: &RawValue) -> Result<Request, DecodeErrorKind> {
                Ok(match op {
                    $($name => Request::$variant(parse_body(body)?),)*
                    other => return Err(DecodeErrorKind::UnsupportedOp(other.to_string())),
                })
            }
        }
    };
}

op_table! {
    GetModelStates(NamesQuery) => "get_model_states",
    SetModelStates(StatesBody<ModelState>) => "set_model_states",
    GetModelState(NameQuery) => "get_model_state",
    SetModelState(StateBody<ModelState>) => "set_model_state",
    GetLinkStates(LinkQuery) => "get_link_states",
    SetLinkStates(StatesBody<LinkState>) => "set_link_states",
    GetVisualStates(VisualQuery) => "get_visual_states",
    SetVisualStates(StatesBody<VisualState>) => "set_visual_states",
    GetLightStates(NamesQuery) => "get_light_states",
    SetLightStates(StatesBody<LightState>) => "set_light_states",
    SpawnModel(SpawnRequest) => "spawn_model",
    DeleteModel(NameQuery) => "delete_model",
    Subscribe(SubscribeRequest) => "subscribe",
    AdvanceClock(AdvanceClockRequest) => "advance_clock",
}

fn parse_body<T: DeserializeOwned + Validate>(body: &RawValue) -> Result<T, DecodeErrorKind> {
    let value: T = serde_json::from_str(body.get()).map_err(classify)?;
    value.validate().map_err(DecodeErrorKind::Invalid)?;
    Ok(value)
}

fn classify(e: serde_json::Error) -> DecodeErrorKind {
    let msg = e.to_string();
    if msg.starts_with("missing field") {
        DecodeErrorKind::MissingField(msg)
    } else {
        DecodeErrorKind::Malformed(msg)
    }
}

/// A request with its session-scoped id.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub id: u64,
    pub request: Request,
}

impl Envelope {
    pub fn new(id: u64, request: Request) -> Self {
        Self { id, request }
    }
}

/// Machine-readable prefix of an error reply, spelled `CODE: message` on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorCode {
    NotFound,
    DuplicateName,
    ParseError,
    Invalid,
    ProtocolError,
    UnsupportedOp,
    Internal,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::NotFound => "NOT_FOUND",
            ErrorCode::DuplicateName => "DUPLICATE_NAME",
            ErrorCode::ParseError => "PARSE_ERROR",
            ErrorCode::Invalid => "INVALID",
            ErrorCode::ProtocolError => "PROTOCOL_ERROR",
            ErrorCode::UnsupportedOp => "UNSUPPORTED_OP",
            ErrorCode::Internal => "INTERNAL",
        }
    }

    fn parse(s: &str) -> Option<ErrorCode> {
        Some(match s {
            "NOT_FOUND" => ErrorCode::NotFound,
            "DUPLICATE_NAME" => ErrorCode::DuplicateName,
            "PARSE_ERROR" => ErrorCode::ParseError,
            "INVALID" => ErrorCode::Invalid,
            "PROTOCOL_ERROR" => ErrorCode::ProtocolError,
            "UNSUPPORTED_OP" => ErrorCode::UnsupportedOp,
            "INTERNAL" => ErrorCode::Internal,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorReply {
    pub code: ErrorCode,
    pub message: String,
}

impl ErrorReply {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn to_wire(&self) -> String {
        format!("{}: {}", self.code.as_str(), self.message)
    }

    /// Unrecognized prefixes map to [`ErrorCode::Internal`] with the full text as message.
    pub fn from_wire(s: &str) -> Self {
        if let Some((code, msg)) = s.split_once(": ") {
            if let Some(code) = ErrorCode::parse(code) {
                return ErrorReply::new(code, msg);
            }
        }
        ErrorReply::new(ErrorCode::Internal, s)
    }
}

impl fmt::Display for ErrorReply {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_wire())
    }
}

/// Reply to one request. The body is kept as raw JSON; callers decode it knowing which
/// operation they issued.
#[derive(Debug, Clone)]
pub struct Response {
    pub id: u64,
    pub outcome: Result<Box<RawValue>, ErrorReply>,
}

impl PartialEq for Response {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
            && match (&self.outcome, &other.outcome) {
                (Ok(a), Ok(b)) => a.get() == b.get(),
                (Err(a), Err(b)) => a == b,
                _ => false,
            }
    }
}

impl Response {
    pub fn ok<T: Serialize>(id: u64, body: &T) -> Result<Self, EncodeError> {
        let raw = serde_json::value::to_raw_value(body).map_err(EncodeError::Serialize)?;
        Ok(Self { id, outcome: Ok(raw) })
    }

    /// Encodes a success line straight from `body`, skipping the intermediate raw value.
    pub fn encode_ok<T: Serialize>(id: u64, body: &T) -> Result<Vec<u8>, EncodeError> {
        let mut out = Vec::with_capacity(256);
        out.extend_from_slice(b"{\"id\":");
        out.extend_from_slice(id.to_string().as_bytes());
        out.extend_from_slice(b",\"ok\":true,\"body\":");
        serde_json::to_writer(&mut out, body).map_err(EncodeError::Serialize)?;
        out.extend_from_slice(b"}\n");
        Ok(out)
    }

    pub fn error(id: u64, reply: ErrorReply) -> Self {
        Self {
            id,
            outcome: Err(reply),
        }
    }

    /// Decodes the success body, or returns the server's error reply.
    pub fn into_body<T: DeserializeOwned>(self) -> Result<T, ResponseError> {
        match self.outcome {
            Ok(raw) => serde_json::from_str(raw.get()).map_err(ResponseError::Body),
            Err(reply) => Err(ResponseError::Server(reply)),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ResponseError {
    #[error("server error: {0}")]
    Server(ErrorReply),
    #[error("unexpected response body: {0}")]
    Body(serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topic {
    Clock,
    ModelStates,
    LinkStates,
    VisualStates,
}

impl Topic {
    pub const ALL: [Topic; 4] = [
        Topic::Clock,
        Topic::ModelStates,
        Topic::LinkStates,
        Topic::VisualStates,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Topic::Clock => "clock",
            Topic::ModelStates => "model_states",
            Topic::LinkStates => "link_states",
            Topic::VisualStates => "visual_states",
        }
    }

    pub fn parse(s: &str) -> Option<Topic> {
        Topic::ALL.into_iter().find(|t| t.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicStates<T> {
    pub sim_time_ns: u64,
    pub states: Vec<T>,
}

impl<T: Validate> Validate for TopicStates<T> {
    fn validate(&self) -> Result<(), ValidationError> {
        self.states.validate()
    }
}

impl Validate for ClockBody {
    fn validate(&self) -> Result<(), ValidationError> {
        Ok(())
    }
}

/// Fire-and-forget publication; carries no id and expects no reply.
#[derive(Debug, Clone, PartialEq)]
pub enum TopicMessage {
    Clock(ClockBody),
    ModelStates(TopicStates<ModelState>),
    LinkStates(TopicStates<LinkState>),
    VisualStates(TopicStates<VisualState>),
}

impl TopicMessage {
    pub fn topic(&self) -> Topic {
        match self {
            TopicMessage::Clock(_) => Topic::Clock,
            TopicMessage::ModelStates(_) => Topic::ModelStates,
            TopicMessage::LinkStates(_) => Topic::LinkStates,
            TopicMessage::VisualStates(_) => Topic::VisualStates,
        }
    }

    pub fn sim_time_ns(&self) -> u64 {
        match self {
            TopicMessage::Clock(b) => b.sim_time_ns,
            TopicMessage::ModelStates(b) => b.sim_time_ns,
            TopicMessage::LinkStates(b) => b.sim_time_ns,
            TopicMessage::VisualStates(b) => b.sim_time_ns,
        }
    }

    fn validate(&self) -> Result<(), ValidationError> {
        match self {
            TopicMessage::Clock(b) => b.validate(),
            TopicMessage::ModelStates(b) => b.validate(),
            TopicMessage::LinkStates(b) => b.validate(),
            TopicMessage::VisualStates(b) => b.validate(),
        }
    }

    fn write_body(&self, out: &mut Vec<u8>) -> serde_json::Result<()> {
        match self {
            TopicMessage::Clock(b) => serde_json::to_writer(out, b),
            TopicMessage::ModelStates(b) => serde_json::to_writer(out, b),
            TopicMessage::LinkStates(b) => serde_json::to_writer(out, b),
            TopicMessage::VisualStates(b) => serde_json::to_writer(out, b),
        }
    }

    fn from_body(topic: &str, body: &RawValue) -> Result<TopicMessage, DecodeErrorKind> {
        Ok(match Topic::parse(topic) {
            Some(Topic::Clock) => TopicMessage::Clock(parse_body(body)?),
            Some(Topic::ModelStates) => TopicMessage::ModelStates(parse_body(body)?),
            Some(Topic::LinkStates) => TopicMessage::LinkStates(parse_body(body)?),
            Some(Topic::VisualStates) => TopicMessage::VisualStates(parse_body(body)?),
            None => return Err(DecodeErrorKind::UnknownTopic(topic.to_string())),
        })
    }
}

/// Any line that can appear on the wire.
#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Request(Envelope),
    Response(Response),
    Topic(TopicMessage),
}

impl From<Envelope> for Message {
    fn from(e: Envelope) -> Self {
        Message::Request(e)
    }
}

impl From<Response> for Message {
    fn from(r: Response) -> Self {
        Message::Response(r)
    }
}

impl From<TopicMessage> for Message {
    fn from(t: TopicMessage) -> Self {
        Message::Topic(t)
    }
}

fn push_str_json(out: &mut Vec<u8>, s: &str) -> serde_json::Result<()> {
    serde_json::to_writer(out, s)
}

impl Message {
    /// Appends the encoded line, including the trailing LF, to `out`.
    pub fn encode_into(&self, out: &mut Vec<u8>) -> Result<(), EncodeError> {
        let start = out.len();
        let result = self.encode_inner(out);
        if result.is_err() {
            out.truncate(start);
        }
        result
    }

    fn encode_inner(&self, out: &mut Vec<u8>) -> Result<(), EncodeError> {
        match self {
            Message::Request(env) => {
                env.request.validate().map_err(EncodeError::Invalid)?;
                out.extend_from_slice(b"{\"id\":");
                out.extend_from_slice(env.id.to_string().as_bytes());
                out.extend_from_slice(b",\"op\":\"");
                out.extend_from_slice(env.request.op().as_bytes());
                out.extend_from_slice(b"\",\"body\":");
                env.request.write_body(out).map_err(EncodeError::Serialize)?;
                out.push(b'}');
            }
            Message::Response(r) => {
                out.extend_from_slice(b"{\"id\":");
                out.extend_from_slice(r.id.to_string().as_bytes());
                match &r.outcome {
                    Ok(body) => {
                        if body.get().contains('\n') {
                            return Err(EncodeError::Invalid(ValidationError::RawNewline));
                        }
                        out.extend_from_slice(b",\"ok\":true,\"body\":");
                        out.extend_from_slice(body.get().as_bytes());
                    }
                    Err(reply) => {
                        out.extend_from_slice(b",\"ok\":false,\"error\":");
                        push_str_json(out, &reply.to_wire()).map_err(EncodeError::Serialize)?;
                    }
                }
                out.push(b'}');
            }
            Message::Topic(t) => {
                t.validate().map_err(EncodeError::Invalid)?;
                out.extend_from_slice(b"{\"topic\":\"");
                out.extend_from_slice(t.topic().as_str().as_bytes());
                out.extend_from_slice(b"\",\"body\":");
                t.write_body(out).map_err(EncodeError::Serialize)?;
                out.push(b'}');
            }
        }
        out.push(b'\n');
        Ok(())
    }

    pub fn encode(&self) -> Result<Vec<u8>, EncodeError> {
        let mut out = Vec::with_capacity(128);
        self.encode_into(&mut out)?;
        Ok(out)
    }

    /// Decodes one line. A trailing LF (and CR before it) is accepted but not required.
    pub fn decode(line: &[u8]) -> Result<Message, DecodeError> {
        let line = line.strip_suffix(b"\n").unwrap_or(line);
        let line = line.strip_suffix(b"\r").unwrap_or(line);
        let text = std::str::from_utf8(line).map_err(|e| {
            DecodeError::new(
                DecodeErrorKind::Malformed(format!("invalid UTF-8: {e}")),
                e.valid_up_to(),
                None,
            )
        })?;
        let raw: RawLine<'_> = serde_json::from_str(text).map_err(|e| {
            let offset = column_offset(text, e.line(), e.column());
            DecodeError::new(classify(e), offset, None)
        })?;
        raw.into_message()
    }
}

/// Byte offset of a 1-based (line, column) position reported by serde_json.
fn column_offset(text: &str, line: usize, column: usize) -> usize {
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}

#[derive(Deserialize)]
struct RawLine<'a> {
    #[serde(default)]
    id: Option<u64>,
    #[serde(default, borrow)]
    op: Option<Cow<'a, str>>,
    #[serde(default, borrow)]
    topic: Option<Cow<'a, str>>,
    #[serde(default)]
    ok: Option<bool>,
    #[serde(default, borrow)]
    body: Option<&'a RawValue>,
    #[serde(default)]
    error: Option<String>,
}

impl RawLine<'_> {
    fn into_message(self) -> Result<Message, DecodeError> {
        let id = self.id;
        let fail = |kind| DecodeError::new(kind, 0, id);
        if let Some(op) = self.op {
            let id = id.ok_or_else(|| fail(DecodeErrorKind::MissingField("id".into())))?;
            let body = self
                .body
                .ok_or_else(|| fail(DecodeErrorKind::MissingField("body".into())))?;
            let request = Request::from_body(&op, body).map_err(fail)?;
            return Ok(Message::Request(Envelope { id, request }));
        }
        if let Some(topic) = self.topic {
            let body = self
                .body
                .ok_or_else(|| fail(DecodeErrorKind::MissingField("body".into())))?;
            return TopicMessage::from_body(&topic, body)
                .map(Message::Topic)
                .map_err(fail);
        }
        if let Some(ok) = self.ok {
            let id = id.ok_or_else(|| fail(DecodeErrorKind::MissingField("id".into())))?;
            let outcome = if ok {
                let body = self
                    .body
                    .ok_or_else(|| fail(DecodeErrorKind::MissingField("body".into())))?;
                Ok(body.to_owned())
            } else {
                let error = self
                    .error
                    .ok_or_else(|| fail(DecodeErrorKind::MissingField("error".into())))?;
                Err(ErrorReply::from_wire(&error))
            };
            return Ok(Message::Response(Response { id, outcome }));
        }
        Err(fail(DecodeErrorKind::MissingField(
            "one of op, topic or ok".into(),
        )))
    }
}

/// Free-function form of [`Message::encode`].
pub fn encode_message(m: &Message) -> Result<Vec<u8>, EncodeError> {
    m.encode()
}

/// Free-function form of [`Message::decode`].
pub fn decode_message(line: &[u8]) -> Result<Message, DecodeError> {
    Message::decode(line)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(m: impl Into<Message>) -> String {
        String::from_utf8(m.into().encode().unwrap()).unwrap()
    }

    #[test]
    fn get_request_canonical_form() {
        let env = Envelope::new(
            1,
            Request::GetModelStates(NamesQuery {
                names: vec!["agent0".into()],
            }),
        );
        assert_eq!(
            line(env),
            "{\"id\":1,\"op\":\"get_model_states\",\"body\":{\"names\":[\"agent0\"]}}\n"
        );
    }

    #[test]
    fn empty_names_is_one_line() {
        let env = Envelope::new(7, Request::GetModelStates(NamesQuery { names: vec![] }));
        let s = line(env);
        assert!(s.contains("\"body\":{\"names\":[]}"));
        assert_eq!(s.matches('\n').count(), 1);
        assert!(s.ends_with('\n'));
    }

    #[test]
    fn clock_topic_line() {
        let t = TopicMessage::Clock(ClockBody {
            sim_time_ns: 42 * 1_000_000,
        });
        assert_eq!(
            line(t),
            "{\"topic\":\"clock\",\"body\":{\"sim_time_ns\":42000000}}\n"
        );
    }

    #[test]
    fn newline_in_name_is_escaped() {
        let env = Envelope::new(
            1,
            Request::DeleteModel(NameQuery {
                name: "a\nb".into(),
            }),
        );
        let s = line(env.clone());
        assert_eq!(s.matches('\n').count(), 1);
        assert_eq!(Message::decode(s.as_bytes()).unwrap(), Message::Request(env));
    }

    #[test]
    fn not_json_is_rejected() {
        let err = Message::decode(b"not json\n").unwrap_err();
        assert!(matches!(err.kind, DecodeErrorKind::Malformed(_)));
        assert_eq!(err.offset, 1);
    }

    #[test]
    fn unknown_op_is_unsupported() {
        let err = Message::decode(b"{\"id\":3,\"op\":\"teleport\",\"body\":{}}\n").unwrap_err();
        assert_eq!(err.kind, DecodeErrorKind::UnsupportedOp("teleport".into()));
        assert_eq!(err.request_id, Some(3));
    }

    #[test]
    fn missing_body_field() {
        let err = Message::decode(b"{\"id\":3,\"op\":\"get_model_states\",\"body\":{}}").unwrap_err();
        assert!(matches!(err.kind, DecodeErrorKind::MissingField(_)), "{err:?}");
    }

    #[test]
    fn invalid_record_rejected_both_ways() {
        let mut state = ModelState::new("", Pose::IDENTITY, Default::default());
        let env = Envelope::new(
            1,
            Request::SetModelState(StateBody {
                state: state.clone(),
            }),
        );
        assert!(Message::from(env).encode().is_err());
        state.name = "ok".into();
        state.pose.position.x = f64::NAN;
        let env = Envelope::new(1, Request::SetModelState(StateBody { state }));
        assert!(Message::from(env).encode().is_err());

        let err = Message::decode(
            br#"{"id":1,"op":"delete_model","body":{"name":""}}"#,
        );
        assert!(err.is_ok(), "empty names are a lookup miss, not a wire violation");
        let err = Message::decode(
            br#"{"id":1,"op":"set_light_states","body":{"states":[{"name":"sun","color":{"r":2.0,"g":0.0,"b":0.0,"a":1.0},"attenuation_constant":1.0,"attenuation_linear":0.0,"attenuation_quadratic":0.0}]}}"#,
        )
        .unwrap_err();
        assert!(matches!(err.kind, DecodeErrorKind::Invalid(_)));
    }

    #[test]
    fn error_reply_round_trip() {
        let r = Response::error(9, ErrorReply::new(ErrorCode::NotFound, "model 'ghost' does not exist"));
        let s = line(r.clone());
        assert_eq!(
            s,
            "{\"id\":9,\"ok\":false,\"error\":\"NOT_FOUND: model 'ghost' does not exist\"}\n"
        );
        assert_eq!(Message::decode(s.as_bytes()).unwrap(), Message::Response(r));
        assert_eq!(ErrorReply::from_wire("weird").code, ErrorCode::Internal);
    }

    #[test]
    fn response_body_decodes() {
        let r = Response::ok(4, &ClockBody { sim_time_ns: 5 }).unwrap();
        let decoded = match Message::decode(&Message::from(r).encode().unwrap()).unwrap() {
            Message::Response(r) => r,
            other => panic!("{other:?}"),
        };
        assert_eq!(decoded.into_body::<ClockBody>().unwrap().sim_time_ns, 5);
    }

    #[test]
    fn encode_ok_matches_generic_path() {
        let body = StatusList {
            statuses: vec![EntryStatus::Ok, EntryStatus::NotFound],
        };
        let direct = Response::encode_ok(3, &body).unwrap();
        let generic = Message::from(Response::ok(3, &body).unwrap()).encode().unwrap();
        assert_eq!(direct, generic);
    }

    #[test]
    fn unknown_topic() {
        let err = Message::decode(br#"{"topic":"weather","body":{}}"#).unwrap_err();
        assert_eq!(err.kind, DecodeErrorKind::UnknownTopic("weather".into()));
    }
}
