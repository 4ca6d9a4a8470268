//! Scene-state records and the line-delimited JSON wire protocol spoken between the world
//! server and its clients.
//!
//! The transport is plain TCP. Each message is a single JSON object on one LF-terminated line.
//! Requests carry an `id` that the matching response echoes; topic publications carry none.

pub mod client;
pub mod message;
pub mod model_xml;
pub mod pending;
pub mod records;

pub use client::{Client, ClientError, SubscriptionId};
pub use message::*;
pub use pending::{match_response, Completion, PendingTable};
pub use records::*;

/// Default TCP port of the world server.
pub const DEFAULT_PORT: u16 = 9900;

/// Environment variable that overrides [`DEFAULT_PORT`].
pub const PORT_ENV: &str = "SIMSYNC_PORT";

/// Port from `SIMSYNC_PORT`, or [`DEFAULT_PORT`] when unset or unparsable.
pub fn default_port() -> u16 {
    std::env::var(PORT_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_PORT)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ValidationError {
    #[error("{0} must not be empty")]
    EmptyName(&'static str),
    #[error("{0} must be finite")]
    NonFinite(&'static str),
    #[error("{0} out of range")]
    OutOfRange(&'static str),
    #[error("raw body contains a line feed")]
    RawNewline,
}

#[derive(Debug, thiserror::Error)]
pub enum EncodeError {
    #[error("invalid message: {0}")]
    Invalid(ValidationError),
    #[error("serialization failed: {0}")]
    Serialize(serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecodeErrorKind {
    #[error("malformed line: {0}")]
    Malformed(String),
    #[error("missing field: {0}")]
    MissingField(String),
    #[error("unsupported operation '{0}'")]
    UnsupportedOp(String),
    #[error("unknown topic '{0}'")]
    UnknownTopic(String),
    #[error("invariant violated: {0}")]
    Invalid(ValidationError),
}

/// A line that could not be decoded.
///
/// `offset` is the byte offset within the line where parsing failed (0 when the problem is
/// structural rather than lexical). `request_id` is set when the line was recognizably a
/// request or response, so a server can address its error reply.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{kind} (at byte {offset})")]
pub struct DecodeError {
    pub kind: DecodeErrorKind,
    pub offset: usize,
    pub request_id: Option<u64>,
}

impl DecodeError {
    pub fn new(kind: DecodeErrorKind, offset: usize, request_id: Option<u64>) -> Self {
        Self {
            kind,
            offset,
            request_id,
        }
    }

    /// Error code a server should answer with.
    pub fn code(&self) -> ErrorCode {
        match self.kind {
            DecodeErrorKind::UnsupportedOp(_) => ErrorCode::UnsupportedOp,
            DecodeErrorKind::Invalid(_) => ErrorCode::Invalid,
            _ => ErrorCode::ProtocolError,
        }
    }
}
