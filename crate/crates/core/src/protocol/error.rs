use std::io;

use serde::{Deserialize, Serialize};

/// Failure to frame, encode or decode a message.
///
/// Header-level errors carry the request id when the header was readable far
/// enough to recover it, so the peer can still be told which request failed.
#[derive(Debug, thiserror::Error)]
pub enum ProtocolError {
    #[error("truncated frame: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },
    #[error("frame of {len} bytes exceeds the {max} byte limit")]
    Oversize { len: usize, max: usize },
    #[error("malformed frame: {0}")]
    MalformedFrame(String),
    #[error("{0} trailing bytes after frame")]
    TrailingBytes(usize),
    #[error("bad header: {reason}")]
    BadHeader { id: Option<u64>, reason: String },
    #[error("unknown message type '{ty}'")]
    UnknownType { id: Option<u64>, ty: String },
    #[error(
        "protocol version mismatch: peer sent v{got}, this side speaks v{}",
        super::PROTOCOL_VERSION
    )]
    VersionMismatch { id: Option<u64>, got: i64 },
    #[error("blob length mismatch: expected {expected} bytes, got {actual}")]
    BlobLengthMismatch {
        id: Option<u64>,
        expected: usize,
        actual: usize,
    },
    #[error("message violates schema: {0}")]
    InvalidMessage(String),
    #[error("connection closed")]
    Closed,
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl ProtocolError {
    /// Request id recovered from the offending header, if any.
    pub fn request_id(&self) -> Option<u64> {
        match self {
            ProtocolError::BadHeader { id, .. }
            | ProtocolError::UnknownType { id, .. }
            | ProtocolError::VersionMismatch { id, .. }
            | ProtocolError::BlobLengthMismatch { id, .. } => *id,
            _ => None,
        }
    }

    /// Code to report to the peer for a frame that failed to decode.
    pub fn error_code(&self) -> ErrorCode {
        match self {
            ProtocolError::VersionMismatch { .. } => ErrorCode::VersionMismatch,
            _ => ErrorCode::BadRequest,
        }
    }
}

/// Error codes carried by `Error` messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorCode {
    AuthFailed,
    NoBooking,
    VersionMismatch,
    Busy,
    NameTaken,
    NotFound,
    UnknownEnv,
    InvalidHandle,
    InvalidAction,
    WrongActionKind,
    NoEpisode,
    LeaseLost,
    NotAuthenticated,
    PipeliningUnsupported,
    Forbidden,
    BadRequest,
    Internal,
}

impl ErrorCode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ErrorCode::AuthFailed => "auth-failed",
            ErrorCode::NoBooking => "no-booking",
            ErrorCode::VersionMismatch => "version-mismatch",
            ErrorCode::Busy => "busy",
            ErrorCode::NameTaken => "name-taken",
            ErrorCode::NotFound => "not-found",
            ErrorCode::UnknownEnv => "unknown-env",
            ErrorCode::InvalidHandle => "invalid-handle",
            ErrorCode::InvalidAction => "invalid-action",
            ErrorCode::WrongActionKind => "wrong-action-kind",
            ErrorCode::NoEpisode => "no-episode",
            ErrorCode::LeaseLost => "lease-lost",
            ErrorCode::NotAuthenticated => "not-authenticated",
            ErrorCode::PipeliningUnsupported => "pipelining-unsupported",
            ErrorCode::Forbidden => "forbidden",
            ErrorCode::BadRequest => "bad-request",
            ErrorCode::Internal => "internal",
        }
    }
}

impl std::fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}
