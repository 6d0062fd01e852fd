//! Wire protocol between clients and the gateway.
//!
//! Every frame is
//!
//! ```text
//! +----------------+--------------------+----------------------+-------------+
//! | length: u32 BE | header_len: u32 BE | header: JSON (UTF-8) | blob: bytes |
//! +----------------+--------------------+----------------------+-------------+
//! ```
//!
//! where `length` counts every byte after itself. The header is a single JSON
//! object with `type`, `id` and `v` plus the message fields, serialized with
//! lexicographically ordered keys. Only `reset_ok` and `step_ok` carry a blob:
//! the little-endian 16-bit depth plane followed by the RGB plane, each present
//! only if selected by the header's `channel_type`.
//!
//! A connection is a strict request/response stream. Any framing error ends the
//! connection; no resynchronization is attempted.

mod error;
mod message;

use std::io::{self, Read, Write};

pub use error::{ErrorCode, ProtocolError};
pub use message::{ActionSpace, Envelope, MakeRequest, Message};

pub const PROTOCOL_VERSION: i64 = 1;

/// Largest accepted value of the `length` field.
pub const MAX_FRAME_LEN: usize = 8 * 1024 * 1024;

/// Serializes `envelope` into a complete frame.
pub fn encode_frame(envelope: &Envelope) -> Result<Vec<u8>, ProtocolError> {
    let (header, blob) = message::header_object(envelope.id, &envelope.message)?;
    let header =
        serde_json::to_vec(&header).map_err(|e| ProtocolError::InvalidMessage(e.to_string()))?;
    let length = 4 + header.len() + blob.len();
    if length > MAX_FRAME_LEN {
        return Err(ProtocolError::Oversize {
            len: length,
            max: MAX_FRAME_LEN,
        });
    }
    let mut out = Vec::with_capacity(4 + length);
    out.extend_from_slice(&(length as u32).to_be_bytes());
    out.extend_from_slice(&(header.len() as u32).to_be_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&blob);
    Ok(out)
}

/// Parses exactly one frame. Hostile input yields a typed error, never a panic.
pub fn decode_frame(bytes: &[u8]) -> Result<Envelope, ProtocolError> {
    let (header, blob) = split_frame(bytes)?;
    message::from_parts(header, blob)
}

fn split_frame(bytes: &[u8]) -> Result<(&[u8], &[u8]), ProtocolError> {
    let Some(prefix) = bytes.get(..4) else {
        return Err(ProtocolError::Truncated {
            needed: 4,
            available: bytes.len(),
        });
    };
    let length = u32::from_be_bytes(prefix.try_into().expect("four bytes")) as usize;
    if length > MAX_FRAME_LEN {
        return Err(ProtocolError::Oversize {
            len: length,
            max: MAX_FRAME_LEN,
        });
    }
    if length < 4 {
        return Err(ProtocolError::MalformedFrame(format!(
            "length {length} cannot hold the header length field"
        )));
    }
    let body = &bytes[4..];
    if body.len() < length {
        return Err(ProtocolError::Truncated {
            needed: 4 + length,
            available: bytes.len(),
        });
    }
    if body.len() > length {
        return Err(ProtocolError::TrailingBytes(body.len() - length));
    }
    let header_len = u32::from_be_bytes(body[..4].try_into().expect("four bytes")) as usize;
    if header_len > length - 4 {
        return Err(ProtocolError::MalformedFrame(format!(
            "header length {header_len} exceeds frame length {length}"
        )));
    }
    Ok((&body[4..4 + header_len], &body[4 + header_len..]))
}

/// Reads one raw frame, prefix included. A clean EOF before the first byte
/// is reported as [`ProtocolError::Closed`].
pub fn read_frame<R: Read>(reader: &mut R) -> Result<Vec<u8>, ProtocolError> {
    let mut prefix = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match reader.read(&mut prefix[got..]) {
            Ok(0) if got == 0 => return Err(ProtocolError::Closed),
            Ok(0) => {
                return Err(ProtocolError::Truncated {
                    needed: 4,
                    available: got,
                })
            }
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let length = u32::from_be_bytes(prefix) as usize;
    if length > MAX_FRAME_LEN {
        return Err(ProtocolError::Oversize {
            len: length,
            max: MAX_FRAME_LEN,
        });
    }
    let mut frame = vec![0u8; 4 + length];
    frame[..4].copy_from_slice(&prefix);
    reader.read_exact(&mut frame[4..]).map_err(|e| {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            ProtocolError::Truncated {
                needed: 4 + length,
                available: 4,
            }
        } else {
            ProtocolError::Io(e)
        }
    })?;
    Ok(frame)
}

pub fn read_envelope<R: Read>(reader: &mut R) -> Result<Envelope, ProtocolError> {
    decode_frame(&read_frame(reader)?)
}

pub fn write_envelope<W: Write>(writer: &mut W, envelope: &Envelope) -> Result<(), ProtocolError> {
    let frame = encode_frame(envelope)?;
    writer.write_all(&frame)?;
    writer.flush()?;
    Ok(())
}
