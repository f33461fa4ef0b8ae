//! Length-prefixed binary frames.
//!
//! ```text
//! frame   = length:u32 tag:u8 payload        length = 1 + payload bytes
//! Hello   (0x01) = version:u8 db_index:u32 n_databases:u32 n_messages:u32 message_bits:u32 key_bits:u32
//! Query   (0x02) = session_id:u64 count:u16 index:u32 * count
//! Answer  (0x03) = session_id:u64 masked_bits:u32 masked_bytes open_bits:u32 open_bytes
//! Error   (0x04) = code:u8 utf8_message
//! ```
//!
//! All integers are big-endian. Bit strings are packed most-significant bit
//! first and padded with zero bits to a whole byte.

use std::io::{self, Read};

use thiserror::Error;

use crate::bits::{BitString, BitsError};
use crate::scheme::{Answer, QueryVector};

pub const TAG_HELLO: u8 = 0x01;
pub const TAG_QUERY: u8 = 0x02;
pub const TAG_ANSWER: u8 = 0x03;
pub const TAG_ERROR: u8 = 0x04;

pub const PROTOCOL_VERSION: u8 = 1;

/// Largest accepted `length` field.
pub const MAX_FRAME_LEN: u32 = 1 << 24;

const HEADER_LEN: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("frame incomplete: have {have} bytes, need {need}")]
    Incomplete { have: usize, need: usize },
    #[error("frame length field is zero")]
    EmptyFrame,
    #[error("frame length {0} exceeds the maximum of {MAX_FRAME_LEN}")]
    TooLarge(u32),
    #[error("unknown frame tag {0:#04x}")]
    UnknownTag(u8),
    #[error("malformed payload: {0}")]
    Malformed(String),
    #[error("{0} trailing bytes after frame")]
    Trailing(usize),
}

impl From<BitsError> for WireError {
    fn from(e: BitsError) -> Self {
        WireError::Malformed(e.to_string())
    }
}

/// Error frame codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ErrorCode(pub u8);

impl ErrorCode {
    pub const MALFORMED: ErrorCode = ErrorCode(0x01);
    pub const UNKNOWN_TAG: ErrorCode = ErrorCode(0x02);
    pub const OUT_OF_RANGE: ErrorCode = ErrorCode(0x03);
    pub const TRUNCATED: ErrorCode = ErrorCode(0x04);
    pub const UNEXPECTED: ErrorCode = ErrorCode(0x05);

    pub fn for_wire_error(e: &WireError) -> Self {
        match e {
            WireError::Incomplete { .. } => Self::TRUNCATED,
            WireError::UnknownTag(_) => Self::UNKNOWN_TAG,
            WireError::EmptyFrame | WireError::TooLarge(_) | WireError::Malformed(_) | WireError::Trailing(_) => {
                Self::MALFORMED
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hello {
    pub version: u8,
    pub db_index: u32,
    pub n_databases: u32,
    pub n_messages: u32,
    pub message_bits: u32,
    pub key_bits: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Frame {
    Hello(Hello),
    Query { session_id: u64, query: QueryVector },
    Answer { session_id: u64, answer: Answer },
    Error { code: ErrorCode, message: String },
}

impl Frame {
    pub fn tag(&self) -> u8 {
        match self {
            Frame::Hello(_) => TAG_HELLO,
            Frame::Query { .. } => TAG_QUERY,
            Frame::Answer { .. } => TAG_ANSWER,
            Frame::Error { .. } => TAG_ERROR,
        }
    }

    pub fn error(code: ErrorCode, message: impl Into<String>) -> Self {
        Frame::Error {
            code,
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        matches!(self, Frame::Error { .. })
    }

    /// Panics if a query has more than `u16::MAX` entries or an index above
    /// `u32::MAX`; neither fits the wire format.
    pub fn encode(&self) -> Vec<u8> {
        let mut payload = Vec::new();
        match self {
            Frame::Hello(h) => {
                payload.push(h.version);
                for v in [h.db_index, h.n_databases, h.n_messages, h.message_bits, h.key_bits] {
                    payload.extend_from_slice(&v.to_be_bytes());
                }
            }
            Frame::Query { session_id, query } => {
                payload.extend_from_slice(&session_id.to_be_bytes());
                let count = u16::try_from(query.indices().len()).expect("query too long for the wire");
                payload.extend_from_slice(&count.to_be_bytes());
                for &v in query.indices() {
                    let v = u32::try_from(v).expect("query index too large for the wire");
                    payload.extend_from_slice(&v.to_be_bytes());
                }
            }
            Frame::Answer { session_id, answer } => {
                payload.extend_from_slice(&session_id.to_be_bytes());
                for part in [&answer.masked, &answer.open] {
                    payload.extend_from_slice(&(part.len() as u32).to_be_bytes());
                    payload.extend_from_slice(&part.to_packed());
                }
            }
            Frame::Error { code, message } => {
                payload.push(code.0);
                payload.extend_from_slice(message.as_bytes());
            }
        }
        let mut out = Vec::with_capacity(HEADER_LEN + 1 + payload.len());
        out.extend_from_slice(&(payload.len() as u32 + 1).to_be_bytes());
        out.push(self.tag());
        out.extend_from_slice(&payload);
        out
    }

    /// Decodes one frame from the front of `bytes`, returning it and the
    /// number of bytes consumed.
    pub fn decode(bytes: &[u8]) -> Result<(Frame, usize), WireError> {
        if bytes.len() < HEADER_LEN {
            return Err(WireError::Incomplete {
                have: bytes.len(),
                need: HEADER_LEN,
            });
        }
        let len = u32::from_be_bytes(bytes[..HEADER_LEN].try_into().unwrap());
        if len == 0 {
            return Err(WireError::EmptyFrame);
        }
        if len > MAX_FRAME_LEN {
            return Err(WireError::TooLarge(len));
        }
        let total = HEADER_LEN + len as usize;
        if bytes.len() < total {
            return Err(WireError::Incomplete {
                have: bytes.len(),
                need: total,
            });
        }
        let tag = bytes[HEADER_LEN];
        let mut r = Reader::new(&bytes[HEADER_LEN + 1..total]);
        let frame = match tag {
            TAG_HELLO => Frame::Hello(Hello {
                version: r.u8()?,
                db_index: r.u32()?,
                n_databases: r.u32()?,
                n_messages: r.u32()?,
                message_bits: r.u32()?,
                key_bits: r.u32()?,
            }),
            TAG_QUERY => {
                let session_id = r.u64()?;
                let count = r.u16()?;
                let indices = (0..count)
                    .map(|_| r.u32().map(|v| v as usize))
                    .collect::<Result<Vec<_>, _>>()?;
                Frame::Query {
                    session_id,
                    query: QueryVector(indices),
                }
            }
            TAG_ANSWER => {
                let session_id = r.u64()?;
                let masked = r.bits()?;
                let open = r.bits()?;
                Frame::Answer {
                    session_id,
                    answer: Answer { masked, open },
                }
            }
            TAG_ERROR => {
                let code = ErrorCode(r.u8()?);
                let message = String::from_utf8(r.rest().to_vec())
                    .map_err(|_| WireError::Malformed("error message is not UTF-8".into()))?;
                Frame::Error { code, message }
            }
            other => return Err(WireError::UnknownTag(other)),
        };
        if !r.is_empty() {
            return Err(WireError::Malformed(format!("{} unread payload bytes", r.remaining())));
        }
        Ok((frame, total))
    }

    /// Decodes a buffer holding exactly one frame.
    pub fn decode_exact(bytes: &[u8]) -> Result<Frame, WireError> {
        let (frame, used) = Frame::decode(bytes)?;
        if used != bytes.len() {
            return Err(WireError::Trailing(bytes.len() - used));
        }
        Ok(frame)
    }
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        if self.buf.len() < n {
            return Err(WireError::Malformed(format!(
                "payload ends early: need {n} more bytes, have {}",
                self.buf.len()
            )));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8, WireError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, WireError> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, WireError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, WireError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn bits(&mut self) -> Result<BitString, WireError> {
        let len = self.u32()? as usize;
        let bytes = self.take(len.div_ceil(8))?;
        Ok(BitString::from_packed(bytes, len)?)
    }

    fn rest(&mut self) -> &'a [u8] {
        std::mem::take(&mut self.buf)
    }

    fn remaining(&self) -> usize {
        self.buf.len()
    }

    fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }
}

/// Outcome of reading one raw frame from a byte stream.
#[derive(Debug)]
pub enum RawFrame {
    /// Header and body, ready for [`Frame::decode_exact`].
    Complete(Vec<u8>),
    /// The stream ended cleanly between frames.
    Eof,
    /// The stream ended inside a frame; holds the bytes that did arrive.
    Truncated(Vec<u8>),
    /// The header announced an unacceptable length.
    BadLength(u32),
}

/// Reads exactly one length-prefixed frame without decoding it.
pub fn read_raw_frame<R: Read>(reader: &mut R) -> io::Result<RawFrame> {
    let mut header = [0u8; HEADER_LEN];
    let got = read_full(reader, &mut header)?;
    if got == 0 {
        return Ok(RawFrame::Eof);
    }
    if got < HEADER_LEN {
        return Ok(RawFrame::Truncated(header[..got].to_vec()));
    }
    let len = u32::from_be_bytes(header);
    if len == 0 || len > MAX_FRAME_LEN {
        return Ok(RawFrame::BadLength(len));
    }
    let mut buf = vec![0u8; HEADER_LEN + len as usize];
    buf[..HEADER_LEN].copy_from_slice(&header);
    let got = read_full(reader, &mut buf[HEADER_LEN..])?;
    if got < len as usize {
        buf.truncate(HEADER_LEN + got);
        return Ok(RawFrame::Truncated(buf));
    }
    Ok(RawFrame::Complete(buf))
}

/// Like `read_exact` but reports how many bytes arrived before EOF.
fn read_full<R: Read>(reader: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match reader.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_frames() -> Vec<Frame> {
        vec![
            Frame::Hello(Hello {
                version: PROTOCOL_VERSION,
                db_index: 1,
                n_databases: 2,
                n_messages: 2,
                message_bits: 3,
                key_bits: 1,
            }),
            Frame::Query {
                session_id: 7,
                query: QueryVector(vec![0, 0]),
            },
            Frame::Answer {
                session_id: 7,
                answer: Answer {
                    masked: BitString::from_bit_str("1"),
                    open: BitString::new(),
                },
            },
            Frame::error(ErrorCode::TRUNCATED, "short"),
        ]
    }

    #[test]
    fn query_layout_is_bit_exact() {
        let f = Frame::Query {
            session_id: 7,
            query: QueryVector(vec![1, 0]),
        };
        let expected: Vec<u8> = vec![
            0, 0, 0, 19,   // length
            0x02, // tag
            0, 0, 0, 0, 0, 0, 0, 7, // session
            0, 2, // count
            0, 0, 0, 1, 0, 0, 0, 0,
        ];
        assert_eq!(f.encode(), expected);
    }

    #[test]
    fn answer_layout_is_bit_exact() {
        let f = Frame::Answer {
            session_id: 1,
            answer: Answer {
                masked: BitString::from_bit_str("1"),
                open: BitString::from_bit_str("101"),
            },
        };
        let bytes = f.encode();
        assert_eq!(&bytes[..5], &[0, 0, 0, 19, 0x03]);
        assert_eq!(&bytes[13..], &[0, 0, 0, 1, 0b1000_0000, 0, 0, 0, 3, 0b1010_0000]);
    }

    #[test]
    fn round_trips() {
        for f in sample_frames() {
            let bytes = f.encode();
            assert_eq!(Frame::decode_exact(&bytes).unwrap(), f);
        }
    }

    #[test]
    fn decode_errors() {
        assert!(matches!(Frame::decode(&[0, 0]), Err(WireError::Incomplete { .. })));
        assert_eq!(Frame::decode(&[0, 0, 0, 0]), Err(WireError::EmptyFrame));
        assert_eq!(
            Frame::decode(&[0xff, 0, 0, 0, 1]),
            Err(WireError::TooLarge(0xff00_0000))
        );
        assert_eq!(Frame::decode(&[0, 0, 0, 1, 0x09]), Err(WireError::UnknownTag(9)));
        // Query with count 1 and no index bytes
        let bad = [0, 0, 0, 11, 0x02, 0, 0, 0, 0, 0, 0, 0, 1, 0, 1];
        assert!(matches!(Frame::decode(&bad), Err(WireError::Malformed(_))));
        // Answer with dirty padding in a 1-bit part
        let bad = [
            0,
            0,
            0,
            18,
            0x03,
            0,
            0,
            0,
            0,
            0,
            0,
            0,
            1,
            0,
            0,
            0,
            1,
            0b1100_0000,
            0,
            0,
            0,
            0,
        ];
        assert!(matches!(Frame::decode(&bad), Err(WireError::Malformed(_))));
        let mut two = sample_frames()[1].encode();
        two.push(0);
        assert_eq!(Frame::decode_exact(&two), Err(WireError::Trailing(1)));
    }

    #[test]
    fn raw_stream_reading() {
        let mut stream = Vec::new();
        for f in sample_frames() {
            stream.extend(f.encode());
        }
        let mut cursor = io::Cursor::new(stream.clone());
        for f in sample_frames() {
            match read_raw_frame(&mut cursor).unwrap() {
                RawFrame::Complete(b) => assert_eq!(Frame::decode_exact(&b).unwrap(), f),
                other => panic!("{other:?}"),
            }
        }
        assert!(matches!(read_raw_frame(&mut cursor).unwrap(), RawFrame::Eof));

        let cut = &stream[..stream.len() - 2];
        let mut cursor = io::Cursor::new(cut.to_vec());
        let mut last = None;
        while let Ok(r) = read_raw_frame(&mut cursor) {
            if matches!(r, RawFrame::Eof) {
                break;
            }
            let done = matches!(r, RawFrame::Truncated(_));
            last = Some(r);
            if done {
                break;
            }
        }
        assert!(matches!(last, Some(RawFrame::Truncated(_))));

        let mut cursor = io::Cursor::new(vec![0, 0, 0, 0]);
        assert!(matches!(read_raw_frame(&mut cursor).unwrap(), RawFrame::BadLength(0)));
    }
}
