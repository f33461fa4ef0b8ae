//! Point-to-point frame transports.
//!
//! A transport moves whole encoded frames between one client and one server.
//! The in-memory variant hands over byte buffers through channels; the stream
//! variant writes the same bytes to any `Read + Write` stream (TCP on
//! localhost in practice).

use std::io::{self, Read, Write};
use std::net::TcpStream;
use std::sync::mpsc::{channel, Receiver, Sender};

use thiserror::Error;

use super::wire::{read_raw_frame, Frame, RawFrame, WireError};

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("peer closed the connection")]
    Closed,
    #[error("stream ended inside a frame ({0} bytes received)")]
    Truncated(usize),
    #[error("frame header announced invalid length {0}")]
    BadLength(u32),
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub trait Transport: Send {
    fn send_bytes(&mut self, frame: &[u8]) -> Result<(), TransportError>;

    /// Next raw frame, or `None` once the peer has gone away.
    fn recv_bytes(&mut self) -> Result<Option<Vec<u8>>, TransportError>;

    fn send_frame(&mut self, frame: &Frame) -> Result<(), TransportError> {
        self.send_bytes(&frame.encode())
    }

    fn recv_frame(&mut self) -> Result<Frame, TransportError> {
        let bytes = self.recv_bytes()?.ok_or(TransportError::Closed)?;
        Ok(Frame::decode_exact(&bytes)?)
    }
}

impl<T: Transport + ?Sized> Transport for Box<T> {
    fn send_bytes(&mut self, frame: &[u8]) -> Result<(), TransportError> {
        (**self).send_bytes(frame)
    }

    fn recv_bytes(&mut self) -> Result<Option<Vec<u8>>, TransportError> {
        (**self).recv_bytes()
    }
}

/// One end of an in-memory duplex link.
pub struct MemoryTransport {
    tx: Sender<Vec<u8>>,
    rx: Receiver<Vec<u8>>,
}

/// Two connected in-memory endpoints.
pub fn memory_pair() -> (MemoryTransport, MemoryTransport) {
    let (a_tx, b_rx) = channel();
    let (b_tx, a_rx) = channel();
    (
        MemoryTransport { tx: a_tx, rx: a_rx },
        MemoryTransport { tx: b_tx, rx: b_rx },
    )
}

impl Transport for MemoryTransport {
    fn send_bytes(&mut self, frame: &[u8]) -> Result<(), TransportError> {
        self.tx.send(frame.to_vec()).map_err(|_| TransportError::Closed)
    }

    fn recv_bytes(&mut self) -> Result<Option<Vec<u8>>, TransportError> {
        Ok(self.rx.recv().ok())
    }
}

/// Frames over a byte stream.
pub struct StreamTransport<S> {
    stream: S,
}

impl<S: Read + Write + Send> StreamTransport<S> {
    pub fn new(stream: S) -> Self {
        Self { stream }
    }

    pub fn into_inner(self) -> S {
        self.stream
    }
}

impl StreamTransport<TcpStream> {
    pub fn tcp(stream: TcpStream) -> io::Result<Self> {
        stream.set_nodelay(true)?;
        Ok(Self::new(stream))
    }
}

impl<S: Read + Write + Send> Transport for StreamTransport<S> {
    fn send_bytes(&mut self, frame: &[u8]) -> Result<(), TransportError> {
        self.stream.write_all(frame)?;
        self.stream.flush()?;
        Ok(())
    }

    fn recv_bytes(&mut self) -> Result<Option<Vec<u8>>, TransportError> {
        match read_raw_frame(&mut self.stream) {
            Ok(RawFrame::Complete(bytes)) => Ok(Some(bytes)),
            Ok(RawFrame::Eof) => Ok(None),
            Ok(RawFrame::Truncated(bytes)) => Err(TransportError::Truncated(bytes.len())),
            Ok(RawFrame::BadLength(len)) => Err(TransportError::BadLength(len)),
            Err(e) if e.kind() == io::ErrorKind::ConnectionReset => Ok(None),
            Err(e) => Err(e.into()),
        }
    }
}
