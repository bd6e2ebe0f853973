//! Packet-record sessions: the canonical form every capture is reduced to.
//!
//! A [`TraceSession`] holds only what a passive layer-3 observer sees for each
//! packet: when it was seen, how long the frame was on the wire, and whether it
//! travelled towards the aggregation server or away from it.

mod csv;
mod pcap;

use std::collections::BTreeSet;
use std::fmt;
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::{Condition, Label};

pub use self::csv::{read_csv, write_csv, CSV_HEADER};
pub use self::pcap::{
    parse_pcap, write_pcap, write_pcap_with_snaplen, LINKTYPE_ETHERNET, LINKTYPE_RAW,
    PCAP_MAGIC_MICROS, SYNTHETIC_HEADER_LEN,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Endpoint {
    pub ip: Ipv4Addr,
    pub port: u16,
}

impl Endpoint {
    pub const fn new(ip: Ipv4Addr, port: u16) -> Self {
        Endpoint { ip, port }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.ip, self.port)
    }
}

impl std::str::FromStr for Endpoint {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (ip, port) = s
            .rsplit_once(':')
            .ok_or_else(|| format!("endpoint `{s}` is not ip:port"))?;
        let ip = ip.parse().map_err(|e| format!("endpoint `{s}`: {e}"))?;
        let port = port.parse().map_err(|e| format!("endpoint `{s}`: {e}"))?;
        Ok(Endpoint { ip, port })
    }
}

/// Uplink is client to server.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Uplink,
    Downlink,
}

impl Direction {
    /// Arithmetic encoding: Uplink = +1, Downlink = -1.
    pub fn sign(self) -> f64 {
        match self {
            Direction::Uplink => 1.0,
            Direction::Downlink => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacketRecord {
    /// Seconds since the start of the capture.
    pub timestamp: f64,
    /// On-wire frame length in bytes.
    pub frame_length: u32,
    pub direction: Direction,
}

impl PacketRecord {
    pub fn new(timestamp: f64, frame_length: u32, direction: Direction) -> Result<Self> {
        if !(timestamp.is_finite() && timestamp >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "timestamp {timestamp} must be finite and non-negative"
            )));
        }
        if frame_length == 0 {
            return Err(Error::InvalidParameter(
                "frame_length must be at least 1".into(),
            ));
        }
        Ok(PacketRecord {
            timestamp,
            frame_length,
            direction,
        })
    }
}

/// The packets of one capture, sorted by timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSession {
    packets: Vec<PacketRecord>,
    pub label: Option<Label>,
    pub condition: Condition,
    pub session_id: String,
}

impl TraceSession {
    /// Builds a session, stably sorting `packets` by timestamp.
    pub fn new(
        session_id: impl Into<String>,
        mut packets: Vec<PacketRecord>,
        label: Option<Label>,
        condition: Condition,
    ) -> Self {
        packets.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
        TraceSession {
            packets,
            label,
            condition,
            session_id: session_id.into(),
        }
    }

    pub fn packets(&self) -> &[PacketRecord] {
        &self.packets
    }

    pub fn into_packets(self) -> Vec<PacketRecord> {
        self.packets
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = Some(label);
        self
    }

    pub fn with_condition(mut self, condition: Condition) -> Self {
        self.condition = condition;
        self
    }
}

/// What the observer knows about the capture: where the server lives and,
/// optionally, which clients to keep.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptureConfig {
    pub server_endpoint: Endpoint,
    pub client_filter: Option<Vec<Endpoint>>,
    pub link_types_accepted: BTreeSet<u32>,
}

impl CaptureConfig {
    /// Accepts Ethernet and raw-IP captures, no client filter.
    pub fn new(server_endpoint: Endpoint) -> Self {
        CaptureConfig {
            server_endpoint,
            client_filter: None,
            link_types_accepted: [LINKTYPE_ETHERNET, LINKTYPE_RAW].into_iter().collect(),
        }
    }

    pub fn with_clients(mut self, clients: Vec<Endpoint>) -> Self {
        self.client_filter = Some(clients);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.link_types_accepted.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one link type must be accepted".into(),
            ));
        }
        Ok(())
    }
}

pub fn infer_direction(src: Endpoint, dst: Endpoint, config: &CaptureConfig) -> Result<Direction> {
    let server = config.server_endpoint;
    match (src == server, dst == server) {
        (false, true) => Ok(Direction::Uplink),
        (true, false) => Ok(Direction::Downlink),
        _ => Err(Error::AmbiguousDirection {
            src: src.to_string(),
            dst: dst.to_string(),
        }),
    }
}

/// Splits a session into consecutive half-open windows `[k*w, (k+1)*w)`
/// measured from the first packet. Empty windows are dropped.
pub fn segment_session(session: &TraceSession, window: f64) -> Result<Vec<TraceSession>> {
    if !(window.is_finite() && window > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "window must be a positive number of seconds, got {window}"
        )));
    }
    let first = session.packets.first().ok_or(Error::EmptySession)?;
    let origin = first.timestamp;

    let mut segments: Vec<TraceSession> = Vec::new();
    let mut current: Option<(u64, Vec<PacketRecord>)> = None;
    for packet in &session.packets {
        let k = ((packet.timestamp - origin) / window).floor() as u64;
        match current.as_mut() {
            Some((idx, packets)) if *idx == k => packets.push(*packet),
            _ => {
                if let Some((idx, packets)) = current.take() {
                    segments.push(window_session(session, idx, packets));
                }
                current = Some((k, vec![*packet]));
            }
        }
    }
    if let Some((idx, packets)) = current {
        segments.push(window_session(session, idx, packets));
    }
    Ok(segments)
}

fn window_session(parent: &TraceSession, index: u64, packets: Vec<PacketRecord>) -> TraceSession {
    TraceSession {
        packets,
        label: parent.label,
        condition: parent.condition,
        session_id: format!("{}#w{}", parent.session_id, index),
    }
}
