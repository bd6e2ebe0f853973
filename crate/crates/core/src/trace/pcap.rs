//! Classic (libpcap) capture files.
//!
//! Only the pieces needed to recover layer-3 metadata are decoded: the
//! per-record timestamps and original lengths, then Ethernet (with optional
//! 802.1Q tags) or raw IPv4, then the TCP/UDP port pair.

use std::net::Ipv4Addr;

use super::{infer_direction, CaptureConfig, Direction, Endpoint, PacketRecord, TraceSession};
use crate::error::{Error, Result};
use crate::label::Condition;

pub const PCAP_MAGIC_MICROS: u32 = 0xa1b2_c3d4;
const PCAP_MAGIC_NANOS: u32 = 0xa1b2_3c4d;

pub const LINKTYPE_ETHERNET: u32 = 1;
pub const LINKTYPE_RAW: u32 = 101;

const GLOBAL_HEADER_LEN: usize = 24;
const RECORD_HEADER_LEN: usize = 16;
const ETHERNET_HEADER_LEN: usize = 14;
const IPV4_HEADER_LEN: usize = 20;
const TCP_HEADER_LEN: usize = 20;

/// Ethernet + IPv4 + TCP, without options.
pub const SYNTHETIC_HEADER_LEN: u32 =
    (ETHERNET_HEADER_LEN + IPV4_HEADER_LEN + TCP_HEADER_LEN) as u32;

const ETHERTYPE_IPV4: u16 = 0x0800;
const ETHERTYPE_VLAN: u16 = 0x8100;
const ETHERTYPE_QINQ: u16 = 0x88a8;
const IPPROTO_TCP: u8 = 6;
const IPPROTO_UDP: u8 = 17;

#[derive(Clone, Copy)]
enum ByteOrder {
    Little,
    Big,
}

impl ByteOrder {
    fn u32(self, b: &[u8]) -> u32 {
        let arr = [b[0], b[1], b[2], b[3]];
        match self {
            ByteOrder::Little => u32::from_le_bytes(arr),
            ByteOrder::Big => u32::from_be_bytes(arr),
        }
    }
}

/// Reads a classic pcap and keeps every IPv4 TCP/UDP packet exchanged with the
/// configured server. Timestamps are rebased so the first kept packet is at 0.
pub fn parse_pcap(raw: &[u8], config: &CaptureConfig) -> Result<TraceSession> {
    config.validate()?;
    if raw.len() < GLOBAL_HEADER_LEN {
        return Err(Error::MalformedCapture(format!(
            "global header truncated ({} of {GLOBAL_HEADER_LEN} bytes)",
            raw.len()
        )));
    }
    let magic_le = u32::from_le_bytes([raw[0], raw[1], raw[2], raw[3]]);
    let (order, nanos_per_frac) = match magic_le {
        PCAP_MAGIC_MICROS => (ByteOrder::Little, 1_000u64),
        PCAP_MAGIC_NANOS => (ByteOrder::Little, 1),
        m if m.swap_bytes() == PCAP_MAGIC_MICROS => (ByteOrder::Big, 1_000),
        m if m.swap_bytes() == PCAP_MAGIC_NANOS => (ByteOrder::Big, 1),
        other => {
            return Err(Error::MalformedCapture(format!("bad magic 0x{other:08x}")));
        }
    };
    let link_type = order.u32(&raw[20..24]) & 0x0fff_ffff;
    if !config.link_types_accepted.contains(&link_type)
        || !matches!(link_type, LINKTYPE_ETHERNET | LINKTYPE_RAW)
    {
        return Err(Error::UnsupportedLinkType(link_type));
    }

    let mut stamped: Vec<(u64, PacketRecord)> = Vec::new();
    let mut offset = GLOBAL_HEADER_LEN;
    while offset < raw.len() {
        let header = raw.get(offset..offset + RECORD_HEADER_LEN).ok_or_else(|| {
            Error::MalformedCapture(format!("record header truncated at byte {offset}"))
        })?;
        let ts_sec = order.u32(&header[0..4]) as u64;
        let ts_frac = order.u32(&header[4..8]) as u64;
        let incl_len = order.u32(&header[8..12]) as usize;
        let orig_len = order.u32(&header[12..16]);
        offset += RECORD_HEADER_LEN;
        let data = raw.get(offset..offset + incl_len).ok_or_else(|| {
            Error::MalformedCapture(format!(
                "record at byte {} claims {incl_len} bytes, {} remain",
                offset - RECORD_HEADER_LEN,
                raw.len() - offset
            ))
        })?;
        offset += incl_len;

        let Some((src, dst)) = transport_endpoints(link_type, data) else {
            continue;
        };
        if !matches_config(src, dst, config) {
            continue;
        }
        let Ok(direction) = infer_direction(src, dst, config) else {
            continue;
        };
        let ts_nanos = ts_sec * 1_000_000_000 + ts_frac * nanos_per_frac;
        // orig_len is the on-wire length; a frame shorter than its headers is
        // already rejected by transport_endpoints, so this is at least 1.
        stamped.push((
            ts_nanos,
            PacketRecord {
                timestamp: 0.0,
                frame_length: orig_len.max(1),
                direction,
            },
        ));
    }

    if stamped.is_empty() {
        return Err(Error::EmptySession);
    }
    stamped.sort_by_key(|(ts, _)| *ts);
    let origin = stamped[0].0;
    let packets = stamped
        .into_iter()
        .map(|(ts, mut record)| {
            record.timestamp = (ts - origin) as f64 / 1e9;
            record
        })
        .collect();
    Ok(TraceSession::new("", packets, None, Condition::Ideal))
}

fn matches_config(src: Endpoint, dst: Endpoint, config: &CaptureConfig) -> bool {
    let server = config.server_endpoint;
    let client = if dst == server {
        src
    } else if src == server {
        dst
    } else {
        return false;
    };
    match &config.client_filter {
        Some(clients) => clients.contains(&client),
        None => true,
    }
}

fn transport_endpoints(link_type: u32, data: &[u8]) -> Option<(Endpoint, Endpoint)> {
    let ip = match link_type {
        LINKTYPE_ETHERNET => {
            let mut ethertype = u16::from_be_bytes([*data.get(12)?, *data.get(13)?]);
            let mut start = ETHERNET_HEADER_LEN;
            while ethertype == ETHERTYPE_VLAN || ethertype == ETHERTYPE_QINQ {
                ethertype = u16::from_be_bytes([*data.get(start + 2)?, *data.get(start + 3)?]);
                start += 4;
            }
            if ethertype != ETHERTYPE_IPV4 {
                return None;
            }
            data.get(start..)?
        }
        LINKTYPE_RAW => data,
        _ => return None,
    };
    if ip.len() < IPV4_HEADER_LEN || ip[0] >> 4 != 4 {
        return None;
    }
    let ihl = usize::from(ip[0] & 0x0f) * 4;
    if ihl < IPV4_HEADER_LEN || ip.len() < ihl + 4 {
        return None;
    }
    if !matches!(ip[9], IPPROTO_TCP | IPPROTO_UDP) {
        return None;
    }
    // non-first fragments carry no transport header
    let frag_offset = u16::from_be_bytes([ip[6], ip[7]]) & 0x1fff;
    if frag_offset != 0 {
        return None;
    }
    let src_ip = Ipv4Addr::new(ip[12], ip[13], ip[14], ip[15]);
    let dst_ip = Ipv4Addr::new(ip[16], ip[17], ip[18], ip[19]);
    let src_port = u16::from_be_bytes([ip[ihl], ip[ihl + 1]]);
    let dst_port = u16::from_be_bytes([ip[ihl + 2], ip[ihl + 3]]);
    Some((
        Endpoint::new(src_ip, src_port),
        Endpoint::new(dst_ip, dst_port),
    ))
}

/// Writes `session` as a full-frame capture (snaplen 65535).
pub fn write_pcap(session: &TraceSession, server: Endpoint, client: Endpoint) -> Result<Vec<u8>> {
    write_pcap_with_snaplen(session, server, client, 65_535)
}

/// Writes `session` with synthetic Ethernet/IPv4/TCP headers, recording at most
/// `snaplen` bytes of each frame. `orig_len` always carries the full frame
/// length, so truncation never changes what `parse_pcap` reports.
pub fn write_pcap_with_snaplen(
    session: &TraceSession,
    server: Endpoint,
    client: Endpoint,
    snaplen: u32,
) -> Result<Vec<u8>> {
    if session.is_empty() {
        return Err(Error::EmptySession);
    }
    if snaplen < SYNTHETIC_HEADER_LEN {
        return Err(Error::InvalidParameter(format!(
            "snaplen {snaplen} cannot hold the {SYNTHETIC_HEADER_LEN}-byte synthetic headers"
        )));
    }
    let mut out = Vec::with_capacity(GLOBAL_HEADER_LEN + session.len() * (16 + 64));
    out.extend_from_slice(&PCAP_MAGIC_MICROS.to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&4u16.to_le_bytes());
    out.extend_from_slice(&0i32.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    out.extend_from_slice(&snaplen.to_le_bytes());
    out.extend_from_slice(&LINKTYPE_ETHERNET.to_le_bytes());

    for packet in session.packets() {
        let frame_len = packet.frame_length;
        if frame_len < SYNTHETIC_HEADER_LEN {
            return Err(Error::FrameTooSmall(frame_len));
        }
        let ip_total = frame_len - ETHERNET_HEADER_LEN as u32;
        if ip_total > u32::from(u16::MAX) {
            return Err(Error::FrameTooLarge(frame_len));
        }
        let micros = (packet.timestamp * 1e6).round();
        if !(0.0..=(u32::MAX as f64 * 1e6)).contains(&micros) {
            return Err(Error::InvalidParameter(format!(
                "timestamp {} does not fit a pcap record",
                packet.timestamp
            )));
        }
        let micros = micros as u64;
        let incl_len = frame_len.min(snaplen);
        out.extend_from_slice(&((micros / 1_000_000) as u32).to_le_bytes());
        out.extend_from_slice(&((micros % 1_000_000) as u32).to_le_bytes());
        out.extend_from_slice(&incl_len.to_le_bytes());
        out.extend_from_slice(&frame_len.to_le_bytes());

        let (src, dst) = match packet.direction {
            Direction::Uplink => (client, server),
            Direction::Downlink => (server, client),
        };
        let headers = synthetic_headers(src, dst, ip_total as u16, packet.direction);
        out.extend_from_slice(&headers);
        out.resize(out.len() + (incl_len - SYNTHETIC_HEADER_LEN) as usize, 0);
    }
    Ok(out)
}

fn synthetic_headers(
    src: Endpoint,
    dst: Endpoint,
    ip_total: u16,
    direction: Direction,
) -> [u8; 54] {
    const CLIENT_MAC: [u8; 6] = [0x02, 0, 0, 0, 0, 0x02];
    const SERVER_MAC: [u8; 6] = [0x02, 0, 0, 0, 0, 0x01];
    let (src_mac, dst_mac) = match direction {
        Direction::Uplink => (CLIENT_MAC, SERVER_MAC),
        Direction::Downlink => (SERVER_MAC, CLIENT_MAC),
    };

    let mut h = [0u8; 54];
    h[0..6].copy_from_slice(&dst_mac);
    h[6..12].copy_from_slice(&src_mac);
    h[12..14].copy_from_slice(&ETHERTYPE_IPV4.to_be_bytes());

    let ip = &mut h[14..34];
    ip[0] = 0x45;
    ip[2..4].copy_from_slice(&ip_total.to_be_bytes());
    ip[6..8].copy_from_slice(&0x4000u16.to_be_bytes()); // DF
    ip[8] = 64;
    ip[9] = IPPROTO_TCP;
    ip[12..16].copy_from_slice(&src.ip.octets());
    ip[16..20].copy_from_slice(&dst.ip.octets());
    let checksum = ipv4_checksum(ip);
    ip[10..12].copy_from_slice(&checksum.to_be_bytes());

    // sequence and acknowledgement numbers stay zero
    let tcp = &mut h[34..54];
    tcp[0..2].copy_from_slice(&src.port.to_be_bytes());
    tcp[2..4].copy_from_slice(&dst.port.to_be_bytes());
    tcp[12] = 5 << 4;
    tcp[13] = 0x18; // PSH | ACK
    tcp[14..16].copy_from_slice(&u16::MAX.to_be_bytes());
    h
}

fn ipv4_checksum(header: &[u8]) -> u16 {
    let mut sum: u32 = header
        .chunks_exact(2)
        .map(|w| u32::from(u16::from_be_bytes([w[0], w[1]])))
        .sum();
    while sum > 0xffff {
        sum = (sum & 0xffff) + (sum >> 16);
    }
    !(sum as u16)
}
