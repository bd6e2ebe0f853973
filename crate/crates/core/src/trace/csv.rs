//! Per-packet CSV exchange format.

use std::fmt::Write as _;

use super::{Direction, PacketRecord, TraceSession};
use crate::error::{Error, Result};
use crate::label::Condition;

pub const CSV_HEADER: &str = "timestamp_s,frame_len_bytes,direction,interarrival_s";

/// Formats `x` in positional notation with at least six fractional digits,
/// without losing round-trip precision.
pub(crate) fn fmt_seconds(x: f64) -> String {
    let mut s = format!("{x}");
    let frac = match s.find('.') {
        Some(dot) => s.len() - dot - 1,
        None => {
            s.push('.');
            0
        }
    };
    for _ in frac..6 {
        s.push('0');
    }
    s
}

pub fn write_csv(session: &TraceSession) -> Result<String> {
    if session.is_empty() {
        return Err(Error::EmptySession);
    }
    let mut out = String::with_capacity(32 * (session.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    let mut previous: Option<f64> = None;
    for p in session.packets() {
        let dir = match p.direction {
            Direction::Uplink => "+1",
            Direction::Downlink => "-1",
        };
        let ia = previous
            .map(|t| fmt_seconds(p.timestamp - t))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{dir},{ia}",
            fmt_seconds(p.timestamp),
            p.frame_length
        );
        previous = Some(p.timestamp);
    }
    Ok(out)
}

pub fn read_csv(text: &str) -> Result<TraceSession> {
    let mut lines = text.lines().enumerate();
    let header = lines.next().map(|(_, l)| l.trim()).unwrap_or_default();
    if header != CSV_HEADER {
        return Err(Error::SchemaMismatch {
            expected: CSV_HEADER.to_string(),
            found: header.to_string(),
        });
    }

    let mut packets = Vec::new();
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row_err = |reason: String| Error::RowParse { row: idx, reason };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if !(3..=4).contains(&fields.len()) {
            return Err(row_err(format!(
                "expected 3 or 4 fields, found {}",
                fields.len()
            )));
        }
        let timestamp: f64 = fields[0]
            .parse()
            .map_err(|e| row_err(format!("timestamp `{}`: {e}", fields[0])))?;
        let frame_length: u32 = fields[1]
            .parse()
            .map_err(|e| row_err(format!("frame length `{}`: {e}", fields[1])))?;
        let direction = match fields[2] {
            "+1" | "1" => Direction::Uplink,
            "-1" => Direction::Downlink,
            other => return Err(row_err(format!("direction `{other}` is not +1 or -1"))),
        };
        let record = PacketRecord::new(timestamp, frame_length, direction)
            .map_err(|e| row_err(e.to_string()))?;
        packets.push(record);
    }
    if packets.is_empty() {
        return Err(Error::EmptySession);
    }
    Ok(TraceSession::new("", packets, None, Condition::Ideal))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_rows() {
        let text = format!("{CSV_HEADER}\n0.0,1514,+1,\n0.1,66,-1,0.1\n");
        let s = read_csv(&text).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.packets()[0].frame_length, 1514);
        assert_eq!(s.packets()[0].direction, Direction::Uplink);
        assert_eq!(s.packets()[1].timestamp, 0.1);
        assert_eq!(s.packets()[1].direction, Direction::Downlink);
    }

    #[test]
    fn wrong_header() {
        assert!(matches!(
            read_csv("time,len\n0,1\n"),
            Err(Error::SchemaMismatch { .. })
        ));
        assert!(matches!(read_csv(""), Err(Error::SchemaMismatch { .. })));
    }

    #[test]
    fn zero_length_frame_is_a_row_error() {
        let text = format!("{CSV_HEADER}\n0.0,100,+1,\n0.5,0,-1,0.5\n");
        assert!(matches!(
            read_csv(&text),
            Err(Error::RowParse { row: 2, .. })
        ));
    }

    #[test]
    fn malformed_rows() {
        for row in ["x,1,+1,", "0.0,1,0,", "0.0,1", "0.0,-5,+1,"] {
            let text = format!("{CSV_HEADER}\n{row}\n");
            assert!(
                matches!(read_csv(&text), Err(Error::RowParse { .. })),
                "{row}"
            );
        }
        assert!(matches!(
            read_csv(&format!("{CSV_HEADER}\n")),
            Err(Error::EmptySession)
        ));
    }

    #[test]
    fn interarrival_column() {
        let packets = [0.0, 0.5, 1.5]
            .iter()
            .map(|&t| PacketRecord::new(t, 100, Direction::Uplink).unwrap())
            .collect();
        let s = TraceSession::new("x", packets, None, Condition::Ideal);
        let text = write_csv(&s).unwrap();
        let ia: Vec<&str> = text
            .lines()
            .skip(1)
            .map(|l| l.rsplit(',').next().unwrap())
            .collect();
        assert_eq!(ia[0], "");
        assert_eq!(ia[1].parse::<f64>().unwrap(), 0.5);
        assert_eq!(ia[2].parse::<f64>().unwrap(), 1.0);
        assert!(text.lines().nth(1).unwrap().starts_with("0.000000,"));
    }

    #[test]
    fn single_packet_row() {
        let s = TraceSession::new(
            "x",
            vec![PacketRecord::new(0.0, 60, Direction::Downlink).unwrap()],
            None,
            Condition::Ideal,
        );
        assert_eq!(
            write_csv(&s).unwrap(),
            format!("{CSV_HEADER}\n0.000000,60,-1,\n")
        );
        let empty = TraceSession::new("e", vec![], None, Condition::Ideal);
        assert!(matches!(write_csv(&empty), Err(Error::EmptySession)));
    }

    #[test]
    fn seconds_formatting() {
        assert_eq!(fmt_seconds(0.5), "0.500000");
        assert_eq!(fmt_seconds(3.0), "3.000000");
        assert_eq!(fmt_seconds(1e-7), "0.0000001");
        assert_eq!(fmt_seconds(0.1 + 0.2).parse::<f64>().unwrap(), 0.1 + 0.2);
    }
}
