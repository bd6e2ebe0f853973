//! Synthetic federated-learning traffic.
//!
//! A session is a sequence of rounds. Each round is a downlink burst (the
//! global model), a local-compute pause, then an uplink burst (the update).
//! Profiles differ in how frames are sized and how tightly they are paced.
//! Timestamps are generated on a microsecond grid so sessions survive a
//! pcap round trip bit for bit.

mod corpus;
mod dist;

use rand::Rng;
use rand_distr::{Distribution as _, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::{Condition, Label};
use crate::rng::stream;
use crate::trace::{Direction, PacketRecord, TraceSession};

pub use self::corpus::{
    generate_corpus, read_manifest, CorpusSpec, ManifestEntry, Role, SplitCounts, MANIFEST_HEADER,
};
pub use self::dist::Distribution;
pub use crate::trace::{write_pcap, write_pcap_with_snaplen};

pub const MIN_FRAME: u32 = 55;
pub const MAX_FRAME: u32 = 1514;
/// Ethernet + IPv4 + TCP header bytes added to every payload.
pub const FRAME_OVERHEAD: u32 = 54;
const MAX_PAYLOAD: u32 = MAX_FRAME - FRAME_OVERHEAD;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadProfile {
    pub label: Label,
    /// Global rounds per session.
    pub rounds: u32,
    /// Bytes of model sent to the client each round.
    pub downlink_bytes: u64,
    /// Bytes of update sent back each round.
    pub uplink_bytes: u64,
    /// Payload bytes per frame.
    pub frame_payload: Distribution,
    /// Per-session multiplier on every sampled payload, drawn once per session.
    #[serde(default = "unit_scale")]
    pub payload_scale: Distribution,
    /// Seconds between consecutive frames of a burst.
    pub intra_burst_gap: Distribution,
    /// Seconds of local training between the downlink and uplink bursts.
    pub compute_gap: Distribution,
}

fn unit_scale() -> Distribution {
    Distribution::Constant { value: 1.0 }
}

impl WorkloadProfile {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::InvalidProfile("rounds must be at least 1".into()));
        }
        if self.downlink_bytes == 0 || self.uplink_bytes == 0 {
            return Err(Error::InvalidProfile(
                "byte volumes must be at least 1".into(),
            ));
        }
        for (name, d) in [
            ("frame_payload", &self.frame_payload),
            ("payload_scale", &self.payload_scale),
            ("intra_burst_gap", &self.intra_burst_gap),
            ("compute_gap", &self.compute_gap),
        ] {
            d.validate()
                .map_err(|e| Error::InvalidProfile(format!("{name}: {e}")))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseProfile {
    /// Poisson rate in packets per second.
    pub rate: f64,
    /// On-wire frame bytes.
    pub size: Distribution,
    /// Probability that a noise packet is uplink.
    pub direction_bias: f64,
}

impl NoiseProfile {
    pub fn validate(&self) -> Result<()> {
        if !(self.rate >= 0.0 && self.rate.is_finite()) {
            return Err(Error::InvalidProfile(format!(
                "noise rate {} must be >= 0",
                self.rate
            )));
        }
        if !(0.0..=1.0).contains(&self.direction_bias) {
            return Err(Error::InvalidProfile(format!(
                "direction_bias {} must lie in [0, 1]",
                self.direction_bias
            )));
        }
        self.size
            .validate()
            .map_err(|e| Error::InvalidProfile(format!("noise size: {e}")))
    }
}

fn to_micros(seconds: f64) -> u64 {
    (seconds * 1e6).round().max(1.0) as u64
}

/// Appends one burst. The first frame follows `lead_gap` when given, else
/// an intra-burst gap; the session's very first frame sits at time zero.
#[allow(clippy::too_many_arguments)]
fn emit_burst<R: rand::Rng>(
    profile: &WorkloadProfile,
    scale: f64,
    rng: &mut R,
    direction: Direction,
    bytes: u64,
    mut lead_gap: Option<u64>,
    clock: &mut u64,
    packets: &mut Vec<PacketRecord>,
) -> Result<()> {
    let mut remaining = bytes;
    while remaining > 0 {
        let sampled = (profile.frame_payload.sample(rng)? * scale).round();
        let payload = (sampled.clamp(1.0, f64::from(MAX_PAYLOAD)) as u64).min(remaining);
        remaining -= payload;
        if !packets.is_empty() {
            *clock += match lead_gap.take() {
                Some(gap) => gap,
                None => to_micros(profile.intra_burst_gap.sample(rng)?),
            };
        }
        let frame = (payload as u32 + FRAME_OVERHEAD).clamp(MIN_FRAME, MAX_FRAME);
        packets.push(PacketRecord {
            timestamp: *clock as f64 / 1e6,
            frame_length: frame,
            direction,
        });
    }
    Ok(())
}

/// Generates one labeled session. Identical `(profile, seed)` pairs give
/// identical sessions.
pub fn generate_session(profile: &WorkloadProfile, seed: u64) -> Result<TraceSession> {
    profile.validate()?;
    let mut rng = stream(seed, 0);
    let scale = profile.payload_scale.sample(&mut rng)?;

    let mut packets = Vec::new();
    let mut clock: u64 = 0;
    for _ in 0..profile.rounds {
        emit_burst(
            profile,
            scale,
            &mut rng,
            Direction::Downlink,
            profile.downlink_bytes,
            None,
            &mut clock,
            &mut packets,
        )?;
        let compute = to_micros(profile.compute_gap.sample(&mut rng)?);
        emit_burst(
            profile,
            scale,
            &mut rng,
            Direction::Uplink,
            profile.uplink_bytes,
            Some(compute),
            &mut clock,
            &mut packets,
        )?;
    }
    Ok(TraceSession::new(
        format!("{}_{seed:016x}", profile.label),
        packets,
        Some(profile.label),
        Condition::Ideal,
    ))
}

/// Superimposes Poisson background packets over the session's time span.
/// The result is marked [`Condition::Noisy`] even when the rate is zero.
pub fn inject_noise(
    session: &TraceSession,
    noise: &NoiseProfile,
    seed: u64,
) -> Result<TraceSession> {
    noise.validate()?;
    let mut out = session.clone().with_condition(Condition::Noisy);
    if noise.rate == 0.0 || session.is_empty() {
        return Ok(out);
    }
    let packets = session.packets();
    let start = packets[0].timestamp;
    let end = packets[packets.len() - 1].timestamp;
    let mut rng = stream(seed, 1);
    let arrivals =
        Exp::new(noise.rate).map_err(|e| Error::InvalidProfile(format!("noise rate: {e}")))?;

    let mut merged = packets.to_vec();
    let mut t = start;
    loop {
        t += arrivals.sample(&mut rng);
        if t > end {
            break;
        }
        let frame = noise
            .size
            .sample(&mut rng)?
            .round()
            .clamp(f64::from(MIN_FRAME), f64::from(MAX_FRAME)) as u32;
        let direction = if rng.random::<f64>() < noise.direction_bias {
            Direction::Uplink
        } else {
            Direction::Downlink
        };
        merged.push(PacketRecord {
            timestamp: ((t * 1e6).round() / 1e6).clamp(start, end),
            frame_length: frame,
            direction,
        });
    }
    out = TraceSession::new(out.session_id, merged, out.label, Condition::Noisy);
    Ok(out)
}

/// Default CNN-like profile: near-MTU frames, heavy-tailed pacing, long
/// local-compute pauses.
pub fn cnn_profile() -> WorkloadProfile {
    WorkloadProfile {
        label: Label::Cnn,
        rounds: 4,
        downlink_bytes: 1_000_000,
        uplink_bytes: 1_000_000,
        frame_payload: Distribution::TruncatedNormal {
            mean: 1380.0,
            std: 60.0,
            lo: 1000.0,
            hi: 1460.0,
        },
        payload_scale: Distribution::TruncatedNormal {
            mean: 1.0,
            std: 0.12,
            lo: 0.8,
            hi: 1.2,
        },
        intra_burst_gap: Distribution::LogNormal {
            mu: (5e-4f64).ln(),
            sigma: 1.5,
        },
        compute_gap: Distribution::Uniform { lo: 6.0, hi: 12.0 },
    }
}

/// Default RNN-like profile: widely spread frame sizes, tightly regular
/// pacing, short local-compute pauses.
pub fn rnn_profile() -> WorkloadProfile {
    WorkloadProfile {
        label: Label::Rnn,
        rounds: 4,
        downlink_bytes: 1_000_000,
        uplink_bytes: 1_000_000,
        frame_payload: Distribution::TruncatedNormal {
            mean: 1350.0,
            std: 300.0,
            lo: 200.0,
            hi: 1460.0,
        },
        payload_scale: Distribution::TruncatedNormal {
            mean: 1.0,
            std: 0.12,
            lo: 0.8,
            hi: 1.2,
        },
        intra_burst_gap: Distribution::TruncatedNormal {
            mean: 4e-4,
            std: 5e-5,
            lo: 2e-4,
            hi: 6e-4,
        },
        compute_gap: Distribution::Uniform { lo: 2.0, hi: 4.0 },
    }
}

/// Background browsing traffic.
pub fn browsing_noise() -> NoiseProfile {
    NoiseProfile {
        rate: 0.5,
        size: Distribution::Uniform {
            lo: 60.0,
            hi: 1514.0,
        },
        direction_bias: 0.3,
    }
}

/// Pulls two profiles towards each other. `separation = 1` returns them
/// unchanged; `0` makes both the same 50/50 blend.
pub fn blend_profiles(
    own: &WorkloadProfile,
    other: &WorkloadProfile,
    separation: f64,
) -> Result<WorkloadProfile> {
    if !(0.0..=1.0).contains(&separation) {
        return Err(Error::InvalidProfile(format!(
            "separation {separation} must lie in [0, 1]"
        )));
    }
    if separation == 1.0 {
        return Ok(own.clone());
    }
    let lerp = |a: f64, b: f64| {
        let mid = 0.5 * (a + b);
        mid + separation * (a - mid)
    };
    let weight = 0.5 * (1.0 + separation);
    let mix = |a: &Distribution, b: &Distribution| Distribution::Mixture {
        weight,
        first: Box::new(a.clone()),
        second: Box::new(b.clone()),
    };
    Ok(WorkloadProfile {
        label: own.label,
        rounds: lerp(f64::from(own.rounds), f64::from(other.rounds))
            .round()
            .max(1.0) as u32,
        downlink_bytes: lerp(own.downlink_bytes as f64, other.downlink_bytes as f64)
            .round()
            .max(1.0) as u64,
        uplink_bytes: lerp(own.uplink_bytes as f64, other.uplink_bytes as f64)
            .round()
            .max(1.0) as u64,
        frame_payload: mix(&own.frame_payload, &other.frame_payload),
        payload_scale: mix(&own.payload_scale, &other.payload_scale),
        intra_burst_gap: mix(&own.intra_burst_gap, &other.intra_burst_gap),
        compute_gap: mix(&own.compute_gap, &other.compute_gap),
    })
}

/// Default (CNN, RNN) profiles at the given separation.
pub fn default_profiles(separation: f64) -> Result<(WorkloadProfile, WorkloadProfile)> {
    let (cnn, rnn) = (cnn_profile(), rnn_profile());
    Ok((
        blend_profiles(&cnn, &rnn, separation)?,
        blend_profiles(&rnn, &cnn, separation)?,
    ))
}
