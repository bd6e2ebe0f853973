use std::fmt;
use std::fs;
use std::net::Ipv4Addr;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{generate_session, inject_noise, NoiseProfile, WorkloadProfile};
use crate::error::{Error, Result};
use crate::label::{Condition, Label};
use crate::rng::derive_seed;
use crate::trace::{write_pcap_with_snaplen, Endpoint};

pub const MANIFEST_HEADER: &str = "path,role,label,condition,seed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Train,
    Test,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Train => "train",
            Role::Test => "test",
        }
    }

    fn index(self) -> u64 {
        match self {
            Role::Train => 0,
            Role::Test => 1,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(Role::Train),
            "test" => Ok(Role::Test),
            _ => Err(format!("unknown role `{s}`")),
        }
    }
}

/// Session counts for one (role, label) cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitCounts {
    pub ideal: u32,
    pub noisy: u32,
}

impl SplitCounts {
    pub const fn new(ideal: u32, noisy: u32) -> Self {
        SplitCounts { ideal, noisy }
    }

    pub fn total(&self) -> u32 {
        self.ideal + self.noisy
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    pub base_seed: u64,
    pub train_cnn: SplitCounts,
    pub train_rnn: SplitCounts,
    pub test_cnn: SplitCounts,
    pub test_rnn: SplitCounts,
    pub server: Endpoint,
    pub client: Endpoint,
    /// Bytes captured per frame; `orig_len` always carries the full length.
    pub snaplen: u32,
}

impl CorpusSpec {
    pub const DEFAULT_SERVER: Endpoint = Endpoint::new(Ipv4Addr::new(10, 0, 0, 1), 8080);
    pub const DEFAULT_CLIENT: Endpoint = Endpoint::new(Ipv4Addr::new(10, 0, 0, 2), 5001);
    /// Enough for the synthetic headers plus a few payload bytes.
    pub const DEFAULT_SNAPLEN: u32 = 96;

    pub fn new(base_seed: u64) -> Self {
        CorpusSpec {
            base_seed,
            train_cnn: SplitCounts::new(4, 4),
            train_rnn: SplitCounts::new(4, 4),
            test_cnn: SplitCounts::new(6, 6),
            test_rnn: SplitCounts::new(6, 5),
            server: Self::DEFAULT_SERVER,
            client: Self::DEFAULT_CLIENT,
            snaplen: Self::DEFAULT_SNAPLEN,
        }
    }

    pub fn counts(&self, role: Role, label: Label) -> SplitCounts {
        match (role, label) {
            (Role::Train, Label::Cnn) => self.train_cnn,
            (Role::Train, Label::Rnn) => self.train_rnn,
            (Role::Test, Label::Cnn) => self.test_cnn,
            (Role::Test, Label::Rnn) => self.test_rnn,
        }
    }

    pub fn total(&self, role: Role) -> u32 {
        Label::ALL
            .iter()
            .map(|&l| self.counts(role, l).total())
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.server == self.client {
            return Err(Error::InvalidParameter(
                "server and client endpoints coincide".into(),
            ));
        }
        if self.snaplen < super::FRAME_OVERHEAD {
            return Err(Error::InvalidParameter(format!(
                "snaplen {} cannot hold the {}-byte synthetic headers",
                self.snaplen,
                super::FRAME_OVERHEAD
            )));
        }
        Ok(())
    }

    /// Session seed for the `index`-th session of a (role, label) cell.
    pub fn session_seed(&self, role: Role, label: Label, index: u32) -> u64 {
        derive_seed(
            self.base_seed,
            &[role.index(), label.index() as u64, u64::from(index)],
        )
    }

    /// Every session in generation order: role, label, then ideal before noisy.
    pub fn plan(&self) -> Vec<(Role, Label, Condition, u32)> {
        let mut out = Vec::new();
        for role in [Role::Train, Role::Test] {
            for label in Label::ALL {
                let c = self.counts(role, label);
                out.extend((0..c.ideal).map(|i| (role, label, Condition::Ideal, i)));
                out.extend((c.ideal..c.total()).map(|i| (role, label, Condition::Noisy, i)));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    /// Relative to the corpus root, `/`-separated.
    pub path: String,
    pub role: Role,
    pub label: Label,
    pub condition: Condition,
    pub seed: u64,
}

impl ManifestEntry {
    pub fn session_id(&self) -> String {
        self.path
            .rsplit('/')
            .next()
            .unwrap_or(&self.path)
            .trim_end_matches(".pcap")
            .to_string()
    }

    pub fn resolve(&self, root: &Path) -> PathBuf {
        self.path
            .split('/')
            .fold(root.to_path_buf(), |p, part| p.join(part))
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes every session of `spec` under `out` plus `manifest.csv`, returning
/// the manifest rows. Output bytes depend only on the arguments.
pub fn generate_corpus(
    spec: &CorpusSpec,
    out: &Path,
    cnn: &WorkloadProfile,
    rnn: &WorkloadProfile,
    noise: &NoiseProfile,
) -> Result<Vec<ManifestEntry>> {
    spec.validate()?;
    cnn.validate()?;
    rnn.validate()?;
    noise.validate()?;

    let mut manifest = Vec::new();
    let mut text = String::from(MANIFEST_HEADER);
    text.push('\n');
    for (role, label, condition, index) in spec.plan() {
        let profile = match label {
            Label::Cnn => cnn,
            Label::Rnn => rnn,
        };
        // Profiles carry their own label; the corpus cell decides.
        let profile = WorkloadProfile {
            label,
            ..profile.clone()
        };
        let seed = spec.session_seed(role, label, index);
        let mut session = generate_session(&profile, seed)?;
        if condition == Condition::Noisy {
            session = inject_noise(&session, noise, seed)?;
        }
        let rel = format!(
            "{}/{}_{}_{}.pcap",
            role,
            label.as_str().to_ascii_lowercase(),
            condition,
            index
        );
        let bytes = write_pcap_with_snaplen(&session, spec.server, spec.client, spec.snaplen)?;
        let entry = ManifestEntry {
            path: rel,
            role,
            label,
            condition,
            seed,
        };
        write_file(&entry.resolve(out), &bytes)?;
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            entry.path, role, label, condition, seed
        ));
        manifest.push(entry);
    }
    write_file(&out.join("manifest.csv"), text.as_bytes())?;
    Ok(manifest)
}

/// Parses a manifest written by [`generate_corpus`].
pub fn read_manifest(text: &str) -> Result<Vec<ManifestEntry>> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::RowParse {
        row: 0,
        reason: e.to_string(),
    })?;
    let found = headers.iter().collect::<Vec<_>>().join(",");
    if found != MANIFEST_HEADER {
        return Err(Error::SchemaMismatch {
            expected: MANIFEST_HEADER.to_string(),
            found,
        });
    }
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let bad = |reason: String| Error::RowParse { row, reason };
        let record = record.map_err(|e| bad(e.to_string()))?;
        if record.len() != 5 {
            return Err(bad(format!("expected 5 fields, found {}", record.len())));
        }
        out.push(ManifestEntry {
            path: record[0].to_string(),
            role: record[1].parse().map_err(bad)?,
            label: record[2].parse().map_err(bad)?,
            condition: record[3].parse().map_err(bad)?,
            seed: record[4].parse().map_err(|e| bad(format!("seed: {e}")))?,
        });
    }
    Ok(out)
}
