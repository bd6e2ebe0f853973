//! Run configuration: a TOML file overlaid by command-line flags.
//!
//! Every output lives under `out`. Input paths default to where the
//! previous pipeline stage writes them.

use std::path::{Path, PathBuf};

use flprint_core::classifiers::{ClassifierKind, ClassifierParams};
use flprint_core::features::{DEFAULT_BINS, DEFAULT_SELECT_K};
use flprint_core::synth::{
    browsing_noise, default_profiles, CorpusSpec, NoiseProfile, SplitCounts, WorkloadProfile,
};
use flprint_core::{CaptureConfig, Endpoint};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const DEFAULT_OUT: &str = "flprint-out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub paths: PathsConfig,
    pub capture: CaptureSection,
    pub synth: SynthSection,
    pub features: FeatureSection,
    pub train: TrainSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out: PathBuf::from(DEFAULT_OUT),
            paths: PathsConfig::default(),
            capture: CaptureSection::default(),
            synth: SynthSection::default(),
            features: FeatureSection::default(),
            train: TrainSection::default(),
        }
    }
}

/// Input overrides. Unset entries resolve under `out`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub corpus: Option<PathBuf>,
    pub train_features: Option<PathBuf>,
    pub test_features: Option<PathBuf>,
    pub model: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CaptureSection {
    /// `ip:port` of the aggregation server.
    pub server: String,
}

impl Default for CaptureSection {
    fn default() -> Self {
        CaptureSection {
            server: CorpusSpec::DEFAULT_SERVER.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    /// 1 keeps the default profiles apart; 0 merges them.
    pub separation: f64,
    pub train_cnn: SplitCounts,
    pub train_rnn: SplitCounts,
    pub test_cnn: SplitCounts,
    pub test_rnn: SplitCounts,
    pub client: String,
    pub snaplen: u32,
    /// Replace the built-in profiles entirely; `separation` then does not apply.
    pub cnn: Option<WorkloadProfile>,
    pub rnn: Option<WorkloadProfile>,
    pub noise: Option<NoiseProfile>,
}

impl Default for SynthSection {
    fn default() -> Self {
        let spec = CorpusSpec::new(0);
        SynthSection {
            separation: 1.0,
            train_cnn: spec.train_cnn,
            train_rnn: spec.train_rnn,
            test_cnn: spec.test_cnn,
            test_rnn: spec.test_rnn,
            client: spec.client.to_string(),
            snaplen: spec.snaplen,
            cnn: None,
            rnn: None,
            noise: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSection {
    pub bins: usize,
    /// Features kept after ranking.
    pub k: usize,
    /// Split each capture into windows of this many seconds.
    pub window: Option<f64>,
    /// Also report divergences of raw per-packet values.
    pub per_packet: bool,
}

impl Default for FeatureSection {
    fn default() -> Self {
        FeatureSection {
            bins: DEFAULT_BINS,
            k: DEFAULT_SELECT_K,
            window: None,
            per_packet: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub classifier: String,
    pub folds: usize,
    /// Replaces the classifier's default grid.
    pub grid: Option<Vec<ClassifierParams>>,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            classifier: ClassifierKind::Forest.as_str().to_string(),
            folds: 5,
            grid: None,
        }
    }
}

fn endpoint(field: &str, s: &str) -> CliResult<Endpoint> {
    s.parse()
        .map_err(|e| CliError::Config(format!("{field}: {e}")))
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn classifier(&self) -> CliResult<ClassifierKind> {
        self.train.classifier.parse().map_err(CliError::Config)
    }

    pub fn grid(&self) -> CliResult<Vec<ClassifierParams>> {
        let kind = self.classifier()?;
        match &self.train.grid {
            None => Ok(kind.default_grid()),
            Some(grid) => {
                if let Some(p) = grid.iter().find(|p| p.kind() != kind) {
                    return Err(CliError::Config(format!(
                        "grid entry for {} does not match classifier {kind}",
                        p.kind()
                    )));
                }
                Ok(grid.clone())
            }
        }
    }

    pub fn capture(&self) -> CliResult<CaptureConfig> {
        Ok(CaptureConfig::new(endpoint(
            "capture.server",
            &self.capture.server,
        )?))
    }

    pub fn corpus_spec(&self) -> CliResult<CorpusSpec> {
        let s = &self.synth;
        let spec = CorpusSpec {
            base_seed: self.seed,
            train_cnn: s.train_cnn,
            train_rnn: s.train_rnn,
            test_cnn: s.test_cnn,
            test_rnn: s.test_rnn,
            server: endpoint("capture.server", &self.capture.server)?,
            client: endpoint("synth.client", &s.client)?,
            snaplen: s.snaplen,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// (CNN, RNN, noise) profiles after applying overrides and separation.
    pub fn profiles(&self) -> CliResult<(WorkloadProfile, WorkloadProfile, NoiseProfile)> {
        let (cnn, rnn) = default_profiles(self.synth.separation)?;
        Ok((
            self.synth.cnn.clone().unwrap_or(cnn),
            self.synth.rnn.clone().unwrap_or(rnn),
            self.synth.noise.clone().unwrap_or_else(browsing_noise),
        ))
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.features.bins == 0 {
            return Err(CliError::Config("features.bins must be at least 1".into()));
        }
        if self.features.k == 0 {
            return Err(CliError::Config("features.k must be at least 1".into()));
        }
        if let Some(w) = self.features.window {
            if !(w.is_finite() && w > 0.0) {
                return Err(CliError::Config(format!(
                    "features.window {w} must be positive"
                )));
            }
        }
        if self.train.folds < 2 {
            return Err(CliError::Config("train.folds must be at least 2".into()));
        }
        self.grid()?;
        self.capture()?;
        Ok(())
    }

    pub fn corpus_dir(&self) -> PathBuf {
        self.paths
            .corpus
            .clone()
            .unwrap_or_else(|| self.out.join("corpus"))
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.corpus_dir().join("manifest.csv")
    }

    pub fn train_features(&self) -> PathBuf {
        self.paths
            .train_features
            .clone()
            .unwrap_or_else(|| self.out.join("features").join("train.csv"))
    }

    pub fn test_features(&self) -> PathBuf {
        self.paths
            .test_features
            .clone()
            .unwrap_or_else(|| self.out.join("features").join("test.csv"))
    }

    pub fn analysis_dir(&self) -> PathBuf {
        self.out.join("analysis")
    }

    pub fn model_path(&self, kind: ClassifierKind) -> PathBuf {
        self.paths
            .model
            .clone()
            .unwrap_or_else(|| self.out.join("models").join(format!("{kind}.json")))
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.out.join("reports")
    }
}
