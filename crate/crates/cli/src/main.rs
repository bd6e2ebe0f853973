use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use flprint_cli::commands::{self, ThresholdPolicy};
use flprint_cli::{CliError, CliResult, RunConfig};
use flprint_core::synth::SplitCounts;

/// Fingerprint the model architecture a federated-learning client trains
/// from packet sizes, directions and timing.
#[derive(Parser)]
#[command(name = "flprint", version)]
struct Cli {
    /// Seed for every random choice (corpus, folds, forests).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML run configuration; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct CorpusCounts {
    /// Training CNN captures (half noisy, rounded down).
    #[arg(long)]
    train_cnn: Option<u32>,
    #[arg(long)]
    train_rnn: Option<u32>,
    #[arg(long)]
    test_cnn: Option<u32>,
    #[arg(long)]
    test_rnn: Option<u32>,
    /// Profile separation in [0, 1].
    #[arg(long)]
    separation: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the labeled pcap corpus and its manifest.
    Synth(CorpusCounts),
    /// Parse every capture and write train/test feature CSVs.
    Extract {
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Split captures into windows of this many seconds.
        #[arg(long)]
        window: Option<f64>,
    },
    /// Rank features by Fisher score and dump class histograms.
    Analyze {
        #[arg(long)]
        train: Option<PathBuf>,
        #[arg(long)]
        bins: Option<usize>,
        /// Also compare raw per-packet distributions from the corpus.
        #[arg(long)]
        per_packet: bool,
    },
    /// Select features, grid-search with cross-validation, save the model.
    Train {
        #[arg(long)]
        train: Option<PathBuf>,
        /// forest, svm or gbm.
        #[arg(long)]
        clf: Option<String>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        bins: Option<usize>,
    },
    /// Score a saved model on the test features.
    Evaluate {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long)]
        clf: Option<String>,
    },
    /// Print `label score` for each capture.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(required = true)]
        pcaps: Vec<PathBuf>,
    },
    /// Run the whole experiment and check the accuracy thresholds.
    Reproduce {
        #[command(flatten)]
        counts: CorpusCounts,
        #[arg(long, value_enum, default_value_t)]
        threshold_policy: ThresholdPolicy,
    },
}

fn split(total: u32) -> SplitCounts {
    SplitCounts::new(total - total / 2, total / 2)
}

fn apply_counts(cfg: &mut RunConfig, c: &CorpusCounts) {
    let s = &mut cfg.synth;
    for (flag, slot) in [
        (c.train_cnn, &mut s.train_cnn),
        (c.train_rnn, &mut s.train_rnn),
        (c.test_cnn, &mut s.test_cnn),
        (c.test_rnn, &mut s.test_rnn),
    ] {
        if let Some(n) = flag {
            *slot = split(n);
        }
    }
    if let Some(sep) = c.separation {
        s.separation = sep;
    }
}

fn print(lines: &[String]) {
    for line in lines {
        println!("{line}");
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.out = out;
    }
    match cli.command {
        Command::Synth(counts) => {
            apply_counts(&mut cfg, &counts);
            let s = commands::synth(&cfg)?;
            for w in &s.warnings {
                eprintln!("warning: {w}");
            }
            print(&s.lines());
            println!("manifest: {}", s.manifest.display());
        }
        Command::Extract { corpus, window } => {
            if corpus.is_some() {
                cfg.paths.corpus = corpus;
            }
            if window.is_some() {
                cfg.features.window = window;
            }
            let s = commands::extract(&cfg)?;
            print(&s.lines());
            println!("train: {}", s.train.display());
            println!("test: {}", s.test.display());
            if !s.failures.is_empty() {
                return Err(CliError::Data(format!(
                    "{} capture(s) failed:\n{}",
                    s.failures.len(),
                    s.failures.join("\n")
                )));
            }
        }
        Command::Analyze {
            train,
            bins,
            per_packet,
        } => {
            if train.is_some() {
                cfg.paths.train_features = train;
            }
            if let Some(b) = bins {
                cfg.features.bins = b;
            }
            cfg.features.per_packet |= per_packet;
            let s = commands::analyze(&cfg)?;
            print(&s.lines());
            println!("ranking: {}", s.ranking.display());
            println!("histograms: {}", s.histograms.display());
            if let Some(p) = s.packet_divergence {
                println!("packet divergence: {}", p.display());
            }
        }
        Command::Train {
            train,
            clf,
            k,
            folds,
            bins,
        } => {
            if train.is_some() {
                cfg.paths.train_features = train;
            }
            if let Some(c) = clf {
                cfg.train.classifier = c;
            }
            if let Some(k) = k {
                cfg.features.k = k;
            }
            if let Some(f) = folds {
                cfg.train.folds = f;
            }
            if let Some(b) = bins {
                cfg.features.bins = b;
            }
            let s = commands::train(&cfg)?;
            print(&s.lines());
            println!("model: {}", s.model.display());
            println!("cv table: {}", s.cv_table.display());
        }
        Command::Evaluate { model, test, clf } => {
            if model.is_some() {
                cfg.paths.model = model;
            }
            if test.is_some() {
                cfg.paths.test_features = test;
            }
            if let Some(c) = clf {
                cfg.train.classifier = c;
            }
            let s = commands::evaluate_cmd(&cfg)?;
            print(&s.lines());
            println!("report: {}", s.report_path.display());
        }
        Command::Predict { model, pcaps } => {
            print(&commands::predict(&cfg, &model, &pcaps)?);
        }
        Command::Reproduce {
            counts,
            threshold_policy,
        } => {
            apply_counts(&mut cfg, &counts);
            let s = commands::reproduce(&cfg)?;
            print!("{}", s.text);
            if !s.failures.is_empty() && threshold_policy == ThresholdPolicy::Enforce {
                return Err(CliError::Threshold(s.failures.join("; ")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
