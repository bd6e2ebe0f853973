//! One function per subcommand. Each returns what it wrote plus the lines
//! to print; nothing here touches stdout.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use flprint_core::classifiers::{
    grid_search_cv, load_model, save_model, train as train_model, ClassifierKind, Model,
};
use flprint_core::eval::{
    display2, display_percent, evaluate, render_table, report_json, EvaluationReport,
};
use flprint_core::features::{
    build_dataset, extract_features, packet_level_divergence, rank_features, select_features,
    FeatureSchema, LabeledDataset, PacketSeries, FEATURE_NAMES,
};
use flprint_core::synth::{generate_corpus, read_manifest, ManifestEntry, Role};
use flprint_core::trace::{parse_pcap, segment_session};
use flprint_core::{Error, Label, TraceSession};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e).into())
}

fn require(path: &Path, what: &str) -> CliResult<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "{what} {} does not exist",
            path.display()
        )))
    }
}

fn read(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e).into())
}

fn ids_path(csv: &Path) -> PathBuf {
    csv.with_extension("ids")
}

/// Loads a feature CSV and its `.ids` sidecar when present.
pub fn load_features(path: &Path) -> CliResult<LabeledDataset> {
    require(path, "feature file")?;
    let text = String::from_utf8(read(path)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let ids = match fs::read_to_string(ids_path(path)) {
        Ok(s) => Some(s.lines().map(str::to_string).collect()),
        Err(_) => None,
    };
    LabeledDataset::from_csv(&text, ids)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn save_features(path: &Path, data: Option<&LabeledDataset>) -> CliResult<()> {
    match data {
        Some(ds) => {
            write(path, ds.to_csv())?;
            let mut ids = ds.ids().join("\n");
            ids.push('\n');
            write(&ids_path(path), ids)
        }
        None => {
            write(path, format!("{},label\n", FEATURE_NAMES.join(",")))?;
            write(&ids_path(path), "")
        }
    }
}

pub struct SynthSummary {
    pub manifest: PathBuf,
    pub train: usize,
    pub test: usize,
    pub warnings: Vec<String>,
}

impl SynthSummary {
    pub fn lines(&self) -> Vec<String> {
        vec![format!("train:{} test:{}", self.train, self.test)]
    }
}

pub fn synth(cfg: &RunConfig) -> CliResult<SynthSummary> {
    let spec = cfg.corpus_spec()?;
    let (cnn, rnn, noise) = cfg.profiles()?;
    let out = cfg.corpus_dir();
    let manifest = generate_corpus(&spec, &out, &cnn, &rnn, &noise)?;
    let count = |role| manifest.iter().filter(|e| e.role == role).count();
    let (train, test) = (count(Role::Train), count(Role::Test));
    let mut warnings = Vec::new();
    if train == 0 {
        warnings.push("training set is empty".to_string());
    }
    if test == 0 {
        warnings.push("test set is empty".to_string());
    }
    Ok(SynthSummary {
        manifest: out.join("manifest.csv"),
        train,
        test,
        warnings,
    })
}

pub fn load_manifest(cfg: &RunConfig) -> CliResult<Vec<ManifestEntry>> {
    let path = cfg.manifest_path();
    require(&path, "manifest")?;
    let text = String::from_utf8(read(&path)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    read_manifest(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn load_capture(cfg: &RunConfig, entry: &ManifestEntry) -> CliResult<TraceSession> {
    let path = entry.resolve(&cfg.corpus_dir());
    let raw = read(&path)?;
    let mut session = parse_pcap(&raw, &cfg.capture()?)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    session.session_id = entry.session_id();
    Ok(session
        .with_label(entry.label)
        .with_condition(entry.condition))
}

/// Sessions of one role, in manifest order, with per-file failures.
pub fn load_sessions(cfg: &RunConfig, role: Role) -> CliResult<(Vec<TraceSession>, Vec<String>)> {
    let mut sessions = Vec::new();
    let mut failures = Vec::new();
    for entry in load_manifest(cfg)?.iter().filter(|e| e.role == role) {
        match load_capture(cfg, entry) {
            Ok(s) => sessions.push(s),
            Err(e) => failures.push(format!("{}: {e}", entry.path)),
        }
    }
    Ok((sessions, failures))
}

pub struct ExtractSummary {
    pub train: PathBuf,
    pub test: PathBuf,
    pub train_rows: usize,
    pub test_rows: usize,
    /// Windows too short to yield interarrival features.
    pub skipped_windows: usize,
    pub failures: Vec<String>,
}

impl ExtractSummary {
    pub fn lines(&self) -> Vec<String> {
        let mut out = vec![format!(
            "train rows:{} test rows:{}",
            self.train_rows, self.test_rows
        )];
        if self.skipped_windows > 0 {
            out.push(format!(
                "skipped {} windows with fewer than 2 packets",
                self.skipped_windows
            ));
        }
        out
    }
}

/// Writes train and test feature CSVs. Files that fail to parse are left
/// out and reported; the remaining rows are still written.
pub fn extract(cfg: &RunConfig) -> CliResult<ExtractSummary> {
    cfg.validate()?;
    let mut failures = Vec::new();
    let mut skipped_windows = 0;
    let mut rows = [0usize; 2];
    let paths = [cfg.train_features(), cfg.test_features()];
    for (slot, role) in [Role::Train, Role::Test].into_iter().enumerate() {
        let (sessions, failed) = load_sessions(cfg, role)?;
        failures.extend(failed);
        let units = match cfg.features.window {
            None => sessions,
            Some(w) => {
                let mut windows = Vec::new();
                for s in &sessions {
                    for seg in segment_session(s, w)? {
                        if seg.len() < 2 {
                            skipped_windows += 1;
                        } else {
                            windows.push(seg);
                        }
                    }
                }
                windows
            }
        };
        let mut usable = Vec::with_capacity(units.len());
        for s in units {
            match extract_features(&s) {
                Ok(_) => usable.push(s),
                Err(e) => failures.push(format!("{}: {e}", s.session_id)),
            }
        }
        rows[slot] = usable.len();
        let ds = if usable.is_empty() {
            None
        } else {
            Some(build_dataset(&usable)?)
        };
        save_features(&paths[slot], ds.as_ref())?;
    }
    let [train, test] = paths;
    Ok(ExtractSummary {
        train,
        test,
        train_rows: rows[0],
        test_rows: rows[1],
        skipped_windows,
        failures,
    })
}

pub struct AnalyzeSummary {
    pub ranking: PathBuf,
    pub histograms: PathBuf,
    pub packet_divergence: Option<PathBuf>,
    /// (name, fisher, kl CNN||RNN) in rank order.
    pub order: Vec<(String, f64, f64)>,
}

impl AnalyzeSummary {
    pub fn lines(&self) -> Vec<String> {
        self.order
            .iter()
            .enumerate()
            .map(|(i, (name, fisher, kl))| {
                format!("{:>2} {name:<14} fisher={fisher:.6} kl={kl:.6}", i + 1)
            })
            .collect()
    }
}

pub fn analyze(cfg: &RunConfig) -> CliResult<AnalyzeSummary> {
    cfg.validate()?;
    let train = load_features(&cfg.train_features())?;
    let ranking = rank_features(&train, cfg.features.bins)?;
    let dir = cfg.analysis_dir();
    let ranking_path = dir.join("ranking.csv");
    let histograms = dir.join("histograms.csv");
    write(&ranking_path, ranking.to_report())?;
    write(&histograms, ranking.histogram_dump())?;

    let packet_divergence = if cfg.features.per_packet {
        let (sessions, failures) = load_sessions(cfg, Role::Train)?;
        if !failures.is_empty() {
            return Err(CliError::Data(failures.join("\n")));
        }
        let mut text = String::from("series,kl_cnn_rnn,kl_rnn_cnn\n");
        for (name, series) in [
            ("frame_length", PacketSeries::FrameLength),
            ("interarrival", PacketSeries::Interarrival),
        ] {
            let (ab, ba) = packet_level_divergence(&sessions, series, cfg.features.bins)?;
            let _ = writeln!(text, "{name},{ab},{ba}");
        }
        let path = dir.join("packet_divergence.csv");
        write(&path, text)?;
        Some(path)
    } else {
        None
    };
    Ok(AnalyzeSummary {
        ranking: ranking_path,
        histograms,
        packet_divergence,
        order: ranking
            .records
            .iter()
            .map(|r| (r.name.clone(), r.fisher, r.kl_ab))
            .collect(),
    })
}

#[derive(Serialize)]
struct RunRecord<'a> {
    seed: u64,
    classifier: ClassifierKind,
    k: usize,
    bins: usize,
    folds: usize,
    chosen_index: usize,
    chosen: String,
    cv_mean_accuracy: f64,
    features: &'a [String],
}

pub struct TrainSummary {
    pub kind: ClassifierKind,
    pub model: PathBuf,
    pub cv_table: PathBuf,
    pub chosen: String,
    pub cv_accuracy: f64,
    pub features: Vec<String>,
    pub grid_size: usize,
}

impl TrainSummary {
    pub fn lines(&self) -> Vec<String> {
        vec![
            format!("features: {}", self.features.join(",")),
            format!(
                "{}: chose {} (cv accuracy {}) from {} grid points",
                self.kind.display_name(),
                self.chosen,
                display_percent(self.cv_accuracy),
                self.grid_size
            ),
        ]
    }
}

pub fn train(cfg: &RunConfig) -> CliResult<TrainSummary> {
    cfg.validate()?;
    let kind = cfg.classifier()?;
    let grid = cfg.grid()?;
    let data = load_features(&cfg.train_features())?;
    let selected = select_features(&data, cfg.features.k, cfg.features.bins)?;
    let cv = grid_search_cv(&selected, &grid, cfg.train.folds, cfg.seed)?;
    let model = train_model(&selected, cv.best(), cfg.seed)?;

    let model_path = cfg.model_path(kind);
    write(&model_path, save_model(&model)?)?;
    let cv_table = model_path.with_file_name(format!("{kind}_cv.csv"));
    write(&cv_table, cv.to_table())?;
    let features = selected.schema().names().to_vec();
    let record = RunRecord {
        seed: cfg.seed,
        classifier: kind,
        k: cfg.features.k,
        bins: cfg.features.bins,
        folds: cv.k_folds,
        chosen_index: cv.chosen,
        chosen: cv.best().describe(),
        cv_mean_accuracy: cv.mean_accuracy[cv.chosen],
        features: &features,
    };
    let run = serde_json::to_string_pretty(&record).expect("run record serializes") + "\n";
    write(&model_path.with_file_name(format!("{kind}_run.json")), run)?;
    Ok(TrainSummary {
        kind,
        model: model_path,
        cv_table,
        chosen: record.chosen,
        cv_accuracy: record.cv_mean_accuracy,
        features,
        grid_size: grid.len(),
    })
}

pub fn load_model_file(path: &Path) -> CliResult<Model> {
    require(path, "model file")?;
    load_model(&read(path)?).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub struct EvaluateSummary {
    pub kind: ClassifierKind,
    pub report_path: PathBuf,
    pub report: EvaluationReport,
}

impl EvaluateSummary {
    pub fn lines(&self) -> Vec<String> {
        render_table(&[(self.kind.display_name(), &self.report)])
            .lines()
            .map(str::to_string)
            .collect()
    }
}

/// Evaluates the model on the test CSV after projecting it onto the
/// model's feature names.
pub fn evaluate_model(cfg: &RunConfig, model_path: &Path) -> CliResult<EvaluateSummary> {
    let model = load_model_file(model_path)?;
    let test = load_features(&cfg.test_features())?.project(model.schema())?;
    let report = evaluate(&model, &test)?;
    let kind = model.kind();
    let dir = cfg.reports_dir();
    let report_path = dir.join(format!("{kind}.json"));
    write(&report_path, report_json(&report))?;
    write(
        &dir.join(format!("{kind}.txt")),
        render_table(&[(kind.display_name(), &report)]),
    )?;
    Ok(EvaluateSummary {
        kind,
        report_path,
        report,
    })
}

pub fn evaluate_cmd(cfg: &RunConfig) -> CliResult<EvaluateSummary> {
    cfg.validate()?;
    evaluate_model(cfg, &cfg.model_path(cfg.classifier()?))
}

/// One `label score` line per capture.
pub fn predict(cfg: &RunConfig, model_path: &Path, pcaps: &[PathBuf]) -> CliResult<Vec<String>> {
    let model = load_model_file(model_path)?;
    let capture = cfg.capture()?;
    let full = FeatureSchema::full();
    let mut lines = Vec::with_capacity(pcaps.len());
    for path in pcaps {
        require(path, "capture")?;
        let session = parse_pcap(&read(path)?, &capture)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let features = extract_features(&session)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
            .to_array();
        let row = model
            .schema()
            .names()
            .iter()
            .map(|name| {
                full.position(name)
                    .map(|i| features[i])
                    .ok_or_else(|| Error::MissingFeature(name.clone()))
            })
            .collect::<Result<Vec<f64>, Error>>()?;
        let p = model.predict(&row)?;
        lines.push(format!("{} {:.6}", p.label, p.score));
    }
    Ok(lines)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum ThresholdPolicy {
    /// Exit with code 3 when a threshold is missed.
    #[default]
    Enforce,
    /// Print the verdict but exit 0.
    Report,
}

pub struct ReproduceSummary {
    pub text: String,
    pub reports: Vec<(ClassifierKind, EvaluationReport)>,
    pub failures: Vec<String>,
}

/// Maximum test errors allowed per classifier.
pub fn error_budget(kind: ClassifierKind) -> u64 {
    match kind {
        ClassifierKind::Forest => 0,
        ClassifierKind::Svm | ClassifierKind::Gbm => 1,
    }
}

fn summary_table(reports: &[(ClassifierKind, EvaluationReport)]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<18} {:>9} {:>6}  {:<17} {:<17}",
        "classifier", "accuracy", "errors", "CNN P/R/F1", "RNN P/R/F1"
    );
    for (kind, r) in reports {
        let prf = |l: Label| {
            let m = r.class(l);
            format!(
                "{}/{}/{}",
                display2(m.precision),
                display2(m.recall),
                display2(m.f1)
            )
        };
        let _ = writeln!(
            out,
            "{:<18} {:>9} {:>6}  {:<17} {:<17}",
            kind.display_name(),
            display_percent(r.accuracy),
            r.errors(),
            prf(Label::Cnn),
            prf(Label::Rnn)
        );
    }
    out
}

/// Full pipeline: synth, extract, analyze, then train and evaluate every
/// classifier. The summary text depends only on the configuration.
pub fn reproduce(cfg: &RunConfig) -> CliResult<ReproduceSummary> {
    cfg.validate()?;
    let synth_summary = synth(cfg)?;
    let extracted = extract(cfg)?;
    if !extracted.failures.is_empty() {
        return Err(CliError::Data(extracted.failures.join("\n")));
    }
    let analysis = analyze(cfg)?;

    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for kind in ClassifierKind::ALL {
        let mut run = cfg.clone();
        run.train.classifier = kind.as_str().to_string();
        run.paths.model = None;
        if run
            .train
            .grid
            .as_ref()
            .is_some_and(|g| g.iter().any(|p| p.kind() != kind))
        {
            run.train.grid = None;
        }
        let trained = train(&run)?;
        let evaluated = evaluate_model(&run, &trained.model)?;
        let budget = error_budget(kind);
        if evaluated.report.errors() > budget {
            failures.push(format!(
                "{}: {} test errors (allowed {budget})",
                kind.display_name(),
                evaluated.report.errors()
            ));
        }
        reports.push((kind, evaluated.report));
    }

    let mut text = String::new();
    let _ = writeln!(
        text,
        "seed {} separation {} train:{} test:{}",
        cfg.seed, cfg.synth.separation, synth_summary.train, synth_summary.test
    );
    let top: Vec<&str> = analysis
        .order
        .iter()
        .take(3)
        .map(|(n, _, _)| n.as_str())
        .collect();
    let _ = writeln!(text, "top features: {}", top.join(", "));
    text.push_str(&summary_table(&reports));
    if failures.is_empty() {
        text.push_str("thresholds: PASS\n");
    } else {
        let _ = writeln!(text, "thresholds: FAIL ({})", failures.join("; "));
    }
    write(&cfg.out.join("summary.txt"), &text)?;
    let rows: Vec<(&str, &EvaluationReport)> =
        reports.iter().map(|(k, r)| (k.display_name(), r)).collect();
    write(&cfg.reports_dir().join("table.txt"), render_table(&rows))?;
    Ok(ReproduceSummary {
        text,
        reports,
        failures,
    })
}
