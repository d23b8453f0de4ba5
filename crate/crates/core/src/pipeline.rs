//! Experiment configuration, run-directory layout and the pipeline stages
//! (synth → preprocess → train → evaluate) the CLI drives.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::domain::{filter_group, split_temporal, FirmPanel, GroupFilter, Sample, SplitSpec};
use crate::error::{Error, Result};
use crate::eval::{evaluate, render_table, EvalReport};
use crate::fsutil::{read_json, write_atomic, write_json};
use crate::ingest::{generate_synthetic, load_panels, write_panels, SchemaConfig, SyntheticConfig};
use crate::models::{AnyModel, ArchitectureKind, ArchitectureSpec, PersistentModel, Predictor};
use crate::nn::Checkpoint;
use crate::preprocess::{build_samples, fit_pipeline, PreprocessConfig, TransformSet};
use crate::train::{run_repetitions, RepetitionReport, SampleSet, TrainConfig, TrainHistory};

/// Environment variable holding the root that relative run directories resolve against.
pub const RUN_ROOT_ENV: &str = "EPSNET_RUN_ROOT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Desk,
    Paper,
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            other => Err(Error::Config(format!("unknown profile {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetId {
    A,
    B,
}

impl DatasetId {
    pub const BOTH: [DatasetId; 2] = [DatasetId::A, DatasetId::B];

    pub fn as_str(self) -> &'static str {
        match self {
            DatasetId::A => "a",
            DatasetId::B => "b",
        }
    }
}

/// Dataset A's split; dataset B extends A's training window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    pub a: SplitSpec,
    pub b_extension_months: u32,
}

impl Default for SplitConfig {
    fn default() -> Self {
        let date = |y, m, d| NaiveDate::from_ymd_opt(y, m, d).expect("valid date");
        Self {
            a: SplitSpec {
                train_label_start: date(2012, 1, 1),
                train_label_end: date(2016, 6, 30),
                validation_fraction: 0.10,
                test_span_months: 6,
            },
            b_extension_months: 6,
        }
    }
}

impl SplitConfig {
    pub fn spec(&self, dataset: DatasetId) -> Result<SplitSpec> {
        match dataset {
            DatasetId::A => Ok(self.a.clone()),
            DatasetId::B => self.a.extended(self.b_extension_months),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PathsConfig {
    /// Defaults to `<run_dir>/data/quarterly.csv`.
    pub quarterly: Option<PathBuf>,
    /// Defaults to `<run_dir>/data/daily.csv`.
    pub daily: Option<PathBuf>,
    pub run_dir: PathBuf,
}

/// One experiment, end to end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub synthetic: SyntheticConfig,
    pub schema: SchemaConfig,
    pub preprocess: PreprocessConfig,
    /// Shape overrides shared by both kinds; `kind` selects what `train` builds.
    pub architecture: ArchitectureSpec,
    pub train: TrainConfig,
    pub split: SplitConfig,
    /// Dataset trained on and evaluated.
    pub dataset: DatasetId,
    /// Firms the models are fitted and tested on.
    pub group: GroupFilter,
    /// Cohorts reported by `evaluate`.
    pub eval_groups: Vec<GroupFilter>,
    pub paths: PathsConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::profile(Profile::Desk)
    }
}

impl RunConfig {
    pub fn profile(profile: Profile) -> Self {
        let train = match profile {
            Profile::Desk => TrainConfig {
                batch_size: 64,
                epochs: 50,
                repetitions: 3,
                ..TrainConfig::default()
            },
            Profile::Paper => TrainConfig::default(),
        };
        Self {
            synthetic: SyntheticConfig::default(),
            schema: SchemaConfig::default(),
            preprocess: PreprocessConfig::default(),
            architecture: ArchitectureSpec::lstm(),
            train,
            split: SplitConfig::default(),
            dataset: DatasetId::B,
            group: GroupFilter::All,
            eval_groups: GroupFilter::ALL_MODES.to_vec(),
            paths: PathsConfig {
                run_dir: PathBuf::from("runs").join(match profile {
                    Profile::Desk => "desk",
                    Profile::Paper => "paper",
                }),
                ..PathsConfig::default()
            },
        }
    }

    /// Profile defaults, overlaid with the JSON file (if any), then with
    /// `path.to.field=value` overrides, then validated.
    pub fn load(path: Option<&Path>, profile: Profile, overrides: &[String]) -> Result<Self> {
        let mut value = serde_json::to_value(Self::profile(profile))?;
        if let Some(path) = path {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let file: Value = serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            merge(&mut value, file);
        }
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let config: RunConfig = serde_json::from_value(value)
            .map_err(|e| Error::Config(format!("run config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.schema.validate()?;
        self.preprocess.validate()?;
        self.synthetic
            .validate(self.preprocess.window_size + self.preprocess.horizon)?;
        self.train.validate()?;
        self.split.spec(DatasetId::A)?.validate()?;
        self.split.spec(DatasetId::B)?.validate()?;
        for kind in ArchitectureKind::ALL {
            self.spec_for(kind).validate()?;
        }
        if self.eval_groups.is_empty() {
            return Err(Error::Config("eval_groups must name at least one group".into()));
        }
        Ok(())
    }

    /// Architecture of `kind` with this config's shared dimensions and dropout.
    pub fn spec_for(&self, kind: ArchitectureKind) -> ArchitectureSpec {
        ArchitectureSpec {
            kind,
            ..self.architecture.clone()
        }
        .with_dropout(self.train.dropout)
    }

    /// `paths.run_dir`, resolved against `$EPSNET_RUN_ROOT` when relative.
    pub fn run_dir(&self) -> PathBuf {
        let dir = &self.paths.run_dir;
        match std::env::var_os(RUN_ROOT_ENV) {
            Some(root) if dir.is_relative() => PathBuf::from(root).join(dir),
            _ => dir.clone(),
        }
    }

    pub fn layout(&self) -> RunLayout {
        RunLayout::new(self.run_dir())
    }

    fn input_paths(&self) -> (PathBuf, PathBuf) {
        let layout = self.layout();
        (
            self.paths.quarterly.clone().unwrap_or_else(|| layout.quarterly_csv()),
            self.paths.daily.clone().unwrap_or_else(|| layout.daily_csv()),
        )
    }
}

fn merge(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Applies `a.b.c=value`; the value is parsed as JSON, falling back to a string.
pub fn apply_override(config: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {assignment:?} is not path=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut slot = config;
    for key in path.split('.') {
        slot = match slot {
            Value::Object(map) => map
                .get_mut(key)
                .ok_or_else(|| Error::Config(format!("override: unknown key {key:?} in {path:?}")))?,
            Value::Array(items) => {
                let i: usize = key
                    .parse()
                    .map_err(|_| Error::Config(format!("override: {key:?} is not an index in {path:?}")))?;
                items
                    .get_mut(i)
                    .ok_or_else(|| Error::Config(format!("override: index {i} out of range in {path:?}")))?
            }
            _ => return Err(Error::Config(format!("override: {path:?} descends into a scalar"))),
        };
    }
    *slot = value;
    Ok(())
}

/// File locations inside a run directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunLayout {
    pub root: PathBuf,
}

impl RunLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn config(&self) -> PathBuf {
        self.root.join("config.json")
    }

    pub fn data_dir(&self) -> PathBuf {
        self.root.join("data")
    }

    pub fn quarterly_csv(&self) -> PathBuf {
        self.data_dir().join("quarterly.csv")
    }

    pub fn daily_csv(&self) -> PathBuf {
        self.data_dir().join("daily.csv")
    }

    pub fn dataset_dir(&self, dataset: DatasetId) -> PathBuf {
        self.root.join("datasets").join(dataset.as_str())
    }

    pub fn transforms(&self, dataset: DatasetId) -> PathBuf {
        self.dataset_dir(dataset).join("transforms.json")
    }

    pub fn samples(&self, dataset: DatasetId) -> PathBuf {
        self.dataset_dir(dataset).join("samples.bin")
    }

    pub fn model_dir(&self, kind: ArchitectureKind) -> PathBuf {
        self.root.join("models").join(kind.as_str())
    }

    pub fn checkpoint(&self, kind: ArchitectureKind, repetition: usize) -> PathBuf {
        self.model_dir(kind).join(format!("rep{repetition}")).join("checkpoint.json")
    }

    pub fn history(&self, kind: ArchitectureKind, repetition: usize) -> PathBuf {
        self.model_dir(kind).join(format!("rep{repetition}")).join("history.json")
    }

    pub fn train_manifest(&self, kind: ArchitectureKind) -> PathBuf {
        self.model_dir(kind).join("manifest.json")
    }

    pub fn report_json(&self) -> PathBuf {
        self.root.join("reports").join("report.json")
    }

    pub fn report_txt(&self) -> PathBuf {
        self.root.join("reports").join("report.txt")
    }
}

/// Fitted transforms and the three partitions of one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedDataset {
    pub dataset: DatasetId,
    pub split: SplitSpec,
    pub transforms: TransformSet,
    pub train: Vec<Sample>,
    pub validation: Vec<Sample>,
    pub test: Vec<Sample>,
}

impl PreparedDataset {
    pub fn counts(&self) -> (usize, usize, usize) {
        (self.train.len(), self.validation.len(), self.test.len())
    }
}

/// Fits transforms on data up to the training cut-off, builds samples for
/// every firm in `group` and splits them chronologically.
pub fn prepare_dataset(
    panels: &[FirmPanel],
    schema: &SchemaConfig,
    preprocess: &PreprocessConfig,
    split: &SplitSpec,
    group: GroupFilter,
) -> Result<PreparedDataset> {
    split.validate()?;
    let cohort: Vec<&FirmPanel> = panels
        .iter()
        .filter(|p| p.group().is_some_and(|g| group.admits(g)))
        .collect();
    if cohort.is_empty() {
        return Err(Error::InsufficientSamples(format!(
            "no firms in group {group}"
        )));
    }
    let history: Vec<FirmPanel> = cohort
        .iter()
        .map(|p| p.truncated(split.train_label_end))
        .collect();
    let transforms = fit_pipeline(&history, schema, preprocess)?;
    let samples: Vec<Sample> = cohort
        .par_iter()
        .map(|p| build_samples(p, &transforms))
        .collect::<Vec<_>>()
        .concat();
    let samples = filter_group(&samples, group);
    let parts = split_temporal(&samples, split)?;
    Ok(PreparedDataset {
        dataset: DatasetId::A,
        split: split.clone(),
        transforms,
        train: parts.train,
        validation: parts.validation,
        test: parts.test,
    })
}

/// Writes the transform JSON and the binary sample store of one dataset.
pub fn save_dataset(layout: &RunLayout, data: &PreparedDataset) -> Result<()> {
    write_json(&layout.transforms(data.dataset), &data.transforms)?;
    let store = (&data.split, &data.train, &data.validation, &data.test);
    let bytes = bincode::serialize(&store)
        .map_err(|e| Error::Config(format!("encoding sample store: {e}")))?;
    write_atomic(&layout.samples(data.dataset), &bytes)
}

pub fn load_dataset(layout: &RunLayout, dataset: DatasetId) -> Result<PreparedDataset> {
    let transforms_path = layout.transforms(dataset);
    let samples_path = layout.samples(dataset);
    for p in [&transforms_path, &samples_path] {
        if !p.exists() {
            return Err(Error::MissingArtifact(format!(
                "{} (run `preprocess` first)",
                p.display()
            )));
        }
    }
    let transforms: TransformSet = read_json(&transforms_path)?;
    let bytes = fs::read(&samples_path).map_err(|e| Error::io(&samples_path, e))?;
    let (split, train, validation, test): (SplitSpec, Vec<Sample>, Vec<Sample>, Vec<Sample>) =
        bincode::deserialize(&bytes).map_err(|e| {
            Error::Checkpoint(format!("{}: corrupt sample store: {e}", samples_path.display()))
        })?;
    Ok(PreparedDataset {
        dataset,
        split,
        transforms,
        train,
        validation,
        test,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthManifest {
    pub seed: u64,
    pub synthetic: SyntheticConfig,
    pub firms: usize,
    pub quarterly: PathBuf,
    pub daily: PathBuf,
}

/// Generates synthetic panels and writes them in the configured schema.
pub fn cmd_synth(config: &RunConfig, out_dir: Option<&Path>) -> Result<SynthManifest> {
    config.validate()?;
    let (quarterly, daily) = match out_dir {
        Some(dir) => (dir.join("quarterly.csv"), dir.join("daily.csv")),
        None => config.input_paths(),
    };
    let panels = generate_synthetic(&config.synthetic, &config.schema)?;
    write_panels(&panels, &config.schema, &quarterly, &daily)?;
    let manifest = SynthManifest {
        seed: config.synthetic.seed,
        synthetic: config.synthetic.clone(),
        firms: panels.len(),
        quarterly: quarterly.clone(),
        daily,
    };
    let manifest_path = quarterly.with_file_name("synth_manifest.json");
    write_json(&manifest_path, &manifest)?;
    Ok(manifest)
}

/// Loads the input panels, prepares datasets A and B and stores them.
pub fn cmd_preprocess(config: &RunConfig) -> Result<Vec<PreparedDataset>> {
    config.validate()?;
    let layout = config.layout();
    let (quarterly, daily) = config.input_paths();
    let panels = load_panels(&quarterly, &daily, &config.schema)?;
    write_json(&layout.config(), config)?;
    let mut out = Vec::new();
    for dataset in DatasetId::BOTH {
        let split = config.split.spec(dataset)?;
        let mut data = prepare_dataset(&panels, &config.schema, &config.preprocess, &split, config.group)?;
        data.dataset = dataset;
        let (tr, va, te) = data.counts();
        log::info!("dataset {}: {tr} train, {va} validation, {te} test samples", dataset.as_str());
        save_dataset(&layout, &data)?;
        out.push(data);
    }
    Ok(out)
}

/// Aligns an architecture with the widths the fitted transforms produce.
pub fn fit_spec_to_data(spec: &ArchitectureSpec, transforms: &TransformSet) -> ArchitectureSpec {
    ArchitectureSpec {
        quarterly_shape: (transforms.config.window_size, transforms.quarterly_width()),
        shares_flat_dim: transforms.market_width(),
        ..spec.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainManifest {
    pub kind: ArchitectureKind,
    pub dataset: DatasetId,
    pub fingerprint: String,
    pub spec: ArchitectureSpec,
    pub train: TrainConfig,
    pub repetitions: Vec<usize>,
    pub seeds: Vec<u64>,
    pub histories: Vec<TrainHistory>,
    pub failures: Vec<crate::train::RunFailure>,
    pub wall_clock_seconds: f64,
}

/// Trains every repetition of `kind` and writes checkpoints, histories and
/// a manifest under `models/<kind>/`, replacing only that directory.
pub fn cmd_train(config: &RunConfig, kind: ArchitectureKind, jobs: usize) -> Result<TrainManifest> {
    config.validate()?;
    let layout = config.layout();
    let data = load_dataset(&layout, config.dataset)?;
    let spec = fit_spec_to_data(&config.spec_for(kind), &data.transforms);
    let train = SampleSet::new(data.train);
    let validation = SampleSet::new(data.validation);
    let start = Instant::now();
    let RepetitionReport { runs, failures } =
        run_repetitions(&spec, &train, &validation, &config.train, jobs)?;
    let wall_clock_seconds = start.elapsed().as_secs_f64();

    let dir = layout.model_dir(kind);
    if dir.exists() {
        fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    for run in &runs {
        run.checkpoint.save(&layout.checkpoint(kind, run.repetition))?;
        write_json(&layout.history(kind, run.repetition), &run.history)?;
    }
    let manifest = TrainManifest {
        kind,
        dataset: config.dataset,
        fingerprint: spec.fingerprint(),
        spec,
        train: config.train.clone(),
        repetitions: runs.iter().map(|r| r.repetition).collect(),
        seeds: runs.iter().map(|r| r.seed).collect(),
        histories: runs.into_iter().map(|r| r.history).collect(),
        failures,
        wall_clock_seconds,
    };
    write_json(&layout.train_manifest(kind), &manifest)?;
    if manifest.seeds.is_empty() {
        return Err(Error::Config(format!(
            "every {kind} repetition failed: {}",
            manifest
                .failures
                .iter()
                .map(|f| f.error.as_str())
                .collect::<Vec<_>>()
                .join("; ")
        )));
    }
    Ok(manifest)
}

/// Restores every checkpoint recorded in the manifest of `kind`.
pub fn load_models(layout: &RunLayout, kind: ArchitectureKind) -> Result<Vec<AnyModel>> {
    let manifest_path = layout.train_manifest(kind);
    if !manifest_path.exists() {
        return Err(Error::MissingArtifact(format!(
            "{} (run `train` for {kind} first)",
            manifest_path.display()
        )));
    }
    let manifest: TrainManifest = read_json(&manifest_path)?;
    manifest
        .repetitions
        .iter()
        .map(|&r| {
            let path = layout.checkpoint(kind, r);
            if !path.exists() {
                return Err(Error::MissingArtifact(path.display().to_string()));
            }
            AnyModel::from_checkpoint(&manifest.spec, &Checkpoint::load(&path)?)
        })
        .collect()
}

/// Evaluates the persistent model and every trained kind on the test split,
/// once per requested group. Writes `reports/report.{json,txt}`.
pub fn cmd_evaluate(config: &RunConfig) -> Result<Vec<EvalReport>> {
    config.validate()?;
    let layout = config.layout();
    let data = load_dataset(&layout, config.dataset)?;
    let mut models: Vec<(String, Vec<AnyModel>)> = Vec::new();
    for kind in ArchitectureKind::ALL {
        if layout.train_manifest(kind).exists() {
            models.push((kind.to_string(), load_models(&layout, kind)?));
        }
    }
    if models.is_empty() {
        return Err(Error::MissingArtifact(format!(
            "no trained models under {}",
            layout.root.join("models").display()
        )));
    }
    let mut reports = Vec::new();
    for &group in &config.eval_groups {
        reports.push(evaluate("persistent", &[&PersistentModel], &data.test, group)?);
        for (name, reps) in &models {
            let predictors: Vec<&dyn Predictor> = reps.iter().map(|m| m as &dyn Predictor).collect();
            reports.push(evaluate(name, &predictors, &data.test, group)?);
        }
    }
    write_json(&layout.report_json(), &reports)?;
    write_atomic(&layout.report_txt(), render_table(&reports).as_bytes())?;
    Ok(reports)
}

/// Re-renders the stored report as a table.
pub fn cmd_report(config: &RunConfig) -> Result<String> {
    let path = config.layout().report_json();
    if !path.exists() {
        return Err(Error::MissingArtifact(format!(
            "{} (run `evaluate` first)",
            path.display()
        )));
    }
    let reports: Vec<EvalReport> = read_json(&path)?;
    Ok(render_table(&reports))
}
