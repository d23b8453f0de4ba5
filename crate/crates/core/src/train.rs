//! Mini-batch Adam/MSE training with best-validation-epoch selection and
//! independent seeded repetitions.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::Sample;
use crate::error::{Error, Result};
use crate::models::{build_model, ArchitectureSpec, Batch, Model};
use crate::nn::{adam_step, AdamConfig, Checkpoint, Graph, Mode, Precision, Real};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub dropout: f64,
    pub repetitions: usize,
    pub seed: u64,
    pub adam: AdamConfig,
    pub precision: Precision,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 1024,
            epochs: 1000,
            dropout: 0.3,
            repetitions: 5,
            seed: 0,
            adam: AdamConfig::default(),
            precision: Precision::F32,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.epochs == 0 || self.repetitions == 0 {
            return Err(Error::Config(
                "batch_size, epochs and repetitions must be at least 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        self.adam.validate()
    }

    /// Seed of repetition `r`.
    pub fn repetition_seed(&self, r: usize) -> u64 {
        self.seed.wrapping_add(r as u64)
    }
}

/// Samples behind an accessor that counts every read, so tests can prove a
/// partition was never touched.
#[derive(Debug, Default)]
pub struct SampleSet {
    samples: Vec<Sample>,
    reads: AtomicU64,
}

impl SampleSet {
    pub fn new(samples: Vec<Sample>) -> Self {
        Self {
            samples,
            reads: AtomicU64::new(0),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn get(&self, i: usize) -> &Sample {
        self.reads.fetch_add(1, Ordering::Relaxed);
        &self.samples[i]
    }

    pub fn all(&self) -> Vec<&Sample> {
        self.reads
            .fetch_add(self.samples.len() as u64, Ordering::Relaxed);
        self.samples.iter().collect()
    }

    pub fn reads(&self) -> u64 {
        self.reads.load(Ordering::Relaxed)
    }

    pub fn into_inner(self) -> Vec<Sample> {
        self.samples
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub train_loss: Vec<f64>,
    pub validation_loss: Vec<f64>,
    pub best_epoch: usize,
    pub best_validation_loss: f64,
}

/// Earliest index of the minimum.
pub fn select_best(losses: &[f64]) -> Option<(usize, f64)> {
    losses
        .iter()
        .copied()
        .enumerate()
        .fold(None, |best, (i, l)| match best {
            Some((_, b)) if l >= b => best,
            _ => Some((i, l)),
        })
}

/// Independent generator for one purpose within a run. Stream 0 belongs to
/// parameter initialisation.
fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn shuffle_stream(epoch: usize) -> u64 {
    1 + 2 * epoch as u64
}

fn dropout_stream(epoch: usize) -> u64 {
    2 + 2 * epoch as u64
}

/// Mean squared error of eval-mode predictions.
pub fn validation_mse<T: Real>(model: &Model<T>, samples: &[&Sample]) -> Result<f64> {
    let preds = crate::models::Predictor::predict(model, samples)?;
    let n = samples.len() as f64;
    Ok(preds
        .iter()
        .zip(samples)
        .map(|(p, s)| {
            let e = p - T::from_f64_lossy(s.label).as_f64();
            e * e
        })
        .sum::<f64>()
        / n)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    /// Parameters of the best validation epoch.
    pub model: Model<T>,
    pub history: TrainHistory,
}

/// Trains a freshly built model and returns the best-validation snapshot.
pub fn train_model<T: Real>(
    mut model: Model<T>,
    train: &SampleSet,
    validation: &SampleSet,
    config: &TrainConfig,
    seed: u64,
) -> Result<TrainOutcome<T>> {
    config.validate()?;
    if train.is_empty() || validation.is_empty() {
        return Err(Error::InsufficientSamples(format!(
            "{} training and {} validation samples",
            train.len(),
            validation.len()
        )));
    }
    model.spec = model.spec.clone().with_dropout(config.dropout);
    let validation_samples = validation.all();
    let n = train.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = TrainHistory {
        train_loss: Vec::with_capacity(config.epochs),
        validation_loss: Vec::with_capacity(config.epochs),
        best_epoch: 0,
        best_validation_loss: f64::INFINITY,
    };
    let mut best = None;

    for epoch in 0..config.epochs {
        order.sort_unstable();
        order.shuffle(&mut stream_rng(seed, shuffle_stream(epoch)));
        let mut dropout_rng = stream_rng(seed, dropout_stream(epoch));
        let mut loss_sum = 0.0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch = Batch::<T>::from_samples(&model.spec, chunk.iter().map(|&i| train.get(i)))?;
            let mut g = Graph::new();
            let vars = model.params.bind(&mut g, true);
            let out = model.forward(&mut g, &vars, &batch, Mode::Train, &mut dropout_rng)?;
            let out = g.reshape(out, vec![batch.size])?;
            let loss = g.mse(out, batch.labels.clone())?;
            let value = g.scalar(loss).as_f64();
            if !value.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
            loss_sum += value * batch.size as f64;
            g.backward(loss)?;
            model.params.accumulate_grads(&g, &vars);
            adam_step(model.params.params_mut(), &config.adam)?;
        }
        let train_loss = loss_sum / n as f64;
        let val_loss = validation_mse(&model, &validation_samples)?;
        if !val_loss.is_finite() {
            return Err(Error::NonFinite(format!("validation loss at epoch {epoch}")));
        }
        log::debug!(
            "seed {seed} epoch {epoch}: train {train_loss:.6} validation {val_loss:.6}"
        );
        history.train_loss.push(train_loss);
        history.validation_loss.push(val_loss);
        if val_loss < history.best_validation_loss {
            history.best_validation_loss = val_loss;
            history.best_epoch = epoch;
            best = Some(model.params.clone());
        }
    }

    model.params = best.expect("at least one finite epoch");
    Ok(TrainOutcome { model, history })
}

/// What a finished repetition leaves behind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub repetition: usize,
    pub seed: u64,
    pub seconds: f64,
    pub checkpoint: Checkpoint,
    pub history: TrainHistory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub repetition: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionReport {
    pub runs: Vec<RunRecord>,
    pub failures: Vec<RunFailure>,
}

fn run_once<T: Real>(
    spec: &ArchitectureSpec,
    train: &SampleSet,
    validation: &SampleSet,
    config: &TrainConfig,
    seed: u64,
) -> Result<(Checkpoint, TrainHistory)> {
    let spec = spec.clone().with_dropout(config.dropout);
    let model = build_model::<T>(&spec, seed)?;
    let outcome = train_model(model, train, validation, config, seed)?;
    let checkpoint = Checkpoint::capture(&outcome.model.params, &spec.fingerprint());
    Ok((checkpoint, outcome.history))
}

/// Trains `config.repetitions` independent models, repetition `r` seeded
/// with `config.seed + r`, on at most `jobs` threads. Failed runs are listed
/// without stopping the others; results are ordered by repetition.
pub fn run_repetitions(
    spec: &ArchitectureSpec,
    train: &SampleSet,
    validation: &SampleSet,
    config: &TrainConfig,
    jobs: usize,
) -> Result<RepetitionReport> {
    config.validate()?;
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let results: Vec<_> = pool.install(|| {
        (0..config.repetitions)
            .into_par_iter()
            .map(|r| {
                let seed = config.repetition_seed(r);
                let start = Instant::now();
                let result = match config.precision {
                    Precision::F32 => run_once::<f32>(spec, train, validation, config, seed),
                    Precision::F64 => run_once::<f64>(spec, train, validation, config, seed),
                };
                (r, seed, start.elapsed().as_secs_f64(), result)
            })
            .collect()
    });
    let mut report = RepetitionReport {
        runs: Vec::new(),
        failures: Vec::new(),
    };
    for (repetition, seed, seconds, result) in results {
        match result {
            Ok((checkpoint, history)) => {
                log::info!(
                    "{} repetition {repetition} (seed {seed}): best epoch {} validation {:.6} in {seconds:.1}s",
                    spec.kind,
                    history.best_epoch,
                    history.best_validation_loss
                );
                report.runs.push(RunRecord {
                    repetition,
                    seed,
                    seconds,
                    checkpoint,
                    history,
                });
            }
            Err(e) => {
                log::error!("{} repetition {repetition} (seed {seed}) failed: {e}", spec.kind);
                report.failures.push(RunFailure {
                    repetition,
                    seed,
                    error: e.to_string(),
                });
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn best_epoch_is_earliest_minimum() {
        assert_eq!(select_best(&[3.0, 1.0, 2.0]), Some((1, 1.0)));
        assert_eq!(select_best(&[2.0, 1.0, 1.0]), Some((1, 1.0)));
        assert_eq!(select_best(&[]), None);
    }

    #[test]
    fn streams_are_distinct() {
        use rand::Rng;
        let a: u64 = stream_rng(5, shuffle_stream(0)).random();
        let b: u64 = stream_rng(5, dropout_stream(0)).random();
        let c: u64 = stream_rng(5, shuffle_stream(1)).random();
        assert!(a != b && a != c && b != c);
    }

    #[test]
    fn config_rejects_zero_sizes() {
        let bad = TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(TrainConfig::default().validate().is_ok());
    }
}
