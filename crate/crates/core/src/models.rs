//! The two forecasting architectures: a quarterly encoder (stacked LSTM or
//! TCN) and a dense tower over the flattened market window, concatenated and
//! fed through a dense head ending in a single linear unit.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::Sample;
use crate::error::{Error, Result};
use crate::nn::{
    dense_forward, dropout, lstm_forward, tcn_forward, Activation, Checkpoint, DenseParams, Graph,
    LstmLayerSpec, LstmParams, Mode, ParamStore, Precision, Real, TcnParams, TcnSpec, Var,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArchitectureKind {
    Lstm,
    Tcn,
}

impl ArchitectureKind {
    pub const ALL: [ArchitectureKind; 2] = [ArchitectureKind::Lstm, ArchitectureKind::Tcn];

    pub fn as_str(self) -> &'static str {
        match self {
            ArchitectureKind::Lstm => "lstm",
            ArchitectureKind::Tcn => "tcn",
        }
    }
}

impl fmt::Display for ArchitectureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ArchitectureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lstm" => Ok(ArchitectureKind::Lstm),
            "tcn" => Ok(ArchitectureKind::Tcn),
            other => Err(Error::Config(format!("unknown architecture {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArchitectureSpec {
    pub kind: ArchitectureKind,
    /// `(window, features)` of the quarterly input.
    pub quarterly_shape: (usize, usize),
    pub shares_flat_dim: usize,
    pub shares_tower_dims: Vec<usize>,
    pub head_dims: Vec<usize>,
    /// Hidden sizes of the two stacked LSTM layers.
    pub lstm_dims: (usize, usize),
    pub tcn: TcnSpec,
    pub post_tcn_dense: usize,
    pub dropout: f64,
}

impl Default for ArchitectureSpec {
    fn default() -> Self {
        Self::lstm()
    }
}

impl ArchitectureSpec {
    pub fn lstm() -> Self {
        Self {
            kind: ArchitectureKind::Lstm,
            quarterly_shape: (20, 19),
            shares_flat_dim: 220,
            shares_tower_dims: vec![660, 440, 220],
            head_dims: vec![19, 8, 1],
            lstm_dims: (76, 38),
            tcn: TcnSpec::default(),
            post_tcn_dense: 38,
            dropout: 0.3,
        }
    }

    pub fn tcn() -> Self {
        Self {
            kind: ArchitectureKind::Tcn,
            ..Self::lstm()
        }
    }

    pub fn for_kind(kind: ArchitectureKind) -> Self {
        match kind {
            ArchitectureKind::Lstm => Self::lstm(),
            ArchitectureKind::Tcn => Self::tcn(),
        }
    }

    /// Sets the rate used after every intermediate layer, on recurrent edges
    /// and inside the TCN blocks.
    pub fn with_dropout(mut self, rate: f64) -> Self {
        self.dropout = rate;
        self.tcn.dropout = rate;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (window, features) = self.quarterly_shape;
        let dims_ok = window > 0
            && features > 0
            && self.shares_flat_dim > 0
            && !self.shares_tower_dims.is_empty()
            && self.shares_tower_dims.iter().all(|&d| d > 0)
            && self.head_dims.iter().all(|&d| d > 0)
            && self.lstm_dims.0 > 0
            && self.lstm_dims.1 > 0
            && self.post_tcn_dense > 0;
        if !dims_ok {
            return Err(Error::Config(format!("architecture dimensions must be positive: {self:?}")));
        }
        if self.head_dims.last() != Some(&1) {
            return Err(Error::Config(format!(
                "head must end in a single unit, got {:?}",
                self.head_dims
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if self.kind == ArchitectureKind::Tcn {
            self.tcn.validate_for_window(window)?;
        }
        Ok(())
    }

    pub fn encoder_width(&self) -> usize {
        match self.kind {
            ArchitectureKind::Lstm => self.lstm_dims.1,
            ArchitectureKind::Tcn => self.post_tcn_dense,
        }
    }

    /// Width of the concatenated merge layer.
    pub fn merge_width(&self) -> usize {
        self.encoder_width() + self.shares_tower_dims.last().copied().unwrap_or(0)
    }

    /// Kind plus every dimension that determines parameter shapes.
    pub fn fingerprint(&self) -> String {
        let join = |v: &[usize]| {
            v.iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(",")
        };
        let (window, features) = self.quarterly_shape;
        let encoder = match self.kind {
            ArchitectureKind::Lstm => format!("lstm={},{}", self.lstm_dims.0, self.lstm_dims.1),
            ArchitectureKind::Tcn => format!(
                "tcn=f{},k{},d{};dense={}",
                self.tcn.filters,
                self.tcn.kernel_size,
                join(&self.tcn.dilations),
                self.post_tcn_dense
            ),
        };
        format!(
            "{};quarters={window}x{features};shares={};tower={};{encoder};head={}",
            self.kind,
            self.shares_flat_dim,
            join(&self.shares_tower_dims),
            join(&self.head_dims)
        )
    }

    fn lstm_layers(&self) -> [LstmLayerSpec; 2] {
        let (h1, h2) = self.lstm_dims;
        [
            LstmLayerSpec {
                input_dim: self.quarterly_shape.1,
                hidden_dim: h1,
                return_sequence: true,
                recurrent_dropout: self.dropout,
            },
            LstmLayerSpec {
                input_dim: h1,
                hidden_dim: h2,
                return_sequence: false,
                recurrent_dropout: self.dropout,
            },
        ]
    }

    /// Expected `(name, shape)` of every parameter, derived from the spec
    /// alone, in registration order.
    pub fn expected_shapes(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        let dense = |out: &mut Vec<(String, Vec<usize>)>, name: String, i: usize, o: usize| {
            out.push((format!("{name}.weight"), vec![i, o]));
            out.push((format!("{name}.bias"), vec![o]));
        };
        match self.kind {
            ArchitectureKind::Lstm => {
                for (l, layer) in self.lstm_layers().iter().enumerate() {
                    let gates = 4 * layer.hidden_dim;
                    out.push((format!("lstm{l}.w_input"), vec![layer.input_dim, gates]));
                    out.push((format!("lstm{l}.w_hidden"), vec![layer.hidden_dim, gates]));
                    out.push((format!("lstm{l}.bias"), vec![gates]));
                }
            }
            ArchitectureKind::Tcn => {
                let (k, f) = (self.tcn.kernel_size, self.tcn.filters);
                let mut cin = self.quarterly_shape.1;
                for i in 0..self.tcn.dilations.len() {
                    let p = format!("tcn.block{i}");
                    out.push((format!("{p}.conv1.kernel"), vec![k, cin, f]));
                    out.push((format!("{p}.conv1.bias"), vec![f]));
                    out.push((format!("{p}.conv2.kernel"), vec![k, f, f]));
                    out.push((format!("{p}.conv2.bias"), vec![f]));
                    if cin != f {
                        dense(&mut out, format!("{p}.skip"), cin, f);
                    }
                    cin = f;
                }
                dense(&mut out, "tcn_dense".into(), f, self.post_tcn_dense);
            }
        }
        let mut prev = self.shares_flat_dim;
        for (i, &d) in self.shares_tower_dims.iter().enumerate() {
            dense(&mut out, format!("shares{i}"), prev, d);
            prev = d;
        }
        let mut prev = self.merge_width();
        for (i, &d) in self.head_dims.iter().enumerate() {
            dense(&mut out, format!("head{i}"), prev, d);
            prev = d;
        }
        out
    }

    /// Closed-form parameter count.
    pub fn analytic_param_count(&self) -> usize {
        let dense = |i: usize, o: usize| i * o + o;
        let encoder = match self.kind {
            ArchitectureKind::Lstm => self.lstm_layers().iter().map(LstmLayerSpec::param_count).sum(),
            ArchitectureKind::Tcn => {
                self.tcn.param_count(self.quarterly_shape.1)
                    + dense(self.tcn.filters, self.post_tcn_dense)
            }
        };
        let chain = |start: usize, dims: &[usize]| {
            dims.iter()
                .scan(start, |prev, &d| {
                    let n = dense(*prev, d);
                    *prev = d;
                    Some(n)
                })
                .sum::<usize>()
        };
        encoder
            + chain(self.shares_flat_dim, &self.shares_tower_dims)
            + chain(self.merge_width(), &self.head_dims)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Encoder<H> {
    Lstm([LstmParams<H>; 2]),
    Tcn { tcn: TcnParams<H>, dense: DenseParams<H> },
}

/// Batch inputs in model precision.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch<T> {
    pub size: usize,
    /// `[size, window, features]`, row-major.
    pub quarters: Vec<T>,
    /// `[size, shares_flat_dim]`.
    pub shares: Vec<T>,
    pub labels: Vec<T>,
}

impl<T: Real> Batch<T> {
    pub fn from_samples<'a, I>(spec: &ArchitectureSpec, samples: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a Sample>,
    {
        let (window, features) = spec.quarterly_shape;
        let mut batch = Batch {
            size: 0,
            quarters: Vec::new(),
            shares: Vec::new(),
            labels: Vec::new(),
        };
        for s in samples {
            if s.window_len != window
                || s.quarter_features != features
                || s.quarter_window.len() != window * features
                || s.market_window.len() != spec.shares_flat_dim
            {
                return Err(Error::Shape(format!(
                    "sample {} @ {}: quarters {}x{} and market {} do not match model {}x{} and {}",
                    s.firm,
                    s.anchor_date,
                    s.window_len,
                    s.quarter_features,
                    s.market_window.len(),
                    window,
                    features,
                    spec.shares_flat_dim
                )));
            }
            batch.size += 1;
            batch
                .quarters
                .extend(s.quarter_window.iter().map(|&v| T::from_f64_lossy(v)));
            batch
                .shares
                .extend(s.market_window.iter().map(|&v| T::from_f64_lossy(v)));
            batch.labels.push(T::from_f64_lossy(s.label));
        }
        if batch.size == 0 {
            return Err(Error::Shape("empty batch".into()));
        }
        Ok(batch)
    }
}

/// A built network: its spec, parameters and the parameter layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Model<T> {
    pub spec: ArchitectureSpec,
    pub params: ParamStore<T>,
    encoder: Encoder<usize>,
    tower: Vec<DenseParams<usize>>,
    head: Vec<DenseParams<usize>>,
}

/// Builds the network with seed-determined Glorot initialisation.
pub fn build_model<T: Real>(spec: &ArchitectureSpec, seed: u64) -> Result<Model<T>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ParamStore::new();
    let encoder = match spec.kind {
        ArchitectureKind::Lstm => {
            let [l0, l1] = spec.lstm_layers();
            Encoder::Lstm([
                LstmParams::register(&mut params, "lstm0", &l0, &mut rng)?,
                LstmParams::register(&mut params, "lstm1", &l1, &mut rng)?,
            ])
        }
        ArchitectureKind::Tcn => {
            let tcn = TcnParams::register(&mut params, "tcn", spec.quarterly_shape.1, &spec.tcn, &mut rng)?;
            let dense = DenseParams::register(
                &mut params,
                "tcn_dense",
                spec.tcn.filters,
                spec.post_tcn_dense,
                &mut rng,
            )?;
            Encoder::Tcn { tcn, dense }
        }
    };
    let mut tower = Vec::new();
    let mut prev = spec.shares_flat_dim;
    for (i, &d) in spec.shares_tower_dims.iter().enumerate() {
        tower.push(DenseParams::register(&mut params, &format!("shares{i}"), prev, d, &mut rng)?);
        prev = d;
    }
    let mut head = Vec::new();
    let mut prev = spec.merge_width();
    for (i, &d) in spec.head_dims.iter().enumerate() {
        head.push(DenseParams::register(&mut params, &format!("head{i}"), prev, d, &mut rng)?);
        prev = d;
    }
    Ok(Model {
        spec: spec.clone(),
        params,
        encoder,
        tower,
        head,
    })
}

impl<T: Real> Model<T> {
    pub fn fingerprint(&self) -> String {
        self.spec.fingerprint()
    }

    pub fn param_count(&self) -> usize {
        self.params.total_elements()
    }

    /// Records the forward pass for `batch` on `g`, with parameters bound as
    /// `vars` (from `self.params.bind`). Returns predictions of shape `[size, 1]`.
    pub fn forward<R: Rng + ?Sized>(
        &self,
        g: &mut Graph<T>,
        vars: &[Var],
        batch: &Batch<T>,
        mode: Mode,
        rng: &mut R,
    ) -> Result<Var> {
        let spec = &self.spec;
        let rate = spec.dropout;
        let (window, features) = spec.quarterly_shape;
        let quarters = g.input(vec![batch.size, window, features], batch.quarters.clone())?;
        let shares = g.input(vec![batch.size, spec.shares_flat_dim], batch.shares.clone())?;

        let encoded = match &self.encoder {
            Encoder::Lstm(layers) => {
                let [s0, s1] = spec.lstm_layers();
                let h = lstm_forward(g, quarters, &s0, &layers[0].bind(vars), mode, rng)?;
                let h = dropout(g, h, rate, mode, rng)?;
                let h = lstm_forward(g, h, &s1, &layers[1].bind(vars), mode, rng)?;
                dropout(g, h, rate, mode, rng)?
            }
            Encoder::Tcn { tcn, dense } => {
                let seq = tcn_forward(g, quarters, &spec.tcn, &tcn.bind(vars), mode, rng)?;
                let last = g.time_step(seq, window - 1)?;
                let h = dense_forward(g, last, &dense.bind(vars), Activation::Tanh)?;
                dropout(g, h, rate, mode, rng)?
            }
        };

        let mut s = shares;
        for layer in &self.tower {
            s = dense_forward(g, s, &layer.bind(vars), Activation::Tanh)?;
            s = dropout(g, s, rate, mode, rng)?;
        }

        let mut x = g.concat(encoded, s)?;
        let last = self.head.len() - 1;
        for (i, layer) in self.head.iter().enumerate() {
            if i == last {
                x = dense_forward(g, x, &layer.bind(vars), Activation::Linear)?;
            } else {
                x = dense_forward(g, x, &layer.bind(vars), Activation::Tanh)?;
                x = dropout(g, x, rate, mode, rng)?;
            }
        }
        Ok(x)
    }

    /// Eval-mode predictions for a prepared batch.
    pub fn predict_batch(&self, batch: &Batch<T>) -> Result<Vec<f64>> {
        let mut g = Graph::new();
        let vars = self.params.bind(&mut g, false);
        // eval mode never draws from the generator
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = self.forward(&mut g, &vars, batch, Mode::Eval, &mut rng)?;
        Ok(g.value(out).iter().map(|v| v.as_f64()).collect())
    }

    /// Eval-mode predictions, one per sample in input order, computed in
    /// chunks of `chunk` samples.
    pub fn predict_chunked(&self, samples: &[&Sample], chunk: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(samples.len());
        for part in samples.chunks(chunk.max(1)) {
            let batch = Batch::from_samples(&self.spec, part.iter().copied())?;
            out.extend(self.predict_batch(&batch)?);
        }
        Ok(out)
    }
}

/// Anything that maps samples to EPS predictions in transformed space.
pub trait Predictor {
    fn name(&self) -> &str;
    fn predict(&self, samples: &[&Sample]) -> Result<Vec<f64>>;
}

/// Chunk size used for inference; results do not depend on it.
pub const PREDICT_CHUNK: usize = 512;

impl<T: Real> Predictor for Model<T> {
    fn name(&self) -> &str {
        self.spec.kind.as_str()
    }

    fn predict(&self, samples: &[&Sample]) -> Result<Vec<f64>> {
        self.predict_chunked(samples, PREDICT_CHUNK)
    }
}

/// A model restored from a checkpoint in whichever precision it was saved.
#[derive(Debug, Clone)]
pub enum AnyModel {
    F32(Model<f32>),
    F64(Model<f64>),
}

impl AnyModel {
    pub fn from_checkpoint(spec: &ArchitectureSpec, checkpoint: &Checkpoint) -> Result<Self> {
        let fingerprint = spec.fingerprint();
        Ok(match checkpoint.precision {
            Precision::F32 => {
                let mut m = build_model::<f32>(spec, 0)?;
                checkpoint.restore(&mut m.params, &fingerprint)?;
                AnyModel::F32(m)
            }
            Precision::F64 => {
                let mut m = build_model::<f64>(spec, 0)?;
                checkpoint.restore(&mut m.params, &fingerprint)?;
                AnyModel::F64(m)
            }
        })
    }
}

impl Predictor for AnyModel {
    fn name(&self) -> &str {
        match self {
            AnyModel::F32(m) => m.name(),
            AnyModel::F64(m) => m.name(),
        }
    }

    fn predict(&self, samples: &[&Sample]) -> Result<Vec<f64>> {
        match self {
            AnyModel::F32(m) => m.predict(samples),
            AnyModel::F64(m) => m.predict(samples),
        }
    }
}

/// Predicts next quarter's EPS as the current quarter's.
#[derive(Debug, Clone, Copy, Default)]
pub struct PersistentModel;

impl Predictor for PersistentModel {
    fn name(&self) -> &str {
        "persistent"
    }

    fn predict(&self, samples: &[&Sample]) -> Result<Vec<f64>> {
        Ok(samples.iter().map(|s| s.persistent_prediction).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: ArchitectureKind) -> ArchitectureSpec {
        ArchitectureSpec {
            kind,
            quarterly_shape: (6, 3),
            shares_flat_dim: 8,
            shares_tower_dims: vec![5, 4],
            head_dims: vec![3, 1],
            lstm_dims: (4, 3),
            tcn: TcnSpec {
                filters: 4,
                kernel_size: 3,
                dilations: vec![1, 2],
                dropout: 0.3,
            },
            post_tcn_dense: 3,
            dropout: 0.3,
        }
    }

    #[test]
    fn shapes_follow_the_spec() {
        for kind in ArchitectureKind::ALL {
            for spec in [ArchitectureSpec::for_kind(kind), small(kind)] {
                let model = build_model::<f32>(&spec, 1).unwrap();
                let actual: Vec<_> = model
                    .params
                    .iter()
                    .map(|p| (p.name.clone(), p.tensor.shape().to_vec()))
                    .collect();
                assert_eq!(actual, spec.expected_shapes());
                assert_eq!(model.param_count(), spec.analytic_param_count());
            }
        }
    }

    #[test]
    fn fingerprints_differ_by_kind() {
        let a = ArchitectureSpec::lstm().fingerprint();
        let b = ArchitectureSpec::tcn().fingerprint();
        assert_ne!(a, b);
        assert_eq!(a, ArchitectureSpec::lstm().with_dropout(0.0).fingerprint());
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut s = ArchitectureSpec::lstm();
        s.head_dims = vec![19, 8, 2];
        assert!(s.validate().is_err());
        let mut s = ArchitectureSpec::tcn();
        s.tcn.dilations = vec![1, 2];
        assert!(s.validate().is_err(), "receptive field 7 < 20");
    }

    #[test]
    fn build_is_seed_deterministic() {
        let a = build_model::<f64>(&small(ArchitectureKind::Tcn), 9).unwrap();
        let b = build_model::<f64>(&small(ArchitectureKind::Tcn), 9).unwrap();
        let c = build_model::<f64>(&small(ArchitectureKind::Tcn), 10).unwrap();
        assert_eq!(a.params, b.params);
        assert_ne!(a.params, c.params);
    }

    #[test]
    fn forward_output_shape() {
        for kind in ArchitectureKind::ALL {
            let spec = small(kind);
            let model = build_model::<f64>(&spec, 2).unwrap();
            let batch = Batch {
                size: 7,
                quarters: (0..7 * 18).map(|i| (i as f64 * 0.01).sin()).collect(),
                shares: (0..7 * 8).map(|i| (i as f64 * 0.1).cos()).collect(),
                labels: vec![0.0; 7],
            };
            let mut g = Graph::new();
            let vars = model.params.bind(&mut g, true);
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let out = model.forward(&mut g, &vars, &batch, Mode::Train, &mut rng).unwrap();
            assert_eq!(g.shape(out), &[7, 1]);
        }
    }
}
