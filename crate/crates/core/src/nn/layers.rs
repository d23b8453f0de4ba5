use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{glorot_uniform, Graph, ParamStore, Real, Tensor, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Sigmoid,
    Linear,
}

impl Activation {
    pub fn apply<T: Real>(self, g: &mut Graph<T>, x: Var) -> Var {
        match self {
            Activation::Tanh => g.tanh(x),
            Activation::Sigmoid => g.sigmoid(x),
            Activation::Linear => x,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Train,
    Eval,
}

/// Inverted-dropout mask: 0 with probability `rate`, otherwise `1 / (1 - rate)`.
pub fn dropout_mask<T: Real, R: Rng + ?Sized>(len: usize, rate: f64, rng: &mut R) -> Vec<T> {
    let keep = T::from_f64_lossy(1.0 / (1.0 - rate));
    (0..len)
        .map(|_| {
            if rng.random::<f64>() < rate {
                T::zero()
            } else {
                keep
            }
        })
        .collect()
}

fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Config(format!("dropout rate {rate} outside [0, 1)")));
    }
    Ok(())
}

/// Identity in eval mode or at rate 0; inverted dropout otherwise.
pub fn dropout<T: Real, R: Rng + ?Sized>(
    g: &mut Graph<T>,
    x: Var,
    rate: f64,
    mode: Mode,
    rng: &mut R,
) -> Result<Var> {
    check_rate(rate)?;
    if mode == Mode::Eval || rate == 0.0 {
        return Ok(x);
    }
    let mask = dropout_mask(g.value(x).len(), rate, rng);
    g.mask_mul(x, mask)
}

/// Weight and bias handles of a dense layer. `H` is a parameter index while
/// stored in a model and a graph [`Var`] once bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DenseParams<H = Var> {
    pub w: H,
    pub b: H,
}

impl DenseParams<usize> {
    /// Glorot-uniform `[input, output]` weights and a zero bias.
    pub fn register<T: Real, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        name: &str,
        input: usize,
        output: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let w = Tensor::new(vec![input, output], glorot_uniform(input, output, input * output, rng))?;
        Ok(Self {
            w: store.add(format!("{name}.weight"), w)?,
            b: store.add(format!("{name}.bias"), Tensor::zeros(vec![output]))?,
        })
    }

    pub fn bind(&self, vars: &[Var]) -> DenseParams {
        DenseParams {
            w: vars[self.w],
            b: vars[self.b],
        }
    }
}

/// `act(input · W + b)` for `input` of shape `[batch, in]`.
pub fn dense_forward<T: Real>(
    g: &mut Graph<T>,
    input: Var,
    params: &DenseParams,
    activation: Activation,
) -> Result<Var> {
    let z = g.matmul(input, params.w)?;
    let z = g.add_bias(z, params.b)?;
    Ok(activation.apply(g, z))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LstmLayerSpec {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub return_sequence: bool,
    pub recurrent_dropout: f64,
}

impl LstmLayerSpec {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_dim == 0 {
            return Err(Error::Config("lstm dimensions must be positive".into()));
        }
        check_rate(self.recurrent_dropout)
    }

    pub fn param_count(&self) -> usize {
        let gates = 4 * self.hidden_dim;
        self.input_dim * gates + self.hidden_dim * gates + gates
    }
}

/// Gate weights in the column order input, forget, candidate, output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LstmParams<H = Var> {
    pub w_input: H,
    pub w_hidden: H,
    pub bias: H,
}

impl LstmParams<usize> {
    /// Glorot-uniform weights; forget-gate bias 1, other biases 0.
    pub fn register<T: Real, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        name: &str,
        spec: &LstmLayerSpec,
        rng: &mut R,
    ) -> Result<Self> {
        spec.validate()?;
        let (inp, h) = (spec.input_dim, spec.hidden_dim);
        let w_input = Tensor::new(vec![inp, 4 * h], glorot_uniform(inp, 4 * h, inp * 4 * h, rng))?;
        let w_hidden = Tensor::new(vec![h, 4 * h], glorot_uniform(h, 4 * h, h * 4 * h, rng))?;
        let mut bias = vec![T::zero(); 4 * h];
        bias[h..2 * h].iter_mut().for_each(|b| *b = T::one());
        Ok(Self {
            w_input: store.add(format!("{name}.w_input"), w_input)?,
            w_hidden: store.add(format!("{name}.w_hidden"), w_hidden)?,
            bias: store.add(format!("{name}.bias"), Tensor::new(vec![4 * h], bias)?)?,
        })
    }

    pub fn bind(&self, vars: &[Var]) -> LstmParams {
        LstmParams {
            w_input: vars[self.w_input],
            w_hidden: vars[self.w_hidden],
            bias: vars[self.bias],
        }
    }
}

/// LSTM over `[batch, T, in]` with zero initial state.
///
/// Gates read `[x_t; h_{t-1}]`. In train mode with a positive recurrent
/// dropout rate, one mask per sequence is applied to `h_{t-1}` at every step.
/// Returns `[batch, T, hidden]` or the final `[batch, hidden]`.
pub fn lstm_forward<T: Real, R: Rng + ?Sized>(
    g: &mut Graph<T>,
    input: Var,
    spec: &LstmLayerSpec,
    params: &LstmParams,
    mode: Mode,
    rng: &mut R,
) -> Result<Var> {
    spec.validate()?;
    let shape = g.shape(input).to_vec();
    if shape.len() != 3 || shape[2] != spec.input_dim || shape[1] == 0 {
        return Err(Error::Shape(format!(
            "lstm expects [batch, T, {}], got {shape:?}",
            spec.input_dim
        )));
    }
    let (batch, steps) = (shape[0], shape[1]);
    let h = spec.hidden_dim;

    // input projections for all steps in one product
    let flat = g.reshape(input, vec![batch * steps, spec.input_dim])?;
    let proj = g.matmul(flat, params.w_input)?;
    let proj = g.add_bias(proj, params.bias)?;
    let proj = g.reshape(proj, vec![batch, steps, 4 * h])?;

    let recurrent_mask: Option<Vec<T>> =
        (mode == Mode::Train && spec.recurrent_dropout > 0.0)
            .then(|| dropout_mask(batch * h, spec.recurrent_dropout, rng));

    let mut hidden: Option<Var> = None;
    let mut cell: Option<Var> = None;
    let mut outputs = Vec::with_capacity(if spec.return_sequence { steps } else { 0 });
    for t in 0..steps {
        let mut z = g.time_step(proj, t)?;
        if let Some(prev) = hidden {
            let prev = match &recurrent_mask {
                Some(mask) => g.mask_mul(prev, mask.clone())?,
                None => prev,
            };
            let rec = g.matmul(prev, params.w_hidden)?;
            z = g.add(z, rec)?;
        }
        let i_gate = g.slice_cols(z, 0, h)?;
        let i_gate = g.sigmoid(i_gate);
        let f_gate = g.slice_cols(z, h, h)?;
        let f_gate = g.sigmoid(f_gate);
        let cand = g.slice_cols(z, 2 * h, h)?;
        let cand = g.tanh(cand);
        let o_gate = g.slice_cols(z, 3 * h, h)?;
        let o_gate = g.sigmoid(o_gate);

        let write = g.mul(i_gate, cand)?;
        let c = match cell {
            Some(prev_c) => {
                let keep = g.mul(f_gate, prev_c)?;
                g.add(keep, write)?
            }
            None => write,
        };
        let c_act = g.tanh(c);
        let h_t = g.mul(o_gate, c_act)?;
        cell = Some(c);
        hidden = Some(h_t);
        if spec.return_sequence {
            outputs.push(h_t);
        }
    }
    if spec.return_sequence {
        g.stack(&outputs)
    } else {
        Ok(hidden.expect("at least one step"))
    }
}

/// Dilated causal convolution, output length equal to input length.
pub fn causal_conv_forward<T: Real>(
    g: &mut Graph<T>,
    input: Var,
    kernel: Var,
    dilation: usize,
) -> Result<Var> {
    g.causal_conv(input, kernel, dilation)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TcnSpec {
    pub filters: usize,
    pub kernel_size: usize,
    pub dilations: Vec<usize>,
    pub dropout: f64,
}

impl Default for TcnSpec {
    fn default() -> Self {
        Self {
            filters: 32,
            kernel_size: 3,
            dilations: vec![1, 2, 4, 8],
            dropout: 0.3,
        }
    }
}

impl TcnSpec {
    /// Dilations must be `1, 2, 4, ..`: strictly increasing powers of two.
    pub fn validate(&self) -> Result<()> {
        if self.filters == 0 || self.kernel_size == 0 || self.dilations.is_empty() {
            return Err(Error::Config(
                "tcn: filters, kernel size and dilation list must be non-empty".into(),
            ));
        }
        for (i, &d) in self.dilations.iter().enumerate() {
            if d != 1 << i {
                return Err(Error::Config(format!(
                    "tcn: dilation {i} is {d}, expected {}",
                    1usize << i
                )));
            }
        }
        check_rate(self.dropout)
    }

    /// `1 + (k - 1) · sum(d_i)` per convolution stack.
    pub fn receptive_field(&self) -> usize {
        1 + (self.kernel_size - 1) * self.dilations.iter().sum::<usize>()
    }

    pub fn validate_for_window(&self, window: usize) -> Result<()> {
        self.validate()?;
        if self.receptive_field() < window {
            return Err(Error::Config(format!(
                "tcn: receptive field {} does not cover window {window}",
                self.receptive_field()
            )));
        }
        Ok(())
    }

    pub fn param_count(&self, input_channels: usize) -> usize {
        let (k, f) = (self.kernel_size, self.filters);
        let mut total = 0;
        let mut cin = input_channels;
        for _ in &self.dilations {
            total += k * cin * f + f + k * f * f + f;
            if cin != f {
                total += cin * f + f;
            }
            cin = f;
        }
        total
    }
}

/// One residual block: two causal convolutions plus an optional 1×1 skip.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TcnBlockParams<H = Var> {
    pub conv1: H,
    pub bias1: H,
    pub conv2: H,
    pub bias2: H,
    pub skip: Option<DenseParams<H>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TcnParams<H = Var> {
    pub blocks: Vec<TcnBlockParams<H>>,
}

impl TcnParams<usize> {
    pub fn register<T: Real, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        name: &str,
        input_channels: usize,
        spec: &TcnSpec,
        rng: &mut R,
    ) -> Result<Self> {
        spec.validate()?;
        let (k, f) = (spec.kernel_size, spec.filters);
        let mut blocks = Vec::with_capacity(spec.dilations.len());
        let mut cin = input_channels;
        for i in 0..spec.dilations.len() {
            let prefix = format!("{name}.block{i}");
            let mut kernel = |store: &mut ParamStore<T>, label: &str, cin: usize| {
                let t = Tensor::new(vec![k, cin, f], glorot_uniform(k * cin, k * f, k * cin * f, rng))?;
                store.add(format!("{prefix}.{label}"), t)
            };
            let conv1 = kernel(store, "conv1.kernel", cin)?;
            let bias1 = store.add(format!("{prefix}.conv1.bias"), Tensor::zeros(vec![f]))?;
            let conv2 = kernel(store, "conv2.kernel", f)?;
            let bias2 = store.add(format!("{prefix}.conv2.bias"), Tensor::zeros(vec![f]))?;
            let skip = if cin != f {
                Some(DenseParams::register(store, &format!("{prefix}.skip"), cin, f, rng)?)
            } else {
                None
            };
            blocks.push(TcnBlockParams {
                conv1,
                bias1,
                conv2,
                bias2,
                skip,
            });
            cin = f;
        }
        Ok(Self { blocks })
    }

    pub fn bind(&self, vars: &[Var]) -> TcnParams {
        TcnParams {
            blocks: self
                .blocks
                .iter()
                .map(|b| TcnBlockParams {
                    conv1: vars[b.conv1],
                    bias1: vars[b.bias1],
                    conv2: vars[b.conv2],
                    bias2: vars[b.bias2],
                    skip: b.skip.map(|s| s.bind(vars)),
                })
                .collect(),
        }
    }
}

/// Residual stack over `[batch, T, channels]`, one block per dilation:
/// `tanh(drop(tanh(conv2(drop(tanh(conv1(x)))))) + skip(x))`.
pub fn tcn_forward<T: Real, R: Rng + ?Sized>(
    g: &mut Graph<T>,
    input: Var,
    spec: &TcnSpec,
    params: &TcnParams,
    mode: Mode,
    rng: &mut R,
) -> Result<Var> {
    spec.validate()?;
    if params.blocks.len() != spec.dilations.len() {
        return Err(Error::Shape(format!(
            "tcn: {} parameter blocks for {} dilations",
            params.blocks.len(),
            spec.dilations.len()
        )));
    }
    let mut x = input;
    for (block, &d) in params.blocks.iter().zip(&spec.dilations) {
        let h = g.causal_conv(x, block.conv1, d)?;
        let h = g.add_bias(h, block.bias1)?;
        let h = g.tanh(h);
        let h = dropout(g, h, spec.dropout, mode, rng)?;
        let h = g.causal_conv(h, block.conv2, d)?;
        let h = g.add_bias(h, block.bias2)?;
        let h = g.tanh(h);
        let h = dropout(g, h, spec.dropout, mode, rng)?;
        let residual = match &block.skip {
            Some(skip) => {
                let z = g.matmul(x, skip.w)?;
                g.add_bias(z, skip.b)?
            }
            None => x,
        };
        let sum = g.add(h, residual)?;
        x = g.tanh(sum);
    }
    Ok(x)
}
