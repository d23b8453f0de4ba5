#![allow(dead_code)]

use chrono::{Months, NaiveDate};
use epsnet::domain::{FirmGroup, FirmId, FirmPanel, Sample};
use epsnet::ingest::{generate_synthetic, SchemaConfig, SyntheticConfig};
use epsnet::models::{ArchitectureKind, ArchitectureSpec};
use epsnet::nn::TcnSpec;

pub fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

pub fn sample(firm: &str, group: FirmGroup, label_date: NaiveDate) -> Sample {
    Sample {
        firm: FirmId::new(firm).unwrap(),
        group,
        anchor_date: label_date - Months::new(3),
        window_len: 1,
        quarter_features: 1,
        quarter_window: vec![0.0],
        market_window: vec![0.0],
        label: 0.0,
        label_date,
        analyst_forecast: None,
        persistent_prediction: 0.0,
    }
}

pub fn synth(n_firms: usize, seed: u64) -> (Vec<FirmPanel>, SchemaConfig) {
    let schema = SchemaConfig::default();
    let config = SyntheticConfig {
        n_firms,
        seed,
        ..SyntheticConfig::default()
    };
    (generate_synthetic(&config, &schema).unwrap(), schema)
}

/// Reduced dimensions with the same topology as the full architectures.
pub fn small_spec(kind: ArchitectureKind) -> ArchitectureSpec {
    ArchitectureSpec {
        kind,
        quarterly_shape: (6, 3),
        shares_flat_dim: 8,
        shares_tower_dims: vec![6, 5, 4],
        head_dims: vec![4, 3, 1],
        lstm_dims: (5, 3),
        tcn: TcnSpec {
            filters: 4,
            kernel_size: 3,
            dilations: vec![1, 2],
            dropout: 0.0,
        },
        post_tcn_dense: 3,
        dropout: 0.0,
    }
}

/// Deterministic pseudo-random samples matching `spec`'s input shapes.
pub fn random_samples(spec: &ArchitectureSpec, n: usize, seed: u64) -> Vec<Sample> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (window, features) = spec.quarterly_shape;
    (0..n)
        .map(|i| {
            let mut s = sample(
                &format!("F{i:04}"),
                if i % 4 == 0 { FirmGroup::Financial } else { FirmGroup::Nonfinancial },
                date(2014, 3, 31) + Months::new(3 * (i as u32 % 12)),
            );
            s.window_len = window;
            s.quarter_features = features;
            s.quarter_window = (0..window * features).map(|_| rng.random_range(-1.5..1.5)).collect();
            s.market_window = (0..spec.shares_flat_dim).map(|_| rng.random_range(-1.5..1.5)).collect();
            s.persistent_prediction = s.quarter_window[(window - 1) * features];
            s.label = 0.5 * s.persistent_prediction + rng.random_range(-0.3..0.3);
            s.analyst_forecast = Some(s.label + rng.random_range(-0.2..0.2));
            s
        })
        .collect()
}

pub mod grads {
    use epsnet::models::{build_model, ArchitectureKind, ArchitectureSpec, Batch};
    use epsnet::nn::{
        dense_forward, grad_check, lstm_forward, tcn_forward, Activation, DenseParams,
        GradCheckOptions, GradCheckReport, Graph, LstmLayerSpec, LstmParams, Mode, ParamStore,
        TcnParams, TcnSpec, Var,
    };
    use epsnet::Result;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn inputs(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    fn sum_of_squares(g: &mut Graph<f64>, y: Var) -> Result<Var> {
        let n = g.value(y).len();
        let flat = g.reshape(y, vec![n])?;
        g.mse(flat, inputs(n, 99))
    }

    pub fn dense() -> Result<GradCheckReport> {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut store = ParamStore::new();
        let l0 = DenseParams::register(&mut store, "d0", 5, 4, &mut rng)?;
        let l1 = DenseParams::register(&mut store, "d1", 4, 3, &mut rng)?;
        let x = inputs(3 * 5, 2);
        grad_check(
            &mut store,
            |g, vars| {
                let x = g.input(vec![3, 5], x.clone())?;
                let h = dense_forward(g, x, &l0.bind(vars), Activation::Tanh)?;
                let y = dense_forward(g, h, &l1.bind(vars), Activation::Sigmoid)?;
                sum_of_squares(g, y)
            },
            &GradCheckOptions::default(),
        )
    }

    pub fn lstm() -> Result<GradCheckReport> {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut store = ParamStore::new();
        let spec = LstmLayerSpec {
            input_dim: 3,
            hidden_dim: 4,
            return_sequence: true,
            recurrent_dropout: 0.0,
        };
        let params = LstmParams::register(&mut store, "lstm", &spec, &mut rng)?;
        let x = inputs(2 * 3 * 3, 4);
        grad_check(
            &mut store,
            |g, vars| {
                let x = g.input(vec![2, 3, 3], x.clone())?;
                let y = lstm_forward(g, x, &spec, &params.bind(vars), Mode::Eval, &mut rng_unused())?;
                sum_of_squares(g, y)
            },
            &GradCheckOptions::default(),
        )
    }

    pub fn tcn() -> Result<GradCheckReport> {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut store = ParamStore::new();
        let spec = TcnSpec {
            filters: 3,
            kernel_size: 3,
            dilations: vec![1, 2],
            dropout: 0.0,
        };
        let params = TcnParams::register(&mut store, "tcn", 2, &spec, &mut rng)?;
        let x = inputs(2 * 7 * 2, 6);
        grad_check(
            &mut store,
            |g, vars| {
                let x = g.input(vec![2, 7, 2], x.clone())?;
                let y = tcn_forward(g, x, &spec, &params.bind(vars), Mode::Eval, &mut rng_unused())?;
                sum_of_squares(g, y)
            },
            &GradCheckOptions::default(),
        )
    }

    /// The complete network with the printed dimensions, dropout off,
    /// probing `per_param` elements of every parameter.
    pub fn full(kind: ArchitectureKind, per_param: usize) -> Result<GradCheckReport> {
        let spec = ArchitectureSpec::for_kind(kind).with_dropout(0.0);
        let model = build_model::<f64>(&spec, 7)?;
        let samples = super::random_samples(&spec, 3, 8);
        let batch = Batch::<f64>::from_samples(&spec, &samples)?;
        let mut store = model.params.clone();
        grad_check(
            &mut store,
            |g, vars| {
                let y = model.forward(g, vars, &batch, Mode::Eval, &mut rng_unused())?;
                let y = g.reshape(y, vec![batch.size])?;
                g.mse(y, batch.labels.clone())
            },
            &GradCheckOptions {
                max_elements_per_param: Some(per_param),
                seed: 11,
                ..GradCheckOptions::default()
            },
        )
    }

    /// Eval mode with zero dropout never draws from it.
    fn rng_unused() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(0)
    }
}

/// Parameter shapes read off the architecture drawing, written out by hand.
pub fn printed_shapes(kind: ArchitectureKind) -> Vec<(String, Vec<usize>)> {
    let mut out: Vec<(String, Vec<usize>)> = Vec::new();
    let mut push = |name: &str, shape: &[usize]| out.push((name.to_string(), shape.to_vec()));
    match kind {
        ArchitectureKind::Lstm => {
            push("lstm0.w_input", &[19, 4 * 76]);
            push("lstm0.w_hidden", &[76, 4 * 76]);
            push("lstm0.bias", &[4 * 76]);
            push("lstm1.w_input", &[76, 4 * 38]);
            push("lstm1.w_hidden", &[38, 4 * 38]);
            push("lstm1.bias", &[4 * 38]);
        }
        ArchitectureKind::Tcn => {
            for b in 0..4 {
                let cin = if b == 0 { 19 } else { 32 };
                push(&format!("tcn.block{b}.conv1.kernel"), &[3, cin, 32]);
                push(&format!("tcn.block{b}.conv1.bias"), &[32]);
                push(&format!("tcn.block{b}.conv2.kernel"), &[3, 32, 32]);
                push(&format!("tcn.block{b}.conv2.bias"), &[32]);
                if b == 0 {
                    push("tcn.block0.skip.weight", &[19, 32]);
                    push("tcn.block0.skip.bias", &[32]);
                }
            }
            push("tcn_dense.weight", &[32, 38]);
            push("tcn_dense.bias", &[38]);
        }
    }
    for (name, shape) in [
        ("shares0.weight", &[220, 660][..]),
        ("shares0.bias", &[660]),
        ("shares1.weight", &[660, 440]),
        ("shares1.bias", &[440]),
        ("shares2.weight", &[440, 220]),
        ("shares2.bias", &[220]),
        ("head0.weight", &[38 + 220, 19]),
        ("head0.bias", &[19]),
        ("head1.weight", &[19, 8]),
        ("head1.bias", &[8]),
        ("head2.weight", &[8, 1]),
        ("head2.bias", &[1]),
    ] {
        push(name, shape);
    }
    out
}

/// One causality probe on the full-size TCN stack: perturbing inputs after a
/// random step `t` must leave every output at or before `t` bit-identical.
pub fn causality_trial(seed: u64) -> bool {
    use epsnet::nn::{tcn_forward, Graph, Mode, ParamStore, TcnParams};
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let spec = ArchitectureSpec::tcn().tcn;
    let (steps, cin, batch) = (20, 19, 2);
    let mut store = ParamStore::<f64>::new();
    let params = TcnParams::register(&mut store, "tcn", cin, &spec, &mut rng).unwrap();
    let x: Vec<f64> = (0..batch * steps * cin).map(|_| rng.random_range(-3.0..3.0)).collect();
    let t = rng.random_range(0..steps - 1);
    let mut y = x.clone();
    for b in 0..batch {
        for s in t + 1..steps {
            for c in 0..cin {
                if rng.random_bool(0.7) {
                    y[(b * steps + s) * cin + c] += rng.random_range(-50.0..50.0);
                }
            }
        }
    }
    let run = |input: Vec<f64>| {
        let mut g = Graph::new();
        let vars = store.bind(&mut g, false);
        let xv = g.input(vec![batch, steps, cin], input).unwrap();
        let mut unused = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let out = tcn_forward(&mut g, xv, &spec, &params.bind(&vars), Mode::Eval, &mut unused).unwrap();
        g.value(out).to_vec()
    };
    let (a, b) = (run(x), run(y));
    let f = spec.filters;
    (0..batch).all(|bi| {
        (0..=t).all(|s| {
            let r = (bi * steps + s) * f..(bi * steps + s + 1) * f;
            a[r.clone()].iter().zip(&b[r]).all(|(p, q)| p.to_bits() == q.to_bits())
        })
    })
}
