use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::nn::{Graph, ParamStore, Var};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckOptions {
    /// Finite-difference half-step.
    pub step: f64,
    /// Elements probed per parameter; `None` probes all of them.
    pub max_elements_per_param: Option<usize>,
    /// Lower bound on the relative-error denominator, so gradients that are
    /// numerically zero do not turn round-off into huge relative errors.
    pub denominator_floor: f64,
    /// Seed for picking the probed subset.
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            step: 1e-5,
            max_elements_per_param: None,
            denominator_floor: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub worst_parameter: String,
    pub worst_index: usize,
    pub elements_checked: usize,
}

/// `(f(x + h) - f(x - h)) / 2h`.
pub fn central_difference(mut f: impl FnMut(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Compares the tape gradient of a scalar loss against central differences
/// for (a subset of) every parameter element.
///
/// `loss` builds the forward pass from the bound parameter vars and returns
/// the scalar loss node; it must be deterministic (dropout off or frozen).
pub fn grad_check<F>(
    store: &mut ParamStore<f64>,
    mut loss: F,
    options: &GradCheckOptions,
) -> Result<GradCheckReport>
where
    F: FnMut(&mut Graph<f64>, &[Var]) -> Result<Var>,
{
    let mut g = Graph::new();
    let vars = store.bind(&mut g, true);
    let out = loss(&mut g, &vars)?;
    g.backward(out)?;
    let analytic: Vec<Vec<f64>> = vars
        .iter()
        .zip(store.iter())
        .map(|(&v, p)| {
            g.grad(v)
                .map(<[f64]>::to_vec)
                .unwrap_or_else(|| vec![0.0; p.tensor.len()])
        })
        .collect();
    drop(g);

    let mut eval = |store: &ParamStore<f64>| -> Result<f64> {
        let mut g = Graph::new();
        let vars = store.bind(&mut g, false);
        let out = loss(&mut g, &vars)?;
        Ok(g.scalar(out))
    };

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst_parameter: String::new(),
        worst_index: 0,
        elements_checked: 0,
    };
    for (p_idx, analytic) in analytic.iter().enumerate() {
        let len = store.get(p_idx).tensor.len();
        let indices: Vec<usize> = match options.max_elements_per_param {
            Some(k) if k < len => {
                let mut picked = sample(&mut rng, len, k).into_vec();
                picked.sort_unstable();
                picked
            }
            _ => (0..len).collect(),
        };
        for i in indices {
            let original = store.get(p_idx).tensor.values()[i];
            store.get_mut(p_idx).tensor.values_mut()[i] = original + options.step;
            let plus = eval(store)?;
            store.get_mut(p_idx).tensor.values_mut()[i] = original - options.step;
            let minus = eval(store)?;
            store.get_mut(p_idx).tensor.values_mut()[i] = original;

            let numeric = (plus - minus) / (2.0 * options.step);
            let err = relative_error(analytic[i], numeric, options.denominator_floor);
            report.elements_checked += 1;
            if report.worst_parameter.is_empty() || err > report.max_relative_error {
                report.max_relative_error = err;
                report.worst_parameter = store.get(p_idx).name.clone();
                report.worst_index = i;
            }
        }
    }
    Ok(report)
}
