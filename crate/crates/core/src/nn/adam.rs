use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Parameter, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lr >= 0.0
            && self.lr.is_finite()
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0;
        if !ok {
            return Err(Error::Config(format!("invalid Adam settings {self:?}")));
        }
        Ok(())
    }
}

/// One bias-corrected Adam update per parameter, then clears the gradients.
///
/// Every parameter must carry a gradient; nothing is updated otherwise.
pub fn adam_step<T: Real>(params: &mut [Parameter<T>], config: &AdamConfig) -> Result<()> {
    if let Some(p) = params.iter().find(|p| p.tensor.grad.is_none()) {
        return Err(Error::MissingGradient(p.name.clone()));
    }
    let lr = T::from_f64_lossy(config.lr);
    let b1 = T::from_f64_lossy(config.beta1);
    let b2 = T::from_f64_lossy(config.beta2);
    let eps = T::from_f64_lossy(config.epsilon);
    let one = T::one();
    for p in params.iter_mut() {
        p.step_count += 1;
        let t = i32::try_from(p.step_count).unwrap_or(i32::MAX);
        let c1 = one - b1.powi(t);
        let c2 = one - b2.powi(t);
        let grad = p.tensor.grad.take().expect("checked above");
        let Parameter {
            tensor,
            adam_m,
            adam_v,
            ..
        } = p;
        for (((theta, g), m), v) in tensor
            .values_mut()
            .iter_mut()
            .zip(&grad)
            .zip(adam_m.iter_mut())
            .zip(adam_v.iter_mut())
        {
            *m = b1 * *m + (one - b1) * *g;
            *v = b2 * *v + (one - b2) * *g * *g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *theta = *theta - lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
