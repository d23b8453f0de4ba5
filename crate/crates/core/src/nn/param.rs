use std::collections::HashMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::{Graph, Real, Tensor, Var};

/// A trainable tensor with its Adam moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameter<T> {
    pub name: String,
    pub tensor: Tensor<T>,
    pub adam_m: Vec<T>,
    pub adam_v: Vec<T>,
    pub step_count: u64,
}

impl<T: Real> Parameter<T> {
    pub fn new(name: impl Into<String>, tensor: Tensor<T>) -> Self {
        let n = tensor.len();
        Self {
            name: name.into(),
            tensor: tensor.with_grad(),
            adam_m: vec![T::zero(); n],
            adam_v: vec![T::zero(); n],
            step_count: 0,
        }
    }
}

/// Uniform Glorot initialisation, `U(-l, l)` with `l = sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform<T: Real, R: Rng + ?Sized>(
    fan_in: usize,
    fan_out: usize,
    len: usize,
    rng: &mut R,
) -> Vec<T> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..len)
        .map(|_| T::from_f64_lossy(rng.random_range(-limit..limit)))
        .collect()
}

/// Ordered, uniquely named parameter collection.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore<T> {
    params: Vec<Parameter<T>>,
    index: HashMap<String, usize>,
}

impl<T: Real> ParamStore<T> {
    pub fn new() -> Self {
        Self {
            params: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn add(&mut self, name: impl Into<String>, tensor: Tensor<T>) -> Result<usize> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(Error::Config(format!("duplicate parameter name {name:?}")));
        }
        let idx = self.params.len();
        self.index.insert(name.clone(), idx);
        self.params.push(Parameter::new(name, tensor));
        Ok(idx)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn get(&self, idx: usize) -> &Parameter<T> {
        &self.params[idx]
    }

    pub fn get_mut(&mut self, idx: usize) -> &mut Parameter<T> {
        &mut self.params[idx]
    }

    pub fn by_name(&self, name: &str) -> Option<&Parameter<T>> {
        self.index.get(name).map(|&i| &self.params[i])
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Parameter<T>> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> std::slice::IterMut<'_, Parameter<T>> {
        self.params.iter_mut()
    }

    pub fn params_mut(&mut self) -> &mut [Parameter<T>] {
        &mut self.params
    }

    pub fn total_elements(&self) -> usize {
        self.params.iter().map(|p| p.tensor.len()).sum()
    }

    /// Places every parameter on the tape, as differentiable leaves when
    /// `trainable`, as constants otherwise. Returned vars follow store order.
    pub fn bind(&self, g: &mut Graph<T>, trainable: bool) -> Vec<Var> {
        self.params
            .iter()
            .map(|p| {
                let shape = p.tensor.shape().to_vec();
                let values = p.tensor.values().to_vec();
                if trainable {
                    g.leaf(shape, values)
                } else {
                    g.input(shape, values)
                }
                .expect("stored tensors have consistent shapes")
            })
            .collect()
    }

    /// Adds the tape's leaf gradients into each parameter's gradient buffer.
    /// Parameters the loss does not reach receive an explicit zero gradient.
    pub fn accumulate_grads(&mut self, g: &Graph<T>, vars: &[Var]) {
        for (p, &v) in self.params.iter_mut().zip(vars) {
            match g.grad(v) {
                Some(grad) => p.tensor.accumulate_grad(grad),
                None => {
                    if p.tensor.grad.is_none() {
                        p.tensor.grad = Some(vec![T::zero(); p.tensor.len()]);
                    }
                }
            }
        }
    }

    pub fn clear_grads(&mut self) {
        for p in &mut self.params {
            p.tensor.grad = None;
        }
    }

    /// Copies parameter values (not optimizer state) from another store with
    /// identical names and shapes.
    pub fn copy_values_from(&mut self, other: &ParamStore<T>) -> Result<()> {
        if other.len() != self.len() {
            return Err(Error::Shape(format!(
                "{} parameters vs {}",
                other.len(),
                self.len()
            )));
        }
        for (dst, src) in self.params.iter_mut().zip(&other.params) {
            if dst.name != src.name || dst.tensor.shape() != src.tensor.shape() {
                return Err(Error::Shape(format!(
                    "parameter {} {:?} vs {} {:?}",
                    dst.name,
                    dst.tensor.shape(),
                    src.name,
                    src.tensor.shape()
                )));
            }
            dst.tensor.values_mut().copy_from_slice(src.tensor.values());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn glorot_is_bounded_and_reproducible() {
        let a: Vec<f64> = glorot_uniform(10, 20, 500, &mut ChaCha8Rng::seed_from_u64(1));
        let b: Vec<f64> = glorot_uniform(10, 20, 500, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(a, b);
        let limit = (6.0f64 / 30.0).sqrt();
        assert!(a.iter().all(|v| v.abs() < limit));
    }

    #[test]
    fn names_are_unique() {
        let mut s = ParamStore::<f32>::new();
        s.add("w", Tensor::zeros(vec![2])).unwrap();
        assert!(s.add("w", Tensor::zeros(vec![2])).is_err());
        assert_eq!(s.by_name("w").unwrap().tensor.len(), 2);
    }
}
