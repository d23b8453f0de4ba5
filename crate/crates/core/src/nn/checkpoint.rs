use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil::{read_json, write_json};
use crate::nn::{ParamStore, Precision, Real};

pub const CHECKPOINT_FORMAT: &str = "epsnet-checkpoint/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckpointParam {
    pub name: String,
    pub shape: Vec<usize>,
    /// Base64 of the little-endian element bytes.
    pub data: String,
}

/// Parameter snapshot tied to an architecture fingerprint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub precision: Precision,
    pub fingerprint: String,
    pub params: Vec<CheckpointParam>,
}

impl Checkpoint {
    pub fn capture<T: Real>(store: &ParamStore<T>, fingerprint: &str) -> Self {
        let params = store
            .iter()
            .map(|p| {
                let mut bytes = Vec::with_capacity(p.tensor.len() * T::BYTES);
                for &v in p.tensor.values() {
                    v.write_le(&mut bytes);
                }
                CheckpointParam {
                    name: p.name.clone(),
                    shape: p.tensor.shape().to_vec(),
                    data: STANDARD.encode(bytes),
                }
            })
            .collect();
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            precision: T::PRECISION,
            fingerprint: fingerprint.to_string(),
            params,
        }
    }

    /// Writes the stored values into `store`, which must have been built for
    /// the same architecture and precision.
    pub fn restore<T: Real>(&self, store: &mut ParamStore<T>, fingerprint: &str) -> Result<()> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!("unknown format {:?}", self.format)));
        }
        if self.fingerprint != fingerprint {
            return Err(Error::Checkpoint(format!(
                "architecture fingerprint mismatch: checkpoint {:?}, model {:?}",
                self.fingerprint, fingerprint
            )));
        }
        if self.precision != T::PRECISION {
            return Err(Error::Checkpoint(format!(
                "precision mismatch: checkpoint {}, model {}",
                self.precision.as_str(),
                T::PRECISION.as_str()
            )));
        }
        if self.params.len() != store.len() {
            return Err(Error::Checkpoint(format!(
                "{} parameters in checkpoint, model has {}",
                self.params.len(),
                store.len()
            )));
        }
        for (saved, p) in self.params.iter().zip(store.iter_mut()) {
            if saved.name != p.name || saved.shape != p.tensor.shape() {
                return Err(Error::Checkpoint(format!(
                    "parameter {} {:?} does not match model parameter {} {:?}",
                    saved.name,
                    saved.shape,
                    p.name,
                    p.tensor.shape()
                )));
            }
            let bytes = STANDARD
                .decode(&saved.data)
                .map_err(|e| Error::Checkpoint(format!("parameter {}: {e}", saved.name)))?;
            if bytes.len() != p.tensor.len() * T::BYTES {
                return Err(Error::Checkpoint(format!(
                    "parameter {}: {} bytes for {} elements",
                    saved.name,
                    bytes.len(),
                    p.tensor.len()
                )));
            }
            for (dst, chunk) in p.tensor.values_mut().iter_mut().zip(bytes.chunks_exact(T::BYTES)) {
                *dst = T::read_le(chunk);
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Tensor;

    fn store<T: Real>(vals: &[f64]) -> ParamStore<T> {
        let mut s = ParamStore::new();
        let v = vals.iter().map(|&x| T::from_f64_lossy(x)).collect();
        s.add("layer.weight", Tensor::new(vec![2, 2], v).unwrap()).unwrap();
        s
    }

    #[test]
    fn round_trip_is_exact() {
        let src = store::<f64>(&[0.1, -2.5e-300, 3.0, f64::MIN_POSITIVE]);
        let ckpt = Checkpoint::capture(&src, "arch");
        let json = serde_json::to_string(&ckpt).unwrap();
        let back: Checkpoint = serde_json::from_str(&json).unwrap();
        let mut dst = store::<f64>(&[0.0; 4]);
        back.restore(&mut dst, "arch").unwrap();
        assert_eq!(dst.get(0).tensor.values(), src.get(0).tensor.values());
    }

    #[test]
    fn rejects_mismatches() {
        let ckpt = Checkpoint::capture(&store::<f32>(&[1.0; 4]), "lstm");
        assert!(ckpt.restore(&mut store::<f32>(&[0.0; 4]), "tcn").is_err());
        assert!(ckpt.restore(&mut store::<f64>(&[0.0; 4]), "lstm").is_err());
        let mut other = ParamStore::<f32>::new();
        other.add("layer.weight", Tensor::zeros(vec![4])).unwrap();
        assert!(ckpt.restore(&mut other, "lstm").is_err());
    }
}
