//! Binary model file.
//!
//! `"SHM1"`, then as u32 LE the encoding id, the number of layer sizes and
//! each size from input to output. Then every value as an f64 LE: the flat
//! parameter buffer, followed by the 18 base feature means and the 18 scales.

use thiserror::Error;

use super::{Encoding, FeatureStats, MlpModel, BASE_DIM, NUMERIC_DIM};
use crate::scalar::Scalar;
use crate::schema::NUM_LABELS;

pub const MODEL_MAGIC: &[u8; 4] = b"SHM1";

pub(super) const MAX_LAYERS: usize = 8;
pub(super) const MAX_WIDTH: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelFileError {
    #[error("not a model file (bad magic)")]
    Magic,
    #[error("model file truncated or oversized: expected {expected} bytes, got {actual}")]
    Size { expected: usize, actual: usize },
    #[error("unknown feature encoding id {0}")]
    Encoding(u32),
    #[error("model layer sizes {0:?} do not fit the feature encoding and label count")]
    Dimensions(Vec<usize>),
    #[error("model file contains a non-finite value")]
    NonFinite,
}

fn u32_at(bytes: &[u8], at: usize) -> Result<u32, ModelFileError> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
        .ok_or(ModelFileError::Size {
            expected: at + 4,
            actual: bytes.len(),
        })
}

impl<T: Scalar> MlpModel<T> {
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = 12 + 4 * self.sizes.len();
        let mut out = Vec::with_capacity(header + 8 * (self.params.len() + 2 * BASE_DIM));
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&self.encoding.id().to_le_bytes());
        out.extend_from_slice(&(self.sizes.len() as u32).to_le_bytes());
        for &d in &self.sizes {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        let values = self.params.iter().chain(&self.stats.mean).chain(&self.stats.scale);
        for v in values {
            out.extend_from_slice(&v.as_f64().to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ModelFileError> {
        if bytes.len() < 4 || &bytes[..4] != MODEL_MAGIC {
            return Err(ModelFileError::Magic);
        }
        let id = u32_at(bytes, 4)?;
        let encoding = Encoding::from_id(id).ok_or(ModelFileError::Encoding(id))?;
        let count = u32_at(bytes, 8)? as usize;
        if !(3..=MAX_LAYERS + 1).contains(&count) {
            return Err(ModelFileError::Dimensions(Vec::new()));
        }
        let sizes = (0..count)
            .map(|k| u32_at(bytes, 12 + 4 * k).map(|v| v as usize))
            .collect::<Result<Vec<_>, _>>()?;
        let hidden = &sizes[1..count - 1];
        if sizes[0] != encoding.dim()
            || sizes[count - 1] != NUM_LABELS
            || hidden.iter().any(|&h| h == 0 || h > MAX_WIDTH)
        {
            return Err(ModelFileError::Dimensions(sizes));
        }
        let mut model = MlpModel::zeros(encoding, hidden, FeatureStats::identity());
        let n_params = model.params.len();
        let header = 12 + 4 * count;
        let expected = header + 8 * (n_params + 2 * BASE_DIM);
        if bytes.len() != expected {
            return Err(ModelFileError::Size {
                expected,
                actual: bytes.len(),
            });
        }
        let mut values = bytes[header..].chunks_exact(8).map(|c| {
            let v = f64::from_le_bytes(c.try_into().unwrap());
            if v.is_finite() {
                Ok(T::lit(v))
            } else {
                Err(ModelFileError::NonFinite)
            }
        });
        let mut take = |n: usize| values.by_ref().take(n).collect::<Result<Vec<T>, _>>();
        model.params = take(n_params)?;
        let mean = take(BASE_DIM)?;
        let scale = take(BASE_DIM)?;
        // not stored; a unit scale on a numeric dim is what fitting leaves behind
        let constant_dims = (0..NUMERIC_DIM).filter(|&d| scale[d] == T::one()).collect();
        model.stats = FeatureStats {
            mean,
            scale,
            constant_dims,
        };
        Ok(model)
    }
}
