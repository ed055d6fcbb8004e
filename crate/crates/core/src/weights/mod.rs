//! Named weight tensors: deterministic initialisation, the CFW1 container,
//! and content fingerprints.

mod fingerprint;
mod init;
mod io;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use fingerprint::{fingerprint, EMPTY_FINGERPRINT};
pub use init::{init_deterministic, SplitMix64};
pub use io::{load_weights, save_weights, FORMAT_VERSION, MAGIC};

/// Storage precision recorded for a tensor.
///
/// Values are always held as `f32` in memory; `F16` marks tensors whose
/// values are exactly representable in half precision (they were loaded
/// from, or rounded for, a half-precision container).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DType {
    F32,
    F16,
}

impl DType {
    pub fn code(self) -> u8 {
        match self {
            DType::F32 => 0,
            DType::F16 => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(DType::F32),
            1 => Some(DType::F16),
            _ => None,
        }
    }

    pub fn size(self) -> usize {
        match self {
            DType::F32 => 4,
            DType::F16 => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightTensor {
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
    pub dtype: DType,
}

impl WeightTensor {
    pub fn new(dims: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if n != data.len() {
            return Err(Error::shape(
                "weight",
                format!("{} values for dims {dims:?}", data.len()),
            ));
        }
        Ok(WeightTensor {
            dims,
            data,
            dtype: DType::F32,
        })
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    /// Round every value through half precision and tag the tensor as such.
    pub fn to_f16(&self) -> WeightTensor {
        WeightTensor {
            dims: self.dims.clone(),
            data: self
                .data
                .iter()
                .map(|&v| half::f16::from_f32(v).to_f32())
                .collect(),
            dtype: DType::F16,
        }
    }
}

/// Descriptive fields carried alongside the tensors. Only held in memory;
/// the CFW1 container stores tensors alone.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StoreMetadata {
    pub variant: Option<String>,
    pub format_version: u32,
    pub created_by: Option<String>,
}

/// Insertion-ordered map from canonical block parameter names to tensors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeightStore {
    entries: IndexMap<String, WeightTensor>,
    pub metadata: StoreMetadata,
}

impl WeightStore {
    pub fn new() -> Self {
        WeightStore {
            entries: IndexMap::new(),
            metadata: StoreMetadata {
                format_version: FORMAT_VERSION,
                ..Default::default()
            },
        }
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: WeightTensor) -> Result<()> {
        let name = name.into();
        if self.entries.contains_key(&name) {
            return Err(Error::DuplicateName(name));
        }
        self.entries.insert(name, tensor);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&WeightTensor> {
        self.entries
            .get(name)
            .ok_or_else(|| Error::MissingWeight(name.to_string()))
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut WeightTensor> {
        self.entries.get_mut(name)
    }

    /// Fetch a tensor and check it has exactly `dims`.
    pub fn expect(&self, name: &str, dims: &[usize]) -> Result<&WeightTensor> {
        let t = self.get(name)?;
        if t.dims != dims {
            return Err(Error::WeightShape {
                name: name.to_string(),
                expected: dims.to_vec(),
                found: t.dims.clone(),
            });
        }
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &WeightTensor)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Total number of scalars across all tensors.
    pub fn num_scalars(&self) -> usize {
        self.entries.values().map(WeightTensor::numel).sum()
    }

    /// Zero every tensor whose name satisfies `pred`; returns how many matched.
    pub fn zero_where(&mut self, pred: impl Fn(&str) -> bool) -> usize {
        let mut n = 0;
        for (name, t) in &mut self.entries {
            if pred(name) {
                t.data.iter_mut().for_each(|v| *v = 0.0);
                n += 1;
            }
        }
        n
    }

    /// A copy with every tensor rounded to `dtype`.
    pub fn converted(&self, dtype: DType) -> WeightStore {
        let entries = self
            .entries
            .iter()
            .map(|(k, t)| {
                let t = match dtype {
                    DType::F16 => t.to_f16(),
                    DType::F32 => WeightTensor {
                        dtype: DType::F32,
                        ..t.clone()
                    },
                };
                (k.clone(), t)
            })
            .collect();
        WeightStore {
            entries,
            metadata: self.metadata.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insertion_order_and_duplicates() {
        let mut s = WeightStore::new();
        s.insert("b", WeightTensor::new(vec![1], vec![1.0]).unwrap()).unwrap();
        s.insert("a", WeightTensor::new(vec![2], vec![1.0, 2.0]).unwrap()).unwrap();
        assert!(matches!(
            s.insert("b", WeightTensor::new(vec![1], vec![0.0]).unwrap()),
            Err(Error::DuplicateName(_))
        ));
        assert_eq!(s.names().collect::<Vec<_>>(), ["b", "a"]);
        assert_eq!(s.num_scalars(), 3);
    }

    #[test]
    fn expect_checks_shape() {
        let mut s = WeightStore::new();
        s.insert("w", WeightTensor::new(vec![2, 1], vec![1.0, 2.0]).unwrap()).unwrap();
        assert!(s.expect("w", &[2, 1]).is_ok());
        assert!(matches!(s.expect("w", &[1, 2]), Err(Error::WeightShape { .. })));
        assert!(matches!(s.expect("x", &[1]), Err(Error::MissingWeight(_))));
    }
}
