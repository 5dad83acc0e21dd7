use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::params::ParamStore;
use super::tape::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredTensor {
    pub shape: [usize; 2],
    /// Row-major values.
    pub values: Vec<f64>,
}

/// Flat map from parameter name to tensor, serialized as JSON.
///
/// Floats are written in shortest round-trip form and parsed exactly, so a
/// save/load cycle is bit-exact for finite values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub params: BTreeMap<String, StoredTensor>,
}

impl Checkpoint {
    pub fn from_store(store: &ParamStore) -> Self {
        let params = store
            .iter()
            .map(|p| {
                let (r, c) = p.value.dim();
                let stored = StoredTensor {
                    shape: [r, c],
                    values: p.value.iter().copied().collect(),
                };
                (p.name.clone(), stored)
            })
            .collect();
        Checkpoint { params }
    }

    /// Copies stored values into `store`; every parameter must be present
    /// with a matching shape and no extra entries may remain.
    pub fn restore_into(&self, store: &mut ParamStore) -> Result<()> {
        for p in store.iter() {
            let stored = self.params.get(&p.name).ok_or_else(|| Error::Checkpoint {
                field: p.name.clone(),
                reason: "missing from checkpoint".into(),
            })?;
            let (r, c) = p.value.dim();
            if stored.shape != [r, c] || stored.values.len() != r * c {
                return Err(Error::Checkpoint {
                    field: p.name.clone(),
                    reason: format!("has shape {:?}, model expects [{r}, {c}]", stored.shape),
                });
            }
        }
        if let Some(extra) = self.params.keys().find(|k| store.find(k).is_none()) {
            return Err(Error::Checkpoint {
                field: extra.clone(),
                reason: "is not a parameter of this model".into(),
            });
        }
        for p in store.iter_mut() {
            let stored = &self.params[&p.name];
            p.value = Tensor::from_shape_vec(p.value.raw_dim(), stored.values.clone())
                .expect("shape checked");
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
