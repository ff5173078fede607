use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Model, ModelConfig, Parameters};
use crate::autodiff::Tensor;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedTable {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

/// Self-describing JSON checkpoint: configuration plus every table by name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub tables: Vec<NamedTable>,
}

impl Checkpoint {
    pub fn from_model(model: &Model) -> Self {
        let mut tables = Vec::new();
        model.params.for_each(&mut |name, t| {
            tables.push(NamedTable {
                name,
                shape: t.shape().to_vec(),
                values: t.data().to_vec(),
            })
        });
        Checkpoint {
            config: model.config.clone(),
            tables,
        }
    }

    pub fn into_model(self) -> Result<Model> {
        self.config.validate()?;
        let mut by_name: HashMap<String, NamedTable> = HashMap::new();
        for t in self.tables {
            if by_name.contains_key(&t.name) {
                return Err(Error::Checkpoint(format!("duplicate table `{}`", t.name)));
            }
            by_name.insert(t.name.clone(), t);
        }
        let mut params = Parameters::zeros(&self.config);
        let mut problem = None;
        params.for_each_mut(&mut |name, slot: &mut Tensor| {
            if problem.is_some() {
                return;
            }
            match by_name.remove(&name) {
                None => problem = Some(format!("missing table `{name}`")),
                Some(t) if t.shape != slot.shape() => {
                    problem = Some(format!(
                        "table `{name}` has shape {:?}, configuration implies {:?}",
                        t.shape,
                        slot.shape()
                    ))
                }
                Some(t) => match Tensor::new(t.shape, t.values) {
                    Ok(v) => *slot = v,
                    Err(e) => problem = Some(format!("table `{name}`: {e}")),
                },
            }
        });
        if let Some(p) = problem {
            return Err(Error::Checkpoint(p));
        }
        if let Some(extra) = by_name.keys().min() {
            return Err(Error::Checkpoint(format!("unexpected table `{extra}`")));
        }
        Model::from_parts(self.config, params)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })
    }
}

impl Model {
    pub fn save(&self, path: &Path) -> Result<()> {
        Checkpoint::from_model(self).save(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Checkpoint::load(path)?.into_model()
    }
}
