use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dense::Dense;
use super::encoder::{ToyEncoder, Vocab};
use super::external::ExternalEmbeddings;
use super::head::{HeadRegistry, HeadSpec};
use super::model::{Features, Model};
use crate::error::{Error, Result};
use crate::taxonomy::Taxonomy;

pub const CHECKPOINT_FORMAT: &str = "patclass-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedArray {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureDescriptor {
    Toy {
        vocab: Vec<String>,
        embedding_dim: usize,
        output_dim: usize,
        max_len: usize,
    },
    External {
        dim: usize,
    },
}

/// Self-describing model file: architecture, class order, vocabulary and
/// flat parameter arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub head: HeadSpec,
    pub classes: Vec<String>,
    pub features: FeatureDescriptor,
    pub params: Vec<NamedArray>,
}

impl Checkpoint {
    pub fn from_model(model: &Model) -> Self {
        let features = match &model.features {
            Features::Toy(enc) => FeatureDescriptor::Toy {
                vocab: enc.vocab.tokens().to_vec(),
                embedding_dim: enc.embedding_dim,
                output_dim: enc.output_dim(),
                max_len: enc.max_len,
            },
            Features::External(ext) => FeatureDescriptor::External { dim: ext.dim },
        };
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            head: model.head.spec(),
            classes: model.classes.clone(),
            features,
            params: model
                .params()
                .into_iter()
                .map(|p| NamedArray {
                    name: p.name.to_owned(),
                    rows: p.rows,
                    cols: p.cols,
                    values: p.values.to_vec(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Self = serde_json::from_str(text)
            .map_err(|e| Error::Checkpoint(format!("unreadable: {e}")))?;
        if ck.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!("unknown format '{}'", ck.format)));
        }
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported version {} (expected {CHECKPOINT_VERSION})",
                ck.version
            )));
        }
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_json(&text)
    }

    /// Rebuilds the model. External-feature checkpoints need the matching
    /// embeddings.
    pub fn into_model(
        self,
        taxonomy: &Taxonomy,
        registry: &HeadRegistry,
        embeddings: Option<ExternalEmbeddings>,
    ) -> Result<Model> {
        let codes: Vec<&str> = taxonomy.codes().collect();
        if self.classes != codes {
            return Err(Error::Checkpoint(format!(
                "class order {:?} does not match the taxonomy {:?}",
                self.classes, codes
            )));
        }
        let features = match self.features {
            FeatureDescriptor::Toy {
                vocab,
                embedding_dim,
                output_dim,
                max_len,
            } => {
                let vocab = Vocab::from_tokens(vocab)?;
                Features::Toy(ToyEncoder {
                    embedding: vec![0.0; vocab.len() * embedding_dim],
                    vocab,
                    embedding_dim,
                    proj: Dense::zeros(embedding_dim, output_dim),
                    max_len,
                })
            }
            FeatureDescriptor::External { dim } => {
                let ext = embeddings.ok_or_else(|| {
                    Error::Checkpoint("model uses external embeddings; none were supplied".into())
                })?;
                if ext.dim != dim {
                    return Err(Error::Embeddings(format!(
                        "vectors have dimension {}, model expects {dim}",
                        ext.dim
                    )));
                }
                Features::External(ext)
            }
        };
        let head = registry.build(
            &self.head,
            features.dim(),
            taxonomy,
            &mut ChaCha8Rng::seed_from_u64(0),
        )?;
        let mut model = Model::new(taxonomy, features, head)?;
        let expected: Vec<(String, usize)> = model
            .params()
            .iter()
            .map(|p| (p.name.to_owned(), p.values.len()))
            .collect();
        if expected.len() != self.params.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} parameter arrays, found {}",
                expected.len(),
                self.params.len()
            )));
        }
        for ((name, len), stored) in expected.iter().zip(&self.params) {
            if *name != stored.name || *len != stored.values.len() {
                return Err(Error::Checkpoint(format!(
                    "parameter '{}' ({} values) does not fit '{name}' ({len} values)",
                    stored.name,
                    stored.values.len()
                )));
            }
            if stored.values.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!("parameter '{}'", stored.name)));
            }
        }
        for (dst, src) in model.params_mut().into_iter().zip(self.params) {
            dst.copy_from_slice(&src.values);
        }
        Ok(model)
    }
}
