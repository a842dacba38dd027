use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::encoder::{EncoderConfig, ToyEncoder, Vocab};
use super::external::ExternalEmbeddings;
use super::head::{ClassifierHead, HeadForward, HeadRegistry, HeadSpec};
use super::params::{Gradients, ParamView};
use super::sigmoid;
use crate::error::{Error, Result};
use crate::taxonomy::Taxonomy;

/// Feature provider for [`Model::initialize`].
pub enum FeatureInit<'a> {
    Toy {
        config: &'a EncoderConfig,
        documents: &'a [Vec<String>],
    },
    External(ExternalEmbeddings),
}

/// Where the feature vector `h` comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum Features {
    /// Trainable embeddings with mean pooling and a projection.
    Toy(ToyEncoder),
    /// Fixed vectors looked up by document id.
    External(ExternalEmbeddings),
}

impl Features {
    pub fn kind(&self) -> &'static str {
        match self {
            Features::Toy(_) => "toy",
            Features::External(_) => "external",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Features::Toy(enc) => enc.output_dim(),
            Features::External(ext) => ext.dim,
        }
    }
}

/// A document prepared for the model's feature provider.
#[derive(Debug, Clone, PartialEq)]
pub enum Encoded {
    Ids(Vec<usize>),
    Vector(Vec<f64>),
}

/// An encoded document with its label bits.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub encoded: Encoded,
    pub labels: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureForward {
    /// Mean-pooled embedding; empty for external features.
    pub pooled: Vec<f64>,
    pub h: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelForward {
    pub features: FeatureForward,
    /// Inverted-dropout multipliers applied to `h`, if any.
    pub mask: Option<Vec<f64>>,
    /// Head input: `h`, masked when dropout is active.
    pub head_input: Vec<f64>,
    pub head: HeadForward,
}

impl ModelForward {
    pub fn logits(&self) -> &[f64] {
        &self.head.logits
    }
}

/// Feature provider plus classifier head over a fixed class order.
#[derive(Debug, Clone)]
pub struct Model {
    pub classes: Vec<String>,
    pub features: Features,
    pub head: Box<dyn ClassifierHead>,
}

impl Model {
    pub fn new(
        taxonomy: &Taxonomy,
        features: Features,
        head: Box<dyn ClassifierHead>,
    ) -> Result<Self> {
        if head.input_dim() != features.dim() {
            return Err(Error::Shape(format!(
                "head expects {} input features, provider yields {}",
                head.input_dim(),
                features.dim()
            )));
        }
        if head.num_classes() != taxonomy.len() {
            return Err(Error::Shape(format!(
                "head has {} outputs, taxonomy has {} classes",
                head.num_classes(),
                taxonomy.len()
            )));
        }
        Ok(Self {
            classes: taxonomy.codes().map(str::to_owned).collect(),
            features,
            head,
        })
    }

    /// Fresh model with seeded initialization. The toy vocabulary is built
    /// from `documents`.
    pub fn initialize(
        taxonomy: &Taxonomy,
        registry: &HeadRegistry,
        spec: &HeadSpec,
        init: FeatureInit<'_>,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let features = match init {
            FeatureInit::Toy { config, documents } => {
                config.validate()?;
                let vocab = Vocab::build(documents, config.vocab_size);
                Features::Toy(ToyEncoder::new(vocab, config, &mut rng))
            }
            FeatureInit::External(ext) => Features::External(ext),
        };
        let head = registry.build(spec, features.dim(), taxonomy, &mut rng)?;
        Self::new(taxonomy, features, head)
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn encoder(&self) -> Option<&ToyEncoder> {
        match &self.features {
            Features::Toy(enc) => Some(enc),
            Features::External(_) => None,
        }
    }

    pub fn encode(&self, id: &str, tokens: &[String]) -> Result<Encoded> {
        match &self.features {
            Features::Toy(enc) => Ok(Encoded::Ids(enc.encode(tokens))),
            Features::External(ext) => Ok(Encoded::Vector(ext.get(id)?.to_vec())),
        }
    }

    pub fn feature_forward(&self, input: &Encoded) -> Result<FeatureForward> {
        match (&self.features, input) {
            (Features::Toy(enc), Encoded::Ids(ids)) => {
                let (pooled, h) = enc.forward(ids);
                Ok(FeatureForward { pooled, h })
            }
            (Features::External(ext), Encoded::Vector(v)) if v.len() == ext.dim => {
                Ok(FeatureForward {
                    pooled: Vec::new(),
                    h: v.clone(),
                })
            }
            _ => Err(Error::Shape(format!(
                "input does not fit the {} feature provider",
                self.features.kind()
            ))),
        }
    }

    /// Forward pass. With `dropout = Some((rate, rng))` and `rate > 0`, units
    /// of `h` are zeroed with probability `rate` and the rest scaled by
    /// `1 / (1 - rate)`.
    pub fn forward(
        &self,
        input: &Encoded,
        dropout: Option<(f64, &mut dyn RngCore)>,
    ) -> Result<ModelForward> {
        let features = self.feature_forward(input)?;
        let mask = match dropout {
            Some((rate, rng)) if rate > 0.0 => {
                let keep = 1.0 / (1.0 - rate);
                Some(
                    (0..features.h.len())
                        .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
                        .collect::<Vec<f64>>(),
                )
            }
            _ => None,
        };
        let head_input = match &mask {
            Some(m) => features.h.iter().zip(m).map(|(h, m)| h * m).collect(),
            None => features.h.clone(),
        };
        let head = self.head.forward(&head_input);
        Ok(ModelForward {
            features,
            mask,
            head_input,
            head,
        })
    }

    pub fn logits(&self, input: &Encoded) -> Result<Vec<f64>> {
        Ok(self.forward(input, None)?.head.logits)
    }

    pub fn probabilities(&self, input: &Encoded) -> Result<Vec<f64>> {
        Ok(self.logits(input)?.into_iter().map(sigmoid).collect())
    }

    /// Probabilities and the codes assigned at `threshold`.
    pub fn predict(
        &self,
        id: &str,
        tokens: &[String],
        threshold: f64,
    ) -> Result<(Vec<f64>, Vec<String>)> {
        let y = self.probabilities(&self.encode(id, tokens)?)?;
        let assigned = assign(&y, threshold, &self.classes);
        Ok((y, assigned))
    }

    /// Backpropagates `dlogits`, accumulating into `grads`.
    pub fn backward(
        &self,
        input: &Encoded,
        fwd: &ModelForward,
        dlogits: &[f64],
        grads: &mut Gradients,
    ) {
        let split = self.feature_param_count();
        let (feature_grads, head_grads) = grads.0.split_at_mut(split);
        let mut dh = self
            .head
            .backward(&fwd.head_input, &fwd.head, dlogits, head_grads);
        if let Some(mask) = &fwd.mask {
            for (d, m) in dh.iter_mut().zip(mask) {
                *d *= m;
            }
        }
        if let (Features::Toy(enc), Encoded::Ids(ids)) = (&self.features, input) {
            enc.backward(ids, &fwd.features.pooled, &dh, feature_grads);
        }
    }

    fn feature_param_count(&self) -> usize {
        match &self.features {
            Features::Toy(_) => 3,
            Features::External(_) => 0,
        }
    }

    /// Feature-provider parameters first, then the head's.
    pub fn params(&self) -> Vec<ParamView<'_>> {
        let mut out = match &self.features {
            Features::Toy(enc) => enc.params(),
            Features::External(_) => Vec::new(),
        };
        out.extend(self.head.params());
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = match &mut self.features {
            Features::Toy(enc) => enc.params_mut(),
            Features::External(_) => Vec::new(),
        };
        out.extend(self.head.params_mut());
        out
    }

    pub fn param_names(&self) -> Vec<String> {
        self.params().iter().map(|p| p.name.to_owned()).collect()
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients::zeros_like(&self.params())
    }
}

/// Codes whose probability reaches `threshold`.
pub fn assign(y: &[f64], threshold: f64, codes: &[String]) -> Vec<String> {
    y.iter()
        .zip(codes)
        .filter(|(&p, _)| p >= threshold)
        .map(|(_, c)| c.clone())
        .collect()
}
