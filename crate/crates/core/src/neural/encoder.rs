use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dense::Dense;
use super::params::ParamView;
use crate::error::{Error, Result};

pub const PAD: usize = 0;
pub const OOV: usize = 1;
const PAD_TOKEN: &str = "<pad>";
const OOV_TOKEN: &str = "<oov>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    /// Most frequent training tokens kept, on top of PAD and OOV.
    pub vocab_size: usize,
    pub embedding_dim: usize,
    /// Dimension of the feature vector `h`.
    pub output_dim: usize,
    /// Tokens beyond this position are dropped.
    pub max_len: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            vocab_size: 30_000,
            embedding_dim: 128,
            output_dim: 256,
            max_len: 256,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.embedding_dim == 0 || self.output_dim == 0 || self.max_len == 0 {
            return Err(Error::Config(
                "encoder embedding_dim, output_dim and max_len must be > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Token to row mapping. Row 0 is PAD, row 1 is OOV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    /// Keeps the `max_size` most frequent tokens, ties broken alphabetically.
    pub fn build<'a, I, D>(docs: I, max_size: usize) -> Self
    where
        I: IntoIterator<Item = D>,
        D: IntoIterator<Item = &'a String>,
    {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for doc in docs {
            for t in doc {
                *counts.entry(t.as_str()).or_default() += 1;
            }
        }
        let mut ranked: Vec<(&str, usize)> = counts
            .into_iter()
            .filter(|(t, _)| *t != PAD_TOKEN && *t != OOV_TOKEN)
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        ranked.truncate(max_size);
        let tokens = [PAD_TOKEN, OOV_TOKEN]
            .into_iter()
            .chain(ranked.into_iter().map(|(t, _)| t))
            .map(str::to_owned)
            .collect();
        Self::from_tokens(tokens).expect("constructed vocabulary is valid")
    }

    /// Rebuilds a vocabulary from its row order, e.g. from a checkpoint.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < 2 || tokens[PAD] != PAD_TOKEN || tokens[OOV] != OOV_TOKEN {
            return Err(Error::Checkpoint(format!(
                "vocabulary must start with '{PAD_TOKEN}' and '{OOV_TOKEN}'"
            )));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::Checkpoint(format!("vocabulary repeats token '{t}'")));
            }
        }
        Ok(Self { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(OOV)
    }
}

/// Trainable embeddings, mean pooling over non-PAD tokens and a linear
/// projection to the feature vector `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyEncoder {
    pub vocab: Vocab,
    pub embedding_dim: usize,
    /// Row-major `V x embedding_dim`; the PAD row stays zero.
    pub embedding: Vec<f64>,
    pub proj: Dense,
    pub max_len: usize,
}

impl ToyEncoder {
    pub fn new<R: Rng + ?Sized>(vocab: Vocab, cfg: &EncoderConfig, rng: &mut R) -> Self {
        let e = cfg.embedding_dim;
        let s = (6.0 / (1 + e) as f64).sqrt();
        let mut embedding: Vec<f64> = (0..vocab.len() * e)
            .map(|_| rng.gen_range(-s..=s))
            .collect();
        embedding[PAD * e..(PAD + 1) * e].fill(0.0);
        Self {
            vocab,
            embedding_dim: e,
            embedding,
            proj: Dense::glorot(e, cfg.output_dim, rng),
            max_len: cfg.max_len,
        }
    }

    pub fn output_dim(&self) -> usize {
        self.proj.outputs
    }

    /// Token ids, truncated to `max_len`.
    pub fn encode(&self, tokens: &[String]) -> Vec<usize> {
        tokens
            .iter()
            .take(self.max_len)
            .map(|t| self.vocab.id(t))
            .collect()
    }

    pub fn row(&self, id: usize) -> &[f64] {
        &self.embedding[id * self.embedding_dim..(id + 1) * self.embedding_dim]
    }

    /// Mean of the non-PAD embedding rows; zero when there are none.
    pub fn pool(&self, ids: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; self.embedding_dim];
        let mut n = 0usize;
        for &id in ids.iter().filter(|&&id| id != PAD) {
            n += 1;
            for (o, x) in out.iter_mut().zip(self.row(id)) {
                *o += x;
            }
        }
        if n > 0 {
            for o in &mut out {
                *o /= n as f64;
            }
        }
        out
    }

    pub fn forward(&self, ids: &[usize]) -> (Vec<f64>, Vec<f64>) {
        let pooled = self.pool(ids);
        let h = self.proj.forward(&pooled);
        (pooled, h)
    }

    /// Accumulates into `grads` (embedding, proj.weight, proj.bias).
    pub fn backward(&self, ids: &[usize], pooled: &[f64], dh: &[f64], grads: &mut [Vec<f64>]) {
        let (ge, rest) = grads.split_at_mut(1);
        let (gw, gb) = rest.split_at_mut(1);
        let dpooled = self.proj.backward(pooled, dh, &mut gw[0], &mut gb[0]);
        let n = ids.iter().filter(|&&id| id != PAD).count();
        if n == 0 {
            return;
        }
        let e = self.embedding_dim;
        for &id in ids.iter().filter(|&&id| id != PAD) {
            let row = &mut ge[0][id * e..(id + 1) * e];
            for (g, d) in row.iter_mut().zip(&dpooled) {
                *g += d / n as f64;
            }
        }
    }

    pub fn params(&self) -> Vec<ParamView<'_>> {
        vec![
            ParamView {
                name: "embedding",
                rows: self.vocab.len(),
                cols: self.embedding_dim,
                values: &self.embedding,
            },
            ParamView {
                name: "proj.weight",
                rows: self.proj.outputs,
                cols: self.proj.inputs,
                values: &self.proj.weight,
            },
            ParamView {
                name: "proj.bias",
                rows: self.proj.outputs,
                cols: 1,
                values: &self.proj.bias,
            },
        ]
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            &mut self.embedding,
            &mut self.proj.weight,
            &mut self.proj.bias,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    fn encoder() -> ToyEncoder {
        let docs = [toks("plastic waste plastic"), toks("waste bottle")];
        let vocab = Vocab::build(docs.iter(), 10);
        let cfg = EncoderConfig {
            vocab_size: 10,
            embedding_dim: 3,
            output_dim: 2,
            max_len: 4,
        };
        ToyEncoder::new(vocab, &cfg, &mut ChaCha8Rng::seed_from_u64(0))
    }

    #[test]
    fn vocab_order_and_oov() {
        let docs = [toks("b a b c"), toks("a c d")];
        let v = Vocab::build(docs.iter(), 3);
        assert_eq!(v.tokens(), ["<pad>", "<oov>", "a", "b", "c"]);
        assert_eq!(v.id("d"), OOV);
        assert_eq!(v.id("b"), 3);
        assert!(Vocab::from_tokens(toks("a b")).is_err());
    }

    #[test]
    fn pad_row_is_zero() {
        let enc = encoder();
        assert!(enc.row(PAD).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn encode_examples() {
        let enc = encoder();
        let (_, all_oov) = enc.forward(&enc.encode(&toks("zzz yyy")));
        assert_eq!(all_oov, enc.proj.forward(enc.row(OOV)));
        let (_, empty) = enc.forward(&[]);
        assert_eq!(empty, enc.proj.bias);
        let (_, pads) = enc.forward(&[PAD, PAD]);
        assert_eq!(pads, enc.proj.bias);
        let one = enc.forward(&enc.encode(&toks("plastic"))).1;
        let two = enc.forward(&enc.encode(&toks("plastic plastic"))).1;
        assert_eq!(one, two);
    }

    #[test]
    fn truncates_to_max_len() {
        let enc = encoder();
        assert_eq!(enc.encode(&toks("a b c d e f")).len(), 4);
    }

    #[test]
    fn pad_gets_no_gradient() {
        let enc = encoder();
        let ids = [PAD, 2, 3];
        let (pooled, _) = enc.forward(&ids);
        let mut grads: Vec<Vec<f64>> = enc
            .params()
            .iter()
            .map(|p| vec![0.0; p.values.len()])
            .collect();
        enc.backward(&ids, &pooled, &[1.0, -1.0], &mut grads);
        assert!(grads[0][..3].iter().all(|&g| g == 0.0));
        assert!(grads[0][6..12].iter().any(|&g| g != 0.0));
    }
}
