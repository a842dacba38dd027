//! Integrated-gradients token attribution for one class output of a model
//! with the toy encoder, plus report renderers.
//!
//! The baseline is the all-zero (PAD) embedding. Because the encoder mean
//! pools, the gradient with respect to every token embedding at path point
//! `α` is `∇G(α·x̄) / n`, where `G` maps the pooled embedding `x̄` of the `n`
//! non-PAD tokens to the output. One gradient per Riemann step therefore
//! serves all tokens.

mod render;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neural::{sigmoid, Model, PAD};

pub use render::{AnsiRenderer, CsvRenderer, HtmlRenderer, RendererRegistry, ReportRenderer};

/// The scalar that is attributed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OutputFunction {
    /// Post-sigmoid probability of the target class.
    #[default]
    Probability,
    /// Pre-sigmoid logit of the target class.
    Logit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttributionConfig {
    /// Riemann steps along the path from the baseline.
    pub steps: usize,
    pub target_class: String,
    pub output: OutputFunction,
}

impl Default for AttributionConfig {
    fn default() -> Self {
        Self {
            steps: 128,
            target_class: "Y02G".into(),
            output: OutputFunction::Probability,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenAttribution {
    pub position: usize,
    pub token: String,
    /// Signed contribution, summed over embedding dimensions.
    pub score: f64,
}

/// How well the scores add up to the output difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Completeness {
    pub sum_of_scores: f64,
    /// `F(x) - F(baseline)`.
    pub output_delta: f64,
    /// `|sum - delta| / |delta|`, or the absolute gap when `delta` is 0.
    pub relative_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub document_id: String,
    pub target_class: String,
    pub output: OutputFunction,
    pub steps: usize,
    pub tokens: Vec<TokenAttribution>,
    pub completeness: Completeness,
    pub classes: Vec<String>,
    pub probabilities: Vec<f64>,
    pub threshold: f64,
}

impl Attribution {
    pub fn assigned(&self) -> Vec<&str> {
        self.classes
            .iter()
            .zip(&self.probabilities)
            .filter(|(_, &p)| p >= self.threshold)
            .map(|(c, _)| c.as_str())
            .collect()
    }
}

struct Probe<'a> {
    model: &'a Model,
    class: usize,
    output: OutputFunction,
}

impl Probe<'_> {
    fn value(&self, pooled: &[f64]) -> f64 {
        let enc = self.model.encoder().expect("checked by caller");
        let z = self.model.head.forward(&enc.proj.forward(pooled)).logits[self.class];
        match self.output {
            OutputFunction::Probability => sigmoid(z),
            OutputFunction::Logit => z,
        }
    }

    /// Gradient of the output with respect to the pooled embedding.
    fn gradient(&self, pooled: &[f64]) -> Vec<f64> {
        let enc = self.model.encoder().expect("checked by caller");
        let h = enc.proj.forward(pooled);
        let fwd = self.model.head.forward(&h);
        let mut dlogits = vec![0.0; self.model.num_classes()];
        dlogits[self.class] = match self.output {
            OutputFunction::Probability => {
                let y = sigmoid(fwd.logits[self.class]);
                y * (1.0 - y)
            }
            OutputFunction::Logit => 1.0,
        };
        let mut scratch: Vec<Vec<f64>> = self
            .model
            .head
            .params()
            .iter()
            .map(|p| vec![0.0; p.values.len()])
            .collect();
        let dh = self.model.head.backward(&h, &fwd, &dlogits, &mut scratch);
        enc.proj.input_gradient(&dh)
    }
}

/// Integrated gradients of the target output for each token. Tokens past the
/// encoder's `max_len` are not seen by the model and are not reported.
pub fn integrated_gradients(
    model: &Model,
    document_id: &str,
    tokens: &[String],
    cfg: &AttributionConfig,
    threshold: f64,
) -> Result<Attribution> {
    let enc = model.encoder().ok_or_else(|| {
        Error::Attribution(
            "attribution needs a model with the toy encoder, not external embeddings".into(),
        )
    })?;
    if cfg.steps == 0 {
        return Err(Error::Config("attribution steps must be >= 1".into()));
    }
    let class = model
        .classes
        .iter()
        .position(|c| *c == cfg.target_class)
        .ok_or_else(|| Error::UnknownClass(cfg.target_class.clone()))?;
    let probe = Probe {
        model,
        class,
        output: cfg.output,
    };

    let ids = enc.encode(tokens);
    let pooled = enc.pool(&ids);
    let n = ids.iter().filter(|&&id| id != PAD).count();
    let mut mean_grad = vec![0.0; pooled.len()];
    for j in 1..=cfg.steps {
        let alpha = j as f64 / cfg.steps as f64;
        let point: Vec<f64> = pooled.iter().map(|x| alpha * x).collect();
        for (m, g) in mean_grad.iter_mut().zip(probe.gradient(&point)) {
            *m += g;
        }
    }
    for m in &mut mean_grad {
        *m /= cfg.steps as f64;
    }

    let scored: Vec<TokenAttribution> = ids
        .iter()
        .zip(tokens)
        .enumerate()
        .map(|(position, (&id, token))| {
            let score = if id == PAD || n == 0 {
                0.0
            } else {
                enc.row(id)
                    .iter()
                    .zip(&mean_grad)
                    .map(|(x, g)| x * g)
                    .sum::<f64>()
                    / n as f64
            };
            TokenAttribution {
                position,
                token: token.clone(),
                score,
            }
        })
        .collect();
    if let Some(bad) = scored.iter().find(|t| !t.score.is_finite()) {
        return Err(Error::NonFinite(format!(
            "attribution of token '{}'",
            bad.token
        )));
    }

    let sum_of_scores: f64 = scored.iter().map(|t| t.score).sum();
    let output_delta = probe.value(&pooled) - probe.value(&vec![0.0; pooled.len()]);
    let gap = (sum_of_scores - output_delta).abs();
    let relative_gap = if output_delta != 0.0 {
        gap / output_delta.abs()
    } else {
        gap
    };
    Ok(Attribution {
        document_id: document_id.to_owned(),
        target_class: cfg.target_class.clone(),
        output: cfg.output,
        steps: cfg.steps,
        tokens: scored,
        completeness: Completeness {
            sum_of_scores,
            output_delta,
            relative_gap,
        },
        classes: model.classes.clone(),
        probabilities: model.probabilities(&crate::neural::Encoded::Ids(ids))?,
        threshold,
    })
}
