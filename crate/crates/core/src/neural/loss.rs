use serde::{Deserialize, Serialize};

use super::activation::softplus;
use crate::error::{Error, Result};

/// Floor applied to the probabilities inside the logarithms.
pub const LOG_EPS: f64 = 1e-12;

/// Per-class weights of the weighted binary cross-entropy
/// `L = -Σ_i β_i [γ_i l_i log y_i + (1 - l_i) log(1 - y_i)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    /// Class importance β.
    pub beta: Vec<f64>,
    /// Positive-example weight γ.
    pub gamma: Vec<f64>,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            beta: vec![4.0, 3.0, 2.0, 2.0, 1.0, 1.0, 3.0, 2.0, 2.0],
            gamma: vec![2.0; 9],
        }
    }
}

impl LossConfig {
    pub fn uniform(classes: usize) -> Self {
        Self {
            beta: vec![1.0; classes],
            gamma: vec![1.0; classes],
        }
    }

    pub fn validate(&self, classes: usize) -> Result<()> {
        if self.beta.len() != classes || self.gamma.len() != classes {
            return Err(Error::Config(format!(
                "loss weights need {classes} entries (beta has {}, gamma has {})",
                self.beta.len(),
                self.gamma.len()
            )));
        }
        let bad = |v: &[f64]| v.iter().any(|&w| !(w.is_finite() && w > 0.0));
        if bad(&self.beta) || bad(&self.gamma) {
            return Err(Error::Config("loss weights must be finite and > 0".into()));
        }
        Ok(())
    }

    /// Per-sample loss from probabilities.
    pub fn loss(&self, y: &[f64], labels: &[bool]) -> f64 {
        let mut total = 0.0;
        for i in 0..y.len() {
            let term = if labels[i] {
                self.gamma[i] * clamped_ln(y[i])
            } else {
                clamped_ln(1.0 - y[i])
            };
            total -= self.beta[i] * term;
        }
        total
    }

    /// Per-sample loss from logits and its gradient with respect to them.
    /// The logarithms are evaluated as `-softplus(∓z)` so saturated logits
    /// stay finite.
    pub fn loss_and_grad(&self, logits: &[f64], labels: &[bool]) -> (f64, Vec<f64>) {
        let floor = LOG_EPS.ln();
        let mut total = 0.0;
        let mut grad = Vec::with_capacity(logits.len());
        for (i, &z) in logits.iter().enumerate() {
            let y = super::activation::sigmoid(z);
            if labels[i] {
                let log_y = -softplus(-z);
                let (term, d) = if log_y > floor || log_y.is_nan() {
                    (log_y, 1.0 - y)
                } else {
                    (floor, 0.0)
                };
                total -= self.beta[i] * self.gamma[i] * term;
                grad.push(-self.beta[i] * self.gamma[i] * d);
            } else {
                let log_1y = -softplus(z);
                let (term, d) = if log_1y > floor || log_1y.is_nan() {
                    (log_1y, -y)
                } else {
                    (floor, 0.0)
                };
                total -= self.beta[i] * term;
                grad.push(-self.beta[i] * d);
            }
        }
        (total, grad)
    }
}

/// `ln(max(x, LOG_EPS))`, keeping NaN visible.
fn clamped_ln(x: f64) -> f64 {
    if x.is_nan() {
        x
    } else {
        x.max(LOG_EPS).ln()
    }
}
