use serde::{Deserialize, Serialize};

use super::params::{Gradients, ParamView};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam optimizer state with bias-corrected moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    pub step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(config: AdamConfig, params: &[ParamView<'_>]) -> Self {
        let zeros = || params.iter().map(|p| vec![0.0; p.values.len()]).collect();
        Self {
            config,
            step: 0,
            m: zeros(),
            v: zeros(),
        }
    }

    /// Applies one update. `names` label the groups for error messages; no
    /// parameter is touched when any gradient is non-finite.
    pub fn update(
        &mut self,
        params: Vec<&mut [f64]>,
        grads: &Gradients,
        names: &[String],
        lr: f64,
    ) -> Result<()> {
        if params.len() != self.m.len() || grads.0.len() != self.m.len() {
            return Err(Error::Shape(format!(
                "optimizer tracks {} parameter groups, got {} params and {} gradients",
                self.m.len(),
                params.len(),
                grads.0.len()
            )));
        }
        for (i, g) in grads.0.iter().enumerate() {
            if let Some(pos) = g.iter().position(|x| !x.is_finite()) {
                let name = names.get(i).map_or("?", String::as_str);
                return Err(Error::NonFinite(format!(
                    "gradient of '{name}' at index {pos} is {}",
                    g[pos]
                )));
            }
        }
        self.step += 1;
        let AdamConfig {
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let c1 = 1.0 - beta1.powi(self.step as i32);
        let c2 = 1.0 - beta2.powi(self.step as i32);
        for (((p, g), m), v) in params
            .into_iter()
            .zip(&grads.0)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            for k in 0..p.len() {
                m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
                v[k] = beta2 * v[k] + (1.0 - beta2) * g[k] * g[k];
                let m_hat = m[k] / c1;
                let v_hat = v[k] / c2;
                p[k] -= lr * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
        Ok(())
    }
}
