use rand::RngCore;

use super::{ClassifierHead, HeadFactory, HeadForward, HeadSpec};
use crate::error::{Error, Result};
use crate::neural::dense::Dense;
use crate::neural::params::ParamView;
use crate::taxonomy::Taxonomy;

/// `logits = FC2(relu(FC1(h)))`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatHead {
    pub fc1: Dense,
    pub fc2: Dense,
}

impl ClassifierHead for FlatHead {
    fn kind(&self) -> &'static str {
        "sbnn"
    }

    fn input_dim(&self) -> usize {
        self.fc1.inputs
    }

    fn num_classes(&self) -> usize {
        self.fc2.outputs
    }

    fn spec(&self) -> HeadSpec {
        HeadSpec {
            kind: self.kind().into(),
            hidden: self.fc1.outputs,
            ..Default::default()
        }
    }

    fn forward(&self, h: &[f64]) -> HeadForward {
        let pre = self.fc1.forward(h);
        let hidden: Vec<f64> = pre.iter().map(|&z| z.max(0.0)).collect();
        let logits = self.fc2.forward(&hidden);
        HeadForward {
            logits,
            cache: vec![pre, hidden],
        }
    }

    fn backward(
        &self,
        h: &[f64],
        fwd: &HeadForward,
        dlogits: &[f64],
        grads: &mut [Vec<f64>],
    ) -> Vec<f64> {
        let (pre, hidden) = (&fwd.cache[0], &fwd.cache[1]);
        let (g1, g2) = grads.split_at_mut(2);
        let (g2w, g2b) = g2.split_at_mut(1);
        let dhidden = self.fc2.backward(hidden, dlogits, &mut g2w[0], &mut g2b[0]);
        let dpre: Vec<f64> = dhidden
            .iter()
            .zip(pre)
            .map(|(&d, &z)| if z > 0.0 { d } else { 0.0 })
            .collect();
        let (g1w, g1b) = g1.split_at_mut(1);
        self.fc1.backward(h, &dpre, &mut g1w[0], &mut g1b[0])
    }

    fn params(&self) -> Vec<ParamView<'_>> {
        vec![
            ParamView {
                name: "fc1.weight",
                rows: self.fc1.outputs,
                cols: self.fc1.inputs,
                values: &self.fc1.weight,
            },
            ParamView {
                name: "fc1.bias",
                rows: self.fc1.outputs,
                cols: 1,
                values: &self.fc1.bias,
            },
            ParamView {
                name: "fc2.weight",
                rows: self.fc2.outputs,
                cols: self.fc2.inputs,
                values: &self.fc2.weight,
            },
            ParamView {
                name: "fc2.bias",
                rows: self.fc2.outputs,
                cols: 1,
                values: &self.fc2.bias,
            },
        ]
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            &mut self.fc1.weight,
            &mut self.fc1.bias,
            &mut self.fc2.weight,
            &mut self.fc2.bias,
        ]
    }

    fn clone_box(&self) -> Box<dyn ClassifierHead> {
        Box::new(self.clone())
    }
}

pub struct FlatHeadFactory;

impl HeadFactory for FlatHeadFactory {
    fn name(&self) -> &'static str {
        "sbnn"
    }

    fn summary(&self) -> &'static str {
        "one hidden ReLU layer followed by a sigmoid output per class"
    }

    fn build(
        &self,
        spec: &HeadSpec,
        input_dim: usize,
        taxonomy: &Taxonomy,
        rng: &mut dyn RngCore,
    ) -> Result<Box<dyn ClassifierHead>> {
        if spec.hidden == 0 || input_dim == 0 {
            return Err(Error::Config(
                "sbnn needs hidden > 0 and input_dim > 0".into(),
            ));
        }
        Ok(Box::new(FlatHead {
            fc1: Dense::glorot(input_dim, spec.hidden, rng),
            fc2: Dense::glorot(spec.hidden, taxonomy.len(), rng),
        }))
    }
}
