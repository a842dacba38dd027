use rand::RngCore;

use super::{ClassifierHead, HeadFactory, HeadForward, HeadSpec, Wiring};
use crate::error::{Error, Result};
use crate::neural::dense::Dense;
use crate::neural::params::ParamView;
use crate::taxonomy::Taxonomy;

/// One head per class. Head `c` computes `u_c = relu(W_c h + b_c)`, adds the
/// parent's state along the tree edge, and emits a scalar logit from the sum.
/// Classes are evaluated in taxonomy order, so parents come first.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchicalHead {
    pub heads: Vec<Dense>,
    pub outputs: Vec<Dense>,
    pub parents: Vec<Option<usize>>,
    pub wiring: Wiring,
    names: Vec<[String; 4]>,
}

impl HierarchicalHead {
    pub fn new(
        heads: Vec<Dense>,
        outputs: Vec<Dense>,
        taxonomy: &Taxonomy,
        wiring: Wiring,
    ) -> Self {
        let parents = (0..taxonomy.len())
            .map(|c| taxonomy.parent_index(c))
            .collect();
        let names = taxonomy
            .codes()
            .map(|code| {
                [
                    format!("heads.{code}.weight"),
                    format!("heads.{code}.bias"),
                    format!("outputs.{code}.weight"),
                    format!("outputs.{code}.bias"),
                ]
            })
            .collect();
        Self {
            heads,
            outputs,
            parents,
            wiring,
            names,
        }
    }

    pub fn units(&self) -> usize {
        self.heads[0].outputs
    }
}

// Cache layout per class c: [2c] = head pre-activation, [2c + 1] = u_c,
// followed by z_c for every class at [2C + c].
impl ClassifierHead for HierarchicalHead {
    fn kind(&self) -> &'static str {
        "sbhnn"
    }

    fn input_dim(&self) -> usize {
        self.heads[0].inputs
    }

    fn num_classes(&self) -> usize {
        self.heads.len()
    }

    fn spec(&self) -> HeadSpec {
        HeadSpec {
            kind: self.kind().into(),
            head_units: self.units(),
            wiring: self.wiring,
            ..Default::default()
        }
    }

    fn forward(&self, h: &[f64]) -> HeadForward {
        let n = self.heads.len();
        let mut cache = Vec::with_capacity(3 * n);
        let mut states: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut logits = Vec::with_capacity(n);
        for c in 0..n {
            let pre = self.heads[c].forward(h);
            let unit: Vec<f64> = pre.iter().map(|&z| z.max(0.0)).collect();
            let mut state = unit.clone();
            if let Some(p) = self.parents[c] {
                let incoming = match self.wiring {
                    Wiring::Cumulative => &states[p],
                    Wiring::ParentUnit => &cache[2 * p + 1],
                };
                for (s, x) in state.iter_mut().zip(incoming) {
                    *s += x;
                }
            }
            logits.push(self.outputs[c].forward(&state)[0]);
            cache.push(pre);
            cache.push(unit);
            states.push(state);
        }
        cache.extend(states);
        HeadForward { logits, cache }
    }

    fn backward(
        &self,
        h: &[f64],
        fwd: &HeadForward,
        dlogits: &[f64],
        grads: &mut [Vec<f64>],
    ) -> Vec<f64> {
        let n = self.heads.len();
        let m = self.units();
        let mut dstate = vec![vec![0.0; m]; n];
        let mut dunit = vec![vec![0.0; m]; n];
        for c in (0..n).rev() {
            let state = &fwd.cache[2 * n + c];
            let (gw, rest) = grads[4 * c + 2..4 * c + 4].split_at_mut(1);
            let from_output =
                self.outputs[c].backward(state, &dlogits[c..=c], &mut gw[0], &mut rest[0]);
            for (d, g) in dstate[c].iter_mut().zip(from_output) {
                *d += g;
            }
            let ds = std::mem::take(&mut dstate[c]);
            for (d, g) in dunit[c].iter_mut().zip(&ds) {
                *d += g;
            }
            if let Some(p) = self.parents[c] {
                let target = match self.wiring {
                    Wiring::Cumulative => &mut dstate[p],
                    Wiring::ParentUnit => &mut dunit[p],
                };
                for (d, g) in target.iter_mut().zip(&ds) {
                    *d += g;
                }
            }
        }
        let mut dh = vec![0.0; h.len()];
        for c in 0..n {
            let pre = &fwd.cache[2 * c];
            let dpre: Vec<f64> = dunit[c]
                .iter()
                .zip(pre)
                .map(|(&d, &z)| if z > 0.0 { d } else { 0.0 })
                .collect();
            if dpre.iter().all(|&d| d == 0.0) {
                continue;
            }
            let (gw, rest) = grads[4 * c..4 * c + 2].split_at_mut(1);
            let dx = self.heads[c].backward(h, &dpre, &mut gw[0], &mut rest[0]);
            for (d, g) in dh.iter_mut().zip(dx) {
                *d += g;
            }
        }
        dh
    }

    fn params(&self) -> Vec<ParamView<'_>> {
        let mut out = Vec::with_capacity(4 * self.heads.len());
        for ((head, output), names) in self.heads.iter().zip(&self.outputs).zip(&self.names) {
            out.push(ParamView {
                name: &names[0],
                rows: head.outputs,
                cols: head.inputs,
                values: &head.weight,
            });
            out.push(ParamView {
                name: &names[1],
                rows: head.outputs,
                cols: 1,
                values: &head.bias,
            });
            out.push(ParamView {
                name: &names[2],
                rows: 1,
                cols: output.inputs,
                values: &output.weight,
            });
            out.push(ParamView {
                name: &names[3],
                rows: 1,
                cols: 1,
                values: &output.bias,
            });
        }
        out
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::with_capacity(4 * self.heads.len());
        for (head, output) in self.heads.iter_mut().zip(self.outputs.iter_mut()) {
            out.push(&mut head.weight);
            out.push(&mut head.bias);
            out.push(&mut output.weight);
            out.push(&mut output.bias);
        }
        out
    }

    fn clone_box(&self) -> Box<dyn ClassifierHead> {
        Box::new(self.clone())
    }
}

pub struct HierarchicalHeadFactory;

impl HeadFactory for HierarchicalHeadFactory {
    fn name(&self) -> &'static str {
        "sbhnn"
    }

    fn summary(&self) -> &'static str {
        "one ReLU head per class, wired along the taxonomy by element-wise addition"
    }

    fn build(
        &self,
        spec: &HeadSpec,
        input_dim: usize,
        taxonomy: &Taxonomy,
        rng: &mut dyn RngCore,
    ) -> Result<Box<dyn ClassifierHead>> {
        if spec.head_units == 0 || input_dim == 0 {
            return Err(Error::Config(
                "sbhnn needs head_units > 0 and input_dim > 0".into(),
            ));
        }
        let mut heads = Vec::with_capacity(taxonomy.len());
        let mut outputs = Vec::with_capacity(taxonomy.len());
        for _ in 0..taxonomy.len() {
            heads.push(Dense::glorot(input_dim, spec.head_units, rng));
            outputs.push(Dense::glorot(spec.head_units, 1, rng));
        }
        Ok(Box::new(HierarchicalHead::new(
            heads,
            outputs,
            taxonomy,
            spec.wiring,
        )))
    }
}
