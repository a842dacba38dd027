//! Classifier heads mapping a feature vector `h` to one logit per class.
//!
//! Each head architecture implements [`ClassifierHead`] and is constructed by
//! a [`HeadFactory`] registered under a name in a [`HeadRegistry`]. The
//! model kind in configs and checkpoints is that name.

mod flat;
mod hierarchical;

use std::collections::BTreeMap;
use std::fmt;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::params::ParamView;
use crate::error::{Error, Result};
use crate::taxonomy::Taxonomy;

pub use flat::{FlatHead, FlatHeadFactory};
pub use hierarchical::{HierarchicalHead, HierarchicalHeadFactory};

/// How a hierarchical head feeds a parent's state into its children.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Wiring {
    /// `z_c = u_c + z_parent`: each head sees the sum along its whole path.
    #[default]
    Cumulative,
    /// `z_c = u_c + u_parent`: only the direct parent's unit output.
    ParentUnit,
}

/// Architecture choice and sizes for a head.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeadSpec {
    /// Registered head name, e.g. `sbnn` or `sbhnn`.
    pub kind: String,
    /// Hidden width of the flat head.
    pub hidden: usize,
    /// Width of each per-class unit in the hierarchical head.
    pub head_units: usize,
    pub wiring: Wiring,
}

impl Default for HeadSpec {
    fn default() -> Self {
        Self {
            kind: "sbhnn".into(),
            hidden: 256,
            head_units: 64,
            wiring: Wiring::Cumulative,
        }
    }
}

/// Output of a head's forward pass: logits plus whatever the head needs for
/// its backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadForward {
    pub logits: Vec<f64>,
    pub cache: Vec<Vec<f64>>,
}

pub trait ClassifierHead: Send + Sync + fmt::Debug {
    fn kind(&self) -> &'static str;

    fn input_dim(&self) -> usize;

    fn num_classes(&self) -> usize;

    fn spec(&self) -> HeadSpec;

    fn forward(&self, h: &[f64]) -> HeadForward;

    /// Accumulates parameter gradients into `grads` (aligned with
    /// [`params`](Self::params)) and returns `dL/dh`.
    fn backward(
        &self,
        h: &[f64],
        fwd: &HeadForward,
        dlogits: &[f64],
        grads: &mut [Vec<f64>],
    ) -> Vec<f64>;

    fn params(&self) -> Vec<ParamView<'_>>;

    /// Same order as [`params`](Self::params).
    fn params_mut(&mut self) -> Vec<&mut [f64]>;

    fn clone_box(&self) -> Box<dyn ClassifierHead>;
}

impl Clone for Box<dyn ClassifierHead> {
    fn clone(&self) -> Self {
        self.clone_box()
    }
}

pub trait HeadFactory: Send + Sync {
    fn name(&self) -> &'static str;

    fn summary(&self) -> &'static str;

    fn build(
        &self,
        spec: &HeadSpec,
        input_dim: usize,
        taxonomy: &Taxonomy,
        rng: &mut dyn RngCore,
    ) -> Result<Box<dyn ClassifierHead>>;
}

pub struct HeadRegistry {
    factories: BTreeMap<&'static str, Box<dyn HeadFactory>>,
}

impl HeadRegistry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    /// Registry with the flat (`sbnn`) and hierarchical (`sbhnn`) heads.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(FlatHeadFactory));
        r.register(Box::new(HierarchicalHeadFactory));
        r
    }

    pub fn register(&mut self, factory: Box<dyn HeadFactory>) {
        self.factories.insert(factory.name(), factory);
    }

    pub fn get(&self, name: &str) -> Result<&dyn HeadFactory> {
        self.factories.get(name).map(|f| f.as_ref()).ok_or_else(|| {
            Error::Config(format!(
                "unknown model kind '{name}' (available: {})",
                self.names().join(", ")
            ))
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.factories.keys().copied().collect()
    }

    pub fn build(
        &self,
        spec: &HeadSpec,
        input_dim: usize,
        taxonomy: &Taxonomy,
        rng: &mut dyn RngCore,
    ) -> Result<Box<dyn ClassifierHead>> {
        self.get(&spec.kind)?.build(spec, input_dim, taxonomy, rng)
    }
}

impl Default for HeadRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}
