//! Classification scheme: a tree of class codes with a fixed label-vector order.
//!
//! The scheme is loaded from a TOML file holding a list of `[[class]]` tables:
//!
//! ```toml
//! schema_version = 1
//!
//! [[class]]
//! code = "Y02G"
//! definition = "Green plastics"
//! query = "green+ 4d plastic+"
//!
//! [[class]]
//! code = "Y02G10/00"
//! parent = "Y02G"
//! definition = "Recycling of plastic waste"
//! query = "recycl+ 4d plastic+"
//! ```
//!
//! Classes are indexed in declaration order and a parent must be declared
//! before any of its children, so index order is always a topological order.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The bundled green-plastics scheme (nine classes, four levels).
pub const DEFAULT_TAXONOMY: &str = include_str!("../assets/green_plastics.toml");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassNode {
    pub code: String,
    #[serde(default)]
    pub definition: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
    #[serde(rename = "query", default)]
    pub query_source: String,
    /// Depth in the tree; the root is level 1.
    #[serde(skip)]
    pub level: usize,
}

#[derive(Debug, Deserialize)]
struct TaxonomyFile {
    #[serde(default = "default_schema_version")]
    schema_version: u32,
    #[serde(default, rename = "class")]
    classes: Vec<ClassNode>,
}

fn default_schema_version() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Taxonomy {
    nodes: Vec<ClassNode>,
    order: HashMap<String, usize>,
    parents: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    /// Strict ancestors of each node, nearest first.
    ancestors: Vec<Vec<usize>>,
}

impl Taxonomy {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: TaxonomyFile =
            toml::from_str(text).map_err(|e| Error::Taxonomy(format!("malformed config: {e}")))?;
        if file.schema_version != 1 {
            return Err(Error::Taxonomy(format!(
                "unsupported schema_version {}",
                file.schema_version
            )));
        }
        Self::from_nodes(file.classes)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading taxonomy {}", path.display()), e))?;
        Self::from_toml_str(&text)
    }

    pub fn default_scheme() -> Self {
        Self::from_toml_str(DEFAULT_TAXONOMY).expect("bundled taxonomy is valid")
    }

    /// Builds a taxonomy from nodes in label-vector order. `level` fields are
    /// recomputed.
    pub fn from_nodes(mut nodes: Vec<ClassNode>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Taxonomy("taxonomy has no classes".into()));
        }
        let mut order = HashMap::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            if node.code.trim().is_empty() {
                return Err(Error::Taxonomy(format!("class #{i} has an empty code")));
            }
            if order.insert(node.code.clone(), i).is_some() {
                return Err(Error::Taxonomy(format!(
                    "duplicate class code '{}'",
                    node.code
                )));
            }
        }

        let mut parents = Vec::with_capacity(nodes.len());
        for node in &nodes {
            let parent = match &node.parent {
                None => None,
                Some(p) => Some(*order.get(p).ok_or_else(|| {
                    Error::Taxonomy(format!("class '{}' has unknown parent '{p}'", node.code))
                })?),
            };
            parents.push(parent);
        }

        // A parent chain longer than the node count must revisit a node.
        for start in 0..nodes.len() {
            let mut cur = start;
            let mut steps = 0;
            while let Some(p) = parents[cur] {
                steps += 1;
                if p == start || steps > nodes.len() {
                    return Err(Error::Taxonomy(format!(
                        "cycle in parent links involving '{}'",
                        nodes[start].code
                    )));
                }
                cur = p;
            }
        }

        for (i, parent) in parents.iter().enumerate() {
            if let Some(p) = *parent {
                if p >= i {
                    return Err(Error::Taxonomy(format!(
                        "class '{}' is declared before its parent '{}'",
                        nodes[i].code, nodes[p].code
                    )));
                }
            }
        }

        let mut ancestors: Vec<Vec<usize>> = Vec::with_capacity(nodes.len());
        let mut children = vec![Vec::new(); nodes.len()];
        for i in 0..nodes.len() {
            let chain = match parents[i] {
                None => Vec::new(),
                Some(p) => {
                    children[p].push(i);
                    let mut chain = Vec::with_capacity(ancestors[p].len() + 1);
                    chain.push(p);
                    chain.extend_from_slice(&ancestors[p]);
                    chain
                }
            };
            nodes[i].level = chain.len() + 1;
            ancestors.push(chain);
        }

        Ok(Self {
            nodes,
            order,
            parents,
            children,
            ancestors,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[ClassNode] {
        &self.nodes
    }

    pub fn node(&self, index: usize) -> &ClassNode {
        &self.nodes[index]
    }

    pub fn codes(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(|n| n.code.as_str())
    }

    pub fn index_of(&self, code: &str) -> Result<usize> {
        self.order
            .get(code)
            .copied()
            .ok_or_else(|| Error::UnknownClass(code.to_string()))
    }

    pub fn parent_index(&self, index: usize) -> Option<usize> {
        self.parents[index]
    }

    pub fn children_of(&self, index: usize) -> &[usize] {
        &self.children[index]
    }

    /// Strict ancestors by index, nearest first.
    pub fn ancestor_indices(&self, index: usize) -> &[usize] {
        &self.ancestors[index]
    }

    /// Strict ancestors of `code`, nearest first; empty for a root.
    pub fn ancestors(&self, code: &str) -> Result<Vec<&str>> {
        let idx = self.index_of(code)?;
        Ok(self.ancestors[idx]
            .iter()
            .map(|&a| self.nodes[a].code.as_str())
            .collect())
    }

    pub fn level(&self, index: usize) -> usize {
        self.nodes[index].level
    }

    pub fn max_level(&self) -> usize {
        self.nodes.iter().map(|n| n.level).max().unwrap_or(0)
    }

    /// True if `a` is `b` or one of `b`'s ancestors.
    pub fn is_ancestor_or_self(&self, a: usize, b: usize) -> bool {
        a == b || self.ancestors[b].contains(&a)
    }

    /// Label vector with every class in `direct` and all their ancestors set.
    pub fn propagate<S: AsRef<str>>(&self, direct: &[S]) -> Result<LabelVector> {
        let mut indices = Vec::with_capacity(direct.len());
        for code in direct {
            indices.push(self.index_of(code.as_ref())?);
        }
        Ok(self.propagate_indices(indices))
    }

    pub fn propagate_indices(&self, direct: impl IntoIterator<Item = usize>) -> LabelVector {
        let mut bits = vec![false; self.len()];
        for i in direct {
            bits[i] = true;
            for &a in &self.ancestors[i] {
                bits[a] = true;
            }
        }
        LabelVector(bits)
    }

    /// Serializes back to the TOML config format.
    pub fn to_toml_string(&self) -> String {
        #[derive(Serialize)]
        struct Out<'a> {
            schema_version: u32,
            class: &'a [ClassNode],
        }
        toml::to_string(&Out {
            schema_version: 1,
            class: &self.nodes,
        })
        .expect("taxonomy serializes")
    }
}

/// One bit per taxonomy class, in taxonomy order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelVector(pub Vec<bool>);

impl LabelVector {
    pub fn zeros(len: usize) -> Self {
        LabelVector(vec![false; len])
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        LabelVector(bits.iter().map(|&b| b != 0).collect())
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn is_negative(&self) -> bool {
        !self.0.iter().any(|&b| b)
    }

    pub fn to_u8(&self) -> Vec<u8> {
        self.0.iter().map(|&b| b as u8).collect()
    }

    pub fn set_indices(&self) -> BTreeSet<usize> {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    /// Codes of the set bits, in taxonomy order.
    pub fn codes<'t>(&self, taxonomy: &'t Taxonomy) -> Vec<&'t str> {
        self.set_indices()
            .into_iter()
            .map(|i| taxonomy.node(i).code.as_str())
            .collect()
    }

    /// Every set child has its parent set.
    pub fn is_consistent(&self, taxonomy: &Taxonomy) -> bool {
        self.0.len() == taxonomy.len()
            && (0..self.0.len()).all(|i| match taxonomy.parent_index(i) {
                Some(p) if self.0[i] => self.0[p],
                _ => true,
            })
    }
}

impl fmt::Display for LabelVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, &b) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", b as u8)?;
        }
        write!(f, "]")
    }
}
