use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Deserialize)]
struct Line {
    id: String,
    vector: Vec<f64>,
}

/// Precomputed feature vectors keyed by document id, read from JSON Lines
/// records `{"id": ..., "vector": [...]}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalEmbeddings {
    pub dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl ExternalEmbeddings {
    pub fn load(path: &Path, expected_dim: Option<usize>) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_reader(BufReader::new(file), expected_dim)
    }

    pub fn from_reader<R: BufRead>(reader: R, expected_dim: Option<usize>) -> Result<Self> {
        let mut dim = expected_dim;
        let mut vectors = HashMap::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io("reading embeddings", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: Line = serde_json::from_str(&line)
                .map_err(|e| Error::Embeddings(format!("line {}: {e}", n + 1)))?;
            let d = *dim.get_or_insert(rec.vector.len());
            if rec.vector.len() != d {
                return Err(Error::Embeddings(format!(
                    "line {}: vector for '{}' has dimension {}, expected {d}",
                    n + 1,
                    rec.id,
                    rec.vector.len()
                )));
            }
            if rec.vector.iter().any(|x| !x.is_finite()) {
                return Err(Error::Embeddings(format!(
                    "line {}: vector for '{}' is not finite",
                    n + 1,
                    rec.id
                )));
            }
            if vectors.insert(rec.id.clone(), rec.vector).is_some() {
                return Err(Error::Embeddings(format!("duplicate id '{}'", rec.id)));
            }
        }
        match dim {
            Some(dim) if dim > 0 && !vectors.is_empty() => Ok(Self { dim, vectors }),
            _ => Err(Error::Embeddings("no vectors found".into())),
        }
    }

    pub fn from_map(vectors: HashMap<String, Vec<f64>>) -> Result<Self> {
        let dim = vectors.values().next().map_or(0, Vec::len);
        if dim == 0 || vectors.values().any(|v| v.len() != dim) {
            return Err(Error::Embeddings(
                "vectors must share a non-zero dimension".into(),
            ));
        }
        Ok(Self { dim, vectors })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, id: &str) -> Result<&[f64]> {
        self.vectors
            .get(id)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Embeddings(format!("no vector for id '{id}'")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str, dim: Option<usize>) -> Result<ExternalEmbeddings> {
        ExternalEmbeddings::from_reader(text.as_bytes(), dim)
    }

    #[test]
    fn accepts_configured_dimension() {
        let v: Vec<String> = (0..768).map(|i| format!("{}", i as f64 / 768.0)).collect();
        let text = format!("{{\"id\":\"EP1\",\"vector\":[{}]}}\n", v.join(","));
        let e = load(&text, Some(768)).unwrap();
        assert_eq!(e.dim, 768);
        assert_eq!(e.get("EP1").unwrap().len(), 768);
        assert!(e.get("EP2").unwrap_err().to_string().contains("EP2"));
    }

    #[test]
    fn dimension_mismatch() {
        assert!(load("{\"id\":\"a\",\"vector\":[1,2]}\n", Some(3)).is_err());
        assert!(load(
            "{\"id\":\"a\",\"vector\":[1,2]}\n{\"id\":\"b\",\"vector\":[1]}\n",
            None
        )
        .is_err());
    }

    #[test]
    fn duplicate_id_is_named() {
        let err = load(
            "{\"id\":\"EP7\",\"vector\":[1]}\n{\"id\":\"EP7\",\"vector\":[2]}\n",
            None,
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("EP7"), "{err}");
    }
}
