//! Weak labeling: per-class keyword queries with a match threshold, ancestor
//! propagation, negative sampling and train/validation/test splits.

mod dataset;
mod report;

use std::collections::{BTreeMap, HashSet};

use rand::seq::{IteratorRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{filter_patent, Document, Field, RawPatent};
use crate::error::{Error, Result};
use crate::query::{count_up_to, parse_query, QueryAst};
use crate::taxonomy::{LabelVector, Taxonomy};

pub use dataset::{read_dataset, read_split_csv, write_dataset, write_split_csv, SPLIT_FILES};
pub use report::{ClassCounts, LabelingReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelingConfig {
    /// Matches needed before a class fires.
    pub k: usize,
    /// Per-class overrides of `k`, by class code.
    pub per_class_k: BTreeMap<String, usize>,
    /// Fields scanned by the class queries.
    pub fields: Vec<Field>,
    /// Negatives sampled per positive.
    pub negative_ratio: f64,
    /// Train, validation and test fractions.
    pub split_fractions: [f64; 3],
    /// Set from the pipeline-wide seed when loaded from a config file.
    #[serde(skip)]
    pub seed: u64,
    /// Negatives matching this query are preferred when sampling; empty
    /// disables the boost.
    pub negative_boost_query: String,
    /// Target share of sampled negatives taken from boost matches.
    pub negative_boost_fraction: f64,
}

impl Default for LabelingConfig {
    fn default() -> Self {
        Self {
            k: 1,
            per_class_k: BTreeMap::new(),
            fields: vec![Field::Description],
            negative_ratio: 2.0,
            split_fractions: [0.8, 0.1, 0.1],
            seed: 7,
            negative_boost_query: "plastic+".into(),
            negative_boost_fraction: 0.25,
        }
    }
}

impl LabelingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.k == 0 {
            return bad("labeling.k must be >= 1".into());
        }
        if let Some((code, _)) = self.per_class_k.iter().find(|(_, &k)| k == 0) {
            return bad(format!("labeling.per_class_k.{code} must be >= 1"));
        }
        if self.fields.is_empty() {
            return bad("labeling.fields must name at least one field".into());
        }
        if !(self.negative_ratio > 0.0 && self.negative_ratio.is_finite()) {
            return bad("labeling.negative_ratio must be > 0".into());
        }
        if self.split_fractions.iter().any(|&f| f.is_nan() || f <= 0.0) {
            return bad("labeling.split_fractions must all be > 0".into());
        }
        let sum: f64 = self.split_fractions.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return bad(format!("labeling.split_fractions sum to {sum}, expected 1"));
        }
        if !(0.0..=1.0).contains(&self.negative_boost_fraction) {
            return bad("labeling.negative_boost_fraction must be within [0, 1]".into());
        }
        Ok(())
    }
}

/// Model input and weak label for one patent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledExample {
    pub id: String,
    /// Title tokens followed by abstract tokens.
    pub text_tokens: Vec<String>,
    pub label: LabelVector,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DatasetSplit {
    pub train: Vec<LabeledExample>,
    pub validation: Vec<LabeledExample>,
    pub test: Vec<LabeledExample>,
}

impl DatasetSplit {
    pub fn parts(&self) -> [(&'static str, &[LabeledExample]); 3] {
        [
            ("train", &self.train),
            ("validation", &self.validation),
            ("test", &self.test),
        ]
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn find(&self, id: &str) -> Option<&LabeledExample> {
        self.train
            .iter()
            .chain(&self.validation)
            .chain(&self.test)
            .find(|e| e.id == id)
    }
}

/// Compiled class queries for one taxonomy.
#[derive(Debug, Clone)]
pub struct Labeler {
    taxonomy: Taxonomy,
    queries: Vec<QueryAst>,
    thresholds: Vec<usize>,
    fields: Vec<Field>,
}

impl Labeler {
    /// Parses every class query; any syntax error fails here rather than
    /// per document.
    pub fn new(taxonomy: &Taxonomy, cfg: &LabelingConfig) -> Result<Self> {
        cfg.validate()?;
        for code in cfg.per_class_k.keys() {
            taxonomy.index_of(code)?;
        }
        let mut queries = Vec::with_capacity(taxonomy.len());
        let mut thresholds = Vec::with_capacity(taxonomy.len());
        for node in taxonomy.nodes() {
            let ast = parse_query(&node.query_source).map_err(|source| Error::Query {
                class: node.code.clone(),
                source,
            })?;
            queries.push(ast);
            thresholds.push(cfg.per_class_k.get(&node.code).copied().unwrap_or(cfg.k));
        }
        Ok(Self {
            taxonomy: taxonomy.clone(),
            queries,
            thresholds,
            fields: cfg.fields.clone(),
        })
    }

    pub fn taxonomy(&self) -> &Taxonomy {
        &self.taxonomy
    }

    pub fn query(&self, class: usize) -> &QueryAst {
        &self.queries[class]
    }

    /// Classes whose query fires on their own, before propagation.
    pub fn direct_classes(&self, doc: &Document) -> Vec<usize> {
        (0..self.queries.len())
            .filter(|&c| fires(&self.queries[c], self.thresholds[c], &self.fields, doc))
            .collect()
    }

    pub fn label_document(&self, doc: &Document) -> LabelVector {
        self.taxonomy.propagate_indices(self.direct_classes(doc))
    }
}

/// Counts are summed over fields; proximity never spans a field boundary.
fn fires(query: &QueryAst, k: usize, fields: &[Field], doc: &Document) -> bool {
    let mut found = 0;
    for &field in fields {
        found += count_up_to(query, doc.field(field), k - found);
        if found >= k {
            return true;
        }
    }
    false
}

pub fn label_document(labeler: &Labeler, doc: &Document) -> LabelVector {
    labeler.label_document(doc)
}

struct Candidate {
    order: usize,
    example: LabeledExample,
}

/// Split sizes `(train, validation, test)`: validation and test are rounded,
/// train takes the remainder.
pub fn split_sizes(n: usize, fractions: [f64; 3]) -> Result<[usize; 3]> {
    let val = (fractions[1] * n as f64).round() as usize;
    let test = (fractions[2] * n as f64).round() as usize;
    if val + test >= n || val == 0 || test == 0 {
        return Err(Error::Dataset(format!(
            "{n} examples cannot be split into non-empty parts with fractions {fractions:?}"
        )));
    }
    Ok([n - val - test, val, test])
}

/// Labels the corpus, keeps all positives, samples negatives and splits.
pub fn build_dataset<I>(
    taxonomy: &Taxonomy,
    cfg: &LabelingConfig,
    corpus: I,
) -> Result<(DatasetSplit, LabelingReport)>
where
    I: IntoIterator<Item = Result<RawPatent>>,
{
    let labeler = Labeler::new(taxonomy, cfg)?;
    let boost = if cfg.negative_boost_query.trim().is_empty() {
        None
    } else {
        Some(parse_query(&cfg.negative_boost_query)?)
    };

    let mut report = LabelingReport::default();
    let mut seen = HashSet::new();
    let mut positives = Vec::new();
    let mut boosted = Vec::new();
    let mut plain = Vec::new();

    for (order, raw) in corpus.into_iter().enumerate() {
        let raw = raw?;
        report.records_read += 1;
        if !filter_patent(&raw) {
            report.filtered_out += 1;
            continue;
        }
        if !seen.insert(raw.id.clone()) {
            report.duplicate_ids += 1;
            continue;
        }
        let doc = Document::from_raw(&raw);
        let text_tokens = doc.title_abstract();
        if text_tokens.is_empty() {
            report.empty_text += 1;
            continue;
        }
        let label = labeler.label_document(&doc);
        let negative = label.is_negative();
        let is_boosted = negative
            && boost
                .as_ref()
                .is_some_and(|q| fires(q, 1, &cfg.fields, &doc));
        let candidate = Candidate {
            order,
            example: LabeledExample {
                id: raw.id,
                text_tokens,
                label,
            },
        };
        if !negative {
            positives.push(candidate);
        } else if is_boosted {
            boosted.push(candidate);
        } else {
            plain.push(candidate);
        }
    }

    report.positives = positives.len();
    report.negatives_available = boosted.len() + plain.len();
    report.boosted_available = boosted.len();
    if positives.is_empty() {
        return Err(Error::Dataset(format!(
            "no positive documents among {} usable records; check the class queries and --fields",
            report.records_read - report.filtered_out
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let wanted = (cfg.negative_ratio * positives.len() as f64).floor() as usize;
    let boost_target = if boost.is_some() {
        ((cfg.negative_boost_fraction * wanted as f64).round() as usize).min(boosted.len())
    } else {
        0
    };
    let mut chosen_boosted = sample_indices(&mut rng, boosted.len(), boost_target);
    let chosen_plain = sample_indices(&mut rng, plain.len(), wanted - boost_target);
    let shortfall = wanted - boost_target - chosen_plain.len();
    if shortfall > 0 {
        let taken: HashSet<_> = chosen_boosted.iter().copied().collect();
        let rest: Vec<usize> = (0..boosted.len()).filter(|i| !taken.contains(i)).collect();
        let extra = sample_indices(&mut rng, rest.len(), shortfall);
        chosen_boosted.extend(extra.into_iter().map(|i| rest[i]));
        chosen_boosted.sort_unstable();
    }
    report.negatives_requested = wanted;
    report.boosted_sampled = chosen_boosted.len();
    report.negatives_sampled = chosen_boosted.len() + chosen_plain.len();
    if report.negatives_sampled < wanted {
        log::warn!(
            "only {} negatives available, {} requested",
            report.negatives_sampled,
            wanted
        );
    }

    let mut pool: Vec<Candidate> = positives;
    pool.extend(take_indices(boosted, &chosen_boosted));
    pool.extend(take_indices(plain, &chosen_plain));
    pool.sort_by_key(|c| c.order);
    let mut pool: Vec<LabeledExample> = pool.into_iter().map(|c| c.example).collect();
    pool.shuffle(&mut rng);

    let [n_train, n_val, _] = split_sizes(pool.len(), cfg.split_fractions)?;
    let test = pool.split_off(n_train + n_val);
    let validation = pool.split_off(n_train);
    let split = DatasetSplit {
        train: pool,
        validation,
        test,
    };
    report.fill_counts(taxonomy, &split);
    Ok((split, report))
}

/// Uniform sample of `amount` distinct indices below `n`, sorted.
fn sample_indices(rng: &mut ChaCha8Rng, n: usize, amount: usize) -> Vec<usize> {
    let mut picked = (0..n).choose_multiple(rng, amount.min(n));
    picked.sort_unstable();
    picked
}

fn take_indices(items: Vec<Candidate>, sorted: &[usize]) -> Vec<Candidate> {
    let mut next = sorted.iter().peekable();
    items
        .into_iter()
        .enumerate()
        .filter_map(|(i, c)| {
            if next.peek() == Some(&&i) {
                next.next();
                Some(c)
            } else {
                None
            }
        })
        .collect()
}
