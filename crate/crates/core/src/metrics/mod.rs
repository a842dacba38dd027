//! Hierarchical precision, recall and F1, AUPRC, exact-match accuracy and
//! threshold sweeps over class scopes.
//!
//! Predicted and true label sets are closed under ancestors before they are
//! compared: `hP = Σ|Y_i ∩ L_i| / Σ|Y_i|` and `hR = Σ|Y_i ∩ L_i| / Σ|L_i|`.
//! Any ratio with a zero denominator counts as 0.

mod report;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::taxonomy::Taxonomy;

pub use report::{evaluate, write_pr_csv, EvalReport, ScopeReport};

/// The kind of class subset scored together.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ScopeKind {
    Whole,
    /// Every class at this level or above.
    Level(usize),
    Single(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalScope {
    pub kind: ScopeKind,
    /// Class indices in taxonomy order.
    pub classes: Vec<usize>,
}

impl EvalScope {
    pub fn whole(t: &Taxonomy) -> Self {
        Self {
            kind: ScopeKind::Whole,
            classes: (0..t.len()).collect(),
        }
    }

    pub fn level(t: &Taxonomy, level: usize) -> Result<Self> {
        if level == 0 || level > t.max_level() {
            return Err(Error::Metrics(format!(
                "level {level} is outside 1..={}",
                t.max_level()
            )));
        }
        Ok(Self {
            kind: ScopeKind::Level(level),
            classes: (0..t.len()).filter(|&c| t.level(c) <= level).collect(),
        })
    }

    pub fn single(t: &Taxonomy, code: &str) -> Result<Self> {
        let c = t.index_of(code)?;
        Ok(Self {
            kind: ScopeKind::Single(code.to_owned()),
            classes: vec![c],
        })
    }

    /// Whole hierarchy, every level, then every class.
    pub fn standard(t: &Taxonomy) -> Vec<Self> {
        let mut out = vec![Self::whole(t)];
        out.extend((1..=t.max_level()).map(|l| Self::level(t, l).expect("level in range")));
        out.extend(t.codes().map(|c| Self::single(t, c).expect("known code")));
        out
    }

    pub fn name(&self) -> String {
        match &self.kind {
            ScopeKind::Whole => "whole".into(),
            ScopeKind::Level(l) => format!("level{l}"),
            ScopeKind::Single(code) => code.clone(),
        }
    }

    /// Parses `whole`, `level<N>` or a class code.
    pub fn parse(t: &Taxonomy, name: &str) -> Result<Self> {
        if name == "whole" {
            return Ok(Self::whole(t));
        }
        if let Some(l) = name.strip_prefix("level").and_then(|n| n.parse().ok()) {
            return Self::level(t, l);
        }
        Self::single(t, name)
    }
}

/// Ancestor-closed predicted (`y`) and true (`l`) class sets of one instance.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InstanceSets {
    pub y: BTreeSet<usize>,
    pub l: BTreeSet<usize>,
}

impl InstanceSets {
    pub fn overlap(&self) -> usize {
        self.y.intersection(&self.l).count()
    }
}

fn closure(t: &Taxonomy, scope: &EvalScope, bits: &[bool]) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for &c in scope.classes.iter().filter(|&&c| bits[c]) {
        out.insert(c);
        out.extend(t.ancestor_indices(c).iter().copied());
    }
    out
}

/// Classes in scope that are set, plus all their ancestors (even outside the
/// scope).
pub fn instance_sets(
    t: &Taxonomy,
    scope: &EvalScope,
    predicted: &[bool],
    truth: &[bool],
) -> InstanceSets {
    InstanceSets {
        y: closure(t, scope, predicted),
        l: closure(t, scope, truth),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    Micro,
    Macro,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Scores {
    pub hp: f64,
    pub hr: f64,
    pub hf1: f64,
}

impl Scores {
    pub fn from_pr(hp: f64, hr: f64) -> Self {
        let hf1 = if hp + hr > 0.0 {
            2.0 * hp * hr / (hp + hr)
        } else {
            0.0
        };
        Self { hp, hr, hf1 }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn check_lengths<P: AsRef<[bool]>, T: AsRef<[bool]>>(
    t: &Taxonomy,
    predictions: &[P],
    truths: &[T],
) -> Result<()> {
    if predictions.is_empty() {
        return Err(Error::Metrics("no instances to score".into()));
    }
    if predictions.len() != truths.len() {
        return Err(Error::Metrics(format!(
            "{} predictions but {} truths",
            predictions.len(),
            truths.len()
        )));
    }
    let bad = predictions
        .iter()
        .map(|p| p.as_ref().len())
        .chain(truths.iter().map(|x| x.as_ref().len()));
    for len in bad {
        if len != t.len() {
            return Err(Error::Shape(format!(
                "label vector of length {len}, taxonomy has {} classes",
                t.len()
            )));
        }
    }
    Ok(())
}

fn micro<P: AsRef<[bool]>, T: AsRef<[bool]>>(
    t: &Taxonomy,
    scope: &EvalScope,
    predictions: &[P],
    truths: &[T],
) -> Scores {
    let (mut inter, mut ny, mut nl) = (0, 0, 0);
    for (p, l) in predictions.iter().zip(truths) {
        let s = instance_sets(t, scope, p.as_ref(), l.as_ref());
        inter += s.overlap();
        ny += s.y.len();
        nl += s.l.len();
    }
    Scores::from_pr(ratio(inter, ny), ratio(inter, nl))
}

/// Micro: pooled counts over instances. Macro: the unweighted mean of the
/// single-class scores of every class in scope, F1 included.
pub fn hierarchical_scores<P: AsRef<[bool]>, T: AsRef<[bool]>>(
    t: &Taxonomy,
    scope: &EvalScope,
    predictions: &[P],
    truths: &[T],
    averaging: Averaging,
) -> Result<Scores> {
    check_lengths(t, predictions, truths)?;
    Ok(match averaging {
        Averaging::Micro => micro(t, scope, predictions, truths),
        Averaging::Macro => {
            let mut sum = Scores::default();
            for &c in &scope.classes {
                let single = EvalScope {
                    kind: ScopeKind::Single(t.node(c).code.clone()),
                    classes: vec![c],
                };
                let s = micro(t, &single, predictions, truths);
                sum.hp += s.hp;
                sum.hr += s.hr;
                sum.hf1 += s.hf1;
            }
            let n = scope.classes.len() as f64;
            Scores {
                hp: sum.hp / n,
                hr: sum.hr / n,
                hf1: sum.hf1 / n,
            }
        }
    })
}

/// Fraction of instances predicted exactly on every class in scope.
pub fn accuracy<P: AsRef<[bool]>, T: AsRef<[bool]>>(
    scope: &EvalScope,
    predictions: &[P],
    truths: &[T],
) -> Result<f64> {
    if predictions.is_empty() || predictions.len() != truths.len() {
        return Err(Error::Metrics(
            "accuracy needs equal, non-empty instance lists".into(),
        ));
    }
    let hits = predictions
        .iter()
        .zip(truths)
        .filter(|(p, l)| {
            scope
                .classes
                .iter()
                .all(|&c| p.as_ref()[c] == l.as_ref()[c])
        })
        .count();
    Ok(hits as f64 / predictions.len() as f64)
}

/// Average precision `Σ_k (R_k - R_{k-1}) P_k` over descending score
/// thresholds; tied scores form one threshold. `None` without positives.
pub fn average_precision(scores: &[f64], truths: &[bool]) -> Option<f64> {
    let positives = truths.iter().filter(|&&l| l).count();
    if positives == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut seen, mut ap, mut last_recall) = (0usize, 0usize, 0.0, 0.0);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            tp += truths[order[i]] as usize;
            seen += 1;
            i += 1;
        }
        let recall = tp as f64 / positives as f64;
        ap += (recall - last_recall) * (tp as f64 / seen as f64);
        last_recall = recall;
    }
    Some(ap)
}

/// Average precision over all (instance, class in scope) pairs.
pub fn auprc<T: AsRef<[bool]>>(
    scores: &[Vec<f64>],
    truths: &[T],
    scope: &EvalScope,
) -> Result<Option<f64>> {
    if scores.is_empty() || scores.len() != truths.len() {
        return Err(Error::Metrics(
            "auprc needs equal, non-empty instance lists".into(),
        ));
    }
    let mut s = Vec::with_capacity(scores.len() * scope.classes.len());
    let mut l = Vec::with_capacity(s.capacity());
    for (row, truth) in scores.iter().zip(truths) {
        for &c in &scope.classes {
            s.push(row[c]);
            l.push(truth.as_ref()[c]);
        }
    }
    Ok(average_precision(&s, &l))
}

/// Classes whose probability reaches `threshold`.
pub fn binarize(probabilities: &[Vec<f64>], threshold: f64) -> Vec<Vec<bool>> {
    probabilities
        .iter()
        .map(|row| row.iter().map(|&p| p >= threshold).collect())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub threshold: f64,
    pub hp: f64,
    pub hr: f64,
}

/// `0.00, 0.01, ..., 1.00`.
pub fn default_thresholds() -> Vec<f64> {
    (0..=100).map(|i| i as f64 / 100.0).collect()
}

/// Micro hP and hR of the scope at each threshold.
pub fn pr_sweep<T: AsRef<[bool]>>(
    t: &Taxonomy,
    scope: &EvalScope,
    probabilities: &[Vec<f64>],
    truths: &[T],
    thresholds: &[f64],
) -> Result<Vec<CurvePoint>> {
    thresholds
        .iter()
        .map(|&threshold| {
            let preds = binarize(probabilities, threshold);
            let s = hierarchical_scores(t, scope, &preds, truths, Averaging::Micro)?;
            Ok(CurvePoint {
                threshold,
                hp: s.hp,
                hr: s.hr,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t() -> Taxonomy {
        Taxonomy::default_scheme()
    }

    fn bits(t: &Taxonomy, codes: &[&str]) -> Vec<bool> {
        let mut v = vec![false; t.len()];
        for c in codes {
            v[t.index_of(c).unwrap()] = true;
        }
        v
    }

    #[test]
    fn worked_example() {
        let t = t();
        let pred = bits(&t, &["Y02G10/20"]);
        let truth = bits(&t, &["Y02G10/22"]);
        let s = instance_sets(&t, &EvalScope::whole(&t), &pred, &truth);
        assert_eq!(s.y, BTreeSet::from([0, 1, 3]));
        assert_eq!(s.l, BTreeSet::from([0, 1, 3, 4]));
        assert_eq!(s.overlap(), 3);
        let m = hierarchical_scores(
            &t,
            &EvalScope::whole(&t),
            &[pred],
            &[truth],
            Averaging::Micro,
        )
        .unwrap();
        assert_eq!(m.hp, 1.0);
        assert_eq!(m.hr, 0.75);
        assert!((m.hf1 - 6.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cases() {
        let t = t();
        let whole = EvalScope::whole(&t);
        let none = vec![false; 9];
        let some = bits(&t, &["Y02G20/10"]);
        assert!(instance_sets(&t, &whole, &none, &some).y.is_empty());
        let s = instance_sets(&t, &whole, &some, &some);
        assert_eq!(s.y, s.l);
        let perfect = hierarchical_scores(
            &t,
            &whole,
            std::slice::from_ref(&some),
            std::slice::from_ref(&some),
            Averaging::Micro,
        )
        .unwrap();
        assert_eq!((perfect.hp, perfect.hr, perfect.hf1), (1.0, 1.0, 1.0));
        let empty = hierarchical_scores(&t, &whole, &[none], &[some], Averaging::Micro).unwrap();
        assert_eq!((empty.hp, empty.hr, empty.hf1), (0.0, 0.0, 0.0));
        let no_inst: [Vec<bool>; 0] = [];
        assert!(hierarchical_scores(&t, &whole, &no_inst, &no_inst, Averaging::Micro).is_err());
    }

    #[test]
    fn macro_is_mean_of_single_class_scores() {
        let t = t();
        let scope = EvalScope::level(&t, 2).unwrap();
        let preds = [bits(&t, &["Y02G", "Y02G10/00"]), bits(&t, &["Y02G"])];
        let truths = [
            bits(&t, &["Y02G", "Y02G10/00"]),
            bits(&t, &["Y02G", "Y02G20/00"]),
        ];
        let m = hierarchical_scores(&t, &scope, &preds, &truths, Averaging::Macro).unwrap();
        // Y02G: P=R=1. Y02G10/00: P=R=1. Y02G20/00: P=0, R=0.
        assert!((m.hp - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.hr - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.hf1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn level_scopes_are_cumulative() {
        let t = t();
        assert_eq!(EvalScope::level(&t, 1).unwrap().classes, [0]);
        assert_eq!(EvalScope::level(&t, 2).unwrap().classes, [0, 1, 6]);
        assert_eq!(
            EvalScope::level(&t, 4).unwrap().classes,
            EvalScope::whole(&t).classes
        );
        assert!(EvalScope::level(&t, 5).is_err());
        assert_eq!(EvalScope::standard(&t).len(), 1 + 4 + 9);
        assert_eq!(EvalScope::parse(&t, "level3").unwrap().name(), "level3");
        assert_eq!(EvalScope::parse(&t, "Y02G20/20").unwrap().classes, [8]);
    }

    #[test]
    fn accuracy_examples() {
        let t = t();
        let whole = EvalScope::whole(&t);
        let a = bits(&t, &["Y02G10/10"]);
        assert_eq!(
            accuracy(&whole, std::slice::from_ref(&a), std::slice::from_ref(&a)).unwrap(),
            1.0
        );
        let single = EvalScope::single(&t, "Y02G").unwrap();
        let preds = [bits(&t, &["Y02G"]), vec![false; 9]];
        let truths = [bits(&t, &["Y02G"]), bits(&t, &["Y02G"])];
        assert_eq!(accuracy(&single, &preds, &truths).unwrap(), 0.5);
        let truths: Vec<Vec<bool>> = (0..9).map(|_| vec![false; 9]).collect();
        let preds: Vec<Vec<bool>> = (0..9).map(|i| (0..9).map(|j| i == j).collect()).collect();
        assert_eq!(accuracy(&whole, &preds, &truths).unwrap(), 0.0);
    }

    #[test]
    fn average_precision_examples() {
        let ap = average_precision(&[0.9, 0.8, 0.7, 0.6], &[true, false, true, false]).unwrap();
        assert!((ap - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-12);
        assert_eq!(
            average_precision(&[0.1, 0.9, 0.8], &[false, true, true]),
            Some(1.0)
        );
        assert_eq!(
            average_precision(&[1.0, 0.0, 1.0], &[true, false, true]),
            Some(1.0)
        );
        assert_eq!(average_precision(&[0.3, 0.2], &[false, false]), None);
        // one tie group holding everything: precision = base rate
        assert_eq!(
            average_precision(&[0.5; 4], &[true, false, false, false]),
            Some(0.25)
        );
    }

    #[test]
    fn sweep_edges() {
        let t = t();
        let whole = EvalScope::whole(&t);
        let probs = vec![vec![0.7, 0.6, 0.2, 0.55, 0.3, 0.1, 0.4, 0.2, 0.05]];
        let truth = [bits(&t, &["Y02G10/22"])];
        let curve = pr_sweep(&t, &whole, &probs, &truth, &default_thresholds()).unwrap();
        assert_eq!(curve.len(), 101);
        let max_hr = curve.iter().map(|p| p.hr).fold(0.0, f64::max);
        assert_eq!(curve[0].hr, max_hr);
        assert_eq!(curve[100].hp, 0.0);
        assert!(curve.windows(2).all(|w| w[1].hr <= w[0].hr));
    }
}
