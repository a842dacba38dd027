use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{
    accuracy, auprc, binarize, hierarchical_scores, Averaging, CurvePoint, EvalScope, ScopeKind,
    Scores,
};
use crate::error::{Error, Result};
use crate::taxonomy::Taxonomy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScopeReport {
    pub scope: String,
    pub kind: ScopeKind,
    pub macro_avg: Scores,
    pub micro_avg: Scores,
    /// Absent when the scope holds no positive truth.
    pub auprc: Option<f64>,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub threshold: f64,
    pub instances: usize,
    pub scopes: Vec<ScopeReport>,
}

/// Scores every scope at `threshold`.
pub fn evaluate<T: AsRef<[bool]>>(
    t: &Taxonomy,
    model: &str,
    probabilities: &[Vec<f64>],
    truths: &[T],
    threshold: f64,
    scopes: &[EvalScope],
) -> Result<EvalReport> {
    if scopes.is_empty() {
        return Err(Error::Metrics("no evaluation scopes".into()));
    }
    let preds = binarize(probabilities, threshold);
    let scopes = scopes
        .iter()
        .map(|scope| {
            Ok(ScopeReport {
                scope: scope.name(),
                kind: scope.kind.clone(),
                macro_avg: hierarchical_scores(t, scope, &preds, truths, Averaging::Macro)?,
                micro_avg: hierarchical_scores(t, scope, &preds, truths, Averaging::Micro)?,
                auprc: auprc(probabilities, truths, scope)?,
                accuracy: accuracy(scope, &preds, truths)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport {
        model: model.to_owned(),
        threshold,
        instances: probabilities.len(),
        scopes,
    })
}

fn header(label: Option<&str>) -> String {
    let mut s = format!("{:<8}", "Model");
    if let Some(label) = label {
        let _ = write!(s, " {label:<10}");
    }
    s.push_str(" | macro-avg.               | micro-avg.               | AUPRC  | Accuracy\n");
    let mut sub = format!("{:<8}", "");
    if label.is_some() {
        let _ = write!(sub, " {:<10}", "");
    }
    sub.push_str(" | hP      hR      hF1      | hP      hR      hF1      |        |\n");
    s + &sub
}

fn row(model: &str, label: Option<&str>, r: &ScopeReport) -> String {
    let mut s = format!("{model:<8}");
    if let Some(label) = label {
        let _ = write!(s, " {label:<10}");
    }
    let auprc = r
        .auprc
        .map_or_else(|| "n/a   ".to_owned(), |v| format!("{v:.4}"));
    let _ = writeln!(
        s,
        " | {:.4}  {:.4}  {:.4}   | {:.4}  {:.4}  {:.4}   | {auprc} | {:.4}",
        r.macro_avg.hp,
        r.macro_avg.hr,
        r.macro_avg.hf1,
        r.micro_avg.hp,
        r.micro_avg.hr,
        r.micro_avg.hf1,
        r.accuracy
    );
    s
}

impl EvalReport {
    /// Aligned plain-text tables: whole hierarchy, per level, per class.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "Evaluation of {} on {} instances (threshold {:.2})\n",
            self.model, self.instances, self.threshold
        );
        let whole: Vec<_> = self
            .scopes
            .iter()
            .filter(|r| r.kind == ScopeKind::Whole)
            .collect();
        let levels: Vec<_> = self
            .scopes
            .iter()
            .filter(|r| matches!(r.kind, ScopeKind::Level(_)))
            .collect();
        let classes: Vec<_> = self
            .scopes
            .iter()
            .filter(|r| matches!(r.kind, ScopeKind::Single(_)))
            .collect();
        if !whole.is_empty() {
            out.push_str("\nWhole classification hierarchy\n");
            out += &header(None);
            for r in whole {
                out += &row(&self.model, None, r);
            }
        }
        if !levels.is_empty() {
            out.push_str("\nPer level (level N includes every level above it)\n");
            out += &header(Some("Level"));
            for r in levels {
                let ScopeKind::Level(l) = r.kind else {
                    unreachable!()
                };
                out += &row(&self.model, Some(&l.to_string()), r);
            }
        }
        if !classes.is_empty() {
            out.push_str("\nPer class\n");
            out += &header(Some("Class"));
            for r in classes {
                out += &row(&self.model, Some(&r.scope), r);
            }
        }
        out
    }

    pub fn scope(&self, name: &str) -> Option<&ScopeReport> {
        self.scopes.iter().find(|r| r.scope == name)
    }
}

/// CSV rows `scope,threshold,hP,hR`.
pub fn write_pr_csv<W: Write>(curves: &[(String, Vec<CurvePoint>)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scope", "threshold", "hP", "hR"])?;
    for (scope, points) in curves {
        for p in points {
            w.write_record([
                scope.clone(),
                format!("{:.2}", p.threshold),
                p.hp.to_string(),
                p.hr.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("writing PR curves", e))?;
    Ok(())
}
