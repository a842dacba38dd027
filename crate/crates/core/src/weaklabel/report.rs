use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{DatasetSplit, LabeledExample};
use crate::taxonomy::Taxonomy;

/// Positive and negative counts of one class in each split.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClassCounts {
    pub code: String,
    /// `[positive, negative]` for train, validation, test.
    pub train: [usize; 2],
    pub validation: [usize; 2],
    pub test: [usize; 2],
}

impl ClassCounts {
    pub fn positives(&self) -> usize {
        self.train[0] + self.validation[0] + self.test[0]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabelingReport {
    pub records_read: usize,
    pub malformed_lines: usize,
    pub filtered_out: usize,
    pub duplicate_ids: usize,
    pub empty_text: usize,
    pub positives: usize,
    pub negatives_available: usize,
    pub boosted_available: usize,
    pub negatives_requested: usize,
    pub negatives_sampled: usize,
    pub boosted_sampled: usize,
    pub split_sizes: [usize; 3],
    pub classes: Vec<ClassCounts>,
}

fn count(examples: &[LabeledExample], class: usize) -> [usize; 2] {
    let pos = examples.iter().filter(|e| e.label.get(class)).count();
    [pos, examples.len() - pos]
}

impl LabelingReport {
    pub fn fill_counts(&mut self, taxonomy: &Taxonomy, split: &DatasetSplit) {
        self.split_sizes = [split.train.len(), split.validation.len(), split.test.len()];
        self.classes = taxonomy
            .nodes()
            .iter()
            .enumerate()
            .map(|(c, node)| ClassCounts {
                code: node.code.clone(),
                train: count(&split.train, c),
                validation: count(&split.validation, c),
                test: count(&split.test, c),
            })
            .collect();
    }

    /// Per-class `+`/`-` table by split, followed by a totals row and the
    /// sampling summary.
    pub fn to_text(&self) -> String {
        let width = self
            .classes
            .iter()
            .map(|c| c.code.len())
            .max()
            .unwrap_or(5)
            .max(5);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$} | {:>17} | {:>17} | {:>17}",
            "Class", "Training set", "Validation set", "Test set"
        );
        let _ = writeln!(
            out,
            "{:<width$} | {:>8} {:>8} | {:>8} {:>8} | {:>8} {:>8}",
            "", "+", "-", "+", "-", "+", "-"
        );
        let _ = writeln!(out, "{}", "-".repeat(width + 60));
        for c in &self.classes {
            let _ = writeln!(
                out,
                "{:<width$} | {:>8} {:>8} | {:>8} {:>8} | {:>8} {:>8}",
                c.code,
                c.train[0],
                c.train[1],
                c.validation[0],
                c.validation[1],
                c.test[0],
                c.test[1]
            );
        }
        let _ = writeln!(out, "{}", "-".repeat(width + 60));
        let _ = writeln!(
            out,
            "{:<width$} | {:>17} | {:>17} | {:>17}",
            "Total", self.split_sizes[0], self.split_sizes[1], self.split_sizes[2]
        );
        let _ = writeln!(out);
        let _ = writeln!(out, "records read:         {}", self.records_read);
        let _ = writeln!(out, "malformed lines:      {}", self.malformed_lines);
        let _ = writeln!(out, "filtered out:         {}", self.filtered_out);
        let _ = writeln!(out, "duplicate ids:        {}", self.duplicate_ids);
        let _ = writeln!(out, "empty title+abstract: {}", self.empty_text);
        let _ = writeln!(out, "positives:            {}", self.positives);
        let _ = writeln!(
            out,
            "negatives available:  {} ({} boosted)",
            self.negatives_available, self.boosted_available
        );
        let _ = writeln!(
            out,
            "negatives sampled:    {} of {} requested ({} boosted)",
            self.negatives_sampled, self.negatives_requested, self.boosted_sampled
        );
        out
    }
}
