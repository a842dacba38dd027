//! CSV split files: `ID,TITLE_ABSTR,<class codes...>` with one 0/1 target
//! column per class in taxonomy order.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{DatasetSplit, LabeledExample};
use crate::error::{Error, Result};
use crate::taxonomy::{LabelVector, Taxonomy};

/// File names for train, validation and test.
pub const SPLIT_FILES: [&str; 3] = ["train.csv", "val.csv", "test.csv"];

fn header(taxonomy: &Taxonomy) -> Vec<String> {
    let mut h = vec!["ID".to_string(), "TITLE_ABSTR".to_string()];
    h.extend(taxonomy.codes().map(str::to_owned));
    h
}

pub fn write_split_csv<W: Write>(
    taxonomy: &Taxonomy,
    examples: &[LabeledExample],
    out: W,
) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .quote_style(csv::QuoteStyle::NonNumeric)
        .from_writer(out);
    w.write_record(header(taxonomy))?;
    for ex in examples {
        if ex.label.len() != taxonomy.len() {
            return Err(Error::Dataset(format!(
                "example '{}' has {} labels, taxonomy has {} classes",
                ex.id,
                ex.label.len(),
                taxonomy.len()
            )));
        }
        let mut row = Vec::with_capacity(2 + taxonomy.len());
        row.push(ex.id.clone());
        row.push(ex.text_tokens.join(" "));
        row.extend(
            ex.label
                .bits()
                .iter()
                .map(|&b| if b { "1" } else { "0" }.to_string()),
        );
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("writing dataset csv", e))?;
    Ok(())
}

pub fn read_split_csv<R: Read>(taxonomy: &Taxonomy, input: R) -> Result<Vec<LabeledExample>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let expected = header(taxonomy);
    let found = r.headers()?.clone();
    for (i, want) in expected.iter().enumerate() {
        match found.get(i) {
            Some(got) if got == want => {}
            Some(got) => {
                return Err(Error::Dataset(format!(
                    "column {} is '{got}', expected '{want}'",
                    i + 1
                )))
            }
            None => return Err(Error::Dataset(format!("missing column '{want}'"))),
        }
    }
    if found.len() > expected.len() {
        return Err(Error::Dataset(format!(
            "unexpected extra column '{}'",
            &found[expected.len()]
        )));
    }

    let mut out = Vec::new();
    for (row_idx, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = row_idx + 2;
        let id = rec[0].to_string();
        if id.is_empty() {
            return Err(Error::Dataset(format!("row {row}: empty ID")));
        }
        let text_tokens: Vec<String> = rec[1].split_whitespace().map(str::to_owned).collect();
        if text_tokens.is_empty() {
            return Err(Error::Dataset(format!("row {row}: empty TITLE_ABSTR")));
        }
        let mut bits = Vec::with_capacity(taxonomy.len());
        for (c, code) in taxonomy.codes().enumerate() {
            match &rec[2 + c] {
                "0" => bits.push(false),
                "1" => bits.push(true),
                other => {
                    return Err(Error::Dataset(format!(
                        "row {row}, column '{code}': target '{other}' is not 0 or 1"
                    )))
                }
            }
        }
        out.push(LabeledExample {
            id,
            text_tokens,
            label: LabelVector(bits),
        });
    }
    Ok(out)
}

pub fn write_dataset(taxonomy: &Taxonomy, split: &DatasetSplit, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    for ((_, examples), name) in split.parts().into_iter().zip(SPLIT_FILES) {
        let path = dir.join(name);
        let file = File::create(&path)
            .map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        write_split_csv(taxonomy, examples, std::io::BufWriter::new(file))?;
    }
    Ok(())
}

pub fn read_dataset(taxonomy: &Taxonomy, dir: &Path) -> Result<DatasetSplit> {
    let mut parts = Vec::with_capacity(3);
    for name in SPLIT_FILES {
        let path = dir.join(name);
        let file =
            File::open(&path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
        let examples = read_split_csv(taxonomy, std::io::BufReader::new(file))
            .map_err(|e| Error::Dataset(format!("{}: {e}", path.display())))?;
        parts.push(examples);
    }
    let test = parts.pop().unwrap();
    let validation = parts.pop().unwrap();
    let train = parts.pop().unwrap();
    Ok(DatasetSplit {
        train,
        validation,
        test,
    })
}
