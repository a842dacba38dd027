//! Raw patent records, the English/completeness filter and text preprocessing.
//!
//! The corpus is JSON Lines, one record per line:
//!
//! ```json
//! {"id": "EP1234567", "lang": "en", "title": "...", "abstract": "...", "description": "..."}
//! ```

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Lines};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const STOPWORDS_EN: &str = include_str!("../assets/stopwords_en.txt");

static STOPWORDS: LazyLock<HashSet<&'static str>> = LazyLock::new(|| {
    STOPWORDS_EN
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
});

pub fn is_stopword(token: &str) -> bool {
    STOPWORDS.contains(token)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPatent {
    pub id: String,
    #[serde(rename = "lang", default)]
    pub language: String,
    #[serde(default)]
    pub title: Option<String>,
    #[serde(rename = "abstract", default)]
    pub abstract_text: Option<String>,
    #[serde(default)]
    pub description: Option<String>,
}

/// A record line that could not be decoded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MalformedLine {
    pub line: usize,
    pub message: String,
}

/// Streaming JSON Lines reader. Malformed lines are logged and skipped; a
/// file that yields no valid record ends with an error item.
pub struct CorpusReader {
    path: PathBuf,
    lines: Lines<BufReader<File>>,
    line_no: usize,
    valid: usize,
    malformed: Vec<MalformedLine>,
    finished: bool,
}

pub fn read_corpus(path: &Path) -> Result<CorpusReader> {
    let file =
        File::open(path).map_err(|e| Error::io(format!("opening corpus {}", path.display()), e))?;
    Ok(CorpusReader {
        path: path.to_path_buf(),
        lines: BufReader::new(file).lines(),
        line_no: 0,
        valid: 0,
        malformed: Vec::new(),
        finished: false,
    })
}

impl CorpusReader {
    pub fn skipped(&self) -> usize {
        self.malformed.len()
    }

    pub fn malformed(&self) -> &[MalformedLine] {
        &self.malformed
    }

    pub fn valid(&self) -> usize {
        self.valid
    }

    fn parse_line(line: &str) -> std::result::Result<RawPatent, String> {
        let rec: RawPatent = serde_json::from_str(line).map_err(|e| e.to_string())?;
        if rec.id.trim().is_empty() {
            return Err("empty id".into());
        }
        Ok(rec)
    }
}

impl Iterator for CorpusReader {
    type Item = Result<RawPatent>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.finished {
            return None;
        }
        loop {
            match self.lines.next() {
                None => {
                    self.finished = true;
                    if self.valid == 0 {
                        return Some(Err(Error::Corpus {
                            path: self.path.clone(),
                            message: format!(
                                "no valid records ({} malformed line(s))",
                                self.malformed.len()
                            ),
                        }));
                    }
                    return None;
                }
                Some(Err(e)) => {
                    self.finished = true;
                    return Some(Err(Error::io(
                        format!("reading {} line {}", self.path.display(), self.line_no + 1),
                        e,
                    )));
                }
                Some(Ok(line)) => {
                    self.line_no += 1;
                    if line.trim().is_empty() {
                        continue;
                    }
                    match Self::parse_line(&line) {
                        Ok(rec) => {
                            self.valid += 1;
                            return Some(Ok(rec));
                        }
                        Err(message) => {
                            log::warn!(
                                "{}:{}: skipping malformed record: {message}",
                                self.path.display(),
                                self.line_no
                            );
                            self.malformed.push(MalformedLine {
                                line: self.line_no,
                                message,
                            });
                        }
                    }
                }
            }
        }
    }
}

fn has_text(field: &Option<String>) -> bool {
    field.as_deref().is_some_and(|s| !s.trim().is_empty())
}

/// English records with non-empty title, abstract and description.
pub fn filter_patent(r: &RawPatent) -> bool {
    r.language.trim().eq_ignore_ascii_case("en")
        && has_text(&r.title)
        && has_text(&r.abstract_text)
        && has_text(&r.description)
}

fn is_joiner(c: char) -> bool {
    matches!(
        c,
        '-' | '\u{2010}' | '\u{2011}' | '\'' | '\u{2019}' | '\u{02bc}'
    )
}

/// Lowercases, deletes hyphens and apostrophes (joining the word halves),
/// turns every other non-`[a-z0-9]` character into a separator, splits, and
/// drops stopwords.
pub fn preprocess(text: &str) -> Vec<String> {
    let mut cleaned = String::with_capacity(text.len());
    for c in text.chars().flat_map(char::to_lowercase) {
        if is_joiner(c) {
            continue;
        }
        if c.is_ascii_lowercase() || c.is_ascii_digit() {
            cleaned.push(c);
        } else {
            cleaned.push(' ');
        }
    }
    cleaned
        .split_whitespace()
        .filter(|t| !is_stopword(t))
        .map(str::to_owned)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Title,
    Abstract,
    Description,
}

impl Field {
    pub fn as_str(self) -> &'static str {
        match self {
            Field::Title => "title",
            Field::Abstract => "abstract",
            Field::Description => "description",
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Field {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "title" => Ok(Field::Title),
            "abstract" => Ok(Field::Abstract),
            "description" => Ok(Field::Description),
            other => Err(Error::Config(format!(
                "unknown field '{other}' (expected title, abstract or description)"
            ))),
        }
    }
}

/// A preprocessed patent.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Document {
    pub id: String,
    pub title_tokens: Vec<String>,
    pub abstract_tokens: Vec<String>,
    pub description_tokens: Vec<String>,
}

impl Document {
    pub fn from_raw(r: &RawPatent) -> Self {
        let tok = |f: &Option<String>| f.as_deref().map(preprocess).unwrap_or_default();
        Document {
            id: r.id.clone(),
            title_tokens: tok(&r.title),
            abstract_tokens: tok(&r.abstract_text),
            description_tokens: tok(&r.description),
        }
    }

    pub fn field(&self, field: Field) -> &[String] {
        match field {
            Field::Title => &self.title_tokens,
            Field::Abstract => &self.abstract_tokens,
            Field::Description => &self.description_tokens,
        }
    }

    /// Title tokens followed by abstract tokens: the model input.
    pub fn title_abstract(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.title_tokens.len() + self.abstract_tokens.len());
        out.extend_from_slice(&self.title_tokens);
        out.extend_from_slice(&self.abstract_tokens);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write;

    fn rec(lang: &str, desc: &str) -> RawPatent {
        RawPatent {
            id: "EP1".into(),
            language: lang.into(),
            title: Some("Title".into()),
            abstract_text: Some("Abstract".into()),
            description: Some(desc.into()),
        }
    }

    #[test]
    fn preprocess_examples() {
        assert_eq!(
            preprocess("Self-healing polymers for recycling"),
            ["selfhealing", "polymers", "recycling"]
        );
        assert!(preprocess("").is_empty());
        assert_eq!(preprocess("The Plastic, the Waste."), ["plastic", "waste"]);
        assert_eq!(
            preprocess("PET's 2 bottles; bio-based"),
            ["pets", "2", "bottles", "biobased"]
        );
        assert_eq!(preprocess("don't stop"), ["stop"]);
    }

    #[test]
    fn filter_examples() {
        assert!(filter_patent(&rec("en", "text")));
        assert!(filter_patent(&rec("EN", "text")));
        assert!(!filter_patent(&rec("de", "text")));
        assert!(!filter_patent(&rec("en", "")));
        assert!(!filter_patent(&rec("en", "   ")));
        let mut missing = rec("en", "text");
        missing.title = None;
        assert!(!filter_patent(&missing));
    }

    fn write_lines(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    #[test]
    fn reads_valid_lines() {
        let f = write_lines(&[
            r#"{"id":"a","lang":"en","title":"t","abstract":"a","description":"d"}"#,
            r#"{"id":"b","lang":"de","title":"t","abstract":"a","description":"d"}"#,
            r#"{"id":"c","lang":"en"}"#,
        ]);
        let recs: Vec<_> = read_corpus(f.path())
            .unwrap()
            .collect::<Result<_>>()
            .unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(recs[0].id, "a");
        assert_eq!(recs[1].language, "de");
        assert_eq!(recs[2].description, None);
    }

    #[test]
    fn skips_malformed_lines() {
        let f = write_lines(&[
            r#"{"id":"a","lang":"en"}"#,
            r#"{"id": broken"#,
            r#"{"id":"b","lang":"en"}"#,
            r#"{"id":"c","lang":"en"}"#,
        ]);
        let mut reader = read_corpus(f.path()).unwrap();
        let recs: Vec<_> = reader.by_ref().collect::<Result<_>>().unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(reader.skipped(), 1);
        assert_eq!(reader.malformed()[0].line, 2);
    }

    #[test]
    fn empty_file_is_an_error() {
        let f = write_lines(&[]);
        let out: Result<Vec<_>> = read_corpus(f.path()).unwrap().collect();
        let err = out.unwrap_err().to_string();
        assert!(err.contains("no valid records"), "{err}");

        let f = write_lines(&["not json", r#"{"id":""}"#]);
        assert!(read_corpus(f.path())
            .unwrap()
            .collect::<Result<Vec<_>>>()
            .is_err());
        assert!(read_corpus(Path::new("/nonexistent/corpus.jsonl")).is_err());
    }

    #[test]
    fn field_names() {
        assert_eq!("Description".parse::<Field>().unwrap(), Field::Description);
        assert!("claims".parse::<Field>().is_err());
    }

    proptest! {
        #[test]
        fn preprocess_is_idempotent(text in "[ -~\u{e9}\u{2019}\u{2010}]{0,80}") {
            let once = preprocess(&text);
            let twice = preprocess(&once.join(" "));
            prop_assert_eq!(&once, &twice);
            for t in &once {
                prop_assert!(!t.is_empty());
                prop_assert!(t.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit()));
                prop_assert!(!is_stopword(t));
            }
        }
    }
}
