use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{Attribution, OutputFunction};
use crate::error::{Error, Result};

pub trait ReportRenderer: Send + Sync {
    fn name(&self) -> &'static str;

    /// File extension used when the report is written to disk.
    fn extension(&self) -> &'static str;

    fn render(&self, attribution: &Attribution) -> Result<String>;
}

pub struct RendererRegistry {
    renderers: BTreeMap<&'static str, Box<dyn ReportRenderer>>,
}

impl RendererRegistry {
    pub fn builtin() -> Self {
        let mut r = Self {
            renderers: BTreeMap::new(),
        };
        r.register(Box::new(HtmlRenderer));
        r.register(Box::new(AnsiRenderer));
        r.register(Box::new(CsvRenderer));
        r
    }

    pub fn register(&mut self, renderer: Box<dyn ReportRenderer>) {
        self.renderers.insert(renderer.name(), renderer);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.renderers.keys().copied().collect()
    }

    pub fn get(&self, name: &str) -> Result<&dyn ReportRenderer> {
        self.renderers.get(name).map(|r| r.as_ref()).ok_or_else(|| {
            Error::Config(format!(
                "unknown report format '{name}' (available: {})",
                self.names().join(", ")
            ))
        })
    }
}

impl Default for RendererRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tone {
    Positive,
    Negative,
    Neutral,
}

/// Tone and intensity in `[0, 1]` for every token, relative to the largest
/// absolute score.
fn shades(a: &Attribution) -> Result<Vec<(Tone, f64)>> {
    if a.tokens.is_empty() {
        return Err(Error::Attribution("nothing to render: no tokens".into()));
    }
    let max = a.tokens.iter().map(|t| t.score.abs()).fold(0.0, f64::max);
    Ok(a.tokens
        .iter()
        .map(|t| {
            if max == 0.0 || t.score == 0.0 {
                (Tone::Neutral, 0.0)
            } else if t.score > 0.0 {
                (Tone::Positive, t.score / max)
            } else {
                (Tone::Negative, -t.score / max)
            }
        })
        .collect())
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn output_label(a: &Attribution) -> &'static str {
    match a.output {
        OutputFunction::Probability => "probability",
        OutputFunction::Logit => "logit",
    }
}

/// Standalone HTML page: green spans raise the target output, red spans
/// lower it.
pub struct HtmlRenderer;

impl ReportRenderer for HtmlRenderer {
    fn name(&self) -> &'static str {
        "html"
    }

    fn extension(&self) -> &'static str {
        "html"
    }

    fn render(&self, a: &Attribution) -> Result<String> {
        let shades = shades(a)?;
        let mut s = String::new();
        let title = format!(
            "Attribution for {} in {}",
            escape(&a.target_class),
            escape(&a.document_id)
        );
        let _ = write!(
            s,
            "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>{title}</title>\n\
<style>\n\
body {{ font-family: sans-serif; max-width: 60em; margin: 2em auto; }}\n\
.tokens span {{ padding: 0 0.15em; border-radius: 0.2em; }}\n\
.pos {{ background: rgba(0, 160, 60, var(--a)); }}\n\
.neg {{ background: rgba(210, 30, 30, var(--a)); }}\n\
.neu {{ background: none; }}\n\
table {{ border-collapse: collapse; }}\n\
td, th {{ padding: 0.2em 0.8em; text-align: left; }}\n\
</style>\n</head>\n<body>\n<h1>{title}</h1>\n"
        );
        let _ = writeln!(
            s,
            "<p>Target class <strong>{}</strong>, attributed {} with {} integration steps. \
Green words increase the {}, red words decrease it.</p>",
            escape(&a.target_class),
            output_label(a),
            a.steps,
            output_label(a)
        );
        s.push_str("<p class=\"tokens\">\n");
        for (t, (tone, alpha)) in a.tokens.iter().zip(&shades) {
            let class = match tone {
                Tone::Positive => "pos",
                Tone::Negative => "neg",
                Tone::Neutral => "neu",
            };
            let _ = writeln!(
                s,
                "<span class=\"{class}\" style=\"--a: {alpha:.3}\" title=\"{:+.6e}\">{}</span>",
                t.score,
                escape(&t.token)
            );
        }
        s.push_str("</p>\n<h2>Predicted probabilities</h2>\n<table>\n<tr><th>Class</th><th>Probability</th><th>Assigned</th></tr>\n");
        for (c, p) in a.classes.iter().zip(&a.probabilities) {
            let _ = writeln!(
                s,
                "<tr><td>{}</td><td>{p:.4}</td><td>{}</td></tr>",
                escape(c),
                if *p >= a.threshold { "yes" } else { "" }
            );
        }
        let assigned = a.assigned();
        let _ = write!(
            s,
            "</table>\n<p>Assigned classes (threshold {:.2}): {}</p>\n\
<p>Completeness: sum of scores {:.6e}, output difference {:.6e}, relative gap {:.3e}</p>\n</body>\n</html>\n",
            a.threshold,
            if assigned.is_empty() {
                "none".to_owned()
            } else {
                escape(&assigned.join(", "))
            },
            a.completeness.sum_of_scores,
            a.completeness.output_delta,
            a.completeness.relative_gap
        );
        Ok(s)
    }
}

/// Terminal rendering with 24-bit background colors.
pub struct AnsiRenderer;

impl ReportRenderer for AnsiRenderer {
    fn name(&self) -> &'static str {
        "ansi"
    }

    fn extension(&self) -> &'static str {
        "txt"
    }

    fn render(&self, a: &Attribution) -> Result<String> {
        let shades = shades(a)?;
        let mut s = format!(
            "Attribution for {} in {} ({} steps, {})\n",
            a.target_class,
            a.document_id,
            a.steps,
            output_label(a)
        );
        let words: Vec<String> = a
            .tokens
            .iter()
            .zip(&shades)
            .map(|(t, (tone, alpha))| {
                let fade = (255.0 * (1.0 - alpha)).round() as u8;
                match tone {
                    Tone::Positive => format!("\x1b[30;48;2;{fade};255;{fade}m{}\x1b[0m", t.token),
                    Tone::Negative => format!("\x1b[30;48;2;255;{fade};{fade}m{}\x1b[0m", t.token),
                    Tone::Neutral => t.token.clone(),
                }
            })
            .collect();
        s += &words.join(" ");
        s.push('\n');
        for (c, p) in a.classes.iter().zip(&a.probabilities) {
            let mark = if *p >= a.threshold { " *" } else { "" };
            let _ = writeln!(s, "  {c:<10} {p:.4}{mark}");
        }
        let _ = writeln!(
            s,
            "completeness: sum {:.6e}, delta {:.6e}, gap {:.3e}",
            a.completeness.sum_of_scores, a.completeness.output_delta, a.completeness.relative_gap
        );
        Ok(s)
    }
}

/// `position,token,score` rows.
pub struct CsvRenderer;

impl ReportRenderer for CsvRenderer {
    fn name(&self) -> &'static str {
        "csv"
    }

    fn extension(&self) -> &'static str {
        "csv"
    }

    fn render(&self, a: &Attribution) -> Result<String> {
        if a.tokens.is_empty() {
            return Err(Error::Attribution("nothing to render: no tokens".into()));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["position", "token", "score"])?;
        for t in &a.tokens {
            w.write_record([t.position.to_string(), t.token.clone(), t.score.to_string()])?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::io("rendering csv", e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}
