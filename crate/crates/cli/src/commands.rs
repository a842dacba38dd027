use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use patclass::attribution::{integrated_gradients, RendererRegistry};
use patclass::config::PipelineConfig;
use patclass::corpus::{filter_patent, read_corpus, Document, RawPatent};
use patclass::metrics::{
    default_thresholds, evaluate as score, pr_sweep, write_pr_csv, EvalReport, EvalScope,
};
use patclass::neural::{
    train as fit, write_epoch_log, Checkpoint, ExternalEmbeddings, FeatureInit, HeadRegistry,
    Model, Sample,
};
use patclass::weaklabel::{self, DatasetSplit, LabeledExample, Labeler, LabelingReport};
use patclass::{Error, Result, Taxonomy};

const CHECKPOINT_FILE: &str = "model.json";
const EPOCH_LOG_FILE: &str = "epoch_log.csv";
const TRAIN_SUMMARY_FILE: &str = "train_summary.json";
const DATASET_REPORT_TXT: &str = "dataset_report.txt";
const DATASET_REPORT_JSON: &str = "dataset_report.json";

fn taxonomy(cfg: &PipelineConfig) -> Result<Taxonomy> {
    if cfg.paths.taxonomy.as_os_str().is_empty() {
        Ok(Taxonomy::default_scheme())
    } else {
        Taxonomy::from_path(&cfg.paths.taxonomy)
    }
}

fn embeddings(cfg: &PipelineConfig) -> Result<Option<ExternalEmbeddings>> {
    if cfg.paths.embeddings.as_os_str().is_empty() {
        Ok(None)
    } else {
        ExternalEmbeddings::load(&cfg.paths.embeddings, None).map(Some)
    }
}

fn create_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))
        }
        _ => Ok(()),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    create_parent(path)?;
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(format!("creating {}", path.display()), e))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    create_parent(path)?;
    fs::write(path, contents).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn flush(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush()
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn load_model(cfg: &PipelineConfig, t: &Taxonomy) -> Result<Model> {
    let path = cfg.paths.checkpoint_dir.join(CHECKPOINT_FILE);
    Checkpoint::load(&path)?.into_model(t, &HeadRegistry::builtin(), embeddings(cfg)?)
}

fn select_split<'a>(split: &'a DatasetSplit, name: &str) -> Result<&'a [LabeledExample]> {
    split
        .parts()
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, examples)| examples)
        .ok_or_else(|| Error::Config(format!("unknown split '{name}'")))
}

fn probabilities(model: &Model, examples: &[LabeledExample]) -> Result<Vec<Vec<f64>>> {
    examples
        .iter()
        .map(|e| model.probabilities(&model.encode(&e.id, &e.text_tokens)?))
        .collect()
}

/// Usable corpus records, in file order.
fn usable_records(path: &Path) -> Result<Vec<RawPatent>> {
    let mut reader = read_corpus(path)?;
    let mut out = Vec::new();
    let mut filtered = 0usize;
    for r in reader.by_ref() {
        let r = r?;
        if filter_patent(&r) {
            out.push(r);
        } else {
            filtered += 1;
        }
    }
    info!(
        "{}: {} usable, {filtered} filtered, {} malformed",
        path.display(),
        out.len(),
        reader.skipped()
    );
    Ok(out)
}

#[derive(Serialize)]
struct LabelLine<'a> {
    id: &'a str,
    direct: Vec<&'a str>,
    labels: Vec<&'a str>,
    vector: Vec<u8>,
}

pub fn label(cfg: &PipelineConfig, workers: usize, output: Option<PathBuf>) -> Result<()> {
    let t = taxonomy(cfg)?;
    let labeler = Labeler::new(&t, &cfg.labeling)?;
    let records = usable_records(&cfg.paths.corpus)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    let lines: Vec<String> = pool.install(|| {
        records
            .par_iter()
            .map(|r| {
                let doc = Document::from_raw(r);
                let vector = labeler.label_document(&doc);
                let line = LabelLine {
                    id: &r.id,
                    direct: labeler
                        .direct_classes(&doc)
                        .into_iter()
                        .map(|c| t.node(c).code.as_str())
                        .collect(),
                    labels: vector.codes(&t),
                    vector: vector.to_u8(),
                };
                serde_json::to_string(&line).map_err(Error::from)
            })
            .collect::<Result<_>>()
    })?;
    let path = output.unwrap_or_else(|| cfg.paths.labels.clone());
    let mut w = create(&path)?;
    for line in &lines {
        writeln!(w, "{line}").map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    }
    flush(w, &path)?;
    let positives = lines
        .iter()
        .filter(|l| !l.contains("\"labels\":[]"))
        .count();
    println!(
        "labeled {} records ({positives} positive) -> {}",
        lines.len(),
        path.display()
    );
    Ok(())
}

pub fn build_dataset(cfg: &PipelineConfig) -> Result<()> {
    let t = taxonomy(cfg)?;
    let mut reader = read_corpus(&cfg.paths.corpus)?;
    let (split, mut report) = weaklabel::build_dataset(&t, &cfg.labeling, reader.by_ref())?;
    report.malformed_lines = reader.skipped();
    let dir = &cfg.paths.dataset_dir;
    weaklabel::write_dataset(&t, &split, dir)?;
    let text = report.to_text();
    write_file(&dir.join(DATASET_REPORT_TXT), &text)?;
    write_file(&dir.join(DATASET_REPORT_JSON), &to_json(&report)?)?;
    print!("{text}");
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct TrainSummary {
    model: String,
    features: String,
    parameters: usize,
    epochs_run: usize,
    best_epoch: usize,
    best_val_loss: f64,
    best_val_err: f64,
}

fn samples(model: &Model, examples: &[LabeledExample]) -> Result<Vec<Sample>> {
    examples
        .iter()
        .map(|e| {
            Ok(Sample {
                encoded: model.encode(&e.id, &e.text_tokens)?,
                labels: e.label.0.clone(),
            })
        })
        .collect()
}

pub fn train(cfg: &PipelineConfig) -> Result<()> {
    let t = taxonomy(cfg)?;
    let split = weaklabel::read_dataset(&t, &cfg.paths.dataset_dir)?;
    let documents: Vec<Vec<String>> = split.train.iter().map(|e| e.text_tokens.clone()).collect();
    let init = match embeddings(cfg)? {
        Some(ext) => FeatureInit::External(ext),
        None => FeatureInit::Toy {
            config: &cfg.encoder,
            documents: &documents,
        },
    };
    let model = Model::initialize(&t, &HeadRegistry::builtin(), &cfg.model, init, cfg.seed)?;
    let train_set = samples(&model, &split.train)?;
    let val_set = samples(&model, &split.validation)?;
    let outcome = fit(
        model,
        &train_set,
        &val_set,
        &cfg.training,
        &cfg.loss,
        |_| {},
    )?;

    let dir = &cfg.paths.checkpoint_dir;
    let ck_path = dir.join(CHECKPOINT_FILE);
    create_parent(&ck_path)?;
    Checkpoint::from_model(&outcome.model).save(&ck_path)?;
    let log_path = dir.join(EPOCH_LOG_FILE);
    let w = create(&log_path)?;
    write_epoch_log(&outcome.log, w)?;
    let best = &outcome.log[outcome.best_epoch - 1];
    let summary = TrainSummary {
        model: outcome.model.head.kind().to_owned(),
        features: outcome.model.features.kind().to_owned(),
        parameters: outcome.model.params().iter().map(|p| p.values.len()).sum(),
        epochs_run: outcome.log.len(),
        best_epoch: outcome.best_epoch,
        best_val_loss: best.val_loss,
        best_val_err: best.val_err,
    };
    write_file(&dir.join(TRAIN_SUMMARY_FILE), &to_json(&summary)?)?;
    println!(
        "trained {} for {} epochs; best epoch {} (val loss {:.5}) -> {}",
        summary.model,
        summary.epochs_run,
        summary.best_epoch,
        summary.best_val_loss,
        ck_path.display()
    );
    Ok(())
}

fn eval_paths(cfg: &PipelineConfig, split: &str) -> (PathBuf, PathBuf) {
    let dir = &cfg.paths.report_dir;
    (
        dir.join(format!("eval_{split}.txt")),
        dir.join(format!("eval_{split}.json")),
    )
}

pub fn evaluate(cfg: &PipelineConfig, split_name: Option<String>) -> Result<()> {
    let split_name = split_name.unwrap_or_else(|| cfg.evaluation.split.clone());
    let t = taxonomy(cfg)?;
    let model = load_model(cfg, &t)?;
    let split = weaklabel::read_dataset(&t, &cfg.paths.dataset_dir)?;
    let examples = select_split(&split, &split_name)?;
    if examples.is_empty() {
        return Err(Error::Dataset(format!("the {split_name} split is empty")));
    }
    let probs = probabilities(&model, examples)?;
    let truths: Vec<&[bool]> = examples.iter().map(|e| e.label.bits()).collect();
    let scopes = if cfg.evaluation.scopes.is_empty() {
        EvalScope::standard(&t)
    } else {
        cfg.evaluation
            .scopes
            .iter()
            .map(|s| EvalScope::parse(&t, s))
            .collect::<Result<_>>()?
    };
    let report = score(
        &t,
        model.head.kind(),
        &probs,
        &truths,
        cfg.evaluation.threshold,
        &scopes,
    )?;
    let text = report.to_text();
    let (txt, json) = eval_paths(cfg, &split_name);
    write_file(&txt, &text)?;
    write_file(&json, &to_json(&report)?)?;
    print!("{text}");
    Ok(())
}

#[derive(Serialize)]
struct Prediction<'a> {
    id: &'a str,
    probabilities: BTreeMap<&'a str, f64>,
    assigned: Vec<String>,
}

pub fn predict(
    cfg: &PipelineConfig,
    input: Option<PathBuf>,
    output: Option<PathBuf>,
) -> Result<()> {
    let t = taxonomy(cfg)?;
    let model = load_model(cfg, &t)?;
    let input = input.unwrap_or_else(|| cfg.paths.corpus.clone());
    let path = output.unwrap_or_else(|| cfg.paths.report_dir.join("predictions.jsonl"));
    let records = usable_records(&input)?;
    let mut w = create(&path)?;
    for r in &records {
        let tokens = Document::from_raw(r).title_abstract();
        let (probs, assigned) = model.predict(&r.id, &tokens, cfg.evaluation.threshold)?;
        let line = Prediction {
            id: &r.id,
            probabilities: model
                .classes
                .iter()
                .map(String::as_str)
                .zip(probs)
                .collect(),
            assigned,
        };
        serde_json::to_writer(&mut w, &line)?;
        writeln!(w).map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    }
    flush(w, &path)?;
    println!("predicted {} records -> {}", records.len(), path.display());
    Ok(())
}

pub struct ExplainRequest {
    pub id: String,
    pub class: Option<String>,
    pub format: Option<String>,
    pub steps: Option<usize>,
    pub output: Option<PathBuf>,
}

/// Model input tokens of a document from the dataset, or from the corpus if
/// the dataset does not hold it.
fn document_tokens(cfg: &PipelineConfig, t: &Taxonomy, id: &str) -> Result<Vec<String>> {
    if let Ok(split) = weaklabel::read_dataset(t, &cfg.paths.dataset_dir) {
        if let Some(e) = split.find(id) {
            return Ok(e.text_tokens.clone());
        }
    }
    for r in read_corpus(&cfg.paths.corpus)? {
        let r = r?;
        if r.id == id {
            return Ok(Document::from_raw(&r).title_abstract());
        }
    }
    Err(Error::Dataset(format!(
        "document '{id}' is in neither the dataset nor the corpus"
    )))
}

fn file_stem(id: &str, class: &str) -> String {
    let clean = |s: &str| -> String {
        s.chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || c == '-' {
                    c
                } else {
                    '_'
                }
            })
            .collect()
    };
    format!("explain_{}_{}", clean(id), clean(class))
}

pub fn explain(cfg: &PipelineConfig, req: ExplainRequest) -> Result<()> {
    let t = taxonomy(cfg)?;
    let mut attribution_cfg = cfg.explain.attribution();
    if let Some(c) = req.class {
        attribution_cfg.target_class = c;
    }
    if let Some(s) = req.steps {
        attribution_cfg.steps = s;
    }
    t.index_of(&attribution_cfg.target_class)?;
    let registry = RendererRegistry::builtin();
    let renderer = registry.get(req.format.as_deref().unwrap_or(&cfg.explain.format))?;
    let model = load_model(cfg, &t)?;
    let tokens = document_tokens(cfg, &t, &req.id)?;
    let a = integrated_gradients(
        &model,
        &req.id,
        &tokens,
        &attribution_cfg,
        cfg.evaluation.threshold,
    )?;
    let rendered = renderer.render(&a)?;
    let path = req.output.unwrap_or_else(|| {
        cfg.paths.report_dir.join(format!(
            "{}.{}",
            file_stem(&req.id, &a.target_class),
            renderer.extension()
        ))
    });
    write_file(&path, &rendered)?;
    if renderer.name() == "ansi" {
        print!("{rendered}");
    }
    let c = &a.completeness;
    println!(
        "{} / {}: sum of scores {:+.6}, output change {:+.6}, relative gap {:.4} -> {}",
        a.document_id,
        a.target_class,
        c.sum_of_scores,
        c.output_delta,
        c.relative_gap,
        path.display()
    );
    if c.relative_gap > 0.05 && c.output_delta.abs() > 1e-3 {
        warn!("completeness gap is large; consider more steps");
    }
    Ok(())
}

pub fn curves(cfg: &PipelineConfig, split_name: Option<String>) -> Result<()> {
    let split_name = split_name.unwrap_or_else(|| cfg.evaluation.split.clone());
    let t = taxonomy(cfg)?;
    let model = load_model(cfg, &t)?;
    let split = weaklabel::read_dataset(&t, &cfg.paths.dataset_dir)?;
    let examples = select_split(&split, &split_name)?;
    let probs = probabilities(&model, examples)?;
    let truths: Vec<&[bool]> = examples.iter().map(|e| e.label.bits()).collect();
    let thresholds = default_thresholds();
    let mut scopes = vec![EvalScope::whole(&t)];
    for code in t.codes() {
        scopes.push(EvalScope::single(&t, code)?);
    }
    let curves = scopes
        .iter()
        .map(|s| Ok((s.name(), pr_sweep(&t, s, &probs, &truths, &thresholds)?)))
        .collect::<Result<Vec<_>>>()?;
    let path = cfg
        .paths
        .report_dir
        .join(format!("pr_curves_{split_name}.csv"));
    let w = create(&path)?;
    write_pr_csv(&curves, w)?;
    println!(
        "{} curves x {} thresholds -> {}",
        curves.len(),
        thresholds.len(),
        path.display()
    );
    Ok(())
}

fn read_optional(path: &Path) -> Result<Option<String>> {
    match fs::read_to_string(path) {
        Ok(s) => Ok(Some(s)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(Error::io(format!("reading {}", path.display()), e)),
    }
}

pub fn report(cfg: &PipelineConfig) -> Result<()> {
    let mut out = String::from("# Pipeline summary\n\n");
    let mut found = 0;

    out.push_str("## Dataset\n\n");
    let dataset = read_optional(&cfg.paths.dataset_dir.join(DATASET_REPORT_JSON))?;
    match dataset {
        Some(json) => {
            found += 1;
            let r: LabelingReport = serde_json::from_str(&json)?;
            let _ = writeln!(
                out,
                "{} records read, {} filtered, {} positives, {} negatives sampled.\n",
                r.records_read, r.filtered_out, r.positives, r.negatives_sampled
            );
            let _ = writeln!(out, "```\n{}```\n", r.to_text());
        }
        None => out.push_str("not built yet (run `build-dataset`)\n\n"),
    }

    out.push_str("## Training\n\n");
    match read_optional(&cfg.paths.checkpoint_dir.join(TRAIN_SUMMARY_FILE))? {
        Some(json) => {
            found += 1;
            let s: TrainSummary = serde_json::from_str(&json)?;
            let _ = writeln!(
                out,
                "{} head on {} features, {} parameters. Ran {} epochs; best epoch {} with validation loss {:.5} and subset error {:.4}.\n",
                s.model, s.features, s.parameters, s.epochs_run, s.best_epoch, s.best_val_loss, s.best_val_err
            );
        }
        None => out.push_str("no checkpoint yet (run `train`)\n\n"),
    }

    out.push_str("## Evaluation\n\n");
    let mut any_eval = false;
    for split in ["train", "validation", "test"] {
        let (_, json) = eval_paths(cfg, split);
        if let Some(text) = read_optional(&json)? {
            any_eval = true;
            let r: EvalReport = serde_json::from_str(&text)?;
            let _ = writeln!(out, "### {split} split ({} documents)\n", r.instances);
            out.push_str(
                "| scope | micro hP | micro hR | micro hF1 | macro hF1 | AUPRC | accuracy |\n",
            );
            out.push_str("|---|---|---|---|---|---|---|\n");
            for s in &r.scopes {
                let auprc = s.auprc.map_or("n/a".to_owned(), |v| format!("{v:.4}"));
                let _ = writeln!(
                    out,
                    "| {} | {:.4} | {:.4} | {:.4} | {:.4} | {auprc} | {:.4} |",
                    s.scope,
                    s.micro_avg.hp,
                    s.micro_avg.hr,
                    s.micro_avg.hf1,
                    s.macro_avg.hf1,
                    s.accuracy
                );
            }
            out.push('\n');
        }
    }
    if any_eval {
        found += 1;
    } else {
        out.push_str("no evaluation yet (run `evaluate`)\n");
    }

    if found == 0 {
        return Err(Error::Dataset(
            "no pipeline artifacts found; run build-dataset first".into(),
        ));
    }
    let path = cfg.paths.report_dir.join("summary.md");
    write_file(&path, &out)?;
    println!("summary -> {}", path.display());
    Ok(())
}
