mod common;

use std::path::PathBuf;

use common::{chain_setup, samples, tiny_model};
use patclass::attribution::{
    integrated_gradients, AttributionConfig, HtmlRenderer, OutputFunction, ReportRenderer,
};
use patclass::neural::{train, Checkpoint, HeadRegistry, LossConfig, Model, TrainConfig, PAD};
use patclass::synthetic::chain_taxonomy;
use patclass::Taxonomy;

fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_owned).collect()
}

fn cfg(class: &str, steps: usize, output: OutputFunction) -> AttributionConfig {
    AttributionConfig {
        steps,
        target_class: class.into(),
        output,
    }
}

/// Every ReLU stays active along the path, so the logit is affine in the
/// pooled embedding.
fn affine_model() -> Model {
    let t = Taxonomy::default_scheme();
    let mut m = tiny_model(&t, "sbnn", 21);
    let names = m.param_names();
    for (name, p) in names.iter().zip(m.params_mut()) {
        if name == "fc1.bias" {
            p.fill(50.0);
        }
    }
    m
}

#[test]
fn affine_model_is_exactly_complete() {
    let m = affine_model();
    let tokens = toks("w1 w4 w4 w7 w9 zz");
    let a = integrated_gradients(
        &m,
        "d",
        &tokens,
        &cfg("Y02G10/20", 7, OutputFunction::Logit),
        0.5,
    )
    .unwrap();
    let c = a.completeness;
    assert!((c.sum_of_scores - c.output_delta).abs() <= 1e-9, "{c:?}");
    assert!(c.relative_gap <= 1e-9);
    // Closed form: score_t = x_t · ∇G / n with a constant gradient.
    let enc = m.encoder().unwrap();
    let ids = enc.encode(&tokens);
    let pooled = enc.pool(&ids);
    let eps = 1e-6;
    let grad: Vec<f64> = (0..pooled.len())
        .map(|i| {
            let f = |delta: f64| {
                let mut p = pooled.clone();
                p[i] += delta;
                m.head.forward(&enc.proj.forward(&p)).logits[3]
            };
            (f(eps) - f(-eps)) / (2.0 * eps)
        })
        .collect();
    for (t, &id) in a.tokens.iter().zip(&ids) {
        let expect: f64 = enc
            .row(id)
            .iter()
            .zip(&grad)
            .map(|(x, g)| x * g)
            .sum::<f64>()
            / ids.len() as f64;
        assert!(
            (t.score - expect).abs() < 1e-8,
            "{}: {} vs {expect}",
            t.token,
            t.score
        );
    }
}

#[test]
fn zero_rows_and_padding_score_zero() {
    let mut m = affine_model();
    if let patclass::neural::Features::Toy(enc) = &mut m.features {
        let id = enc.vocab.id("w2");
        let e = enc.embedding_dim;
        enc.embedding[id * e..(id + 1) * e].fill(0.0);
    }
    let a = integrated_gradients(
        &m,
        "d",
        &toks("w2 w3 w2"),
        &cfg("Y02G", 16, OutputFunction::Probability),
        0.5,
    )
    .unwrap();
    assert_eq!(a.tokens[0].score, 0.0);
    assert_eq!(a.tokens[2].score, 0.0);
    assert_ne!(a.tokens[1].score, 0.0);

    let pad = m.encoder().unwrap().vocab.tokens()[PAD].clone();
    let a = integrated_gradients(
        &m,
        "d",
        &[pad.clone(), pad],
        &cfg("Y02G", 16, OutputFunction::Probability),
        0.5,
    )
    .unwrap();
    assert!(a.tokens.iter().all(|t| t.score == 0.0));
    assert_eq!(a.completeness.output_delta, 0.0);
}

#[test]
fn rejects_unknown_class_and_zero_steps() {
    let m = affine_model();
    assert!(integrated_gradients(
        &m,
        "d",
        &toks("w1"),
        &cfg("Y99", 8, OutputFunction::Probability),
        0.5
    )
    .is_err());
    assert!(integrated_gradients(
        &m,
        "d",
        &toks("w1"),
        &cfg("Y02G", 0, OutputFunction::Probability),
        0.5
    )
    .is_err());
}

fn trained_chain_model() -> (Model, Vec<Vec<String>>) {
    let (_, model, train_ex, val_ex) = chain_setup("sbhnn", 1);
    let tr = samples(&model, &train_ex);
    let va = samples(&model, &val_ex);
    let c = TrainConfig {
        learning_rate: 1e-3,
        batch_size: 16,
        max_epochs: 30,
        patience: 30,
        seed: 1,
        ..Default::default()
    };
    let out = train(model, &tr, &va, &c, &LossConfig::uniform(2), |_| {}).unwrap();
    (
        out.model,
        val_ex.into_iter().map(|e| e.text_tokens).collect(),
    )
}

#[test]
fn trained_model_completeness_and_stability() {
    let (m, docs) = trained_chain_model();
    let mut checked = 0;
    for tokens in &docs {
        for class in ["A", "A/1"] {
            let gaps: Vec<f64> = [16, 32, 64, 128]
                .iter()
                .map(|&steps| {
                    integrated_gradients(
                        &m,
                        "d",
                        tokens,
                        &cfg(class, steps, OutputFunction::Probability),
                        0.5,
                    )
                    .unwrap()
                    .completeness
                    .relative_gap
                })
                .collect();
            let a64 = integrated_gradients(
                &m,
                "d",
                tokens,
                &cfg(class, 64, OutputFunction::Probability),
                0.5,
            )
            .unwrap();
            let a128 = integrated_gradients(
                &m,
                "d",
                tokens,
                &cfg(class, 128, OutputFunction::Probability),
                0.5,
            )
            .unwrap();
            // A relative gap is meaningless when the output barely moves.
            if a128.completeness.output_delta.abs() < 0.05 {
                continue;
            }
            checked += 1;
            assert!(gaps[3] <= 0.02, "{class} {tokens:?}: {gaps:?}");
            assert!(gaps[3] <= gaps[0] + 1e-3, "{gaps:?}");
            let max = a128
                .tokens
                .iter()
                .map(|t| t.score.abs())
                .fold(0.0, f64::max);
            for (x, y) in a64.tokens.iter().zip(&a128.tokens) {
                if y.score.abs() > 0.05 * max {
                    assert_eq!(x.score.signum(), y.score.signum(), "{}", y.token);
                }
            }
        }
    }
    assert!(
        checked >= 40,
        "only {checked} documents with a measurable output change"
    );
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

#[test]
fn html_report_matches_golden_file() {
    let t = chain_taxonomy();
    let ck_path = fixture("chain_checkpoint.json");
    let golden = fixture("chain_attribution.html");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        let (m, _) = trained_chain_model();
        std::fs::create_dir_all(ck_path.parent().unwrap()).unwrap();
        Checkpoint::from_model(&m).save(&ck_path).unwrap();
    }
    let m = Checkpoint::load(&ck_path)
        .unwrap()
        .into_model(&t, &HeadRegistry::builtin(), None)
        .unwrap();
    let tokens = toks("river amber bolt glass apex brass <b>unknown</b>");
    let a = integrated_gradients(
        &m,
        "C0042",
        &tokens,
        &cfg("A/1", 128, OutputFunction::Probability),
        0.5,
    )
    .unwrap();
    let html = HtmlRenderer.render(&a).unwrap();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&golden, &html).unwrap();
    }
    assert_eq!(html, std::fs::read_to_string(&golden).unwrap());
    assert!(html.contains("&lt;b&gt;unknown&lt;/b&gt;"));
}
