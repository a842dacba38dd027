#![allow(dead_code)]

use patclass::neural::{
    Encoded, EncoderConfig, Features, HeadRegistry, HeadSpec, Model, Sample, ToyEncoder, Vocab,
    Wiring,
};
use patclass::synthetic::{chain_taxonomy, separable_chain};
use patclass::weaklabel::LabeledExample;
use patclass::Taxonomy;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn words(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("w{i}")).collect()
}

/// Model over `taxonomy` with a vocabulary of `w0..w9`.
pub fn tiny_model(taxonomy: &Taxonomy, kind: &str, seed: u64) -> Model {
    tiny_model_with(taxonomy, kind, Wiring::Cumulative, seed)
}

pub fn tiny_model_with(taxonomy: &Taxonomy, kind: &str, wiring: Wiring, seed: u64) -> Model {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = Vocab::build([words(10)].iter(), 100);
    let cfg = EncoderConfig {
        vocab_size: 100,
        embedding_dim: 6,
        output_dim: 8,
        max_len: 16,
    };
    let enc = ToyEncoder::new(vocab, &cfg, &mut rng);
    let spec = HeadSpec {
        kind: kind.into(),
        hidden: 5,
        head_units: 4,
        wiring,
    };
    let head = HeadRegistry::builtin()
        .build(&spec, 8, taxonomy, &mut rng)
        .unwrap();
    let mut model = Model::new(taxonomy, Features::Toy(enc), head).unwrap();
    // Positive biases keep most ReLU units active so no group is checked
    // vacuously.
    let names = model.param_names();
    for (name, p) in names.iter().zip(model.params_mut()) {
        if name.ends_with("bias") {
            for x in p.iter_mut() {
                *x = rng.gen_range(0.05..0.5);
            }
        }
    }
    model
}

pub fn random_batch(model: &Model, taxonomy: &Taxonomy, n: usize, seed: u64) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = words(10);
    (0..n)
        .map(|_| {
            let tokens: Vec<String> = (0..rng.gen_range(2..7))
                .map(|_| vocab[rng.gen_range(0..vocab.len())].clone())
                .collect();
            let direct: Vec<usize> = (0..taxonomy.len()).filter(|_| rng.gen_bool(0.3)).collect();
            let labels = taxonomy.propagate_indices(direct).0;
            Sample {
                encoded: model.encode("x", &tokens).unwrap(),
                labels,
            }
        })
        .collect()
}

pub fn samples(model: &Model, examples: &[LabeledExample]) -> Vec<Sample> {
    examples
        .iter()
        .map(|e| Sample {
            encoded: model.encode(&e.id, &e.text_tokens).unwrap(),
            labels: e.label.0.clone(),
        })
        .collect()
}

pub fn ids(e: &Encoded) -> &[usize] {
    match e {
        Encoded::Ids(ids) => ids,
        Encoded::Vector(_) => panic!("toy encoder expected"),
    }
}

/// Chain taxonomy, a small toy model and train/validation examples of the
/// separable fixture.
pub fn chain_setup(
    kind: &str,
    seed: u64,
) -> (Taxonomy, Model, Vec<LabeledExample>, Vec<LabeledExample>) {
    let t = chain_taxonomy();
    let data = separable_chain(240, seed);
    let (train, val) = data.split_at(180);
    let vocab = Vocab::build(train.iter().map(|e| e.text_tokens.iter()), 1000);
    let cfg = EncoderConfig {
        vocab_size: 1000,
        embedding_dim: 16,
        output_dim: 16,
        max_len: 64,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let enc = ToyEncoder::new(vocab, &cfg, &mut rng);
    let spec = HeadSpec {
        kind: kind.into(),
        hidden: 16,
        head_units: 8,
        ..Default::default()
    };
    let head = HeadRegistry::builtin()
        .build(&spec, 16, &t, &mut rng)
        .unwrap();
    let model = Model::new(&t, Features::Toy(enc), head).unwrap();
    (t, model, train.to_vec(), val.to_vec())
}
