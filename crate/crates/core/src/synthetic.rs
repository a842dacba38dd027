//! Deterministic synthetic data: a green-plastics sample corpus for
//! end-to-end runs, and a linearly separable two-class chain for training
//! tests.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::RawPatent;
use crate::taxonomy::{ClassNode, LabelVector, Taxonomy};
use crate::weaklabel::LabeledExample;

struct Topic {
    /// Sentences that make the class queries fire when placed in a
    /// description.
    triggers: &'static [&'static str],
    /// Vocabulary typical of titles and abstracts on this topic.
    words: &'static [&'static str],
    weight: u32,
}

const TOPICS: &[Topic] = &[
    Topic {
        triggers: &[
            "The green plastic composition lowers the carbon footprint.",
            "Such green plastics are made with renewable energy.",
        ],
        words: &[
            "sustainable",
            "packaging",
            "film",
            "lowcarbon",
            "eco",
            "wrap",
        ],
        weight: 3,
    },
    Topic {
        triggers: &[
            "Plastic waste is collected from households.",
            "An optical unit sorts plastic flakes by polymer type.",
        ],
        words: &[
            "sorting",
            "conveyor",
            "optical",
            "bin",
            "flakes",
            "household",
        ],
        weight: 3,
    },
    Topic {
        triggers: &[
            "Used bottles are recycled into plastic granules and depolymerized to monomers.",
            "The method can recycle plastic scrap by depolymerization in a reactor.",
        ],
        words: &[
            "depolymerization",
            "monomer",
            "glycolysis",
            "reactor",
            "catalyst",
            "solvolysis",
        ],
        weight: 3,
    },
    Topic {
        triggers: &[
            "The plastic is recycled and then extruded into pellets.",
            "Shredded plastic recycled this way is melted and pelletized.",
        ],
        words: &[
            "extruder",
            "pellet",
            "melt",
            "granulate",
            "screw",
            "regrind",
        ],
        weight: 3,
    },
    Topic {
        triggers: &[
            "Feedstock recycling converts mixed plastic streams into oil.",
            "This feedstock recycling route accepts contaminated plastic.",
        ],
        words: &[
            "pyrolysis",
            "oil",
            "cracking",
            "naphtha",
            "syngas",
            "thermal",
        ],
        weight: 3,
    },
    Topic {
        triggers: &[
            "The tray is an alternative to plastic packaging.",
            "Molded pulp offers an alternative to plastics.",
        ],
        words: &["pulp", "cellulose", "fiber", "molded", "paperboard", "tray"],
        weight: 3,
    },
    Topic {
        triggers: &[
            "The bioplastic is made from corn starch.",
            "A biodegradable plastic film decomposes in soil.",
        ],
        words: &[
            "starch",
            "polylactic",
            "biodegradable",
            "fermentation",
            "pla",
            "corn",
        ],
        weight: 3,
    },
    Topic {
        triggers: &[
            "The vitrimer network can be reshaped when heated.",
            "A vitrimer binder allows the part to be reprocessed.",
        ],
        words: &[
            "vitrimer",
            "dynamic",
            "exchange",
            "reshaping",
            "reprocessable",
            "epoxy",
        ],
        weight: 3,
    },
];

/// Conventional-plastics topic: mentions plastic without firing any query.
const CONVENTIONAL: Topic = Topic {
    triggers: &[
        "The housing is injection molded from plastic.",
        "A plastic cover protects the circuit board.",
    ],
    words: &[
        "injection",
        "housing",
        "polypropylene",
        "resin",
        "mold",
        "cover",
    ],
    weight: 0,
};

const UNRELATED: Topic = Topic {
    triggers: &[
        "The controller monitors the battery voltage.",
        "A sensor measures the rotor speed.",
    ],
    words: &[
        "battery",
        "voltage",
        "circuit",
        "sensor",
        "rotor",
        "controller",
    ],
    weight: 0,
};

const FILLER: &[&str] = &[
    "method",
    "system",
    "apparatus",
    "device",
    "layer",
    "unit",
    "surface",
    "member",
    "portion",
    "assembly",
    "process",
    "composition",
    "improved",
    "efficient",
    "material",
    "structure",
];

const FILLER_SENTENCES: &[&str] = &[
    "The invention relates to an improved arrangement.",
    "Further embodiments are described below with reference to the drawings.",
    "A first member is attached to a second member.",
    "The figures show preferred embodiments only.",
    "Various modifications will be apparent to the skilled person.",
];

fn pick<'a, R: Rng>(rng: &mut R, items: &'a [&'a str]) -> &'a str {
    items.choose(rng).copied().expect("non-empty list")
}

fn sentence<R: Rng>(rng: &mut R, topic: &Topic, len: usize) -> String {
    let words: Vec<&str> = (0..len)
        .map(|i| {
            if i % 2 == 0 {
                pick(rng, topic.words)
            } else {
                pick(rng, FILLER)
            }
        })
        .collect();
    let mut s = words.join(" ");
    s[..1].make_ascii_uppercase();
    s.push('.');
    s
}

fn document<R: Rng>(rng: &mut R, id: String, topics: &[&Topic]) -> RawPatent {
    let main = topics[0];
    let mut title = format!(
        "{} {} {}",
        pick(rng, main.words),
        pick(rng, FILLER),
        pick(rng, main.words)
    );
    title[..1].make_ascii_uppercase();
    let abstract_text = topics
        .iter()
        .map(|t| {
            let len = rng.gen_range(6..10);
            sentence(rng, t, len)
        })
        .collect::<Vec<_>>()
        .join(" ");
    let mut description = vec![pick(rng, FILLER_SENTENCES).to_owned()];
    for t in topics {
        description.push(pick(rng, t.triggers).to_owned());
    }
    description.push(pick(rng, FILLER_SENTENCES).to_owned());
    RawPatent {
        id,
        language: "en".into(),
        title: Some(title),
        abstract_text: Some(abstract_text),
        description: Some(description.join(" ")),
    }
}

/// `n` English patents: roughly a third on green-plastics topics (some
/// covering two), the rest on conventional plastics or unrelated subjects.
/// Every 50th record is German and is dropped by the language filter.
pub fn sample_corpus(n: usize, seed: u64) -> Vec<RawPatent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total: u32 = TOPICS.iter().map(|t| t.weight).sum();
    (0..n)
        .map(|i| {
            let id = format!("SYN{:05}", i + 1);
            let roll: f64 = rng.gen();
            let mut doc = if roll < 0.33 {
                let mut x = rng.gen_range(0..total);
                let first = TOPICS
                    .iter()
                    .find(|t| {
                        let hit = x < t.weight;
                        x = x.saturating_sub(t.weight);
                        hit
                    })
                    .expect("weights cover the range");
                let mut topics = vec![first];
                if rng.gen_bool(0.2) {
                    topics.push(TOPICS.choose(&mut rng).expect("topics"));
                }
                document(&mut rng, id, &topics)
            } else if roll < 0.6 {
                document(&mut rng, id, &[&CONVENTIONAL])
            } else {
                document(&mut rng, id, &[&UNRELATED])
            };
            if (i + 1) % 50 == 0 {
                doc.language = "de".into();
            }
            doc
        })
        .collect()
}

/// JSON Lines text of [`sample_corpus`].
pub fn sample_corpus_jsonl(n: usize, seed: u64) -> String {
    sample_corpus(n, seed)
        .iter()
        .map(|d| serde_json::to_string(d).expect("serializable") + "\n")
        .collect()
}

/// Two classes, `A` with child `A/1`.
pub fn chain_taxonomy() -> Taxonomy {
    let node = |code: &str, parent: Option<&str>| ClassNode {
        code: code.into(),
        definition: String::new(),
        parent: parent.map(str::to_owned),
        query_source: String::new(),
        level: 0,
    };
    Taxonomy::from_nodes(vec![node("A", None), node("A/1", Some("A"))]).expect("valid chain")
}

const NEUTRAL: &[&str] = &[
    "river", "stone", "cloud", "table", "lamp", "chair", "glass", "garden", "window", "road",
];
const MARK_A: &[&str] = &["amber", "apex", "arc", "axis"];
const MARK_B: &[&str] = &["bolt", "brass", "bronze", "birch"];

/// Examples over [`chain_taxonomy`] in equal thirds labeled `[0,0]`,
/// `[1,0]` and `[1,1]`. Class `A` documents carry `MARK_A` words, `A/1`
/// documents also carry `MARK_B` words, so the labels are a linear function
/// of token counts.
pub fn separable_chain(n: usize, seed: u64) -> Vec<LabeledExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let kind = i % 3;
            let mut tokens: Vec<String> = (0..rng.gen_range(3..6))
                .map(|_| pick(&mut rng, NEUTRAL).to_owned())
                .collect();
            if kind >= 1 {
                tokens.extend((0..3).map(|_| pick(&mut rng, MARK_A).to_owned()));
            }
            if kind == 2 {
                tokens.extend((0..3).map(|_| pick(&mut rng, MARK_B).to_owned()));
            }
            tokens.shuffle(&mut rng);
            LabeledExample {
                id: format!("C{:04}", i + 1),
                text_tokens: tokens,
                label: LabelVector(vec![kind >= 1, kind == 2]),
            }
        })
        .collect()
}
