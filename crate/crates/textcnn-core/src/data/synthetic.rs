//! Seeded synthetic corpora and random embeddings, for tests and runs where
//! no real data is at hand.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Dataset, EmbeddingTable, Sentence, Split};
use crate::Result;

/// Range of each component of a random word vector.
pub const RANDOM_EMBEDDING_SCALE: f64 = 0.25;

/// Vectors drawn from U(±0.25) for every distinct word, in sorted word order.
pub fn random_embeddings<'a, I>(words: I, dim: usize, seed: u64) -> Result<EmbeddingTable>
where
    I: IntoIterator<Item = &'a str>,
{
    let sorted: BTreeSet<&str> = words.into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = EmbeddingTable::new(dim);
    let mut v = alloc::vec![0.0; dim];
    for w in sorted {
        for x in v.iter_mut() {
            *x = rng.gen_range(-RANDOM_EMBEDDING_SCALE..RANDOM_EMBEDDING_SCALE);
        }
        table.insert(w, &v)?;
    }
    Ok(table)
}

/// Random embeddings for every token of a dataset.
pub fn dataset_embeddings(dataset: &Dataset, dim: usize, seed: u64) -> Result<EmbeddingTable> {
    random_embeddings(
        dataset.sentences.iter().flat_map(|s| s.tokens.iter().map(String::as_str)),
        dim,
        seed,
    )
}

const FILLER: [&str; 40] = [
    "the", "a", "of", "and", "to", "in", "is", "it", "that", "was", "for", "on", "are", "with", "as", "at", "be",
    "this", "have", "from", "or", "one", "had", "by", "word", "but", "not", "what", "all", "were", "we", "when",
    "your", "can", "said", "there", "use", "an", "each", "which",
];

const MARKERS: [&str; 2] = ["zorp", "blick"];

/// Two classes told apart by a single marker token placed anywhere in an
/// otherwise random filler sentence. The last `test_fraction` of each
/// class goes to the test split.
pub fn marker_corpus(sentences: usize, test_fraction: f64, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_class = sentences / 2;
    let test_per_class = libm::round(per_class as f64 * test_fraction) as usize;
    let mut out = Vec::with_capacity(sentences);
    for i in 0..per_class * 2 {
        let label = i % 2;
        let index_in_class = i / 2;
        let len = rng.gen_range(4..=10);
        let mut tokens: Vec<String> = (0..len).map(|_| FILLER.choose(&mut rng).unwrap().to_string()).collect();
        let at = rng.gen_range(0..=len);
        tokens.insert(at, MARKERS[label].to_string());
        let split = if index_in_class >= per_class - test_per_class {
            Split::Test
        } else {
            Split::Train
        };
        out.push(Sentence {
            id: i,
            tokens,
            label,
            split,
        });
    }
    Dataset::new("synthetic-marker", MARKERS.iter().map(|s| s.to_string()).collect(), out)
}

// Question templates. `{x}` draws from the slot table below.
const TEMPLATES: [&[&str]; 6] = [
    // ABBR
    &[
        "what does {abbr} stand for",
        "what is the abbreviation for {thing}",
        "what is the full form of {abbr}",
        "what does the acronym {abbr} mean",
    ],
    // DESC
    &[
        "why do {plural} {verb}",
        "how does a {thing} work",
        "what is the definition of {concept}",
        "what does {concept} mean",
        "how do you {verb} a {thing}",
        "what is {concept}",
    ],
    // ENTY
    &[
        "what {kind} is the {thing} made of",
        "what is the best {kind} for {plural}",
        "name a {kind} that {plural} {verb}",
        "what {kind} do {plural} eat",
        "what is the name of the {thing} in {place}",
    ],
    // HUM
    &[
        "who {past} the {thing}",
        "who was the first {role} of {place}",
        "what {role} {past} the {thing}",
        "who is the {role} of the {thing}",
        "name the {role} who {past} {concept}",
    ],
    // LOC
    &[
        "where is the {thing}",
        "what country has the most {plural}",
        "where do {plural} {verb}",
        "what city is the {thing} in",
        "where can i find {plural} in {place}",
    ],
    // NUM
    &[
        "how many {plural} are in {place}",
        "when was the {thing} {past}",
        "how much does a {thing} cost",
        "what year did the {role} {verb}",
        "how long is the {thing}",
        "how far is {place} from {place}",
    ],
];

const CLASS_WEIGHTS: [u32; 6] = [2, 21, 23, 22, 15, 17];

fn slot(name: &str) -> &'static [&'static str] {
    match name {
        "abbr" => &["nasa", "fbi", "cnn", "ibm", "laser", "radar", "scuba", "aids", "nato", "unesco"],
        "thing" => &[
            "bridge", "tower", "river", "telephone", "engine", "painting", "computer", "ship", "canal", "statue",
            "temple", "railway", "castle", "camera", "novel", "vaccine",
        ],
        "plural" => &[
            "cats", "dogs", "birds", "people", "stars", "trees", "whales", "ants", "bees", "students", "doctors",
            "islands",
        ],
        "verb" => &["sleep", "fly", "grow", "swim", "build", "travel", "sing", "migrate", "glow", "hunt"],
        "concept" => &[
            "democracy", "gravity", "inflation", "photosynthesis", "entropy", "irony", "jazz", "karma", "osmosis",
            "evolution",
        ],
        "kind" => &["color", "animal", "food", "sport", "instrument", "material", "plant", "language", "drink"],
        "role" => &["president", "king", "queen", "author", "inventor", "captain", "founder", "painter", "mayor"],
        "past" => &["invented", "discovered", "built", "wrote", "founded", "painted", "designed", "named"],
        "place" => &[
            "france", "china", "texas", "africa", "japan", "brazil", "egypt", "canada", "india", "peru", "spain",
            "kenya",
        ],
        _ => unreachable!("unknown slot"),
    }
}

/// Six-class question corpus shaped like TREC: class-specific templates over
/// shared slot vocabularies, with class frequencies roughly matching TREC's.
/// `label_noise` is the probability that a sentence carries a uniformly
/// drawn wrong label.
pub fn question_corpus(train: usize, test: usize, label_noise: f64, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total_weight: u32 = CLASS_WEIGHTS.iter().sum();
    let mut sentences = Vec::with_capacity(train + test);
    for id in 0..train + test {
        let mut pick = rng.gen_range(0..total_weight);
        let mut class = 0;
        while pick >= CLASS_WEIGHTS[class] {
            pick -= CLASS_WEIGHTS[class];
            class += 1;
        }
        let template = TEMPLATES[class].choose(&mut rng).unwrap();
        let mut tokens = Vec::new();
        for part in template.split(' ') {
            match part.strip_prefix('{').and_then(|p| p.strip_suffix('}')) {
                Some(name) => tokens.push(slot(name).choose(&mut rng).unwrap().to_string()),
                None => tokens.push(part.to_string()),
            }
        }
        let label = if rng.gen_bool(label_noise) {
            (class + rng.gen_range(1..6)) % 6
        } else {
            class
        };
        sentences.push(Sentence {
            id,
            tokens,
            label,
            split: if id < train { Split::Train } else { Split::Test },
        });
    }
    Dataset::new(
        "synthetic-questions",
        super::TREC_CLASSES.iter().map(|s| s.to_string()).collect(),
        sentences,
    )
}
