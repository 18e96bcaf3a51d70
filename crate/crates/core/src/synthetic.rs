//! Seeded generator for SST-2-shaped sentiment data.
//!
//! Sentences mix neutral nouns with sentiment-bearing adjectives, nouns,
//! verbs and adverbs, so removing any one word class leaves some signal.
//! Each cue agrees with the label with probability `cue_agreement`, and a
//! fraction `label_noise` of labels is flipped afterwards.

use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{save_split, split_dir, DatasetError, DatasetSplit, Manifest, Record, Split, Task};

const NEUTRAL_NOUNS: &[&str] = &[
    "film",
    "movie",
    "story",
    "plot",
    "script",
    "cast",
    "director",
    "performance",
    "drama",
    "thriller",
    "picture",
    "dialogue",
    "ending",
    "series",
];

struct Cues {
    adjectives: &'static [&'static str],
    nouns: &'static [&'static str],
    verbs: &'static [&'static str],
    adverbs: &'static [&'static str],
}

const POSITIVE: Cues = Cues {
    adjectives: &[
        "good",
        "great",
        "wonderful",
        "brilliant",
        "charming",
        "delightful",
        "engaging",
        "entertaining",
        "gorgeous",
        "funny",
        "clever",
        "fresh",
        "smart",
        "sweet",
        "warm",
    ],
    nouns: &["masterpiece", "gem", "triumph", "delight", "pleasure", "treat", "joy"],
    verbs: &["shines", "soars", "succeeds", "charms", "delivers"],
    adverbs: &["wonderfully", "beautifully", "genuinely", "truly"],
};

const NEGATIVE: Cues = Cues {
    adjectives: &[
        "awful",
        "bad",
        "boring",
        "dull",
        "tedious",
        "terrible",
        "horrible",
        "lifeless",
        "pointless",
        "predictable",
        "silly",
        "stupid",
        "clumsy",
        "messy",
        "bland",
    ],
    nouns: &["mess", "disaster", "failure", "mistake", "waste", "bore", "chore"],
    verbs: &["fails", "stumbles", "collapses", "drags", "disappoints"],
    adverbs: &["painfully", "hopelessly", "badly"],
};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSst2 {
    pub train_size: usize,
    pub dev_size: usize,
    pub cue_agreement: f64,
    pub label_noise: f64,
    pub seed: u64,
}

impl Default for SyntheticSst2 {
    fn default() -> Self {
        SyntheticSst2 { train_size: 2000, dev_size: 872, cue_agreement: 0.8, label_noise: 0.08, seed: 13 }
    }
}

impl SyntheticSst2 {
    fn sentence(&self, rng: &mut ChaCha8Rng, positive: bool) -> String {
        let cues = |rng: &mut ChaCha8Rng| {
            if rng.random_bool(self.cue_agreement) == positive {
                &POSITIVE
            } else {
                &NEGATIVE
            }
        };
        let pick = |rng: &mut ChaCha8Rng, words: &'static [&'static str]| *words.choose(rng).expect("non-empty");
        let n = pick(rng, NEUTRAL_NOUNS);
        let adj = {
            let side = cues(rng);
            pick(rng, side.adjectives)
        };
        let adj2 = {
            let side = cues(rng);
            pick(rng, side.adjectives)
        };
        let cue_n = {
            let side = cues(rng);
            pick(rng, side.nouns)
        };
        let v = {
            let side = cues(rng);
            pick(rng, side.verbs)
        };
        let adv = {
            let side = cues(rng);
            pick(rng, side.adverbs)
        };
        match rng.random_range(0..6) {
            0 => format!("the {n} {v} , and it is a {adv} {adj} {cue_n} ."),
            1 => format!("a {adj} {n} that {v} {adv} ."),
            2 => format!("{adv} {adj} , the {n} {v} as a {cue_n} ."),
            3 => format!("this {n} is {adj} and {adj2} ."),
            4 => format!("the {adj} {n} {v} , a {adj2} {cue_n} ."),
            _ => format!("an {adv} {adj} {cue_n} of a {n} ."),
        }
    }

    fn split(&self, split: Split, size: usize, seed: u64) -> DatasetSplit {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let records = (0..size)
            .map(|i| {
                let positive = rng.random_bool(0.5);
                let text = self.sentence(&mut rng, positive);
                let label = positive ^ rng.random_bool(self.label_noise);
                Record::new().with("idx", i as u64).with("sentence", text).with("label", label as u64)
            })
            .collect();
        DatasetSplit::new(Task::Sst2, split, records)
    }

    /// (train, dev) splits.
    pub fn generate(&self) -> (DatasetSplit, DatasetSplit) {
        (
            self.split(Split::Train, self.train_size, self.seed),
            self.split(Split::Dev, self.dev_size, self.seed.wrapping_add(1)),
        )
    }

    /// Writes `<root>/sst-2/train.jsonl` and `dev.jsonl` with manifests.
    pub fn write(&self, data_root: &Path) -> Result<(Manifest, Manifest), DatasetError> {
        let (train, dev) = self.generate();
        let dir = split_dir(data_root, Task::Sst2, None);
        Ok((save_split(&train, dir.join("train.jsonl"))?, save_split(&dev, dir.join("dev.jsonl"))?))
    }
}
