//! The food-versus-technology meaning classification dataset.
//!
//! Sentences are instantiated from four templates over a topic-tagged
//! lexicon. The subject phrase uses topic-neutral words, the object phrase
//! uses words of a single topic, and the verb is neutral or of that topic.
//! The label is the topic of the non-neutral words: food = 0,
//! technology = 1.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::pregroup::{
    parse_sentence, Category, Diagram, GrammarError, Lexicon, LexiconEntry, Topic,
};

/// Reconstructed 17-word vocabulary: three agents, three nouns per topic,
/// one adjective per topic plus a neutral one, and five verbs.
pub const DEFAULT_LEXICON: &str = "\
# word\tcategory\ttopic
man\tnoun\tneutral
woman\tnoun\tneutral
person\tnoun\tneutral
dinner\tnoun\tfood
meal\tnoun\tfood
sauce\tnoun\tfood
program\tnoun\ttech
application\tnoun\ttech
software\tnoun\ttech
skillful\tadj\tneutral
tasty\tadj\tfood
useful\tadj\ttech
prepares\ttverb\tneutral
cooks\ttverb\tfood
bakes\ttverb\tfood
debugs\ttverb\ttech
runs\ttverb\ttech
";

pub fn default_lexicon() -> Lexicon {
    Lexicon::parse(DEFAULT_LEXICON).expect("default lexicon is well formed")
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatasetError {
    #[error(
        "InsufficientCombinations: requested {requested} sentences but only {available} exist"
    )]
    InsufficientCombinations { requested: usize, available: usize },
    #[error("dataset too small to split: {0}")]
    TooSmall(String),
    #[error("dataset line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error("io error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Template {
    /// N TV N
    NounVerbNoun,
    /// ADJ N TV N
    AdjNounVerbNoun,
    /// N TV ADJ N
    NounVerbAdjNoun,
    /// ADJ N TV ADJ N
    AdjNounVerbAdjNoun,
}

impl Template {
    pub const ALL: [Template; 4] = [
        Template::NounVerbNoun,
        Template::AdjNounVerbNoun,
        Template::NounVerbAdjNoun,
        Template::AdjNounVerbAdjNoun,
    ];

    fn subject_adjective(self) -> bool {
        matches!(
            self,
            Template::AdjNounVerbNoun | Template::AdjNounVerbAdjNoun
        )
    }

    fn object_adjective(self) -> bool {
        matches!(
            self,
            Template::NounVerbAdjNoun | Template::AdjNounVerbAdjNoun
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LabeledSentence {
    pub tokens: Vec<String>,
    /// 0 = food, 1 = technology.
    pub label: u8,
}

impl LabeledSentence {
    pub fn new(sentence: &str, label: u8) -> Self {
        Self {
            tokens: sentence.split_whitespace().map(str::to_string).collect(),
            label,
        }
    }

    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }

    pub fn parse(&self, lexicon: &Lexicon) -> Result<Diagram, GrammarError> {
        parse_sentence(&self.tokens, lexicon)
    }
}

impl fmt::Display for LabeledSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}", self.label, self.text())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitDataset {
    pub train: Vec<LabeledSentence>,
    pub test: Vec<LabeledSentence>,
}

fn words(
    lexicon: &Lexicon,
    category: Category,
    pred: impl Fn(Topic) -> bool,
) -> Vec<&LexiconEntry> {
    lexicon
        .entries()
        .iter()
        .filter(|e| e.category == category && pred(e.topic))
        .collect()
}

fn topic_label(topic: Topic) -> Option<u8> {
    match topic {
        Topic::Food => Some(0),
        Topic::Tech => Some(1),
        Topic::Neutral => None,
    }
}

/// Every topic-consistent instantiation of `templates`, in a fixed order.
pub fn enumerate(lexicon: &Lexicon, templates: &[Template]) -> Vec<LabeledSentence> {
    let neutral = |t: Topic| t == Topic::Neutral;
    let subjects = words(lexicon, Category::Noun, neutral);
    let subject_adjs = words(lexicon, Category::Adjective, neutral);
    let mut out = Vec::new();
    for &template in templates {
        let subject_phrases: Vec<Vec<&str>> = if template.subject_adjective() {
            subject_adjs
                .iter()
                .flat_map(|a| {
                    subjects
                        .iter()
                        .map(move |n| vec![a.word.as_str(), n.word.as_str()])
                })
                .collect()
        } else {
            subjects.iter().map(|n| vec![n.word.as_str()]).collect()
        };
        for topic in [Topic::Food, Topic::Tech] {
            let label = topic_label(topic).expect("topical");
            let verbs = words(lexicon, Category::TransitiveVerb, |t| {
                t == topic || t == Topic::Neutral
            });
            let objects = words(lexicon, Category::Noun, |t| t == topic);
            let object_phrases: Vec<Vec<&str>> = if template.object_adjective() {
                words(lexicon, Category::Adjective, |t| t == topic)
                    .iter()
                    .flat_map(|a| {
                        objects
                            .iter()
                            .map(move |n| vec![a.word.as_str(), n.word.as_str()])
                    })
                    .collect()
            } else {
                objects.iter().map(|n| vec![n.word.as_str()]).collect()
            };
            for subject in &subject_phrases {
                for verb in &verbs {
                    for object in &object_phrases {
                        let mut tokens: Vec<String> =
                            subject.iter().map(|w| w.to_string()).collect();
                        tokens.push(verb.word.clone());
                        tokens.extend(object.iter().map(|w| w.to_string()));
                        out.push(LabeledSentence { tokens, label });
                    }
                }
            }
        }
    }
    out
}

/// Draws `n` distinct sentences, half from each class (the odd one out
/// goes to a seeded coin flip), uniformly within a class.
pub fn generate(
    lexicon: &Lexicon,
    templates: &[Template],
    n: usize,
    seed: u64,
) -> Result<Vec<LabeledSentence>, DatasetError> {
    let pool: BTreeSet<LabeledSentence> = enumerate(lexicon, templates).into_iter().collect();
    let mut by_class: [Vec<LabeledSentence>; 2] = [Vec::new(), Vec::new()];
    for s in pool {
        by_class[s.label as usize].push(s);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let extra = usize::from(n % 2 == 1 && rng.gen::<bool>());
    let quota = [n / 2 + (n % 2) - extra, n / 2 + extra];
    let available = by_class[0].len() + by_class[1].len();
    if quota[0] > by_class[0].len() || quota[1] > by_class[1].len() {
        return Err(DatasetError::InsufficientCombinations {
            requested: n,
            available,
        });
    }
    let mut out = Vec::with_capacity(n);
    for (class, want) in by_class.iter_mut().zip(quota) {
        class.shuffle(&mut rng);
        out.extend(class.drain(..want));
    }
    out.shuffle(&mut rng);
    Ok(out)
}

/// Stratified split. Each class sends `round(ratio * count)` sentences to
/// training, clamped so both sides keep at least one of every class.
/// Each side lists class 0 first, preserving input order within a class.
pub fn split(
    data: &[LabeledSentence],
    ratio: f64,
    seed: u64,
) -> Result<SplitDataset, DatasetError> {
    if data.len() < 4 {
        return Err(DatasetError::TooSmall(format!(
            "{} sentences, need at least 4",
            data.len()
        )));
    }
    if !(0.0..=1.0).contains(&ratio) {
        return Err(DatasetError::TooSmall(format!(
            "ratio {ratio} outside [0, 1]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for label in [0u8, 1u8] {
        let mut members: Vec<usize> = (0..data.len())
            .filter(|&i| data[i].label == label)
            .collect();
        if members.len() < 2 {
            return Err(DatasetError::TooSmall(format!(
                "class {label} has {} sentences, need at least 2",
                members.len()
            )));
        }
        let k = ((ratio * members.len() as f64).round() as usize).clamp(1, members.len() - 1);
        members.shuffle(&mut rng);
        let (tr, te) = members.split_at(k);
        let (mut tr, mut te) = (tr.to_vec(), te.to_vec());
        tr.sort_unstable();
        te.sort_unstable();
        train_idx.extend(tr);
        test_idx.extend(te);
    }
    Ok(SplitDataset {
        train: train_idx.into_iter().map(|i| data[i].clone()).collect(),
        test: test_idx.into_iter().map(|i| data[i].clone()).collect(),
    })
}

pub fn to_tsv(data: &[LabeledSentence]) -> String {
    data.iter().map(|s| format!("{s}\n")).collect()
}

/// Parses `label<TAB>sentence` lines and checks each sentence parses.
pub fn parse_tsv(text: &str, lexicon: &Lexicon) -> Result<Vec<LabeledSentence>, DatasetError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let raw = raw.trim_end_matches('\r');
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let (label, sentence) = raw.split_once('\t').ok_or_else(|| DatasetError::Parse {
            line,
            msg: "expected `label<TAB>sentence`".into(),
        })?;
        let label = match label.trim() {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(DatasetError::Parse {
                    line,
                    msg: format!("label `{other}` is not 0 or 1"),
                })
            }
        };
        let s = LabeledSentence::new(sentence, label);
        s.parse(lexicon).map_err(|e| DatasetError::Parse {
            line,
            msg: e.to_string(),
        })?;
        out.push(s);
    }
    Ok(out)
}

pub fn load_tsv(path: &Path, lexicon: &Lexicon) -> Result<Vec<LabeledSentence>, DatasetError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| DatasetError::Io(format!("{}: {e}", path.display())))?;
    parse_tsv(&text, lexicon)
}
