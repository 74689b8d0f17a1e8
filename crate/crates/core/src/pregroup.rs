//! Pregroup types, a typed lexicon and DisCoCat string diagrams.
//!
//! A sentence is grammatical when the concatenation of its word types
//! reduces to the sentence type `s`. Reductions are the cups `x · x^r → 1`
//! and `x^l · x → 1`, placed by adjacent cancellation (bracket matching).

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrammarError {
    #[error("unknown word `{0}`")]
    UnknownWord(String),
    #[error("sentence does not reduce to the sentence type (surviving wires: {0})")]
    NoReduction(String),
    #[error("invalid lexicon word `{0}`: must be non-empty, lowercase, without whitespace")]
    InvalidWord(String),
    #[error("duplicate lexicon word `{0}`")]
    DuplicateWord(String),
    #[error("lexicon line {line}: {msg}")]
    LexiconParse { line: usize, msg: String },
    #[error("io error reading lexicon: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TypeKind {
    Noun,
    Sentence,
}

/// A basic type with its adjoint order: -1 is the left adjoint, +1 the right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasicType {
    pub kind: TypeKind,
    pub adjoint_order: i8,
}

impl BasicType {
    pub const fn new(kind: TypeKind, adjoint_order: i8) -> Self {
        Self {
            kind,
            adjoint_order,
        }
    }

    pub const fn n() -> Self {
        Self::new(TypeKind::Noun, 0)
    }

    pub const fn s() -> Self {
        Self::new(TypeKind::Sentence, 0)
    }

    pub const fn left(self) -> Self {
        Self::new(self.kind, self.adjoint_order - 1)
    }

    pub const fn right(self) -> Self {
        Self::new(self.kind, self.adjoint_order + 1)
    }

    /// True when `self · other` contracts to the unit: `x^l · x` or `x · x^r`.
    pub fn cancels_with(self, other: BasicType) -> bool {
        self.kind == other.kind && self.adjoint_order + 1 == other.adjoint_order
    }

    pub fn is_sentence(self) -> bool {
        self.kind == TypeKind::Sentence && self.adjoint_order == 0
    }
}

impl fmt::Display for BasicType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let base = match self.kind {
            TypeKind::Noun => "n",
            TypeKind::Sentence => "s",
        };
        match self.adjoint_order {
            0 => write!(f, "{base}"),
            k if k < 0 => write!(f, "{base}{}", "^l".repeat((-k) as usize)),
            k => write!(f, "{base}{}", "^r".repeat(k as usize)),
        }
    }
}

/// Ordered product of basic types; the empty product is the monoidal unit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct PregroupType {
    pub factors: Vec<BasicType>,
}

impl PregroupType {
    pub fn unit() -> Self {
        Self::default()
    }

    pub fn new(factors: Vec<BasicType>) -> Self {
        Self { factors }
    }

    pub fn concat(&self, other: &PregroupType) -> PregroupType {
        let mut factors = self.factors.clone();
        factors.extend_from_slice(&other.factors);
        PregroupType { factors }
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }
}

impl fmt::Display for PregroupType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self.factors.iter().map(|t| t.to_string()).collect();
        write!(f, "{}", parts.join("·"))
    }
}

/// Lexical categories of the task grammar.
///
/// `Sentence` is a bare `s`-typed word. It never appears in lexicon files
/// and exists for building one-box sentences in tests and sanity checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Noun,
    Adjective,
    TransitiveVerb,
    Sentence,
}

impl Category {
    pub fn pregroup_type(self) -> PregroupType {
        let n = BasicType::n();
        let s = BasicType::s();
        match self {
            Category::Noun => PregroupType::new(vec![n]),
            Category::Adjective => PregroupType::new(vec![n, n.left()]),
            Category::TransitiveVerb => PregroupType::new(vec![n.right(), s, n.left()]),
            Category::Sentence => PregroupType::new(vec![s]),
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Category::Noun => "noun",
            Category::Adjective => "adj",
            Category::TransitiveVerb => "tverb",
            Category::Sentence => "s",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Category> {
        match tag {
            "noun" => Some(Category::Noun),
            "adj" => Some(Category::Adjective),
            "tverb" => Some(Category::TransitiveVerb),
            _ => None,
        }
    }
}

/// Topic tag carried by lexicon words for dataset generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Topic {
    Neutral,
    Food,
    Tech,
}

impl Topic {
    pub fn tag(self) -> &'static str {
        match self {
            Topic::Neutral => "neutral",
            Topic::Food => "food",
            Topic::Tech => "tech",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Topic> {
        match tag {
            "neutral" => Some(Topic::Neutral),
            "food" => Some(Topic::Food),
            "tech" => Some(Topic::Tech),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LexiconEntry {
    pub word: String,
    pub category: Category,
    pub topic: Topic,
}

impl LexiconEntry {
    pub fn new(word: &str, category: Category) -> Result<Self, GrammarError> {
        Self::with_topic(word, category, Topic::Neutral)
    }

    pub fn with_topic(word: &str, category: Category, topic: Topic) -> Result<Self, GrammarError> {
        let valid = !word.is_empty()
            && !word.chars().any(char::is_whitespace)
            && word.chars().all(|c| !c.is_uppercase());
        if !valid {
            return Err(GrammarError::InvalidWord(word.to_string()));
        }
        Ok(Self {
            word: word.to_string(),
            category,
            topic,
        })
    }

    pub fn pregroup_type(&self) -> PregroupType {
        self.category.pregroup_type()
    }

    /// Number of wires (qubits under one qubit per type) this word occupies.
    pub fn arity(&self) -> usize {
        self.pregroup_type().len()
    }
}

/// A word list with unique entries.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Lexicon {
    entries: Vec<LexiconEntry>,
}

impl Lexicon {
    pub fn new(entries: Vec<LexiconEntry>) -> Result<Self, GrammarError> {
        let mut seen = BTreeSet::new();
        for e in &entries {
            if !seen.insert(e.word.as_str()) {
                return Err(GrammarError::DuplicateWord(e.word.clone()));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn get(&self, word: &str) -> Option<&LexiconEntry> {
        self.entries.iter().find(|e| e.word == word)
    }

    /// Parses `word<TAB>category[<TAB>topic]` lines; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self, GrammarError> {
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() < 2 || cols.len() > 3 {
                return Err(GrammarError::LexiconParse {
                    line: line_no,
                    msg: format!("expected `word<TAB>category[<TAB>topic]`, got `{line}`"),
                });
            }
            let category =
                Category::from_tag(cols[1].trim()).ok_or_else(|| GrammarError::LexiconParse {
                    line: line_no,
                    msg: format!(
                        "unknown category `{}` (expected noun, adj or tverb)",
                        cols[1]
                    ),
                })?;
            let topic = match cols.get(2) {
                Some(t) => Topic::from_tag(t.trim()).ok_or_else(|| GrammarError::LexiconParse {
                    line: line_no,
                    msg: format!("unknown topic `{t}` (expected food, tech or neutral)"),
                })?,
                None => Topic::Neutral,
            };
            entries.push(LexiconEntry::with_topic(cols[0], category, topic)?);
        }
        Lexicon::new(entries)
    }

    pub fn load(path: &Path) -> Result<Self, GrammarError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GrammarError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&format!(
                "{}\t{}\t{}\n",
                e.word,
                e.category.tag(),
                e.topic.tag()
            ));
        }
        out
    }

    /// Hash of the canonical text form; recorded in embedding files.
    pub fn fingerprint(&self) -> u64 {
        crate::seeds::fingerprint(self.to_text().as_bytes())
    }
}

/// Words, their wires and the cups joining them.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Diagram {
    pub words: Vec<LexiconEntry>,
    pub wires: Vec<BasicType>,
    /// Sorted by left endpoint.
    pub cups: Vec<(usize, usize)>,
    pub open_wires: Vec<usize>,
}

impl Diagram {
    /// Wire index ranges `[start, end)` owned by each word.
    pub fn word_spans(&self) -> Vec<(usize, usize)> {
        let mut spans = Vec::with_capacity(self.words.len());
        let mut start = 0;
        for w in &self.words {
            let end = start + w.arity();
            spans.push((start, end));
            start = end;
        }
        spans
    }

    pub fn tokens(&self) -> Vec<&str> {
        self.words.iter().map(|w| w.word.as_str()).collect()
    }
}

impl fmt::Display for Diagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.tokens().join(" "))
    }
}

/// Builds the diagram of `tokens`, placing cups by adjacent cancellation.
pub fn parse_sentence<S: AsRef<str>>(
    tokens: &[S],
    lexicon: &Lexicon,
) -> Result<Diagram, GrammarError> {
    let mut words = Vec::with_capacity(tokens.len());
    for tok in tokens {
        let tok = tok.as_ref();
        let entry = lexicon
            .get(tok)
            .ok_or_else(|| GrammarError::UnknownWord(tok.to_string()))?;
        words.push(entry.clone());
    }
    let diagram = reduce(words);
    if !reduces_to_sentence(&diagram) {
        let survivors: Vec<String> = diagram
            .open_wires
            .iter()
            .map(|&i| diagram.wires[i].to_string())
            .collect();
        return Err(GrammarError::NoReduction(if survivors.is_empty() {
            "none".to_string()
        } else {
            survivors.join("·")
        }));
    }
    Ok(diagram)
}

fn reduce(words: Vec<LexiconEntry>) -> Diagram {
    let wires: Vec<BasicType> = words
        .iter()
        .flat_map(|w| w.pregroup_type().factors)
        .collect();
    let mut stack: Vec<usize> = Vec::new();
    let mut cups = Vec::new();
    for (i, &t) in wires.iter().enumerate() {
        match stack.last() {
            Some(&top) if wires[top].cancels_with(t) => {
                stack.pop();
                cups.push((top, i));
            }
            _ => stack.push(i),
        }
    }
    cups.sort_unstable();
    Diagram {
        words,
        wires,
        cups,
        open_wires: stack,
    }
}

pub fn reduces_to_sentence(d: &Diagram) -> bool {
    matches!(d.open_wires.as_slice(), [w] if d.wires[*w].is_sentence())
}
