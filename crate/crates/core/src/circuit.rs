//! Gate-level circuits with symbolic angles and post-selection annotations,
//! and the IQP compilation of sentence diagrams.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::pregroup::{reduces_to_sentence, Diagram};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error(
        "unsupported ansatz: q_n={q_n}, q_s={q_s}, layers={layers} (only 1, 1, 1 is supported)"
    )]
    UnsupportedAnsatz {
        q_n: usize,
        q_s: usize,
        layers: usize,
    },
    #[error("diagram `{0}` does not reduce to a sentence")]
    DiagramNotSentence(String),
    #[error("missing value for symbol `{0}`")]
    MissingSymbol(String),
    #[error("qubit {qubit} post-selected on both {a} and {b}")]
    PostSelectConflict { qubit: usize, a: u8, b: u8 },
    #[error("wire map is not injective or has the wrong length")]
    WireMapNotInjective,
    #[error("invalid gate {kind:?} on {targets:?}: {msg}")]
    InvalidGate {
        kind: GateKind,
        targets: Vec<usize>,
        msg: String,
    },
    #[error("invalid circuit: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    H,
    RX,
    RZ,
    CRZ,
    CX,
    CSWAP,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::H | GateKind::RX | GateKind::RZ => 1,
            GateKind::CRZ | GateKind::CX => 2,
            GateKind::CSWAP => 3,
        }
    }

    pub fn is_rotation(self) -> bool {
        matches!(self, GateKind::RX | GateKind::RZ | GateKind::CRZ)
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::H => "H",
            GateKind::RX => "RX",
            GateKind::RZ => "RZ",
            GateKind::CRZ => "CRZ",
            GateKind::CX => "CX",
            GateKind::CSWAP => "CSWAP",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Angle {
    /// A named parameter, optionally negated (adjoint of a symbolic rotation).
    Symbol {
        name: String,
        negated: bool,
    },
    Constant(f64),
}

impl Angle {
    pub fn symbol(name: impl Into<String>) -> Self {
        Angle::Symbol {
            name: name.into(),
            negated: false,
        }
    }

    pub fn negate(&self) -> Self {
        match self {
            Angle::Symbol { name, negated } => Angle::Symbol {
                name: name.clone(),
                negated: !negated,
            },
            Angle::Constant(v) => Angle::Constant(-v),
        }
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Angle::Symbol { name, negated } => {
                write!(f, "{}{name}", if *negated { "-" } else { "" })
            }
            Angle::Constant(v) => write!(f, "{v:?}"),
        }
    }
}

/// One gate. For controlled gates the controls come first in `targets`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    kind: GateKind,
    targets: Vec<usize>,
    angle: Option<Angle>,
}

impl Gate {
    pub fn new(
        kind: GateKind,
        targets: Vec<usize>,
        angle: Option<Angle>,
    ) -> Result<Self, CircuitError> {
        let bad = |msg: &str| CircuitError::InvalidGate {
            kind,
            targets: targets.clone(),
            msg: msg.to_string(),
        };
        if targets.len() != kind.arity() {
            return Err(bad("wrong number of targets"));
        }
        let distinct: BTreeSet<_> = targets.iter().collect();
        if distinct.len() != targets.len() {
            return Err(bad("targets must be distinct"));
        }
        if kind.is_rotation() != angle.is_some() {
            return Err(bad("angle presence does not match gate kind"));
        }
        Ok(Self {
            kind,
            targets,
            angle,
        })
    }

    pub fn h(q: usize) -> Self {
        Self::new(GateKind::H, vec![q], None).expect("valid H")
    }

    pub fn rx(q: usize, angle: Angle) -> Self {
        Self::new(GateKind::RX, vec![q], Some(angle)).expect("valid RX")
    }

    pub fn rz(q: usize, angle: Angle) -> Self {
        Self::new(GateKind::RZ, vec![q], Some(angle)).expect("valid RZ")
    }

    pub fn crz(control: usize, target: usize, angle: Angle) -> Result<Self, CircuitError> {
        Self::new(GateKind::CRZ, vec![control, target], Some(angle))
    }

    pub fn cx(control: usize, target: usize) -> Result<Self, CircuitError> {
        Self::new(GateKind::CX, vec![control, target], None)
    }

    pub fn cswap(control: usize, a: usize, b: usize) -> Result<Self, CircuitError> {
        Self::new(GateKind::CSWAP, vec![control, a, b], None)
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn angle(&self) -> Option<&Angle> {
        self.angle.as_ref()
    }

    /// Numeric angle, or `None` for unbound symbols and angle-free gates.
    pub fn constant_angle(&self) -> Option<f64> {
        match self.angle {
            Some(Angle::Constant(v)) => Some(v),
            _ => None,
        }
    }

    fn symbol_name(&self) -> Option<&str> {
        match &self.angle {
            Some(Angle::Symbol { name, .. }) => Some(name),
            _ => None,
        }
    }

    fn remapped(&self, map: impl Fn(usize) -> usize) -> Gate {
        Gate {
            kind: self.kind,
            targets: self.targets.iter().map(|&q| map(q)).collect(),
            angle: self.angle.clone(),
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let qs: Vec<String> = self.targets.iter().map(|q| q.to_string()).collect();
        write!(f, "{} {}", self.kind.name(), qs.join(","))?;
        if let Some(a) = &self.angle {
            write!(f, " {a}")?;
        }
        Ok(())
    }
}

/// Symbol name to angle in radians. Lookups of absent symbols are errors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParameterMap {
    values: BTreeMap<String, f64>,
}

impl ParameterMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: f64) {
        self.values.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Result<f64, CircuitError> {
        self.values
            .get(name)
            .copied()
            .ok_or_else(|| CircuitError::MissingSymbol(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.values.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Entries in symbol order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Hash over names and exact bit patterns of the values.
    pub fn fingerprint(&self) -> u64 {
        let text: String = self
            .values
            .iter()
            .map(|(k, v)| format!("{k}\t{:016x}\n", v.to_bits()))
            .collect();
        crate::seeds::fingerprint(text.as_bytes())
    }

    pub fn symbols(&self) -> Vec<String> {
        self.values.keys().cloned().collect()
    }

    /// Values in symbol order.
    pub fn to_vec(&self) -> Vec<f64> {
        self.values.values().copied().collect()
    }

    /// Overwrites values in symbol order.
    pub fn set_from_slice(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.values.len(), "parameter vector length");
        for (slot, v) in self.values.values_mut().zip(values) {
            *slot = *v;
        }
    }
}

impl FromIterator<(String, f64)> for ParameterMap {
    fn from_iter<T: IntoIterator<Item = (String, f64)>>(iter: T) -> Self {
        Self {
            values: iter.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnsatzConfig {
    q_n: usize,
    q_s: usize,
    layers: usize,
}

impl AnsatzConfig {
    pub fn new(q_n: usize, q_s: usize, layers: usize) -> Result<Self, CircuitError> {
        if (q_n, q_s, layers) != (1, 1, 1) {
            return Err(CircuitError::UnsupportedAnsatz { q_n, q_s, layers });
        }
        Ok(Self { q_n, q_s, layers })
    }

    pub fn q_n(&self) -> usize {
        self.q_n
    }

    pub fn q_s(&self) -> usize {
        self.q_s
    }

    pub fn layers(&self) -> usize {
        self.layers
    }
}

impl Default for AnsatzConfig {
    fn default() -> Self {
        Self {
            q_n: 1,
            q_s: 1,
            layers: 1,
        }
    }
}

impl fmt::Display for AnsatzConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "q_n={} q_s={} layers={}",
            self.q_n, self.q_s, self.layers
        )
    }
}

/// Gate list on `n_qubits` wires, all starting in |0>.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
    post_select: BTreeMap<usize, u8>,
    sentence_qubits: Vec<usize>,
}

impl Circuit {
    pub fn new(
        n_qubits: usize,
        gates: Vec<Gate>,
        post_select: BTreeMap<usize, u8>,
        sentence_qubits: Vec<usize>,
    ) -> Result<Self, CircuitError> {
        if n_qubits == 0 {
            return Err(CircuitError::Invalid(
                "circuit needs at least one qubit".into(),
            ));
        }
        for g in &gates {
            if let Some(&q) = g.targets.iter().find(|&&q| q >= n_qubits) {
                return Err(CircuitError::Invalid(format!(
                    "gate `{g}` touches qubit {q} >= {n_qubits}"
                )));
            }
        }
        for (&q, &bit) in &post_select {
            if q >= n_qubits || bit > 1 {
                return Err(CircuitError::Invalid(format!(
                    "bad post-selection {q}={bit}"
                )));
            }
        }
        let mut seen = BTreeSet::new();
        for &q in &sentence_qubits {
            if q >= n_qubits || !seen.insert(q) {
                return Err(CircuitError::Invalid(format!("bad sentence qubit {q}")));
            }
            if post_select.contains_key(&q) {
                return Err(CircuitError::Invalid(format!(
                    "sentence qubit {q} is also post-selected"
                )));
            }
        }
        Ok(Self {
            n_qubits,
            gates,
            post_select,
            sentence_qubits,
        })
    }

    /// An empty circuit on `n_qubits` wires.
    pub fn identity(n_qubits: usize) -> Result<Self, CircuitError> {
        Self::new(n_qubits, Vec::new(), BTreeMap::new(), Vec::new())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn post_select(&self) -> &BTreeMap<usize, u8> {
        &self.post_select
    }

    pub fn sentence_qubits(&self) -> &[usize] {
        &self.sentence_qubits
    }

    pub fn free_symbols(&self) -> BTreeSet<String> {
        self.gates
            .iter()
            .filter_map(|g| g.symbol_name().map(str::to_string))
            .collect()
    }

    pub fn is_bound(&self) -> bool {
        self.gates.iter().all(|g| g.symbol_name().is_none())
    }

    /// Returns a copy with extra gates appended.
    pub fn with_gates(&self, extra: impl IntoIterator<Item = Gate>) -> Result<Self, CircuitError> {
        let mut gates = self.gates.clone();
        gates.extend(extra);
        Circuit::new(
            self.n_qubits,
            gates,
            self.post_select.clone(),
            self.sentence_qubits.clone(),
        )
    }

    /// Returns a copy with the given measurement annotations.
    pub fn with_measurement(
        &self,
        post_select: BTreeMap<usize, u8>,
        sentence_qubits: Vec<usize>,
    ) -> Result<Self, CircuitError> {
        Circuit::new(
            self.n_qubits,
            self.gates.clone(),
            post_select,
            sentence_qubits,
        )
    }

    /// Deterministic text dump: one gate per line, then post-selections,
    /// then the sentence qubits.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for g in &self.gates {
            out.push_str(&g.to_string());
            out.push('\n');
        }
        for (q, b) in &self.post_select {
            out.push_str(&format!("POSTSELECT {q}={b}\n"));
        }
        out.push_str("SENTENCE");
        for q in &self.sentence_qubits {
            out.push_str(&format!(" {q}"));
        }
        out.push('\n');
        out
    }
}

/// Replaces every symbolic angle with its value from `params`.
pub fn bind(c: &Circuit, params: &ParameterMap) -> Result<Circuit, CircuitError> {
    let gates = c
        .gates
        .iter()
        .map(|g| {
            let angle = match &g.angle {
                Some(Angle::Symbol { name, negated }) => {
                    let v = params.get(name)?;
                    Some(Angle::Constant(if *negated { -v } else { v }))
                }
                other => other.clone(),
            };
            Ok(Gate {
                kind: g.kind,
                targets: g.targets.clone(),
                angle,
            })
        })
        .collect::<Result<Vec<_>, CircuitError>>()?;
    Ok(Circuit { gates, ..c.clone() })
}

/// Reversed gate list with rotations negated. Measurement annotations are
/// dropped: post-selection has no adjoint.
pub fn adjoint(c: &Circuit) -> Circuit {
    let gates = c
        .gates
        .iter()
        .rev()
        .map(|g| Gate {
            kind: g.kind,
            targets: g.targets.clone(),
            angle: g.angle.as_ref().map(Angle::negate),
        })
        .collect();
    Circuit {
        n_qubits: c.n_qubits,
        gates,
        post_select: BTreeMap::new(),
        sentence_qubits: Vec::new(),
    }
}

fn merge_post_select(
    into: &mut BTreeMap<usize, u8>,
    from: impl IntoIterator<Item = (usize, u8)>,
) -> Result<(), CircuitError> {
    for (q, bit) in from {
        match into.insert(q, bit) {
            Some(prev) if prev != bit => {
                return Err(CircuitError::PostSelectConflict {
                    qubit: q,
                    a: prev,
                    b: bit,
                })
            }
            _ => {}
        }
    }
    Ok(())
}

/// Appends `b` after `a`, sending qubit `q` of `b` to `wire_map[q]`.
/// Targets at or beyond `a.n_qubits()` extend the register.
pub fn compose(a: &Circuit, b: &Circuit, wire_map: &[usize]) -> Result<Circuit, CircuitError> {
    if wire_map.len() != b.n_qubits {
        return Err(CircuitError::WireMapNotInjective);
    }
    let distinct: BTreeSet<_> = wire_map.iter().collect();
    if distinct.len() != wire_map.len() {
        return Err(CircuitError::WireMapNotInjective);
    }
    let n_qubits = wire_map
        .iter()
        .map(|&q| q + 1)
        .max()
        .unwrap_or(0)
        .max(a.n_qubits);
    let mut gates = a.gates.clone();
    gates.extend(b.gates.iter().map(|g| g.remapped(|q| wire_map[q])));
    let mut post_select = a.post_select.clone();
    merge_post_select(
        &mut post_select,
        b.post_select.iter().map(|(&q, &bit)| (wire_map[q], bit)),
    )?;
    let mut sentence_qubits = a.sentence_qubits.clone();
    for &q in &b.sentence_qubits {
        let q = wire_map[q];
        if !sentence_qubits.contains(&q) {
            sentence_qubits.push(q);
        }
    }
    Circuit::new(n_qubits, gates, post_select, sentence_qubits)
}

/// Tensor product: `b` runs on fresh qubits placed after `a`'s.
pub fn parallel(a: &Circuit, b: &Circuit) -> Circuit {
    let offset = a.n_qubits;
    let mut gates = a.gates.clone();
    gates.extend(b.gates.iter().map(|g| g.remapped(|q| q + offset)));
    let mut post_select = a.post_select.clone();
    post_select.extend(b.post_select.iter().map(|(&q, &bit)| (q + offset, bit)));
    let mut sentence_qubits = a.sentence_qubits.clone();
    sentence_qubits.extend(b.sentence_qubits.iter().map(|q| q + offset));
    Circuit {
        n_qubits: a.n_qubits + b.n_qubits,
        gates,
        post_select,
        sentence_qubits,
    }
}

pub fn symbol_name(word: &str, index: usize) -> String {
    format!("{word}__{index}")
}

/// Number of parameters a word of the given wire count receives.
pub fn word_param_count(arity: usize) -> usize {
    if arity == 1 {
        3
    } else {
        arity - 1
    }
}

/// Compiles a sentence diagram into a symbolic IQP circuit, one qubit per wire.
///
/// Word boxes are emitted left to right and each cup is lowered to a Bell
/// effect (CX, H, post-select both qubits on 0) as soon as both of its
/// words have been placed. The early cups keep the number of
/// simultaneously active qubits small.
pub fn compile_diagram(d: &Diagram, cfg: &AnsatzConfig) -> Result<Circuit, CircuitError> {
    AnsatzConfig::new(cfg.q_n, cfg.q_s, cfg.layers)?;
    if !reduces_to_sentence(d) {
        return Err(CircuitError::DiagramNotSentence(d.to_string()));
    }
    let mut gates = Vec::new();
    let mut post_select = BTreeMap::new();
    let mut pending: Vec<(usize, usize)> = d.cups.clone();
    for (word, (start, end)) in d.words.iter().zip(d.word_spans()) {
        let arity = end - start;
        if arity == 1 {
            gates.push(Gate::rx(start, Angle::symbol(symbol_name(&word.word, 0))));
            gates.push(Gate::rz(start, Angle::symbol(symbol_name(&word.word, 1))));
            gates.push(Gate::rx(start, Angle::symbol(symbol_name(&word.word, 2))));
        } else {
            for _layer in 0..cfg.layers {
                gates.extend((start..end).map(Gate::h));
                for (j, q) in (start..end - 1).enumerate() {
                    gates.push(Gate::crz(
                        q,
                        q + 1,
                        Angle::symbol(symbol_name(&word.word, j)),
                    )?);
                }
            }
        }
        let (ready, rest): (Vec<_>, Vec<_>) = pending.into_iter().partition(|&(_, r)| r < end);
        pending = rest;
        for (l, r) in ready {
            gates.push(Gate::cx(l, r)?);
            gates.push(Gate::h(l));
            post_select.insert(l, 0);
            post_select.insert(r, 0);
        }
    }
    Circuit::new(d.wires.len(), gates, post_select, d.open_wires.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pregroup::{parse_sentence, Category, Lexicon, LexiconEntry};

    fn lex() -> Lexicon {
        Lexicon::new(vec![
            LexiconEntry::new("man", Category::Noun).unwrap(),
            LexiconEntry::new("meal", Category::Noun).unwrap(),
            LexiconEntry::new("prepares", Category::TransitiveVerb).unwrap(),
            LexiconEntry::new("tasty", Category::Adjective).unwrap(),
            LexiconEntry::new("skillful", Category::Adjective).unwrap(),
            LexiconEntry::new("yes", Category::Sentence).unwrap(),
        ])
        .unwrap()
    }

    fn mpm() -> Circuit {
        let d = parse_sentence(&["man", "prepares", "meal"], &lex()).unwrap();
        compile_diagram(&d, &AnsatzConfig::default()).unwrap()
    }

    #[test]
    fn compile_transitive_sentence() {
        let c = mpm();
        assert_eq!(c.n_qubits(), 5);
        let expected: BTreeSet<String> = [
            "man__0",
            "man__1",
            "man__2",
            "prepares__0",
            "prepares__1",
            "meal__0",
            "meal__1",
            "meal__2",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        assert_eq!(c.free_symbols(), expected);
        let ps: Vec<(usize, u8)> = c.post_select().iter().map(|(&q, &b)| (q, b)).collect();
        assert_eq!(ps, vec![(0, 0), (1, 0), (3, 0), (4, 0)]);
        assert_eq!(c.sentence_qubits(), &[2]);
    }

    #[test]
    fn compile_dump_golden() {
        let golden = "\
RX 0 man__0
RZ 0 man__1
RX 0 man__2
H 1
H 2
H 3
CRZ 1,2 prepares__0
CRZ 2,3 prepares__1
CX 0,1
H 0
RX 4 meal__0
RZ 4 meal__1
RX 4 meal__2
CX 3,4
H 3
POSTSELECT 0=0
POSTSELECT 1=0
POSTSELECT 3=0
POSTSELECT 4=0
SENTENCE 2
";
        assert_eq!(mpm().dump(), golden);
    }

    #[test]
    fn compile_bare_sentence_word() {
        let d = parse_sentence(&["yes"], &lex()).unwrap();
        let c = compile_diagram(&d, &AnsatzConfig::default()).unwrap();
        assert_eq!(c.n_qubits(), 1);
        assert!(c.post_select().is_empty());
        assert_eq!(c.sentence_qubits(), &[0]);
        assert_eq!(c.gates().len(), 3);
    }

    #[test]
    fn compile_is_deterministic() {
        assert_eq!(mpm(), mpm());
        assert_eq!(mpm().dump(), mpm().dump());
    }

    #[test]
    fn compile_rejects_non_sentences_and_other_ansatze() {
        assert!(matches!(
            AnsatzConfig::new(2, 1, 1),
            Err(CircuitError::UnsupportedAnsatz { q_n: 2, .. })
        ));
        assert!(AnsatzConfig::new(1, 1, 2).is_err());
        let d = Diagram::default();
        assert!(matches!(
            compile_diagram(&d, &AnsatzConfig::default()),
            Err(CircuitError::DiagramNotSentence(_))
        ));
    }

    #[test]
    fn parameter_count_counts_shared_words_once() {
        let d = parse_sentence(&["skillful", "man", "prepares", "tasty", "meal"], &lex()).unwrap();
        let c = compile_diagram(&d, &AnsatzConfig::default()).unwrap();
        // 2 nouns * 3 + 2 adjectives * 1 + 1 verb * 2
        assert_eq!(c.free_symbols().len(), 10);
        assert_eq!(c.post_select().len(), 8);
        assert_eq!(c.sentence_qubits(), &[4]);
        let d = parse_sentence(&["man", "prepares", "man"], &lex()).unwrap();
        let c = compile_diagram(&d, &AnsatzConfig::default()).unwrap();
        assert_eq!(c.free_symbols().len(), 5);
    }

    #[test]
    fn bind_replaces_symbols() {
        let c = Circuit::new(
            1,
            vec![Gate::rx(0, Angle::symbol("a"))],
            BTreeMap::new(),
            vec![0],
        )
        .unwrap();
        let mut p = ParameterMap::new();
        p.insert("a", 0.0);
        let b = bind(&c, &p).unwrap();
        assert_eq!(b.gates()[0].angle(), Some(&Angle::Constant(0.0)));
        assert!(b.free_symbols().is_empty());
        assert!(b.is_bound());
        assert_eq!(
            bind(&c, &ParameterMap::new()).unwrap_err(),
            CircuitError::MissingSymbol("a".into())
        );
    }

    #[test]
    fn adjoint_negates_and_reverses() {
        let c = Circuit::new(
            2,
            vec![
                Gate::rx(0, Angle::Constant(0.3)),
                Gate::h(1),
                Gate::crz(0, 1, Angle::symbol("t")).unwrap(),
            ],
            BTreeMap::from([(1, 0)]),
            vec![0],
        )
        .unwrap();
        let a = adjoint(&c);
        assert_eq!(a.dump(), "CRZ 0,1 -t\nH 1\nRX 0 -0.3\nSENTENCE\n");
        assert!(a.post_select().is_empty());
        assert!(a.sentence_qubits().is_empty());
        assert_eq!(adjoint(&a).gates(), c.gates());
    }

    #[test]
    fn parallel_and_compose() {
        let c1 = Circuit::new(1, vec![Gate::h(0)], BTreeMap::new(), vec![0]).unwrap();
        let c2 = Circuit::new(
            1,
            vec![Gate::rx(0, Angle::Constant(1.0))],
            BTreeMap::new(),
            vec![0],
        )
        .unwrap();
        let p = parallel(&c1, &c2);
        assert_eq!(p.n_qubits(), 2);
        assert_eq!(p.gates()[1].targets(), &[1]);
        assert_eq!(p.sentence_qubits(), &[0, 1]);

        let id = Circuit::identity(1).unwrap();
        assert_eq!(compose(&c1, &id, &[0]).unwrap(), c1);

        let a = Circuit::new(2, vec![], BTreeMap::from([(1, 0)]), vec![0]).unwrap();
        let b = Circuit::new(1, vec![], BTreeMap::from([(0, 1)]), vec![]).unwrap();
        assert_eq!(
            compose(&a, &b, &[1]).unwrap_err(),
            CircuitError::PostSelectConflict {
                qubit: 1,
                a: 0,
                b: 1
            }
        );
        let two = Circuit::identity(2).unwrap();
        assert_eq!(
            compose(&a, &two, &[1, 1]).unwrap_err(),
            CircuitError::WireMapNotInjective
        );
        assert_eq!(
            compose(&a, &two, &[1]).unwrap_err(),
            CircuitError::WireMapNotInjective
        );
        let ext = compose(&a, &c2, &[3]).unwrap();
        assert_eq!(ext.n_qubits(), 4);
        assert_eq!(ext.sentence_qubits(), &[0, 3]);
    }

    #[test]
    fn gate_validation() {
        assert!(Gate::new(GateKind::H, vec![0, 1], None).is_err());
        assert!(Gate::cx(1, 1).is_err());
        assert!(Gate::new(GateKind::RX, vec![0], None).is_err());
        assert!(Gate::new(GateKind::H, vec![0], Some(Angle::Constant(1.0))).is_err());
        assert!(Circuit::new(1, vec![Gate::h(1)], BTreeMap::new(), vec![]).is_err());
        assert!(Circuit::new(2, vec![], BTreeMap::from([(0, 0)]), vec![0]).is_err());
        assert!(Circuit::new(0, vec![], BTreeMap::new(), vec![]).is_err());
    }
}
