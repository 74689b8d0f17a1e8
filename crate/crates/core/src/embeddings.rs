//! The explicit model: read a label off the post-selected sentence qubit,
//! score it with cross-entropy, and train the shared word parameters with
//! SPSA.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::circuit::{
    bind, compile_diagram, symbol_name, word_param_count, AnsatzConfig, Circuit, CircuitError,
    ParameterMap,
};
use crate::dataset::LabeledSentence;
use crate::pregroup::{GrammarError, Lexicon};
use crate::seeds::derive_seed;
use crate::simulator::{Backend, SimError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbeddingError {
    #[error("prediction failed for `{sentence}`: {source}")]
    PredictionFailed { sentence: String, source: SimError },
    #[error("training set is empty")]
    EmptyDataset,
    #[error("sentence circuit must have exactly one sentence qubit, found {0}")]
    NotSingleQubitSentence(usize),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error("embedding file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io error: {0}")]
    Io(String),
}

/// Word parameters shared by every sentence that contains the word.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    pub params: ParameterMap,
    pub rng_seed: u64,
}

impl EmbeddingStore {
    /// Every symbol the compiler can emit for the lexicon, drawn uniformly
    /// from [0, 2π).
    pub fn random(lexicon: &Lexicon, seed: u64) -> Self {
        let mut params = ParameterMap::new();
        for e in lexicon.entries() {
            for k in 0..word_param_count(e.arity()) {
                params.insert(symbol_name(&e.word, k), 0.0);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> = (0..params.len())
            .map(|_| rng.gen_range(0.0..2.0 * PI))
            .collect();
        params.set_from_slice(&values);
        Self {
            params,
            rng_seed: seed,
        }
    }

    /// `symbol<TAB>radians` lines under a header identifying the lexicon
    /// and ansatz.
    pub fn to_text(&self, lexicon_hash: u64, ansatz: &AnsatzConfig) -> String {
        let mut out = format!(
            "# lexicon_hash={lexicon_hash:016x} {ansatz} seed={}\n",
            self.rng_seed
        );
        for (name, v) in self.params.iter() {
            out.push_str(&format!("{name}\t{v:?}\n"));
        }
        out
    }

    /// Parses the text form and returns the store with the header's lexicon hash.
    pub fn parse(text: &str) -> Result<(Self, u64), EmbeddingError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(EmbeddingError::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let field = |key: &str| {
            header
                .trim_start_matches('#')
                .split_whitespace()
                .find_map(|kv| kv.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
        };
        let hash = field("lexicon_hash")
            .and_then(|h| u64::from_str_radix(h, 16).ok())
            .ok_or(EmbeddingError::Parse {
                line: 1,
                msg: "header lacks lexicon_hash".into(),
            })?;
        for (key, want) in [("q_n", "1"), ("q_s", "1"), ("layers", "1")] {
            if field(key) != Some(want) {
                return Err(EmbeddingError::Parse {
                    line: 1,
                    msg: format!("header field {key} must be {want}"),
                });
            }
        }
        let rng_seed = field("seed").and_then(|s| s.parse().ok()).unwrap_or(0);
        let mut params = ParameterMap::new();
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let (name, value) = line.split_once('\t').ok_or(EmbeddingError::Parse {
                line: idx + 1,
                msg: "expected `symbol<TAB>radians`".into(),
            })?;
            let value: f64 = value.trim().parse().map_err(|_| EmbeddingError::Parse {
                line: idx + 1,
                msg: format!("bad angle `{value}`"),
            })?;
            params.insert(name, value);
        }
        Ok((Self { params, rng_seed }, hash))
    }

    pub fn load(path: &Path) -> Result<(Self, u64), EmbeddingError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EmbeddingError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// Compiled symbolic circuits of a dataset, with labels.
#[derive(Debug, Clone)]
pub struct LabeledCircuits {
    pub names: Vec<String>,
    pub circuits: Vec<Circuit>,
    pub labels: Vec<u8>,
}

impl LabeledCircuits {
    pub fn compile(
        data: &[LabeledSentence],
        lexicon: &Lexicon,
        ansatz: &AnsatzConfig,
    ) -> Result<Self, EmbeddingError> {
        let mut circuits = Vec::with_capacity(data.len());
        for s in data {
            let c = compile_diagram(&s.parse(lexicon)?, ansatz)?;
            if c.sentence_qubits().len() != 1 {
                return Err(EmbeddingError::NotSingleQubitSentence(
                    c.sentence_qubits().len(),
                ));
            }
            circuits.push(c);
        }
        Ok(Self {
            names: data.iter().map(LabeledSentence::text).collect(),
            circuits,
            labels: data.iter().map(|s| s.label).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.circuits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.circuits.is_empty()
    }
}

/// `Pr[sentence qubit = 1 | post-selection]`, clamped to `[eps, 1 - eps]`.
///
/// On a shot backend a run that keeps no shots predicts 0.5: with success
/// rates near 1e-3 this happens routinely during training.
pub fn predict_explicit(
    circuit: &Circuit,
    params: &ParameterMap,
    backend: &Backend,
    seed: u64,
    eps: f64,
) -> Result<f64, EmbeddingError> {
    let [s] = circuit.sentence_qubits() else {
        return Err(EmbeddingError::NotSingleQubitSentence(
            circuit.sentence_qubits().len(),
        ));
    };
    let bound = bind(circuit, params)?;
    let p = match backend.run(&bound, seed) {
        Err(SimError::NoShotsKept) => Ok(0.5),
        other => other.and_then(|est| est.marginal_one(*s)),
    }
    .map_err(|source| EmbeddingError::PredictionFailed {
        sentence: format!("{}-qubit circuit", bound.n_qubits()),
        source,
    })?;
    Ok(p.clamp(eps, 1.0 - eps))
}

/// Binary cross-entropy of one prediction.
pub fn cross_entropy(label: u8, p: f64) -> f64 {
    if label == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Predictions for every circuit. Shot seeds depend on `(seed, index)`
/// only, so results do not depend on evaluation order.
pub fn predict_all(
    data: &LabeledCircuits,
    params: &ParameterMap,
    backend: &Backend,
    seed: u64,
    eps: f64,
) -> Result<Vec<f64>, EmbeddingError> {
    data.circuits
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            predict_explicit(c, params, backend, derive_seed(seed, &[i as u64]), eps).map_err(|e| {
                match e {
                    EmbeddingError::PredictionFailed { source, .. } => {
                        EmbeddingError::PredictionFailed {
                            sentence: data.names[i].clone(),
                            source,
                        }
                    }
                    other => other,
                }
            })
        })
        .collect()
}

/// Mean cross-entropy over the dataset.
pub fn loss(
    data: &LabeledCircuits,
    params: &ParameterMap,
    backend: &Backend,
    seed: u64,
    eps: f64,
) -> Result<f64, EmbeddingError> {
    let preds = predict_all(data, params, backend, seed, eps)?;
    Ok(mean_loss(&data.labels, &preds))
}

fn mean_loss(labels: &[u8], preds: &[f64]) -> f64 {
    labels
        .iter()
        .zip(preds)
        .map(|(&y, &p)| cross_entropy(y, p))
        .sum::<f64>()
        / labels.len() as f64
}

/// Fraction of predictions on the right side of 0.5; exactly 0.5 counts
/// as class 1.
pub fn accuracy_of(labels: &[u8], preds: &[f64]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let correct = labels
        .iter()
        .zip(preds)
        .filter(|(&y, &p)| u8::from(p >= 0.5) == y)
        .count();
    correct as f64 / labels.len() as f64
}

pub fn evaluate_accuracy(
    data: &LabeledCircuits,
    params: &ParameterMap,
    backend: &Backend,
    seed: u64,
    eps: f64,
) -> Result<f64, EmbeddingError> {
    let preds = predict_all(data, params, backend, seed, eps)?;
    Ok(accuracy_of(&data.labels, &preds))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub shots: u64,
    pub spsa_a: f64,
    pub spsa_c: f64,
    pub spsa_big_a: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub eps: f64,
}

impl TrainConfig {
    pub fn with_epochs(epochs: usize) -> Self {
        Self {
            epochs,
            spsa_big_a: 0.1 * epochs as f64,
            ..Self::default()
        }
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            shots: 8192,
            spsa_a: 5.0,
            spsa_c: 0.3,
            spsa_big_a: 10.0,
            alpha: 0.602,
            gamma: 0.101,
            eps: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub train_acc: f64,
    pub test_acc: Option<f64>,
}

/// SPSA over the parameters the training circuits use; the remaining
/// lexicon parameters keep their initial values. Records one row for the
/// initial parameters and one per epoch.
pub fn train_spsa(
    train: &LabeledCircuits,
    test: Option<&LabeledCircuits>,
    cfg: &TrainConfig,
    init: EmbeddingStore,
    backend: &Backend,
) -> Result<(EmbeddingStore, Vec<EpochRecord>), EmbeddingError> {
    if train.is_empty() {
        return Err(EmbeddingError::EmptyDataset);
    }
    let mut store = init;
    let used: std::collections::BTreeSet<String> = train
        .circuits
        .iter()
        .flat_map(|c| c.free_symbols())
        .collect();
    let symbols: Vec<String> = used.into_iter().collect();
    for s in &symbols {
        store.params.get(s)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(store.rng_seed, &[0x5b5a]));
    let mut theta: Vec<f64> = symbols
        .iter()
        .map(|s| store.params.get(s))
        .collect::<Result<_, _>>()?;
    let base = store.rng_seed;

    let with_theta = |params: &mut ParameterMap, values: &[f64]| {
        for (s, v) in symbols.iter().zip(values) {
            params.insert(s.clone(), *v);
        }
    };
    let record = |epoch: usize, params: &ParameterMap| -> Result<EpochRecord, EmbeddingError> {
        let preds = predict_all(
            train,
            params,
            backend,
            derive_seed(base, &[epoch as u64, 0]),
            cfg.eps,
        )?;
        let test_acc = match test {
            Some(t) => Some(evaluate_accuracy(
                t,
                params,
                backend,
                derive_seed(base, &[epoch as u64, 3]),
                cfg.eps,
            )?),
            None => None,
        };
        Ok(EpochRecord {
            epoch,
            loss: mean_loss(&train.labels, &preds),
            train_acc: accuracy_of(&train.labels, &preds),
            test_acc,
        })
    };

    let mut history = vec![record(0, &store.params)?];
    let mut probe = store.params.clone();
    for k in 0..cfg.epochs {
        let ak = cfg.spsa_a / (k as f64 + 1.0 + cfg.spsa_big_a).powf(cfg.alpha);
        let ck = cfg.spsa_c / (k as f64 + 1.0).powf(cfg.gamma);
        let delta: Vec<f64> = (0..theta.len())
            .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
            .collect();
        let plus: Vec<f64> = theta.iter().zip(&delta).map(|(t, d)| t + ck * d).collect();
        let minus: Vec<f64> = theta.iter().zip(&delta).map(|(t, d)| t - ck * d).collect();
        with_theta(&mut probe, &plus);
        let l_plus = loss(
            train,
            &probe,
            backend,
            derive_seed(base, &[k as u64 + 1, 1]),
            cfg.eps,
        )?;
        with_theta(&mut probe, &minus);
        let l_minus = loss(
            train,
            &probe,
            backend,
            derive_seed(base, &[k as u64 + 1, 2]),
            cfg.eps,
        )?;
        let g = (l_plus - l_minus) / (2.0 * ck);
        for (t, d) in theta.iter_mut().zip(&delta) {
            *t -= ak * g * d;
        }
        with_theta(&mut store.params, &theta);
        history.push(record(k + 1, &store.params)?);
    }
    Ok((store, history))
}
