//! Quantum similarity kernels between sentences and Gram-matrix assembly.
//!
//! Two estimators of the state fidelity `|<phi_j|phi_i>|^2`:
//!
//! * transition amplitude: run `U_i` then `U_j^dagger` and read the
//!   probability that the shared sentence qubit returns to 0;
//! * SWAP test: prepare both sentences side by side, swap their sentence
//!   qubits under an ancilla control and read `2 Pr[ancilla = 0] - 1`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::circuit::{adjoint, bind, compose, parallel, Circuit, CircuitError, Gate, ParameterMap};
use crate::embeddings::LabeledCircuits;
use crate::seeds::derive_seed;
use crate::simulator::{Backend, SimError, StateVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("UnsupportedAnsatz: kernels need exactly one sentence qubit, found {0}")]
    UnsupportedAnsatz(usize),
    #[error("KernelEvalFailed({i}, {j}): {source}")]
    KernelEvalFailed {
        i: usize,
        j: usize,
        source: SimError,
    },
    #[error("{} Gram entries failed, first: {}", .0.len(), .0[0])]
    GramFailed(Vec<KernelError>),
    #[error("simulation failed: {0}")]
    Simulation(#[from] SimError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("label count {labels} does not match matrix dimension {dim}")]
    LabelMismatch { labels: usize, dim: usize },
    #[error("gram file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    Transition,
    Swap,
}

impl KernelKind {
    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Transition => "transition",
            KernelKind::Swap => "swap",
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "transition" => Ok(KernelKind::Transition),
            "swap" => Ok(KernelKind::Swap),
            other => Err(format!(
                "unknown kernel `{other}` (expected transition or swap)"
            )),
        }
    }
}

fn sentence_qubit(c: &Circuit) -> Result<usize, KernelError> {
    match c.sentence_qubits() {
        [s] => Ok(*s),
        other => Err(KernelError::UnsupportedAnsatz(other.len())),
    }
}

/// `U_i` followed by `U_j^dagger`. The sentence qubit of `j` lands on that
/// of `i`; every other qubit of `j` gets a fresh wire that is post-selected
/// on 0 at the end, next to `i`'s own post-selections.
pub fn transition_circuit(ci: &Circuit, cj: &Circuit) -> Result<Circuit, KernelError> {
    let si = sentence_qubit(ci)?;
    let sj = sentence_qubit(cj)?;
    let mut next = ci.n_qubits();
    let wire_map: Vec<usize> = (0..cj.n_qubits())
        .map(|q| {
            if q == sj {
                si
            } else {
                next += 1;
                next - 1
            }
        })
        .collect();
    let composed = compose(ci, &adjoint(cj), &wire_map)?;
    let mut post_select = ci.post_select().clone();
    for &q in cj.post_select().keys() {
        post_select.insert(wire_map[q], 0);
    }
    Ok(composed.with_measurement(post_select, vec![si])?)
}

/// Both circuits in parallel plus an ancilla (the last qubit) running
/// H, CSWAP(ancilla; s_i, s_j), H. The ancilla is the only sentence qubit.
pub fn swap_test_circuit(ci: &Circuit, cj: &Circuit) -> Result<Circuit, KernelError> {
    let si = sentence_qubit(ci)?;
    let sj = sentence_qubit(cj)? + ci.n_qubits();
    let both = parallel(ci, cj);
    let anc = both.n_qubits();
    let widened = Circuit::new(
        anc + 1,
        both.gates().to_vec(),
        both.post_select().clone(),
        vec![anc],
    )?;
    Ok(widened.with_gates([Gate::h(anc), Gate::cswap(anc, si, sj)?, Gate::h(anc)])?)
}

/// Kernel value of two bound circuits on `backend`.
pub fn kernel_value(
    kind: KernelKind,
    ci: &Circuit,
    cj: &Circuit,
    backend: &Backend,
    seed: u64,
) -> Result<f64, KernelError> {
    match kind {
        KernelKind::Transition => {
            let c = transition_circuit(ci, cj)?;
            let p1 = backend
                .run(&c, seed)?
                .marginal_one(c.sentence_qubits()[0])?;
            Ok((1.0 - p1).clamp(0.0, 1.0))
        }
        KernelKind::Swap => {
            let c = swap_test_circuit(ci, cj)?;
            let p1 = backend
                .run(&c, seed)?
                .marginal_one(c.sentence_qubits()[0])?;
            Ok((1.0 - 2.0 * p1).clamp(0.0, 1.0))
        }
    }
}

/// `Pr[shared sentence qubit = 0 | post-selection]` of `U_j^dagger U_i`.
pub fn transition_amplitude_kernel(
    ci: &Circuit,
    cj: &Circuit,
    params: &ParameterMap,
    backend: &Backend,
    seed: u64,
) -> Result<f64, KernelError> {
    kernel_value(
        KernelKind::Transition,
        &bind(ci, params)?,
        &bind(cj, params)?,
        backend,
        seed,
    )
}

/// `clamp(2 Pr[ancilla = 0] - 1, 0, 1)` of the SWAP test.
pub fn swap_test_kernel(
    ci: &Circuit,
    cj: &Circuit,
    params: &ParameterMap,
    backend: &Backend,
    seed: u64,
) -> Result<f64, KernelError> {
    kernel_value(
        KernelKind::Swap,
        &bind(ci, params)?,
        &bind(cj, params)?,
        backend,
        seed,
    )
}

/// Post-selected, renormalized one-qubit sentence state of a bound
/// circuit, computed on the full register without the engine.
pub fn reduced_sentence_state(c: &Circuit) -> Result<StateVector, KernelError> {
    sentence_qubit(c)?;
    let (state, _) = StateVector::from_circuit(c)?.post_select(c.post_select())?;
    Ok(state)
}

/// `|<phi_j|phi_i>|^2` from the reduced sentence states.
pub fn fidelity_oracle(ci: &Circuit, cj: &Circuit) -> Result<f64, KernelError> {
    Ok(reduced_sentence_state(cj)?
        .inner(&reduced_sentence_state(ci)?)
        .norm_sqr())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GramMeta {
    pub kernel: KernelKind,
    pub backend: String,
    pub shots: Option<u64>,
    pub seed: u64,
    pub embedding_hash: u64,
    /// Rows and columns index the same dataset.
    pub same_dataset: bool,
}

/// Kernel values of every (row, column) pair, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
    pub meta: GramMeta,
}

impl GramMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols))
            .map(|i| self.get(i, i))
            .collect()
    }

    /// Largest `|K_ij - K_ji|`; infinite for non-square matrices.
    pub fn asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn to_csv(&self) -> String {
        let m = &self.meta;
        let mut out = format!(
            "# kernel={}\n# backend={}\n# shots={}\n# seed={}\n# embedding_hash={:016x}\n# same_dataset={}\n# rows={}\n# cols={}\n",
            m.kernel,
            m.backend,
            m.shots.map_or_else(|| "none".to_string(), |s| s.to_string()),
            m.seed,
            m.embedding_hash,
            m.same_dataset,
            self.rows,
            self.cols
        );
        for i in 0..self.rows {
            let line: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Self, KernelError> {
        let mut meta = BTreeMap::new();
        let mut values = Vec::new();
        let mut rows = 0;
        let mut cols = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let perr = |msg: String| KernelError::Parse { line: line_no, msg };
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let (k, v) = rest
                    .trim()
                    .split_once('=')
                    .ok_or_else(|| perr(format!("expected `# key=value`, got `{line}`")))?;
                meta.insert(k.trim().to_string(), (v.trim().to_string(), line_no));
                continue;
            }
            let row: Vec<f64> = line
                .split(',')
                .enumerate()
                .map(|(c, cell)| {
                    let v: f64 = cell.trim().parse().map_err(|_| {
                        perr(format!(
                            "column {}: `{}` is not a number",
                            c + 1,
                            cell.trim()
                        ))
                    })?;
                    if !(0.0..=1.0).contains(&v) {
                        return Err(perr(format!("column {}: {v} outside [0, 1]", c + 1)));
                    }
                    Ok(v)
                })
                .collect::<Result<_, _>>()?;
            match cols {
                None => cols = Some(row.len()),
                Some(n) if n != row.len() => {
                    return Err(perr(format!("{} columns, expected {n}", row.len())));
                }
                _ => {}
            }
            values.extend(row);
            rows += 1;
        }
        let cols = cols.unwrap_or(0);
        let field = |key: &str| -> Result<(String, usize), KernelError> {
            meta.get(key).cloned().ok_or_else(|| KernelError::Parse {
                line: 0,
                msg: format!("missing `# {key}=` header"),
            })
        };
        let num = |key: &str, radix: u32| -> Result<u64, KernelError> {
            let (v, line) = field(key)?;
            u64::from_str_radix(&v, radix).map_err(|_| KernelError::Parse {
                line,
                msg: format!("`{key}` value `{v}` is not an integer"),
            })
        };
        for (key, actual) in [("rows", rows), ("cols", cols)] {
            if num(key, 10)? as usize != actual {
                let (_, line) = field(key)?;
                return Err(KernelError::Parse {
                    line,
                    msg: format!("header says {key}={}, data has {actual}", num(key, 10)?),
                });
            }
        }
        let (kernel, kline) = field("kernel")?;
        let kernel = kernel
            .parse()
            .map_err(|msg| KernelError::Parse { line: kline, msg })?;
        let (shots, _) = field("shots")?;
        let shots = if shots == "none" {
            None
        } else {
            Some(num("shots", 10)?)
        };
        let (same, sline) = field("same_dataset")?;
        Ok(GramMatrix {
            rows,
            cols,
            values,
            meta: GramMeta {
                kernel,
                backend: field("backend")?.0,
                shots,
                seed: num("seed", 10)?,
                embedding_hash: num("embedding_hash", 16)?,
                same_dataset: same.parse().map_err(|_| KernelError::Parse {
                    line: sline,
                    msg: format!("same_dataset must be true or false, got `{same}`"),
                })?,
            },
        })
    }

    pub fn load(path: &Path) -> Result<Self, KernelError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| KernelError::Io(format!("{}: {e}", path.display())))?;
        Self::parse_csv(&text)
    }

    /// Binary 8-bit graymap, pixel = round(255 K_ij).
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.cols, self.rows).into_bytes();
        out.extend(
            self.values
                .iter()
                .map(|v| (255.0 * v.clamp(0.0, 1.0)).round() as u8),
        );
        out
    }
}

/// Kernel values for every pair of `a` and `b`. When both arguments are
/// the same object only the upper triangle is evaluated and mirrored.
/// Entry seeds depend on `(seed, i, j)` only, with `i <= j` for a shared
/// dataset, so the result does not depend on scheduling.
pub fn gram(
    a: &LabeledCircuits,
    b: &LabeledCircuits,
    kind: KernelKind,
    params: &ParameterMap,
    backend: &Backend,
    seed: u64,
) -> Result<GramMatrix, KernelError> {
    let same = std::ptr::eq(a, b);
    let bind_all = |d: &LabeledCircuits| -> Result<Vec<Circuit>, KernelError> {
        d.circuits
            .iter()
            .map(|c| {
                sentence_qubit(c)?;
                Ok(bind(c, params)?)
            })
            .collect()
    };
    let ba = bind_all(a)?;
    let bb = if same { ba.clone() } else { bind_all(b)? };
    let (rows, cols) = (ba.len(), bb.len());
    let pairs: Vec<(usize, usize)> = (0..rows)
        .flat_map(|i| {
            let start = if same { i } else { 0 };
            (start..cols).map(move |j| (i, j))
        })
        .collect();
    let results: Vec<Result<f64, KernelError>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            kernel_value(
                kind,
                &ba[i],
                &bb[j],
                backend,
                derive_seed(seed, &[i as u64, j as u64]),
            )
            .map_err(|e| match e {
                KernelError::Simulation(source) => KernelError::KernelEvalFailed { i, j, source },
                other => other,
            })
        })
        .collect();
    let mut values = vec![0.0; rows * cols];
    let mut failures = Vec::new();
    for (&(i, j), r) in pairs.iter().zip(results) {
        match r {
            Ok(v) => {
                values[i * cols + j] = v;
                if same {
                    values[j * cols + i] = v;
                }
            }
            Err(e) => failures.push(e),
        }
    }
    if !failures.is_empty() {
        return Err(KernelError::GramFailed(failures));
    }
    Ok(GramMatrix {
        rows,
        cols,
        values,
        meta: GramMeta {
            kernel: kind,
            backend: backend.name().to_string(),
            shots: backend.shots(),
            seed,
            embedding_hash: params.fingerprint(),
            same_dataset: same,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Class0,
    Class1,
    Mixed,
}

impl Region {
    pub const ALL: [Region; 3] = [Region::Class0, Region::Class1, Region::Mixed];

    pub fn name(self) -> &'static str {
        match self {
            Region::Class0 => "Class 0",
            Region::Class1 => "Class 1",
            Region::Mixed => "Mixed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionStat {
    pub region: Region,
    /// NaN when the region has no entries.
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub count: usize,
}

/// Mean and spread of the Class 0 x Class 0, Class 1 x Class 1 and mixed
/// blocks. Diagonal entries are skipped when rows and columns are the same
/// dataset.
pub fn region_stats(
    k: &GramMatrix,
    labels_a: &[u8],
    labels_b: &[u8],
) -> Result<Vec<RegionStat>, KernelError> {
    if labels_a.len() != k.rows {
        return Err(KernelError::LabelMismatch {
            labels: labels_a.len(),
            dim: k.rows,
        });
    }
    if labels_b.len() != k.cols {
        return Err(KernelError::LabelMismatch {
            labels: labels_b.len(),
            dim: k.cols,
        });
    }
    let mut buckets: [Vec<f64>; 3] = Default::default();
    for (i, &la) in labels_a.iter().enumerate() {
        for (j, &lb) in labels_b.iter().enumerate() {
            if k.meta.same_dataset && i == j {
                continue;
            }
            let slot = match (la, lb) {
                (0, 0) => 0,
                (1, 1) => 1,
                _ => 2,
            };
            buckets[slot].push(k.get(i, j));
        }
    }
    Ok(Region::ALL
        .iter()
        .zip(&buckets)
        .map(|(&region, xs)| {
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            RegionStat {
                region,
                mean,
                std: var.sqrt(),
                count: xs.len(),
            }
        })
        .collect())
}
