//! Exact, sampled and noisy simulation of bound circuits with post-selection.
//!
//! Bitstrings are written over the non-post-selected qubits, sentence
//! qubits first and the remaining qubits ascending, leftmost character
//! first. Within a full register qubit 0 is the most significant bit.

mod density;
mod engine;
mod ops;
mod statevector;

use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use density::DensityMatrix;
pub use statevector::StateVector;

use crate::circuit::Circuit;

pub const MAX_STATEVECTOR_QUBITS: usize = 16;
pub const MAX_DENSITY_QUBITS: usize = 10;
/// Post-selection success probabilities below this are errors.
pub const POST_SELECT_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("circuit has unbound symbols")]
    UnboundCircuit,
    #[error("post-selection success probability {0:e} is below the 1e-12 floor")]
    PostSelectImpossible(f64),
    #[error("{requested} simultaneously live qubits exceed the limit of {limit}")]
    TooManyQubits { requested: usize, limit: usize },
    #[error("every shot was discarded by post-selection")]
    NoShotsKept,
    #[error("invalid noise model: {0}")]
    InvalidNoise(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
}

/// Depolarizing error per gate size plus symmetric readout flips.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub readout_flip: f64,
}

impl NoiseModel {
    pub fn new(p1: f64, p2: f64, p3: f64, readout_flip: f64) -> Result<Self, SimError> {
        for (name, v) in [
            ("p1", p1),
            ("p2", p2),
            ("p3", p3),
            ("readout_flip", readout_flip),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(SimError::InvalidNoise(format!("{name}={v} outside [0, 1]")));
            }
        }
        Ok(Self {
            p1,
            p2,
            p3,
            readout_flip,
        })
    }

    pub fn noiseless() -> Self {
        Self {
            p1: 0.0,
            p2: 0.0,
            p3: 0.0,
            readout_flip: 0.0,
        }
    }

    /// Error rates typical of a 16-qubit superconducting device.
    pub fn guadalupe_like() -> Self {
        Self {
            p1: 0.001,
            p2: 0.01,
            p3: 0.03,
            readout_flip: 0.02,
        }
    }

    pub fn profile(name: &str) -> Option<Self> {
        match name {
            "none" | "noiseless" => Some(Self::noiseless()),
            "guadalupe-like" => Some(Self::guadalupe_like()),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.p1 == 0.0 && self.p2 == 0.0 && self.p3 == 0.0 && self.readout_flip == 0.0
    }

    pub fn gate_error(&self, arity: usize) -> f64 {
        match arity {
            1 => self.p1,
            2 => self.p2,
            _ => self.p3,
        }
    }
}

/// Outcome distribution conditioned on every post-selection succeeding.
#[derive(Debug, Clone, PartialEq)]
pub struct PostSelectedDistribution {
    pub success_prob: f64,
    /// Qubits the bitstrings range over, in character order.
    pub qubits: Vec<usize>,
    /// Indexed by bitstring value, first qubit as most significant bit.
    pub probs: Vec<f64>,
}

impl PostSelectedDistribution {
    /// Probability of a bitstring; zero for strings of the wrong shape.
    pub fn prob(&self, bits: &str) -> f64 {
        parse_bits(bits, self.qubits.len())
            .map(|i| self.probs[i])
            .unwrap_or(0.0)
    }

    /// Marginal probability that `qubit` reads 1.
    pub fn marginal_one(&self, qubit: usize) -> Option<f64> {
        let k = self.qubits.iter().position(|&q| q == qubit)?;
        let shift = self.qubits.len() - 1 - k;
        Some(
            self.probs
                .iter()
                .enumerate()
                .filter(|(i, _)| (i >> shift) & 1 == 1)
                .map(|(_, p)| p)
                .sum(),
        )
    }

    /// Nonzero entries keyed by bitstring.
    pub fn to_map(&self) -> BTreeMap<String, f64> {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, &p)| (format_bits(i, self.qubits.len()), p))
            .collect()
    }
}

/// Shot histogram over the non-post-selected qubits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotCounts {
    pub shots_requested: u64,
    pub shots_kept: u64,
    pub qubits: Vec<usize>,
    pub counts: BTreeMap<String, u64>,
}

impl ShotCounts {
    pub fn count(&self, bits: &str) -> u64 {
        self.counts.get(bits).copied().unwrap_or(0)
    }

    /// Relative frequency among kept shots.
    pub fn frequency(&self, bits: &str) -> Result<f64, SimError> {
        if self.shots_kept == 0 {
            return Err(SimError::NoShotsKept);
        }
        Ok(self.count(bits) as f64 / self.shots_kept as f64)
    }

    /// Fraction of kept shots in which `qubit` read 1.
    pub fn marginal_one(&self, qubit: usize) -> Result<f64, SimError> {
        if self.shots_kept == 0 {
            return Err(SimError::NoShotsKept);
        }
        let k = self
            .qubits
            .iter()
            .position(|&q| q == qubit)
            .ok_or_else(|| SimError::InvalidState(format!("qubit {qubit} is not measured")))?;
        let ones: u64 = self
            .counts
            .iter()
            .filter(|(bits, _)| bits.as_bytes()[k] == b'1')
            .map(|(_, c)| c)
            .sum();
        Ok(ones as f64 / self.shots_kept as f64)
    }
}

fn format_bits(value: usize, width: usize) -> String {
    (0..width)
        .map(|k| {
            if (value >> (width - 1 - k)) & 1 == 1 {
                '1'
            } else {
                '0'
            }
        })
        .collect()
}

fn parse_bits(bits: &str, width: usize) -> Option<usize> {
    if bits.len() != width {
        return None;
    }
    bits.chars().try_fold(0usize, |acc, ch| match ch {
        '0' => Some(acc << 1),
        '1' => Some((acc << 1) | 1),
        _ => None,
    })
}

fn require_bound(c: &Circuit) -> Result<(), SimError> {
    if c.is_bound() {
        Ok(())
    } else {
        Err(SimError::UnboundCircuit)
    }
}

/// Noiseless Born-rule distribution conditioned on the post-selections.
pub fn run_exact(c: &Circuit) -> Result<PostSelectedDistribution, SimError> {
    require_bound(c)?;
    let plan = engine::Plan::new(c);
    let cond = engine::run_statevector(c, &plan)?;
    Ok(PostSelectedDistribution {
        success_prob: cond.success,
        qubits: plan.outputs,
        probs: cond.probs,
    })
}

/// Exact noisy distribution: depolarizing channel after every gate,
/// readout confusion on every measured bit, then post-selection.
pub fn run_density(c: &Circuit, noise: &NoiseModel) -> Result<PostSelectedDistribution, SimError> {
    require_bound(c)?;
    let plan = engine::Plan::new(c);
    let cond = engine::run_density(c, &plan, noise)?;
    Ok(PostSelectedDistribution {
        success_prob: cond.success,
        qubits: plan.outputs,
        probs: cond.probs,
    })
}

/// Samples `shots` executions, discarding those that fail post-selection.
///
/// Without noise (or with an all-zero model) shots are drawn from the exact
/// joint distribution; with noise every shot is an independent trajectory
/// with random Pauli faults and readout flips. Identical inputs give
/// identical counts.
pub fn run_shots(
    c: &Circuit,
    shots: u64,
    seed: u64,
    noise: Option<&NoiseModel>,
) -> Result<ShotCounts, SimError> {
    require_bound(c)?;
    let plan = engine::Plan::new(c);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = plan.outputs.len();
    let mut tallies = vec![0u64; 1 << width];
    let mut kept = 0u64;
    match noise.filter(|n| !n.is_zero()) {
        None => {
            use rand::Rng;
            let cond = match engine::run_statevector(c, &plan) {
                Ok(cond) => cond,
                Err(SimError::PostSelectImpossible(_)) => engine::Conditional {
                    success: 0.0,
                    probs: vec![0.0; 1 << width],
                },
                Err(e) => return Err(e),
            };
            for _ in 0..shots {
                if rng.gen::<f64>() < cond.success {
                    tallies[engine::sample_index(&cond.probs, &mut rng)] += 1;
                    kept += 1;
                }
            }
        }
        Some(model) => {
            for _ in 0..shots {
                if let Some(outcome) = engine::sample_trajectory(c, &plan, model, &mut rng)? {
                    tallies[outcome] += 1;
                    kept += 1;
                }
            }
        }
    }
    let counts = tallies
        .iter()
        .enumerate()
        .filter(|(_, &n)| n > 0)
        .map(|(i, &n)| (format_bits(i, width), n))
        .collect();
    Ok(ShotCounts {
        shots_requested: shots,
        shots_kept: kept,
        qubits: plan.outputs,
        counts,
    })
}

/// How circuits are executed: exact statevector, finite shots (optionally
/// noisy trajectories), or the exact noisy density-matrix expectation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Backend {
    Exact,
    Shots {
        shots: u64,
        noise: Option<NoiseModel>,
    },
    Density(NoiseModel),
}

impl Backend {
    pub fn name(&self) -> &'static str {
        match self {
            Backend::Exact => "exact",
            Backend::Shots { noise: None, .. } => "shots",
            Backend::Shots { noise: Some(_), .. } => "noisy-shots",
            Backend::Density(n) if n.is_zero() => "density",
            Backend::Density(_) => "noisy",
        }
    }

    pub fn shots(&self) -> Option<u64> {
        match self {
            Backend::Shots { shots, .. } => Some(*shots),
            _ => None,
        }
    }

    /// Runs `c`; `seed` only matters for shot backends.
    pub fn run(&self, c: &Circuit, seed: u64) -> Result<Estimate, SimError> {
        match self {
            Backend::Exact => Ok(Estimate::from_distribution(run_exact(c)?)),
            Backend::Density(noise) => Ok(Estimate::from_distribution(run_density(c, noise)?)),
            Backend::Shots { shots, noise } => {
                let counts = run_shots(c, *shots, seed, noise.as_ref())?;
                if counts.shots_kept == 0 {
                    return Err(SimError::NoShotsKept);
                }
                let width = counts.qubits.len();
                let mut probs = vec![0.0; 1 << width];
                for (bits, &n) in &counts.counts {
                    let idx = parse_bits(bits, width).expect("well-formed bitstring");
                    probs[idx] = n as f64 / counts.shots_kept as f64;
                }
                Ok(Estimate {
                    qubits: counts.qubits,
                    probs,
                    shots_kept: Some(counts.shots_kept),
                })
            }
        }
    }
}

/// Conditional outcome probabilities, exact or estimated from kept shots.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub qubits: Vec<usize>,
    pub probs: Vec<f64>,
    /// Number of shots behind the estimate; `None` for exact backends.
    pub shots_kept: Option<u64>,
}

impl Estimate {
    fn from_distribution(d: PostSelectedDistribution) -> Self {
        Self {
            qubits: d.qubits,
            probs: d.probs,
            shots_kept: None,
        }
    }

    /// Probability that `qubit` reads 1.
    pub fn marginal_one(&self, qubit: usize) -> Result<f64, SimError> {
        let k = self
            .qubits
            .iter()
            .position(|&q| q == qubit)
            .ok_or_else(|| SimError::InvalidState(format!("qubit {qubit} is not measured")))?;
        let shift = self.qubits.len() - 1 - k;
        Ok(self
            .probs
            .iter()
            .enumerate()
            .filter(|(i, _)| (i >> shift) & 1 == 1)
            .map(|(_, p)| p)
            .sum())
    }
}

/// Largest number of simultaneously live qubits the engine needs for `c`.
pub fn peak_live_qubits(c: &Circuit) -> usize {
    engine::Plan::new(c).peak_width
}

impl fmt::Display for PostSelectedDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "success={:.6}", self.success_prob)?;
        for (bits, p) in self.to_map() {
            write!(f, " {bits}:{p:.6}")?;
        }
        Ok(())
    }
}
