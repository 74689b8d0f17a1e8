use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use super::ops::{self, apply_gate, norm_sqr};
use super::{SimError, MAX_STATEVECTOR_QUBITS, POST_SELECT_FLOOR};
use crate::circuit::{Circuit, Gate};

/// A normalized pure state. Qubit 0 is the most significant bit of the
/// amplitude index, so bitstrings print qubit 0 leftmost.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn zero(n_qubits: usize) -> Result<Self, SimError> {
        check_width(n_qubits)?;
        let mut amplitudes = vec![C64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = C64::new(1.0, 0.0);
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Result<Self, SimError> {
        let len = amplitudes.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(SimError::InvalidState(format!(
                "length {len} is not a power of two"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        check_width(n_qubits)?;
        let norm = norm_sqr(&amplitudes).sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(SimError::InvalidState(format!(
                "norm {norm} differs from 1"
            )));
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Runs every gate of a bound circuit on |0...0>, ignoring measurement
    /// annotations.
    pub fn from_circuit(c: &Circuit) -> Result<Self, SimError> {
        let mut sv = Self::zero(c.n_qubits())?;
        for g in c.gates() {
            sv.apply(g)?;
        }
        Ok(sv)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        norm_sqr(&self.amplitudes).sqrt()
    }

    fn mask(&self, q: usize) -> usize {
        1 << (self.n_qubits - 1 - q)
    }

    pub fn apply(&mut self, g: &Gate) -> Result<(), SimError> {
        let angle = gate_angle(g)?;
        if let Some(&q) = g.targets().iter().find(|&&q| q >= self.n_qubits) {
            return Err(SimError::InvalidState(format!("qubit {q} out of range")));
        }
        let masks: Vec<usize> = g.targets().iter().map(|&q| self.mask(q)).collect();
        apply_gate(&mut self.amplitudes, g.kind(), angle, &masks);
        Ok(())
    }

    pub fn apply_pauli(&mut self, q: usize, which: u8) {
        let mask = self.mask(q);
        ops::apply_1q(&mut self.amplitudes, mask, &ops::pauli(which));
    }

    /// Born-rule probabilities indexed like the amplitudes.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Projects the given qubits onto their required bits and returns the
    /// renormalized state over the remaining qubits (in ascending order)
    /// together with the success probability.
    pub fn post_select(
        &self,
        required: &BTreeMap<usize, u8>,
    ) -> Result<(StateVector, f64), SimError> {
        let kept: Vec<usize> = (0..self.n_qubits)
            .filter(|q| !required.contains_key(q))
            .collect();
        if kept.is_empty() {
            return Err(SimError::InvalidState(
                "post-selection leaves no qubits".into(),
            ));
        }
        let mut out = vec![C64::new(0.0, 0.0); 1 << kept.len()];
        for (idx, amp) in self.amplitudes.iter().enumerate() {
            let bit = |q: usize| ((idx >> (self.n_qubits - 1 - q)) & 1) as u8;
            if required.iter().any(|(&q, &b)| bit(q) != b) {
                continue;
            }
            let reduced = kept
                .iter()
                .fold(0usize, |acc, &q| (acc << 1) | bit(q) as usize);
            out[reduced] = *amp;
        }
        let p = norm_sqr(&out);
        if p < POST_SELECT_FLOOR {
            return Err(SimError::PostSelectImpossible(p));
        }
        let scale = 1.0 / p.sqrt();
        out.iter_mut().for_each(|a| *a *= scale);
        Ok((
            StateVector {
                n_qubits: kept.len(),
                amplitudes: out,
            },
            p,
        ))
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

pub(crate) fn check_width(n: usize) -> Result<(), SimError> {
    if n > MAX_STATEVECTOR_QUBITS {
        return Err(SimError::TooManyQubits {
            requested: n,
            limit: MAX_STATEVECTOR_QUBITS,
        });
    }
    Ok(())
}

pub(crate) fn gate_angle(g: &Gate) -> Result<f64, SimError> {
    match (g.angle(), g.constant_angle()) {
        (None, _) => Ok(0.0),
        (Some(_), Some(v)) => Ok(v),
        (Some(_), None) => Err(SimError::UnboundCircuit),
    }
}
