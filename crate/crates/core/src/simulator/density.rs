use num_complex::Complex64 as C64;

use super::ops::{apply_gate, insert_bit};
use super::statevector::gate_angle;
use super::{SimError, StateVector, MAX_DENSITY_QUBITS};
use crate::circuit::Gate;

/// A mixed state, row-major `dim x dim`. Same qubit ordering as
/// [`StateVector`]: qubit 0 is the most significant index bit.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    entries: Vec<C64>,
}

impl DensityMatrix {
    pub fn zero(n_qubits: usize) -> Result<Self, SimError> {
        check_width(n_qubits)?;
        let dim = 1 << n_qubits;
        let mut entries = vec![C64::new(0.0, 0.0); dim * dim];
        entries[0] = C64::new(1.0, 0.0);
        Ok(Self { n_qubits, entries })
    }

    pub fn maximally_mixed(n_qubits: usize) -> Result<Self, SimError> {
        check_width(n_qubits)?;
        let dim = 1 << n_qubits;
        let mut entries = vec![C64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = C64::new(1.0 / dim as f64, 0.0);
        }
        Ok(Self { n_qubits, entries })
    }

    pub fn from_state(sv: &StateVector) -> Result<Self, SimError> {
        let n_qubits = sv.n_qubits();
        check_width(n_qubits)?;
        let amps = sv.amplitudes();
        let entries = amps
            .iter()
            .flat_map(|a| amps.iter().map(move |b| a * b.conj()))
            .collect();
        Ok(Self { n_qubits, entries })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.entries[row * self.dim() + col]
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.entry(i, i)).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.entry(i, i).re).collect()
    }

    /// Largest `|rho - rho^dagger|` entry.
    pub fn hermiticity_error(&self) -> f64 {
        let dim = self.dim();
        let mut worst = 0.0f64;
        for r in 0..dim {
            for c in 0..dim {
                worst = worst.max((self.entry(r, c) - self.entry(c, r).conj()).norm());
            }
        }
        worst
    }

    fn bit(&self, q: usize) -> usize {
        self.n_qubits - 1 - q
    }

    /// `rho -> U rho U^dagger` for a bound gate.
    pub fn apply(&mut self, g: &Gate) -> Result<(), SimError> {
        let angle = gate_angle(g)?;
        if let Some(&q) = g.targets().iter().find(|&&q| q >= self.n_qubits) {
            return Err(SimError::InvalidState(format!("qubit {q} out of range")));
        }
        let bits: Vec<usize> = g.targets().iter().map(|&q| self.bit(q)).collect();
        apply_unitary_flat(&mut self.entries, self.n_qubits, g, angle, &bits);
        Ok(())
    }

    /// Depolarizing channel with probability `p` on the listed qubits.
    pub fn depolarize(&mut self, qubits: &[usize], p: f64) {
        let bits: Vec<usize> = qubits.iter().map(|&q| self.bit(q)).collect();
        depolarize_flat(&mut self.entries, self.n_qubits, &bits, p);
    }
}

fn check_width(n: usize) -> Result<(), SimError> {
    if n > MAX_DENSITY_QUBITS {
        return Err(SimError::TooManyQubits {
            requested: n,
            limit: MAX_DENSITY_QUBITS,
        });
    }
    Ok(())
}

/// `rho -> U rho U^dagger` on a vectorized matrix; `bits` are positions in
/// the `n`-bit row/column index, controls first.
pub(crate) fn apply_unitary_flat(
    entries: &mut [C64],
    n: usize,
    g: &Gate,
    angle: f64,
    bits: &[usize],
) {
    let row_masks: Vec<usize> = bits.iter().map(|&b| 1 << (b + n)).collect();
    let col_masks: Vec<usize> = bits.iter().map(|&b| 1 << b).collect();
    apply_gate(entries, g.kind(), angle, &row_masks);
    apply_gate(entries, g.kind(), -angle, &col_masks);
}

/// `rho -> (1-p) rho + p/(4^k-1) sum_{P != I} P rho P`, evaluated through
/// the twirl identity `sum_P P rho P = 4^k Tr_S(rho) (x) I/2^k`.
pub(crate) fn depolarize_flat(entries: &mut [C64], n: usize, bits: &[usize], p: f64) {
    if p == 0.0 || bits.is_empty() {
        return;
    }
    let k = bits.len() as i32;
    let four_k = 4f64.powi(k);
    let keep = 1.0 - p * four_k / (four_k - 1.0);
    let mix = p * four_k / (four_k - 1.0) / 2f64.powi(k);
    let dim = 1usize << n;
    let smask: usize = bits.iter().map(|&b| 1usize << b).sum();
    let subsets: Vec<usize> = (0..1usize << k)
        .map(|s| {
            bits.iter()
                .enumerate()
                .filter(|(j, _)| s >> j & 1 == 1)
                .map(|(_, &b)| 1usize << b)
                .sum()
        })
        .collect();
    let src = entries.to_vec();
    for r in 0..dim {
        for c in 0..dim {
            let idx = r * dim + c;
            let mut v = src[idx] * keep;
            if (r ^ c) & smask == 0 {
                let (rb, cb) = (r & !smask, c & !smask);
                let traced: C64 = subsets
                    .iter()
                    .map(|&s| src[(rb | s) * dim + (cb | s)])
                    .sum();
                v += traced * mix;
            }
            entries[idx] = v;
        }
    }
}

/// Appends a fresh |0><0| qubit as the new most significant index bit.
pub(crate) fn alloc_flat(entries: &[C64], n: usize) -> Vec<C64> {
    let dim = 1usize << n;
    let mut out = vec![C64::new(0.0, 0.0); 4 * dim * dim];
    for r in 0..dim {
        out[r * 2 * dim..r * 2 * dim + dim].copy_from_slice(&entries[r * dim..(r + 1) * dim]);
    }
    out
}

/// Removes index bit `pos`, keeping `sum_v weights[v] * <v| rho |v>`.
pub(crate) fn reduce_flat(entries: &[C64], n: usize, pos: usize, weights: [f64; 2]) -> Vec<C64> {
    let dim = 1usize << n;
    let half = dim / 2;
    let mut out = vec![C64::new(0.0, 0.0); half * half];
    for r in 0..half {
        for c in 0..half {
            let mut v = C64::new(0.0, 0.0);
            for (bit, &w) in weights.iter().enumerate() {
                if w != 0.0 {
                    v += entries[insert_bit(r, pos, bit) * dim + insert_bit(c, pos, bit)] * w;
                }
            }
            out[r * half + c] = v;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::ops;
    use super::*;
    use crate::circuit::Angle;

    /// Direct Kraus form: average over the non-identity Pauli strings.
    fn depolarize_by_paulis(rho: &DensityMatrix, qubits: &[usize], p: f64) -> Vec<C64> {
        let n = rho.n_qubits();
        let k = qubits.len() as u32;
        let mut acc: Vec<C64> = rho.entries().iter().map(|v| v * (1.0 - p)).collect();
        let count = 4usize.pow(k);
        for code in 1..count {
            let mut e = rho.entries().to_vec();
            for (j, &q) in qubits.iter().enumerate() {
                let which = ((code >> (2 * j)) & 3) as u8;
                let bit = n - 1 - q;
                let pm = ops::pauli(which);
                let conj = [
                    [pm[0][0].conj(), pm[0][1].conj()],
                    [pm[1][0].conj(), pm[1][1].conj()],
                ];
                ops::apply_1q(&mut e, 1 << (bit + n), &pm);
                ops::apply_1q(&mut e, 1 << bit, &conj);
            }
            for (a, v) in acc.iter_mut().zip(e) {
                *a += v * (p / (count - 1) as f64);
            }
        }
        acc
    }

    fn random_state(n: usize) -> DensityMatrix {
        let mut sv = StateVector::zero(n).unwrap();
        for q in 0..n {
            sv.apply(&Gate::rx(q, Angle::Constant(0.3 + q as f64)))
                .unwrap();
            sv.apply(&Gate::rz(q, Angle::Constant(1.1 * q as f64 - 0.4)))
                .unwrap();
        }
        for q in 1..n {
            sv.apply(&Gate::crz(q - 1, q, Angle::Constant(0.7)).unwrap())
                .unwrap();
            sv.apply(&Gate::h(q)).unwrap();
        }
        let mut rho = DensityMatrix::from_state(&sv).unwrap();
        rho.depolarize(&[0], 0.2);
        rho
    }

    #[test]
    fn twirl_matches_pauli_sum() {
        for (n, qubits) in [
            (1, vec![0]),
            (2, vec![1]),
            (2, vec![0, 1]),
            (3, vec![2, 0]),
            (3, vec![0, 1, 2]),
        ] {
            let rho = random_state(n);
            let expected = depolarize_by_paulis(&rho, &qubits, 0.37);
            let mut got = rho.clone();
            got.depolarize(&qubits, 0.37);
            for (a, b) in got.entries().iter().zip(&expected) {
                assert!((a - b).norm() < 1e-12, "n={n} qubits={qubits:?}");
            }
        }
    }

    #[test]
    fn maximally_mixed_is_fixed_point() {
        for n in 1..=2 {
            let mm = DensityMatrix::maximally_mixed(n).unwrap();
            for qubits in [vec![0], vec![n - 1], (0..n).collect::<Vec<_>>()] {
                for p in [0.0, 0.1, 0.5, 1.0] {
                    let mut rho = mm.clone();
                    rho.depolarize(&qubits, p);
                    for (a, b) in rho.entries().iter().zip(mm.entries()) {
                        assert!((a - b).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn hadamard_depolarized_keeps_uniform_marginal() {
        let mut rho = DensityMatrix::zero(1).unwrap();
        rho.apply(&Gate::h(0)).unwrap();
        rho.depolarize(&[0], 0.2);
        let p = rho.probabilities();
        assert!((p[0] - 0.5).abs() < 1e-10 && (p[1] - 0.5).abs() < 1e-10);
        // coherence shrinks by 1 - 4p/3
        assert!((rho.entry(0, 1).re - 0.5 * (1.0 - 4.0 * 0.2 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn unitary_evolution_matches_statevector() {
        let gates = vec![
            Gate::h(0),
            Gate::cx(0, 2).unwrap(),
            Gate::rx(1, Angle::Constant(0.8)),
            Gate::crz(1, 2, Angle::Constant(-1.2)).unwrap(),
            Gate::cswap(0, 1, 2).unwrap(),
            Gate::rz(2, Angle::Constant(2.2)),
        ];
        let mut sv = StateVector::zero(3).unwrap();
        let mut rho = DensityMatrix::zero(3).unwrap();
        for g in &gates {
            sv.apply(g).unwrap();
            rho.apply(g).unwrap();
        }
        let pure = DensityMatrix::from_state(&sv).unwrap();
        for (a, b) in rho.entries().iter().zip(pure.entries()) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!(rho.hermiticity_error() < 1e-12);
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn alloc_and_reduce_are_inverse_on_zero_qubit() {
        let rho = random_state(2);
        let grown = alloc_flat(rho.entries(), 2);
        let back = reduce_flat(&grown, 3, 2, [1.0, 0.0]);
        assert_eq!(back, rho.entries());
    }

    #[test]
    fn width_guard() {
        assert!(matches!(
            DensityMatrix::zero(11),
            Err(SimError::TooManyQubits { limit: 10, .. })
        ));
    }
}
