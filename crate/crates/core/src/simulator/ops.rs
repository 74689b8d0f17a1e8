//! In-place gate kernels over amplitude buffers addressed by bit masks.
//!
//! The same kernels drive state vectors (one mask per qubit) and density
//! matrices stored as vectorized `rho[r * dim + c]` (row and column masks).

use num_complex::Complex64 as C64;

use crate::circuit::GateKind;

pub(crate) type Mat2 = [[C64; 2]; 2];

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

pub(crate) fn hadamard() -> Mat2 {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

pub(crate) fn rx(theta: f64) -> Mat2 {
    let c = C64::new((theta / 2.0).cos(), 0.0);
    let s = C64::new(0.0, -(theta / 2.0).sin());
    [[c, s], [s, c]]
}

pub(crate) fn rz(theta: f64) -> Mat2 {
    [
        [C64::from_polar(1.0, -theta / 2.0), ZERO],
        [ZERO, C64::from_polar(1.0, theta / 2.0)],
    ]
}

pub(crate) fn pauli(which: u8) -> Mat2 {
    match which {
        0 => [[ONE, ZERO], [ZERO, ONE]],
        1 => [[ZERO, ONE], [ONE, ZERO]],
        2 => [[ZERO, C64::new(0.0, -1.0)], [C64::new(0.0, 1.0), ZERO]],
        3 => [[ONE, ZERO], [ZERO, -ONE]],
        _ => unreachable!("pauli index {which}"),
    }
}

pub(crate) fn apply_1q(amps: &mut [C64], mask: usize, m: &Mat2) {
    apply_controlled_1q(amps, 0, mask, m);
}

/// Applies `m` on `tmask` wherever every bit of `cmask` is set.
pub(crate) fn apply_controlled_1q(amps: &mut [C64], cmask: usize, tmask: usize, m: &Mat2) {
    for i in 0..amps.len() {
        if i & tmask != 0 || i & cmask != cmask {
            continue;
        }
        let j = i | tmask;
        let (a, b) = (amps[i], amps[j]);
        amps[i] = m[0][0] * a + m[0][1] * b;
        amps[j] = m[1][0] * a + m[1][1] * b;
    }
}

pub(crate) fn apply_cswap(amps: &mut [C64], cmask: usize, amask: usize, bmask: usize) {
    for i in 0..amps.len() {
        if i & cmask != 0 && i & amask != 0 && i & bmask == 0 {
            amps.swap(i, i ^ amask ^ bmask);
        }
    }
}

/// Applies a gate whose targets map to `masks` (controls first).
///
/// Passing `-angle` applies the complex conjugate of the gate, which is
/// how density-matrix columns are updated: every gate in the set is
/// either real or a rotation with `conj(U(t)) = U(-t)`.
pub(crate) fn apply_gate(amps: &mut [C64], kind: GateKind, angle: f64, masks: &[usize]) {
    match kind {
        GateKind::H => apply_1q(amps, masks[0], &hadamard()),
        GateKind::RX => apply_1q(amps, masks[0], &rx(angle)),
        GateKind::RZ => apply_1q(amps, masks[0], &rz(angle)),
        GateKind::CRZ => apply_controlled_1q(amps, masks[0], masks[1], &rz(angle)),
        GateKind::CX => apply_controlled_1q(amps, masks[0], masks[1], &pauli(1)),
        GateKind::CSWAP => apply_cswap(amps, masks[0], masks[1], masks[2]),
    }
}

pub(crate) fn norm_sqr(amps: &[C64]) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum()
}

#[cfg(test)]
/// Drops the bit at `pos` from `idx`, shifting higher bits down.
#[inline]
pub(crate) fn remove_bit(idx: usize, pos: usize) -> usize {
    let low = idx & ((1 << pos) - 1);
    let high = (idx >> (pos + 1)) << pos;
    high | low
}

/// Inserts `bit` at `pos` in `idx`, shifting higher bits up.
#[inline]
pub(crate) fn insert_bit(idx: usize, pos: usize, bit: usize) -> usize {
    let low = idx & ((1 << pos) - 1);
    let high = (idx >> pos) << (pos + 1);
    high | (bit << pos) | low
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_insert_remove_roundtrip() {
        for idx in 0..64usize {
            for pos in 0..6 {
                for bit in 0..2 {
                    let ins = insert_bit(idx, pos, bit);
                    assert_eq!((ins >> pos) & 1, bit);
                    assert_eq!(remove_bit(ins, pos), idx);
                }
            }
        }
    }

    #[test]
    fn rotation_conjugate_is_negated_angle() {
        for &t in &[0.0, 0.4, -1.3, 2.9] {
            for (a, b) in [(rx(t), rx(-t)), (rz(t), rz(-t))] {
                for r in 0..2 {
                    for c in 0..2 {
                        assert!((a[r][c].conj() - b[r][c]).norm() < 1e-15);
                    }
                }
            }
        }
    }
}
