//! Width-minimizing execution of a circuit.
//!
//! Every qubit starts in |0> and is untouched until its first gate, so it is
//! allocated lazily. A post-selected qubit is measured right after its last
//! gate and dropped from the register; later gates and noise never act on it,
//! so this gives the same statistics as measuring at the end. Compiled
//! sentences close their cups early, which keeps the live register far
//! narrower than the circuit.

use num_complex::Complex64 as C64;
use rand::Rng;

use super::density::{alloc_flat, apply_unitary_flat, depolarize_flat, reduce_flat};
use super::ops::{self, apply_gate, norm_sqr};
use super::statevector::gate_angle;
use super::{NoiseModel, SimError, MAX_DENSITY_QUBITS, MAX_STATEVECTOR_QUBITS, POST_SELECT_FLOOR};
use crate::circuit::Circuit;

#[derive(Debug, Clone, Copy)]
enum Step {
    Alloc(usize),
    Gate(usize),
    /// Measure a post-selected qubit and drop it.
    Retire(usize, u8),
}

#[derive(Debug)]
pub(crate) struct Plan {
    steps: Vec<Step>,
    /// Non-post-selected qubits in report order: sentence qubits first,
    /// then the rest ascending.
    pub(crate) outputs: Vec<usize>,
    /// Post-selected qubits no gate touches.
    idle_post_select: Vec<(usize, u8)>,
    pub(crate) peak_width: usize,
}

impl Plan {
    pub(crate) fn new(c: &Circuit) -> Plan {
        let n = c.n_qubits();
        let mut first = vec![None; n];
        let mut last = vec![None; n];
        for (i, g) in c.gates().iter().enumerate() {
            for &q in g.targets() {
                first[q].get_or_insert(i);
                last[q] = Some(i);
            }
        }
        let mut steps = Vec::new();
        let (mut width, mut peak) = (0usize, 0usize);
        for (i, g) in c.gates().iter().enumerate() {
            for &q in g.targets() {
                if first[q] == Some(i) {
                    steps.push(Step::Alloc(q));
                    width += 1;
                }
            }
            peak = peak.max(width);
            steps.push(Step::Gate(i));
            for &q in g.targets() {
                if last[q] == Some(i) {
                    if let Some(&bit) = c.post_select().get(&q) {
                        steps.push(Step::Retire(q, bit));
                        width -= 1;
                    }
                }
            }
        }
        let mut outputs: Vec<usize> = c.sentence_qubits().to_vec();
        outputs.extend(
            (0..n).filter(|q| !c.sentence_qubits().contains(q) && !c.post_select().contains_key(q)),
        );
        for &q in &outputs {
            if first[q].is_none() {
                steps.push(Step::Alloc(q));
                width += 1;
            }
        }
        peak = peak.max(width);
        let idle_post_select = c
            .post_select()
            .iter()
            .filter(|(&q, _)| first[q].is_none())
            .map(|(&q, &b)| (q, b))
            .collect();
        Plan {
            steps,
            outputs,
            idle_post_select,
            peak_width: peak,
        }
    }

    fn check_width(&self, limit: usize) -> Result<(), SimError> {
        if self.peak_width > limit {
            return Err(SimError::TooManyQubits {
                requested: self.peak_width,
                limit,
            });
        }
        Ok(())
    }
}

/// Maps circuit qubits to bit positions of the live register.
struct Register {
    /// `slots[k]` is the circuit qubit stored at bit position `k`.
    slots: Vec<usize>,
}

impl Register {
    fn new() -> Self {
        Self { slots: Vec::new() }
    }

    fn pos(&self, q: usize) -> usize {
        self.slots
            .iter()
            .position(|&s| s == q)
            .expect("qubit is live")
    }

    fn push(&mut self, q: usize) -> usize {
        self.slots.push(q);
        self.slots.len() - 1
    }

    fn remove(&mut self, q: usize) -> usize {
        let pos = self.pos(q);
        self.slots.remove(pos);
        pos
    }

    fn width(&self) -> usize {
        self.slots.len()
    }

    /// Reorders a distribution over live positions into `outputs` order,
    /// first output as most significant bit.
    fn to_output_order(&self, probs: &[f64], outputs: &[usize]) -> Vec<f64> {
        let m = outputs.len();
        let positions: Vec<usize> = outputs.iter().map(|&q| self.pos(q)).collect();
        let mut out = vec![0.0; 1 << m];
        for (idx, &p) in probs.iter().enumerate() {
            let key = positions
                .iter()
                .fold(0usize, |acc, &pos| (acc << 1) | ((idx >> pos) & 1));
            out[key] += p;
        }
        out
    }
}

/// Result of an exact run: success probability and the conditional
/// distribution over `Plan::outputs`.
pub(crate) struct Conditional {
    pub(crate) success: f64,
    pub(crate) probs: Vec<f64>,
}

fn angle_of(c: &Circuit, i: usize) -> Result<f64, SimError> {
    gate_angle(&c.gates()[i])
}

pub(crate) fn run_statevector(c: &Circuit, plan: &Plan) -> Result<Conditional, SimError> {
    plan.check_width(MAX_STATEVECTOR_QUBITS)?;
    let mut amps = vec![C64::new(1.0, 0.0)];
    let mut reg = Register::new();
    let mut success = 1.0;
    for (_, bit) in &plan.idle_post_select {
        if *bit != 0 {
            return Err(SimError::PostSelectImpossible(0.0));
        }
    }
    for step in &plan.steps {
        match *step {
            Step::Alloc(q) => {
                reg.push(q);
                amps.resize(amps.len() * 2, C64::new(0.0, 0.0));
            }
            Step::Gate(i) => {
                let g = &c.gates()[i];
                let masks: Vec<usize> = g.targets().iter().map(|&q| 1 << reg.pos(q)).collect();
                apply_gate(&mut amps, g.kind(), angle_of(c, i)?, &masks);
            }
            Step::Retire(q, bit) => {
                let pos = reg.remove(q);
                let kept: Vec<C64> = amps
                    .iter()
                    .enumerate()
                    .filter(|(idx, _)| (idx >> pos) & 1 == bit as usize)
                    .map(|(_, a)| *a)
                    .collect();
                let p = norm_sqr(&kept);
                success *= p;
                if success < POST_SELECT_FLOOR {
                    return Err(SimError::PostSelectImpossible(success));
                }
                let scale = 1.0 / p.sqrt();
                amps = kept.into_iter().map(|a| a * scale).collect();
            }
        }
    }
    let probs: Vec<f64> = amps.iter().map(|a| a.norm_sqr()).collect();
    Ok(Conditional {
        success,
        probs: reg.to_output_order(&probs, &plan.outputs),
    })
}

pub(crate) fn run_density(
    c: &Circuit,
    plan: &Plan,
    noise: &NoiseModel,
) -> Result<Conditional, SimError> {
    plan.check_width(MAX_DENSITY_QUBITS)?;
    let flip = noise.readout_flip;
    let weights = |required: u8| -> [f64; 2] {
        let mut w = [flip, flip];
        w[required as usize] = 1.0 - flip;
        w
    };
    let mut success = 1.0;
    for &(_, bit) in &plan.idle_post_select {
        success *= weights(bit)[0];
    }
    if success < POST_SELECT_FLOOR {
        return Err(SimError::PostSelectImpossible(success));
    }
    let mut rho = vec![C64::new(1.0, 0.0)];
    let mut reg = Register::new();
    for step in &plan.steps {
        match *step {
            Step::Alloc(q) => {
                rho = alloc_flat(&rho, reg.width());
                reg.push(q);
            }
            Step::Gate(i) => {
                let g = &c.gates()[i];
                let bits: Vec<usize> = g.targets().iter().map(|&q| reg.pos(q)).collect();
                apply_unitary_flat(&mut rho, reg.width(), g, angle_of(c, i)?, &bits);
                depolarize_flat(&mut rho, reg.width(), &bits, noise.gate_error(bits.len()));
            }
            Step::Retire(q, bit) => {
                let n = reg.width();
                let pos = reg.remove(q);
                rho = reduce_flat(&rho, n, pos, weights(bit));
                let dim = 1usize << reg.width();
                let p: f64 = (0..dim).map(|i| rho[i * dim + i].re).sum();
                success *= p;
                if success < POST_SELECT_FLOOR {
                    return Err(SimError::PostSelectImpossible(success));
                }
                rho.iter_mut().for_each(|v| *v /= p);
            }
        }
    }
    let dim = 1usize << reg.width();
    let diag: Vec<f64> = (0..dim).map(|i| rho[i * dim + i].re.max(0.0)).collect();
    let mut probs = reg.to_output_order(&diag, &plan.outputs);
    apply_readout_confusion(&mut probs, plan.outputs.len(), flip);
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    Ok(Conditional { success, probs })
}

/// Flips each of the `m` bits independently with probability `flip`.
pub(crate) fn apply_readout_confusion(probs: &mut [f64], m: usize, flip: f64) {
    if flip == 0.0 {
        return;
    }
    for b in 0..m {
        let mask = 1 << b;
        for i in 0..probs.len() {
            if i & mask == 0 {
                let (p0, p1) = (probs[i], probs[i | mask]);
                probs[i] = (1.0 - flip) * p0 + flip * p1;
                probs[i | mask] = flip * p0 + (1.0 - flip) * p1;
            }
        }
    }
}

/// One noisy shot by quantum trajectories. Returns the observed outcome
/// index over `Plan::outputs`, or `None` when post-selection rejects it.
pub(crate) fn sample_trajectory<R: Rng>(
    c: &Circuit,
    plan: &Plan,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<Option<usize>, SimError> {
    plan.check_width(MAX_STATEVECTOR_QUBITS)?;
    let flip = noise.readout_flip;
    let observe = |truth: usize, rng: &mut R| -> usize {
        if flip > 0.0 && rng.gen::<f64>() < flip {
            truth ^ 1
        } else {
            truth
        }
    };
    for &(_, bit) in &plan.idle_post_select {
        if observe(0, rng) != bit as usize {
            return Ok(None);
        }
    }
    let mut amps = vec![C64::new(1.0, 0.0)];
    let mut reg = Register::new();
    for step in &plan.steps {
        match *step {
            Step::Alloc(q) => {
                reg.push(q);
                amps.resize(amps.len() * 2, C64::new(0.0, 0.0));
            }
            Step::Gate(i) => {
                let g = &c.gates()[i];
                let masks: Vec<usize> = g.targets().iter().map(|&q| 1 << reg.pos(q)).collect();
                apply_gate(&mut amps, g.kind(), angle_of(c, i)?, &masks);
                let p = noise.gate_error(masks.len());
                if p > 0.0 && rng.gen::<f64>() < p {
                    // uniform over the 4^k - 1 non-identity Pauli strings
                    let k = masks.len() as u32;
                    let code = rng.gen_range(1..4usize.pow(k));
                    for (j, &mask) in masks.iter().enumerate() {
                        let which = ((code >> (2 * j)) & 3) as u8;
                        if which != 0 {
                            ops::apply_1q(&mut amps, mask, &ops::pauli(which));
                        }
                    }
                }
            }
            Step::Retire(q, bit) => {
                let pos = reg.remove(q);
                let p1: f64 = amps
                    .iter()
                    .enumerate()
                    .filter(|(idx, _)| (idx >> pos) & 1 == 1)
                    .map(|(_, a)| a.norm_sqr())
                    .sum();
                let total = norm_sqr(&amps);
                let truth = usize::from(rng.gen::<f64>() * total < p1);
                if observe(truth, rng) != bit as usize {
                    return Ok(None);
                }
                let p = if truth == 1 { p1 } else { total - p1 };
                let scale = 1.0 / p.sqrt();
                amps = amps
                    .iter()
                    .enumerate()
                    .filter(|(idx, _)| (idx >> pos) & 1 == truth)
                    .map(|(_, a)| a * scale)
                    .collect();
            }
        }
    }
    let probs: Vec<f64> = amps.iter().map(|a| a.norm_sqr()).collect();
    let probs = reg.to_output_order(&probs, &plan.outputs);
    let mut outcome = sample_index(&probs, rng);
    let m = plan.outputs.len();
    for b in 0..m {
        let truth = (outcome >> b) & 1;
        outcome = (outcome & !(1 << b)) | (observe(truth, rng) << b);
    }
    Ok(Some(outcome))
}

pub(crate) fn sample_index<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, &p) in probs.iter().enumerate() {
        if u < p {
            return i;
        }
        u -= p;
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}
