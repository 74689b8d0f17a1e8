use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use qnlp_core::circuit::{bind, compile_diagram, Angle, AnsatzConfig, Circuit, Gate};
use qnlp_core::dataset::{default_lexicon, enumerate, Template};
use qnlp_core::embeddings::EmbeddingStore;
use qnlp_core::simulator::{
    run_density, run_exact, run_shots, DensityMatrix, NoiseModel, StateVector,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn corpus(step: usize) -> Vec<Circuit> {
    let lex = default_lexicon();
    let params = EmbeddingStore::random(&lex, 42).params;
    enumerate(&lex, &Template::ALL)
        .iter()
        .step_by(step)
        .map(|s| {
            bind(
                &compile_diagram(&s.parse(&lex).unwrap(), &AnsatzConfig::default()).unwrap(),
                &params,
            )
            .unwrap()
        })
        .collect()
}

#[test]
fn normalization_on_corpus() {
    for c in corpus(3) {
        let d = run_exact(&c).unwrap();
        assert!((d.probs.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        assert!(d.success_prob > 0.0 && d.success_prob <= 1.0 + 1e-12);
        let sv = StateVector::from_circuit(&c).unwrap();
        assert!((sv.norm() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn zero_noise_density_matches_exact_on_corpus() {
    for c in corpus(5) {
        let e = run_exact(&c).unwrap();
        let d = run_density(&c, &NoiseModel::noiseless()).unwrap();
        assert!((e.success_prob - d.success_prob).abs() < 1e-10);
        for (a, b) in e.probs.iter().zip(&d.probs) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn channel_limit() {
    let tiny = NoiseModel::new(1e-6, 1e-6, 1e-6, 1e-6).unwrap();
    for c in corpus(11) {
        let e = run_exact(&c).unwrap();
        let d = run_density(&c, &tiny).unwrap();
        for (a, b) in e.probs.iter().zip(&d.probs) {
            assert!((a - b).abs() < 1e-4, "{a} vs {b}");
        }
    }
}

/// Every computational-basis outcome of a 3-qubit circuit inside its 4σ
/// binomial band at 10^5 shots, and the largest CDF gap within a
/// Kolmogorov-Smirnov style bound.
#[test]
fn shot_frequencies_converge() {
    let c = Circuit::new(
        3,
        vec![
            Gate::h(0),
            Gate::rx(1, Angle::Constant(0.9)),
            Gate::crz(0, 1, Angle::Constant(1.7)).unwrap(),
            Gate::cx(1, 2).unwrap(),
            Gate::rz(2, Angle::Constant(-0.4)),
            Gate::h(2),
        ],
        Default::default(),
        vec![0, 1, 2],
    )
    .unwrap();
    let exact = run_exact(&c).unwrap();
    let shots = 100_000u64;
    let counts = run_shots(&c, shots, 2024, None).unwrap();
    assert_eq!(counts.shots_kept, shots);
    let n = shots as f64;
    let (mut cdf_e, mut cdf_s, mut ks) = (0.0, 0.0, 0.0f64);
    for (idx, p) in exact.probs.iter().enumerate() {
        let bits = format!("{idx:03b}");
        let f = counts.frequency(&bits).unwrap();
        assert!(
            (f - p).abs() <= 4.0 * (p * (1.0 - p) / n).sqrt() + 1e-12,
            "{bits}: {f} vs {p}"
        );
        cdf_e += p;
        cdf_s += f;
        ks = ks.max((cdf_e - cdf_s).abs());
    }
    // Asymptotic KS critical value at alpha = 1e-4 is about 2.2 / sqrt(n).
    assert!(ks < 2.2 / n.sqrt(), "KS distance {ks}");
}

#[test]
fn noisy_shots_track_density() {
    let noise = NoiseModel::new(0.02, 0.05, 0.1, 0.03).unwrap();
    for c in corpus(43).into_iter().take(3) {
        let d = run_density(&c, &noise).unwrap();
        let counts = run_shots(&c, 200_000, 5, Some(&noise)).unwrap();
        let kept = counts.shots_kept as f64;
        let expect = 200_000.0 * d.success_prob;
        let sd = (200_000.0 * d.success_prob * (1.0 - d.success_prob)).sqrt();
        assert!(
            (kept - expect).abs() <= 4.0 * sd + 1.0,
            "kept {kept} vs {expect}"
        );
        let s = c.sentence_qubits()[0];
        let p = d.marginal_one(s).unwrap();
        let f = counts.marginal_one(s).unwrap();
        assert!(
            (f - p).abs() <= 4.0 * (p * (1.0 - p) / kept).sqrt(),
            "{f} vs {p}"
        );
    }
}

fn min_eigenvalue(rho: &DensityMatrix) -> f64 {
    let dim = rho.dim();
    let m = DMatrix::<C64>::from_fn(dim, dim, |r, c| rho.entry(r, c));
    m.symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn density_invariants_under_random_noisy_evolution() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let mut rho = DensityMatrix::zero(3).unwrap();
        for _ in 0..25 {
            let a = rng.gen_range(0..3);
            let b = (a + rng.gen_range(1..3)) % 3;
            let t = rng.gen_range(-3.0..3.0);
            let g = match rng.gen_range(0..6) {
                0 => Gate::h(a),
                1 => Gate::rx(a, Angle::Constant(t)),
                2 => Gate::rz(a, Angle::Constant(t)),
                3 => Gate::crz(a, b, Angle::Constant(t)).unwrap(),
                4 => Gate::cx(a, b).unwrap(),
                _ => Gate::cswap(a, b, 3 - a - b).unwrap(),
            };
            rho.apply(&g).unwrap();
            let targets = g.targets().to_vec();
            rho.depolarize(&targets, rng.gen_range(0.0..0.3));
        }
        assert!((rho.trace().re - 1.0).abs() < 1e-10);
        assert!(rho.trace().im.abs() < 1e-10);
        assert!(rho.hermiticity_error() < 1e-10);
        assert!(min_eigenvalue(&rho) >= -1e-9);
    }
}

#[test]
fn depolarizing_fixed_point_two_qubits() {
    let mut rho = DensityMatrix::maximally_mixed(2).unwrap();
    let before = rho.clone();
    rho.depolarize(&[0, 1], 0.7);
    rho.depolarize(&[1], 0.3);
    for (a, b) in rho.entries().iter().zip(before.entries()) {
        assert!((a - b).norm() < 1e-12);
    }
}
