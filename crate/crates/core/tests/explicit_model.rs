use std::collections::BTreeMap;

use qnlp_core::circuit::{compile_diagram, Angle, AnsatzConfig, Circuit, Gate, ParameterMap};
use qnlp_core::dataset::default_lexicon;
use qnlp_core::embeddings::{predict_explicit, EmbeddingStore};
use qnlp_core::pregroup::parse_sentence;
use qnlp_core::simulator::{run_exact, Backend, StateVector};

fn man_prepares_meal() -> Circuit {
    let lex = default_lexicon();
    compile_diagram(
        &parse_sentence(&["man", "prepares", "meal"], &lex).unwrap(),
        &AnsatzConfig::default(),
    )
    .unwrap()
}

/// With every angle zero the nouns are |0>, the verb wires are |+++>, and
/// each cup passes with probability 1/4 leaving the sentence wire in |+>.
#[test]
fn zero_parameters_match_hand_built_circuit() {
    let c = man_prepares_meal();
    let zeros: ParameterMap = c.free_symbols().into_iter().map(|s| (s, 0.0)).collect();
    let p = predict_explicit(&c, &zeros, &Backend::Exact, 0, 1e-9).unwrap();

    let hand = Circuit::new(
        5,
        vec![
            Gate::h(1),
            Gate::h(2),
            Gate::h(3),
            Gate::crz(1, 2, Angle::Constant(0.0)).unwrap(),
            Gate::crz(2, 3, Angle::Constant(0.0)).unwrap(),
            Gate::cx(0, 1).unwrap(),
            Gate::h(0),
            Gate::cx(3, 4).unwrap(),
            Gate::h(3),
        ],
        [(0, 0), (1, 0), (3, 0), (4, 0)]
            .into_iter()
            .collect::<BTreeMap<_, _>>(),
        vec![2],
    )
    .unwrap();
    let (state, success) = StateVector::from_circuit(&hand)
        .unwrap()
        .post_select(hand.post_select())
        .unwrap();
    assert!((success - 1.0 / 16.0).abs() < 1e-12);
    let oracle = state.amplitudes()[1].norm_sqr();
    assert!((oracle - 0.5).abs() < 1e-12);
    assert!((p - oracle).abs() < 1e-12, "{p} vs {oracle}");
}

#[test]
fn certain_outcome_is_clamped() {
    let c = Circuit::new(
        1,
        vec![Gate::rx(0, Angle::symbol("w__0"))],
        BTreeMap::new(),
        vec![0],
    )
    .unwrap();
    let params: ParameterMap = [("w__0".to_string(), std::f64::consts::PI)]
        .into_iter()
        .collect();
    let p = predict_explicit(&c, &params, &Backend::Exact, 0, 1e-9).unwrap();
    assert_eq!(p, 1.0 - 1e-9);
}

#[test]
fn shots_agree_with_exact_within_binomial_bound() {
    let lex = default_lexicon();
    let c = man_prepares_meal();
    for seed in 0..10u64 {
        let params = EmbeddingStore::random(&lex, seed).params;
        let exact = predict_explicit(&c, &params, &Backend::Exact, 0, 1e-9).unwrap();
        let bound = qnlp_core::circuit::bind(&c, &params).unwrap();
        let success = run_exact(&bound).unwrap().success_prob;
        let backend = Backend::Shots {
            shots: 8192,
            noise: None,
        };
        let est = backend.run(&bound, seed).unwrap();
        let kept = est.shots_kept.unwrap() as f64;
        let shot = predict_explicit(&c, &params, &backend, seed, 1e-9).unwrap();
        let sigma = (exact * (1.0 - exact) / kept).sqrt();
        assert!(
            (shot - exact).abs() <= 4.0 * sigma + 1e-9,
            "seed {seed}: {shot} vs {exact}, kept {kept} (success {success:.4})"
        );
    }
}
