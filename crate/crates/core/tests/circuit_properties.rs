use std::collections::BTreeMap;

use proptest::prelude::*;
use qnlp_core::circuit::{
    adjoint, bind, compile_diagram, compose, AnsatzConfig, Circuit, ParameterMap,
};
use qnlp_core::dataset::{default_lexicon, enumerate, Template};
use qnlp_core::embeddings::EmbeddingStore;
use qnlp_core::simulator::run_exact;

fn sentence_circuit(index: usize) -> Circuit {
    let lex = default_lexicon();
    let all = enumerate(&lex, &Template::ALL);
    let s = &all[index % all.len()];
    compile_diagram(&s.parse(&lex).unwrap(), &AnsatzConfig::default()).unwrap()
}

fn params(seed: u64) -> ParameterMap {
    EmbeddingStore::random(&default_lexicon(), seed).params
}

/// Gates only, every qubit reported.
fn unmeasured(c: &Circuit) -> Circuit {
    c.with_measurement(BTreeMap::new(), (0..c.n_qubits()).collect())
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bind_commutes_with_adjoint(index in 0usize..216, seed in any::<u64>()) {
        let c = sentence_circuit(index);
        let p = params(seed);
        prop_assert_eq!(bind(&adjoint(&c), &p).unwrap(), adjoint(&bind(&c, &p).unwrap()));
    }

    #[test]
    fn adjoint_is_an_involution_on_gates(index in 0usize..216) {
        let c = sentence_circuit(index);
        let twice = adjoint(&adjoint(&c));
        prop_assert_eq!(twice.gates(), c.gates());
        prop_assert!(adjoint(&c).post_select().is_empty());
    }

    #[test]
    fn circuit_then_adjoint_is_identity(index in 0usize..216, seed in any::<u64>()) {
        let c = unmeasured(&bind(&sentence_circuit(index), &params(seed)).unwrap());
        let n = c.n_qubits();
        let round = compose(&c, &adjoint(&c), &(0..n).collect::<Vec<_>>()).unwrap();
        let dist = run_exact(&round).unwrap();
        prop_assert!((dist.prob(&"0".repeat(n)) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn free_symbols_are_word_scoped(index in 0usize..216) {
        let c = sentence_circuit(index);
        let lex = default_lexicon();
        for sym in c.free_symbols() {
            let (word, k) = sym.rsplit_once("__").unwrap();
            prop_assert!(lex.get(word).is_some());
            prop_assert!(k.parse::<usize>().unwrap() < 3);
        }
    }
}
