mod common;

use epath::esequence::canonical_hash;
use epath::ir::{parse_function, Terminator};
use epath::rewrite::apply_licm;
use epath::{BlockId, ESequence};
use proptest::prelude::*;

fn running() -> ESequence {
    ESequence::from_function(&parse_function(&common::read_test_file("golden/running.ir")).unwrap())
        .unwrap()
}

#[test]
fn identity_function() {
    let s = ESequence::from_function(&parse_function("func @id(v0) { b0(v0): ret v0 }").unwrap())
        .unwrap();
    assert_eq!(s.len(), 1);
    assert_eq!(s.digest().to_string().len(), 16);
    assert_eq!(canonical_hash(&s), s.digest());
}

#[test]
fn running_example_back_jump_targets_the_header() {
    let s = running();
    let header = s.analyses().loops[0].header;
    assert_eq!(header, BlockId(1));
    let latch = &s.blocks()[4];
    assert!(matches!(&latch.terminator, Terminator::Jump(c) if c.target == header));
}

#[test]
fn running_example_and_hoisted_variant_differ() {
    let s = running();
    let hoisted = apply_licm(&s, &s.analyses()).remove(0);
    assert_ne!(s.digest(), hoisted.digest());
}

#[test]
fn renamed_running_example_has_the_same_digest() {
    let s = running();
    let renamed = "func @other(v10) {
        b7(v10): jump b3(v10)
        b3(v20): jump b9()
        b9(): v5 = iconst 42 jump b2()
        b2(): v6 = iconst 1 jump b5()
        b5(): v1 = iadd v20, v6 jump b3(v1) }";
    let t = ESequence::from_function(&parse_function(renamed).unwrap()).unwrap();
    assert_eq!(s, t);
    assert_eq!(s.digest(), t.digest());
}

#[test]
fn corpus_round_trips() {
    for e in common::corpus() {
        let s = e.seq();
        let back = ESequence::from_function(&s.to_function("x")).unwrap();
        assert_eq!(back, s, "{}", e.name);
        for (i, b) in s.blocks().iter().enumerate() {
            assert_eq!(b.id, BlockId(i as u32));
        }
        assert_eq!(s.canonical_text(), back.canonical_text());
    }
}

#[test]
fn corpus_digests_are_distinct() {
    let digests: std::collections::BTreeSet<_> =
        common::corpus().iter().map(|e| e.seq().digest()).collect();
    assert_eq!(digests.len(), common::corpus().len());
}

#[test]
fn dot_output_names_every_block() {
    let s = running();
    let dot = s.to_dot("loop");
    assert!(dot.starts_with("digraph"));
    for b in s.blocks() {
        assert!(dot.contains(&format!("{}", b.id)), "{dot}");
    }
}

#[test]
fn renaming_maps_annotations() {
    for e in common::corpus() {
        let (s, renaming) = ESequence::canonicalize(&e.function).unwrap();
        assert_eq!(renaming.blocks.len(), s.len(), "{}", e.name);
        assert_eq!(renaming.blocks[&e.function.entry], BlockId(0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn alpha_invariance_on_corpus(idx in 0usize..24, seed in any::<u64>()) {
        let corpus = common::corpus();
        let e = &corpus[idx % corpus.len()];
        let renamed = common::permute_names(&e.function, seed);
        prop_assert_eq!(ESequence::from_function(&renamed).unwrap(), e.seq());
    }

    #[test]
    fn alpha_invariance_on_generated(program in any::<u64>(), seed in any::<u64>()) {
        let f = common::random_function(program, 2);
        let s = ESequence::from_function(&f).unwrap();
        let t = ESequence::from_function(&common::permute_names(&f, seed)).unwrap();
        prop_assert_eq!(s.digest(), t.digest());
        prop_assert_eq!(&s, &t);
        prop_assert_eq!(ESequence::from_function(&s.to_function("g")).unwrap(), s);
    }
}
