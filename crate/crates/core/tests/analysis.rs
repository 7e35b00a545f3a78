mod common;

use std::collections::BTreeSet;

use epath::analysis::{
    def_use, dominates, dominators, find_back_edges, loops, natural_loop, predecessors,
    reverse_postorder, DefSite,
};
use epath::ir::{parse_function, Cfg};
use epath::{Analyses, BlockId};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn b(i: u32) -> BlockId {
    BlockId(i)
}

#[test]
fn diamond_order_and_dominators() {
    let f = parse_function(&common::read_test_file("corpus/d01_abs.ir")).unwrap();
    assert_eq!(reverse_postorder(&f), vec![b(0), b(1), b(2), b(3)]);
    let idom = dominators(&f);
    assert_eq!(idom[&b(0)], b(0));
    assert_eq!(idom[&b(2)], b(1));
    assert_eq!(idom[&b(3)], b(1));
    assert_eq!(predecessors(&f)[&b(3)], vec![b(1), b(2)]);
}

#[test]
fn running_example_loop() {
    let f = parse_function(&common::read_test_file("golden/running.ir")).unwrap();
    assert_eq!(find_back_edges(&f).unwrap(), BTreeSet::from([(b(4), b(1))]));
    let ls = loops(&f).unwrap();
    assert_eq!(ls.len(), 1);
    assert_eq!(ls[0].header, b(1));
    assert_eq!(ls[0].body, BTreeSet::from([b(1), b(2), b(3), b(4)]));
    assert_eq!(ls[0].header_params, vec![epath::ValueId(1)]);
    assert_eq!(natural_loop(&f, (b(4), b(1))), ls[0]);
}

#[test]
fn nested_loops_come_outermost_first() {
    let f = parse_function(&common::read_test_file("corpus/n01_nested.ir")).unwrap();
    let ls = loops(&f).unwrap();
    assert_eq!(
        ls.iter().map(|l| l.header).collect::<Vec<_>>(),
        vec![b(1), b(3)]
    );
    assert!(ls[1].body.is_subset(&ls[0].body));
    let depths = Analyses::compute(&f).unwrap().loop_depths();
    assert_eq!(depths[&b(4)], 2);
    assert_eq!(depths[&b(7)], 1);
    assert_eq!(depths.get(&b(9)).copied().unwrap_or(0), 0);
}

#[test]
fn irreducible_two_entry_cycle_is_rejected() {
    let f = parse_function(&common::read_test_file("inputs/irreducible.ir")).unwrap();
    let err = loops(&f).unwrap_err();
    let cycle = BTreeSet::from([b(1), b(2)]);
    assert!(
        cycle.contains(&err.from) && cycle.contains(&err.to),
        "{err}"
    );
    assert!(Analyses::compute(&f).is_err());
}

#[test]
fn def_use_chains_cover_every_use() {
    for e in common::corpus() {
        let chains = def_use(&e.function);
        for (id, block) in &e.function.blocks {
            for inst in &block.instructions {
                assert!(
                    matches!(chains[&inst.result].def, DefSite::Instruction { block } if block == *id)
                );
                for v in &inst.operands {
                    assert!(
                        chains[v].uses.iter().any(|u| u.block() == *id),
                        "{}",
                        e.name
                    );
                }
            }
            for v in block.terminator.uses() {
                assert!(
                    chains[&v].uses.iter().any(|u| u.block() == *id),
                    "{}",
                    e.name
                );
            }
        }
    }
}

#[test]
fn corpus_loops_match_the_definition() {
    for e in common::corpus() {
        let found: std::collections::BTreeMap<_, _> = loops(&e.function)
            .unwrap()
            .into_iter()
            .map(|l| (l.header, l.body))
            .collect();
        assert_eq!(
            found,
            common::brute_natural_loops(&e.function),
            "{}",
            e.name
        );
        assert_eq!(found, e.annotated_loops(), "{}", e.name);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn dominators_match_disconnection_oracle(seed in any::<u64>(), n in 1u32..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = common::random_cfg(&mut rng, n);
        let succ = common::successor_map(&f);
        let idom = dominators(&f);
        for x in f.block_ids() {
            for y in f.block_ids() {
                prop_assert_eq!(
                    dominates(&idom, x, y),
                    common::brute_dominates(&succ, f.entry(), x, y),
                    "{} dom {}", x, y
                );
            }
        }
    }

    #[test]
    fn rpo_visits_reachable_blocks_once(seed in any::<u64>(), n in 1u32..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = common::random_cfg(&mut rng, n);
        let rpo = reverse_postorder(&f);
        let set: BTreeSet<_> = rpo.iter().copied().collect();
        prop_assert_eq!(set.len(), rpo.len());
        prop_assert_eq!(set, common::reachable_avoiding(&common::successor_map(&f), f.entry(), None));
        prop_assert_eq!(rpo[0], f.entry());
    }

    #[test]
    fn generated_programs_have_natural_loops(seed in any::<u64>()) {
        let f = common::random_function(seed, 2);
        let found: std::collections::BTreeMap<_, _> =
            loops(&f).unwrap().into_iter().map(|l| (l.header, l.body)).collect();
        prop_assert_eq!(found, common::brute_natural_loops(&f));
    }
}
