//! Constant folding of `op(iconst a, iconst b)`.

use std::collections::BTreeSet;

use super::edit::straighten;
use super::pattern::{match_expression, Bound, ExprPattern, ImmPattern};
use crate::analysis::{def_use, Analyses};
use crate::esequence::ESequence;
use crate::ir::{BlockId, Instruction, Opcode, ValueId};

const FOLDABLE: [Opcode; 4] = [Opcode::Iadd, Opcode::Isub, Opcode::Imul, Opcode::IcmpSlt];

/// Wrapping evaluation of a foldable opcode; `icmp_slt` yields 1 or 0.
pub fn fold(op: Opcode, a: i64, b: i64) -> Option<i64> {
    op.eval_binary(a, b)
}

fn pattern(op: Opcode) -> ExprPattern {
    ExprPattern::op(
        op,
        vec![
            ExprPattern::iconst(ImmPattern::Bind("a".into())),
            ExprPattern::iconst(ImmPattern::Bind("b".into())),
        ],
    )
}

fn imm(b: Option<&Bound>) -> i64 {
    match b {
        Some(Bound::Imm(k)) => *k,
        _ => unreachable!("constant leaves bind immediates"),
    }
}

/// One variant per foldable site. Feeder constants left without uses are
/// removed along with their blocks where the chain allows it.
pub fn apply_const_fold(s: &ESequence, analyses: &Analyses) -> Vec<ESequence> {
    let mut sites: Vec<(usize, Opcode, ValueId, i64, i64)> = Vec::new();
    for op in FOLDABLE {
        for m in match_expression(&pattern(op), s) {
            let block = analyses.def_block(m.root).expect("root is defined");
            sites.push((
                block.0 as usize,
                op,
                m.root,
                imm(m.bindings.get("a")),
                imm(m.bindings.get("b")),
            ));
        }
    }
    sites.sort_by_key(|site| site.0);

    sites
        .into_iter()
        .map(|(block, op, root, a, b)| {
            let mut f = s.to_function("constfold");
            let block = BlockId(block as u32);
            let target = f.blocks.get_mut(&block).expect("root block");
            let feeders: Vec<ValueId> = target.instructions[0].operands.clone();
            target.instructions[0] =
                Instruction::iconst(root, fold(op, a, b).expect("foldable opcode"));

            let chains = def_use(&f);
            let mut emptied = BTreeSet::new();
            for v in feeders {
                let du = &chains[&v];
                if du.uses.is_empty() && emptied.insert(du.def.block()) {
                    f.blocks
                        .get_mut(&du.def.block())
                        .expect("feeder block")
                        .take_instruction();
                }
            }
            straighten(&mut f, &emptied);
            ESequence::from_function(&f).expect("folding preserves validity")
        })
        .collect()
}
