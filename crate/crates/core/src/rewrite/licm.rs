//! Loop-invariant code motion as a non-destructive rewrite.
//!
//! For a loop `loop(I, B_inv ∪ B_var)` the rule produces
//! `B_inv; loop(I, B_var)`: the invariant instructions move, in their
//! original order, into a fresh preheader chain that every loop entry passes
//! through, and the blocks that held them are spliced out of the loop.

use std::collections::BTreeSet;

use super::edit::straighten;
use crate::analysis::{Analyses, DefSite, LoopRegion};
use crate::esequence::ESequence;
use crate::ir::{Block, BlockCall, BlockId, Cfg, Terminator, ValueId};

/// A loop body partitioned into invariant and loop-dependent blocks. Blocks
/// without an instruction belong to neither list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LicmSplit {
    pub region: LoopRegion,
    /// Reverse-postorder order, which is also a valid dependency order.
    pub invariant_blocks: Vec<BlockId>,
    pub variant_blocks: Vec<BlockId>,
}

/// The natural loops of `s`, outermost first.
pub fn match_loops(_s: &ESequence, analyses: &Analyses) -> Vec<LoopRegion> {
    analyses.loops.clone()
}

/// Computes the largest invariant set: a block is invariant when its
/// instruction is pure and each operand is defined outside the loop or by a
/// block already known to be invariant.
pub fn classify_invariance(region: &LoopRegion, s: &ESequence, analyses: &Analyses) -> LicmSplit {
    let candidates: Vec<BlockId> = analyses
        .rpo
        .iter()
        .copied()
        .filter(|b| {
            region.contains(*b) && s.block(*b).is_some_and(|blk| blk.instruction().is_some())
        })
        .collect();

    let mut invariant: BTreeSet<BlockId> = BTreeSet::new();
    let available = |v: ValueId, invariant: &BTreeSet<BlockId>| match analyses.def_use.get(&v) {
        Some(du) => match du.def {
            DefSite::Param { block, .. } => !region.contains(block),
            DefSite::Instruction { block } => !region.contains(block) || invariant.contains(&block),
        },
        None => false,
    };
    loop {
        let mut changed = false;
        for &b in &candidates {
            if invariant.contains(&b) {
                continue;
            }
            let inst = s
                .block(b)
                .and_then(|blk| blk.instruction())
                .expect("candidate");
            if inst.opcode.is_pure() && inst.operands.iter().all(|&v| available(v, &invariant)) {
                invariant.insert(b);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let (invariant_blocks, variant_blocks) =
        candidates.into_iter().partition(|b| invariant.contains(b));
    LicmSplit {
        region: region.clone(),
        invariant_blocks,
        variant_blocks,
    }
}

fn hoist(s: &ESequence, analyses: &Analyses, split: &LicmSplit) -> ESequence {
    let region = &split.region;
    let header = region.header;
    let mut f = s.to_function("licm");
    let mut next_block = s.len() as u32;
    let mut next_value = s.value_count();

    let hoisted: Vec<_> = split
        .invariant_blocks
        .iter()
        .map(|b| {
            f.blocks
                .get_mut(b)
                .and_then(|blk| blk.take_instruction())
                .expect("invariant block holds an instruction")
        })
        .collect();

    let outside_preds: Vec<BlockId> = analyses.preds[&header]
        .iter()
        .copied()
        .filter(|p| !region.contains(*p))
        .collect();
    let chain: Vec<BlockId> = (0..hoisted.len())
        .map(|_| {
            next_block += 1;
            BlockId(next_block - 1)
        })
        .collect();

    // With a single entry edge the preheader can forward that edge's
    // arguments directly; otherwise it takes the header's parameters so every
    // entry edge can pass its own.
    let (chain_params, exit_args, entry_call): (Vec<ValueId>, Vec<ValueId>, Option<BlockCall>) =
        if let [pred] = outside_preds[..] {
            let args = f.blocks[&pred]
                .terminator
                .destinations()
                .into_iter()
                .find(|c| c.target == header)
                .map(|c| c.args.clone())
                .expect("predecessor jumps to header");
            (Vec::new(), args, Some(BlockCall::new(chain[0], Vec::new())))
        } else {
            let params: Vec<ValueId> = region
                .header_params
                .iter()
                .map(|_| {
                    next_value += 1;
                    ValueId(next_value - 1)
                })
                .collect();
            (params.clone(), params, None)
        };

    for pred in &outside_preds {
        let block = f.blocks.get_mut(pred).expect("predecessor exists");
        for dest in block.terminator.destinations_mut() {
            if dest.target == header {
                *dest = match &entry_call {
                    Some(call) => call.clone(),
                    None => BlockCall::new(chain[0], dest.args.clone()),
                };
            }
        }
    }

    for (i, inst) in hoisted.into_iter().enumerate() {
        let terminator = match chain.get(i + 1) {
            Some(&next) => Terminator::Jump(BlockCall::new(next, Vec::new())),
            None => Terminator::Jump(BlockCall::new(header, exit_args.clone())),
        };
        let params = if i == 0 {
            chain_params.clone()
        } else {
            Vec::new()
        };
        f.blocks.insert(
            chain[i],
            Block::new(chain[i], params, Some(inst), terminator),
        );
    }

    let emptied: BTreeSet<BlockId> = split.invariant_blocks.iter().copied().collect();
    straighten(&mut f, &emptied);
    ESequence::from_function(&f).expect("hoisting preserves validity and reducibility")
}

/// One hoisted variant per loop that has invariant blocks.
pub fn apply_licm(s: &ESequence, analyses: &Analyses) -> Vec<ESequence> {
    match_loops(s, analyses)
        .iter()
        .map(|region| classify_invariance(region, s, analyses))
        .filter(|split| !split.invariant_blocks.is_empty())
        .map(|split| hoist(s, analyses, &split))
        .collect()
}
