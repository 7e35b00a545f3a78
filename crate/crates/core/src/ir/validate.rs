use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{BlockId, Function, Opcode, Terminator, ValueId};
use crate::analysis::{dominates, dominators, predecessors, reverse_postorder};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    MissingEntry,
    EntryParams,
    BlockIdMismatch(BlockId),
    MultipleInstructions(usize),
    OperandArity {
        opcode: Opcode,
        expected: usize,
        found: usize,
    },
    UnknownTarget(BlockId),
    TerminatorArity {
        target: BlockId,
        expected: usize,
        found: usize,
    },
    BrifTargetsConflict,
    EntryHasPredecessors,
    Unreachable,
    DuplicateDefinition(ValueId),
    UndefinedValue(ValueId),
    UseNotDominated(ValueId),
}

/// One broken invariant and where it was found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub block: Option<BlockId>,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(b) = self.block {
            write!(f, "{b}: ")?;
        }
        match &self.kind {
            ViolationKind::MissingEntry => write!(f, "entry block does not exist"),
            ViolationKind::EntryParams => {
                write!(f, "function params differ from entry block params")
            }
            ViolationKind::BlockIdMismatch(key) => write!(f, "block stored under key {key}"),
            ViolationKind::MultipleInstructions(n) => {
                write!(f, "ANF: >1 instruction ({n} instructions)")
            }
            ViolationKind::OperandArity {
                opcode,
                expected,
                found,
            } => write!(
                f,
                "operand arity: {} takes {expected}, found {found}",
                opcode.mnemonic()
            ),
            ViolationKind::UnknownTarget(t) => write!(f, "terminator targets unknown block {t}"),
            ViolationKind::TerminatorArity {
                target,
                expected,
                found,
            } => write!(
                f,
                "terminator arity: {target} takes {expected} args, found {found}"
            ),
            ViolationKind::BrifTargetsConflict => {
                write!(f, "brif targets the same block with different args")
            }
            ViolationKind::EntryHasPredecessors => write!(f, "entry block has predecessors"),
            ViolationKind::Unreachable => write!(f, "block unreachable from entry"),
            ViolationKind::DuplicateDefinition(v) => write!(f, "duplicate definition of {v}"),
            ViolationKind::UndefinedValue(v) => write!(f, "use of undefined value {v}"),
            ViolationKind::UseNotDominated(v) => {
                write!(f, "use of {v} is not dominated by its definition")
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Slot {
    Param,
    Result,
}

/// Checks every structural invariant of `f`. An empty list means `f` is valid.
pub fn validate(f: &Function) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |block: Option<BlockId>, kind| out.push(Violation { block, kind });

    match f.blocks.get(&f.entry) {
        None => push(None, ViolationKind::MissingEntry),
        Some(entry) if entry.params != f.params => push(Some(f.entry), ViolationKind::EntryParams),
        Some(_) => {}
    }

    let mut defs: BTreeMap<ValueId, (BlockId, Slot)> = BTreeMap::new();
    for (&key, block) in &f.blocks {
        let id = block.id;
        if key != id {
            push(Some(id), ViolationKind::BlockIdMismatch(key));
        }
        if block.instructions.len() > 1 {
            push(
                Some(id),
                ViolationKind::MultipleInstructions(block.instructions.len()),
            );
        }
        for inst in &block.instructions {
            let expected = inst.opcode.arity();
            if inst.operands.len() != expected {
                push(
                    Some(id),
                    ViolationKind::OperandArity {
                        opcode: inst.opcode,
                        expected,
                        found: inst.operands.len(),
                    },
                );
            }
        }
        for dest in block.terminator.destinations() {
            match f.blocks.get(&dest.target) {
                None => push(Some(id), ViolationKind::UnknownTarget(dest.target)),
                Some(target) if target.params.len() != dest.args.len() => push(
                    Some(id),
                    ViolationKind::TerminatorArity {
                        target: dest.target,
                        expected: target.params.len(),
                        found: dest.args.len(),
                    },
                ),
                Some(_) => {}
            }
        }
        if let Terminator::Brif {
            then_dest,
            else_dest,
            ..
        } = &block.terminator
        {
            if then_dest.target == else_dest.target && then_dest.args != else_dest.args {
                push(Some(id), ViolationKind::BrifTargetsConflict);
            }
        }
        let slots = block
            .params
            .iter()
            .map(|&v| (v, Slot::Param))
            .chain(block.instructions.iter().map(|i| (i.result, Slot::Result)));
        for (v, slot) in slots {
            if defs.insert(v, (id, slot)).is_some() {
                push(Some(id), ViolationKind::DuplicateDefinition(v));
            }
        }
    }

    if !f.blocks.contains_key(&f.entry) {
        return out;
    }

    let preds = predecessors(f);
    if preds.get(&f.entry).is_some_and(|p| !p.is_empty()) {
        push(Some(f.entry), ViolationKind::EntryHasPredecessors);
    }
    let reachable: BTreeSet<BlockId> = reverse_postorder(f).into_iter().collect();
    for &id in f.blocks.keys() {
        if !reachable.contains(&id) {
            push(Some(id), ViolationKind::Unreachable);
        }
    }

    let idom = dominators(f);
    for id in &reachable {
        let block = &f.blocks[id];
        // Instruction operands must come from this block's params or a strict dominator.
        let inst_uses = block
            .instructions
            .iter()
            .flat_map(|i| i.operands.iter().map(|&v| (v, false)));
        let term_uses = block.terminator.uses().into_iter().map(|v| (v, true));
        for (v, in_terminator) in inst_uses.chain(term_uses) {
            match defs.get(&v) {
                None => push(Some(*id), ViolationKind::UndefinedValue(v)),
                Some(&(def_block, slot)) => {
                    let ok = if def_block == *id {
                        slot == Slot::Param || in_terminator
                    } else {
                        reachable.contains(&def_block) && dominates(&idom, def_block, *id)
                    };
                    if !ok {
                        push(Some(*id), ViolationKind::UseNotDominated(v));
                    }
                }
            }
        }
    }
    out
}
