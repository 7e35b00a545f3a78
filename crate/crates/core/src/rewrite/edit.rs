//! Removal of blocks that a rewrite has emptied.

use std::collections::{BTreeMap, BTreeSet};

use crate::ir::{BlockId, Function, Terminator, ValueId};

fn references(f: &Function, target: BlockId) -> usize {
    f.blocks
        .values()
        .flat_map(|b| b.terminator.destinations())
        .filter(|c| c.target == target)
        .count()
}

/// Would redirecting every edge into `from` towards `to(args)` produce a brif
/// whose two arms reach one block with different arguments?
fn redirect_conflicts(f: &Function, from: BlockId, to: BlockId, args: &[ValueId]) -> bool {
    f.blocks.values().any(|b| match &b.terminator {
        Terminator::Brif {
            then_dest,
            else_dest,
            ..
        } => {
            let resolve = |c: &crate::ir::BlockCall| {
                if c.target == from {
                    (to, args.to_vec())
                } else {
                    (c.target, c.args.clone())
                }
            };
            let (t, ta) = resolve(then_dest);
            let (e, ea) = resolve(else_dest);
            t == e && ta != ea
        }
        _ => false,
    })
}

/// Splices out blocks in `emptied` that no longer do anything.
///
/// A parameterless empty block ending in `jump` is bypassed by retargeting
/// its predecessors. An empty entry block is merged with its jump target when
/// the target has no other predecessor. Blocks outside `emptied` are never
/// removed, so the rest of the region keeps its shape.
pub(crate) fn straighten(f: &mut Function, emptied: &BTreeSet<BlockId>) {
    let mut candidates = emptied.clone();
    loop {
        let mut progressed = false;
        for b in candidates.clone() {
            let Some(block) = f.blocks.get(&b) else {
                candidates.remove(&b);
                continue;
            };
            if !block.instructions.is_empty() {
                continue;
            }
            let Terminator::Jump(call) = &block.terminator else {
                continue;
            };
            let call = call.clone();
            if call.target == b {
                continue;
            }

            if b == f.entry {
                let t = call.target;
                if references(f, t) != 1 {
                    continue;
                }
                let target = f.blocks.remove(&t).expect("valid target");
                let subst: BTreeMap<ValueId, ValueId> = target
                    .params
                    .iter()
                    .copied()
                    .zip(call.args.iter().copied())
                    .collect();
                let entry = f.blocks.get_mut(&b).expect("entry");
                entry.instructions = target.instructions;
                entry.terminator = target.terminator;
                let rename = |v: ValueId| subst.get(&v).copied().unwrap_or(v);
                for block in f.blocks.values_mut() {
                    for inst in &mut block.instructions {
                        inst.operands.iter_mut().for_each(|v| *v = rename(*v));
                    }
                    block.terminator.map_uses(rename);
                }
                // The merged entry now carries the target's content; it stays
                // a candidate only if the target was one.
                if !candidates.remove(&t) {
                    candidates.remove(&b);
                }
                progressed = true;
            } else {
                if !block.params.is_empty() || redirect_conflicts(f, b, call.target, &call.args) {
                    continue;
                }
                f.blocks.remove(&b);
                for other in f.blocks.values_mut() {
                    for dest in other.terminator.destinations_mut() {
                        if dest.target == b {
                            *dest = call.clone();
                        }
                    }
                }
                candidates.remove(&b);
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
}
