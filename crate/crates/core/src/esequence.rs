//! Canonical, immutable control-flow regions: the unit of congruence.
//!
//! A sequence is built from a function by ordering its blocks in reverse
//! postorder and renumbering blocks and values in traversal order. Two
//! functions that differ only in their names for blocks and values therefore
//! produce identical sequences with identical digests.

use std::collections::BTreeMap;
use std::fmt::{self, Write};

use sha2::{Digest as _, Sha256};
use thiserror::Error;

use crate::analysis::{find_back_edges, reverse_postorder, Analyses, IrreducibleError};
use crate::ir::{
    print_function, validate, Block, BlockCall, BlockId, Cfg, Function, Instruction, Opcode,
    Terminator, ValueId, Violation,
};

/// Structural hash of a canonical sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Digest(pub u64);

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SequenceError {
    #[error("invalid function: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error(transparent)]
    Irreducible(#[from] IrreducibleError),
}

/// How the names of the source function map onto canonical names.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Renaming {
    pub blocks: BTreeMap<BlockId, BlockId>,
    pub values: BTreeMap<ValueId, ValueId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ESequence {
    params: Vec<ValueId>,
    /// `blocks[i].id == BlockId(i)`; `blocks[0]` is the entry.
    blocks: Vec<Block>,
    digest: Digest,
}

impl ESequence {
    pub fn from_function(f: &Function) -> Result<Self, SequenceError> {
        Self::canonicalize(f).map(|(s, _)| s)
    }

    /// Like [`ESequence::from_function`], also returning the renaming applied.
    pub fn canonicalize(f: &Function) -> Result<(Self, Renaming), SequenceError> {
        let violations = validate(f);
        if !violations.is_empty() {
            return Err(SequenceError::Invalid(violations));
        }
        find_back_edges(f)?;

        let order = reverse_postorder(f);
        let mut renaming = Renaming::default();
        for (i, &b) in order.iter().enumerate() {
            renaming.blocks.insert(b, BlockId(i as u32));
        }
        let mut next = 0u32;
        let mut fresh = |v: ValueId, values: &mut BTreeMap<ValueId, ValueId>| {
            values.insert(v, ValueId(next));
            next += 1;
        };
        for &b in &order {
            for v in f.blocks[&b].defs() {
                fresh(v, &mut renaming.values);
            }
        }

        let value = |v: &ValueId| renaming.values[v];
        let call = |c: &BlockCall| BlockCall {
            target: renaming.blocks[&c.target],
            args: c.args.iter().map(value).collect(),
        };
        let blocks = order
            .iter()
            .map(|b| {
                let src = &f.blocks[b];
                Block {
                    id: renaming.blocks[b],
                    params: src.params.iter().map(value).collect(),
                    instructions: src
                        .instructions
                        .iter()
                        .map(|i| Instruction {
                            result: value(&i.result),
                            opcode: i.opcode,
                            operands: i.operands.iter().map(value).collect(),
                        })
                        .collect(),
                    terminator: match &src.terminator {
                        Terminator::Jump(c) => Terminator::Jump(call(c)),
                        Terminator::Brif {
                            cond,
                            then_dest,
                            else_dest,
                        } => Terminator::Brif {
                            cond: value(cond),
                            then_dest: call(then_dest),
                            else_dest: call(else_dest),
                        },
                        Terminator::Ret(vs) => Terminator::Ret(vs.iter().map(value).collect()),
                    },
                }
            })
            .collect::<Vec<_>>();
        let params = blocks[0].params.clone();
        let digest = hash_blocks(params.len(), &blocks);
        Ok((
            ESequence {
                params,
                blocks,
                digest,
            },
            renaming,
        ))
    }

    pub fn to_function(&self, name: &str) -> Function {
        Function {
            name: name.to_string(),
            params: self.params.clone(),
            entry: BlockId(0),
            blocks: self.blocks.iter().map(|b| (b.id, b.clone())).collect(),
        }
    }

    pub fn digest(&self) -> Digest {
        self.digest
    }

    pub fn params(&self) -> &[ValueId] {
        &self.params
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// One past the largest canonical value index.
    pub fn value_count(&self) -> u32 {
        self.blocks.iter().map(|b| b.defs().count() as u32).sum()
    }

    /// Analyses of the region. Canonical sequences are reducible by construction.
    pub fn analyses(&self) -> Analyses {
        Analyses::compute(self).expect("canonical sequences are reducible")
    }

    /// The printed form under a fixed function name; used as a deterministic
    /// tie-break between sequences.
    pub fn canonical_text(&self) -> String {
        print_function(&self.to_function("seq"))
    }

    /// Graphviz rendering: one node per block, brif edges labeled by polarity.
    pub fn to_dot(&self, name: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "digraph \"{name}\" {{");
        let _ = writeln!(out, "  node [shape=box, fontname=monospace];");
        for block in &self.blocks {
            let mut label = format!("{}({})", block.id, join(&block.params));
            if let Some(inst) = block.instruction() {
                let _ = write!(label, "\\l{inst}");
            }
            if let Terminator::Ret(vs) = &block.terminator {
                let _ = write!(label, "\\lret {}", join(vs));
            }
            let _ = writeln!(out, "  {} [label=\"{}\\l\"];", block.id, label.trim_end());
        }
        for block in &self.blocks {
            match &block.terminator {
                Terminator::Jump(c) => {
                    let _ = writeln!(out, "  {} -> {};", block.id, c.target);
                }
                Terminator::Brif {
                    then_dest,
                    else_dest,
                    ..
                } => {
                    let _ = writeln!(out, "  {} -> {} [label=\"T\"];", block.id, then_dest.target);
                    let _ = writeln!(out, "  {} -> {} [label=\"F\"];", block.id, else_dest.target);
                }
                Terminator::Ret(_) => {}
            }
        }
        out.push_str("}\n");
        out
    }
}

fn join(values: &[ValueId]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

impl Cfg for ESequence {
    fn entry(&self) -> BlockId {
        BlockId(0)
    }

    fn block(&self, id: BlockId) -> Option<&Block> {
        self.blocks.get(id.0 as usize)
    }

    fn block_ids(&self) -> Vec<BlockId> {
        self.blocks.iter().map(|b| b.id).collect()
    }
}

fn put_u32(bytes: &mut Vec<u8>, x: u32) {
    bytes.extend_from_slice(&x.to_le_bytes());
}

fn put_values(bytes: &mut Vec<u8>, vs: &[ValueId]) {
    put_u32(bytes, vs.len() as u32);
    for v in vs {
        put_u32(bytes, v.0);
    }
}

fn put_call(bytes: &mut Vec<u8>, c: &BlockCall) {
    put_u32(bytes, c.target.0);
    put_values(bytes, &c.args);
}

/// Serializes the structure of a canonical block list; two canonical
/// sequences are structurally equal iff their encodings are equal.
fn encode(param_count: usize, blocks: &[Block]) -> Vec<u8> {
    let mut bytes = Vec::new();
    put_u32(&mut bytes, param_count as u32);
    put_u32(&mut bytes, blocks.len() as u32);
    for block in blocks {
        put_values(&mut bytes, &block.params);
        put_u32(&mut bytes, block.instructions.len() as u32);
        for inst in &block.instructions {
            let tag = match inst.opcode {
                Opcode::Iconst(_) => 0u8,
                Opcode::Iadd => 1,
                Opcode::Isub => 2,
                Opcode::Imul => 3,
                Opcode::IcmpSlt => 4,
                Opcode::Sideeffect => 5,
            };
            bytes.push(tag);
            if let Opcode::Iconst(imm) = inst.opcode {
                bytes.extend_from_slice(&imm.to_le_bytes());
            }
            put_u32(&mut bytes, inst.result.0);
            put_values(&mut bytes, &inst.operands);
        }
        match &block.terminator {
            Terminator::Jump(c) => {
                bytes.push(0);
                put_call(&mut bytes, c);
            }
            Terminator::Brif {
                cond,
                then_dest,
                else_dest,
            } => {
                bytes.push(1);
                put_u32(&mut bytes, cond.0);
                put_call(&mut bytes, then_dest);
                put_call(&mut bytes, else_dest);
            }
            Terminator::Ret(vs) => {
                bytes.push(2);
                put_values(&mut bytes, vs);
            }
        }
    }
    bytes
}

fn hash_blocks(param_count: usize, blocks: &[Block]) -> Digest {
    let hash = Sha256::digest(encode(param_count, blocks));
    let mut head = [0u8; 8];
    head.copy_from_slice(&hash[..8]);
    Digest(u64::from_be_bytes(head))
}

/// Recomputes the structural digest of `s` from its blocks.
pub fn canonical_hash(s: &ESequence) -> Digest {
    hash_blocks(s.params.len(), &s.blocks)
}
