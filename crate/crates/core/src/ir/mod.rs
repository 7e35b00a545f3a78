//! The restricted ANF control-flow-graph IR.
//!
//! Every block holds at most one instruction followed by a terminator that
//! passes arguments to the parameters of its successor blocks. Values are in
//! SSA form: each is defined exactly once, either as a block parameter or as
//! an instruction result.

mod interp;
mod parse;
mod print;
mod validate;

use std::collections::BTreeMap;
use std::fmt;

pub use interp::{interpret, Effect, InterpError, InterpResult};
pub use parse::{parse_function, parse_functions, ParseError};
pub use print::{print_function, print_functions};
pub use validate::{validate, Violation, ViolationKind};

/// An SSA value name, rendered `v<index>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ValueId(pub u32);

/// A basic block name, rendered `b<index>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockId(pub u32);

impl fmt::Display for ValueId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "b{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Opcode {
    Iconst(i64),
    Iadd,
    Isub,
    Imul,
    IcmpSlt,
    /// The only impure opcode: records its operand as an observable effect and
    /// yields it unchanged.
    Sideeffect,
}

impl Opcode {
    pub fn arity(self) -> usize {
        match self {
            Opcode::Iconst(_) => 0,
            Opcode::Sideeffect => 1,
            Opcode::Iadd | Opcode::Isub | Opcode::Imul | Opcode::IcmpSlt => 2,
        }
    }

    pub fn is_pure(self) -> bool {
        !matches!(self, Opcode::Sideeffect)
    }

    /// The mnemonic without any immediate.
    pub fn mnemonic(self) -> &'static str {
        match self {
            Opcode::Iconst(_) => "iconst",
            Opcode::Iadd => "iadd",
            Opcode::Isub => "isub",
            Opcode::Imul => "imul",
            Opcode::IcmpSlt => "icmp_slt",
            Opcode::Sideeffect => "sideeffect",
        }
    }

    /// Evaluates a pure binary opcode with wrapping two's-complement semantics.
    pub fn eval_binary(self, a: i64, b: i64) -> Option<i64> {
        match self {
            Opcode::Iadd => Some(a.wrapping_add(b)),
            Opcode::Isub => Some(a.wrapping_sub(b)),
            Opcode::Imul => Some(a.wrapping_mul(b)),
            Opcode::IcmpSlt => Some(i64::from(a < b)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Instruction {
    pub result: ValueId,
    pub opcode: Opcode,
    pub operands: Vec<ValueId>,
}

impl Instruction {
    pub fn new(result: ValueId, opcode: Opcode, operands: Vec<ValueId>) -> Self {
        Instruction {
            result,
            opcode,
            operands,
        }
    }

    pub fn iconst(result: ValueId, imm: i64) -> Self {
        Instruction::new(result, Opcode::Iconst(imm), Vec::new())
    }
}

/// A control transfer to `target`, binding `args` to its parameters.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BlockCall {
    pub target: BlockId,
    pub args: Vec<ValueId>,
}

impl BlockCall {
    pub fn new(target: BlockId, args: Vec<ValueId>) -> Self {
        BlockCall { target, args }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Terminator {
    Jump(BlockCall),
    Brif {
        cond: ValueId,
        then_dest: BlockCall,
        else_dest: BlockCall,
    },
    Ret(Vec<ValueId>),
}

impl Terminator {
    /// Outgoing edges in terminator order (then before else).
    pub fn destinations(&self) -> Vec<&BlockCall> {
        match self {
            Terminator::Jump(call) => vec![call],
            Terminator::Brif {
                then_dest,
                else_dest,
                ..
            } => vec![then_dest, else_dest],
            Terminator::Ret(_) => Vec::new(),
        }
    }

    pub fn destinations_mut(&mut self) -> Vec<&mut BlockCall> {
        match self {
            Terminator::Jump(call) => vec![call],
            Terminator::Brif {
                then_dest,
                else_dest,
                ..
            } => vec![then_dest, else_dest],
            Terminator::Ret(_) => Vec::new(),
        }
    }

    pub fn successors(&self) -> Vec<BlockId> {
        self.destinations().into_iter().map(|c| c.target).collect()
    }

    /// Every value the terminator reads, in textual order.
    pub fn uses(&self) -> Vec<ValueId> {
        match self {
            Terminator::Jump(call) => call.args.clone(),
            Terminator::Brif {
                cond,
                then_dest,
                else_dest,
            } => std::iter::once(*cond)
                .chain(then_dest.args.iter().copied())
                .chain(else_dest.args.iter().copied())
                .collect(),
            Terminator::Ret(values) => values.clone(),
        }
    }

    /// Rewrites every value the terminator reads.
    pub fn map_uses(&mut self, mut f: impl FnMut(ValueId) -> ValueId) {
        match self {
            Terminator::Jump(call) => call.args.iter_mut().for_each(|v| *v = f(*v)),
            Terminator::Brif {
                cond,
                then_dest,
                else_dest,
            } => {
                *cond = f(*cond);
                then_dest.args.iter_mut().for_each(|v| *v = f(*v));
                else_dest.args.iter_mut().for_each(|v| *v = f(*v));
            }
            Terminator::Ret(values) => values.iter_mut().for_each(|v| *v = f(*v)),
        }
    }
}

/// A basic block.
///
/// `instructions` is a vector only so that [`validate`] can report blocks
/// built programmatically with more than one instruction. Parsed and
/// canonical blocks hold zero or one; use [`Block::instruction`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Block {
    pub id: BlockId,
    pub params: Vec<ValueId>,
    pub instructions: Vec<Instruction>,
    pub terminator: Terminator,
}

impl Block {
    pub fn new(
        id: BlockId,
        params: Vec<ValueId>,
        instruction: Option<Instruction>,
        terminator: Terminator,
    ) -> Self {
        Block {
            id,
            params,
            instructions: instruction.into_iter().collect(),
            terminator,
        }
    }

    pub fn instruction(&self) -> Option<&Instruction> {
        self.instructions.first()
    }

    pub fn take_instruction(&mut self) -> Option<Instruction> {
        if self.instructions.is_empty() {
            None
        } else {
            Some(self.instructions.remove(0))
        }
    }

    pub fn successors(&self) -> Vec<BlockId> {
        self.terminator.successors()
    }

    /// Values defined by this block: its parameters, then its instruction results.
    pub fn defs(&self) -> impl Iterator<Item = ValueId> + '_ {
        self.params
            .iter()
            .copied()
            .chain(self.instructions.iter().map(|i| i.result))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Function {
    pub name: String,
    pub params: Vec<ValueId>,
    pub entry: BlockId,
    pub blocks: BTreeMap<BlockId, Block>,
}

impl Function {
    pub fn block(&self, id: BlockId) -> Option<&Block> {
        self.blocks.get(&id)
    }

    /// Largest value index defined or used anywhere, if any.
    pub fn max_value(&self) -> Option<ValueId> {
        let mut max = self.params.iter().copied().max();
        for block in self.blocks.values() {
            let uses = block
                .instructions
                .iter()
                .flat_map(|i| i.operands.iter().copied())
                .chain(block.terminator.uses());
            for v in block.defs().chain(uses) {
                max = max.max(Some(v));
            }
        }
        max
    }
}

/// Read-only control-flow view shared by [`Function`] and canonical sequences.
pub trait Cfg {
    fn entry(&self) -> BlockId;
    fn block(&self, id: BlockId) -> Option<&Block>;
    /// All blocks in ascending id order.
    fn block_ids(&self) -> Vec<BlockId>;
}

impl Cfg for Function {
    fn entry(&self) -> BlockId {
        self.entry
    }

    fn block(&self, id: BlockId) -> Option<&Block> {
        self.blocks.get(&id)
    }

    fn block_ids(&self) -> Vec<BlockId> {
        self.blocks.keys().copied().collect()
    }
}
