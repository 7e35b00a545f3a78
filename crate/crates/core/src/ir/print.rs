use std::fmt::{self, Write};

use super::{Block, BlockCall, Function, Instruction, Opcode, Terminator, ValueId};

fn list(values: &[ValueId]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Opcode::Iconst(imm) => write!(f, "iconst {imm}"),
            other => f.write_str(other.mnemonic()),
        }
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.result, self.opcode)?;
        if !self.operands.is_empty() {
            write!(f, " {}", list(&self.operands))?;
        }
        Ok(())
    }
}

impl fmt::Display for BlockCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.target, list(&self.args))
    }
}

impl fmt::Display for Terminator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Terminator::Jump(call) => write!(f, "jump {call}"),
            Terminator::Brif {
                cond,
                then_dest,
                else_dest,
            } => write!(f, "brif {cond}, {then_dest}, {else_dest}"),
            Terminator::Ret(values) if values.is_empty() => f.write_str("ret"),
            Terminator::Ret(values) => write!(f, "ret {}", list(values)),
        }
    }
}

fn write_block(out: &mut String, block: &Block) {
    let _ = writeln!(out, "{}({}):", block.id, list(&block.params));
    for inst in &block.instructions {
        let _ = writeln!(out, "  {inst}");
    }
    let _ = writeln!(out, "  {}", block.terminator);
}

/// Canonical text: entry block first, then the remaining blocks in ascending id.
pub fn print_function(f: &Function) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "func @{}({}) {{", f.name, list(&f.params));
    if let Some(entry) = f.blocks.get(&f.entry) {
        write_block(&mut out, entry);
    }
    for block in f.blocks.values().filter(|b| b.id != f.entry) {
        write_block(&mut out, block);
    }
    out.push('}');
    out
}

/// Prints several functions separated by blank lines, with a trailing newline.
pub fn print_functions(fs: &[Function]) -> String {
    let mut out = fs
        .iter()
        .map(print_function)
        .collect::<Vec<_>>()
        .join("\n\n");
    out.push('\n');
    out
}
