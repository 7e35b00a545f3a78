//! Expression-level matching over the def-use graph of a sequence.
//!
//! Because every intermediate value is named, the computation feeding a value
//! is a DAG of instructions reachable through operand links. A pattern is a
//! tree; it matches at a value when it embeds into that DAG with operand order
//! respected. There is no built-in commutativity.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::esequence::ESequence;
use crate::ir::{Instruction, Opcode, ValueId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ImmPattern {
    Exact(i64),
    Bind(String),
    Any,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprPattern {
    /// Binds any value.
    Var(String),
    /// An `iconst` with a matching immediate.
    Const(ImmPattern),
    /// A non-constant opcode applied to sub-patterns.
    Op {
        opcode: Opcode,
        operands: Vec<ExprPattern>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Bound {
    Value(ValueId),
    Imm(i64),
}

/// One embedding of a pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Match {
    pub root: ValueId,
    pub bindings: BTreeMap<String, Bound>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PatternError {
    #[error("pattern syntax error at byte {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("variable ?{0} appears more than once")]
    NonLinear(String),
    #[error("{opcode} takes {expected} operands, pattern gives {found}")]
    Arity {
        opcode: &'static str,
        expected: usize,
        found: usize,
    },
}

impl ExprPattern {
    pub fn var(name: &str) -> Self {
        ExprPattern::Var(name.to_string())
    }

    pub fn iconst(imm: ImmPattern) -> Self {
        ExprPattern::Const(imm)
    }

    pub fn op(opcode: Opcode, operands: Vec<ExprPattern>) -> Self {
        ExprPattern::Op { opcode, operands }
    }

    /// Number of instruction nodes (everything but variables).
    pub fn node_count(&self) -> usize {
        match self {
            ExprPattern::Var(_) => 0,
            ExprPattern::Const(_) => 1,
            ExprPattern::Op { operands, .. } => {
                1 + operands.iter().map(|o| o.node_count()).sum::<usize>()
            }
        }
    }

    /// Checks linearity and operand counts.
    pub fn check(&self) -> Result<(), PatternError> {
        fn walk(p: &ExprPattern, seen: &mut BTreeSet<String>) -> Result<(), PatternError> {
            let mut bind = |name: &String| {
                if !seen.insert(name.clone()) {
                    return Err(PatternError::NonLinear(name.clone()));
                }
                Ok(())
            };
            match p {
                ExprPattern::Var(name) | ExprPattern::Const(ImmPattern::Bind(name)) => bind(name),
                ExprPattern::Const(_) => Ok(()),
                ExprPattern::Op { opcode, operands } => {
                    if operands.len() != opcode.arity() || matches!(opcode, Opcode::Iconst(_)) {
                        return Err(PatternError::Arity {
                            opcode: opcode.mnemonic(),
                            expected: opcode.arity(),
                            found: operands.len(),
                        });
                    }
                    operands.iter().try_for_each(|o| walk(o, seen))
                }
            }
        }
        walk(self, &mut BTreeSet::new())
    }
}

impl fmt::Display for ExprPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprPattern::Var(name) => write!(f, "?{name}"),
            ExprPattern::Const(ImmPattern::Exact(k)) => write!(f, "iconst {k}"),
            ExprPattern::Const(ImmPattern::Bind(name)) => write!(f, "iconst ?{name}"),
            ExprPattern::Const(ImmPattern::Any) => write!(f, "iconst _"),
            ExprPattern::Op { opcode, operands } => {
                write!(f, "{}(", opcode.mnemonic())?;
                for (i, o) in operands.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{o}")?;
                }
                f.write_str(")")
            }
        }
    }
}

struct PatternParser<'a> {
    src: &'a str,
    pos: usize,
}

impl PatternParser<'_> {
    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn err<T>(&self, message: &str) -> Result<T, PatternError> {
        Err(PatternError::Syntax {
            pos: self.pos,
            message: message.to_string(),
        })
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn word(&mut self) -> &str {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[start..];
        let len = rest
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_' || c == '-'))
            .unwrap_or(rest.len());
        self.pos += len;
        &self.src[start..start + len]
    }

    fn pattern(&mut self) -> Result<ExprPattern, PatternError> {
        if self.eat('?') {
            let name = self.word().to_string();
            if name.is_empty() {
                return self.err("expected variable name");
            }
            return Ok(ExprPattern::Var(name));
        }
        let head = self.word().to_string();
        let opcode = match head.as_str() {
            "iconst" => {
                let imm = if self.eat('?') {
                    let name = self.word().to_string();
                    if name.is_empty() {
                        return self.err("expected variable name");
                    }
                    ImmPattern::Bind(name)
                } else {
                    let w = self.word();
                    if w == "_" {
                        ImmPattern::Any
                    } else {
                        match w.parse() {
                            Ok(k) => ImmPattern::Exact(k),
                            Err(_) => return self.err("expected immediate, `?name` or `_`"),
                        }
                    }
                };
                return Ok(ExprPattern::Const(imm));
            }
            "iadd" => Opcode::Iadd,
            "isub" => Opcode::Isub,
            "imul" => Opcode::Imul,
            "icmp_slt" => Opcode::IcmpSlt,
            "sideeffect" => Opcode::Sideeffect,
            _ => return self.err("expected opcode or `?name`"),
        };
        if !self.eat('(') {
            return self.err("expected `(`");
        }
        let mut operands = vec![self.pattern()?];
        while self.eat(',') {
            operands.push(self.pattern()?);
        }
        if !self.eat(')') {
            return self.err("expected `)`");
        }
        Ok(ExprPattern::Op { opcode, operands })
    }
}

impl FromStr for ExprPattern {
    type Err = PatternError;

    /// Parses e.g. `iadd(iconst ?a, iconst ?b)`, `iconst 42`, `imul(?x, iconst _)`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = PatternParser { src: s, pos: 0 };
        let pat = p.pattern()?;
        p.skip_ws();
        if p.pos != s.len() {
            return p.err("trailing input");
        }
        pat.check()?;
        Ok(pat)
    }
}

fn embed(
    pat: &ExprPattern,
    v: ValueId,
    defs: &BTreeMap<ValueId, &Instruction>,
    out: &mut BTreeMap<String, Bound>,
) -> bool {
    match pat {
        ExprPattern::Var(name) => {
            out.insert(name.clone(), Bound::Value(v));
            true
        }
        ExprPattern::Const(imm) => match defs.get(&v).map(|i| i.opcode) {
            Some(Opcode::Iconst(k)) => match imm {
                ImmPattern::Exact(want) => *want == k,
                ImmPattern::Bind(name) => {
                    out.insert(name.clone(), Bound::Imm(k));
                    true
                }
                ImmPattern::Any => true,
            },
            _ => false,
        },
        ExprPattern::Op { opcode, operands } => match defs.get(&v) {
            Some(inst) if inst.opcode == *opcode && inst.operands.len() == operands.len() => inst
                .operands
                .iter()
                .zip(operands)
                .all(|(&arg, sub)| embed(sub, arg, defs, out)),
            _ => false,
        },
    }
}

/// All embeddings of `pat`, one per root instruction, in canonical block order.
pub fn match_expression(pat: &ExprPattern, s: &ESequence) -> Vec<Match> {
    let defs: BTreeMap<ValueId, &Instruction> = s
        .blocks()
        .iter()
        .flat_map(|b| b.instructions.iter())
        .map(|i| (i.result, i))
        .collect();
    let mut matches = Vec::new();
    for block in s.blocks() {
        for inst in &block.instructions {
            let mut bindings = BTreeMap::new();
            if embed(pat, inst.result, &defs, &mut bindings) {
                matches.push(Match {
                    root: inst.result,
                    bindings,
                });
            }
        }
    }
    matches
}
