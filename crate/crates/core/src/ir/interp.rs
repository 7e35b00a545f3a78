use thiserror::Error;

use super::{BlockCall, BlockId, Function, Opcode, Terminator, ValueId};

/// An observable event emitted by `sideeffect`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Effect {
    pub tag: &'static str,
    pub value: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum InterpResult {
    Returned {
        values: Vec<i64>,
        effects: Vec<Effect>,
    },
    FuelExhausted,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InterpError {
    #[error("expected {expected} arguments, got {found}")]
    ArgArity { expected: usize, found: usize },
    #[error("read of undefined value {0}")]
    UndefinedValue(ValueId),
    #[error("jump to unknown block {0}")]
    UnknownBlock(BlockId),
    #[error("{block}: {message}")]
    Malformed { block: BlockId, message: String },
}

struct Env {
    slots: Vec<Option<i64>>,
}

impl Env {
    fn get(&self, v: ValueId) -> Result<i64, InterpError> {
        self.slots
            .get(v.0 as usize)
            .copied()
            .flatten()
            .ok_or(InterpError::UndefinedValue(v))
    }

    fn set(&mut self, v: ValueId, x: i64) {
        let i = v.0 as usize;
        if i >= self.slots.len() {
            self.slots.resize(i + 1, None);
        }
        self.slots[i] = Some(x);
    }

    fn read_all(&self, vs: &[ValueId]) -> Result<Vec<i64>, InterpError> {
        vs.iter().map(|&v| self.get(v)).collect()
    }
}

/// Runs `f` on `args`. Each executed block consumes one unit of `fuel`.
pub fn interpret(f: &Function, args: &[i64], fuel: u64) -> Result<InterpResult, InterpError> {
    if args.len() != f.params.len() {
        return Err(InterpError::ArgArity {
            expected: f.params.len(),
            found: args.len(),
        });
    }
    let mut env = Env {
        slots: vec![None; f.max_value().map_or(0, |v| v.0 as usize + 1)],
    };
    let mut effects = Vec::new();
    let mut fuel = fuel;
    let mut current = f.entry;
    let mut incoming = args.to_vec();

    loop {
        if fuel == 0 {
            return Ok(InterpResult::FuelExhausted);
        }
        fuel -= 1;

        let block = f
            .blocks
            .get(&current)
            .ok_or(InterpError::UnknownBlock(current))?;
        if block.params.len() != incoming.len() {
            return Err(InterpError::Malformed {
                block: current,
                message: format!(
                    "expected {} block args, got {}",
                    block.params.len(),
                    incoming.len()
                ),
            });
        }
        for (&p, &x) in block.params.iter().zip(&incoming) {
            env.set(p, x);
        }

        for inst in &block.instructions {
            let ops = env.read_all(&inst.operands)?;
            if ops.len() != inst.opcode.arity() {
                return Err(InterpError::Malformed {
                    block: current,
                    message: format!("bad operand count for {}", inst.opcode.mnemonic()),
                });
            }
            let result = match inst.opcode {
                Opcode::Iconst(imm) => imm,
                Opcode::Sideeffect => {
                    effects.push(Effect {
                        tag: "eff",
                        value: ops[0],
                    });
                    ops[0]
                }
                op => op.eval_binary(ops[0], ops[1]).expect("binary opcode"),
            };
            env.set(inst.result, result);
        }

        let next: &BlockCall = match &block.terminator {
            Terminator::Jump(call) => call,
            Terminator::Brif {
                cond,
                then_dest,
                else_dest,
            } => {
                if env.get(*cond)? != 0 {
                    then_dest
                } else {
                    else_dest
                }
            }
            Terminator::Ret(values) => {
                return Ok(InterpResult::Returned {
                    values: env.read_all(values)?,
                    effects,
                });
            }
        };
        incoming = env.read_all(&next.args)?;
        current = next.target;
    }
}
