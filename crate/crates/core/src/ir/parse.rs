use std::collections::BTreeMap;

use thiserror::Error;

use super::{
    validate, Block, BlockCall, BlockId, Function, Instruction, Opcode, Terminator, ValueId,
    Violation,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("{line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("function @{function} is invalid: {}", join_violations(violations))]
    Invalid {
        function: String,
        violations: Vec<Violation>,
    },
    #[error("expected exactly one function, found {0}")]
    FunctionCount(usize),
}

fn join_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Word(String),
    Int(i64),
    Punct(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut col) = (1usize, 1usize);

    while let Some(&c) = chars.peek() {
        let (start_line, start_col) = (line, col);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars<'_>>| {
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        if c == ';' {
            while let Some(&c) = chars.peek() {
                if c == '\n' {
                    break;
                }
                bump(&mut chars);
            }
        } else if c.is_whitespace() {
            bump(&mut chars);
        } else if "@(){}:=,".contains(c) {
            bump(&mut chars);
            tokens.push(Token {
                tok: Tok::Punct(c),
                line: start_line,
                col: start_col,
            });
        } else if c == '-' || c.is_ascii_digit() {
            let mut s = String::new();
            s.push(bump(&mut chars).unwrap());
            while let Some(&d) = chars.peek() {
                if !d.is_ascii_digit() {
                    break;
                }
                s.push(d);
                bump(&mut chars);
            }
            let value = s.parse::<i64>().map_err(|_| ParseError::Syntax {
                line: start_line,
                col: start_col,
                message: format!("invalid integer literal `{s}`"),
            })?;
            tokens.push(Token {
                tok: Tok::Int(value),
                line: start_line,
                col: start_col,
            });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&d) = chars.peek() {
                if !(d.is_ascii_alphanumeric() || d == '_' || d == '.') {
                    break;
                }
                s.push(d);
                bump(&mut chars);
            }
            tokens.push(Token {
                tok: Tok::Word(s),
                line: start_line,
                col: start_col,
            });
        } else {
            return Err(ParseError::Syntax {
                line: start_line,
                col: start_col,
                message: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(tokens)
}

fn numbered(word: &str, prefix: char) -> Option<u32> {
    let rest = word.strip_prefix(prefix)?;
    if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    // Leading zeros would make `v01` and `v1` alias; reject them.
    if rest.len() > 1 && rest.starts_with('0') {
        return None;
    }
    rest.parse().ok()
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    eof: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        let (line, col) = self
            .tokens
            .get(self.pos)
            .map(|t| (t.line, t.col))
            .unwrap_or(self.eof);
        Err(ParseError::Syntax {
            line,
            col,
            message: message.into(),
        })
    }

    fn describe(&self) -> String {
        match self.peek() {
            None => "end of input".to_string(),
            Some(Tok::Word(w)) => format!("`{w}`"),
            Some(Tok::Int(i)) => format!("`{i}`"),
            Some(Tok::Punct(c)) => format!("`{c}`"),
        }
    }

    fn eat_punct(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Punct(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat_punct(c) {
            Ok(())
        } else {
            self.error(format!("expected `{c}`, found {}", self.describe()))
        }
    }

    fn peek_word(&self) -> Option<&str> {
        match self.peek() {
            Some(Tok::Word(w)) => Some(w),
            _ => None,
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.peek_word() == Some(kw) {
            self.pos += 1;
            Ok(())
        } else {
            self.error(format!("expected `{kw}`, found {}", self.describe()))
        }
    }

    fn peek_value(&self) -> Option<ValueId> {
        self.peek_word().and_then(|w| numbered(w, 'v')).map(ValueId)
    }

    fn value(&mut self) -> Result<ValueId, ParseError> {
        match self.peek_value() {
            Some(v) => {
                self.pos += 1;
                Ok(v)
            }
            None => self.error(format!("expected value, found {}", self.describe())),
        }
    }

    fn block_ref(&mut self) -> Result<BlockId, ParseError> {
        match self.peek_word().and_then(|w| numbered(w, 'b')) {
            Some(b) => {
                self.pos += 1;
                Ok(BlockId(b))
            }
            None => self.error(format!("expected block, found {}", self.describe())),
        }
    }

    fn int(&mut self) -> Result<i64, ParseError> {
        match self.peek() {
            Some(Tok::Int(i)) => {
                let i = *i;
                self.pos += 1;
                Ok(i)
            }
            _ => self.error(format!("expected integer, found {}", self.describe())),
        }
    }

    /// A possibly empty comma-separated value list.
    fn value_list(&mut self) -> Result<Vec<ValueId>, ParseError> {
        let mut values = Vec::new();
        if self.peek_value().is_none() {
            return Ok(values);
        }
        values.push(self.value()?);
        while self.eat_punct(',') {
            values.push(self.value()?);
        }
        Ok(values)
    }

    fn paren_values(&mut self) -> Result<Vec<ValueId>, ParseError> {
        self.expect_punct('(')?;
        let values = self.value_list()?;
        self.expect_punct(')')?;
        Ok(values)
    }

    fn block_call(&mut self) -> Result<BlockCall, ParseError> {
        let target = self.block_ref()?;
        let args = self.paren_values()?;
        Ok(BlockCall { target, args })
    }

    fn function(&mut self) -> Result<Function, ParseError> {
        self.expect_keyword("func")?;
        self.expect_punct('@')?;
        let name = match self.peek_word() {
            Some(w) => w.to_string(),
            None => {
                return self.error(format!("expected function name, found {}", self.describe()))
            }
        };
        self.pos += 1;
        let params = self.paren_values()?;
        self.expect_punct('{')?;

        let mut blocks = BTreeMap::new();
        let mut entry = None;
        while !self.eat_punct('}') {
            let at = self.pos;
            let block = self.block()?;
            entry.get_or_insert(block.id);
            if blocks.contains_key(&block.id) {
                self.pos = at;
                return self.error(format!("duplicate block {}", block.id));
            }
            blocks.insert(block.id, block);
        }
        let Some(entry) = entry else {
            return self.error("function has no blocks");
        };
        Ok(Function {
            name,
            params,
            entry,
            blocks,
        })
    }

    fn block(&mut self) -> Result<Block, ParseError> {
        let id = self.block_ref()?;
        let params = self.paren_values()?;
        self.expect_punct(':')?;

        let mut instructions = Vec::new();
        if let Some(result) = self.peek_value() {
            self.pos += 1;
            self.expect_punct('=')?;
            instructions.push(self.instruction(result)?);
        }
        let terminator = self.terminator()?;
        Ok(Block {
            id,
            params,
            instructions,
            terminator,
        })
    }

    fn instruction(&mut self, result: ValueId) -> Result<Instruction, ParseError> {
        let opcode = match self.peek_word() {
            Some("iconst") => {
                self.pos += 1;
                Opcode::Iconst(self.int()?)
            }
            Some("iadd") => Opcode::Iadd,
            Some("isub") => Opcode::Isub,
            Some("imul") => Opcode::Imul,
            Some("icmp_slt") => Opcode::IcmpSlt,
            Some("sideeffect") => Opcode::Sideeffect,
            _ => return self.error(format!("expected opcode, found {}", self.describe())),
        };
        if !matches!(opcode, Opcode::Iconst(_)) {
            self.pos += 1;
        }
        let operands = self.value_list()?;
        Ok(Instruction {
            result,
            opcode,
            operands,
        })
    }

    fn terminator(&mut self) -> Result<Terminator, ParseError> {
        match self.peek_word() {
            Some("jump") => {
                self.pos += 1;
                Ok(Terminator::Jump(self.block_call()?))
            }
            Some("brif") => {
                self.pos += 1;
                let cond = self.value()?;
                self.expect_punct(',')?;
                let then_dest = self.block_call()?;
                self.expect_punct(',')?;
                let else_dest = self.block_call()?;
                Ok(Terminator::Brif {
                    cond,
                    then_dest,
                    else_dest,
                })
            }
            Some("ret") => {
                self.pos += 1;
                Ok(Terminator::Ret(self.value_list()?))
            }
            _ => self.error(format!(
                "expected instruction or terminator, found {}",
                self.describe()
            )),
        }
    }
}

/// Parses every function in `text` and validates each one.
pub fn parse_functions(text: &str) -> Result<Vec<Function>, ParseError> {
    let tokens = lex(text)?;
    let lines: Vec<&str> = text.split('\n').collect();
    let eof = (
        lines.len(),
        lines.last().map_or(0, |l| l.chars().count()) + 1,
    );
    let mut parser = Parser {
        tokens,
        pos: 0,
        eof,
    };
    let mut functions = Vec::new();
    while parser.peek().is_some() {
        functions.push(parser.function()?);
    }
    if functions.is_empty() {
        return parser.error("expected `func`");
    }
    for f in &functions {
        let violations = validate(f);
        if !violations.is_empty() {
            return Err(ParseError::Invalid {
                function: f.name.clone(),
                violations,
            });
        }
    }
    Ok(functions)
}

/// Parses text holding exactly one function.
pub fn parse_function(text: &str) -> Result<Function, ParseError> {
    let mut functions = parse_functions(text)?;
    if functions.len() != 1 {
        return Err(ParseError::FunctionCount(functions.len()));
    }
    Ok(functions.pop().unwrap())
}
