//! Symbolic cost `C = N · M` and argmin extraction.
//!
//! Every block contributes its instruction and terminator cost to the
//! coefficient of `N^k`, where `k` is the number of loops enclosing it. Costs
//! are compared as polynomials for large `N`: highest degree first.
//!
//! The coefficient type is generic over unsigned primitive integers; the
//! crate root exports the `u64` instantiation as [`crate::CostPoly`] and
//! [`crate::CostTable`].

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_traits::{PrimInt, Unsigned};
use thiserror::Error;

use crate::analysis::Analyses;
use crate::epath::EPath;
use crate::esequence::ESequence;
use crate::ir::Opcode;

pub trait CostScalar: PrimInt + Unsigned + fmt::Display + fmt::Debug + FromStr {}

impl<T: PrimInt + Unsigned + fmt::Display + fmt::Debug + FromStr> CostScalar for T {}

const OPCODES: [&str; 6] = ["iconst", "iadd", "isub", "imul", "icmp_slt", "sideeffect"];

fn opcode_slot(op: Opcode) -> usize {
    match op {
        Opcode::Iconst(_) => 0,
        Opcode::Iadd => 1,
        Opcode::Isub => 2,
        Opcode::Imul => 3,
        Opcode::IcmpSlt => 4,
        Opcode::Sideeffect => 5,
    }
}

/// Per-opcode and per-terminator base costs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Table<C> {
    opcodes: [C; 6],
    terminator: C,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("cost table line {line}: {message}")]
pub struct TableParseError {
    pub line: usize,
    pub message: String,
}

impl<C: CostScalar> Default for Table<C> {
    /// Every instruction costs 1, terminators cost 0.
    fn default() -> Self {
        Table {
            opcodes: [C::one(); 6],
            terminator: C::zero(),
        }
    }
}

impl<C: CostScalar> Table<C> {
    pub fn uniform(instruction: C, terminator: C) -> Self {
        Table {
            opcodes: [instruction; 6],
            terminator,
        }
    }

    pub fn instruction_cost(&self, op: Opcode) -> C {
        self.opcodes[opcode_slot(op)]
    }

    pub fn terminator_cost(&self) -> C {
        self.terminator
    }

    /// Sets the cost of an opcode by mnemonic; returns false if unknown.
    pub fn set(&mut self, mnemonic: &str, cost: C) -> bool {
        if mnemonic == "terminator" {
            self.terminator = cost;
            return true;
        }
        match OPCODES.iter().position(|m| *m == mnemonic) {
            Some(i) => {
                self.opcodes[i] = cost;
                true
            }
            None => false,
        }
    }

    /// Multiplies every entry by `factor` (saturating).
    pub fn scaled(&self, factor: C) -> Self {
        Table {
            opcodes: self
                .opcodes
                .map(|c| c.checked_mul(&factor).unwrap_or_else(C::max_value)),
            terminator: self
                .terminator
                .checked_mul(&factor)
                .unwrap_or_else(C::max_value),
        }
    }

    /// Parses `opcode = integer` lines (plus `terminator = integer`) on top
    /// of the defaults. `;` and `#` start comments.
    pub fn parse(text: &str) -> Result<Self, TableParseError> {
        let mut table = Table::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split([';', '#']).next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| TableParseError {
                line: i + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `name = integer`, found `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let cost = value
                .parse::<C>()
                .map_err(|_| err(format!("`{value}` is not a nonnegative integer")))?;
            if !table.set(key, cost) {
                return Err(err(format!("unknown opcode `{key}`")));
            }
        }
        Ok(table)
    }
}

/// A polynomial in the symbolic trip count `N`; `coeffs[k]` weights `N^k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Poly<C> {
    coeffs: Vec<C>,
}

impl<C: CostScalar> Poly<C> {
    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    /// Builds a polynomial from low-to-high coefficients, trimming zeros.
    pub fn from_coeffs(coeffs: Vec<C>) -> Self {
        let mut p = Poly { coeffs };
        p.trim();
        p
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> C {
        self.coeffs.get(k).copied().unwrap_or_else(C::zero)
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Adds `c · N^k` (saturating).
    pub fn add_term(&mut self, k: usize, c: C) {
        if c.is_zero() {
            return;
        }
        if self.coeffs.len() <= k {
            self.coeffs.resize(k + 1, C::zero());
        }
        self.coeffs[k] = self.coeffs[k].saturating_add(c);
    }

    /// Evaluates at `n`, or `None` on overflow.
    pub fn eval(&self, n: C) -> Option<C> {
        self.coeffs
            .iter()
            .rev()
            .try_fold(C::zero(), |acc, &c| acc.checked_mul(&n)?.checked_add(&c))
    }
}

/// Lexicographic from the highest power of `N` down; equivalent to comparing
/// values for every sufficiently large `N`.
pub fn compare<C: CostScalar>(a: &Poly<C>, b: &Poly<C>) -> Ordering {
    let len = a.coeffs.len().max(b.coeffs.len());
    (0..len)
        .rev()
        .map(|k| a.coeff(k).cmp(&b.coeff(k)))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

impl<C: CostScalar> PartialOrd for Poly<C> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<C: CostScalar> Ord for Poly<C> {
    fn cmp(&self, other: &Self) -> Ordering {
        compare(self, other)
    }
}

impl<C: CostScalar> fmt::Display for Poly<C> {
    /// Renders e.g. `3N^1 + 2` and `0` for the zero polynomial.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| {
                if k == 0 {
                    c.to_string()
                } else {
                    format!("{c}N^{k}")
                }
            })
            .collect();
        f.write_str(&terms.join(" + "))
    }
}

/// The symbolic cost of `s`.
pub fn cost_of<C: CostScalar>(s: &ESequence, table: &Table<C>, analyses: &Analyses) -> Poly<C> {
    let depths = analyses.loop_depths();
    let mut poly = Poly::zero();
    for block in s.blocks() {
        let depth = depths.get(&block.id).copied().unwrap_or(0);
        let mut c = table.terminator_cost();
        for inst in &block.instructions {
            c = c.saturating_add(table.instruction_cost(inst.opcode));
        }
        poly.add_term(depth, c);
    }
    poly
}

/// Every variant with its cost, cheapest first; ties ordered by printed form.
pub fn ranked<'p, C: CostScalar>(p: &'p EPath, table: &Table<C>) -> Vec<(&'p ESequence, Poly<C>)> {
    let mut all: Vec<(&ESequence, Poly<C>, String)> = p
        .variants()
        .into_iter()
        .map(|s| (s, cost_of(s, table, &s.analyses()), s.canonical_text()))
        .collect();
    all.sort_by(|a, b| compare(&a.1, &b.1).then_with(|| a.2.cmp(&b.2)));
    all.into_iter().map(|(s, c, _)| (s, c)).collect()
}

/// The cheapest variant.
pub fn extract<'p, C: CostScalar>(p: &'p EPath, table: &Table<C>) -> &'p ESequence {
    ranked(p, table)
        .into_iter()
        .next()
        .map(|(s, _)| s)
        .expect("an e-path always holds its seed")
}
