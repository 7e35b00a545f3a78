//! Rewrite rules over canonical sequences.
//!
//! A rule is a pure function from one sequence to zero or more new sequences
//! that must be semantically equivalent to it. The e-path never checks that
//! claim; a rule's soundness is established outside the system (in this crate,
//! by differential interpretation in tests and by `epath-opt check`).

mod constfold;
mod edit;
mod licm;
mod pattern;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::analysis::Analyses;
use crate::esequence::ESequence;
use crate::ir::Opcode;

pub use constfold::{apply_const_fold, fold};
pub use licm::{apply_licm, classify_invariance, match_loops, LicmSplit};
pub use pattern::{match_expression, Bound, ExprPattern, ImmPattern, Match, PatternError};

pub trait RewriteRule: Send + Sync {
    fn name(&self) -> &str;

    /// Returns rewritten variants of `seq`; never mutates it.
    fn apply(&self, seq: &ESequence, analyses: &Analyses) -> Vec<ESequence>;
}

/// Loop-invariant code motion.
#[derive(Debug, Clone, Copy, Default)]
pub struct Licm;

impl RewriteRule for Licm {
    fn name(&self) -> &str {
        "licm"
    }

    fn apply(&self, seq: &ESequence, analyses: &Analyses) -> Vec<ESequence> {
        apply_licm(seq, analyses)
    }
}

/// Folds a binary operation whose operands are both constants.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConstFold;

impl RewriteRule for ConstFold {
    fn name(&self) -> &str {
        "constfold"
    }

    fn apply(&self, seq: &ESequence, analyses: &Analyses) -> Vec<ESequence> {
        apply_const_fold(seq, analyses)
    }
}

/// A deliberately unsound rule: flips the low bit of the first `iconst`.
///
/// It exists as a negative control for the differential checker and must
/// never be used for optimization. Applying it twice restores the input, so
/// its closure is finite.
#[derive(Debug, Clone, Copy, Default)]
pub struct FlipConstBit;

impl RewriteRule for FlipConstBit {
    fn name(&self) -> &str {
        "broken"
    }

    fn apply(&self, seq: &ESequence, _analyses: &Analyses) -> Vec<ESequence> {
        let mut f = seq.to_function("broken");
        let Some(inst) = f
            .blocks
            .values_mut()
            .flat_map(|b| b.instructions.iter_mut())
            .find(|i| matches!(i.opcode, Opcode::Iconst(_)))
        else {
            return Vec::new();
        };
        if let Opcode::Iconst(k) = inst.opcode {
            inst.opcode = Opcode::Iconst(k ^ 1);
        }
        vec![ESequence::from_function(&f).expect("flipping an immediate keeps validity")]
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown rewrite rule `{name}` (available: {available})")]
pub struct UnknownRule {
    pub name: String,
    pub available: String,
}

/// Rules keyed by name.
pub struct Registry {
    rules: BTreeMap<String, Box<dyn RewriteRule>>,
}

impl Registry {
    pub fn empty() -> Self {
        Registry {
            rules: BTreeMap::new(),
        }
    }

    /// `licm` and `constfold`.
    pub fn standard() -> Self {
        let mut r = Registry::empty();
        r.register(Box::new(Licm));
        r.register(Box::new(ConstFold));
        r
    }

    /// The standard rules plus the unsound `broken` rule.
    pub fn with_negative_control() -> Self {
        let mut r = Registry::standard();
        r.register(Box::new(FlipConstBit));
        r
    }

    pub fn register(&mut self, rule: Box<dyn RewriteRule>) {
        self.rules.insert(rule.name().to_string(), rule);
    }

    pub fn get(&self, name: &str) -> Option<&dyn RewriteRule> {
        self.rules.get(name).map(|r| r.as_ref())
    }

    pub fn names(&self) -> Vec<&str> {
        self.rules.keys().map(|k| k.as_str()).collect()
    }

    /// Looks up every name, preserving the requested order.
    pub fn resolve<S: AsRef<str>>(
        &self,
        names: &[S],
    ) -> Result<Vec<&dyn RewriteRule>, UnknownRule> {
        names
            .iter()
            .map(|n| {
                self.get(n.as_ref()).ok_or_else(|| UnknownRule {
                    name: n.as_ref().to_string(),
                    available: self.names().join(", "),
                })
            })
            .collect()
    }
}

impl Default for Registry {
    fn default() -> Self {
        Registry::standard()
    }
}
