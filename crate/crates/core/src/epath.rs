//! The monotonic equivalence set of sequences and the saturation driver.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use thiserror::Error;

use crate::esequence::{Digest, ESequence};
use crate::rewrite::RewriteRule;

/// Provenance: `rule` rewrote the sequence `source` into `target`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RewriteEdge {
    pub source: Digest,
    pub target: Digest,
    pub rule: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertOutcome {
    Inserted,
    Duplicate,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EPathError {
    #[error("source sequence {0} is not in the e-path")]
    UnknownSource(Digest),
    #[error("sequence takes {found} parameters, the seed takes {expected}")]
    SignatureMismatch { expected: usize, found: usize },
    #[error("digest {0} collides with a structurally different sequence")]
    HashCollision(Digest),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_iterations: usize,
    pub max_sequences: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_iterations: 64,
            max_sequences: 100_000,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SaturationReport {
    pub iterations: usize,
    pub inserted: usize,
    /// Rule outputs that were already present.
    pub deduplicated: usize,
    pub reached_fixed_point: bool,
    /// How many sequences each rule produced, counting duplicates.
    pub rule_application_counts: BTreeMap<String, usize>,
}

/// A monotonic set of equivalent sequences. Nothing is ever removed or
/// modified once inserted.
#[derive(Debug, Clone)]
pub struct EPath {
    sequences: BTreeMap<Digest, ESequence>,
    edges: Vec<RewriteEdge>,
    edge_set: HashSet<RewriteEdge>,
    seed: Digest,
    /// (sequence, rule) pairs already expanded by `saturate`.
    processed: BTreeSet<(Digest, String)>,
}

impl EPath {
    pub fn new(seed: ESequence) -> Self {
        let digest = seed.digest();
        EPath {
            sequences: BTreeMap::from([(digest, seed)]),
            edges: Vec::new(),
            edge_set: HashSet::new(),
            seed: digest,
            processed: BTreeSet::new(),
        }
    }

    pub fn seed(&self) -> &ESequence {
        &self.sequences[&self.seed]
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn get(&self, digest: Digest) -> Option<&ESequence> {
        self.sequences.get(&digest)
    }

    pub fn contains(&self, s: &ESequence) -> bool {
        self.sequences.get(&s.digest()) == Some(s)
    }

    /// All sequences in ascending digest order.
    pub fn variants(&self) -> Vec<&ESequence> {
        self.sequences.values().collect()
    }

    pub fn digests(&self) -> BTreeSet<Digest> {
        self.sequences.keys().copied().collect()
    }

    /// Provenance edges in discovery order.
    pub fn edges(&self) -> &[RewriteEdge] {
        &self.edges
    }

    /// Adds `s` as a rewrite of `source` by `rule`. A structurally equal
    /// sequence already present makes this a duplicate; the edge is still
    /// recorded if it is new.
    pub fn insert(
        &mut self,
        s: ESequence,
        source: Digest,
        rule: &str,
    ) -> Result<InsertOutcome, EPathError> {
        if !self.sequences.contains_key(&source) {
            return Err(EPathError::UnknownSource(source));
        }
        let expected = self.seed().params().len();
        if s.params().len() != expected {
            return Err(EPathError::SignatureMismatch {
                expected,
                found: s.params().len(),
            });
        }
        let digest = s.digest();
        let outcome = match self.sequences.get(&digest) {
            Some(existing) if *existing == s => InsertOutcome::Duplicate,
            Some(_) => return Err(EPathError::HashCollision(digest)),
            None => {
                self.sequences.insert(digest, s);
                InsertOutcome::Inserted
            }
        };
        let edge = RewriteEdge {
            source,
            target: digest,
            rule: rule.to_string(),
        };
        if self.edge_set.insert(edge.clone()) {
            self.edges.push(edge);
        }
        Ok(outcome)
    }

    /// Applies every rule to every sequence not yet expanded by that rule,
    /// round after round, until a round adds nothing or a limit trips.
    ///
    /// Each (sequence, rule) pair is expanded at most once over the lifetime
    /// of the e-path, so saturating again with the same rules adds nothing.
    pub fn saturate(&mut self, rules: &[&dyn RewriteRule], limits: Limits) -> SaturationReport {
        let mut report = SaturationReport::default();
        for rule in rules {
            report
                .rule_application_counts
                .entry(rule.name().to_string())
                .or_insert(0);
        }

        'rounds: loop {
            if report.iterations >= limits.max_iterations {
                break;
            }
            report.iterations += 1;

            let pending: Vec<(Digest, usize)> = self
                .sequences
                .keys()
                .flat_map(|&d| (0..rules.len()).map(move |r| (d, r)))
                .filter(|&(d, r)| !self.processed.contains(&(d, rules[r].name().to_string())))
                .collect();

            let mut inserted_this_round = 0;
            let mut current: Option<(Digest, crate::analysis::Analyses)> = None;
            for (digest, r) in pending {
                let rule = rules[r];
                self.processed.insert((digest, rule.name().to_string()));
                if current.as_ref().map(|(d, _)| *d) != Some(digest) {
                    current = Some((digest, self.sequences[&digest].analyses()));
                }
                let analyses = &current.as_ref().expect("just set").1;
                let outputs = rule.apply(&self.sequences[&digest], analyses);
                *report
                    .rule_application_counts
                    .entry(rule.name().to_string())
                    .or_insert(0) += outputs.len();

                for out in outputs {
                    if !self.contains(&out) && self.sequences.len() >= limits.max_sequences {
                        report.reached_fixed_point = false;
                        break 'rounds;
                    }
                    match self
                        .insert(out, digest, rule.name())
                        .expect("rule outputs share the seed signature")
                    {
                        InsertOutcome::Inserted => {
                            report.inserted += 1;
                            inserted_this_round += 1;
                        }
                        InsertOutcome::Duplicate => report.deduplicated += 1,
                    }
                }
            }
            if inserted_this_round == 0 {
                report.reached_fixed_point = true;
                break;
            }
        }
        report
    }
}
