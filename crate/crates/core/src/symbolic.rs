//! Brute-force symbolic learner.
//!
//! Searches all `3^n` candidate bodies for the minimal set consistent with a
//! per-variable transition set. On complete data the learned program
//! reproduces the dynamics exactly, which makes this the ground-truth oracle
//! for the neural pipeline and the generator of its training labels.

use crate::error::{Error, Result};
use crate::logic::{
    minimize_bodies, project, Body, LabeledTransitions, LogicProgram, Rule, TransitionSet,
};
use crate::rule_index::{body_count, RuleIndexTable};

/// Brute force is cubic-exponential in width; refuse anything wider.
pub const LEARN_CAP: usize = 12;

/// True iff every observed state the body matches carries label 1.
pub fn consistent(body: Body, labeled: &LabeledTransitions) -> bool {
    labeled
        .items()
        .all(|(state, label)| label || !body.matches(state))
}

/// True iff the body matches at least one observed state. Bodies that match
/// nothing are vacuously consistent but describe no transition, so the
/// learner excludes them.
fn live(body: Body, labeled: &LabeledTransitions) -> bool {
    labeled.items().any(|(state, _)| body.matches(state))
}

/// The minimal consistent bodies for one variable: every consistent body
/// that matches at least one observation and is not strictly subsumed by
/// another consistent body. Exhaustive over all `3^n` candidates.
pub fn learn_minimal(labeled: &LabeledTransitions) -> Result<Vec<Body>> {
    let n = labeled.width();
    if n > LEARN_CAP {
        return Err(Error::LearnCapExceeded { n, cap: LEARN_CAP });
    }
    let mut candidates = Vec::new();
    for l in 0..=n {
        for idx in 0..body_count(n, l)? {
            let body = crate::rule_index::body_at(n, l, idx)?;
            if consistent(body, labeled) && live(body, labeled) {
                candidates.push(body);
            }
        }
    }
    // A consistent subsumer of a live body is itself live, so minimizing
    // within the candidate set equals minimizing against all consistent
    // bodies.
    Ok(minimize_bodies(&candidates))
}

/// Learn every variable and assemble the program.
pub fn learn_program(transitions: &TransitionSet) -> Result<LogicProgram> {
    let base = transitions.base().clone();
    let mut rules = Vec::new();
    for v in 0..base.len() {
        let labeled = project(transitions, v)?;
        for body in learn_minimal(&labeled)? {
            rules.push(Rule::new(v, body));
        }
    }
    LogicProgram::new(base, rules)
}

/// Per-body-length binary target vectors. Entry `(l, i)` marks the body at
/// index `i` of the length-`l` table; the extra final entry of each vector
/// is the no-rule node, set exactly when no body of that length is present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetVectors {
    n: usize,
    per_length: Vec<Vec<bool>>,
}

impl TargetVectors {
    pub fn empty(n: usize) -> Result<Self> {
        let per_length = (0..=n)
            .map(|l| {
                body_count(n, l).map(|count| {
                    let mut v = vec![false; count as usize + 1];
                    *v.last_mut().expect("width >= 1") = true;
                    v
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n, per_length })
    }

    /// Rebuild from raw per-length vectors, validating widths.
    pub fn from_heads(n: usize, per_length: Vec<Vec<bool>>) -> Result<Self> {
        if per_length.len() != n + 1 {
            return Err(Error::WidthMismatch {
                left: per_length.len(),
                right: n + 1,
            });
        }
        for (l, head) in per_length.iter().enumerate() {
            let expected = body_count(n, l)? as usize + 1;
            if head.len() != expected {
                return Err(Error::WidthMismatch {
                    left: head.len(),
                    right: expected,
                });
            }
        }
        Ok(Self { n, per_length })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Target vector for one body length, no-rule node last.
    pub fn head(&self, l: usize) -> &[bool] {
        &self.per_length[l]
    }

    pub fn heads(&self) -> impl Iterator<Item = &[bool]> {
        self.per_length.iter().map(Vec::as_slice)
    }

    pub fn no_rule(&self, l: usize) -> bool {
        *self.per_length[l].last().expect("non-empty head")
    }

    /// The bodies marked present, via the index table. Sorted, matching the
    /// order the learner and decoder emit.
    pub fn bodies(&self, table: &RuleIndexTable) -> Vec<Body> {
        let mut out = Vec::new();
        for (l, head) in self.per_length.iter().enumerate() {
            for (idx, &set) in head[..head.len() - 1].iter().enumerate() {
                if set {
                    out.push(table.body_at(l, idx).expect("index within table"));
                }
            }
        }
        out.sort_unstable();
        out
    }

    fn set_body(&mut self, l: usize, idx: usize) {
        self.per_length[l][idx] = true;
        *self.per_length[l].last_mut().expect("non-empty head") = false;
    }
}

/// Encode a body set as per-length target vectors.
pub fn targets_from_rules(bodies: &[Body], table: &RuleIndexTable) -> Result<TargetVectors> {
    let mut targets = TargetVectors::empty(table.n())?;
    for &body in bodies {
        let (l, idx) = table.index_of(body)?;
        targets.set_body(l, idx as usize);
    }
    Ok(targets)
}
