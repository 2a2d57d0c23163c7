//! Per-variable rule prediction behind a common interface.
//!
//! A predictor takes a canonical per-variable transition set (target variable
//! at position 0) of its fixed width and returns the rule bodies it believes
//! explain the labels. The symbolic learner and the trained model both
//! implement it, so the whole-program assembly and the subset-decomposition
//! driver run identically against either.

use crate::canonical::{canonical_example, unpermute_rules};
use crate::error::Result;
use crate::logic::{Body, LabeledTransitions, LogicProgram, Rule, TransitionSet};
use crate::symbolic::learn_minimal;

pub trait RulePredictor {
    /// Number of variables the predictor operates on.
    fn width(&self) -> usize;

    /// Rule bodies for the variable at position 0 of `labeled`.
    fn predict_bodies(&self, labeled: &LabeledTransitions) -> Result<Vec<Body>>;
}

/// The symbolic learner as a predictor: exact on complete data.
#[derive(Debug, Clone, Copy)]
pub struct OraclePredictor {
    width: usize,
}

impl OraclePredictor {
    pub fn new(width: usize) -> Self {
        Self { width }
    }
}

impl RulePredictor for OraclePredictor {
    fn width(&self) -> usize {
        self.width
    }

    fn predict_bodies(&self, labeled: &LabeledTransitions) -> Result<Vec<Body>> {
        learn_minimal(labeled)
    }
}

/// Run a predictor over every variable of a same-width transition set:
/// canonicalize, predict, and map the learned rules back through the
/// inverse permutation.
pub fn predict_with(
    predictor: &dyn RulePredictor,
    transitions: &TransitionSet,
) -> Result<LogicProgram> {
    let base = transitions.base().clone();
    if base.len() != predictor.width() {
        return Err(crate::error::Error::WidthMismatch {
            left: base.len(),
            right: predictor.width(),
        });
    }
    if transitions.is_empty() {
        return Err(crate::error::Error::EmptyInput("transition set"));
    }
    let mut rules = Vec::new();
    for v in 0..base.len() {
        let example = canonical_example(transitions, v)?;
        let bodies = predictor.predict_bodies(&example.labeled)?;
        let canonical_rules = bodies.into_iter().map(|body| Rule::new(0, body));
        rules.extend(unpermute_rules(canonical_rules, &example.omega));
    }
    LogicProgram::new(base, rules)
}
