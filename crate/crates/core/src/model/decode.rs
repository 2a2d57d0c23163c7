//! Turning head activations back into rules.
//!
//! Per body length: when the no-rule node clears the threshold and no rule
//! node beats it, the length emits nothing; otherwise every rule node at or
//! above the threshold emits its body. Across lengths, any body subsumed by
//! a more general emitted body is dropped, mirroring how minimal programs
//! have no internally subsumed rules.

use crate::error::{Error, Result};
use crate::logic::{Body, LabeledTransitions, LogicProgram, TransitionSet};
use crate::model::net::{forward_all, HeadOutput, ModelParams};
use crate::model::tokens::tokenize;
use crate::predictor::{predict_with, RulePredictor};
use crate::rule_index::RuleIndexTable;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Decode one variable's head outputs into bodies.
pub fn decode(
    outputs: &[HeadOutput],
    threshold: f64,
    table: &RuleIndexTable,
) -> Result<Vec<Body>> {
    let mut emitted = Vec::new();
    for output in outputs {
        let no_rule = output.no_rule();
        let rules = output.rule_probs();
        // ties prefer the conservative no-rule reading
        if no_rule >= threshold && rules.iter().all(|&p| p <= no_rule) {
            continue;
        }
        for (idx, &p) in rules.iter().enumerate() {
            if p >= threshold {
                emitted.push(table.body_at(output.l, idx).ok_or(
                    Error::BodyIndexOutOfRange {
                        index: idx as u64,
                        len: output.l,
                        available: rules.len() as u64,
                    },
                )?);
            }
        }
    }
    Ok(crate::logic::minimize_bodies(&emitted))
}

/// A trained model behind the predictor interface.
pub struct ModelPredictor<'a> {
    params: &'a ModelParams,
    table: RuleIndexTable,
    threshold: f64,
}

impl<'a> ModelPredictor<'a> {
    pub fn new(params: &'a ModelParams, threshold: f64) -> Result<Self> {
        Ok(Self {
            params,
            table: RuleIndexTable::new(params.n())?,
            threshold,
        })
    }
}

impl RulePredictor for ModelPredictor<'_> {
    fn width(&self) -> usize {
        self.params.n()
    }

    fn predict_bodies(&self, labeled: &LabeledTransitions) -> Result<Vec<Body>> {
        let tokens = tokenize(labeled)?;
        let outputs = forward_all(self.params, &tokens)?;
        decode(&outputs, self.threshold, &self.table)
    }
}

/// Full-program prediction: canonicalize each variable, run every head,
/// decode, map back, and union.
pub fn predict_program(
    params: &ModelParams,
    transitions: &TransitionSet,
    threshold: f64,
) -> Result<LogicProgram> {
    let predictor = ModelPredictor::new(params, threshold)?;
    predict_with(&predictor, transitions)
}
