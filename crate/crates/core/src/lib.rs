//! Learning propositional logic programs that describe Boolean
//! state-transition systems.
//!
//! The crate provides the full pipeline: program semantics and simulation
//! ([`logic`]), the canonical rule-body index ([`rule_index`]),
//! variable-assignment-invariant canonicalization ([`canonical`]), a
//! brute-force symbolic learner that doubles as the training-label oracle
//! ([`symbolic`]), training-corpus generation and serialization
//! ([`dataset`]), a from-scratch permutation-invariant set-attention model
//! with per-body-length output heads ([`model`]), and subset decomposition
//! for systems wider than a trained model ([`scale`]).

pub mod canonical;
pub mod dataset;
pub mod error;
pub mod logic;
pub mod model;
pub mod predictor;
pub mod rule_index;
pub mod scale;
pub mod symbolic;

pub use canonical::{
    canonical_example, canonical_example_strong, permute_labeled, permute_rules, rotation_for,
    unpermute_rules, CanonicalExample, VarPermutation,
};
pub use error::{Error, Result};
pub use logic::{
    full_transitions, minimize_bodies, program_mse, project, tp_step, Body, HerbrandBase,
    LabeledTransitions, LogicProgram, Rule, State, Ternary, TransitionSet, ENUMERATION_CAP,
};
pub use predictor::{OraclePredictor, RulePredictor};
pub use rule_index::{binomial, body_at, body_count, index_of, RuleIndexTable};
pub use scale::{decompose_predict, min_body_bound, project_subset, BodyBound, SubsetMapping};
pub use symbolic::{consistent, learn_minimal, learn_program, targets_from_rules, TargetVectors};

#[cfg(test)]
pub(crate) mod testutil {
    use crate::logic::{Body, HerbrandBase, LogicProgram, Rule};

    pub fn base_pqr() -> HerbrandBase {
        HerbrandBase::new(["p", "q", "r"]).unwrap()
    }

    /// `{p <- q, q <- p & r, r <- not p}` over `p,q,r`.
    pub fn system_a() -> LogicProgram {
        LogicProgram::new(
            base_pqr(),
            [
                Rule::new(0, Body::new(0b010, 0)),
                Rule::new(1, Body::new(0b101, 0)),
                Rule::new(2, Body::new(0, 0b001)),
            ],
        )
        .unwrap()
    }

    /// Same wiring with p and q swapped: `{q <- p, p <- q & r, r <- not q}`.
    pub fn system_b() -> LogicProgram {
        LogicProgram::new(
            base_pqr(),
            [
                Rule::new(1, Body::new(0b001, 0)),
                Rule::new(0, Body::new(0b110, 0)),
                Rule::new(2, Body::new(0, 0b010)),
            ],
        )
        .unwrap()
    }

    /// Uniformly random program: each variable gets 0..=2 random bodies.
    pub fn random_program(
        base: HerbrandBase,
        rng: &mut impl rand::Rng,
    ) -> LogicProgram {
        let n = base.len();
        let mut rules = Vec::new();
        for head in 0..n {
            for _ in 0..rng.gen_range(0..=2) {
                let mut body = Body::EMPTY;
                for var in 0..n {
                    body = body.set(
                        var,
                        match rng.gen_range(0..3) {
                            0 => crate::logic::Ternary::Absent,
                            1 => crate::logic::Ternary::Positive,
                            _ => crate::logic::Ternary::Negative,
                        },
                    );
                }
                rules.push(Rule::new(head, body));
            }
        }
        LogicProgram::new(base, rules).unwrap()
    }
}
