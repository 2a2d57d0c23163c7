//! Evaluation reports and the partial-transitions holdout protocol.

use std::time::Instant;

use anyhow::{bail, Result};
use dlfit2_core::model::{predict_program, ModelParams};
use dlfit2_core::{
    full_transitions, learn_program, program_mse, tp_step, LogicProgram, State, TransitionSet,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

/// Per-system evaluation summary: the program metric plus rule-count
/// context (how succinct the prediction is against the minimal program).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub system: String,
    pub n: usize,
    pub max_body_original: usize,
    pub mse: f64,
    pub rules_predicted: usize,
    pub rules_original: usize,
    /// Rule count of the brute-force minimal program, when the width permits
    /// computing it.
    pub rules_oracle: Option<usize>,
    pub wall_ms: f64,
}

impl EvalReport {
    pub fn to_text(&self) -> String {
        let oracle = match self.rules_oracle {
            Some(count) => count.to_string(),
            None => "-".to_string(),
        };
        format!(
            "system: {}\n  n: {}\n  max body length: {}\n  mse: {:.6}\n  rules: {} predicted / {} original / {} oracle-minimal\n  wall: {:.1} ms\n",
            self.system,
            self.n,
            self.max_body_original,
            self.mse,
            self.rules_predicted,
            self.rules_original,
            oracle,
            self.wall_ms
        )
    }

    pub fn csv_header() -> &'static str {
        "system,n,max_body,mse,rules_predicted,rules_original,rules_oracle,wall_ms"
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{:.6},{},{},{},{:.3}",
            self.system,
            self.n,
            self.max_body_original,
            self.mse,
            self.rules_predicted,
            self.rules_original,
            self.rules_oracle.map_or(String::new(), |c| c.to_string()),
            self.wall_ms
        )
    }
}

/// Compare a predicted program against the original over all states.
pub fn run_eval(
    system: impl Into<String>,
    original: &LogicProgram,
    predicted: &LogicProgram,
) -> Result<EvalReport> {
    let started = Instant::now();
    let mse = program_mse(original, predicted)?;
    let n = original.base().len();
    let rules_oracle = if n <= dlfit2_core::symbolic::LEARN_CAP {
        Some(learn_program(&full_transitions(original)?)?.rule_count())
    } else {
        None
    };
    Ok(EvalReport {
        system: system.into(),
        n,
        max_body_original: original.max_body_len(),
        mse,
        rules_predicted: predicted.rule_count(),
        rules_original: original.rule_count(),
        rules_oracle,
        wall_ms: started.elapsed().as_secs_f64() * 1000.0,
    })
}

/// Which learner a holdout run exercises.
pub enum HoldoutPipeline<'a> {
    Symbolic,
    Neural {
        params: &'a ModelParams,
        threshold: f64,
    },
}

/// One trial: sample `given` source states without replacement, learn from
/// the induced partial transition set, score against the original over all
/// `2^n` states.
pub fn holdout_trial(
    program: &LogicProgram,
    given: usize,
    rng: &mut ChaCha12Rng,
    pipeline: &HoldoutPipeline<'_>,
) -> Result<f64> {
    let n = program.base().len();
    let total = 1u64 << n;
    if given == 0 || given as u64 > total {
        bail!("`given` must be within 1..=2^{n}");
    }
    // floyd's sampling over the state space
    let mut chosen = std::collections::BTreeSet::new();
    for upper in total - given as u64..total {
        let candidate = rng.gen_range(0..=upper);
        if !chosen.insert(candidate) {
            chosen.insert(upper);
        }
    }
    let partial = TransitionSet::new(
        program.base().clone(),
        chosen.into_iter().map(|bits| {
            let state = State::new(bits);
            (state, tp_step(program, state))
        }),
    );
    let learned = match pipeline {
        HoldoutPipeline::Symbolic => learn_program(&partial)?,
        HoldoutPipeline::Neural { params, threshold } => {
            predict_program(params, &partial, *threshold)?
        }
    };
    Ok(program_mse(program, &learned)?)
}

/// Mean holdout mse across trials at one `given` level.
pub fn holdout_mean(
    program: &LogicProgram,
    given: usize,
    trials: usize,
    seed: u64,
    pipeline: &HoldoutPipeline<'_>,
) -> Result<f64> {
    if trials == 0 {
        bail!("trials must be positive");
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    for _ in 0..trials {
        sum += holdout_trial(program, given, &mut rng, pipeline)?;
    }
    Ok(sum / trials as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program_text::parse_program;

    fn cascade() -> LogicProgram {
        parse_program("p :- q.\nq :- p, r.\nr :- not p.\n").unwrap()
    }

    #[test]
    fn identical_programs_score_zero() {
        let report = run_eval("cascade", &cascade(), &cascade()).unwrap();
        assert_eq!(report.mse, 0.0);
        assert_eq!(report.rules_predicted, 3);
        assert_eq!(report.rules_oracle, Some(3));
        assert_eq!(report.max_body_original, 2);
    }

    #[test]
    fn missing_rule_costs_a_sixth() {
        let original = cascade();
        let partial = parse_program("p :- q.\nq :- p, r.\n% vars: p q r\n").unwrap();
        let report = run_eval("cascade", &original, &partial).unwrap();
        assert!((report.mse - 4.0 / 24.0).abs() < 1e-12);
    }

    #[test]
    fn complete_holdout_is_exact_for_the_symbolic_pipeline() {
        let program = cascade();
        let mse = holdout_mean(&program, 8, 5, 1, &HoldoutPipeline::Symbolic).unwrap();
        assert_eq!(mse, 0.0);
    }

    #[test]
    fn single_state_holdout_is_bounded() {
        let program = cascade();
        let mse = holdout_mean(&program, 1, 20, 2, &HoldoutPipeline::Symbolic).unwrap();
        assert!((0.0..=1.0).contains(&mse));
    }

    #[test]
    fn zero_given_is_rejected() {
        let program = cascade();
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        assert!(holdout_trial(&program, 0, &mut rng, &HoldoutPipeline::Symbolic).is_err());
    }
}
