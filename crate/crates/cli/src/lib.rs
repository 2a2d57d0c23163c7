//! Workbench surface: text formats for Boolean networks, logic programs,
//! and transition sets, plus the evaluation and holdout runners behind the
//! `dlfit2` binary.

pub mod bnet;
pub mod program_text;
pub mod report;
pub mod transitions_io;

pub use bnet::{emit_bnet, parse_bnet, BnetError, BooleanExpr, BooleanNetwork};
pub use program_text::{emit_program, parse_program, ProgramTextError};
pub use report::{holdout_mean, holdout_trial, run_eval, EvalReport, HoldoutPipeline};
