//! Shared fixtures for the criterion benchmarks.

use dlfit2_core::{Body, HerbrandBase, LogicProgram, Rule};

/// Ring system of `n` variables: `v_i <- v_{i-1} & !v_{i-2}`.
pub fn ring_program(n: usize) -> LogicProgram {
    let base = HerbrandBase::anonymous(n).unwrap();
    let rules = (0..n).map(|i| {
        let prev = (i + n - 1) % n;
        let prev2 = (i + n - 2) % n;
        Rule::new(i, Body::new(1 << prev, 1 << prev2))
    });
    LogicProgram::new(base, rules).unwrap()
}
