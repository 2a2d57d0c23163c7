//! Cross-module invariants, mostly property-based.

use dlfit2_core::{
    canonical_example, full_transitions, permute_labeled, permute_rules, program_mse, project,
    tp_step, unpermute_rules, Body, HerbrandBase, LogicProgram, Rule, State, Ternary,
    VarPermutation,
};
use proptest::prelude::*;

fn arb_body(n: usize) -> impl Strategy<Value = Body> {
    let mask = (1u64 << n) - 1;
    (0..=mask, 0..=mask).prop_map(move |(pos, neg)| Body::new(pos & mask, neg & mask & !pos))
}

fn arb_rule(n: usize) -> impl Strategy<Value = Rule> {
    (0..n, arb_body(n)).prop_map(|(head, body)| Rule::new(head, body))
}

fn arb_program(n: usize) -> impl Strategy<Value = LogicProgram> {
    prop::collection::vec(arb_rule(n), 0..=2 * n).prop_map(move |rules| {
        LogicProgram::new(HerbrandBase::anonymous(n).unwrap(), rules).unwrap()
    })
}

fn arb_permutation(n: usize) -> impl Strategy<Value = VarPermutation> {
    Just(()).prop_perturb(move |_, mut rng| {
        let mut forward: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.gen_range(0..=i);
            forward.swap(i, j);
        }
        VarPermutation::new(forward).unwrap()
    })
}

proptest! {
    /// Subsumption is a partial order on bodies.
    #[test]
    fn subsumption_partial_order(a in arb_body(4), b in arb_body(4), c in arb_body(4)) {
        prop_assert!(a.subsumes(a));
        if a.subsumes(b) && b.subsumes(a) {
            prop_assert_eq!(a, b);
        }
        if a.subsumes(b) && b.subsumes(c) {
            prop_assert!(a.subsumes(c));
        }
    }

    /// The metric is zero on identical programs, symmetric, and in [0, 1].
    #[test]
    fn mse_properties(p in arb_program(3), q in arb_program(3)) {
        prop_assert_eq!(program_mse(&p, &p).unwrap(), 0.0);
        let pq = program_mse(&p, &q).unwrap();
        let qp = program_mse(&q, &p).unwrap();
        prop_assert_eq!(pq, qp);
        prop_assert!((0.0..=1.0).contains(&pq));
    }

    /// A rule whose body holds always sets its head bit in the successor.
    #[test]
    fn firing_rules_set_their_heads(p in arb_program(4), bits in 0u64..16) {
        let state = State::new(bits);
        let next = tp_step(&p, state);
        for rule in p.rules() {
            if rule.body.matches(state) {
                prop_assert!(next.get(rule.head));
            }
        }
    }

    /// Every per-variable projection of a full table has 2^n items.
    #[test]
    fn projection_covers_every_state(p in arb_program(4)) {
        let table = full_transitions(&p).unwrap();
        for v in 0..4 {
            prop_assert_eq!(project(&table, v).unwrap().len(), 16);
        }
    }

    /// Permuting rules forward and back is the identity.
    #[test]
    fn permutation_roundtrip(rules in prop::collection::vec(arb_rule(4), 0..6),
                             omega in arb_permutation(4)) {
        let there = permute_rules(rules.clone(), &omega);
        let back = unpermute_rules(there, &omega);
        let expected: std::collections::BTreeSet<Rule> = rules.into_iter().collect();
        prop_assert_eq!(back, expected);
    }

    /// Renaming a program and projecting commutes with permuting the
    /// projection of the original program.
    #[test]
    fn canonicalization_commutes_with_renaming(p in arb_program(4),
                                               omega in arb_permutation(4),
                                               v in 0usize..4) {
        let renamed = p.rename(&omega).unwrap();
        let direct = project(&full_transitions(&renamed).unwrap(), omega.apply(v)).unwrap();
        let via_permute = permute_labeled(
            &project(&full_transitions(&p).unwrap(), v).unwrap(),
            &omega,
        ).unwrap();
        prop_assert_eq!(direct, via_permute);
    }

    /// Labels and cardinality survive state permutation.
    #[test]
    fn permute_labeled_preserves_labels(p in arb_program(3), omega in arb_permutation(3), v in 0usize..3) {
        let labeled = project(&full_transitions(&p).unwrap(), v).unwrap();
        let permuted = permute_labeled(&labeled, &omega).unwrap();
        prop_assert_eq!(labeled.len(), permuted.len());
        for (state, label) in labeled.items() {
            prop_assert_eq!(permuted.label(omega.permute_state(state)), Some(label));
        }
    }

    /// The canonical example always has its semantic target at position 0.
    #[test]
    fn canonical_head_sits_at_position_zero(p in arb_program(3), v in 0usize..3) {
        let table = full_transitions(&p).unwrap();
        let example = canonical_example(&table, v).unwrap();
        prop_assert_eq!(example.omega.apply(v), 0);
        // position 0 of each canonical state equals variable v of the source
        for (src, _) in table.pairs() {
            let canonical = example.omega.permute_state(src);
            prop_assert_eq!(canonical.get(0), src.get(v));
        }
    }
}

/// Complete-data learning reproduces dynamics exactly for every 2-variable
/// Boolean system (exhaustive over all 256 per-variable function pairs).
#[test]
fn symbolic_learner_is_exact_for_every_two_variable_system() {
    let base = HerbrandBase::anonymous(2).unwrap();
    for f0 in 0u64..16 {
        for f1 in 0u64..16 {
            let pairs = (0..4u64).map(|bits| {
                let mut next = 0u64;
                if f0 >> bits & 1 == 1 {
                    next |= 1;
                }
                if f1 >> bits & 1 == 1 {
                    next |= 2;
                }
                (State::new(bits), State::new(next))
            });
            let transitions = dlfit2_core::TransitionSet::new(base.clone(), pairs);
            let learned = dlfit2_core::learn_program(&transitions).unwrap();
            let reproduced = full_transitions(&learned).unwrap();
            assert_eq!(reproduced, transitions);
        }
    }
}

/// Body entries round-trip through the ternary accessor.
#[test]
fn body_entries_roundtrip() {
    let body = Body::new(0b0101, 0b1010);
    assert_eq!(body.entry(0), Ternary::Positive);
    assert_eq!(body.entry(1), Ternary::Negative);
    assert_eq!(body.entry(2), Ternary::Positive);
    assert_eq!(body.entry(3), Ternary::Negative);
    assert_eq!(body.entry(4), Ternary::Absent);
    assert_eq!(body.len(), 4);
}
