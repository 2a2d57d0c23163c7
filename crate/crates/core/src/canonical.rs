//! Variable-assignment invariance.
//!
//! Topologically identical systems that differ only in variable naming
//! produce different per-variable transition sets. Reordering the variables
//! so that the target variable always sits at position 0 collapses those
//! duplicates: the model sees one input where it would otherwise see many,
//! and learned rules are mapped back through the inverse permutation.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::logic::{Body, LabeledTransitions, Rule, State, Ternary, TransitionSet};

/// A bijection on variable positions: `forward[i]` is the new position of
/// variable `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarPermutation {
    forward: Vec<usize>,
}

impl VarPermutation {
    pub fn new(forward: Vec<usize>) -> Result<Self> {
        let n = forward.len();
        let mut seen = vec![false; n];
        for &target in &forward {
            if target >= n || seen[target] {
                return Err(Error::InvalidConfig(format!(
                    "not a permutation: {forward:?}"
                )));
            }
            seen[target] = true;
        }
        Ok(Self { forward })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            forward: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.forward.iter().enumerate().all(|(i, &t)| i == t)
    }

    pub fn forward(&self) -> &[usize] {
        &self.forward
    }

    /// New position of variable `i`.
    pub fn apply(&self, i: usize) -> usize {
        self.forward[i]
    }

    pub fn inverse(&self) -> VarPermutation {
        let mut inverse = vec![0; self.forward.len()];
        for (i, &target) in self.forward.iter().enumerate() {
            inverse[target] = i;
        }
        Self { forward: inverse }
    }

    /// Move each set bit `i` of the state to position `forward[i]`.
    pub fn permute_state(&self, state: State) -> State {
        let mut bits = 0u64;
        for (i, &target) in self.forward.iter().enumerate() {
            if state.get(i) {
                bits |= 1 << target;
            }
        }
        State::new(bits)
    }

    pub fn permute_body(&self, body: Body) -> Body {
        let mut out = Body::EMPTY;
        for (i, &target) in self.forward.iter().enumerate() {
            match body.entry(i) {
                Ternary::Absent => {}
                entry => out = out.set(target, entry),
            }
        }
        out
    }
}

/// The cyclic rotation that brings variable `v` to position 0:
/// `forward[i] = (i - v) mod n`.
pub fn rotation_for(v: usize, n: usize) -> Result<VarPermutation> {
    if v >= n {
        return Err(Error::VariableOutOfRange { index: v, n });
    }
    VarPermutation::new((0..n).map(|i| (i + n - v) % n).collect())
}

/// Relabel every state of a per-variable transition set; labels are untouched.
pub fn permute_labeled(
    labeled: &LabeledTransitions,
    omega: &VarPermutation,
) -> Result<LabeledTransitions> {
    if labeled.width() != omega.len() {
        return Err(Error::WidthMismatch {
            left: labeled.width(),
            right: omega.len(),
        });
    }
    Ok(LabeledTransitions::new(
        labeled.width(),
        labeled
            .items()
            .map(|(state, label)| (omega.permute_state(state), label)),
    ))
}

/// Forward-map rules into permuted positions: literal and head indices `i`
/// move to `forward[i]`.
pub fn permute_rules<I>(rules: I, omega: &VarPermutation) -> BTreeSet<Rule>
where
    I: IntoIterator<Item = Rule>,
{
    rules
        .into_iter()
        .map(|rule| Rule::new(omega.apply(rule.head), omega.permute_body(rule.body)))
        .collect()
}

/// Map rules expressed over canonical positions back to original variables
/// by applying the inverse permutation.
pub fn unpermute_rules<I>(rules: I, omega: &VarPermutation) -> BTreeSet<Rule>
where
    I: IntoIterator<Item = Rule>,
{
    permute_rules(rules, &omega.inverse())
}

/// A per-variable transition set rewritten so the target variable occupies
/// position 0, together with the permutation that got it there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalExample {
    pub labeled: LabeledTransitions,
    pub omega: VarPermutation,
}

/// Project onto `v` and rotate `v` into position 0.
pub fn canonical_example(transitions: &TransitionSet, v: usize) -> Result<CanonicalExample> {
    let labeled = crate::logic::project(transitions, v)?;
    let omega = rotation_for(v, transitions.base().len())?;
    Ok(CanonicalExample {
        labeled: permute_labeled(&labeled, &omega)?,
        omega,
    })
}

/// Like [`canonical_example`], but additionally searches all `(n-1)!`
/// orderings of the non-target variables for the one whose sorted token
/// encoding is smallest, so that systems related by arbitrary renamings
/// collapse to one input. Ties break toward the lexicographically smallest
/// permutation. Factorial cost; intended for n <= 4.
pub fn canonical_example_strong(
    transitions: &TransitionSet,
    v: usize,
) -> Result<CanonicalExample> {
    let n = transitions.base().len();
    let labeled = crate::logic::project(transitions, v)?;
    if n <= 1 {
        return Ok(CanonicalExample {
            omega: VarPermutation::identity(n),
            labeled,
        });
    }

    let tail: Vec<usize> = (0..n).filter(|&i| i != v).collect();
    let mut best: Option<(Vec<u64>, VarPermutation, LabeledTransitions)> = None;
    for ordering in permutations(&tail) {
        let mut forward = vec![0; n];
        forward[v] = 0;
        for (slot, &var) in ordering.iter().enumerate() {
            forward[var] = slot + 1;
        }
        let omega = VarPermutation::new(forward)?;
        let candidate = permute_labeled(&labeled, &omega)?;
        let encoding = encode_tokens(&candidate);
        let better = match &best {
            None => true,
            Some((best_encoding, best_omega, _)) => {
                encoding < *best_encoding
                    || (encoding == *best_encoding && omega.forward() < best_omega.forward())
            }
        };
        if better {
            best = Some((encoding, omega, candidate));
        }
    }
    let (_, omega, labeled) = best.expect("n > 1 has at least one tail ordering");
    Ok(CanonicalExample { labeled, omega })
}

/// Sorted `2 * state + label` encoding used to compare candidate orderings.
fn encode_tokens(labeled: &LabeledTransitions) -> Vec<u64> {
    let mut ids: Vec<u64> = labeled
        .items()
        .map(|(state, label)| state.bits() << 1 | label as u64)
        .collect();
    ids.sort_unstable();
    ids
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (i, &head) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{full_transitions, project};
    use crate::testutil::{system_a, system_b};

    #[test]
    fn rotation_examples() {
        assert!(rotation_for(0, 3).unwrap().is_identity());
        assert_eq!(rotation_for(1, 3).unwrap().forward(), &[2, 0, 1]);
        assert_eq!(rotation_for(2, 3).unwrap().forward(), &[1, 2, 0]);
        assert!(rotation_for(3, 3).is_err());
    }

    #[test]
    fn permute_labeled_maps_bit_positions() {
        let labeled = LabeledTransitions::new(3, [(State::new(0b001), true)]);
        let omega = VarPermutation::new(vec![2, 0, 1]).unwrap();
        let permuted = permute_labeled(&labeled, &omega).unwrap();
        assert_eq!(permuted.label(State::new(0b100)), Some(true));
    }

    #[test]
    fn permute_labeled_identity_is_noop() {
        let table = full_transitions(&system_a()).unwrap();
        let labeled = project(&table, 1).unwrap();
        let identity = VarPermutation::identity(3);
        assert_eq!(permute_labeled(&labeled, &identity).unwrap(), labeled);
    }

    #[test]
    fn permute_labeled_rejects_width_mismatch() {
        let labeled = LabeledTransitions::new(3, []);
        let omega = VarPermutation::identity(2);
        assert!(permute_labeled(&labeled, &omega).is_err());
    }

    /// The two systems differ only by swapping p and q; projecting system B
    /// onto q and transposing p and q must reproduce system A's view of p.
    #[test]
    fn transposition_collapses_the_swapped_system() {
        let a = project(&full_transitions(&system_a()).unwrap(), 0).unwrap();
        let b = project(&full_transitions(&system_b()).unwrap(), 1).unwrap();
        assert_ne!(a, b);

        let swap_pq = VarPermutation::new(vec![1, 0, 2]).unwrap();
        let b_canonical = permute_labeled(&b, &swap_pq).unwrap();
        let expected = LabeledTransitions::new(
            3,
            [
                (0b111, true),
                (0b011, true),
                (0b001, false),
                (0b000, false),
                (0b100, false),
                (0b110, true),
                (0b101, false),
                (0b010, true),
            ]
            .map(|(bits, label)| (State::new(bits), label)),
        );
        assert_eq!(b_canonical, expected);
        assert_eq!(b_canonical, a);
    }

    #[test]
    fn unpermute_recovers_original_names() {
        // head v0 <- v1 under the p/q transposition comes back as q <- p
        let swap_pq = VarPermutation::new(vec![1, 0, 2]).unwrap();
        let learned = [Rule::new(0, Body::new(0b010, 0))];
        let recovered = unpermute_rules(learned, &swap_pq);
        assert_eq!(
            recovered.into_iter().collect::<Vec<_>>(),
            vec![Rule::new(1, Body::new(0b001, 0))]
        );

        let identity = VarPermutation::identity(3);
        let same = unpermute_rules(learned, &identity);
        assert!(same.contains(&learned[0]));

        let rot = VarPermutation::new(vec![1, 2, 0]).unwrap();
        let mapped = unpermute_rules([Rule::new(0, Body::new(0, 0b100))], &rot);
        assert_eq!(
            mapped.into_iter().collect::<Vec<_>>(),
            vec![Rule::new(2, Body::new(0, 0b010))]
        );
    }

    #[test]
    fn permute_then_unpermute_is_identity() {
        let rules = [
            Rule::new(0, Body::new(0b010, 0b100)),
            Rule::new(2, Body::new(0b001, 0)),
        ];
        for forward in [vec![1, 2, 0], vec![2, 0, 1], vec![0, 2, 1]] {
            let omega = VarPermutation::new(forward).unwrap();
            let there = permute_rules(rules, &omega);
            let back = unpermute_rules(there, &omega);
            assert_eq!(back.into_iter().collect::<Vec<_>>(), rules.to_vec());
        }
    }

    #[test]
    fn canonical_example_rotates_target_to_front() {
        let table = full_transitions(&system_a()).unwrap();

        let for_p = canonical_example(&table, 0).unwrap();
        assert!(for_p.omega.is_identity());
        assert_eq!(for_p.labeled, project(&table, 0).unwrap());

        let for_q = canonical_example(&table, 1).unwrap();
        assert_eq!(for_q.omega.forward(), &[2, 0, 1]);
        // q's successor bit is p & r, so the rotated view must label exactly
        // the states whose original p and r bits (now at positions 2 and 1)
        // are both set.
        for (state, label) in for_q.labeled.items() {
            let p_bit = state.get(2);
            let r_bit = state.get(1);
            assert_eq!(label, p_bit && r_bit);
        }

        let empty = TransitionSet::new(table.base().clone(), []);
        assert!(canonical_example(&empty, 1).unwrap().labeled.is_empty());
    }

    #[test]
    fn strong_canonical_collapses_transposed_systems() {
        let a = full_transitions(&system_a()).unwrap();
        let b = full_transitions(&system_b()).unwrap();
        let weak_a = canonical_example(&a, 0).unwrap();
        let weak_b = canonical_example(&b, 1).unwrap();
        // the rotation alone does not identify the transposed pair
        assert_ne!(weak_a.labeled, weak_b.labeled);

        let strong_a = canonical_example_strong(&a, 0).unwrap();
        let strong_b = canonical_example_strong(&b, 1).unwrap();
        assert_eq!(strong_a.labeled, strong_b.labeled);
        assert_eq!(strong_a.omega.apply(0), 0);
        assert_eq!(strong_b.omega.apply(1), 0);
    }

    #[test]
    fn strong_canonical_ties_break_lexicographically() {
        // empty observations: every ordering encodes identically
        let empty = TransitionSet::new(crate::testutil::base_pqr(), []);
        let strong = canonical_example_strong(&empty, 1).unwrap();
        assert_eq!(strong.omega.forward(), &[1, 0, 2]);
    }
}
