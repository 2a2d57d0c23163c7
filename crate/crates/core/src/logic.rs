//! Propositional state-transition logic programs and their synchronous semantics.
//!
//! A system over `n` Boolean variables is described by rules of the form
//! `head <- p1, .., pm, not q1, .., not qk` with an implicit time shift: the
//! body is evaluated at step `t`, the head holds at step `t + 1`. Applying
//! every rule at once to a state yields the unique successor state.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

/// Hard limit on variable count; states and rule bodies are stored in `u64` masks.
pub const MAX_VARS: usize = 63;

/// Default cap for operations that enumerate all `2^n` states.
pub const ENUMERATION_CAP: usize = 20;

/// The ordered set of variable names of a system. Variable index `i` refers
/// to `names[i]` for the lifetime of the value.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HerbrandBase {
    names: Vec<String>,
}

impl HerbrandBase {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.len() > MAX_VARS {
            return Err(Error::TooManyVariables {
                n: names.len(),
                max: MAX_VARS,
            });
        }
        let mut seen = BTreeSet::new();
        for name in &names {
            if name.is_empty() {
                return Err(Error::EmptyVariableName);
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateVariableName(name.clone()));
            }
        }
        Ok(Self { names })
    }

    /// Anonymous base `v0, v1, .., v{n-1}`.
    pub fn anonymous(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| format!("v{i}")))
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.names.get(index).map(String::as_str)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|candidate| candidate == name)
    }

    fn check_index(&self, index: usize) -> Result<()> {
        if index < self.len() {
            Ok(())
        } else {
            Err(Error::VariableOutOfRange {
                index,
                n: self.len(),
            })
        }
    }
}

/// One Herbrand interpretation: bit `i` is set iff variable `i` is true.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct State(u64);

impl State {
    pub fn new(bits: u64) -> Self {
        State(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn get(self, index: usize) -> bool {
        self.0 >> index & 1 == 1
    }

    pub fn with(self, index: usize, value: bool) -> Self {
        if value {
            State(self.0 | 1 << index)
        } else {
            State(self.0 & !(1 << index))
        }
    }

    /// Positional rendering, variable 0 first: `{q}` over `p,q,r` is `"010"`.
    pub fn to_bitstring(self, n: usize) -> String {
        (0..n).map(|i| if self.get(i) { '1' } else { '0' }).collect()
    }

    pub fn from_bitstring(text: &str) -> Result<Self> {
        let mut bits = 0u64;
        if text.len() > MAX_VARS {
            return Err(Error::TooManyVariables {
                n: text.len(),
                max: MAX_VARS,
            });
        }
        for (i, ch) in text.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => bits |= 1 << i,
                other => {
                    return Err(Error::CorruptRecord {
                        kind: "state bitstring",
                        detail: format!("unexpected character `{other}`"),
                    })
                }
            }
        }
        Ok(State(bits))
    }
}

/// Polarity of one variable inside a rule body.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ternary {
    Absent,
    Positive,
    Negative,
}

/// A rule body: a ternary vector over the variables, stored as disjoint
/// positive/negative masks. The mask pair is a unique representation, so
/// equal bodies compare equal with no ordering ambiguity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Body {
    pos: u64,
    neg: u64,
}

impl Body {
    pub const EMPTY: Body = Body { pos: 0, neg: 0 };

    pub fn new(pos: u64, neg: u64) -> Self {
        debug_assert_eq!(pos & neg, 0, "positive and negative masks must be disjoint");
        Body { pos, neg }
    }

    pub fn from_entries(entries: &[Ternary]) -> Self {
        let mut body = Body::EMPTY;
        for (i, entry) in entries.iter().enumerate() {
            body = body.set(i, *entry);
        }
        body
    }

    pub fn pos(self) -> u64 {
        self.pos
    }

    pub fn neg(self) -> u64 {
        self.neg
    }

    pub fn entry(self, index: usize) -> Ternary {
        if self.pos >> index & 1 == 1 {
            Ternary::Positive
        } else if self.neg >> index & 1 == 1 {
            Ternary::Negative
        } else {
            Ternary::Absent
        }
    }

    pub fn set(self, index: usize, entry: Ternary) -> Self {
        let bit = 1u64 << index;
        match entry {
            Ternary::Absent => Body::new(self.pos & !bit, self.neg & !bit),
            Ternary::Positive => Body::new(self.pos | bit, self.neg & !bit),
            Ternary::Negative => Body::new(self.pos & !bit, self.neg | bit),
        }
    }

    /// Number of literals in the body.
    pub fn len(self) -> usize {
        (self.pos | self.neg).count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.pos == 0 && self.neg == 0
    }

    /// Highest variable index mentioned plus one; 0 for the empty body.
    pub fn width(self) -> usize {
        64 - (self.pos | self.neg).leading_zeros() as usize
    }

    /// True when the body's condition holds in `state`.
    pub fn matches(self, state: State) -> bool {
        self.pos & state.bits() == self.pos && self.neg & state.bits() == 0
    }

    /// `self` subsumes `other` when every literal of `self` appears in `other`;
    /// the subsumer is the more general body.
    pub fn subsumes(self, other: Body) -> bool {
        self.pos & other.pos == self.pos && self.neg & other.neg == self.neg
    }
}

/// One state-transition rule: `head` becomes true at the next step whenever
/// the body holds at the current step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rule {
    pub head: usize,
    pub body: Body,
}

impl Rule {
    pub fn new(head: usize, body: Body) -> Self {
        Rule { head, body }
    }

    /// `self` subsumes `other`: same head, and `self`'s body literals are a
    /// subset of `other`'s.
    pub fn subsumes(&self, other: &Rule) -> bool {
        self.head == other.head && self.body.subsumes(other.body)
    }
}

/// Drop every body that is strictly subsumed by another body in the slice.
/// Duplicates collapse; the result is sorted.
pub fn minimize_bodies(bodies: &[Body]) -> Vec<Body> {
    let set: BTreeSet<Body> = bodies.iter().copied().collect();
    set.iter()
        .filter(|body| {
            !set.iter()
                .any(|other| *other != **body && other.subsumes(**body))
        })
        .copied()
        .collect()
}

/// A set of rules over a fixed Herbrand base.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogicProgram {
    base: HerbrandBase,
    rules: BTreeSet<Rule>,
}

impl LogicProgram {
    pub fn new<I>(base: HerbrandBase, rules: I) -> Result<Self>
    where
        I: IntoIterator<Item = Rule>,
    {
        let mut set = BTreeSet::new();
        for rule in rules {
            base.check_index(rule.head)?;
            let width = rule.body.width();
            if width > base.len() {
                return Err(Error::VariableOutOfRange {
                    index: width - 1,
                    n: base.len(),
                });
            }
            set.insert(rule);
        }
        Ok(Self { base, rules: set })
    }

    pub fn empty(base: HerbrandBase) -> Self {
        Self {
            base,
            rules: BTreeSet::new(),
        }
    }

    pub fn base(&self) -> &HerbrandBase {
        &self.base
    }

    pub fn rules(&self) -> impl Iterator<Item = &Rule> {
        self.rules.iter()
    }

    pub fn rule_count(&self) -> usize {
        self.rules.len()
    }

    pub fn contains(&self, rule: &Rule) -> bool {
        self.rules.contains(rule)
    }

    /// Longest body among the rules; 0 for the empty program.
    pub fn max_body_len(&self) -> usize {
        self.rules.iter().map(|r| r.body.len()).max().unwrap_or(0)
    }

    /// Program with the same base and multiplied-out variable roles: every
    /// index `i` (heads and body literals) is moved to `perm[i]`.
    pub fn rename(&self, perm: &crate::canonical::VarPermutation) -> Result<Self> {
        if perm.len() != self.base.len() {
            return Err(Error::WidthMismatch {
                left: perm.len(),
                right: self.base.len(),
            });
        }
        let rules = crate::canonical::permute_rules(self.rules.iter().copied(), perm);
        LogicProgram::new(self.base.clone(), rules)
    }
}

/// One synchronous application of the program to a state: the successor
/// contains exactly the heads of the rules whose bodies hold in `state`.
pub fn tp_step(program: &LogicProgram, state: State) -> State {
    let mut next = 0u64;
    for rule in &program.rules {
        if rule.body.matches(state) {
            next |= 1 << rule.head;
        }
    }
    State::new(next)
}

/// Deterministic source-to-target map for a (possibly partial) set of states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionSet {
    base: HerbrandBase,
    pairs: BTreeMap<State, State>,
}

impl TransitionSet {
    pub fn new<I>(base: HerbrandBase, pairs: I) -> Self
    where
        I: IntoIterator<Item = (State, State)>,
    {
        Self {
            base,
            pairs: pairs.into_iter().collect(),
        }
    }

    pub fn base(&self) -> &HerbrandBase {
        &self.base
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (State, State)> + '_ {
        self.pairs.iter().map(|(s, t)| (*s, *t))
    }

    pub fn target(&self, source: State) -> Option<State> {
        self.pairs.get(&source).copied()
    }

    /// Keep only the pairs whose source satisfies the predicate.
    pub fn restrict<F: Fn(State) -> bool>(&self, keep: F) -> Self {
        Self {
            base: self.base.clone(),
            pairs: self
                .pairs
                .iter()
                .filter(|(s, _)| keep(**s))
                .map(|(s, t)| (*s, *t))
                .collect(),
        }
    }
}

/// Apply the program to every one of the `2^n` states.
pub fn full_transitions(program: &LogicProgram) -> Result<TransitionSet> {
    full_transitions_capped(program, ENUMERATION_CAP)
}

pub fn full_transitions_capped(program: &LogicProgram, cap: usize) -> Result<TransitionSet> {
    let n = program.base.len();
    if n > cap {
        return Err(Error::EnumerationTooLarge { n, cap });
    }
    let pairs = (0..1u64 << n).map(|bits| {
        let state = State::new(bits);
        (state, tp_step(program, state))
    });
    Ok(TransitionSet::new(program.base.clone(), pairs))
}

/// Per-variable view of a transition set: each observed source state paired
/// with the bit "the target variable is true in the successor".
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabeledTransitions {
    width: usize,
    items: BTreeMap<State, bool>,
}

impl LabeledTransitions {
    pub fn new<I>(width: usize, items: I) -> Self
    where
        I: IntoIterator<Item = (State, bool)>,
    {
        Self {
            width,
            items: items.into_iter().collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> impl Iterator<Item = (State, bool)> + '_ {
        self.items.iter().map(|(s, b)| (*s, *b))
    }

    pub fn label(&self, state: State) -> Option<bool> {
        self.items.get(&state).copied()
    }

    /// True when every observed pair is present, i.e. all `2^width` states.
    pub fn is_complete(&self) -> bool {
        self.items.len() == 1usize << self.width
    }
}

/// Project a transition set onto a single variable.
pub fn project(transitions: &TransitionSet, var: usize) -> Result<LabeledTransitions> {
    transitions.base.check_index(var)?;
    Ok(LabeledTransitions::new(
        transitions.base.len(),
        transitions.pairs().map(|(src, tgt)| (src, tgt.get(var))),
    ))
}

/// Mean squared difference between the successor bits of two programs over
/// all states: `(1 / (2^n * n)) * sum_I sum_v (bit_v(T_P(I)) - bit_v(T_P'(I)))^2`.
pub fn program_mse(left: &LogicProgram, right: &LogicProgram) -> Result<f64> {
    if left.base != right.base {
        return Err(Error::BaseMismatch);
    }
    let n = left.base.len();
    if n > ENUMERATION_CAP {
        return Err(Error::EnumerationTooLarge {
            n,
            cap: ENUMERATION_CAP,
        });
    }
    if n == 0 {
        return Ok(0.0);
    }
    let mut mismatched_bits = 0u64;
    for bits in 0..1u64 << n {
        let state = State::new(bits);
        let a = tp_step(left, state);
        let b = tp_step(right, state);
        mismatched_bits += (a.bits() ^ b.bits()).count_ones() as u64;
    }
    Ok(mismatched_bits as f64 / ((1u64 << n) as f64 * n as f64))
}
