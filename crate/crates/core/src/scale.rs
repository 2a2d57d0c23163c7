//! Applying a fixed-width predictor to wider systems.
//!
//! Every size-n variable subset containing the target variable induces a
//! projected transition set. Under synchronous semantics a projection that
//! maps one reduced state to two different labels cannot be explained by the
//! subset, so it is skipped; consistent projections are fed to the predictor
//! and the learned rules are mapped back to the original variables. If every
//! subset for a variable is inconsistent, that variable's true body must be
//! longer than n.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::logic::{Body, HerbrandBase, LabeledTransitions, LogicProgram, Rule, State, Ternary, TransitionSet};
use crate::predictor::RulePredictor;

/// An ordered choice of original variable indices together with their
/// canonical positions; the target variable maps to position 0 and the
/// remaining members keep ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetMapping {
    subset: Vec<usize>,
    positions: Vec<usize>,
}

impl SubsetMapping {
    pub fn for_target(subset: Vec<usize>, target: usize) -> Result<Self> {
        let target_slot = subset
            .iter()
            .position(|&v| v == target)
            .ok_or(Error::NotInSubset { index: target })?;
        let mut positions = vec![0; subset.len()];
        let mut next = 1;
        for (slot, _) in subset.iter().enumerate() {
            if slot == target_slot {
                positions[slot] = 0;
            } else {
                positions[slot] = next;
                next += 1;
            }
        }
        Ok(Self { subset, positions })
    }

    pub fn subset(&self) -> &[usize] {
        &self.subset
    }

    pub fn width(&self) -> usize {
        self.subset.len()
    }

    /// Original variable sitting at canonical position `pos`.
    pub fn original_of(&self, pos: usize) -> usize {
        let slot = self
            .positions
            .iter()
            .position(|&p| p == pos)
            .expect("positions form a bijection");
        self.subset[slot]
    }

    fn project_state(&self, state: State) -> State {
        let mut out = State::new(0);
        for (slot, &var) in self.subset.iter().enumerate() {
            out = out.with(self.positions[slot], state.get(var));
        }
        out
    }

    /// Expand a canonical-width rule back to original variable indices,
    /// replacing the position-0 head with `target`.
    fn unmap_rule(&self, body: Body, target: usize) -> Rule {
        let mut out = Body::EMPTY;
        for pos in 0..self.width() {
            match body.entry(pos) {
                Ternary::Absent => {}
                entry => out = out.set(self.original_of(pos), entry),
            }
        }
        Rule::new(target, out)
    }
}

/// Outcome of restricting a transition set to a variable subset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubsetProjection {
    Consistent(LabeledTransitions),
    /// Two sources collapsed onto one reduced state with different labels.
    Inconsistent,
}

/// Restrict every source state to the subset and pair it with the target
/// variable's next-state bit, merging sources that agree.
pub fn project_subset(
    transitions: &TransitionSet,
    mapping: &SubsetMapping,
    target: usize,
) -> Result<SubsetProjection> {
    if !mapping.subset().contains(&target) {
        return Err(Error::NotInSubset { index: target });
    }
    let mut items: std::collections::BTreeMap<State, bool> = std::collections::BTreeMap::new();
    for (src, tgt) in transitions.pairs() {
        let reduced = mapping.project_state(src);
        let label = tgt.get(target);
        match items.insert(reduced, label) {
            Some(previous) if previous != label => return Ok(SubsetProjection::Inconsistent),
            _ => {}
        }
    }
    Ok(SubsetProjection::Consistent(LabeledTransitions::new(
        mapping.width(),
        items,
    )))
}

/// Whether some size-`n` subset containing the variable explains it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BodyBound {
    Bounded,
    /// Every subset was inconsistent: the body length exceeds `n`.
    Exceeds(usize),
}

fn subsets_containing(total: usize, size: usize, member: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if size == 0 || size > total {
        return out;
    }
    let others: Vec<usize> = (0..total).filter(|&v| v != member).collect();
    let mut pick = vec![0usize; size - 1];
    fn recurse(
        others: &[usize],
        start: usize,
        pick: &mut Vec<usize>,
        depth: usize,
        member: usize,
        out: &mut Vec<Vec<usize>>,
    ) {
        if depth == pick.len() {
            let mut subset: Vec<usize> = pick[..depth].to_vec();
            subset.push(member);
            subset.sort_unstable();
            out.push(subset);
            return;
        }
        for i in start..others.len() {
            pick[depth] = others[i];
            recurse(others, i + 1, pick, depth + 1, member, out);
        }
    }
    recurse(&others, 0, &mut pick, 0, member, &mut out);
    out.sort_unstable();
    out
}

/// Learn a wide system with a width-`n` predictor by iterating all size-`n`
/// subsets containing each variable, skipping inconsistent projections, and
/// unioning the unmapped rules. Subsumed rules are dropped at the end.
pub fn decompose_predict(
    transitions: &TransitionSet,
    base: &HerbrandBase,
    predictor: &dyn RulePredictor,
) -> Result<LogicProgram> {
    let total = base.len();
    let width = predictor.width();
    if total < width {
        return Err(Error::WidthMismatch {
            left: total,
            right: width,
        });
    }
    let mut rules: BTreeSet<Rule> = BTreeSet::new();
    for target in 0..total {
        for subset in subsets_containing(total, width, target) {
            let mapping = SubsetMapping::for_target(subset, target)?;
            let labeled = match project_subset(transitions, &mapping, target)? {
                SubsetProjection::Consistent(labeled) => labeled,
                SubsetProjection::Inconsistent => continue,
            };
            if labeled.is_empty() {
                continue;
            }
            for body in predictor.predict_bodies(&labeled)? {
                rules.insert(mapping.unmap_rule(body, target));
            }
        }
    }
    let minimal: Vec<Rule> = rules
        .iter()
        .filter(|rule| {
            !rules
                .iter()
                .any(|other| *other != **rule && other.subsumes(rule))
        })
        .copied()
        .collect();
    LogicProgram::new(base.clone(), minimal)
}

/// `Exceeds(n)` iff every size-`n` subset containing `target` projects
/// inconsistently.
pub fn min_body_bound(
    transitions: &TransitionSet,
    target: usize,
    width: usize,
) -> Result<BodyBound> {
    let total = transitions.base().len();
    if target >= total {
        return Err(Error::VariableOutOfRange {
            index: target,
            n: total,
        });
    }
    if width >= total {
        return Ok(BodyBound::Bounded);
    }
    for subset in subsets_containing(total, width, target) {
        let mapping = SubsetMapping::for_target(subset, target)?;
        if let SubsetProjection::Consistent(_) = project_subset(transitions, &mapping, target)? {
            return Ok(BodyBound::Bounded);
        }
    }
    Ok(BodyBound::Exceeds(width))
}
