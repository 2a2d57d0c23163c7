//! State-transition files.
//!
//! CSV: a `# vars:` comment naming the variables, a `source,target` header,
//! then one bitstring pair per line. Bitstrings are positional with variable
//! 0 leftmost. JSON carries the same content as `{"vars": [..], "pairs":
//! [["010","101"], ..]}`.

use anyhow::{bail, Context, Result};
use dlfit2_core::{HerbrandBase, State, TransitionSet};
use serde::{Deserialize, Serialize};

pub fn write_transitions_csv(transitions: &TransitionSet) -> String {
    let base = transitions.base();
    let n = base.len();
    let mut out = format!("# vars: {}\nsource,target\n", base.names().join(" "));
    for (src, tgt) in transitions.pairs() {
        out.push_str(&format!(
            "{},{}\n",
            src.to_bitstring(n),
            tgt.to_bitstring(n)
        ));
    }
    out
}

pub fn read_transitions_csv(text: &str) -> Result<TransitionSet> {
    let mut names: Option<Vec<String>> = None;
    let mut pairs: Vec<(State, State)> = Vec::new();
    let mut width: Option<usize> = None;
    for (index, line) in text.lines().enumerate() {
        let number = index + 1;
        let trimmed = line.trim();
        if let Some(rest) = trimmed.strip_prefix("# vars:") {
            names = Some(rest.split_whitespace().map(String::from).collect());
            continue;
        }
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed == "source,target" {
            continue;
        }
        let (src, tgt) = trimmed
            .split_once(',')
            .with_context(|| format!("line {number}: expected `source,target`"))?;
        let (src, tgt) = (src.trim(), tgt.trim());
        if src.len() != tgt.len() {
            bail!("line {number}: source and target widths differ");
        }
        match width {
            None => width = Some(src.len()),
            Some(w) if w != src.len() => bail!("line {number}: inconsistent state width"),
            _ => {}
        }
        pairs.push((
            State::from_bitstring(src).with_context(|| format!("line {number}: bad source"))?,
            State::from_bitstring(tgt).with_context(|| format!("line {number}: bad target"))?,
        ));
    }
    let width = width
        .or(names.as_ref().map(Vec::len))
        .context("empty transitions file")?;
    let base = match names {
        Some(names) => {
            if names.len() != width {
                bail!("variable list names {} variables, states have {width}", names.len());
            }
            HerbrandBase::new(names)?
        }
        None => HerbrandBase::anonymous(width)?,
    };
    let deduped = TransitionSet::new(base, pairs.clone());
    if deduped.len() != pairs.len() {
        bail!("duplicate source state in transitions file");
    }
    Ok(deduped)
}

#[derive(Serialize, Deserialize)]
struct TransitionsJson {
    vars: Vec<String>,
    pairs: Vec<(String, String)>,
}

pub fn write_transitions_json(transitions: &TransitionSet) -> Result<String> {
    let n = transitions.base().len();
    let doc = TransitionsJson {
        vars: transitions.base().names().to_vec(),
        pairs: transitions
            .pairs()
            .map(|(s, t)| (s.to_bitstring(n), t.to_bitstring(n)))
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn read_transitions_json(text: &str) -> Result<TransitionSet> {
    let doc: TransitionsJson = serde_json::from_str(text)?;
    let base = HerbrandBase::new(doc.vars)?;
    let n = base.len();
    let mut pairs = Vec::with_capacity(doc.pairs.len());
    for (src, tgt) in &doc.pairs {
        if src.len() != n || tgt.len() != n {
            bail!("state width does not match variable list");
        }
        pairs.push((State::from_bitstring(src)?, State::from_bitstring(tgt)?));
    }
    let set = TransitionSet::new(base, pairs.clone());
    if set.len() != pairs.len() {
        bail!("duplicate source state in transitions file");
    }
    Ok(set)
}

pub fn render_transitions_text(transitions: &TransitionSet) -> String {
    let n = transitions.base().len();
    let mut out = format!("vars: {}\n", transitions.base().names().join(" "));
    for (src, tgt) in transitions.pairs() {
        out.push_str(&format!(
            "{} -> {}\n",
            src.to_bitstring(n),
            tgt.to_bitstring(n)
        ));
    }
    out
}
