//! Logic-program text format.
//!
//! One rule per line: `head :- lit, lit, not lit.` and facts as `head.`.
//! `%` starts a comment. The variable order of the base normally follows
//! first appearance; when that would not reproduce the program (unused
//! variables, or rule order visiting variables out of base order), the
//! emitter prepends a `% vars:` directive that the parser honors.

use dlfit2_core::{Body, HerbrandBase, LogicProgram, Rule, Ternary};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProgramTextError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error(transparent)]
    Core(#[from] dlfit2_core::Error),
}

type Result<T> = std::result::Result<T, ProgramTextError>;

const VARS_DIRECTIVE: &str = "% vars:";

#[derive(Debug, Clone, PartialEq, Eq)]
struct RawLiteral {
    name: String,
    negated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct RawRule {
    head: String,
    body: Vec<RawLiteral>,
    line: usize,
}

struct LineParser<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    text: &'a str,
}

impl<'a> LineParser<'a> {
    fn new(text: &'a str, line: usize) -> Self {
        Self {
            chars: text.chars().collect(),
            pos: 0,
            line,
            text,
        }
    }

    fn syntax<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(ProgramTextError::Syntax {
            line: self.line,
            col: self.pos + 1,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while matches!(self.chars.get(self.pos), Some(c) if c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, expected: &str) -> bool {
        self.skip_ws();
        let rest: String = self.chars[self.pos..].iter().collect();
        if rest.starts_with(expected) {
            self.pos += expected.chars().count();
            true
        } else {
            false
        }
    }

    fn identifier(&mut self) -> Result<String> {
        self.skip_ws();
        let start = self.pos;
        match self.chars.get(self.pos) {
            Some(c) if c.is_ascii_alphabetic() || *c == '_' => self.pos += 1,
            _ => return self.syntax("expected identifier"),
        }
        while matches!(self.chars.get(self.pos), Some(c) if c.is_ascii_alphanumeric() || *c == '_')
        {
            self.pos += 1;
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }

    fn rule(mut self) -> Result<RawRule> {
        let head = self.identifier()?;
        let mut body = Vec::new();
        if self.eat(":-") {
            loop {
                // `not` negates only as a standalone keyword; `nota` is a name
                self.skip_ws();
                let negated = self.chars[self.pos..].starts_with(&['n', 'o', 't'])
                    && matches!(self.chars.get(self.pos + 3), Some(c) if c.is_whitespace());
                if negated {
                    self.pos += 3;
                }
                let name = self.identifier()?;
                body.push(RawLiteral { name, negated });
                match self.peek() {
                    Some(',') => {
                        self.pos += 1;
                    }
                    Some('.') => break,
                    _ => return self.syntax("expected `,` or `.`"),
                }
            }
        }
        if self.peek() != Some('.') {
            return self.syntax(format!("missing `.` after `{}`", self.text.trim_end()));
        }
        self.pos += 1;
        if let Some(stray) = self.peek() {
            return self.syntax(format!("unexpected `{stray}` after rule"));
        }
        Ok(RawRule {
            head,
            body,
            line: self.line,
        })
    }
}

/// Parse program text. An empty file is the empty program over no variables.
pub fn parse_program(text: &str) -> Result<LogicProgram> {
    let mut declared: Option<Vec<String>> = None;
    let mut raw_rules = Vec::new();
    for (index, raw_line) in text.lines().enumerate() {
        let number = index + 1;
        let trimmed = raw_line.trim();
        if let Some(rest) = trimmed.strip_prefix(VARS_DIRECTIVE) {
            declared = Some(rest.split_whitespace().map(String::from).collect());
            continue;
        }
        let content = match raw_line.find('%') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        if content.trim().is_empty() {
            continue;
        }
        raw_rules.push(LineParser::new(content, number).rule()?);
    }

    let mut order: Vec<String> = declared.unwrap_or_default();
    let register = |name: &str, order: &mut Vec<String>| {
        if !order.iter().any(|existing| existing == name) {
            order.push(name.to_string());
        }
    };
    for rule in &raw_rules {
        register(&rule.head, &mut order);
        for lit in &rule.body {
            register(&lit.name, &mut order);
        }
    }

    let base = HerbrandBase::new(order)?;
    let mut rules = Vec::with_capacity(raw_rules.len());
    for raw in raw_rules {
        let head = base.index_of(&raw.head).expect("registered above");
        let mut body = Body::EMPTY;
        for lit in &raw.body {
            let index = base.index_of(&lit.name).expect("registered above");
            let entry = if lit.negated {
                Ternary::Negative
            } else {
                Ternary::Positive
            };
            if body.entry(index) != Ternary::Absent && body.entry(index) != entry {
                return Err(ProgramTextError::Syntax {
                    line: raw.line,
                    col: 1,
                    msg: format!("contradictory literals for `{}`", lit.name),
                });
            }
            body = body.set(index, entry);
        }
        rules.push(Rule::new(head, body));
    }
    Ok(LogicProgram::new(base, rules)?)
}

fn render_rule(rule: &Rule, base: &HerbrandBase) -> String {
    let head = base.name(rule.head).unwrap_or_default();
    if rule.body.is_empty() {
        return format!("{head}.");
    }
    let literals: Vec<String> = (0..base.len())
        .filter_map(|i| match rule.body.entry(i) {
            Ternary::Absent => None,
            Ternary::Positive => Some(base.name(i).unwrap_or_default().to_string()),
            Ternary::Negative => Some(format!("not {}", base.name(i).unwrap_or_default())),
        })
        .collect();
    format!("{head} :- {}.", literals.join(", "))
}

/// Render a program. `parse_program(emit_program(p)) == p` for every program.
pub fn emit_program(program: &LogicProgram) -> String {
    let base = program.base();
    let mut body = String::new();
    let mut appearance: Vec<usize> = Vec::new();
    let note = |index: usize, seen: &mut Vec<usize>| {
        if !seen.contains(&index) {
            seen.push(index);
        }
    };
    for rule in program.rules() {
        note(rule.head, &mut appearance);
        for i in 0..base.len() {
            if rule.body.entry(i) != Ternary::Absent {
                note(i, &mut appearance);
            }
        }
        body.push_str(&render_rule(rule, base));
        body.push('\n');
    }

    let natural: Vec<usize> = (0..base.len()).collect();
    if appearance == natural {
        body
    } else {
        let names = base.names().join(" ");
        format!("{VARS_DIRECTIVE} {names}\n{body}")
    }
}
