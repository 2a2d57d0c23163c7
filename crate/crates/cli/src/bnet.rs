//! Boolean-network files.
//!
//! One line per variable: `target, factors` where the factor expression uses
//! `&`, `|`, `!`, parentheses, and the constants `0`/`1`. A leading
//! `targets, factors` header, blank lines, and `#` comments are skipped.
//! Factors are converted to disjunctive normal form; every conjunct becomes
//! one rule for the target, with duplicate, contradictory, and subsumed
//! conjuncts removed.

use std::collections::BTreeMap;

use dlfit2_core::{minimize_bodies, Body, HerbrandBase, LogicProgram, Rule, State, Ternary};
use thiserror::Error;

/// Cap on conjuncts per target during DNF expansion.
pub const DNF_CAP: usize = 4096;

#[derive(Debug, Error)]
pub enum BnetError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: unknown variable `{name}`")]
    UnknownVariable { line: usize, col: usize, name: String },
    #[error("empty file: no variables declared")]
    Empty,
    #[error("factor for `{target}` expands past {cap} conjuncts")]
    DnfTooLarge { target: String, cap: usize },
    #[error(transparent)]
    Core(#[from] dlfit2_core::Error),
}

type Result<T> = std::result::Result<T, BnetError>;

/// Update-function expression tree for one variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BooleanExpr {
    Var(usize),
    Const(bool),
    Not(Box<BooleanExpr>),
    And(Box<BooleanExpr>, Box<BooleanExpr>),
    Or(Box<BooleanExpr>, Box<BooleanExpr>),
}

impl BooleanExpr {
    pub fn eval(&self, state: State) -> bool {
        match self {
            BooleanExpr::Var(v) => state.get(*v),
            BooleanExpr::Const(c) => *c,
            BooleanExpr::Not(inner) => !inner.eval(state),
            BooleanExpr::And(a, b) => a.eval(state) && b.eval(state),
            BooleanExpr::Or(a, b) => a.eval(state) || b.eval(state),
        }
    }
}

/// A parsed network: the declared base and one update expression per
/// variable, in declaration order.
#[derive(Debug, Clone)]
pub struct BooleanNetwork {
    base: HerbrandBase,
    factors: Vec<BooleanExpr>,
}

struct Line<'a> {
    number: usize,
    target: &'a str,
    target_col: usize,
    factor: &'a str,
    factor_col: usize,
}

fn split_lines(text: &str) -> Result<Vec<Line<'_>>> {
    let mut lines = Vec::new();
    for (index, raw) in text.lines().enumerate() {
        let number = index + 1;
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        if content.trim().is_empty() {
            continue;
        }
        let comma = content.find(',').ok_or_else(|| BnetError::Syntax {
            line: number,
            col: content.len() + 1,
            msg: "expected `target, factors`".into(),
        })?;
        let target_part = &content[..comma];
        let factor_part = &content[comma + 1..];
        let target = target_part.trim();
        let factor = factor_part.trim();
        if target == "targets" && factor == "factors" {
            continue; // conventional header line
        }
        if target.is_empty() {
            return Err(BnetError::Syntax {
                line: number,
                col: 1,
                msg: "missing target name".into(),
            });
        }
        let target_col = target_part.len() - target_part.trim_start().len() + 1;
        let factor_col = comma + 2 + (factor_part.len() - factor_part.trim_start().len());
        lines.push(Line {
            number,
            target,
            target_col,
            factor,
            factor_col,
        });
    }
    Ok(lines)
}

fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

struct ExprParser<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col_base: usize,
    base: &'a HerbrandBase,
}

impl<'a> ExprParser<'a> {
    fn new(text: &str, line: usize, col_base: usize, base: &'a HerbrandBase) -> Self {
        Self {
            chars: text.chars().collect(),
            pos: 0,
            line,
            col_base,
            base,
        }
    }

    fn col(&self) -> usize {
        self.col_base + self.pos
    }

    fn syntax<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(BnetError::Syntax {
            line: self.line,
            col: self.col(),
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

    fn parse(mut self) -> Result<BooleanExpr> {
        if self.peek().is_none() {
            return self.syntax("empty factor expression");
        }
        let expr = self.or_expr()?;
        if let Some(stray) = self.peek() {
            return self.syntax(format!("unexpected `{stray}`"));
        }
        Ok(expr)
    }

    fn or_expr(&mut self) -> Result<BooleanExpr> {
        let mut left = self.and_expr()?;
        while self.peek() == Some('|') {
            self.pos += 1;
            let right = self.and_expr()?;
            left = BooleanExpr::Or(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn and_expr(&mut self) -> Result<BooleanExpr> {
        let mut left = self.factor()?;
        while self.peek() == Some('&') {
            self.pos += 1;
            let right = self.factor()?;
            left = BooleanExpr::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn factor(&mut self) -> Result<BooleanExpr> {
        match self.peek() {
            Some('!') => {
                self.pos += 1;
                Ok(BooleanExpr::Not(Box::new(self.factor()?)))
            }
            Some('(') => {
                self.pos += 1;
                let inner = self.or_expr()?;
                if self.peek() != Some(')') {
                    return self.syntax("expected `)`");
                }
                self.pos += 1;
                Ok(inner)
            }
            Some('0') => {
                self.pos += 1;
                Ok(BooleanExpr::Const(false))
            }
            Some('1') => {
                self.pos += 1;
                Ok(BooleanExpr::Const(true))
            }
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                let start = self.pos;
                while matches!(self.chars.get(self.pos), Some(c) if c.is_ascii_alphanumeric() || *c == '_')
                {
                    self.pos += 1;
                }
                let name: String = self.chars[start..self.pos].iter().collect();
                match self.base.index_of(&name) {
                    Some(index) => Ok(BooleanExpr::Var(index)),
                    None => Err(BnetError::UnknownVariable {
                        line: self.line,
                        col: self.col_base + start,
                        name,
                    }),
                }
            }
            Some(other) => self.syntax(format!("unexpected `{other}`")),
            None => self.syntax("dangling operator"),
        }
    }
}

impl BooleanNetwork {
    pub fn parse(text: &str) -> Result<Self> {
        let lines = split_lines(text)?;
        if lines.is_empty() {
            return Err(BnetError::Empty);
        }
        let base = HerbrandBase::new(lines.iter().map(|l| l.target.to_string())).map_err(
            |err| match err {
                dlfit2_core::Error::DuplicateVariableName(name) => {
                    let line = lines
                        .iter()
                        .filter(|l| l.target == name)
                        .nth(1)
                        .expect("duplicate exists");
                    BnetError::Syntax {
                        line: line.number,
                        col: line.target_col,
                        msg: format!("duplicate target `{name}`"),
                    }
                }
                other => BnetError::Core(other),
            },
        )?;
        for line in &lines {
            if !valid_name(line.target) {
                return Err(BnetError::Syntax {
                    line: line.number,
                    col: line.target_col,
                    msg: format!("invalid target name `{}`", line.target),
                });
            }
        }
        let factors = lines
            .iter()
            .map(|line| {
                ExprParser::new(line.factor, line.number, line.factor_col, &base).parse()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { base, factors })
    }

    pub fn base(&self) -> &HerbrandBase {
        &self.base
    }

    pub fn factor(&self, v: usize) -> &BooleanExpr {
        &self.factors[v]
    }

    /// Truth-table step: evaluate every factor directly on the state.
    pub fn step(&self, state: State) -> State {
        let mut next = State::new(0);
        for (v, factor) in self.factors.iter().enumerate() {
            next = next.with(v, factor.eval(state));
        }
        next
    }

    /// DNF conversion of every factor into rules.
    pub fn to_program(&self) -> Result<LogicProgram> {
        let mut rules = Vec::new();
        for (v, factor) in self.factors.iter().enumerate() {
            let conjuncts = dnf(factor, self.base.name(v).unwrap_or_default())?;
            let bodies: Vec<Body> = conjuncts.iter().map(conjunct_to_body).collect();
            for body in minimize_bodies(&bodies) {
                rules.push(Rule::new(v, body));
            }
        }
        Ok(LogicProgram::new(self.base.clone(), rules)?)
    }
}

/// Variable -> polarity. Empty map is the always-true conjunct.
type Conjunct = BTreeMap<usize, bool>;

fn conjunct_to_body(conjunct: &Conjunct) -> Body {
    let mut body = Body::EMPTY;
    for (&var, &positive) in conjunct {
        body = body.set(
            var,
            if positive {
                Ternary::Positive
            } else {
                Ternary::Negative
            },
        );
    }
    body
}

/// Expand to DNF. Contradictory conjuncts (`x & !x`) are dropped: they never
/// fire, so the transition semantics are unchanged.
fn dnf(expr: &BooleanExpr, target: &str) -> Result<Vec<Conjunct>> {
    fn go(expr: &BooleanExpr, negate: bool, target: &str) -> Result<Vec<Conjunct>> {
        let out = match (expr, negate) {
            (BooleanExpr::Const(c), neg) => {
                if *c != neg {
                    vec![Conjunct::new()]
                } else {
                    Vec::new()
                }
            }
            (BooleanExpr::Var(v), neg) => {
                vec![Conjunct::from([(*v, !neg)])]
            }
            (BooleanExpr::Not(inner), neg) => go(inner, !neg, target)?,
            (BooleanExpr::And(a, b), false) | (BooleanExpr::Or(a, b), true) => {
                let left = go(a, negate, target)?;
                let right = go(b, negate, target)?;
                let mut product = Vec::new();
                for l in &left {
                    'outer: for r in &right {
                        let mut merged = l.clone();
                        for (&var, &polarity) in r {
                            match merged.insert(var, polarity) {
                                Some(previous) if previous != polarity => continue 'outer,
                                _ => {}
                            }
                        }
                        product.push(merged);
                        if product.len() > DNF_CAP {
                            return Err(BnetError::DnfTooLarge {
                                target: target.to_string(),
                                cap: DNF_CAP,
                            });
                        }
                    }
                }
                product
            }
            (BooleanExpr::Or(a, b), false) | (BooleanExpr::And(a, b), true) => {
                let mut all = go(a, negate, target)?;
                all.extend(go(b, negate, target)?);
                if all.len() > DNF_CAP {
                    return Err(BnetError::DnfTooLarge {
                        target: target.to_string(),
                        cap: DNF_CAP,
                    });
                }
                all
            }
        };
        Ok(out)
    }
    go(expr, false, target)
}

/// Parse a `.bnet` text into a logic program.
pub fn parse_bnet(text: &str) -> Result<LogicProgram> {
    BooleanNetwork::parse(text)?.to_program()
}

/// Render a program as `.bnet` lines. Heads with no rules become `0`, fact
/// rules become `1`.
pub fn emit_bnet(program: &LogicProgram) -> String {
    let base = program.base();
    let mut out = String::from("targets, factors\n");
    for v in 0..base.len() {
        let name = base.name(v).unwrap_or_default();
        let bodies: Vec<Body> = program
            .rules()
            .filter(|r| r.head == v)
            .map(|r| r.body)
            .collect();
        let factor = if bodies.is_empty() {
            "0".to_string()
        } else if bodies.iter().any(|b| b.is_empty()) {
            "1".to_string()
        } else {
            bodies
                .iter()
                .map(|body| {
                    (0..base.len())
                        .filter_map(|i| match body.entry(i) {
                            Ternary::Absent => None,
                            Ternary::Positive => Some(base.name(i).unwrap_or_default().to_string()),
                            Ternary::Negative => {
                                Some(format!("!{}", base.name(i).unwrap_or_default()))
                            }
                        })
                        .collect::<Vec<_>>()
                        .join(" & ")
                })
                .collect::<Vec<_>>()
                .join(" | ")
        };
        out.push_str(&format!("{name}, {factor}\n"));
    }
    out
}
