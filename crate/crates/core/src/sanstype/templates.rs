//! Pseudocode templates.
//!
//! Placeholders: `{v}` target variable, `{lit}` literal, `{x}` integer operand,
//! `{w}` second variable, `{g}` guard, `{a}`/`{b}` swapped variables.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::program::{Init, Line, Operand, Program};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineKind {
    /// Declaration with a literal value, and assignment of a literal.
    Set,
    Instantiate,
    ReadStdin,
    Prepend,
    Concat,
    Add,
    Subtract,
    And,
    Swap,
    Print,
}

impl LineKind {
    pub const ALL: [LineKind; 10] = [
        LineKind::Set,
        LineKind::Instantiate,
        LineKind::ReadStdin,
        LineKind::Prepend,
        LineKind::Concat,
        LineKind::Add,
        LineKind::Subtract,
        LineKind::And,
        LineKind::Swap,
        LineKind::Print,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateSet {
    pub ood: bool,
    /// `(kind, templates)`; every kind appears with at least one template.
    pub templates: Vec<(LineKind, Vec<String>)>,
}

fn set(ood: bool, rows: &[(LineKind, &[&str])]) -> TemplateSet {
    TemplateSet {
        ood,
        templates: rows
            .iter()
            .map(|(k, ts)| (*k, ts.iter().map(|t| String::from(*t)).collect()))
            .collect(),
    }
}

impl TemplateSet {
    pub fn in_distribution() -> Self {
        set(
            false,
            &[
                (LineKind::Set, &["set {v} to {lit};", "assign {lit} to {v};"]),
                (LineKind::Instantiate, &["instantiate {v};", "create {v};"]),
                (LineKind::ReadStdin, &["read {v} from stdin;", "set {v} from stdin;"]),
                (LineKind::Prepend, &["add {lit} to the beginning of {v};", "prepend {lit} to {v};"]),
                (LineKind::Concat, &["add {lit} to the end of {v};", "append {lit} to {v};"]),
                (LineKind::Add, &["add {x} to {v};", "increase {v} by {x};"]),
                (LineKind::Subtract, &["subtract {x} from {v};", "decrease {v} by {x};"]),
                (LineKind::And, &["set {v} to {v} and {w};", "set {v} to the logical and of {v} and {w};"]),
                (
                    LineKind::Swap,
                    &[
                        "if {g} is true, swap the values of {a} and {b};",
                        "if {g} is true, set {a} to the value of {b} and {b} to the value of {a};",
                    ],
                ),
                (LineKind::Print, &["print {v};", "output {v} to stdout;"]),
            ],
        )
    }

    /// Templates recombining tokens of the in-distribution set.
    pub fn out_of_distribution() -> Self {
        set(
            true,
            &[
                (LineKind::Set, &["assign {v} to {lit};", "set the value of {v} to {lit};"]),
                (LineKind::Instantiate, &["instantiate the value of {v};", "create the value of {v};"]),
                (LineKind::ReadStdin, &["read stdin to {v};", "set {v} to stdin;"]),
                (LineKind::Prepend, &["add {lit} to {v} at the beginning;", "prepend {v} with {lit};"]),
                (LineKind::Concat, &["add {lit} to {v} at the end;", "append {v} with {lit};"]),
                (LineKind::Add, &["increase {v} with {x};", "add {v} by {x};"]),
                (LineKind::Subtract, &["decrease {v} with {x};", "subtract {v} by {x};"]),
                (LineKind::And, &["set {v} to {w} and {v};", "and {v} with {w};"]),
                (
                    LineKind::Swap,
                    &["if {g} is true, swap {a} and {b};", "swap the values of {a} and {b} if {g} is true;"],
                ),
                (LineKind::Print, &["print {v} to stdout;", "output {v};", "stdout {v};"]),
            ],
        )
    }

    pub fn for_kind(&self, kind: LineKind) -> &[String] {
        self.templates
            .iter()
            .find(|(k, _)| *k == kind)
            .map(|(_, ts)| ts.as_slice())
            .unwrap_or(&[])
    }

    /// Every kind has at least one template.
    pub fn is_complete(&self) -> bool {
        LineKind::ALL.iter().all(|k| !self.for_kind(*k).is_empty())
    }
}

fn fill(template: &str, slots: &[(&str, String)]) -> String {
    let mut out = String::from(template);
    for (key, value) in slots {
        out = out.replace(key, value);
    }
    out
}

/// Render one pseudocode line per template line, choosing templates uniformly.
pub fn render_pseudocode(program: &Program, templates: &TemplateSet, rng: &mut Rng) -> String {
    let mut out = Vec::new();
    let mut emit = |kind: LineKind, slots: &[(&str, String)], rng: &mut Rng| {
        let options = templates.for_kind(kind);
        if options.is_empty() {
            return;
        }
        let t = &options[rng.random_range(0..options.len())];
        out.push(fill(t, slots));
    };
    for line in program.lines() {
        match line {
            Line::DeclareInit { var, init: Init::Literal(lit), .. } | Line::Assign { var, value: lit } => {
                emit(LineKind::Set, &[("{v}", var.name()), ("{lit}", lit.to_string())], rng)
            }
            Line::DeclareInit { var, init: Init::Stdin, .. } => {
                emit(LineKind::Instantiate, &[("{v}", var.name())], rng);
                emit(LineKind::ReadStdin, &[("{v}", var.name())], rng);
            }
            Line::Read { var } => emit(LineKind::ReadStdin, &[("{v}", var.name())], rng),
            Line::PrependOrConcat { var, value, prepend } => {
                let kind = if *prepend { LineKind::Prepend } else { LineKind::Concat };
                emit(kind, &[("{v}", var.name()), ("{lit}", value.to_string())], rng)
            }
            Line::AddSub { var, operand, subtract } => {
                let kind = if *subtract { LineKind::Subtract } else { LineKind::Add };
                let x = match operand {
                    Operand::Lit(v) => alloc::format!("{v}"),
                    Operand::Var(w) => w.name(),
                };
                emit(kind, &[("{v}", var.name()), ("{x}", x)], rng)
            }
            Line::LogicalAnd { var, other } => {
                emit(LineKind::And, &[("{v}", var.name()), ("{w}", other.name())], rng)
            }
            Line::CondSwap { guard, a, b, .. } => emit(
                LineKind::Swap,
                &[("{g}", guard.name()), ("{a}", a.name()), ("{b}", b.name())],
                rng,
            ),
            Line::Print { var } => emit(LineKind::Print, &[("{v}", var.name())], rng),
        }
    }
    let mut text = out.join("\n");
    text.push('\n');
    text
}
