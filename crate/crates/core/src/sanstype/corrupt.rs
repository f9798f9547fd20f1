//! Code perturbations used to build denoising pairs.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::ast::Type;
use crate::error::{bail, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Corruption {
    /// Change the type of a declaration.
    TypeReplace,
    /// Drop the type of a declaration, turning it into an assignment.
    TypeDelete,
    /// Put a type in front of an assignment, turning it into a declaration.
    TypeInsert,
    /// Remove `<<` or `>>` from a stream statement.
    DropArrows,
    /// Flip `<<` and `>>` in a stream statement.
    ReverseArrows,
    /// Remove `cout` from an output statement.
    DropCout,
}

impl Corruption {
    pub const ALL: [Corruption; 6] = [
        Corruption::TypeReplace,
        Corruption::TypeDelete,
        Corruption::TypeInsert,
        Corruption::DropArrows,
        Corruption::ReverseArrows,
        Corruption::DropCout,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Corruption::TypeReplace => "type_replace",
            Corruption::TypeDelete => "type_delete",
            Corruption::TypeInsert => "type_insert",
            Corruption::DropArrows => "drop_arrows",
            Corruption::ReverseArrows => "reverse_arrows",
            Corruption::DropCout => "drop_cout",
        }
    }

    pub fn from_name(name: &str) -> Option<Corruption> {
        Corruption::ALL.into_iter().find(|c| c.name() == name)
    }

    fn applies(self, tokens: &[&str]) -> bool {
        let first = tokens.first().copied().unwrap_or("");
        let is_decl = Type::from_keyword(first).is_some() && !tokens.contains(&"main");
        let is_stream = (first == "cin" || first == "cout") && tokens.iter().any(|t| *t == "<<" || *t == ">>");
        match self {
            Corruption::TypeReplace | Corruption::TypeDelete => is_decl,
            Corruption::TypeInsert => {
                tokens.get(1) == Some(&"=")
                    && Type::from_keyword(first).is_none()
                    && first.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
            }
            Corruption::DropArrows | Corruption::ReverseArrows => is_stream,
            Corruption::DropCout => first == "cout",
        }
    }

    fn apply(self, tokens: &mut Vec<&str>, rng: &mut Rng) {
        let arrow = tokens.iter().position(|t| *t == "<<" || *t == ">>");
        match self {
            Corruption::TypeReplace => {
                let others: Vec<Type> = Type::ALL.into_iter().filter(|t| t.keyword() != tokens[0]).collect();
                tokens[0] = others[rng.random_range(0..others.len())].keyword();
            }
            Corruption::TypeDelete | Corruption::DropCout => {
                tokens.remove(0);
            }
            Corruption::TypeInsert => tokens.insert(0, Type::ALL[rng.random_range(0..3)].keyword()),
            Corruption::DropArrows => {
                if let Some(i) = arrow {
                    tokens.remove(i);
                }
            }
            Corruption::ReverseArrows => {
                if let Some(i) = arrow {
                    tokens[i] = if tokens[i] == "<<" { ">>" } else { "<<" };
                }
            }
        }
    }
}

fn split_line(line: &str) -> (&str, Vec<&str>) {
    let body = line.trim_start();
    (&line[..line.len() - body.len()], body.split(' ').filter(|t| !t.is_empty()).collect())
}

/// Lines of `code` that `kind` can perturb.
pub fn targets(code: &str, kind: Corruption) -> Vec<usize> {
    code.lines()
        .enumerate()
        .filter(|(_, l)| kind.applies(&split_line(l).1))
        .map(|(i, _)| i)
        .collect()
}

/// Apply `kind` to a uniformly chosen target line.
pub fn corrupt_with(code: &str, kind: Corruption, rng: &mut Rng) -> Result<String> {
    let lines = targets(code, kind);
    if lines.is_empty() {
        bail!(InvalidInput, "no line admits a {} corruption", kind.name());
    }
    let target = lines[rng.random_range(0..lines.len())];
    let mut out = String::with_capacity(code.len() + 8);
    for (i, line) in code.lines().enumerate() {
        if i == target {
            let (indent, mut tokens) = split_line(line);
            kind.apply(&mut tokens, rng);
            out.push_str(&format!("{indent}{}", tokens.join(" ")));
        } else {
            out.push_str(line);
        }
        out.push('\n');
    }
    Ok(out)
}

/// Apply one perturbation, its kind drawn uniformly among those with a target.
pub fn corrupt(code: &str, rng: &mut Rng) -> Result<(Corruption, String)> {
    let kinds: Vec<Corruption> = Corruption::ALL.into_iter().filter(|k| !targets(code, *k).is_empty()).collect();
    if kinds.is_empty() {
        bail!(InvalidInput, "nothing in the code can be corrupted");
    }
    let kind = kinds[rng.random_range(0..kinds.len())];
    Ok((kind, corrupt_with(code, kind, rng)?))
}
