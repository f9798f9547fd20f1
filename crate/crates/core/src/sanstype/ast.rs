use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Type {
    Int,
    Bool,
    Str,
}

impl Type {
    pub const ALL: [Type; 3] = [Type::Int, Type::Bool, Type::Str];

    pub fn keyword(self) -> &'static str {
        match self {
            Type::Int => "int",
            Type::Bool => "bool",
            Type::Str => "string",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Type> {
        Type::ALL.into_iter().find(|t| t.keyword() == word)
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Literal {
    Int(i64),
    Bool(bool),
    Str(String),
}

impl Literal {
    pub fn ty(&self) -> Type {
        match self {
            Literal::Int(_) => Type::Int,
            Literal::Bool(_) => Type::Bool,
            Literal::Str(_) => Type::Str,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Int(v) => write!(f, "{v}"),
            Literal::Bool(b) => write!(f, "{b}"),
            Literal::Str(s) => write!(f, "\"{s}\""),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinOp {
    /// Integer addition or string concatenation.
    Add,
    Sub,
    And,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::And => "&&",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expr {
    Lit(Literal),
    Var(String),
    Binary(Box<Expr>, BinOp, Box<Expr>),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(String::from(name))
    }

    pub fn binary(lhs: Expr, op: BinOp, rhs: Expr) -> Expr {
        Expr::Binary(Box::new(lhs), op, Box::new(rhs))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Lit(l) => write!(f, "{l}"),
            Expr::Var(v) => f.write_str(v),
            Expr::Binary(a, op, b) => write!(f, "{a} {} {b}", op.symbol()),
        }
    }
}

/// Statements of the C++ subset accepted by the checker.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stmt {
    Decl { ty: Type, name: String, init: Option<Expr> },
    Read(String),
    Assign(String, Expr),
    Print(Expr),
    If { cond: Expr, body: Vec<Stmt> },
}

/// The body of `int main () { … return 0; }`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Code {
    pub body: Vec<Stmt>,
}

const INDENT: &str = "  ";

impl Code {
    /// Render in the layout of the reference listings: two-space indents and
    /// closing braces on the last line of a block.
    pub fn render(&self) -> String {
        let mut lines = Vec::new();
        lines.push(String::from("int main () {"));
        render_block(&self.body, 1, &mut lines);
        lines.push(format!("{INDENT}return 0; }}"));
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }
}

fn render_block(body: &[Stmt], depth: usize, lines: &mut Vec<String>) {
    let pad = INDENT.repeat(depth);
    for stmt in body {
        match stmt {
            Stmt::Decl { ty, name, init: Some(e) } => lines.push(format!("{pad}{ty} {name} = {e};")),
            Stmt::Decl { ty, name, init: None } => lines.push(format!("{pad}{ty} {name};")),
            Stmt::Read(name) => lines.push(format!("{pad}cin >> {name};")),
            Stmt::Assign(name, e) => lines.push(format!("{pad}{name} = {e};")),
            Stmt::Print(e) => lines.push(format!("{pad}cout << {e};")),
            Stmt::If { cond, body } => {
                lines.push(format!("{pad}if ( {cond} ) {{"));
                if body.is_empty() {
                    lines.push(format!("{pad}{INDENT}}}"));
                } else {
                    render_block(body, depth + 1, lines);
                    if let Some(last) = lines.last_mut() {
                        last.push_str(" }");
                    }
                }
            }
        }
    }
}
