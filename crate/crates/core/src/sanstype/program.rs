//! Generated programs and the two-phase generator.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::IndexedRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::ast::{BinOp, Code, Expr, Literal, Stmt, Type};
use super::check::{execute, TestCase};
use crate::error::{bail, Result};
use crate::rng::Rng;

pub const NUM_VARS: u8 = 10;
pub const NUM_STRINGS: u8 = 10;
/// Integer literals and stdin integers are drawn from `0..=MAX_INT`.
pub const MAX_INT: i64 = 100;
/// Name of the block-local variable introduced by a conditional swap.
pub const SWAP_TEMP: &str = "temp";

/// One of `var_0 … var_9`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Var(pub u8);

impl Var {
    pub fn name(self) -> String {
        format!("var_{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    Literal(Literal),
    /// Declared without a value, then read from stdin.
    Stdin,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operand {
    Lit(i64),
    Var(Var),
}

/// A generated program line; each lowers to one or more statements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Line {
    DeclareInit { ty: Type, var: Var, init: Init },
    Read { var: Var },
    Assign { var: Var, value: Literal },
    PrependOrConcat { var: Var, value: Literal, prepend: bool },
    AddSub { var: Var, operand: Operand, subtract: bool },
    LogicalAnd { var: Var, other: Var },
    /// `if (guard) { T temp = a; a = b; b = temp; }`.
    CondSwap { guard: Var, a: Var, b: Var, ty: Type },
    Print { var: Var },
}

impl Line {
    fn lower(&self, out: &mut Vec<Stmt>) {
        let v = |var: &Var| Expr::Var(var.name());
        match self {
            Line::DeclareInit { ty, var, init: Init::Literal(l) } => {
                out.push(Stmt::Decl { ty: *ty, name: var.name(), init: Some(Expr::Lit(l.clone())) })
            }
            Line::DeclareInit { ty, var, init: Init::Stdin } => {
                out.push(Stmt::Decl { ty: *ty, name: var.name(), init: None });
                out.push(Stmt::Read(var.name()));
            }
            Line::Read { var } => out.push(Stmt::Read(var.name())),
            Line::Assign { var, value } => out.push(Stmt::Assign(var.name(), Expr::Lit(value.clone()))),
            Line::PrependOrConcat { var, value, prepend } => {
                let lit = Expr::Lit(value.clone());
                let e = if *prepend {
                    Expr::binary(lit, BinOp::Add, v(var))
                } else {
                    Expr::binary(v(var), BinOp::Add, lit)
                };
                out.push(Stmt::Assign(var.name(), e));
            }
            Line::AddSub { var, operand, subtract } => {
                let rhs = match operand {
                    Operand::Lit(x) => Expr::Lit(Literal::Int(*x)),
                    Operand::Var(w) => v(w),
                };
                let op = if *subtract { BinOp::Sub } else { BinOp::Add };
                out.push(Stmt::Assign(var.name(), Expr::binary(v(var), op, rhs)));
            }
            Line::LogicalAnd { var, other } => {
                out.push(Stmt::Assign(var.name(), Expr::binary(v(var), BinOp::And, v(other))))
            }
            Line::CondSwap { guard, a, b, ty } => out.push(Stmt::If {
                cond: v(guard),
                body: alloc::vec![
                    Stmt::Decl { ty: *ty, name: String::from(SWAP_TEMP), init: Some(v(a)) },
                    Stmt::Assign(a.name(), v(b)),
                    Stmt::Assign(b.name(), Expr::var(SWAP_TEMP)),
                ],
            }),
            Line::Print { var } => out.push(Stmt::Print(v(var))),
        }
    }

    /// Types of the stdin tokens this line consumes.
    fn reads(&self, types: &[(Var, Type)]) -> Option<Type> {
        let ty_of = |var: &Var| types.iter().find(|(v, _)| v == var).map(|(_, t)| *t);
        match self {
            Line::DeclareInit { ty, init: Init::Stdin, .. } => Some(*ty),
            Line::Read { var } => ty_of(var),
            _ => None,
        }
    }
}

/// A program in three parts: initial declarations, operations, and the final
/// prints of every variable in declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Program {
    pub declarations: Vec<Line>,
    pub operations: Vec<Line>,
    pub prints: Vec<Line>,
}

impl Program {
    pub fn lines(&self) -> impl Iterator<Item = &Line> {
        self.declarations.iter().chain(&self.operations).chain(&self.prints)
    }

    pub fn to_code(&self) -> Code {
        let mut body = Vec::new();
        for line in self.lines() {
            line.lower(&mut body);
        }
        Code { body }
    }

    pub fn render_code(&self) -> String {
        self.to_code().render()
    }

    /// Outer-scope variables with their types, in declaration order.
    pub fn variables(&self) -> Vec<(Var, Type)> {
        self.lines()
            .filter_map(|l| match l {
                Line::DeclareInit { ty, var, .. } => Some((*var, *ty)),
                _ => None,
            })
            .collect()
    }

    /// Stdin token types in the order they are consumed.
    pub fn stdin_types(&self) -> Vec<Type> {
        let vars = self.variables();
        self.lines().filter_map(|l| l.reads(&vars)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub max_initial: usize,
    pub max_operations: usize,
    /// Probability that an operation line declares a fresh variable.
    pub fresh_probability: f64,
    /// Probability that an initial declaration reads stdin.
    pub stdin_probability: f64,
    /// Test cases for programs that read stdin; others get one.
    pub tests_per_program: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self { max_initial: 4, max_operations: 5, fresh_probability: 0.2, stdin_probability: 0.5, tests_per_program: 2 }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_initial == 0 || self.max_initial + self.max_operations > NUM_VARS as usize {
            bail!(InvalidParameter, "need 1 ≤ initial variables and at most {NUM_VARS} declarations in total");
        }
        if !(0.0..=1.0).contains(&self.fresh_probability) || !(0.0..=1.0).contains(&self.stdin_probability) {
            bail!(InvalidParameter, "probabilities must lie in [0, 1]");
        }
        if self.tests_per_program == 0 {
            bail!(InvalidParameter, "at least one test case per program");
        }
        Ok(())
    }
}

pub fn random_literal(ty: Type, rng: &mut Rng) -> Literal {
    match ty {
        Type::Int => Literal::Int(rng.random_range(0..=MAX_INT)),
        Type::Bool => Literal::Bool(rng.random()),
        Type::Str => Literal::Str(format!("str_{}", rng.random_range(0..NUM_STRINGS))),
    }
}

fn random_type(rng: &mut Rng) -> Type {
    Type::ALL[rng.random_range(0..Type::ALL.len())]
}

fn fresh_var(used: &[(Var, Type)], rng: &mut Rng) -> Var {
    let free: Vec<Var> = (0..NUM_VARS).map(Var).filter(|v| used.iter().all(|(u, _)| u != v)).collect();
    free[rng.random_range(0..free.len())]
}

/// A type-preserving operation on a random existing variable.
fn operation(vars: &[(Var, Type)], rng: &mut Rng) -> Line {
    let (var, ty) = vars[rng.random_range(0..vars.len())];
    let same: Vec<Var> = vars.iter().filter(|(v, t)| *t == ty && *v != var).map(|(v, _)| *v).collect();
    let guards: Vec<Var> = vars.iter().filter(|(_, t)| *t == Type::Bool).map(|(v, _)| *v).collect();

    #[derive(Clone, Copy)]
    enum Op {
        Set,
        Read,
        Prepend,
        Concat,
        AddLit,
        SubLit,
        AddVar,
        SubVar,
        And,
        Swap,
    }
    let mut options = alloc::vec![Op::Set, Op::Read];
    match ty {
        Type::Str => options.extend([Op::Prepend, Op::Concat]),
        Type::Int => {
            options.extend([Op::AddLit, Op::SubLit]);
            if !same.is_empty() {
                options.extend([Op::AddVar, Op::SubVar]);
            }
        }
        Type::Bool => {
            if !same.is_empty() {
                options.push(Op::And);
            }
        }
    }
    if !same.is_empty() && !guards.is_empty() {
        options.push(Op::Swap);
    }
    let pick = |xs: &[Var], rng: &mut Rng| *xs.choose(rng).unwrap_or(&var);
    let literal = |rng: &mut Rng| Operand::Lit(rng.random_range(0..=MAX_INT));
    match options[rng.random_range(0..options.len())] {
        Op::Set => Line::Assign { var, value: random_literal(ty, rng) },
        Op::Read => Line::Read { var },
        Op::Prepend => Line::PrependOrConcat { var, value: random_literal(Type::Str, rng), prepend: true },
        Op::Concat => Line::PrependOrConcat { var, value: random_literal(Type::Str, rng), prepend: false },
        Op::AddLit => Line::AddSub { var, operand: literal(rng), subtract: false },
        Op::SubLit => Line::AddSub { var, operand: literal(rng), subtract: true },
        Op::AddVar => Line::AddSub { var, operand: Operand::Var(pick(&same, rng)), subtract: false },
        Op::SubVar => Line::AddSub { var, operand: Operand::Var(pick(&same, rng)), subtract: true },
        Op::And => Line::LogicalAnd { var, other: pick(&same, rng) },
        Op::Swap => Line::CondSwap { guard: pick(&guards, rng), a: var, b: pick(&same, rng), ty },
    }
}

/// Two-phase generation: 1 to `max_initial` declarations (literal or stdin),
/// then 1 to `max_operations` lines that are fresh literal declarations with
/// probability `fresh_probability` and operations otherwise.
pub fn generate_program(cfg: &GenConfig, rng: &mut Rng) -> Result<Program> {
    cfg.validate()?;
    let mut vars = Vec::new();
    let mut declarations = Vec::new();
    for _ in 0..rng.random_range(1..=cfg.max_initial) {
        let ty = random_type(rng);
        let var = fresh_var(&vars, rng);
        let init = if rng.random_bool(cfg.stdin_probability) { Init::Stdin } else { Init::Literal(random_literal(ty, rng)) };
        declarations.push(Line::DeclareInit { ty, var, init });
        vars.push((var, ty));
    }
    let mut operations = Vec::new();
    let n_ops = if cfg.max_operations == 0 { 0 } else { rng.random_range(1..=cfg.max_operations) };
    for _ in 0..n_ops {
        if rng.random_bool(cfg.fresh_probability) {
            let ty = random_type(rng);
            let var = fresh_var(&vars, rng);
            operations.push(Line::DeclareInit { ty, var, init: Init::Literal(random_literal(ty, rng)) });
            vars.push((var, ty));
        } else {
            operations.push(operation(&vars, rng));
        }
    }
    let prints = vars.iter().map(|(var, _)| Line::Print { var: *var }).collect();
    Ok(Program { declarations, operations, prints })
}

fn stdin_token(ty: Type, rng: &mut Rng) -> String {
    match random_literal(ty, rng) {
        Literal::Bool(b) => String::from(if b { "1" } else { "0" }),
        Literal::Int(v) => format!("{v}"),
        Literal::Str(s) => s,
    }
}

/// Draw stdin for each test and record the gold program's output on it.
pub fn make_tests(program: &Program, count: usize, rng: &mut Rng) -> Result<Vec<TestCase>> {
    let types = program.stdin_types();
    let count = if types.is_empty() { 1 } else { count };
    let code = program.to_code();
    let mut tests = Vec::with_capacity(count);
    for _ in 0..count {
        let tokens: Vec<String> = types.iter().map(|t| stdin_token(*t, rng)).collect();
        let stdin = tokens.join(" ");
        let stdout = match execute(&code, &stdin) {
            Ok(out) => out,
            Err(e) => bail!(InvalidState, "gold program failed on its own input: {e}"),
        };
        tests.push(TestCase { stdin, stdout });
    }
    Ok(tests)
}
