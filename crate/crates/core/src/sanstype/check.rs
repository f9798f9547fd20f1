//! Static checking and execution of parsed programs.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::ast::{BinOp, Code, Expr, Literal, Stmt, Type};
use super::parse::parse;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub stdin: String,
    pub stdout: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    CompileErr,
    ExecErr,
    Correct,
}

impl Verdict {
    /// Process exit status used by the command-line checker.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Correct => 0,
            Verdict::ExecErr => 1,
            Verdict::CompileErr => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Verdict::CompileErr => "compile_err",
            Verdict::ExecErr => "exec_err",
            Verdict::Correct => "correct",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub verdict: Verdict,
    pub message: String,
}

impl Outcome {
    fn new(verdict: Verdict, message: String) -> Self {
        Self { verdict, message }
    }

    pub fn is_correct(&self) -> bool {
        self.verdict == Verdict::Correct
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.verdict.name(), self.message)
    }
}

/// Nested block scopes, innermost last.
struct Scopes<T> {
    frames: Vec<BTreeMap<String, T>>,
}

impl<T> Scopes<T> {
    fn new() -> Self {
        Self { frames: alloc::vec![BTreeMap::new()] }
    }

    fn get(&self, name: &str) -> Option<&T> {
        self.frames.iter().rev().find_map(|f| f.get(name))
    }

    fn get_mut(&mut self, name: &str) -> Option<&mut T> {
        self.frames.iter_mut().rev().find_map(|f| f.get_mut(name))
    }

    fn declared_here(&self, name: &str) -> bool {
        self.frames.last().is_some_and(|f| f.contains_key(name))
    }

    fn declare(&mut self, name: &str, value: T) {
        if let Some(f) = self.frames.last_mut() {
            f.insert(String::from(name), value);
        }
    }
}

fn type_of(expr: &Expr, scopes: &Scopes<Type>) -> Result<Type, String> {
    match expr {
        Expr::Lit(l) => Ok(l.ty()),
        Expr::Var(v) => scopes.get(v).copied().ok_or_else(|| format!("`{v}` was not declared in this scope")),
        Expr::Binary(a, op, b) => {
            let (ta, tb) = (type_of(a, scopes)?, type_of(b, scopes)?);
            match (op, ta, tb) {
                (BinOp::Add, Type::Int, Type::Int) | (BinOp::Sub, Type::Int, Type::Int) => Ok(Type::Int),
                (BinOp::Add, Type::Str, Type::Str) => Ok(Type::Str),
                (BinOp::And, Type::Bool, Type::Bool) => Ok(Type::Bool),
                _ => Err(format!("no operator `{}` for {ta} and {tb}", op.symbol())),
            }
        }
    }
}

fn expect_type(expr: &Expr, want: Type, scopes: &Scopes<Type>, what: &str) -> Result<(), String> {
    let got = type_of(expr, scopes)?;
    if got != want {
        return Err(format!("cannot use {got} `{expr}` as {want} in {what}"));
    }
    Ok(())
}

fn check_block(body: &[Stmt], scopes: &mut Scopes<Type>) -> Result<(), String> {
    for stmt in body {
        match stmt {
            Stmt::Decl { ty, name, init } => {
                if scopes.declared_here(name) {
                    return Err(format!("redeclaration of `{name}`"));
                }
                if let Some(e) = init {
                    expect_type(e, *ty, scopes, &format!("the declaration of `{name}`"))?;
                }
                scopes.declare(name, *ty);
            }
            Stmt::Read(name) => {
                if scopes.get(name).is_none() {
                    return Err(format!("`{name}` was not declared in this scope"));
                }
            }
            Stmt::Assign(name, e) => {
                let ty = *scopes.get(name).ok_or_else(|| format!("`{name}` was not declared in this scope"))?;
                expect_type(e, ty, scopes, &format!("the assignment to `{name}`"))?;
            }
            Stmt::Print(e) => {
                type_of(e, scopes)?;
            }
            Stmt::If { cond, body } => {
                expect_type(cond, Type::Bool, scopes, "an if condition")?;
                scopes.frames.push(BTreeMap::new());
                let r = check_block(body, scopes);
                scopes.frames.pop();
                r?;
            }
        }
    }
    Ok(())
}

/// Static checks: declarations before use, no redeclaration within a scope,
/// operand and assignment types.
pub fn typecheck(code: &Code) -> Result<(), String> {
    check_block(&code.body, &mut Scopes::new())
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Value {
    Int(i64),
    Bool(bool),
    Str(String),
}

impl Value {
    fn format(&self, out: &mut String) {
        match self {
            Value::Int(v) => out.push_str(&format!("{v}")),
            Value::Bool(b) => out.push(if *b { '1' } else { '0' }),
            Value::Str(s) => out.push_str(s),
        }
    }
}

struct Machine<'a> {
    scopes: Scopes<(Type, Option<Value>)>,
    stdin: core::str::SplitAsciiWhitespace<'a>,
    stdout: String,
}

impl Machine<'_> {
    fn eval(&self, expr: &Expr) -> Result<Value, String> {
        match expr {
            Expr::Lit(Literal::Int(v)) => Ok(Value::Int(*v)),
            Expr::Lit(Literal::Bool(b)) => Ok(Value::Bool(*b)),
            Expr::Lit(Literal::Str(s)) => Ok(Value::Str(s.clone())),
            Expr::Var(v) => match self.scopes.get(v) {
                Some((_, Some(value))) => Ok(value.clone()),
                Some((_, None)) => Err(format!("`{v}` is used uninitialized")),
                None => Err(format!("`{v}` is not declared")),
            },
            Expr::Binary(a, op, b) => match (self.eval(a)?, op, self.eval(b)?) {
                (Value::Int(x), BinOp::Add, Value::Int(y)) => {
                    x.checked_add(y).map(Value::Int).ok_or_else(|| String::from("integer overflow"))
                }
                (Value::Int(x), BinOp::Sub, Value::Int(y)) => {
                    x.checked_sub(y).map(Value::Int).ok_or_else(|| String::from("integer overflow"))
                }
                (Value::Str(mut x), BinOp::Add, Value::Str(y)) => {
                    x.push_str(&y);
                    Ok(Value::Str(x))
                }
                (Value::Bool(x), BinOp::And, Value::Bool(y)) => Ok(Value::Bool(x && y)),
                _ => Err(String::from("operand types do not match")),
            },
        }
    }

    fn store(&mut self, name: &str, value: Value) -> Result<(), String> {
        let slot = self.scopes.get_mut(name).ok_or_else(|| format!("`{name}` is not declared"))?;
        slot.1 = Some(value);
        Ok(())
    }

    fn read(&mut self, name: &str) -> Result<(), String> {
        let ty = self.scopes.get(name).ok_or_else(|| format!("`{name}` is not declared"))?.0;
        let token = self.stdin.next().ok_or_else(|| format!("stdin exhausted reading `{name}`"))?;
        let value = match ty {
            Type::Int => token.parse::<i64>().ok().map(Value::Int),
            Type::Bool => match token {
                "0" => Some(Value::Bool(false)),
                "1" => Some(Value::Bool(true)),
                _ => None,
            },
            Type::Str => Some(Value::Str(String::from(token))),
        };
        let value = value.ok_or_else(|| format!("stdin token `{token}` is not a valid {ty}"))?;
        self.store(name, value)
    }

    fn run(&mut self, body: &[Stmt]) -> Result<(), String> {
        for stmt in body {
            match stmt {
                Stmt::Decl { ty, name, init } => {
                    let value = init.as_ref().map(|e| self.eval(e)).transpose()?;
                    self.scopes.declare(name, (*ty, value));
                }
                Stmt::Read(name) => self.read(name)?,
                Stmt::Assign(name, e) => {
                    let v = self.eval(e)?;
                    self.store(name, v)?;
                }
                Stmt::Print(e) => {
                    let v = self.eval(e)?;
                    v.format(&mut self.stdout);
                }
                Stmt::If { cond, body } => {
                    if self.eval(cond)? == Value::Bool(true) {
                        self.scopes.frames.push(BTreeMap::new());
                        let r = self.run(body);
                        self.scopes.frames.pop();
                        r?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Execute a type-checked program on whitespace-separated `stdin` tokens.
pub fn execute(code: &Code, stdin: &str) -> Result<String, String> {
    let mut m = Machine { scopes: Scopes::new(), stdin: stdin.split_ascii_whitespace(), stdout: String::new() };
    m.run(&code.body)?;
    Ok(m.stdout)
}

/// Classify `source` against its test cases.
pub fn check(source: &str, tests: &[TestCase]) -> Outcome {
    let code = match parse(source) {
        Ok(c) => c,
        Err(e) => return Outcome::new(Verdict::CompileErr, e),
    };
    if let Err(e) = typecheck(&code) {
        return Outcome::new(Verdict::CompileErr, e);
    }
    for (i, t) in tests.iter().enumerate() {
        match execute(&code, &t.stdin) {
            Err(e) => return Outcome::new(Verdict::ExecErr, format!("test {i}: {e}")),
            Ok(out) if out != t.stdout => {
                return Outcome::new(
                    Verdict::ExecErr,
                    format!("test {i}: wrong output `{out}`, expected `{}`", t.stdout),
                )
            }
            Ok(_) => {}
        }
    }
    Outcome::new(Verdict::Correct, format!("passed {} test(s)", tests.len()))
}
