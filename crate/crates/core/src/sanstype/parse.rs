//! Lexer and recursive-descent parser for the checker's C++ subset.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::ast::{BinOp, Code, Expr, Literal, Stmt, Type};

const KEYWORDS: [&str; 10] = ["int", "bool", "string", "main", "return", "if", "cin", "cout", "true", "false"];

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    Sym(&'static str),
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Str(s) => format!("`\"{s}\"`"),
            Tok::Sym(s) => format!("`{s}`"),
        }
    }
}

const SYMBOLS: [&str; 11] = ["&&", "<<", ">>", "(", ")", "{", "}", ";", "=", "+", "-"];

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, String> {
    let mut toks = Vec::new();
    let mut line = 1;
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            line += 1;
            i += 1;
        } else if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            toks.push((Tok::Ident(src[start..i].to_string()), line));
        } else if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let v = src[start..i]
                .parse::<i64>()
                .map_err(|_| format!("line {line}: integer literal out of range"))?;
            toks.push((Tok::Int(v), line));
        } else if c == b'"' {
            let start = i + 1;
            i = start;
            while i < bytes.len() && bytes[i] != b'"' && bytes[i] != b'\n' {
                i += 1;
            }
            if i >= bytes.len() || bytes[i] != b'"' {
                return Err(format!("line {line}: unterminated string literal"));
            }
            toks.push((Tok::Str(src[start..i].to_string()), line));
            i += 1;
        } else if let Some(sym) = SYMBOLS.iter().find(|s| src[i..].starts_with(**s)) {
            toks.push((Tok::Sym(sym), line));
            i += sym.len();
        } else {
            let ch = src[i..].chars().next().unwrap_or('?');
            return Err(format!("line {line}: unexpected character `{ch}`"));
        }
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn peek_at(&self, offset: usize) -> Option<&Tok> {
        self.toks.get(self.pos + offset).map(|(t, _)| t)
    }

    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map_or(1, |(_, l)| *l)
    }

    fn error(&self, expected: &str) -> String {
        match self.peek() {
            Some(t) => format!("line {}: expected {expected}, found {}", self.line(), t.describe()),
            None => format!("line {}: expected {expected}, found end of input", self.line()),
        }
    }

    fn sym(&mut self, s: &'static str) -> Result<(), String> {
        if self.peek() == Some(&Tok::Sym(s)) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("`{s}`")))
        }
    }

    fn keyword(&mut self, k: &str) -> Result<(), String> {
        match self.peek() {
            Some(Tok::Ident(s)) if s == k => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error(&format!("`{k}`"))),
        }
    }

    fn is_keyword(&self, k: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == k)
    }

    fn name(&mut self) -> Result<String, String> {
        match self.peek() {
            Some(Tok::Ident(s)) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error("a variable name")),
        }
    }

    fn program(&mut self) -> Result<Code, String> {
        self.keyword("int")?;
        self.keyword("main")?;
        self.sym("(")?;
        self.sym(")")?;
        self.sym("{")?;
        let mut body = Vec::new();
        while !self.is_keyword("return") {
            if self.peek().is_none() {
                return Err(self.error("`return`"));
            }
            body.push(self.stmt()?);
        }
        self.keyword("return")?;
        match self.peek() {
            Some(Tok::Int(0)) => self.pos += 1,
            _ => return Err(self.error("`0`")),
        }
        self.sym(";")?;
        self.sym("}")?;
        if self.peek().is_some() {
            return Err(self.error("end of input"));
        }
        Ok(Code { body })
    }

    fn stmt(&mut self) -> Result<Stmt, String> {
        let ty = match self.peek() {
            Some(Tok::Ident(s)) => Type::from_keyword(s),
            _ => None,
        };
        if let Some(ty) = ty {
            self.pos += 1;
            let name = self.name()?;
            let init = if self.peek() == Some(&Tok::Sym("=")) {
                self.pos += 1;
                Some(self.expr()?)
            } else {
                None
            };
            self.sym(";")?;
            return Ok(Stmt::Decl { ty, name, init });
        }
        if self.is_keyword("cin") {
            self.pos += 1;
            self.sym(">>")?;
            let name = self.name()?;
            self.sym(";")?;
            return Ok(Stmt::Read(name));
        }
        if self.is_keyword("cout") {
            self.pos += 1;
            self.sym("<<")?;
            let e = self.expr()?;
            self.sym(";")?;
            return Ok(Stmt::Print(e));
        }
        if self.is_keyword("if") {
            self.pos += 1;
            self.sym("(")?;
            let cond = self.expr()?;
            self.sym(")")?;
            self.sym("{")?;
            let mut body = Vec::new();
            while self.peek() != Some(&Tok::Sym("}")) {
                if self.peek().is_none() {
                    return Err(self.error("`}`"));
                }
                body.push(self.stmt()?);
            }
            self.pos += 1;
            return Ok(Stmt::If { cond, body });
        }
        if matches!(self.peek_at(1), Some(Tok::Sym("="))) {
            let name = self.name()?;
            self.pos += 1;
            let e = self.expr()?;
            self.sym(";")?;
            return Ok(Stmt::Assign(name, e));
        }
        Err(self.error("a statement"))
    }

    fn expr(&mut self) -> Result<Expr, String> {
        let mut lhs = self.atom()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Sym("+")) => BinOp::Add,
                Some(Tok::Sym("-")) => BinOp::Sub,
                Some(Tok::Sym("&&")) => BinOp::And,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.atom()?;
            lhs = Expr::binary(lhs, op, rhs);
        }
    }

    fn atom(&mut self) -> Result<Expr, String> {
        let e = match self.peek() {
            Some(Tok::Int(v)) => Expr::Lit(Literal::Int(*v)),
            Some(Tok::Str(s)) => Expr::Lit(Literal::Str(s.clone())),
            Some(Tok::Ident(s)) if s == "true" => Expr::Lit(Literal::Bool(true)),
            Some(Tok::Ident(s)) if s == "false" => Expr::Lit(Literal::Bool(false)),
            Some(Tok::Ident(_)) => return self.name().map(Expr::Var),
            _ => return Err(self.error("an expression")),
        };
        self.pos += 1;
        Ok(e)
    }
}

/// Parse a whole program; the error is a one-line diagnostic.
pub fn parse(src: &str) -> Result<Code, String> {
    let toks = lex(src)?;
    Parser { toks, pos: 0 }.program()
}
