use super::expr::{Expr, Node, Var};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("unknown identifier `{name}` at {line}:{col}")]
    UnknownIdentifier { line: usize, col: usize, name: String },
    #[error("dimension mismatch at {line}:{col}: {msg}")]
    DimensionMismatch { line: usize, col: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (1usize, 1usize);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let (l0, c0) = (line, col);
        if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v: f64 = text.parse().map_err(|_| ParseError::Syntax {
                line: l0,
                col: c0,
                msg: format!("malformed number `{text}`"),
            })?;
            col += i - start;
            out.push(Token { tok: Tok::Num(v), line: l0, col: c0 });
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), line: l0, col: c0 });
        } else if "+-*/^()[],".contains(c) {
            out.push(Token { tok: Tok::Sym(c), line: l0, col: c0 });
            i += 1;
            col += 1;
        } else {
            return Err(ParseError::Syntax { line: l0, col: c0, msg: format!("unexpected character `{c}`") });
        }
    }
    out.push(Token { tok: Tok::End, line, col });
    Ok(out)
}

/// Intermediate typed value: vector operations are expanded componentwise.
#[derive(Debug, Clone)]
enum Value {
    Scalar(Expr),
    Vector(Vec<Expr>),
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    n: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn syntax<T>(&self, t: &Token, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax { line: t.line, col: t.col, msg: msg.into() })
    }

    fn dim<T>(&self, t: &Token, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::DimensionMismatch { line: t.line, col: t.col, msg: msg.into() })
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        let t = self.next();
        if t.tok == Tok::Sym(c) {
            Ok(())
        } else {
            self.syntax(&t, format!("expected `{c}`, found {:?}", t.tok))
        }
    }

    fn expr(&mut self) -> Result<Value, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let t = self.peek().clone();
            let op = match t.tok {
                Tok::Sym('+') => '+',
                Tok::Sym('-') => '-',
                _ => return Ok(lhs),
            };
            self.next();
            let rhs = self.term()?;
            lhs = self.additive(&t, op, lhs, rhs)?;
        }
    }

    fn additive(&self, t: &Token, op: char, a: Value, b: Value) -> Result<Value, ParseError> {
        let f = |p: Expr, q: Expr| {
            if op == '+' {
                Expr::raw(Node::Add(p, q))
            } else {
                Expr::raw(Node::Sub(p, q))
            }
        };
        match (a, b) {
            (Value::Scalar(p), Value::Scalar(q)) => Ok(Value::Scalar(f(p, q))),
            (Value::Vector(p), Value::Vector(q)) => {
                Ok(Value::Vector(p.into_iter().zip(q).map(|(p, q)| f(p, q)).collect()))
            }
            _ => self.dim(t, format!("cannot apply `{op}` to a scalar and a vector")),
        }
    }

    fn term(&mut self) -> Result<Value, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let t = self.peek().clone();
            let op = match t.tok {
                Tok::Sym('*') => '*',
                Tok::Sym('/') => '/',
                _ => return Ok(lhs),
            };
            self.next();
            let rhs = self.factor()?;
            lhs = match (op, lhs, rhs) {
                ('*', Value::Scalar(p), Value::Scalar(q)) => Value::Scalar(Expr::raw(Node::Mul(p, q))),
                ('*', Value::Scalar(s), Value::Vector(v)) => Value::Vector(
                    v.into_iter().map(|c| Expr::raw(Node::Mul(s.clone(), c))).collect(),
                ),
                ('*', Value::Vector(v), Value::Scalar(s)) => Value::Vector(
                    v.into_iter().map(|c| Expr::raw(Node::Mul(c, s.clone()))).collect(),
                ),
                ('/', Value::Scalar(p), Value::Scalar(q)) => Value::Scalar(Expr::raw(Node::Div(p, q))),
                ('/', Value::Vector(v), Value::Scalar(s)) => Value::Vector(
                    v.into_iter().map(|c| Expr::raw(Node::Div(c, s.clone()))).collect(),
                ),
                _ => return self.dim(&t, format!("`{op}` between two vectors; use dot()")),
            };
        }
    }

    fn factor(&mut self) -> Result<Value, ParseError> {
        if self.peek().tok == Tok::Sym('-') {
            self.next();
            return Ok(match self.factor()? {
                // Negative literals fold so that printed constants reparse
                // to the same leaf.
                Value::Scalar(e) => match e.node() {
                    Node::Const(c) => Value::Scalar(Expr::raw(Node::Const(-c))),
                    _ => Value::Scalar(Expr::raw(Node::Neg(e))),
                },
                Value::Vector(v) => {
                    Value::Vector(v.into_iter().map(|c| Expr::raw(Node::Neg(c))).collect())
                }
            });
        }
        let base = self.base()?;
        if self.peek().tok == Tok::Sym('^') {
            let caret = self.next();
            let mut sign = 1.0;
            if self.peek().tok == Tok::Sym('-') {
                self.next();
                sign = -1.0;
            }
            let t = self.next();
            let e = match t.tok {
                Tok::Num(v) => sign * v,
                _ => return self.syntax(&t, "exponent must be a number literal"),
            };
            return match base {
                Value::Scalar(b) => Ok(Value::Scalar(Expr::raw(Node::Pow(b, e)))),
                Value::Vector(_) => self.dim(&caret, "`^` applied to a vector"),
            };
        }
        Ok(base)
    }

    fn index(&mut self) -> Result<usize, ParseError> {
        self.expect('[')?;
        let t = self.next();
        let idx = match t.tok {
            Tok::Num(v) if v >= 0.0 && v.fract() == 0.0 => v as usize,
            _ => return self.syntax(&t, "index must be a nonnegative integer"),
        };
        if idx >= self.n {
            return self.dim(&t, format!("index {idx} out of range for dimension {}", self.n));
        }
        self.expect(']')?;
        Ok(idx)
    }

    fn vector_var(&self, kind: char) -> Value {
        Value::Vector(
            (0..self.n)
                .map(|i| Expr::raw(Node::Var(if kind == 'x' { Var::X(i) } else { Var::Y(i) })))
                .collect(),
        )
    }

    fn args(&mut self) -> Result<Vec<(Token, Value)>, ParseError> {
        self.expect('(')?;
        let mut out = Vec::new();
        if self.peek().tok == Tok::Sym(')') {
            self.next();
            return Ok(out);
        }
        loop {
            let t = self.peek().clone();
            out.push((t, self.expr()?));
            let t = self.next();
            match t.tok {
                Tok::Sym(',') => continue,
                Tok::Sym(')') => return Ok(out),
                _ => return self.syntax(&t, "expected `,` or `)` in argument list"),
            }
        }
    }

    fn scalar_arg(&self, name: &str, t: &Token, args: Vec<(Token, Value)>) -> Result<Expr, ParseError> {
        if args.len() != 1 {
            return self.syntax(t, format!("{name}() takes one argument"));
        }
        match args.into_iter().next().unwrap() {
            (_, Value::Scalar(e)) => Ok(e),
            (at, Value::Vector(_)) => self.dim(&at, format!("{name}() expects a scalar")),
        }
    }

    fn vector_args(&self, name: &str, t: &Token, args: Vec<(Token, Value)>, k: usize) -> Result<Vec<Vec<Expr>>, ParseError> {
        if args.len() != k {
            return self.syntax(t, format!("{name}() takes {k} argument(s)"));
        }
        args.into_iter()
            .map(|(at, v)| match v {
                Value::Vector(v) => Ok(v),
                Value::Scalar(_) => self.dim(&at, format!("{name}() expects vectors")),
            })
            .collect()
    }

    fn sum(terms: Vec<Expr>) -> Expr {
        let mut it = terms.into_iter();
        let first = it.next().expect("dimension >= 1");
        it.fold(first, |acc, t| Expr::raw(Node::Add(acc, t)))
    }

    fn norm2(v: Vec<Expr>) -> Expr {
        Parser::sum(v.into_iter().map(|c| Expr::raw(Node::Pow(c, 2.0))).collect())
    }

    fn base(&mut self) -> Result<Value, ParseError> {
        let t = self.next();
        match &t.tok {
            Tok::Num(v) => Ok(Value::Scalar(Expr::raw(Node::Const(*v)))),
            Tok::Sym('(') => {
                let v = self.expr()?;
                self.expect(')')?;
                Ok(v)
            }
            Tok::Ident(name) => match name.as_str() {
                "z" => Ok(Value::Scalar(Expr::raw(Node::Var(Var::Z)))),
                "x" | "y" => {
                    let kind = name.chars().next().unwrap();
                    match self.peek().tok {
                        Tok::Sym('[') => {
                            let i = self.index()?;
                            let v = if kind == 'x' { Var::X(i) } else { Var::Y(i) };
                            Ok(Value::Scalar(Expr::raw(Node::Var(v))))
                        }
                        Tok::Sym('(') => {
                            let args = self.args()?;
                            if !args.is_empty() {
                                return self.syntax(&t, format!("{name}() takes no arguments"));
                            }
                            Ok(self.vector_var(kind))
                        }
                        _ => Ok(self.vector_var(kind)),
                    }
                }
                "dot" => {
                    let args = self.args()?;
                    let mut v = self.vector_args("dot", &t, args, 2)?;
                    let b = v.pop().unwrap();
                    let a = v.pop().unwrap();
                    Ok(Value::Scalar(Parser::sum(
                        a.into_iter().zip(b).map(|(p, q)| Expr::raw(Node::Mul(p, q))).collect(),
                    )))
                }
                "norm2" => {
                    let args = self.args()?;
                    let v = self.vector_args("norm2", &t, args, 1)?.pop().unwrap();
                    Ok(Value::Scalar(Parser::norm2(v)))
                }
                "norm" => {
                    let args = self.args()?;
                    let v = self.vector_args("norm", &t, args, 1)?.pop().unwrap();
                    Ok(Value::Scalar(Expr::raw(Node::Sqrt(Parser::norm2(v)))))
                }
                "exp" | "log" | "sqrt" => {
                    let args = self.args()?;
                    let a = self.scalar_arg(name, &t, args)?;
                    Ok(Value::Scalar(Expr::raw(match name.as_str() {
                        "exp" => Node::Exp(a),
                        "log" => Node::Log(a),
                        _ => Node::Sqrt(a),
                    })))
                }
                "neg" => {
                    let mut args = self.args()?;
                    if args.len() != 1 {
                        return self.syntax(&t, "neg() takes one argument");
                    }
                    Ok(match args.pop().unwrap().1 {
                        Value::Scalar(e) => Value::Scalar(Expr::raw(Node::Neg(e))),
                        Value::Vector(v) => {
                            Value::Vector(v.into_iter().map(|c| Expr::raw(Node::Neg(c))).collect())
                        }
                    })
                }
                _ => Err(ParseError::UnknownIdentifier { line: t.line, col: t.col, name: name.clone() }),
            },
            Tok::End => self.syntax(&t, "unexpected end of input"),
            other => self.syntax(&t, format!("unexpected token {other:?}")),
        }
    }
}

/// Parse a scalar generating-function expression in dimension `n`.
pub fn parse(src: &str, n: usize) -> Result<Expr, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, n };
    let v = p.expr()?;
    let t = p.peek().clone();
    if t.tok != Tok::End {
        return p.syntax(&t, format!("trailing input {:?}", t.tok));
    }
    match v {
        Value::Scalar(e) => Ok(e),
        Value::Vector(_) => Err(ParseError::DimensionMismatch {
            line: 1,
            col: 1,
            msg: "expression is vector-valued; a scalar is required".into(),
        }),
    }
}
