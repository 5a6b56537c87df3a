use super::expr::{Expr, Node};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    LogNonPositive,
    DivisionByZero,
    SqrtNegative,
    PowDomain,
    Overflow,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("domain violation ({kind:?}) at node `{node}`")]
pub struct EvalError {
    pub kind: DomainKind,
    /// The offending subexpression, printed in the input grammar (truncated).
    pub node: String,
}

fn node_text(e: &Expr) -> String {
    let mut s = e.to_string();
    if s.len() > 240 {
        let mut cut = 240;
        while !s.is_char_boundary(cut) {
            cut -= 1;
        }
        s.truncate(cut);
        s.push_str("...");
    }
    s
}

#[inline]
pub(crate) fn pow_fn(a: f64, e: f64) -> f64 {
    if e == 2.0 {
        a * a
    } else if e == 3.0 {
        a * a * a
    } else if e.fract() == 0.0 && e.abs() <= 16.0 {
        a.powi(e as i32)
    } else {
        a.powf(e)
    }
}

/// Checked evaluation on the flat argument layout `[x.., y.., z]`.
pub fn eval_flat(e: &Expr, vars: &[f64]) -> Result<f64, EvalError> {
    let fail = |kind| Err(EvalError { kind, node: node_text(e) });
    let v = match e.node() {
        Node::Const(c) => *c,
        Node::Var(w) => vars[w.slot((vars.len() - 1) / 2)],
        Node::Add(a, b) => eval_flat(a, vars)? + eval_flat(b, vars)?,
        Node::Sub(a, b) => eval_flat(a, vars)? - eval_flat(b, vars)?,
        Node::Mul(a, b) => eval_flat(a, vars)? * eval_flat(b, vars)?,
        Node::Div(a, b) => {
            let p = eval_flat(a, vars)?;
            let q = eval_flat(b, vars)?;
            if q == 0.0 {
                return fail(DomainKind::DivisionByZero);
            }
            p / q
        }
        Node::Pow(a, k) => {
            let p = eval_flat(a, vars)?;
            if (p < 0.0 && k.fract() != 0.0) || (p == 0.0 && *k < 0.0) {
                return fail(DomainKind::PowDomain);
            }
            pow_fn(p, *k)
        }
        Node::Neg(a) => -eval_flat(a, vars)?,
        Node::Sqrt(a) => {
            let p = eval_flat(a, vars)?;
            if p < 0.0 {
                return fail(DomainKind::SqrtNegative);
            }
            p.sqrt()
        }
        Node::Exp(a) => eval_flat(a, vars)?.exp(),
        Node::Log(a) => {
            let p = eval_flat(a, vars)?;
            if p <= 0.0 {
                return fail(DomainKind::LogNonPositive);
            }
            p.ln()
        }
    };
    if !v.is_finite() {
        return fail(DomainKind::Overflow);
    }
    Ok(v)
}

/// Checked evaluation at `(x, y, z)`.
pub fn eval(e: &Expr, x: &[f64], y: &[f64], z: f64) -> Result<f64, EvalError> {
    let mut vars = Vec::with_capacity(x.len() + y.len() + 1);
    vars.extend_from_slice(x);
    vars.extend_from_slice(y);
    vars.push(z);
    eval_flat(e, &vars)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Const(f64),
    Var(u32),
    Add(u32, u32),
    Sub(u32, u32),
    Mul(u32, u32),
    Div(u32, u32),
    Pow(u32, f64),
    Neg(u32),
    Sqrt(u32),
    Exp(u32),
    Log(u32),
}

#[derive(Hash, PartialEq, Eq)]
enum Key {
    Const(u64),
    Var(u32),
    Bin(u8, u32, u32),
    Pow(u32, u64),
    Un(u8, u32),
}

/// A straight-line tape evaluating several expressions at once, with common
/// subexpressions shared structurally. Used on hot paths; falls back to
/// [`eval_flat`] to locate the offending node when any value is non-finite.
#[derive(Debug, Clone)]
pub struct Program {
    ops: Vec<Op>,
    outputs: Vec<u32>,
    exprs: Vec<Expr>,
    n_vars: usize,
}

struct Compiler {
    ops: Vec<Op>,
    by_key: HashMap<Key, u32>,
    by_ptr: HashMap<usize, u32>,
    n: usize,
}

impl Compiler {
    fn push(&mut self, key: Key, op: Op) -> u32 {
        if let Some(&s) = self.by_key.get(&key) {
            return s;
        }
        let s = self.ops.len() as u32;
        self.ops.push(op);
        self.by_key.insert(key, s);
        s
    }

    fn compile(&mut self, e: &Expr) -> u32 {
        if let Some(&s) = self.by_ptr.get(&e.ptr()) {
            return s;
        }
        let s = match e.node() {
            Node::Const(c) => self.push(Key::Const(c.to_bits()), Op::Const(*c)),
            Node::Var(v) => {
                let k = v.slot(self.n) as u32;
                self.push(Key::Var(k), Op::Var(k))
            }
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                let (p, q) = (self.compile(a), self.compile(b));
                let (tag, op) = match e.node() {
                    Node::Add(..) => (0, Op::Add(p, q)),
                    Node::Sub(..) => (1, Op::Sub(p, q)),
                    Node::Mul(..) => (2, Op::Mul(p, q)),
                    _ => (3, Op::Div(p, q)),
                };
                self.push(Key::Bin(tag, p, q), op)
            }
            Node::Pow(a, k) => {
                let p = self.compile(a);
                self.push(Key::Pow(p, k.to_bits()), Op::Pow(p, *k))
            }
            Node::Neg(a) | Node::Sqrt(a) | Node::Exp(a) | Node::Log(a) => {
                let p = self.compile(a);
                let (tag, op) = match e.node() {
                    Node::Neg(_) => (0, Op::Neg(p)),
                    Node::Sqrt(_) => (1, Op::Sqrt(p)),
                    Node::Exp(_) => (2, Op::Exp(p)),
                    _ => (3, Op::Log(p)),
                };
                self.push(Key::Un(tag, p), op)
            }
        };
        self.by_ptr.insert(e.ptr(), s);
        s
    }
}

impl Program {
    /// Compile `exprs` for dimension `n` (argument layout `[x.., y.., z]`).
    pub fn new(exprs: &[Expr], n: usize) -> Program {
        let mut c = Compiler { ops: Vec::new(), by_key: HashMap::new(), by_ptr: HashMap::new(), n };
        let outputs = exprs.iter().map(|e| c.compile(e)).collect();
        Program { ops: c.ops, outputs, exprs: exprs.to_vec(), n_vars: 2 * n + 1 }
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn n_ops(&self) -> usize {
        self.ops.len()
    }

    /// Evaluate all outputs into `out`; `scratch` is reused between calls.
    pub fn eval_into(&self, vars: &[f64], scratch: &mut Vec<f64>, out: &mut [f64]) -> Result<(), EvalError> {
        debug_assert_eq!(vars.len(), self.n_vars);
        scratch.clear();
        scratch.reserve(self.ops.len());
        let mut finite = true;
        for op in &self.ops {
            let r = |i: &u32| scratch[*i as usize];
            let v = match op {
                Op::Const(c) => *c,
                Op::Var(k) => vars[*k as usize],
                Op::Add(a, b) => r(a) + r(b),
                Op::Sub(a, b) => r(a) - r(b),
                Op::Mul(a, b) => r(a) * r(b),
                Op::Div(a, b) => {
                    let q = r(b);
                    if q == 0.0 {
                        finite = false;
                    }
                    r(a) / q
                }
                Op::Pow(a, k) => pow_fn(r(a), *k),
                Op::Neg(a) => -r(a),
                Op::Sqrt(a) => r(a).sqrt(),
                Op::Exp(a) => r(a).exp(),
                Op::Log(a) => r(a).ln(),
            };
            finite &= v.is_finite();
            scratch.push(v);
        }
        for (o, &s) in out.iter_mut().zip(&self.outputs) {
            *o = scratch[s as usize];
        }
        if !finite {
            for e in &self.exprs {
                eval_flat(e, vars)?;
            }
        }
        Ok(())
    }

    /// Convenience wrapper allocating the output vector.
    pub fn eval(&self, vars: &[f64]) -> Result<Vec<f64>, EvalError> {
        let mut scratch = Vec::new();
        let mut out = vec![0.0; self.outputs.len()];
        self.eval_into(vars, &mut scratch, &mut out)?;
        Ok(out)
    }
}
