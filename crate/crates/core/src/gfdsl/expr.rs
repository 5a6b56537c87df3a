use std::fmt;
use std::sync::Arc;

/// A scalar variable of a generating function `g(x, y, z)`.
///
/// Ordering puts all `x` components first, then `y`, then `z`; derivative
/// multi-indices are sorted with this order so that mixed partials have a
/// single canonical key.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X(usize),
    Y(usize),
    Z,
}

impl Var {
    /// Slot of this variable in the flat `[x.., y.., z]` argument layout.
    pub fn slot(self, n: usize) -> usize {
        match self {
            Var::X(i) => i,
            Var::Y(j) => n + j,
            Var::Z => 2 * n,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::X(i) => write!(f, "x[{i}]"),
            Var::Y(j) => write!(f, "y[{j}]"),
            Var::Z => write!(f, "z"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Const(f64),
    Var(Var),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Pow(Expr, f64),
    Neg(Expr),
    Sqrt(Expr),
    Exp(Expr),
    Log(Expr),
}

/// Immutable, cheaply clonable scalar expression tree.
///
/// Vector-valued surface syntax (`x`, `y`, `dot`, `norm`, `norm2`) is expanded
/// componentwise by the parser, so every node here is scalar.
#[derive(Clone, PartialEq)]
pub struct Expr(pub(crate) Arc<Node>);

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    pub(crate) fn ptr(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    fn wrap(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn constant(c: f64) -> Expr {
        Expr::wrap(Node::Const(c))
    }

    pub fn var(v: Var) -> Expr {
        Expr::wrap(Node::Var(v))
    }

    pub fn as_const(&self) -> Option<f64> {
        match *self.0 {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    // Smart constructors. They fold constants and drop neutral elements so
    // that repeated differentiation does not blow up, and so that trees which
    // are identically zero collapse to the literal 0.

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::constant(x + y),
            (Some(x), _) if x == 0.0 => b,
            (_, Some(y)) if y == 0.0 => a,
            _ => Expr::wrap(Node::Add(a, b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::constant(x - y),
            (Some(x), _) if x == 0.0 => Expr::neg(b),
            (_, Some(y)) if y == 0.0 => a,
            _ => Expr::wrap(Node::Sub(a, b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::constant(x * y),
            (Some(x), _) if x == 0.0 => Expr::constant(0.0),
            (_, Some(y)) if y == 0.0 => Expr::constant(0.0),
            (Some(x), _) if x == 1.0 => b,
            (_, Some(y)) if y == 1.0 => a,
            (Some(x), _) if x == -1.0 => Expr::neg(b),
            (_, Some(y)) if y == -1.0 => Expr::neg(a),
            _ => Expr::wrap(Node::Mul(a, b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) if y != 0.0 => Expr::constant(x / y),
            (Some(x), _) if x == 0.0 => Expr::constant(0.0),
            (_, Some(y)) if y == 1.0 => a,
            _ => Expr::wrap(Node::Div(a, b)),
        }
    }

    pub fn pow(a: Expr, e: f64) -> Expr {
        if e == 0.0 {
            return Expr::constant(1.0);
        }
        if e == 1.0 {
            return a;
        }
        match a.as_const() {
            Some(c) if c.powf(e).is_finite() => Expr::constant(c.powf(e)),
            _ => Expr::wrap(Node::Pow(a, e)),
        }
    }

    pub fn neg(a: Expr) -> Expr {
        match &*a.0 {
            Node::Const(c) => Expr::constant(-c),
            Node::Neg(inner) => inner.clone(),
            _ => Expr::wrap(Node::Neg(a)),
        }
    }

    pub fn sqrt(a: Expr) -> Expr {
        match a.as_const() {
            Some(c) if c >= 0.0 => Expr::constant(c.sqrt()),
            _ => Expr::wrap(Node::Sqrt(a)),
        }
    }

    pub fn exp(a: Expr) -> Expr {
        match a.as_const() {
            Some(c) => Expr::constant(c.exp()),
            None => Expr::wrap(Node::Exp(a)),
        }
    }

    pub fn log(a: Expr) -> Expr {
        match a.as_const() {
            Some(c) if c > 0.0 => Expr::constant(c.ln()),
            _ => Expr::wrap(Node::Log(a)),
        }
    }

    /// Raw constructor that keeps the node exactly as given (used by the parser
    /// so that printing and reparsing reproduce the same tree).
    pub(crate) fn raw(node: Node) -> Expr {
        Expr::wrap(node)
    }

    /// True if the tree mentions `v` anywhere.
    pub fn depends_on(&self, v: Var) -> bool {
        self.any_var(&|w| w == v)
    }

    pub fn depends_on_any_y(&self) -> bool {
        self.any_var(&|w| matches!(w, Var::Y(_)))
    }

    pub fn depends_on_any_x(&self) -> bool {
        self.any_var(&|w| matches!(w, Var::X(_)))
    }

    fn any_var(&self, pred: &dyn Fn(Var) -> bool) -> bool {
        match &*self.0 {
            Node::Const(_) => false,
            Node::Var(w) => pred(*w),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.any_var(pred) || b.any_var(pred)
            }
            Node::Pow(a, _) | Node::Neg(a) | Node::Sqrt(a) | Node::Exp(a) | Node::Log(a) => {
                a.any_var(pred)
            }
        }
    }

    /// Largest variable index used, per kind: `(max x index + 1, max y index + 1)`.
    pub fn index_extent(&self) -> (usize, usize) {
        let mut ext = (0, 0);
        self.visit_vars(&mut |v| match v {
            Var::X(i) => ext.0 = ext.0.max(i + 1),
            Var::Y(j) => ext.1 = ext.1.max(j + 1),
            Var::Z => {}
        });
        ext
    }

    fn visit_vars(&self, f: &mut dyn FnMut(Var)) {
        match &*self.0 {
            Node::Const(_) => {}
            Node::Var(w) => f(*w),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.visit_vars(f);
                b.visit_vars(f);
            }
            Node::Pow(a, _) | Node::Neg(a) | Node::Sqrt(a) | Node::Exp(a) | Node::Log(a) => {
                a.visit_vars(f)
            }
        }
    }

    /// Number of nodes counted as a tree (shared subtrees counted repeatedly).
    pub fn tree_size(&self) -> usize {
        match &*self.0 {
            Node::Const(_) | Node::Var(_) => 1,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                1 + a.tree_size() + b.tree_size()
            }
            Node::Pow(a, _) | Node::Neg(a) | Node::Sqrt(a) | Node::Exp(a) | Node::Log(a) => {
                1 + a.tree_size()
            }
        }
    }
}

fn write_number(f: &mut fmt::Formatter<'_>, c: f64) -> fmt::Result {
    // `{:?}` is the shortest representation that round-trips exactly.
    if c < 0.0 || (c == 0.0 && c.is_sign_negative()) {
        write!(f, "(-{:?})", -c)
    } else {
        write!(f, "{c:?}")
    }
}

/// Fully parenthesized rendering in the input grammar; reparsing yields an
/// identical tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.0 {
            Node::Const(c) => write_number(f, *c),
            Node::Var(v) => write!(f, "{v}"),
            Node::Add(a, b) => write!(f, "({a} + {b})"),
            Node::Sub(a, b) => write!(f, "({a} - {b})"),
            Node::Mul(a, b) => write!(f, "({a} * {b})"),
            Node::Div(a, b) => write!(f, "({a} / {b})"),
            Node::Pow(a, e) => {
                write!(f, "({a})^")?;
                if *e < 0.0 {
                    write!(f, "-{:?}", -e)
                } else {
                    write!(f, "{e:?}")
                }
            }
            Node::Neg(a) => write!(f, "neg({a})"),
            Node::Sqrt(a) => write!(f, "sqrt({a})"),
            Node::Exp(a) => write!(f, "exp({a})"),
            Node::Log(a) => write!(f, "log({a})"),
        }
    }
}
