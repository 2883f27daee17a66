//! Scalar expressions over the jet coordinates `(t, x^i, p_i)`.
//!
//! An [`Expr`] is an immutable, reference-counted tree (in practice a DAG, since
//! derivatives and substitutions share subtrees). Construction goes through
//! smart constructors that fold constants and the usual 0/1 identities; no
//! other simplification is attempted, so two expressions are "equal" when they
//! evaluate equally, not when they print equally.

mod diff;
mod eval;
mod parse;

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::ops;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use diff::{compose, compose_with, diff, identity_subst, Subst, SubstError};
pub use eval::{eval, DomainKind, EvalError, Point};
pub use parse::{parse, ParseError, MAX_DEPTH};

/// A coordinate on the dual jet space. Indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Var {
    Time,
    Space(usize),
    Momentum(usize),
}

impl Var {
    pub fn index(self) -> Option<usize> {
        match self {
            Var::Time => None,
            Var::Space(i) | Var::Momentum(i) => Some(i),
        }
    }

    /// Whether the variable exists in dimension `n`.
    pub fn fits(self, n: usize) -> bool {
        self.index().is_none_or(|i| i < n)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::Time => write!(f, "t"),
            Var::Space(i) => write!(f, "x{}", i + 1),
            Var::Momentum(i) => write!(f, "p{}", i + 1),
        }
    }
}

/// Exact rational exponent, kept in lowest terms with a positive denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rational {
    num: i64,
    den: i64,
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a.abs()
}

impl Rational {
    pub fn new(num: i64, den: i64) -> Option<Self> {
        if den == 0 || num == i64::MIN || den == i64::MIN {
            return None;
        }
        let g = gcd(num, den).max(1);
        let sign = if den < 0 { -1 } else { 1 };
        Some(Rational {
            num: sign * num / g,
            den: sign * den / g,
        })
    }

    pub const fn integer(k: i64) -> Self {
        Rational { num: k, den: 1 }
    }

    pub fn num(self) -> i64 {
        self.num
    }

    pub fn den(self) -> i64 {
        self.den
    }

    pub fn is_integer(self) -> bool {
        self.den == 1
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `self - 1`, or `None` on overflow.
    pub fn pred(self) -> Option<Self> {
        Rational::new(self.num.checked_sub(self.den)?, self.den)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({}/{})", self.num, self.den)
        }
    }
}

/// One node of an expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(Var),
    Neg(Expr),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Pow(Expr, Rational),
    Exp(Expr),
    Log(Expr),
    Sin(Expr),
    Cos(Expr),
}

/// Shared handle to an immutable expression node.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || *self.0 == *other.0
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl Expr {
    fn raw(node: Node) -> Self {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub(crate) fn ptr(&self) -> *const Node {
        Arc::as_ptr(&self.0)
    }

    pub(crate) fn is_shared(&self) -> bool {
        Arc::strong_count(&self.0) > 1
    }

    pub fn constant(c: f64) -> Self {
        Expr::raw(Node::Const(c))
    }

    pub fn zero() -> Self {
        Expr::constant(0.0)
    }

    pub fn one() -> Self {
        Expr::constant(1.0)
    }

    pub fn var(v: Var) -> Self {
        Expr::raw(Node::Var(v))
    }

    pub fn time() -> Self {
        Expr::var(Var::Time)
    }

    pub fn space(i: usize) -> Self {
        Expr::var(Var::Space(i))
    }

    pub fn momentum(i: usize) -> Self {
        Expr::var(Var::Momentum(i))
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

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    pub fn neg(&self) -> Expr {
        match self.node() {
            Node::Const(c) => Expr::constant(-c),
            Node::Neg(a) => a.clone(),
            _ => Expr::raw(Node::Neg(self.clone())),
        }
    }

    pub fn add(&self, rhs: &Expr) -> Expr {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        if let (Some(a), Some(b)) = (self.as_const(), rhs.as_const()) {
            if let Some(v) = finite(a + b) {
                return Expr::constant(v);
            }
        }
        Expr::raw(Node::Add(self.clone(), rhs.clone()))
    }

    pub fn sub(&self, rhs: &Expr) -> Expr {
        if rhs.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return rhs.neg();
        }
        if let (Some(a), Some(b)) = (self.as_const(), rhs.as_const()) {
            if let Some(v) = finite(a - b) {
                return Expr::constant(v);
            }
        }
        Expr::raw(Node::Sub(self.clone(), rhs.clone()))
    }

    pub fn mul(&self, rhs: &Expr) -> Expr {
        if self.is_zero() || rhs.is_zero() {
            return Expr::zero();
        }
        if self.is_one() {
            return rhs.clone();
        }
        if rhs.is_one() {
            return self.clone();
        }
        if let (Some(a), Some(b)) = (self.as_const(), rhs.as_const()) {
            if let Some(v) = finite(a * b) {
                return Expr::constant(v);
            }
        }
        Expr::raw(Node::Mul(self.clone(), rhs.clone()))
    }

    pub fn div(&self, rhs: &Expr) -> Expr {
        if rhs.is_one() {
            return self.clone();
        }
        match (self.as_const(), rhs.as_const()) {
            (_, Some(0.0)) => Expr::raw(Node::Div(self.clone(), rhs.clone())),
            (Some(0.0), _) => Expr::zero(),
            (Some(a), Some(b)) => match finite(a / b) {
                Some(v) => Expr::constant(v),
                None => Expr::raw(Node::Div(self.clone(), rhs.clone())),
            },
            _ => Expr::raw(Node::Div(self.clone(), rhs.clone())),
        }
    }

    pub fn pow(&self, k: Rational) -> Expr {
        if k.num() == 0 {
            return Expr::one();
        }
        if k == Rational::integer(1) {
            return self.clone();
        }
        if let Some(b) = self.as_const() {
            let folded = if k.is_integer() {
                (b != 0.0 || k.num() > 0).then(|| b.powf(k.to_f64()))
            } else {
                (b > 0.0).then(|| b.powf(k.to_f64()))
            };
            if let Some(v) = folded.and_then(finite) {
                return Expr::constant(v);
            }
        }
        Expr::raw(Node::Pow(self.clone(), k))
    }

    pub fn powi(&self, k: i64) -> Expr {
        self.pow(Rational::integer(k))
    }

    pub fn recip(&self) -> Expr {
        self.powi(-1)
    }

    pub fn scale(&self, c: f64) -> Expr {
        Expr::constant(c).mul(self)
    }

    pub fn exp(&self) -> Expr {
        if let Some(v) = self.as_const().map(f64::exp).and_then(finite) {
            return Expr::constant(v);
        }
        Expr::raw(Node::Exp(self.clone()))
    }

    pub fn log(&self) -> Expr {
        match self.as_const() {
            Some(c) if c > 0.0 => Expr::constant(c.ln()),
            _ => Expr::raw(Node::Log(self.clone())),
        }
    }

    pub fn sin(&self) -> Expr {
        match self.as_const() {
            Some(c) => Expr::constant(c.sin()),
            None => Expr::raw(Node::Sin(self.clone())),
        }
    }

    pub fn cos(&self) -> Expr {
        match self.as_const() {
            Some(c) => Expr::constant(c.cos()),
            None => Expr::raw(Node::Cos(self.clone())),
        }
    }

    /// Sum of an iterator of expressions; the empty sum is zero.
    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        terms.into_iter().fold(Expr::zero(), |acc, e| acc.add(&e))
    }

    /// Every variable occurring in the expression.
    pub fn free_vars(&self) -> BTreeSet<Var> {
        fn walk(e: &Expr, seen: &mut HashSet<*const Node>, out: &mut BTreeSet<Var>) {
            if !seen.insert(e.ptr()) {
                return;
            }
            match e.node() {
                Node::Const(_) => {}
                Node::Var(v) => {
                    out.insert(*v);
                }
                Node::Neg(a) | Node::Pow(a, _) | Node::Exp(a) | Node::Log(a) | Node::Sin(a) | Node::Cos(a) => {
                    walk(a, seen, out)
                }
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                    walk(a, seen, out);
                    walk(b, seen, out);
                }
            }
        }
        let mut out = BTreeSet::new();
        walk(self, &mut HashSet::new(), &mut out);
        out
    }

    /// Whether every free variable satisfies `allowed`.
    pub fn depends_only_on(&self, allowed: impl Fn(Var) -> bool) -> bool {
        self.free_vars().into_iter().all(allowed)
    }

    pub fn diff(&self, v: Var) -> Expr {
        diff(self, v)
    }

    pub fn eval(&self, q: &Point) -> Result<f64, EvalError> {
        eval(self, q)
    }
}

impl From<f64> for Expr {
    fn from(c: f64) -> Self {
        Expr::constant(c)
    }
}

impl From<Var> for Expr {
    fn from(v: Var) -> Self {
        Expr::var(v)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident) => {
        impl ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::$method(self, rhs)
            }
        }
        impl ops::$trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$method(&self, &rhs)
            }
        }
        impl ops::$trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::$method(&self, rhs)
            }
        }
        impl ops::$trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$method(self, &rhs)
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(&self)
    }
}

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

fn fmt_const(c: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if c.is_sign_negative() {
        write!(f, "(-{:?})", -c)
    } else {
        write!(f, "{c:?}")
    }
}

/// Fully parenthesized output accepted back by [`parse`].
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(c) => fmt_const(*c, f),
            Node::Var(v) => write!(f, "{v}"),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Add(a, b) => write!(f, "({a} + {b})"),
            Node::Sub(a, b) => write!(f, "({a} - {b})"),
            Node::Mul(a, b) => write!(f, "({a} * {b})"),
            Node::Div(a, b) => write!(f, "({a} / {b})"),
            Node::Pow(a, k) => write!(f, "({a}^{k})"),
            Node::Exp(a) => write!(f, "exp({a})"),
            Node::Log(a) => write!(f, "log({a})"),
            Node::Sin(a) => write!(f, "sin({a})"),
            Node::Cos(a) => write!(f, "cos({a})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_normalizes() {
        let r = Rational::new(4, -6).unwrap();
        assert_eq!((r.num(), r.den()), (-2, 3));
        assert!(Rational::new(1, 0).is_none());
        assert_eq!(Rational::integer(3).pred(), Some(Rational::integer(2)));
        assert_eq!(Rational::new(1, 2).unwrap().pred(), Rational::new(-1, 2));
    }

    #[test]
    fn folding_identities() {
        let t = Expr::time();
        assert_eq!(&t * &Expr::one(), t);
        assert!((&t * &Expr::zero()).is_zero());
        assert_eq!(&Expr::zero() + &t, t);
        assert_eq!(t.powi(1), t);
        assert!(t.powi(0).is_one());
        assert_eq!(t.neg().neg(), t);
        assert_eq!((Expr::constant(2.0) * Expr::constant(3.0)).as_const(), Some(6.0));
        // division by a literal zero stays symbolic so evaluation can report it
        assert!(Expr::one().div(&Expr::zero()).as_const().is_none());
    }

    #[test]
    fn free_vars_and_dependency() {
        let e = parse("x1^2 * p2 + t", 2).unwrap();
        let vars: Vec<_> = e.free_vars().into_iter().collect();
        assert_eq!(vars, vec![Var::Time, Var::Space(0), Var::Momentum(1)]);
        assert!(!e.depends_only_on(|v| v == Var::Time));
    }

    #[test]
    fn display_is_reparseable() {
        let e = parse("-(x1^(1/2)) * exp(-2*t) / (p1 - 3.5e-3)", 1).unwrap();
        let printed = e.to_string();
        let back = parse(&printed, 1).unwrap();
        let q = Point::new(0.7, vec![1.3], vec![-0.4]);
        assert_eq!(e.eval(&q).unwrap().to_bits(), back.eval(&q).unwrap().to_bits());
    }
}
