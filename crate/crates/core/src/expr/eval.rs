use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Expr, Node, Var};

/// A point `(t, x, p)` of the dual jet space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub t: f64,
    pub x: Vec<f64>,
    pub p: Vec<f64>,
}

impl Point {
    /// # Panics
    ///
    /// If `x` and `p` have different lengths.
    pub fn new(t: f64, x: Vec<f64>, p: Vec<f64>) -> Self {
        assert_eq!(x.len(), p.len(), "position and momentum dimension differ");
        Point { t, x, p }
    }

    pub fn origin(n: usize) -> Self {
        Point::new(0.0, vec![0.0; n], vec![0.0; n])
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn get(&self, v: Var) -> Option<f64> {
        match v {
            Var::Time => Some(self.t),
            Var::Space(i) => self.x.get(i).copied(),
            Var::Momentum(i) => self.p.get(i).copied(),
        }
    }

    /// Copy of the point with one coordinate replaced.
    ///
    /// # Panics
    ///
    /// If the index of `v` is out of range.
    pub fn with(&self, v: Var, value: f64) -> Point {
        let mut q = self.clone();
        match v {
            Var::Time => q.t = value,
            Var::Space(i) => q.x[i] = value,
            Var::Momentum(i) => q.p[i] = value,
        }
        q
    }

    /// Coordinates laid out as `[t, x.., p..]`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(1 + 2 * self.dim());
        v.push(self.t);
        v.extend_from_slice(&self.x);
        v.extend_from_slice(&self.p);
        v
    }

    /// Inverse of [`Point::to_flat`]; `None` unless `flat.len() == 2n + 1`.
    pub fn from_flat(n: usize, flat: &[f64]) -> Option<Point> {
        (flat.len() == 2 * n + 1).then(|| Point::new(flat[0], flat[1..=n].to_vec(), flat[n + 1..].to_vec()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    LogNonPositive,
    DivisionByZero,
    ZeroToNegativePower,
    RootOfNonPositive,
}

impl std::fmt::Display for DomainKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DomainKind::LogNonPositive => "log of a non-positive value",
            DomainKind::DivisionByZero => "division by zero",
            DomainKind::ZeroToNegativePower => "zero raised to a negative power",
            DomainKind::RootOfNonPositive => "fractional power of a non-positive value",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error: {kind} in `{subexpr}`")]
    Domain { kind: DomainKind, subexpr: String },
    #[error("variable {var} is not defined at a point of dimension {dim}")]
    Dimension { var: Var, dim: usize },
}

const SUBEXPR_PREVIEW: usize = 160;

fn domain(kind: DomainKind, e: &Expr) -> EvalError {
    let mut subexpr = e.to_string();
    if subexpr.len() > SUBEXPR_PREVIEW {
        let mut cut = SUBEXPR_PREVIEW;
        while !subexpr.is_char_boundary(cut) {
            cut -= 1;
        }
        subexpr.truncate(cut);
        subexpr.push_str("...");
    }
    EvalError::Domain { kind, subexpr }
}

struct Evaluator<'a> {
    q: &'a Point,
    memo: HashMap<*const Node, f64>,
}

impl Evaluator<'_> {
    fn run(&mut self, e: &Expr) -> Result<f64, EvalError> {
        let shared = e.is_shared();
        if shared {
            if let Some(v) = self.memo.get(&e.ptr()) {
                return Ok(*v);
            }
        }
        let v = self.node(e)?;
        if shared {
            self.memo.insert(e.ptr(), v);
        }
        Ok(v)
    }

    fn node(&mut self, e: &Expr) -> Result<f64, EvalError> {
        Ok(match e.node() {
            Node::Const(c) => *c,
            Node::Var(v) => self.q.get(*v).ok_or(EvalError::Dimension {
                var: *v,
                dim: self.q.dim(),
            })?,
            Node::Neg(a) => -self.run(a)?,
            Node::Add(a, b) => self.run(a)? + self.run(b)?,
            Node::Sub(a, b) => self.run(a)? - self.run(b)?,
            Node::Mul(a, b) => self.run(a)? * self.run(b)?,
            Node::Div(a, b) => {
                let num = self.run(a)?;
                let den = self.run(b)?;
                if den == 0.0 {
                    return Err(domain(DomainKind::DivisionByZero, e));
                }
                num / den
            }
            Node::Pow(a, k) => {
                let base = self.run(a)?;
                if k.is_integer() {
                    if base == 0.0 && k.num() < 0 {
                        return Err(domain(DomainKind::ZeroToNegativePower, e));
                    }
                    match i32::try_from(k.num()) {
                        Ok(ki) => base.powi(ki),
                        Err(_) => base.powf(k.num() as f64),
                    }
                } else {
                    if base <= 0.0 {
                        return Err(domain(DomainKind::RootOfNonPositive, e));
                    }
                    base.powf(k.to_f64())
                }
            }
            Node::Exp(a) => self.run(a)?.exp(),
            Node::Log(a) => {
                let v = self.run(a)?;
                if v <= 0.0 {
                    return Err(domain(DomainKind::LogNonPositive, e));
                }
                v.ln()
            }
            Node::Sin(a) => self.run(a)?.sin(),
            Node::Cos(a) => self.run(a)?.cos(),
        })
    }
}

/// Evaluates `e` at `q` in IEEE double precision.
pub fn eval(e: &Expr, q: &Point) -> Result<f64, EvalError> {
    Evaluator { q, memo: HashMap::new() }.run(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn at_t(t: f64) -> Point {
        Point::new(t, vec![1.0], vec![1.0])
    }

    #[test]
    fn basic_values() {
        assert_eq!(Expr::constant(7.0).eval(&Point::origin(3)).unwrap(), 7.0);
        assert_eq!(parse("t^2", 1).unwrap().eval(&at_t(2.0)).unwrap(), 4.0);
        assert_eq!(parse("exp(2*t)", 1).unwrap().eval(&at_t(0.0)).unwrap(), 1.0);
    }

    #[test]
    fn division_by_zero_is_reported() {
        let err = parse("x1/t", 1).unwrap().eval(&at_t(0.0)).unwrap_err();
        match err {
            EvalError::Domain { kind, subexpr } => {
                assert_eq!(kind, DomainKind::DivisionByZero);
                assert_eq!(subexpr, "(x1 / t)");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn other_domain_errors() {
        let q = Point::new(0.0, vec![-1.0], vec![0.0]);
        let kind = |src: &str| match parse(src, 1).unwrap().eval(&q) {
            Err(EvalError::Domain { kind, .. }) => Some(kind),
            _ => None,
        };
        assert_eq!(kind("log(x1)"), Some(DomainKind::LogNonPositive));
        assert_eq!(kind("log(t)"), Some(DomainKind::LogNonPositive));
        assert_eq!(kind("t^-2"), Some(DomainKind::ZeroToNegativePower));
        assert_eq!(kind("x1^(1/2)"), Some(DomainKind::RootOfNonPositive));
        assert_eq!(kind("x1^3"), None);
    }

    #[test]
    fn dimension_error() {
        let e = Expr::space(2);
        assert!(matches!(
            e.eval(&Point::origin(2)),
            Err(EvalError::Dimension { var: Var::Space(2), dim: 2 })
        ));
    }

    #[test]
    fn flat_round_trip() {
        let q = Point::new(1.0, vec![2.0, 3.0], vec![4.0, 5.0]);
        assert_eq!(q.to_flat(), vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(Point::from_flat(2, &q.to_flat()), Some(q));
        assert_eq!(Point::from_flat(2, &[1.0]), None);
    }

    #[test]
    fn shared_subtrees_are_deterministic() {
        let base = parse("sin(x1) * p1 + t", 1).unwrap();
        let mut e = base.clone();
        for _ in 0..40 {
            e = &e + &e;
        }
        let q = Point::new(0.3, vec![0.9], vec![1.1]);
        let a = e.eval(&q).unwrap();
        let b = e.eval(&q).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert_eq!(a, base.eval(&q).unwrap() * 2f64.powi(40));
    }
}
