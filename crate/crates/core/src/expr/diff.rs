use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use super::{Expr, Node, Var};

/// Simultaneous substitution of variables by expressions.
pub type Subst = BTreeMap<Var, Expr>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubstError {
    #[error("no substitution given for variable {0}")]
    Missing(Var),
}

/// The substitution sending every coordinate of dimension `n` to itself.
pub fn identity_subst(n: usize) -> Subst {
    let mut s = Subst::new();
    s.insert(Var::Time, Expr::time());
    for i in 0..n {
        s.insert(Var::Space(i), Expr::space(i));
        s.insert(Var::Momentum(i), Expr::momentum(i));
    }
    s
}

struct Differentiator {
    v: Var,
    memo: HashMap<*const Node, Expr>,
}

impl Differentiator {
    fn run(&mut self, e: &Expr) -> Expr {
        if let Some(d) = self.memo.get(&e.ptr()) {
            return d.clone();
        }
        let d = self.rule(e);
        if e.is_shared() {
            self.memo.insert(e.ptr(), d.clone());
        }
        d
    }

    fn rule(&mut self, e: &Expr) -> Expr {
        match e.node() {
            Node::Const(_) => Expr::zero(),
            Node::Var(w) => {
                if *w == self.v {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Neg(a) => self.run(a).neg(),
            Node::Add(a, b) => self.run(a).add(&self.run(b)),
            Node::Sub(a, b) => self.run(a).sub(&self.run(b)),
            Node::Mul(a, b) => {
                let (da, db) = (self.run(a), self.run(b));
                da.mul(b).add(&a.mul(&db))
            }
            Node::Div(a, b) => {
                let (da, db) = (self.run(a), self.run(b));
                da.div(b).sub(&a.mul(&db).div(&b.powi(2)))
            }
            Node::Pow(a, k) => {
                let da = self.run(a);
                if da.is_zero() {
                    return Expr::zero();
                }
                // exponents come from the parser (|k| bounded) or from repeated
                // differentiation, so `k - 1` cannot realistically overflow
                let km1 = k.pred().expect("rational exponent overflow");
                Expr::constant(k.to_f64()).mul(&a.pow(km1)).mul(&da)
            }
            Node::Exp(a) => e.mul(&self.run(a)),
            Node::Log(a) => self.run(a).div(a),
            Node::Sin(a) => a.cos().mul(&self.run(a)),
            Node::Cos(a) => a.sin().neg().mul(&self.run(a)),
        }
    }
}

/// Exact partial derivative of `e` with respect to `v`.
pub fn diff(e: &Expr, v: Var) -> Expr {
    Differentiator { v, memo: HashMap::new() }.run(e)
}

struct Composer<'a, F> {
    lookup: &'a F,
    memo: HashMap<*const Node, Expr>,
}

impl<F: Fn(Var) -> Option<Expr>> Composer<'_, F> {
    fn run(&mut self, e: &Expr) -> Result<Expr, SubstError> {
        if let Some(d) = self.memo.get(&e.ptr()) {
            return Ok(d.clone());
        }
        let out = match e.node() {
            Node::Const(_) => e.clone(),
            Node::Var(v) => (self.lookup)(*v).ok_or(SubstError::Missing(*v))?,
            Node::Neg(a) => self.run(a)?.neg(),
            Node::Add(a, b) => self.run(a)?.add(&self.run(b)?),
            Node::Sub(a, b) => self.run(a)?.sub(&self.run(b)?),
            Node::Mul(a, b) => self.run(a)?.mul(&self.run(b)?),
            Node::Div(a, b) => self.run(a)?.div(&self.run(b)?),
            Node::Pow(a, k) => self.run(a)?.pow(*k),
            Node::Exp(a) => self.run(a)?.exp(),
            Node::Log(a) => self.run(a)?.log(),
            Node::Sin(a) => self.run(a)?.sin(),
            Node::Cos(a) => self.run(a)?.cos(),
        };
        if e.is_shared() {
            self.memo.insert(e.ptr(), out.clone());
        }
        Ok(out)
    }
}

/// Simultaneous substitution driven by a lookup function.
pub fn compose_with<F: Fn(Var) -> Option<Expr>>(e: &Expr, lookup: &F) -> Result<Expr, SubstError> {
    Composer { lookup, memo: HashMap::new() }.run(e)
}

/// Simultaneous substitution `e[v := subst[v]]`.
pub fn compose(e: &Expr, subst: &Subst) -> Result<Expr, SubstError> {
    compose_with(e, &|v| subst.get(&v).cloned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, Point, Rational};

    fn q2(t: f64, x: [f64; 2], p: [f64; 2]) -> Point {
        Point::new(t, x.to_vec(), p.to_vec())
    }

    #[test]
    fn derivative_examples() {
        let e = parse("exp(2*t)", 1).unwrap();
        let d = diff(&e, Var::Time);
        assert_eq!(d.eval(&Point::new(0.0, vec![0.0], vec![0.0])).unwrap(), 2.0);

        let e = parse("x1^2 * p2", 2).unwrap();
        let d = diff(&e, Var::Momentum(1));
        assert_eq!(d.eval(&q2(0.0, [3.0, 0.0], [0.0, 0.0])).unwrap(), 9.0);

        let d = diff(&parse("p1", 1).unwrap(), Var::Momentum(0));
        assert!(d.is_one());
    }

    #[test]
    fn absent_variable_gives_zero() {
        let e = parse("sin(x1) * exp(t)", 2).unwrap();
        assert!(diff(&e, Var::Momentum(0)).is_zero());
    }

    #[test]
    fn rational_power_rule() {
        let e = Expr::space(0).pow(Rational::new(1, 2).unwrap());
        let d = diff(&e, Var::Space(0));
        let v = d.eval(&Point::new(0.0, vec![4.0], vec![0.0])).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
    }

    #[test]
    fn compose_examples() {
        let mut s = Subst::new();
        s.insert(Var::Time, parse("2*t", 1).unwrap());
        let e = compose(&parse("t", 1).unwrap(), &s).unwrap();
        assert_eq!(e.eval(&Point::new(3.0, vec![0.0], vec![0.0])).unwrap(), 6.0);

        let mut s = identity_subst(1);
        s.insert(Var::Momentum(0), parse("x1*p1", 1).unwrap());
        let e = compose(&parse("p1", 1).unwrap(), &s).unwrap();
        assert_eq!(e.eval(&Point::new(0.0, vec![2.0], vec![5.0])).unwrap(), 10.0);
    }

    #[test]
    fn identity_substitution_preserves_values() {
        let e = parse("(exp(t^2) * x2 - p1/x1)^3 + cos(p2)", 2).unwrap();
        let d = diff(&e, Var::Time);
        let back = compose(&d, &identity_subst(2)).unwrap();
        let q = q2(0.8, [1.2, 0.7], [-1.5, 2.0]);
        assert_eq!(d.eval(&q).unwrap().to_bits(), back.eval(&q).unwrap().to_bits());
    }

    #[test]
    fn missing_substitution() {
        let e = parse("t + p1", 1).unwrap();
        let mut s = Subst::new();
        s.insert(Var::Time, Expr::time());
        assert_eq!(compose(&e, &s), Err(SubstError::Missing(Var::Momentum(0))));
    }
}
