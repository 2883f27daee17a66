//! Coordinate changes on `R × M` and the change they induce on the dual jet
//! space:
//!
//! ```text
//! t̃ = t̃(t),   x̃^i = x̃^i(x),   p̃_i = (∂x^j/∂x̃^i)(dt̃/dt) p_j
//! ```
//!
//! A [`CoordChange`] is given by expressions for the forward maps and explicit
//! inverses. Everything else (Jacobians, the momentum map and its partial
//! derivatives) is derived symbolically once, at construction.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::expr::{compose_with, parse, Expr, Point, Var};
use crate::linalg::{close, from_rows, identity_defect};
use crate::report::Report;

/// `|dt̃/dt|` and `|det ∂x̃/∂x|` must exceed this bound.
pub const REGULARITY_EPS: f64 = 1e-12;

/// Relative tolerance for round trips of user-supplied inverses.
pub const INVERSE_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct CoordChange {
    name: String,
    n: usize,
    t_fwd: Expr,
    t_inv: Expr,
    x_fwd: Vec<Expr>,
    x_inv: Vec<Expr>,
    /// dt̃/dt as a function of t.
    dt_fwd: Expr,
    /// dt/dt̃ as a function of t̃.
    dt_inv: Expr,
    /// ∂x̃^i/∂x^j as functions of x.
    jac_fwd: Vec<Vec<Expr>>,
    /// ∂x^i/∂x̃^j as functions of x̃.
    jac_inv: Vec<Vec<Expr>>,
    /// p̃_k(t, x, p).
    momentum: Vec<Expr>,
    /// ∂p̃_k/∂t.
    dmom_dt: Vec<Expr>,
    /// ∂p̃_k/∂x^i, indexed `[k][i]`.
    dmom_dx: Vec<Vec<Expr>>,
}

/// Every transition factor of the natural frame and coframe rules, evaluated at
/// one point `q` (old chart) and its image (new chart).
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionData {
    pub source: Point,
    pub image: Point,
    pub dt_tilde_dt: f64,
    pub dt_dt_tilde: f64,
    /// `jac[i][j] = ∂x̃^i/∂x^j`
    pub jac: Vec<Vec<f64>>,
    /// `jac_inv[i][j] = ∂x^i/∂x̃^j`
    pub jac_inv: Vec<Vec<f64>>,
    /// `dp_tilde_dt[k] = ∂p̃_k/∂t`
    pub dp_tilde_dt: Vec<f64>,
    /// `dp_tilde_dx[k][i] = ∂p̃_k/∂x^i`
    pub dp_tilde_dx: Vec<Vec<f64>>,
}

impl TransitionData {
    pub fn dim(&self) -> usize {
        self.jac.len()
    }

    /// Jacobian of `(t, x, p) ↦ (t̃, x̃, p̃)`, rows indexed by new coordinates.
    ///
    /// Its columns are the natural vectors `∂/∂t, ∂/∂x^i, ∂/∂p_i` written in the
    /// new natural frame.
    pub fn jet_jacobian(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut a = DMatrix::zeros(2 * n + 1, 2 * n + 1);
        a[(0, 0)] = self.dt_tilde_dt;
        for j in 0..n {
            for i in 0..n {
                a[(1 + j, 1 + i)] = self.jac[j][i];
                a[(1 + n + j, 1 + i)] = self.dp_tilde_dx[j][i];
                a[(1 + n + j, 1 + n + i)] = self.jac_inv[i][j] * self.dt_tilde_dt;
            }
            a[(1 + n + j, 0)] = self.dp_tilde_dt[j];
        }
        a
    }
}

fn eval_all(es: &[Expr], q: &Point) -> Result<Vec<f64>> {
    es.iter().map(|e| Ok(e.eval(q)?)).collect()
}

fn eval_grid(es: &[Vec<Expr>], q: &Point) -> Result<Vec<Vec<f64>>> {
    es.iter().map(|row| eval_all(row, q)).collect()
}

impl CoordChange {
    /// Builds a change from forward maps and their inverses.
    ///
    /// `t_inv` and `x_inv` are written in the variables `t`, `x1..xn` standing
    /// for the new coordinates.
    pub fn new(
        name: impl Into<String>,
        n: usize,
        t_fwd: Expr,
        t_inv: Expr,
        x_fwd: Vec<Expr>,
        x_inv: Vec<Expr>,
    ) -> Result<Self> {
        let name = name.into();
        let chart_err = |message: String| Error::Chart {
            chart: name.clone(),
            message,
        };
        if x_fwd.len() != n || x_inv.len() != n {
            return Err(chart_err(format!(
                "expected {n} spatial maps and {n} inverses, got {} and {}",
                x_fwd.len(),
                x_inv.len()
            )));
        }
        let time_only = |v: Var| v == Var::Time;
        let space_only = |v: Var| matches!(v, Var::Space(i) if i < n);
        if !t_fwd.depends_only_on(time_only) || !t_inv.depends_only_on(time_only) {
            return Err(chart_err("time maps may depend on t only".into()));
        }
        if !x_fwd.iter().chain(&x_inv).all(|e| e.depends_only_on(space_only)) {
            return Err(chart_err("spatial maps may depend on x1..xn only".into()));
        }

        let dt_fwd = t_fwd.diff(Var::Time);
        let dt_inv = t_inv.diff(Var::Time);
        let jacobian = |maps: &[Expr]| -> Vec<Vec<Expr>> {
            maps.iter().map(|m| (0..n).map(|j| m.diff(Var::Space(j))).collect()).collect()
        };
        let jac_fwd = jacobian(&x_fwd);
        let jac_inv = jacobian(&x_inv);

        // ∂x^j/∂x̃^k evaluated at x̃(x)
        let to_old = |v: Var| match v {
            Var::Space(i) => x_fwd.get(i).cloned(),
            _ => None,
        };
        let mut momentum = Vec::with_capacity(n);
        for k in 0..n {
            let mut terms = Vec::with_capacity(n);
            for (j, row) in jac_inv.iter().enumerate() {
                let pulled = compose_with(&row[k], &to_old)?;
                terms.push(pulled.mul(&Expr::momentum(j)));
            }
            momentum.push(dt_fwd.mul(&Expr::sum(terms)));
        }
        let dmom_dt = momentum.iter().map(|m| m.diff(Var::Time)).collect();
        let dmom_dx = momentum
            .iter()
            .map(|m| (0..n).map(|i| m.diff(Var::Space(i))).collect())
            .collect();

        Ok(CoordChange {
            name,
            n,
            t_fwd,
            t_inv,
            x_fwd,
            x_inv,
            dt_fwd,
            dt_inv,
            jac_fwd,
            jac_inv,
            momentum,
            dmom_dt,
            dmom_dx,
        })
    }

    /// Convenience constructor from DSL strings.
    pub fn parse(
        name: impl Into<String>,
        n: usize,
        t_fwd: &str,
        t_inv: &str,
        x_fwd: &[&str],
        x_inv: &[&str],
    ) -> Result<Self> {
        let name = name.into();
        let p = |src: &str| {
            parse(src, n).map_err(|e| Error::Chart {
                chart: name.clone(),
                message: format!("`{src}`: {e}"),
            })
        };
        let xs = x_fwd.iter().map(|s| p(s)).collect::<Result<Vec<_>>>()?;
        let xi = x_inv.iter().map(|s| p(s)).collect::<Result<Vec<_>>>()?;
        CoordChange::new(name.clone(), n, p(t_fwd)?, p(t_inv)?, xs, xi)
    }

    pub fn identity(n: usize) -> Self {
        let xs: Vec<Expr> = (0..n).map(Expr::space).collect();
        CoordChange::new("identity", n, Expr::time(), Expr::time(), xs.clone(), xs)
            .expect("identity change is well formed")
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn t_forward(&self) -> &Expr {
        &self.t_fwd
    }

    pub fn t_inverse(&self) -> &Expr {
        &self.t_inv
    }

    pub fn x_forward(&self) -> &[Expr] {
        &self.x_fwd
    }

    pub fn x_inverse(&self) -> &[Expr] {
        &self.x_inv
    }

    /// dt/dt̃ written in the new time variable.
    pub fn dt_dt_tilde_expr(&self) -> &Expr {
        &self.dt_inv
    }

    /// `∂x^i/∂x̃^j` written in the new spatial variables.
    pub fn jacobian_inverse_exprs(&self) -> &[Vec<Expr>] {
        &self.jac_inv
    }

    /// `p̃_k` as expressions in the old coordinates `(t, x, p)`.
    pub fn momentum_exprs(&self) -> &[Expr] {
        &self.momentum
    }

    /// The reverse change, from the new chart back to the old one.
    pub fn inverse(&self) -> CoordChange {
        CoordChange::new(
            format!("{}^-1", self.name),
            self.n,
            self.t_inv.clone(),
            self.t_fwd.clone(),
            self.x_inv.clone(),
            self.x_fwd.clone(),
        )
        .expect("inverse of a valid change is valid")
    }

    /// `next ∘ self`: first apply `self`, then `next`.
    pub fn then(&self, next: &CoordChange) -> Result<CoordChange> {
        crate::error::check_dim(self.n, next.n)?;
        fn t_of(t: &Expr) -> impl Fn(Var) -> Option<Expr> + '_ {
            move |v| (v == Var::Time).then(|| t.clone())
        }
        let x_of = |xs: &[Expr]| {
            let xs = xs.to_vec();
            move |v: Var| match v {
                Var::Space(i) => xs.get(i).cloned(),
                _ => None,
            }
        };
        let t_fwd = compose_with(&next.t_fwd, &t_of(&self.t_fwd))?;
        let t_inv = compose_with(&self.t_inv, &t_of(&next.t_inv))?;
        let fwd_sub = x_of(&self.x_fwd);
        let inv_sub = x_of(&next.x_inv);
        let x_fwd = next.x_fwd.iter().map(|e| compose_with(e, &fwd_sub)).collect::<std::result::Result<_, _>>()?;
        let x_inv = self.x_inv.iter().map(|e| compose_with(e, &inv_sub)).collect::<std::result::Result<_, _>>()?;
        CoordChange::new(format!("{}*{}", next.name, self.name), self.n, t_fwd, t_inv, x_fwd, x_inv)
    }

    /// Rewrites a scalar function of the old coordinates as a function of the
    /// new ones, `ẽ(t̃, x̃, p̃) = e(t(t̃), x(x̃), p(t̃, x̃, p̃))`.
    pub fn transport_scalar(&self, e: &Expr) -> Result<Expr> {
        let back = self.inverse();
        let lookup = |v: Var| match v {
            Var::Time => Some(back.t_fwd.clone()),
            Var::Space(i) => back.x_fwd.get(i).cloned(),
            Var::Momentum(i) => back.momentum.get(i).cloned(),
        };
        Ok(compose_with(e, &lookup)?)
    }

    fn check_dim(&self, q: &Point) -> Result<()> {
        crate::error::check_dim(self.n, q.dim())
    }

    /// Evaluates every transition factor at `q`, checking regularity and the
    /// consistency of the supplied inverses.
    pub fn transition(&self, q: &Point) -> Result<TransitionData> {
        self.check_dim(q)?;
        let n = self.n;
        let chart_err = |message: String| Error::Chart {
            chart: self.name.clone(),
            message,
        };

        let t_new = self.t_fwd.eval(q)?;
        let x_new = eval_all(&self.x_fwd, q)?;
        let dt_tilde_dt = self.dt_fwd.eval(q)?;
        let jac = eval_grid(&self.jac_fwd, q)?;

        let det = from_rows(&jac).determinant();
        if dt_tilde_dt.abs() <= REGULARITY_EPS || det.abs() <= REGULARITY_EPS || !det.is_finite() {
            return Err(Error::Regularity {
                chart: self.name.clone(),
                point: q.to_flat(),
                what: format!("dt~/dt = {dt_tilde_dt:e}, det(dx~/dx) = {det:e}"),
            });
        }

        let tilde_pos = Point::new(t_new, x_new.clone(), vec![0.0; n]);
        let t_back = self.t_inv.eval(&tilde_pos)?;
        if !close(t_back, q.t, INVERSE_TOL) {
            return Err(chart_err(format!("time inverse does not round-trip: t = {} but t(t~(t)) = {t_back}", q.t)));
        }
        let x_back = eval_all(&self.x_inv, &tilde_pos)?;
        for (i, (a, b)) in x_back.iter().zip(&q.x).enumerate() {
            if !close(*a, *b, INVERSE_TOL) {
                return Err(chart_err(format!("spatial inverse does not round-trip in x{}: {b} vs {a}", i + 1)));
            }
        }

        let dt_dt_tilde = self.dt_inv.eval(&tilde_pos)?;
        let jac_inv = eval_grid(&self.jac_inv, &tilde_pos)?;
        if !close(dt_tilde_dt * dt_dt_tilde, 1.0, INVERSE_TOL) {
            return Err(chart_err(format!(
                "dt~/dt * dt/dt~ = {} is not 1; the time inverse is inconsistent",
                dt_tilde_dt * dt_dt_tilde
            )));
        }
        let defect = identity_defect(&(from_rows(&jac) * from_rows(&jac_inv)));
        if defect.is_nan() || defect > INVERSE_TOL {
            return Err(chart_err(format!(
                "Jacobian of the spatial inverse disagrees with the inverse Jacobian (defect {defect:e})"
            )));
        }

        let p_new = (0..n)
            .map(|i| (0..n).map(|j| jac_inv[j][i] * dt_tilde_dt * q.p[j]).sum())
            .collect();
        Ok(TransitionData {
            source: q.clone(),
            image: Point::new(t_new, x_new, p_new),
            dt_tilde_dt,
            dt_dt_tilde,
            jac,
            jac_inv,
            dp_tilde_dt: eval_all(&self.dmom_dt, q)?,
            dp_tilde_dx: eval_grid(&self.dmom_dx, q)?,
        })
    }

    /// The image `(t̃, x̃, p̃)` of `q`.
    pub fn induced_point(&self, q: &Point) -> Result<Point> {
        Ok(self.transition(q)?.image)
    }

    /// Checks the natural frame and coframe rules at `q`.
    ///
    /// The frame rule gives the Jacobian `A` of the induced change; the coframe
    /// rule gives the Jacobian `B` of the reverse change at the image point,
    /// computed independently from the inverse maps. The natural frame and
    /// coframe stay dual iff `B A = I`; one record is emitted per entry.
    pub fn verify_frame_rules(&self, q: &Point, tol: f64) -> Result<Report> {
        let forward = self.transition(q)?;
        let backward = self.inverse().transition(&forward.image)?;
        let product = backward.jet_jacobian() * forward.jet_jacobian();
        let mut report = Report::new();
        for a in 0..product.nrows() {
            for b in 0..product.ncols() {
                let target = if a == b { 1.0 } else { 0.0 };
                let r = (product[(a, b)] - target).abs();
                report.push(format!("jetspace.frame_rules[{a}][{b}]"), &self.name, q, r, tol);
            }
        }
        Ok(report)
    }
}
