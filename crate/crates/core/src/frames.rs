//! Adapted basis `{δ/δt, δ/δx^i, ∂/∂p_i}` and cobasis `{dt, dx^i, δp_i}` of a
//! nonlinear connection.
//!
//! Vector and covector fields are component arrays over the natural frame in
//! the ordering `(t, x^1..x^n, p_1..p_n)`. Both matrices store one basis element
//! per column, so the frame is unit lower-triangular and the coframe unit
//! upper-triangular.

use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};
use crate::expr::{Expr, Point};
use crate::jetspace::{CoordChange, TransitionData};
use crate::nlconn::{verify_connection_law, NonlinearConnection};
use crate::report::{residual, Report};

fn x_slot(i: usize) -> usize {
    1 + i
}

fn p_slot(n: usize, i: usize) -> usize {
    1 + n + i
}

fn unit(size: usize) -> Vec<Vec<Expr>> {
    (0..size)
        .map(|r| (0..size).map(|c| if r == c { Expr::one() } else { Expr::zero() }).collect())
        .collect()
}

fn eval_matrix(m: &[Vec<Expr>], q: &Point) -> Result<DMatrix<f64>> {
    let size = m.len();
    let mut out = DMatrix::zeros(size, size);
    for r in 0..size {
        for c in 0..size {
            out[(r, c)] = m[r][c].eval(q)?;
        }
    }
    Ok(out)
}

/// `δ/δt = ∂/∂t − N₁_(j) ∂/∂p_j`, `δ/δx^i = ∂/∂x^i − N₂_(j)i ∂/∂p_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedFrame {
    n: usize,
    m: Vec<Vec<Expr>>,
}

/// `δp_i = dp_i + N₁_(i) dt + N₂_(i)j dx^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedCoframe {
    n: usize,
    m: Vec<Vec<Expr>>,
}

pub fn adapted_frame(conn: &NonlinearConnection) -> AdaptedFrame {
    let n = conn.dim();
    let mut m = unit(2 * n + 1);
    for j in 0..n {
        m[p_slot(n, j)][0] = conn.n1[j].neg();
        for i in 0..n {
            m[p_slot(n, j)][x_slot(i)] = conn.n2[j][i].neg();
        }
    }
    AdaptedFrame { n, m }
}

pub fn adapted_coframe(conn: &NonlinearConnection) -> AdaptedCoframe {
    let n = conn.dim();
    let mut m = unit(2 * n + 1);
    for i in 0..n {
        m[0][p_slot(n, i)] = conn.n1[i].clone();
        for j in 0..n {
            m[x_slot(j)][p_slot(n, i)] = conn.n2[i][j].clone();
        }
    }
    AdaptedCoframe { n, m }
}

impl AdaptedFrame {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Coefficient of the natural vector `natural` in the adapted vector `element`.
    pub fn component(&self, element: usize, natural: usize) -> &Expr {
        &self.m[natural][element]
    }

    /// Columns are the adapted vectors.
    pub fn matrix(&self) -> &[Vec<Expr>] {
        &self.m
    }

    pub fn eval(&self, q: &Point) -> Result<DMatrix<f64>> {
        eval_matrix(&self.m, q)
    }

    pub fn determinant(&self, q: &Point) -> Result<f64> {
        Ok(self.eval(q)?.determinant())
    }

    /// The `t`- and `x`-components of every adapted vector coincide with those of
    /// the natural vector it replaces, so `δ/δt` and `δ/δx^i` project onto
    /// `∂/∂t` and `∂/∂x^i`.
    pub fn projects_to_natural(&self) -> bool {
        let size = 2 * self.n + 1;
        (0..=self.n).all(|r| {
            (0..size).all(|c| {
                let e = &self.m[r][c];
                if r == c {
                    e.is_one()
                } else {
                    e.is_zero()
                }
            })
        })
    }
}

impl AdaptedCoframe {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Coefficient of the natural covector `natural` in the adapted covector `element`.
    pub fn component(&self, element: usize, natural: usize) -> &Expr {
        &self.m[natural][element]
    }

    /// Columns are the adapted covectors.
    pub fn matrix(&self) -> &[Vec<Expr>] {
        &self.m
    }

    pub fn eval(&self, q: &Point) -> Result<DMatrix<f64>> {
        eval_matrix(&self.m, q)
    }
}

/// `⟨covector_a, vector_b⟩` for every pair of adapted elements.
pub fn pairing(f: &AdaptedFrame, c: &AdaptedCoframe, q: &Point) -> Result<DMatrix<f64>> {
    check_dim(f.dim(), c.dim())?;
    Ok(c.eval(q)?.transpose() * f.eval(q)?)
}

/// Records `frames.pairing`: distance of the pairing from the identity.
pub fn verify_duality(conn: &NonlinearConnection, chart: &str, points: &[Point], tol: f64) -> Result<Report> {
    let (f, c) = (adapted_frame(conn), adapted_coframe(conn));
    let mut report = Report::new();
    for q in points {
        let p = pairing(&f, &c, q)?;
        let r = matrix_residual(&p, &DMatrix::identity(p.nrows(), p.ncols()));
        report.push("frames.pairing", chart, q, r, tol);
    }
    Ok(report)
}

fn matrix_residual(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| residual(*x, *y)).fold(0.0, f64::max)
}

/// Block residual and off-block mixing residual of `actual` against `expected`.
fn block_residuals(actual: &DMatrix<f64>, expected: &DMatrix<f64>, n: usize) -> (f64, f64) {
    let block = |i: usize| if i == 0 { 0 } else if i <= n { 1 } else { 2 };
    let (mut on, mut off) = (0.0f64, 0.0f64);
    for r in 0..actual.nrows() {
        for c in 0..actual.ncols() {
            let d = residual(actual[(r, c)], expected[(r, c)]);
            if block(r) == block(c) {
                on = on.max(d);
            } else {
                off = off.max(d);
            }
        }
    }
    (on, off)
}

/// Block-diagonal factors for the adapted frame: `δ/δt = (dt̃/dt) δ/δt̃`,
/// `δ/δx^i = (∂x̃^j/∂x^i) δ/δx̃^j`, `∂/∂p_i = (dt̃/dt)(∂x^i/∂x̃^j) ∂/∂p̃_j`.
pub fn expected_frame_factors(td: &TransitionData) -> DMatrix<f64> {
    let n = td.dim();
    let mut d = DMatrix::zeros(2 * n + 1, 2 * n + 1);
    d[(0, 0)] = td.dt_tilde_dt;
    for j in 0..n {
        for i in 0..n {
            d[(x_slot(j), x_slot(i))] = td.jac[j][i];
            d[(p_slot(n, j), p_slot(n, i))] = td.dt_tilde_dt * td.jac_inv[i][j];
        }
    }
    d
}

/// Block-diagonal factors for the adapted coframe: `dt = (dt/dt̃) dt̃`,
/// `dx^i = (∂x^i/∂x̃^j) dx̃^j`, `δp_i = (dt/dt̃)(∂x̃^j/∂x^i) δp̃_j`.
pub fn expected_coframe_factors(td: &TransitionData) -> DMatrix<f64> {
    let n = td.dim();
    let mut e = DMatrix::zeros(2 * n + 1, 2 * n + 1);
    e[(0, 0)] = td.dt_dt_tilde;
    for j in 0..n {
        for i in 0..n {
            e[(x_slot(j), x_slot(i))] = td.jac_inv[i][j];
            e[(p_slot(n, j), p_slot(n, i))] = td.dt_dt_tilde * td.jac[j][i];
        }
    }
    e
}

fn invert(m: DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    m.try_inverse().ok_or_else(|| Error::Precondition(format!("{what} is singular")))
}

/// Old adapted elements expressed in the new adapted basis, compared with the
/// block-diagonal factors. Records `frames.frame.blocks`, `frames.frame.mixing`,
/// `frames.coframe.blocks` and `frames.coframe.mixing`.
///
/// No check is made that the two connections are related by the connection law.
pub fn adapted_tensoriality(
    old: &NonlinearConnection,
    new: &NonlinearConnection,
    c: &CoordChange,
    points: &[Point],
    tol: f64,
) -> Result<Report> {
    check_dim(c.dim(), old.dim())?;
    check_dim(c.dim(), new.dim())?;
    let n = c.dim();
    let (f_old, f_new) = (adapted_frame(old), adapted_frame(new));
    let (c_old, c_new) = (adapted_coframe(old), adapted_coframe(new));
    let mut report = Report::new();
    for q in points {
        let td = c.transition(q)?;
        let a = td.jet_jacobian();
        let b = invert(a.clone(), "jet Jacobian")?;

        let w = invert(f_new.eval(&td.image)?, "adapted frame")? * &a * f_old.eval(q)?;
        let (on, off) = block_residuals(&w, &expected_frame_factors(&td), n);
        report.push("frames.frame.blocks", c.name(), q, on, tol);
        report.push("frames.frame.mixing", c.name(), q, off, tol);

        let u = invert(c_new.eval(&td.image)?, "adapted coframe")? * b.transpose() * c_old.eval(q)?;
        let (on, off) = block_residuals(&u, &expected_coframe_factors(&td), n);
        report.push("frames.coframe.blocks", c.name(), q, on, tol);
        report.push("frames.coframe.mixing", c.name(), q, off, tol);
    }
    Ok(report)
}

/// As [`adapted_tensoriality`], after requiring that `(old, new)` obey the
/// connection law under `c`; otherwise [`Error::Precondition`].
pub fn verify_adapted_tensoriality(
    old: &NonlinearConnection,
    new: &NonlinearConnection,
    c: &CoordChange,
    points: &[Point],
    tol: f64,
) -> Result<Report> {
    let law = verify_connection_law(old, new, c, points, tol)?;
    if let Some(bad) = law.failures().next() {
        return Err(Error::Precondition(format!(
            "connections do not obey the connection law under `{}`: {} residual {:e} at {:?}",
            c.name(),
            bad.check_id,
            bad.residual,
            bad.point
        )));
    }
    adapted_tensoriality(old, new, c, points, tol)
}

/// Coefficients of a vector field in the adapted basis.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSplit<T> {
    pub h_r: T,
    pub h_m: Vec<T>,
    pub w: Vec<T>,
}

/// Coefficients of a covector field in the adapted cobasis `{dt, dx^i, δp_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovectorSplit<T> {
    pub a: T,
    pub b: Vec<T>,
    pub c: Vec<T>,
}

/// `v = h_R δ/δt + h_M^i δ/δx^i + w_i ∂/∂p_i`.
pub fn decompose(v: &[Expr], conn: &NonlinearConnection) -> Result<VectorSplit<Expr>> {
    let n = conn.dim();
    check_dim(2 * n + 1, v.len())?;
    let h_r = v[0].clone();
    let h_m: Vec<Expr> = v[1..=n].to_vec();
    let w = (0..n)
        .map(|j| {
            let horiz = Expr::sum((0..n).map(|i| h_m[i].mul(&conn.n2[j][i])));
            v[p_slot(n, j)].add(&h_r.mul(&conn.n1[j])).add(&horiz)
        })
        .collect();
    Ok(VectorSplit { h_r, h_m, w })
}

/// Natural components of `h_R δ/δt + h_M^i δ/δx^i + w_i ∂/∂p_i`.
pub fn reconstruct(s: &VectorSplit<Expr>, conn: &NonlinearConnection) -> Vec<Expr> {
    let n = conn.dim();
    let mut v = Vec::with_capacity(2 * n + 1);
    v.push(s.h_r.clone());
    v.extend(s.h_m.iter().cloned());
    for j in 0..n {
        let horiz = Expr::sum((0..n).map(|i| s.h_m[i].mul(&conn.n2[j][i])));
        v.push(s.w[j].sub(&s.h_r.mul(&conn.n1[j])).sub(&horiz));
    }
    v
}

/// `ω = a dt + b_i dx^i + c^i δp_i`.
pub fn decompose_covector(omega: &[Expr], conn: &NonlinearConnection) -> Result<CovectorSplit<Expr>> {
    let n = conn.dim();
    check_dim(2 * n + 1, omega.len())?;
    let c: Vec<Expr> = omega[1 + n..].to_vec();
    let a = omega[0].sub(&Expr::sum((0..n).map(|i| c[i].mul(&conn.n1[i]))));
    let b = (0..n)
        .map(|j| omega[x_slot(j)].sub(&Expr::sum((0..n).map(|i| c[i].mul(&conn.n2[i][j])))))
        .collect();
    Ok(CovectorSplit { a, b, c })
}

/// Natural components of `a dt + b_i dx^i + c^i δp_i`.
pub fn reconstruct_covector(s: &CovectorSplit<Expr>, conn: &NonlinearConnection) -> Vec<Expr> {
    let n = conn.dim();
    let mut omega = Vec::with_capacity(2 * n + 1);
    omega.push(s.a.add(&Expr::sum((0..n).map(|i| s.c[i].mul(&conn.n1[i])))));
    for j in 0..n {
        omega.push(s.b[j].add(&Expr::sum((0..n).map(|i| s.c[i].mul(&conn.n2[i][j])))));
    }
    omega.extend(s.c.iter().cloned());
    omega
}

impl VectorSplit<Expr> {
    pub fn eval(&self, q: &Point) -> Result<VectorSplit<f64>> {
        Ok(VectorSplit {
            h_r: self.h_r.eval(q)?,
            h_m: self.h_m.iter().map(|e| Ok(e.eval(q)?)).collect::<Result<_>>()?,
            w: self.w.iter().map(|e| Ok(e.eval(q)?)).collect::<Result<_>>()?,
        })
    }
}

impl CovectorSplit<Expr> {
    pub fn eval(&self, q: &Point) -> Result<CovectorSplit<f64>> {
        Ok(CovectorSplit {
            a: self.a.eval(q)?,
            b: self.b.iter().map(|e| Ok(e.eval(q)?)).collect::<Result<_>>()?,
            c: self.c.iter().map(|e| Ok(e.eval(q)?)).collect::<Result<_>>()?,
        })
    }
}
