//! The semi-Riemannian pair `(h_11(t), φ_ij(x))`.
//!
//! Only invertibility is required, never positivity. Inverses are closed-form
//! (adjugate over determinant) so they stay exact expressions; this limits the
//! spatial dimension to [`MAX_DIM`].

use crate::error::{check_dim, Error, Result};
use crate::expr::{compose_with, parse, Expr, Point, Var};
use crate::jetspace::CoordChange;
use crate::linalg::from_rows;
use crate::MAX_DIM;

/// Metrics must satisfy `|h| > INVERTIBILITY_EPS`, `|det φ| > INVERTIBILITY_EPS`.
pub const INVERTIBILITY_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TimeMetric {
    h11: Expr,
}

impl TimeMetric {
    pub fn new(h11: Expr) -> Result<Self> {
        if !h11.depends_only_on(|v| v == Var::Time) {
            return Err(Error::Metric(format!("time metric `{h11}` must depend on t only")));
        }
        Ok(TimeMetric { h11 })
    }

    pub fn parse(src: &str) -> Result<Self> {
        let h = parse(src, 0).map_err(|e| Error::Metric(format!("time metric `{src}`: {e}")))?;
        TimeMetric::new(h)
    }

    pub fn h11(&self) -> &Expr {
        &self.h11
    }

    pub fn check_at(&self, q: &Point) -> Result<()> {
        let h = self.h11.eval(q)?;
        if h.abs() <= INVERTIBILITY_EPS || !h.is_finite() {
            return Err(Error::Metric(format!("h11 = {h:e} is not invertible at t = {}", q.t)));
        }
        Ok(())
    }

    /// The same metric in the chart reached by `c`: `h̃ = h (dt/dt̃)^2`.
    pub fn transport(&self, c: &CoordChange) -> Result<TimeMetric> {
        let t_inv = c.t_inverse().clone();
        let pulled = compose_with(&self.h11, &|v| (v == Var::Time).then(|| t_inv.clone()))?;
        TimeMetric::new(pulled.mul(&c.dt_dt_tilde_expr().powi(2)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceMetric {
    n: usize,
    phi: Vec<Vec<Expr>>,
}

impl SpaceMetric {
    /// Accepts a full square matrix whose mirrored entries are identical trees.
    /// The lower triangle is then replaced by shared copies of the upper one.
    pub fn new(rows: Vec<Vec<Expr>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Metric("space metric must be a square matrix".into()));
        }
        let in_space = |v: Var| matches!(v, Var::Space(i) if i < n);
        for i in 0..n {
            for j in 0..n {
                if !rows[i][j].depends_only_on(in_space) {
                    return Err(Error::Metric(format!("phi[{i}][{j}] must depend on x1..x{n} only")));
                }
                if j > i && rows[i][j] != rows[j][i] {
                    return Err(Error::Metric(format!("phi is not symmetric at ({}, {})", i + 1, j + 1)));
                }
            }
        }
        Ok(SpaceMetric::from_upper(n, |i, j| rows[i][j].clone()))
    }

    fn from_upper(n: usize, entry: impl Fn(usize, usize) -> Expr) -> Self {
        let mut phi = vec![vec![Expr::zero(); n]; n];
        for i in 0..n {
            for j in i..n {
                let e = entry(i, j);
                phi[j][i] = e.clone();
                phi[i][j] = e;
            }
        }
        SpaceMetric { n, phi }
    }

    pub fn parse(rows: &[Vec<&str>]) -> Result<Self> {
        let n = rows.len();
        let parsed = rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|s| parse(s, n).map_err(|e| Error::Metric(format!("space metric `{s}`: {e}"))))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        SpaceMetric::new(parsed)
    }

    pub fn identity(n: usize) -> Self {
        SpaceMetric::from_upper(n, |i, j| if i == j { Expr::one() } else { Expr::zero() })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[Vec<Expr>] {
        &self.phi
    }

    pub fn get(&self, i: usize, j: usize) -> &Expr {
        &self.phi[i][j]
    }

    pub fn eval(&self, q: &Point) -> Result<Vec<Vec<f64>>> {
        self.phi
            .iter()
            .map(|r| r.iter().map(|e| Ok(e.eval(q)?)).collect())
            .collect()
    }

    pub fn check_at(&self, q: &Point) -> Result<()> {
        check_dim(self.n, q.dim())?;
        let det = from_rows(&self.eval(q)?).determinant();
        if det.abs() <= INVERTIBILITY_EPS || !det.is_finite() {
            return Err(Error::Metric(format!("det(phi) = {det:e} is not invertible at x = {:?}", q.x)));
        }
        Ok(())
    }

    /// The same metric in the chart reached by `c`:
    /// `φ̃_ij = (∂x^k/∂x̃^i)(∂x^l/∂x̃^j) φ_kl(x(x̃))`.
    pub fn transport(&self, c: &CoordChange) -> Result<SpaceMetric> {
        check_dim(self.n, c.dim())?;
        let x_inv = c.x_inverse().to_vec();
        let lookup = |v: Var| match v {
            Var::Space(i) => x_inv.get(i).cloned(),
            _ => None,
        };
        let pulled = self
            .phi
            .iter()
            .map(|r| r.iter().map(|e| compose_with(e, &lookup)).collect::<std::result::Result<Vec<_>, _>>())
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let jac = c.jacobian_inverse_exprs();
        let n = self.n;
        Ok(SpaceMetric::from_upper(n, |i, j| {
            let mut terms = Vec::with_capacity(n * n);
            for k in 0..n {
                for l in 0..n {
                    terms.push(jac[k][i].mul(&jac[l][j]).mul(&pulled[k][l]));
                }
            }
            Expr::sum(terms)
        }))
    }
}

/// `h^{11} = 1 / h_11`.
pub fn inverse_time(h: &TimeMetric) -> Expr {
    h.h11.recip()
}

fn check_max_dim(n: usize) -> Result<()> {
    if n > MAX_DIM {
        Err(Error::Dimension { n, max: MAX_DIM })
    } else {
        Ok(())
    }
}

fn minor(m: &[Vec<Expr>], row: usize, col: usize) -> Vec<Vec<Expr>> {
    m.iter()
        .enumerate()
        .filter(|(i, _)| *i != row)
        .map(|(_, r)| r.iter().enumerate().filter(|(j, _)| *j != col).map(|(_, e)| e.clone()).collect())
        .collect()
}

/// Laplace expansion along the first row.
fn determinant(m: &[Vec<Expr>]) -> Expr {
    match m.len() {
        0 => Expr::one(),
        1 => m[0][0].clone(),
        2 => m[0][0].mul(&m[1][1]).sub(&m[0][1].mul(&m[1][0])),
        n => {
            let mut acc = Expr::zero();
            for j in 0..n {
                if m[0][j].is_zero() {
                    continue;
                }
                let term = m[0][j].mul(&determinant(&minor(m, 0, j)));
                acc = if j % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
            }
            acc
        }
    }
}

/// `φ^{ij}` via the adjugate. Entries evaluate to a domain error where `det φ = 0`.
pub fn inverse_space(phi: &SpaceMetric) -> Result<Vec<Vec<Expr>>> {
    let n = phi.n;
    check_max_dim(n)?;
    let inv_det = determinant(&phi.phi).recip();
    let mut inv = vec![vec![Expr::zero(); n]; n];
    for i in 0..n {
        for j in i..n {
            // cofactor C_ji; phi is symmetric so the adjugate is too
            let cof = determinant(&minor(&phi.phi, j, i));
            let cof = if (i + j) % 2 == 0 { cof } else { cof.neg() };
            let e = cof.mul(&inv_det);
            inv[j][i] = e.clone();
            inv[i][j] = e;
        }
    }
    Ok(inv)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChristoffelTime {
    /// `H_{11}^1 = (h^{11}/2) dh_11/dt`
    pub h111: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChristoffelSpace {
    /// `gamma[i][j][k] = γ^i_jk`
    pub gamma: Vec<Vec<Vec<Expr>>>,
}

impl ChristoffelSpace {
    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> &Expr {
        &self.gamma[i][j][k]
    }
}

pub fn christoffel_time(h: &TimeMetric) -> ChristoffelTime {
    let dh = h.h11.diff(Var::Time);
    ChristoffelTime {
        h111: Expr::constant(0.5).mul(&inverse_time(h)).mul(&dh),
    }
}

/// Levi-Civita symbols `γ^i_jk = ½ φ^{il}(∂_k φ_lj + ∂_j φ_lk − ∂_l φ_jk)`.
pub fn christoffel_space(phi: &SpaceMetric) -> Result<ChristoffelSpace> {
    let n = phi.n;
    let inv = inverse_space(phi)?;
    // d[a][b][c] = ∂φ_ab/∂x^c
    let d: Vec<Vec<Vec<Expr>>> = phi
        .phi
        .iter()
        .map(|r| r.iter().map(|e| (0..n).map(|c| e.diff(Var::Space(c))).collect()).collect())
        .collect();
    let mut gamma = vec![vec![vec![Expr::zero(); n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            for k in j..n {
                let terms = (0..n).map(|l| {
                    let bracket = d[l][j][k].add(&d[l][k][j]).sub(&d[j][k][l]);
                    inv[i][l].mul(&bracket)
                });
                let g = Expr::constant(0.5).mul(&Expr::sum(terms));
                gamma[i][k][j] = g.clone();
                gamma[i][j][k] = g;
            }
        }
    }
    Ok(ChristoffelSpace { gamma })
}

/// Worst entry of `|φ^{ik} φ_kj − δ^i_j|` at `q`.
pub fn inverse_defect(phi: &SpaceMetric, inv: &[Vec<Expr>], q: &Point) -> Result<f64> {
    let a = from_rows(&phi.eval(q)?);
    let b = from_rows(
        &inv.iter()
            .map(|r| r.iter().map(|e| Ok(e.eval(q)?)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?,
    );
    Ok(crate::linalg::identity_defect(&(b * a)))
}

/// Worst entry of `|∂_k φ_ij − γ^l_ki φ_lj − γ^l_kj φ_il|` at `q`.
pub fn compatibility_defect(phi: &SpaceMetric, gamma: &ChristoffelSpace, q: &Point) -> Result<f64> {
    let n = phi.n;
    check_dim(n, gamma.dim())?;
    let g = phi.eval(q)?;
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut v = phi.phi[i][j].diff(Var::Space(k)).eval(q)?;
                for l in 0..n {
                    v -= gamma.gamma[l][k][i].eval(q)? * g[l][j];
                    v -= gamma.gamma[l][k][j].eval(q)? * g[i][l];
                }
                worst = worst.max(v.abs());
            }
        }
    }
    Ok(worst)
}
