//! Nonlinear connections `N = (N₁_(j)1, N₂_(j)i)`, their transformation law and
//! the correspondence with semisprays of momenta.
//!
//! ```text
//! Ñ₁_(j) = N₁_(k) (∂x^k/∂x̃^j) − (dt/dt̃)(∂p̃_j/∂t)
//! Ñ₂_(j)r = N₂_(k)i (dt̃/dt)(∂x^k/∂x̃^j)(∂x^i/∂x̃^r) − (∂x^i/∂x̃^r)(∂p̃_j/∂x^i)
//! ```

use crate::error::{check_dim, Result};
use crate::expr::{Expr, Point, Var};
use crate::jetspace::{CoordChange, TransitionData};
use crate::metrics::{christoffel_space, christoffel_time, inverse_space, SpaceMetric, TimeMetric};
use crate::report::{max_residual, Report};
use crate::spray::{grid, MomentumSemispray, SpatialSemispray, TemporalSemispray};

/// Temporal components `n1[j] = N₁_(j)1` and spatial components `n2[j][i] = N₂_(j)i`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearConnection {
    pub n1: Vec<Expr>,
    pub n2: Vec<Vec<Expr>>,
}

impl NonlinearConnection {
    pub fn new(n1: Vec<Expr>, n2: Vec<Vec<Expr>>) -> Result<Self> {
        check_dim(n1.len(), n2.len())?;
        for row in &n2 {
            check_dim(n1.len(), row.len())?;
        }
        Ok(NonlinearConnection { n1, n2 })
    }

    pub fn zero(n: usize) -> Self {
        NonlinearConnection { n1: vec![Expr::zero(); n], n2: vec![vec![Expr::zero(); n]; n] }
    }

    pub fn dim(&self) -> usize {
        self.n1.len()
    }

    /// Values at `q`: `(N₁, N₂)`.
    pub fn eval(&self, q: &Point) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let n1 = self.n1.iter().map(|e| Ok(e.eval(q)?)).collect::<Result<_>>()?;
        Ok((n1, grid(&self.n2, q)?))
    }
}

/// `N₁_(i) = H_{11}^1 p_i`, `N₂_(i)j = −γ^k_ij p_k`.
pub fn canonical_connection(h: &TimeMetric, phi: &SpaceMetric) -> Result<NonlinearConnection> {
    let n = phi.dim();
    let h111 = christoffel_time(h).h111;
    let gamma = christoffel_space(phi)?;
    let n1 = (0..n).map(|i| h111.mul(&Expr::momentum(i))).collect();
    let n2 = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| Expr::sum((0..n).map(|k| gamma.get(k, i, j).mul(&Expr::momentum(k)))).neg())
                .collect()
        })
        .collect();
    NonlinearConnection::new(n1, n2)
}

/// `N₁_(r) = φ^{jk} (∂G₁_(j)k/∂p_i) φ_ir`, `N₂ = 2 G₂`.
pub fn connection_from_spray(g: &MomentumSemispray, phi: &SpaceMetric) -> Result<NonlinearConnection> {
    let n = g.dim();
    check_dim(n, phi.dim())?;
    let inv = inverse_space(phi)?;
    let g1 = &g.temporal.g1;
    // c[i] = φ^{jk} ∂G₁_(j)k/∂p_i
    let c: Vec<Expr> = (0..n)
        .map(|i| {
            Expr::sum((0..n).flat_map(|j| {
                let inv = &inv;
                (0..n).map(move |k| inv[j][k].mul(&g1[j][k].diff(Var::Momentum(i))))
            }))
        })
        .collect();
    let n1 = (0..n).map(|r| Expr::sum((0..n).map(|i| c[i].mul(phi.get(i, r))))).collect();
    let n2 = g.spatial.g2.iter().map(|row| row.iter().map(|e| e.scale(2.0)).collect()).collect();
    NonlinearConnection::new(n1, n2)
}

/// `G₁_(i)j = ½ N₁_(i) p_j`, `G₂ = ½ N₂`.
pub fn spray_from_connection(conn: &NonlinearConnection) -> MomentumSemispray {
    let n = conn.dim();
    let g1 = (0..n)
        .map(|i| (0..n).map(|j| conn.n1[i].mul(&Expr::momentum(j)).scale(0.5)).collect())
        .collect();
    let g2 = conn.n2.iter().map(|row| row.iter().map(|e| e.scale(0.5)).collect()).collect();
    MomentumSemispray { temporal: TemporalSemispray { g1 }, spatial: SpatialSemispray { g2 } }
}

/// Predicted `Ñ₁` at the image of `q`.
pub fn temporal_law_rhs(n1: &[f64], td: &TransitionData) -> Vec<f64> {
    let n = td.dim();
    (0..n)
        .map(|j| {
            let v: f64 = (0..n).map(|k| n1[k] * td.jac_inv[k][j]).sum();
            v - td.dt_dt_tilde * td.dp_tilde_dt[j]
        })
        .collect()
}

/// Predicted `Ñ₂` at the image of `q`.
pub fn spatial_law_rhs(n2: &[Vec<f64>], td: &TransitionData) -> Vec<Vec<f64>> {
    let n = td.dim();
    let (a, ji) = (td.dt_tilde_dt, &td.jac_inv);
    let mut out = vec![vec![0.0; n]; n];
    for j in 0..n {
        for r in 0..n {
            let mut v = 0.0;
            for k in 0..n {
                for i in 0..n {
                    v += n2[k][i] * a * ji[k][j] * ji[i][r];
                }
            }
            for i in 0..n {
                v -= ji[i][r] * td.dp_tilde_dx[j][i];
            }
            out[j][r] = v;
        }
    }
    out
}

/// Both lines of the connection law at every point; records `connection.n1` and `connection.n2`.
pub fn verify_connection_law(
    old: &NonlinearConnection,
    new: &NonlinearConnection,
    c: &CoordChange,
    points: &[Point],
    tol: f64,
) -> Result<Report> {
    check_dim(c.dim(), old.dim())?;
    check_dim(c.dim(), new.dim())?;
    let mut report = Report::new();
    for q in points {
        let td = c.transition(q)?;
        let (n1, n2) = old.eval(q)?;
        let (m1, m2) = new.eval(&td.image)?;
        report.push("connection.n1", c.name(), q, max_residual(&temporal_law_rhs(&n1, &td), &m1), tol);
        let predicted: Vec<f64> = spatial_law_rhs(&n2, &td).into_iter().flatten().collect();
        let actual: Vec<f64> = m2.into_iter().flatten().collect();
        report.push("connection.n2", c.name(), q, max_residual(&predicted, &actual), tol);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::spray::canonical_temporal;

    fn polar() -> SpaceMetric {
        SpaceMetric::parse(&[vec!["1", "0"], vec!["0", "x1^2"]]).unwrap()
    }

    fn exp_metric() -> TimeMetric {
        TimeMetric::parse("exp(2*t)").unwrap()
    }

    #[test]
    fn canonical_examples() {
        let flat = canonical_connection(&TimeMetric::parse("1").unwrap(), &SpaceMetric::identity(3)).unwrap();
        assert!(flat.n1.iter().chain(flat.n2.iter().flatten()).all(Expr::is_zero));

        let q = Point::new(0.3, vec![2.0, 0.1], vec![3.0, 5.0]);
        let conn = canonical_connection(&exp_metric(), &polar()).unwrap();
        let (n1, n2) = conn.eval(&q).unwrap();
        assert_eq!(n1, vec![3.0, 5.0]);
        assert_eq!(n2[0][1], -2.5);
        assert_eq!(n2[1][0], -2.5);
        assert_eq!(n2[1][1], 6.0);
    }

    #[test]
    fn canonical_spray_yields_canonical_connection() {
        let h = TimeMetric::parse("t^2 + 1").unwrap();
        let phi = SpaceMetric::parse(&[vec!["1 + x2^2", "x1"], vec!["x1", "2"]]).unwrap();
        let from_spray = connection_from_spray(&MomentumSemispray::canonical(&h, &phi).unwrap(), &phi).unwrap();
        let direct = canonical_connection(&h, &phi).unwrap();
        for q in [
            Point::new(0.5, vec![0.3, 0.7], vec![1.0, -2.0]),
            Point::new(1.7, vec![-0.4, 1.1], vec![0.5, 2.5]),
        ] {
            let (a1, a2) = from_spray.eval(&q).unwrap();
            let (b1, b2) = direct.eval(&q).unwrap();
            assert!(max_residual(&a1, &b1) < 1e-12);
            assert!(max_residual(&a2.concat(), &b2.concat()) < 1e-12);
        }
    }

    #[test]
    fn one_dimensional_hand_contraction() {
        let h = TimeMetric::parse("t^3").unwrap();
        let g = MomentumSemispray::new(
            canonical_temporal(&h, 1),
            SpatialSemispray { g2: vec![vec![Expr::zero()]] },
        )
        .unwrap();
        let conn = connection_from_spray(&g, &SpaceMetric::identity(1)).unwrap();
        let q = Point::new(2.0, vec![0.0], vec![5.0]);
        // H = h'/(2h) = 3/(2t)
        assert!((conn.n1[0].eval(&q).unwrap() - 0.75 * 5.0).abs() < 1e-15);
        assert!(conn.n2[0][0].is_zero());
    }

    #[test]
    fn spray_from_canonical_connection_is_canonical_spray() {
        let h = exp_metric();
        let phi = polar();
        let back = spray_from_connection(&canonical_connection(&h, &phi).unwrap());
        let canon = MomentumSemispray::canonical(&h, &phi).unwrap();
        let q = Point::new(0.9, vec![1.3, 0.2], vec![-1.0, 4.0]);
        let a = grid(&back.temporal.g1, &q).unwrap().concat();
        let b = grid(&canon.temporal.g1, &q).unwrap().concat();
        assert!(max_residual(&a, &b) < 1e-15);
        let a = grid(&back.spatial.g2, &q).unwrap().concat();
        let b = grid(&canon.spatial.g2, &q).unwrap().concat();
        assert!(max_residual(&a, &b) < 1e-15);
    }

    #[test]
    fn zero_connection_gives_zero_spray() {
        let g = spray_from_connection(&NonlinearConnection::zero(2));
        assert!(g.temporal.g1.iter().chain(g.spatial.g2.iter()).flatten().all(Expr::is_zero));
    }

    // For N₁_j = A_j^m p_m the temporal round trip returns ½(A p + φ Aᵀ φ⁻¹ p),
    // which differs from A p whenever A φ is not symmetric.
    #[test]
    fn temporal_round_trip_of_linear_connection() {
        let phi = SpaceMetric::identity(2);
        let a = [[1.0, 2.0], [0.0, 1.0]];
        let n1 = (0..2)
            .map(|j| Expr::sum((0..2).map(|m| Expr::momentum(m).scale(a[j][m]))))
            .collect();
        let conn = NonlinearConnection::new(n1, vec![vec![Expr::zero(); 2]; 2]).unwrap();
        let back = connection_from_spray(&spray_from_connection(&conn), &phi).unwrap();
        let q = Point::new(1.0, vec![1.0, 1.0], vec![1.0, 1.0]);
        let got: Vec<f64> = back.n1.iter().map(|e| e.eval(&q).unwrap()).collect();
        // A p = (3, 1), Aᵀ p = (1, 3)
        assert_eq!(got, vec![2.0, 2.0]);
    }

    #[test]
    fn identity_change_has_zero_residual() {
        let conn = canonical_connection(&exp_metric(), &polar()).unwrap();
        let pts = [Point::new(0.4, vec![1.5, 0.2], vec![2.0, -1.0])];
        let r = verify_connection_law(&conn, &conn, &CoordChange::identity(2), &pts, 1e-9).unwrap();
        assert_eq!(r.max_residual(), 0.0);
        assert_eq!(r.records.len(), 2);
    }

    #[test]
    fn canonical_connection_is_covariant() {
        let c = CoordChange::parse(
            "mixed",
            2,
            "exp(t)",
            "log(t)",
            &["x1 * exp(x2)", "x2"],
            &["x1 * exp(-x2)", "x2"],
        )
        .unwrap();
        let (h, phi) = (exp_metric(), polar());
        let old = canonical_connection(&h, &phi).unwrap();
        let new = canonical_connection(&h.transport(&c).unwrap(), &phi.transport(&c).unwrap()).unwrap();
        let pts = [
            Point::new(0.7, vec![1.0, 0.5], vec![2.0, -1.0]),
            Point::new(1.6, vec![1.9, -0.8], vec![-2.5, 0.3]),
        ];
        let r = verify_connection_law(&old, &new, &c, &pts, 1e-9).unwrap();
        assert!(r.passed(), "{}", r.max_residual());
    }

    #[test]
    fn unchanged_connection_fails_under_cubic_time() {
        let c = CoordChange::parse(
            "cubic",
            1,
            "t + t^3",
            "(t/2 + (t^2/4 + 1/27)^(1/2))^(1/3) - ((t^2/4 + 1/27)^(1/2) - t/2)^(1/3)",
            &["x1"],
            &["x1"],
        )
        .unwrap();
        let n1 = vec![parse("p1", 1).unwrap()];
        let conn = NonlinearConnection::new(n1, vec![vec![Expr::zero()]]).unwrap();
        let r = verify_connection_law(&conn, &conn, &c, &[Point::new(1.0, vec![1.0], vec![2.0])], 1e-9).unwrap();
        assert!(!r.passed());
    }
}
