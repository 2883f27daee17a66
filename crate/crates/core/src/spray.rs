//! Temporal and spatial semisprays of momenta.
//!
//! Neither family is a d-tensor: under a change of coordinates both pick up an
//! inhomogeneous term built from the derivatives of the momentum map,
//!
//! ```text
//! 2G̃₁_(k)r = 2G₁_(j)i (dt̃/dt)(∂x^i/∂x̃^r)(∂x^j/∂x̃^k) − (∂x^i/∂x̃^r)(∂p̃_k/∂t) p_i
//! 2G̃₂_(s)k = 2G₂_(j)i (dt̃/dt)(∂x^i/∂x̃^k)(∂x^j/∂x̃^s) − (∂x^i/∂x̃^k)(∂p̃_s/∂x^i)
//! ```

use crate::error::{check_dim, Result};
use crate::expr::{Expr, Point};
use crate::jetspace::{CoordChange, TransitionData};
use crate::metrics::{christoffel_space, christoffel_time, SpaceMetric, TimeMetric};
use crate::report::{max_residual, Report};

/// Components `G₁_(j)i`, stored as `g1[j][i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalSemispray {
    pub g1: Vec<Vec<Expr>>,
}

/// Components `G₂_(j)i`, stored as `g2[j][i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialSemispray {
    pub g2: Vec<Vec<Expr>>,
}

/// A time-dependent semispray of momenta.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumSemispray {
    pub temporal: TemporalSemispray,
    pub spatial: SpatialSemispray,
}

impl TemporalSemispray {
    pub fn dim(&self) -> usize {
        self.g1.len()
    }
}

impl SpatialSemispray {
    pub fn dim(&self) -> usize {
        self.g2.len()
    }
}

impl MomentumSemispray {
    pub fn new(temporal: TemporalSemispray, spatial: SpatialSemispray) -> Result<Self> {
        check_dim(temporal.dim(), spatial.dim())?;
        Ok(MomentumSemispray { temporal, spatial })
    }

    pub fn dim(&self) -> usize {
        self.temporal.dim()
    }

    /// Canonical pair built from both metrics.
    pub fn canonical(h: &TimeMetric, phi: &SpaceMetric) -> Result<Self> {
        MomentumSemispray::new(canonical_temporal(h, phi.dim()), canonical_spatial(phi)?)
    }
}

pub(crate) fn grid(es: &[Vec<Expr>], q: &Point) -> Result<Vec<Vec<f64>>> {
    es.iter().map(|r| r.iter().map(|e| Ok(e.eval(q)?)).collect()).collect()
}

/// `G₁_(j)k = ½ H_{11}^1 p_j p_k`.
pub fn canonical_temporal(h: &TimeMetric, n: usize) -> TemporalSemispray {
    let half_h = Expr::constant(0.5).mul(&christoffel_time(h).h111);
    let mut g1 = vec![vec![Expr::zero(); n]; n];
    for j in 0..n {
        for k in j..n {
            let e = half_h.mul(&Expr::momentum(j)).mul(&Expr::momentum(k));
            g1[k][j] = e.clone();
            g1[j][k] = e;
        }
    }
    TemporalSemispray { g1 }
}

/// `G₂_(j)k = −½ γ^i_jk p_i`.
pub fn canonical_spatial(phi: &SpaceMetric) -> Result<SpatialSemispray> {
    let n = phi.dim();
    let gamma = christoffel_space(phi)?;
    let g2 = (0..n)
        .map(|j| {
            (0..n)
                .map(|k| {
                    let s = Expr::sum((0..n).map(|i| gamma.get(i, j, k).mul(&Expr::momentum(i))));
                    Expr::constant(-0.5).mul(&s)
                })
                .collect()
        })
        .collect();
    Ok(SpatialSemispray { g2 })
}

/// Right-hand side of the temporal law at `q`: the predicted `2G̃₁` at the image.
pub fn temporal_law_rhs(g: &[Vec<f64>], td: &TransitionData) -> Vec<Vec<f64>> {
    let n = td.dim();
    let (a, ji, p) = (td.dt_tilde_dt, &td.jac_inv, &td.source.p);
    let mut out = vec![vec![0.0; n]; n];
    for k in 0..n {
        for r in 0..n {
            let mut v = 0.0;
            for j in 0..n {
                for i in 0..n {
                    v += 2.0 * g[j][i] * a * ji[i][r] * ji[j][k];
                }
            }
            for i in 0..n {
                v -= ji[i][r] * td.dp_tilde_dt[k] * p[i];
            }
            out[k][r] = v;
        }
    }
    out
}

/// Right-hand side of the spatial law at `q`: the predicted `2G̃₂` at the image.
pub fn spatial_law_rhs(g: &[Vec<f64>], td: &TransitionData) -> Vec<Vec<f64>> {
    let n = td.dim();
    let (a, ji) = (td.dt_tilde_dt, &td.jac_inv);
    let mut out = vec![vec![0.0; n]; n];
    for s in 0..n {
        for k in 0..n {
            let mut v = 0.0;
            for j in 0..n {
                for i in 0..n {
                    v += 2.0 * g[j][i] * a * ji[i][k] * ji[j][s];
                }
            }
            for i in 0..n {
                v -= ji[i][k] * td.dp_tilde_dx[s][i];
            }
            out[s][k] = v;
        }
    }
    out
}

type LawRhs = fn(&[Vec<f64>], &TransitionData) -> Vec<Vec<f64>>;

fn verify_law(
    check_id: &str,
    old: &[Vec<Expr>],
    new: &[Vec<Expr>],
    c: &CoordChange,
    points: &[Point],
    tol: f64,
    rhs: LawRhs,
) -> Result<Report> {
    check_dim(c.dim(), old.len())?;
    check_dim(c.dim(), new.len())?;
    let mut report = Report::new();
    for q in points {
        let td = c.transition(q)?;
        let predicted: Vec<f64> = rhs(&grid(old, q)?, &td).into_iter().flatten().collect();
        let actual: Vec<f64> = grid(new, &td.image)?.into_iter().flatten().map(|v| 2.0 * v).collect();
        report.push(check_id, c.name(), q, max_residual(&predicted, &actual), tol);
    }
    Ok(report)
}

pub fn verify_temporal_law(
    old: &TemporalSemispray,
    new: &TemporalSemispray,
    c: &CoordChange,
    points: &[Point],
    tol: f64,
) -> Result<Report> {
    verify_law("spray.temporal", &old.g1, &new.g1, c, points, tol, temporal_law_rhs)
}

pub fn verify_spatial_law(
    old: &SpatialSemispray,
    new: &SpatialSemispray,
    c: &CoordChange,
    points: &[Point],
    tol: f64,
) -> Result<Report> {
    verify_law("spray.spatial", &old.g2, &new.g2, c, points, tol, spatial_law_rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn polar() -> SpaceMetric {
        SpaceMetric::parse(&[vec!["1", "0"], vec!["0", "x1^2"]]).unwrap()
    }

    fn value(e: &Expr, t: f64, x: &[f64], p: &[f64]) -> f64 {
        e.eval(&Point::new(t, x.to_vec(), p.to_vec())).unwrap()
    }

    #[test]
    fn canonical_temporal_examples() {
        let g = canonical_temporal(&TimeMetric::parse("1").unwrap(), 2);
        assert!(g.g1.iter().flatten().all(Expr::is_zero));

        let g = canonical_temporal(&TimeMetric::parse("exp(2*t)").unwrap(), 2);
        let vals: Vec<Vec<f64>> =
            g.g1.iter().map(|r| r.iter().map(|e| value(e, 0.4, &[1.0, 1.0], &[1.0, 2.0])).collect()).collect();
        assert_eq!(vals, vec![vec![0.5, 1.0], vec![1.0, 2.0]]);

        let g = canonical_temporal(&TimeMetric::parse("t^2").unwrap(), 2);
        assert_eq!(value(&g.g1[0][0], 2.0, &[1.0, 1.0], &[2.0, 0.0]), 1.0);
    }

    #[test]
    fn canonical_spatial_examples() {
        let g = canonical_spatial(&SpaceMetric::identity(2)).unwrap();
        assert!(g.g2.iter().flatten().all(Expr::is_zero));

        let g = canonical_spatial(&polar()).unwrap();
        let v = |j: usize, k: usize| value(&g.g2[j][k], 0.0, &[2.0, 0.3], &[3.0, 5.0]);
        assert_eq!(v(1, 1), 3.0);
        assert_eq!(v(0, 1), -1.25);
        assert_eq!(v(1, 0), -1.25);
        assert_eq!(v(0, 0), 0.0);
    }

    #[test]
    fn identity_change_has_zero_residual() {
        let pts = [Point::new(0.8, vec![1.2, 0.9], vec![1.0, -2.0])];
        let h = TimeMetric::parse("exp(2*t) + t").unwrap();
        let g = canonical_temporal(&h, 2);
        let id = CoordChange::identity(2);
        let r = verify_temporal_law(&g, &g, &id, &pts, 1e-9).unwrap();
        assert_eq!(r.max_residual(), 0.0);
        let s = canonical_spatial(&polar()).unwrap();
        assert_eq!(verify_spatial_law(&s, &s, &id, &pts, 1e-9).unwrap().max_residual(), 0.0);
    }

    #[test]
    fn canonical_temporal_is_covariant_under_time_square() {
        let c = CoordChange::parse("t2", 2, "t^2", "t^(1/2)", &["x1", "x2"], &["x1", "x2"]).unwrap();
        let h = TimeMetric::parse("exp(2*t)").unwrap();
        let old = canonical_temporal(&h, 2);
        let new = canonical_temporal(&h.transport(&c).unwrap(), 2);
        let pts = [
            Point::new(0.7, vec![1.0, 1.5], vec![2.0, -1.0]),
            Point::new(1.9, vec![0.6, 0.8], vec![-2.5, 0.3]),
        ];
        let r = verify_temporal_law(&old, &new, &c, &pts, 1e-9).unwrap();
        assert!(r.passed(), "{}", r.max_residual());
    }

    #[test]
    fn unchanged_components_fail_under_nonaffine_time() {
        let c = CoordChange::parse(
            "cubic",
            1,
            "t + t^3",
            "(t/2 + (t^2/4 + 1/27)^(1/2))^(1/3) - ((t^2/4 + 1/27)^(1/2) - t/2)^(1/3)",
            &["x1"],
            &["x1"],
        )
        .unwrap();
        let g = canonical_temporal(&TimeMetric::parse("exp(2*t)").unwrap(), 1);
        let r = verify_temporal_law(&g, &g, &c, &[Point::new(1.0, vec![1.0], vec![2.0])], 1e-9).unwrap();
        assert!(!r.passed());
    }

    #[test]
    fn canonical_spatial_is_covariant() {
        let c = CoordChange::parse("poly", 2, "t", "t", &["x1 + x2^3", "x2"], &["x1 - x2^3", "x2"]).unwrap();
        let phi = polar();
        let old = canonical_spatial(&phi).unwrap();
        let new = canonical_spatial(&phi.transport(&c).unwrap()).unwrap();
        let pts = [
            Point::new(0.7, vec![1.0, 0.5], vec![2.0, -1.0]),
            Point::new(1.9, vec![1.6, 0.8], vec![-2.5, 0.3]),
        ];
        let r = verify_spatial_law(&old, &new, &c, &pts, 1e-9).unwrap();
        assert!(r.passed(), "{}", r.max_residual());
    }

    #[test]
    fn mis_scaled_spatial_semispray_fails() {
        let c = CoordChange::parse("lin", 2, "t", "t", &["2*x1", "2*x2"], &["x1/2", "x2/2"]).unwrap();
        let phi = polar();
        let old = canonical_spatial(&phi).unwrap();
        let wrong = SpatialSemispray {
            g2: old.g2.iter().map(|r| r.iter().map(|e| e.scale(2.0)).collect()).collect(),
        };
        let pts = [Point::new(1.0, vec![1.2, 0.4], vec![1.0, 2.0])];
        assert!(!verify_spatial_law(&old, &wrong, &c, &pts, 1e-9).unwrap().passed());
    }
}
