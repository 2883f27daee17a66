//! Distinguished tensors.
//!
//! A d-tensor carries one [`IndexKind`] per slot. Spatial and momentum slots
//! are array axes of length `n`; time slots only contribute a scalar factor.
//! Components in a new chart are obtained from the old ones by contracting
//! each axis with its [`Factor`]:
//!
//! | kind        | factor                       |
//! |-------------|------------------------------|
//! | `TimeUp`    | dt̃/dt                        |
//! | `TimeDown`  | dt/dt̃                        |
//! | `SpaceUp`   | ∂x̃^i/∂x^j                    |
//! | `SpaceDown` | ∂x^j/∂x̃^i                    |
//! | `MomUp`     | (∂x̃^i/∂x^j)(dt/dt̃)           |
//! | `MomDown`   | (∂x^j/∂x̃^i)(dt̃/dt)           |

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::expr::{Expr, Point, Var};
use crate::jetspace::{CoordChange, TransitionData};
use crate::metrics::{inverse_space, inverse_time, SpaceMetric, TimeMetric};
use crate::report::{max_residual, Report};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IndexKind {
    TimeUp,
    TimeDown,
    SpaceUp,
    SpaceDown,
    /// Contravariant double index `(i)/(1)`.
    MomUp,
    /// Covariant double index `(1)/(i)`.
    MomDown,
}

impl IndexKind {
    /// Whether the slot is an array axis (time slots have range 1).
    pub fn has_axis(self) -> bool {
        !matches!(self, IndexKind::TimeUp | IndexKind::TimeDown)
    }
}

/// Transformation factor of one slot, new components in terms of old.
#[derive(Debug, Clone, PartialEq)]
pub enum Factor {
    Scalar(f64),
    /// `m[i][j]`: coefficient of old index `j` in new index `i`.
    Matrix(Vec<Vec<f64>>),
}

pub fn transform_factor(kind: IndexKind, td: &TransitionData) -> Factor {
    let n = td.dim();
    let build = |f: &dyn Fn(usize, usize) -> f64| (0..n).map(|i| (0..n).map(|j| f(i, j)).collect()).collect();
    match kind {
        IndexKind::TimeUp => Factor::Scalar(td.dt_tilde_dt),
        IndexKind::TimeDown => Factor::Scalar(td.dt_dt_tilde),
        IndexKind::SpaceUp => Factor::Matrix(td.jac.clone()),
        IndexKind::SpaceDown => Factor::Matrix(build(&|i, j| td.jac_inv[j][i])),
        IndexKind::MomUp => Factor::Matrix(build(&|i, j| td.jac[i][j] * td.dt_dt_tilde)),
        IndexKind::MomDown => Factor::Matrix(build(&|i, j| td.jac_inv[j][i] * td.dt_tilde_dt)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DTensor {
    n: usize,
    label: String,
    signature: Vec<IndexKind>,
    comps: Vec<Expr>,
}

/// All multi-indices of `rank` axes of length `n`, in row-major order.
pub fn multi_indices(n: usize, rank: usize) -> Vec<Vec<usize>> {
    let total = n.pow(rank as u32);
    (0..total)
        .map(|mut flat| {
            let mut idx = vec![0; rank];
            for slot in idx.iter_mut().rev() {
                *slot = flat % n;
                flat /= n;
            }
            idx
        })
        .collect()
}

impl DTensor {
    pub fn new(n: usize, signature: Vec<IndexKind>, comps: Vec<Expr>) -> Result<Self> {
        let rank = signature.iter().filter(|k| k.has_axis()).count();
        check_dim(n.pow(rank as u32), comps.len())?;
        Ok(DTensor {
            n,
            label: "tensor".into(),
            signature,
            comps,
        })
    }

    /// Builds components from a function of the multi-index.
    pub fn from_fn(n: usize, signature: Vec<IndexKind>, f: impl Fn(&[usize]) -> Expr) -> Self {
        let rank = signature.iter().filter(|k| k.has_axis()).count();
        let comps = multi_indices(n, rank).iter().map(|idx| f(idx)).collect();
        DTensor {
            n,
            label: "tensor".into(),
            signature,
            comps,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn signature(&self) -> &[IndexKind] {
        &self.signature
    }

    /// Number of array axes.
    pub fn rank(&self) -> usize {
        self.signature.iter().filter(|k| k.has_axis()).count()
    }

    pub fn comps(&self) -> &[Expr] {
        &self.comps
    }

    fn offset(&self, idx: &[usize]) -> usize {
        assert_eq!(idx.len(), self.rank(), "multi-index length");
        idx.iter().fold(0, |acc, &i| {
            assert!(i < self.n, "index out of range");
            acc * self.n + i
        })
    }

    pub fn get(&self, idx: &[usize]) -> &Expr {
        &self.comps[self.offset(idx)]
    }

    /// Copy with one component replaced.
    pub fn with_component(&self, idx: &[usize], e: Expr) -> DTensor {
        let mut out = self.clone();
        let k = self.offset(idx);
        out.comps[k] = e;
        out
    }

    pub fn eval(&self, q: &Point) -> Result<Vec<f64>> {
        check_dim(self.n, q.dim())?;
        self.comps.iter().map(|e| Ok(e.eval(q)?)).collect()
    }
}

/// Contracts numeric components (row-major, `rank` axes of length `n`) with one
/// factor per signature slot.
pub fn apply_factors(values: &[f64], n: usize, signature: &[IndexKind], td: &TransitionData) -> Vec<f64> {
    let rank = signature.iter().filter(|k| k.has_axis()).count();
    let mut out = values.to_vec();
    let mut axis = 0;
    for &kind in signature {
        match transform_factor(kind, td) {
            Factor::Scalar(s) => out.iter_mut().for_each(|v| *v *= s),
            Factor::Matrix(m) => {
                let stride = n.pow((rank - 1 - axis) as u32);
                let mut next = vec![0.0; out.len()];
                for (flat, slot) in next.iter_mut().enumerate() {
                    let i = (flat / stride) % n;
                    let base = flat - i * stride;
                    *slot = (0..n).map(|j| m[i][j] * out[base + j * stride]).sum();
                }
                out = next;
                axis += 1;
            }
        }
    }
    out
}

/// Components of `t` in the chart reached by `c`, at the image of `q`.
pub fn push_forward(t: &DTensor, c: &CoordChange, q: &Point) -> Result<Vec<f64>> {
    check_dim(t.n, c.dim())?;
    let td = c.transition(q)?;
    Ok(apply_factors(&t.eval(q)?, t.n, &t.signature, &td))
}

/// Compares `push_forward(old)` with `new` evaluated at the image point.
pub fn verify_dtensor(old: &DTensor, new: &DTensor, c: &CoordChange, points: &[Point], tol: f64) -> Result<Report> {
    if old.signature != new.signature {
        return Err(Error::SignatureMismatch {
            left: old.signature.clone(),
            right: new.signature.clone(),
        });
    }
    check_dim(old.n, new.n)?;
    let mut report = Report::new();
    for q in points {
        let td = c.transition(q)?;
        let pushed = apply_factors(&old.eval(q)?, old.n, &old.signature, &td);
        let direct = new.eval(&td.image)?;
        report.push(format!("dtensor.{}", old.label), c.name(), q, max_residual(&pushed, &direct), tol);
    }
    Ok(report)
}

/// A Hamiltonian function `H(t, x, p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    n: usize,
    h: Expr,
}

impl Hamiltonian {
    pub fn new(n: usize, h: Expr) -> Result<Self> {
        if let Some(v) = h.free_vars().into_iter().find(|v| !v.fits(n)) {
            return Err(Error::Metric(format!("Hamiltonian uses {v}, which does not exist in dimension {n}")));
        }
        Ok(Hamiltonian { n, h })
    }

    /// `H = h^{11} φ^{ij} p_i p_j`.
    pub fn from_metrics(h: &TimeMetric, phi: &SpaceMetric) -> Result<Self> {
        let n = phi.dim();
        let inv = inverse_space(phi)?;
        let mut terms = Vec::with_capacity(n * n);
        for (i, row) in inv.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                terms.push(e.mul(&Expr::momentum(i)).mul(&Expr::momentum(j)));
            }
        }
        Hamiltonian::new(n, inverse_time(h).mul(&Expr::sum(terms)))
    }

    pub fn expr(&self) -> &Expr {
        &self.h
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// The same function written in the chart reached by `c`.
    pub fn transport(&self, c: &CoordChange) -> Result<Hamiltonian> {
        Hamiltonian::new(self.n, c.transport_scalar(&self.h)?)
    }
}

/// `G^{(i)(j)} = ½ ∂²H/∂p_i∂p_j`.
pub fn vertical_metrical(h: &Hamiltonian) -> DTensor {
    let n = h.n;
    let first: Vec<Expr> = (0..n).map(|i| h.h.diff(Var::Momentum(i))).collect();
    let mut comps = vec![Expr::zero(); n * n];
    for i in 0..n {
        for j in i..n {
            let e = Expr::constant(0.5).mul(&first[i].diff(Var::Momentum(j)));
            comps[j * n + i] = e.clone();
            comps[i * n + j] = e;
        }
    }
    DTensor::new(n, vec![IndexKind::MomUp, IndexKind::MomUp], comps)
        .expect("n^2 components")
        .with_label("vertical_metrical")
}

/// `C_{(i)}^{(1)} = p_i`.
pub fn liouville(n: usize) -> DTensor {
    DTensor::from_fn(n, vec![IndexKind::MomDown], |idx| Expr::momentum(idx[0])).with_label("liouville")
}

/// `L_{(j)11}^{(1)} = h_11 p_j`.
pub fn momentum_liouville(n: usize, h: &TimeMetric) -> DTensor {
    let sig = vec![IndexKind::MomDown, IndexKind::TimeDown, IndexKind::TimeDown];
    DTensor::from_fn(n, sig, |idx| h.h11().mul(&Expr::momentum(idx[0]))).with_label("momentum_liouville")
}

/// `J_{(1)1j}^{(i)} = h_11 δ^i_j`.
pub fn h_normalization(n: usize, h: &TimeMetric) -> DTensor {
    let sig = vec![IndexKind::MomUp, IndexKind::TimeDown, IndexKind::SpaceDown];
    DTensor::from_fn(n, sig, |idx| if idx[0] == idx[1] { h.h11().clone() } else { Expr::zero() })
        .with_label("h_normalization")
}
