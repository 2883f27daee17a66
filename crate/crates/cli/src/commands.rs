use std::fmt::Write as _;
use std::str::FromStr;

use jetham_core::dtensor::{
    h_normalization, liouville, momentum_liouville, verify_dtensor, vertical_metrical, DTensor, Hamiltonian,
};
use jetham_core::frames::{adapted_coframe, adapted_frame, adapted_tensoriality, pairing, verify_duality};
use jetham_core::metrics::{
    christoffel_space, christoffel_time, compatibility_defect, inverse_defect, inverse_space, SpaceMetric,
    TimeMetric,
};
use jetham_core::nlconn::{canonical_connection, connection_from_spray, verify_connection_law, NonlinearConnection};
use jetham_core::report::max_residual;
use jetham_core::spray::{verify_spatial_law, verify_temporal_law, MomentumSemispray};
use jetham_core::{CoordChange, Expr, Point, Report};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::problem::Problem;

/// Pass threshold for the frame/coframe pairing.
pub const PAIRING_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Suite {
    Dtensor,
    Spray,
    Connection,
    Frames,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Dtensor, Suite::Spray, Suite::Connection, Suite::Frames];

    /// Parses a list such as `spray,frames` or `all`.
    pub fn parse_list<S: AsRef<str>>(names: &[S]) -> Result<Vec<Suite>> {
        let mut out = Vec::new();
        for name in names {
            match name.as_ref().trim() {
                "all" => out.extend(Suite::ALL),
                "dtensor" => out.push(Suite::Dtensor),
                "spray" => out.push(Suite::Spray),
                "connection" => out.push(Suite::Connection),
                "frames" => out.push(Suite::Frames),
                other => {
                    return Err(CliError::Config(format!(
                        "unknown suite `{other}`; expected dtensor, spray, connection, frames or all"
                    )))
                }
            }
        }
        out.sort();
        out.dedup();
        if out.is_empty() {
            out.extend(Suite::ALL);
        }
        Ok(out)
    }
}

/// A connection component, 0-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Component {
    N1(usize),
    N2(usize, usize),
}

/// Adds `delta` to one component of the connection built in every target chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    pub component: Component,
    pub delta: f64,
}

impl FromStr for Perturbation {
    type Err = CliError;

    /// `n1.J=DELTA` or `n2.J.I=DELTA`, indices 1-based.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || CliError::Config(format!("perturbation `{s}` is not of the form n1.J=D or n2.J.I=D"));
        let (target, delta) = s.split_once('=').ok_or_else(bad)?;
        let delta: f64 = delta.trim().parse().map_err(|_| bad())?;
        let parts: Vec<&str> = target.trim().split('.').collect();
        let index = |s: &str| s.parse::<usize>().ok().filter(|&k| k >= 1).map(|k| k - 1).ok_or_else(bad);
        let component = match parts.as_slice() {
            ["n1", j] => Component::N1(index(j)?),
            ["n2", j, i] => Component::N2(index(j)?, index(i)?),
            _ => return Err(bad()),
        };
        Ok(Perturbation { component, delta })
    }
}

impl Perturbation {
    pub fn apply(&self, conn: &NonlinearConnection) -> Result<NonlinearConnection> {
        let n = conn.dim();
        let mut out = conn.clone();
        let d = Expr::constant(self.delta);
        match self.component {
            Component::N1(j) if j < n => out.n1[j] = out.n1[j].add(&d),
            Component::N2(j, i) if j < n && i < n => out.n2[j][i] = out.n2[j][i].add(&d),
            _ => return Err(CliError::Config(format!("perturbation index out of range for n = {n}"))),
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Default)]
pub struct VerifyOptions {
    pub suites: Vec<Suite>,
    pub perturb: Option<Perturbation>,
}

/// Every object the suites compare, in one chart.
struct Objects {
    dtensors: Vec<DTensor>,
    sprays: MomentumSemispray,
    connection: NonlinearConnection,
}

impl Objects {
    fn build(h: &TimeMetric, phi: &SpaceMetric, ham: &Hamiltonian) -> Result<Self> {
        let n = phi.dim();
        Ok(Objects {
            dtensors: vec![vertical_metrical(ham), liouville(n), momentum_liouville(n, h), h_normalization(n, h)],
            sprays: MomentumSemispray::canonical(h, phi)?,
            connection: canonical_connection(h, phi)?,
        })
    }

    fn transported(p: &Problem, c: &CoordChange, perturb: Option<&Perturbation>) -> Result<Self> {
        let mut o = Objects::build(
            &p.time_metric.transport(c)?,
            &p.space_metric.transport(c)?,
            &p.hamiltonian.transport(c)?,
        )?;
        if let Some(pert) = perturb {
            o.connection = pert.apply(&o.connection)?;
        }
        Ok(o)
    }
}

fn check_one(
    suites: &[Suite],
    old: &Objects,
    new: &Objects,
    c: &CoordChange,
    q: &Point,
    tol: f64,
) -> jetham_core::Result<Report> {
    let pts = std::slice::from_ref(q);
    let mut r = Report::new();
    for suite in suites {
        match suite {
            Suite::Dtensor => {
                for (a, b) in old.dtensors.iter().zip(&new.dtensors) {
                    r.extend(verify_dtensor(a, b, c, pts, tol)?);
                }
            }
            Suite::Spray => {
                r.extend(verify_temporal_law(&old.sprays.temporal, &new.sprays.temporal, c, pts, tol)?);
                r.extend(verify_spatial_law(&old.sprays.spatial, &new.sprays.spatial, c, pts, tol)?);
            }
            Suite::Connection => r.extend(verify_connection_law(&old.connection, &new.connection, c, pts, tol)?),
            Suite::Frames => {
                r.extend(verify_duality(&old.connection, c.name(), pts, PAIRING_TOL)?);
                r.extend(adapted_tensoriality(&old.connection, &new.connection, c, pts, tol)?);
            }
        }
    }
    Ok(r)
}

/// Runs the selected suites over every chart and sample point. Records are
/// ordered by chart, then point, then suite, whatever the scheduling.
pub fn verify(p: &Problem, opts: &VerifyOptions) -> Result<Report> {
    if p.charts.is_empty() {
        return Err(CliError::Config("verify needs at least one chart".into()));
    }
    let suites = if opts.suites.is_empty() { Suite::ALL.to_vec() } else { opts.suites.clone() };
    let old = Objects::build(&p.time_metric, &p.space_metric, &p.hamiltonian)?;
    let news = p
        .charts
        .par_iter()
        .map(|c| Objects::transported(p, c, opts.perturb.as_ref()))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let tasks: Vec<(usize, usize)> =
        (0..p.charts.len()).flat_map(|ci| (0..p.points.len()).map(move |pi| (ci, pi))).collect();
    let parts: Vec<jetham_core::Result<Report>> = tasks
        .par_iter()
        .map(|&(ci, pi)| check_one(&suites, &old, &news[ci], &p.charts[ci], &p.points[pi], p.tolerance))
        .collect();
    let mut report = Report::new();
    for part in parts {
        report.extend(part?);
    }
    Ok(report)
}

fn fmt_point(q: &Point) -> String {
    let v: Vec<String> = q.to_flat().iter().map(|x| x.to_string()).collect();
    format!("({})", v.join(", "))
}

/// `H_11^1` and `γ^i_jk` as expressions and at every sample point, with the
/// inverse and metric-compatibility defects recorded as `metrics.*`.
pub fn christoffel(p: &Problem) -> Result<(Report, String)> {
    let n = p.n;
    let h = christoffel_time(&p.time_metric).h111;
    let gamma = christoffel_space(&p.space_metric)?;
    let inv = inverse_space(&p.space_metric)?;
    let mut out = String::new();
    writeln!(out, "H_11^1 = {h}").unwrap();
    for i in 0..n {
        for j in 0..n {
            for k in j..n {
                writeln!(out, "gamma^{}_{}{} = {}", i + 1, j + 1, k + 1, gamma.get(i, j, k)).unwrap();
            }
        }
    }
    let mut report = Report::new();
    for q in &p.points {
        writeln!(out, "at {}:", fmt_point(q)).unwrap();
        writeln!(out, "  H_11^1 = {}", h.eval(q).map_err(jetham_core::Error::from)?).unwrap();
        for i in 0..n {
            let row = (0..n)
                .flat_map(|j| (0..n).map(move |k| (j, k)))
                .map(|(j, k)| gamma.get(i, j, k).eval(q).map(|v| v.to_string()))
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(jetham_core::Error::from)?;
            writeln!(out, "  gamma^{}_jk = [{}]", i + 1, row.join(", ")).unwrap();
        }
        report.push("metrics.inverse", "", q, inverse_defect(&p.space_metric, &inv, q)?, p.tolerance);
        report.push("metrics.compatibility", "", q, compatibility_defect(&p.space_metric, &gamma, q)?, p.tolerance);
    }
    Ok((report, out))
}

fn eval_all(es: &[Expr], q: &Point) -> Result<Vec<f64>> {
    Ok(es.iter().map(|e| e.eval(q)).collect::<std::result::Result<_, _>>().map_err(jetham_core::Error::from)?)
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

/// Canonical semisprays and connection, with `canonical.connection` recording
/// that the connection induced by the canonical sprays is the canonical one.
pub fn canonical(p: &Problem) -> Result<(Report, String)> {
    let n = p.n;
    let sprays = MomentumSemispray::canonical(&p.time_metric, &p.space_metric)?;
    let conn = canonical_connection(&p.time_metric, &p.space_metric)?;
    let induced = connection_from_spray(&sprays, &p.space_metric)?;
    let g1 = &sprays.temporal.g1;
    let g2 = &sprays.spatial.g2;
    let mut out = String::new();
    for j in 0..n {
        for i in 0..n {
            writeln!(out, "G1_({}){} = {}", j + 1, i + 1, g1[j][i]).unwrap();
        }
    }
    for j in 0..n {
        for i in 0..n {
            writeln!(out, "G2_({}){} = {}", j + 1, i + 1, g2[j][i]).unwrap();
        }
    }
    for j in 0..n {
        writeln!(out, "N1_({}) = {}", j + 1, conn.n1[j]).unwrap();
    }
    for j in 0..n {
        for i in 0..n {
            writeln!(out, "N2_({}){} = {}", j + 1, i + 1, conn.n2[j][i]).unwrap();
        }
    }
    let mut report = Report::new();
    for q in &p.points {
        writeln!(out, "at {}:", fmt_point(q)).unwrap();
        writeln!(out, "  G1 = [{}]", join(&eval_all(&g1.concat(), q)?)).unwrap();
        writeln!(out, "  G2 = [{}]", join(&eval_all(&g2.concat(), q)?)).unwrap();
        let n1 = eval_all(&conn.n1, q)?;
        let n2 = eval_all(&conn.n2.concat(), q)?;
        writeln!(out, "  N1 = [{}]", join(&n1)).unwrap();
        writeln!(out, "  N2 = [{}]", join(&n2)).unwrap();
        let mut lhs = eval_all(&induced.n1, q)?;
        lhs.extend(eval_all(&induced.n2.concat(), q)?);
        let rhs: Vec<f64> = n1.into_iter().chain(n2).collect();
        report.push("canonical.connection", "", q, max_residual(&lhs, &rhs), p.tolerance);
    }
    Ok((report, out))
}

pub const OBJECTS: [&str; 13] = [
    "hamiltonian",
    "christoffel_time",
    "christoffel_space",
    "vertical_metrical",
    "liouville",
    "momentum_liouville",
    "h_normalization",
    "temporal_spray",
    "spatial_spray",
    "connection",
    "frame",
    "coframe",
    "pairing",
];

/// Numeric components of one object at one point. `values` is row-major with
/// the given `shape`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub object: String,
    pub point: Vec<f64>,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl Evaluation {
    pub fn render(&self) -> String {
        let mut out = format!("{} at {:?}:\n", self.object, self.point);
        let width = self.shape.last().copied().unwrap_or(1).max(1);
        for row in self.values.chunks(width) {
            writeln!(out, "  {}", join(row)).unwrap();
        }
        out
    }
}

fn dtensor_values(t: &DTensor, q: &Point) -> Result<(Vec<usize>, Vec<f64>)> {
    let shape = vec![t.dim(); t.rank()];
    Ok((shape, t.eval(q)?))
}

/// Frames and coframes are printed one adapted element per row.
pub fn eval_object(p: &Problem, name: &str, q: &Point) -> Result<Evaluation> {
    let n = p.n;
    if q.dim() != n {
        return Err(CliError::Config(format!("point has dimension {}, problem has {n}", q.dim())));
    }
    let (h, phi) = (&p.time_metric, &p.space_metric);
    let matrix = |m: DMatrix<f64>| (vec![m.nrows(), m.ncols()], m.transpose().iter().copied().collect::<Vec<_>>());
    let (shape, values) = match name {
        "hamiltonian" => (vec![], eval_all(std::slice::from_ref(p.hamiltonian.expr()), q)?),
        "christoffel_time" => (vec![], eval_all(&[christoffel_time(h).h111], q)?),
        "christoffel_space" => {
            let g = christoffel_space(phi)?;
            let es: Vec<Expr> = (0..n)
                .flat_map(|i| (0..n).flat_map(move |j| (0..n).map(move |k| (i, j, k))))
                .map(|(i, j, k)| g.get(i, j, k).clone())
                .collect();
            (vec![n, n, n], eval_all(&es, q)?)
        }
        "vertical_metrical" => dtensor_values(&vertical_metrical(&p.hamiltonian), q)?,
        "liouville" => dtensor_values(&liouville(n), q)?,
        "momentum_liouville" => dtensor_values(&momentum_liouville(n, h), q)?,
        "h_normalization" => dtensor_values(&h_normalization(n, h), q)?,
        "temporal_spray" => {
            (vec![n, n], eval_all(&MomentumSemispray::canonical(h, phi)?.temporal.g1.concat(), q)?)
        }
        "spatial_spray" => (vec![n, n], eval_all(&MomentumSemispray::canonical(h, phi)?.spatial.g2.concat(), q)?),
        "connection" => {
            let c = canonical_connection(h, phi)?;
            let mut v = eval_all(&c.n1, q)?;
            v.extend(eval_all(&c.n2.concat(), q)?);
            (vec![n + 1, n], v)
        }
        "frame" => matrix(adapted_frame(&canonical_connection(h, phi)?).eval(q)?.transpose()),
        "coframe" => matrix(adapted_coframe(&canonical_connection(h, phi)?).eval(q)?.transpose()),
        "pairing" => {
            let c = canonical_connection(h, phi)?;
            matrix(pairing(&adapted_frame(&c), &adapted_coframe(&c), q)?)
        }
        other => return Err(CliError::UnknownObject { name: other.into(), known: OBJECTS.to_vec() }),
    };
    Ok(Evaluation { object: name.into(), point: q.to_flat(), shape, values })
}
