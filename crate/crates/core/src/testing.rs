//! Randomized expressions and a finite-difference oracle, shared by the
//! property tests and the fuzz targets.

use rand::Rng;

use crate::expr::{EvalError, Expr, Point, Rational, Var};
use crate::jetspace::CoordChange;
use crate::metrics::{SpaceMetric, TimeMetric};

/// Integer and half-integer exponents used by [`random_expr`].
const EXPONENTS: [(i64, i64); 8] = [(2, 1), (3, 1), (-1, 1), (-2, 1), (1, 2), (3, 2), (-1, 2), (0, 1)];

/// A random variable of `J^{1*}` in dimension `n`.
pub fn random_var<R: Rng>(rng: &mut R, n: usize) -> Var {
    match rng.gen_range(0..2 * n + 1) {
        0 => Var::Time,
        k if k <= n => Var::Space(k - 1),
        k => Var::Momentum(k - n - 1),
    }
}

/// All `2n + 1` variables in the order `t, x, p`.
pub fn all_vars(n: usize) -> Vec<Var> {
    std::iter::once(Var::Time)
        .chain((0..n).map(Var::Space))
        .chain((0..n).map(Var::Momentum))
        .collect()
}

fn leaf<R: Rng>(rng: &mut R, vars: &[Var]) -> Expr {
    let k = rng.gen_range(0..=vars.len());
    match vars.get(k) {
        Some(&v) => Expr::var(v),
        None => Expr::constant(rng.gen_range(-2.0..=2.0)),
    }
}

/// A random expression of depth at most `depth` over all `2n + 1` variables.
///
/// Leaves are variables or constants in `[-2, 2]`; inner nodes use every
/// operator of the grammar. `log` and division never appear at the root.
pub fn random_expr<R: Rng>(rng: &mut R, n: usize, depth: usize) -> Expr {
    random_expr_over(rng, &all_vars(n), depth)
}

/// As [`random_expr`], with leaves drawn from `vars` and constants only.
pub fn random_expr_over<R: Rng>(rng: &mut R, vars: &[Var], depth: usize) -> Expr {
    build(rng, vars, depth, true)
}

fn build<R: Rng>(rng: &mut R, vars: &[Var], depth: usize, root: bool) -> Expr {
    if depth == 0 || (!root && rng.gen_range(0..4) == 0) {
        return leaf(rng, vars);
    }
    let sub = |rng: &mut R| build(rng, vars, depth - 1, false);
    let ops = if root { 9 } else { 11 };
    match rng.gen_range(0..ops) {
        0 => sub(rng).add(&sub(rng)),
        1 => sub(rng).sub(&sub(rng)),
        2 => sub(rng).mul(&sub(rng)),
        3 => sub(rng).neg(),
        4 => {
            let (num, den) = EXPONENTS[rng.gen_range(0..EXPONENTS.len())];
            sub(rng).pow(Rational::new(num, den).expect("nonzero denominator"))
        }
        5 => sub(rng).exp(),
        6 => sub(rng).sin(),
        7 => sub(rng).cos(),
        8 => sub(rng).mul(&leaf(rng, vars)),
        9 => sub(rng).div(&sub(rng)),
        _ => sub(rng).log(),
    }
}

/// Step used by [`central_difference`] for a coordinate with value `x`.
pub fn fd_step(x: f64) -> f64 {
    6e-6 * x.abs().max(1.0)
}

/// `(f(q + h e_v) − f(q − h e_v)) / 2h` with `h = fd_step(q_v)`.
pub fn central_difference(e: &Expr, q: &Point, v: Var) -> Result<f64, EvalError> {
    let x = q.get(v).ok_or(EvalError::Dimension { var: v, dim: q.dim() })?;
    central_difference_with_step(e, q, v, fd_step(x))
}

/// Central difference with an explicit step; the divisor is the exact spacing
/// of the two abscissae.
pub fn central_difference_with_step(e: &Expr, q: &Point, v: Var, h: f64) -> Result<f64, EvalError> {
    let x = q.get(v).ok_or(EvalError::Dimension { var: v, dim: q.dim() })?;
    let (plus, minus) = (x + h, x - h);
    Ok((e.eval(&q.with(v, plus))? - e.eval(&q.with(v, minus))?) / (plus - minus))
}

/// Central differences extrapolated to zero step (Ridders' method).
///
/// Returns the estimate and an estimate of its absolute error: the larger of
/// the extrapolation error and the round-off bound `ε|f|/h` at the step that
/// produced the estimate. The error estimate is what decides whether a
/// comparison against the estimate is conclusive at all.
pub fn extrapolated_difference(e: &Expr, q: &Point, v: Var) -> Result<(f64, f64), EvalError> {
    const SHRINK: f64 = 1.4;
    const TABLE: usize = 10;
    let x = q.get(v).ok_or(EvalError::Dimension { var: v, dim: q.dim() })?;
    let cd = |h: f64| central_difference_with_step(e, q, v, h);
    let mut h = 2e-3 * x.abs().max(1.0);
    let mut a = vec![vec![0.0; TABLE]; TABLE];
    a[0][0] = cd(h)?;
    let (mut best, mut err, mut h_best) = (a[0][0], f64::INFINITY, h);
    for i in 1..TABLE {
        h /= SHRINK;
        a[0][i] = cd(h)?;
        let mut fac = SHRINK * SHRINK;
        for j in 1..=i {
            a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
            fac *= SHRINK * SHRINK;
            let errt = (a[j][i] - a[j - 1][i]).abs().max((a[j][i] - a[j - 1][i - 1]).abs());
            if errt <= err {
                err = errt;
                best = a[j][i];
                h_best = h;
            }
        }
        if (a[i][i] - a[i - 1][i - 1]).abs() >= 2.0 * err {
            break;
        }
    }
    let roundoff = f64::EPSILON * e.eval(q)?.abs() / h_best;
    Ok((best, err.max(roundoff)))
}

/// Outcome of comparing a symbolic derivative against [`extrapolated_difference`].
#[derive(Debug, Clone, PartialEq)]
pub enum DerivativeCheck {
    Agree,
    Disagree { symbolic: f64, numeric: f64, error_estimate: f64 },
    /// A domain error, a non-finite value, or an oracle whose own error
    /// estimate is too large to decide.
    Inconclusive,
}

/// Relative `1e-6`, or absolute `1e-9` when the value is below `1e-3`.
pub fn derivative_tolerance(value: f64) -> f64 {
    if value.abs() < 1e-3 {
        1e-9
    } else {
        1e-6 * value.abs()
    }
}

pub fn check_derivative(e: &Expr, q: &Point, v: Var) -> DerivativeCheck {
    let symbolic = match e.diff(v).eval(q) {
        Ok(s) if s.is_finite() => s,
        _ => return DerivativeCheck::Inconclusive,
    };
    let (numeric, error_estimate) = match extrapolated_difference(e, q, v) {
        Ok((d, err)) if d.is_finite() && err.is_finite() => (d, err),
        _ => return DerivativeCheck::Inconclusive,
    };
    let allowed = derivative_tolerance(numeric);
    if error_estimate > 0.01 * allowed {
        DerivativeCheck::Inconclusive
    } else if (symbolic - numeric).abs() <= derivative_tolerance(symbolic).max(allowed) {
        DerivativeCheck::Agree
    } else {
        DerivativeCheck::Disagree { symbolic, numeric, error_estimate }
    }
}

/// A uniform point with `t, x ∈ [0.5, 2]` and `p ∈ [-3, 3]`.
pub fn random_point<R: Rng>(rng: &mut R, n: usize) -> Point {
    Point::new(
        rng.gen_range(0.5..=2.0),
        (0..n).map(|_| rng.gen_range(0.5..=2.0)).collect(),
        (0..n).map(|_| rng.gen_range(-3.0..=3.0)).collect(),
    )
}

/// `t = ∛(s/2 + r) − ∛(r − s/2)` with `r = √(s²/4 + 1/27)`, the real root of `t + t³ = s`.
pub const CUBIC_TIME_INVERSE: &str = "(t/2 + (t^2/4 + 1/27)^(1/2))^(1/3) - ((t^2/4 + 1/27)^(1/2) - t/2)^(1/3)";

fn chart(name: &str, n: usize, t: (&str, &str), x_fwd: &[String], x_inv: &[String]) -> CoordChange {
    let fwd: Vec<&str> = x_fwd.iter().map(String::as_str).collect();
    let inv: Vec<&str> = x_inv.iter().map(String::as_str).collect();
    CoordChange::parse(name, n, t.0, t.1, &fwd, &inv).expect("built-in chart is valid")
}

/// Three nonlinear changes of coordinates, regular on `t, x ∈ [0.5, 2]`.
///
/// * `square`: `t̃ = t²`, `x̃^i = x^i + (x^n)³` for `i < n`
/// * `exponential`: `t̃ = eᵗ`, `x̃^1 = x^1 e^{x^2}` (or `(x^1)³` when `n = 1`)
/// * `cubic`: `t̃ = t + t³`, `x̃^i = (x^i)² + x^i`
pub fn nonlinear_charts(n: usize) -> Vec<CoordChange> {
    let x = |i: usize| format!("x{}", i + 1);

    let last = x(n - 1);
    let sq_fwd: Vec<String> =
        (0..n).map(|i| if i + 1 < n { format!("{} + {last}^3", x(i)) } else { x(i) }).collect();
    let sq_inv: Vec<String> =
        (0..n).map(|i| if i + 1 < n { format!("{} - {last}^3", x(i)) } else { x(i) }).collect();

    let (exp_fwd, exp_inv): (Vec<String>, Vec<String>) = if n == 1 {
        (vec!["x1^3".into()], vec!["x1^(1/3)".into()])
    } else {
        let mut f: Vec<String> = (0..n).map(x).collect();
        let mut b = f.clone();
        f[0] = "x1 * exp(x2)".into();
        b[0] = "x1 * exp(-x2)".into();
        (f, b)
    };

    let cub_fwd: Vec<String> = (0..n).map(|i| format!("{0}^2 + {0}", x(i))).collect();
    let cub_inv: Vec<String> = (0..n).map(|i| format!("({} + 1/4)^(1/2) - 1/2", x(i))).collect();

    vec![
        chart("square", n, ("t^2", "t^(1/2)"), &sq_fwd, &sq_inv),
        chart("exponential", n, ("exp(t)", "log(t)"), &exp_fwd, &exp_inv),
        chart("cubic", n, ("t + t^3", CUBIC_TIME_INVERSE), &cub_fwd, &cub_inv),
    ]
}

/// `t̃ = t + t³` with the spatial coordinates unchanged.
pub fn cubic_time_chart(n: usize) -> CoordChange {
    let xs: Vec<String> = (0..n).map(|i| format!("x{}", i + 1)).collect();
    chart("cubic_time", n, ("t + t^3", CUBIC_TIME_INVERSE), &xs, &xs)
}

/// `h = e^{2t}` paired with a polar-style spatial metric: `1 + (x^1)²` for
/// `n = 1`, `diag(1, (x^1)²)` for `n = 2`, `diag(1, (x^1)², (x^1 sin x^2)²)` for `n = 3`.
pub fn polar_metrics(n: usize) -> (TimeMetric, SpaceMetric) {
    let diag: Vec<&str> = match n {
        1 => vec!["1 + x1^2"],
        2 => vec!["1", "x1^2"],
        3 => vec!["1", "x1^2", "(x1 * sin(x2))^2"],
        _ => panic!("polar metrics are defined for n in 1..=3"),
    };
    let rows: Vec<Vec<&str>> =
        (0..n).map(|i| (0..n).map(|j| if i == j { diag[i] } else { "0" }).collect()).collect();
    (TimeMetric::parse("exp(2*t)").unwrap(), SpaceMetric::parse(&rows).unwrap())
}

/// A second pair with non-diagonal `φ` and a non-exponential `h`.
pub fn skew_metrics(n: usize) -> (TimeMetric, SpaceMetric) {
    let rows: Vec<Vec<String>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| match (i, j) {
                    _ if i == j => format!("2 + x{}^2", i + 1),
                    _ if i.abs_diff(j) == 1 => format!("x{} * x{} / 4", i.min(j) + 1, i.max(j) + 1),
                    _ => "0".into(),
                })
                .collect()
        })
        .collect();
    let rows: Vec<Vec<&str>> = rows.iter().map(|r| r.iter().map(String::as_str).collect()).collect();
    (TimeMetric::parse("t^2 + 1").unwrap(), SpaceMetric::parse(&rows).unwrap())
}
