//! End-to-end acceptance run. Prints one line per criterion and exits non-zero
//! if any criterion fails.

use std::process::Command;
use std::time::Instant;

use jetham_core::dtensor::{
    h_normalization, liouville, momentum_liouville, vertical_metrical, verify_dtensor, DTensor, Hamiltonian,
};
use jetham_core::expr::{Expr, Var};
use jetham_core::frames::{adapted_tensoriality, verify_adapted_tensoriality, verify_duality};
use jetham_core::metrics::{SpaceMetric, TimeMetric};
use jetham_core::nlconn::{
    canonical_connection, connection_from_spray, spray_from_connection, verify_connection_law, NonlinearConnection,
};
use jetham_core::report::{max_residual, Report, DEFAULT_TOL};
use jetham_core::sampling::{sample_points, Interval, SampleBox};
use jetham_core::spray::{
    temporal_law_rhs, verify_spatial_law, verify_temporal_law, MomentumSemispray, SpatialSemispray,
    TemporalSemispray,
};
use jetham_core::testing::{
    check_derivative, cubic_time_chart, nonlinear_charts, polar_metrics, random_expr, random_expr_over,
    random_point, random_var, skew_metrics, DerivativeCheck,
};
use jetham_core::{CoordChange, Point};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const DIMS: [usize; 3] = [1, 2, 3];
const POINTS: usize = 20;
const TOL: f64 = DEFAULT_TOL;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome { pass, detail: detail.into() }
    }
}

fn points(n: usize, seed: u64) -> Vec<Point> {
    let b = SampleBox::uniform(n, Interval(0.5, 2.0), Interval(0.5, 2.0), Interval(-3.0, 3.0));
    sample_points(&b, POINTS, seed).unwrap()
}

fn metric_pairs(n: usize) -> [(TimeMetric, SpaceMetric); 2] {
    [polar_metrics(n), skew_metrics(n)]
}

/// Runs `f` over every dimension, chart and metric pair, merging the reports.
fn over_suite(mut f: impl FnMut(usize, &CoordChange, &TimeMetric, &SpaceMetric, &[Point]) -> Report) -> Report {
    let mut all = Report::new();
    for n in DIMS {
        let pts = points(n, 100 + n as u64);
        for c in nonlinear_charts(n) {
            for (h, phi) in metric_pairs(n) {
                all.extend(f(n, &c, &h, &phi, &pts));
            }
        }
    }
    all
}

fn describe(r: &Report) -> String {
    format!("{} records, max residual {:.2e}", r.records.len(), r.max_residual())
}

fn derivative_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut agree, mut inconclusive, mut worst) = (0usize, 0usize, String::new());
    let mut disagree = 0usize;
    while agree + disagree < 1000 {
        let n = DIMS[(agree + disagree + inconclusive) % 3];
        let e = random_expr(&mut rng, n, 4);
        let q = random_point(&mut rng, n);
        let v = random_var(&mut rng, n);
        match check_derivative(&e, &q, v) {
            DerivativeCheck::Agree => agree += 1,
            DerivativeCheck::Inconclusive => inconclusive += 1,
            DerivativeCheck::Disagree { symbolic, numeric, .. } => {
                disagree += 1;
                if worst.is_empty() {
                    worst = format!("; first: d({e})/d{v} = {symbolic} vs {numeric}");
                }
            }
        }
    }
    Outcome::new(
        disagree == 0,
        format!("{agree}/1000 agree, {inconclusive} redrawn as numerically unreliable{worst}"),
    )
}

fn momentum_structure() -> Outcome {
    let mut linear = true;
    let mut functorial = Report::new();
    let mut skipped = 0;
    for n in DIMS {
        let charts = nonlinear_charts(n);
        let pts = points(n, 200 + n as u64);
        for c in &charts {
            for e in c.momentum_exprs() {
                for i in 0..n {
                    let d = e.diff(Var::Momentum(i));
                    linear &= d.free_vars().iter().all(|v| !matches!(v, Var::Momentum(_)));
                }
            }
            for q in &pts {
                let zero = Point::new(q.t, q.x.clone(), vec![0.0; n]);
                linear &= c.induced_point(&zero).unwrap().p.iter().all(|&v| v == 0.0);
            }
            for c2 in &charts {
                let composed = c.then(c2).unwrap();
                for q in &pts {
                    let Ok(step) = c2.transition(&c.induced_point(q).unwrap()) else {
                        skipped += 1;
                        continue;
                    };
                    let direct = composed.induced_point(q).unwrap();
                    let r = max_residual(&direct.to_flat(), &step.image.to_flat());
                    functorial.push("jetspace.compose", composed.name(), q, r, TOL);
                }
            }
        }
    }
    Outcome::new(
        linear && functorial.passed(),
        format!(
            "linear in p: {linear}; composition {}; {skipped} pairs outside the second chart's domain",
            describe(&functorial)
        ),
    )
}

fn dtensor_suite() -> Outcome {
    let mut negatives = (0, 0);
    let report = over_suite(|n, c, h, phi, pts| {
        let h2 = h.transport(c).unwrap();
        let ham = Hamiltonian::from_metrics(h, phi).unwrap();
        let ham2 = ham.transport(c).unwrap();
        let pairs = [
            (vertical_metrical(&ham), vertical_metrical(&ham2)),
            (liouville(n), liouville(n)),
            (momentum_liouville(n, h), momentum_liouville(n, &h2)),
            (h_normalization(n, h), h_normalization(n, &h2)),
        ];
        let mut r = Report::new();
        for (old, new) in &pairs {
            r.extend(verify_dtensor(old, new, c, pts, TOL).unwrap());
            let broken = perturb_first(new);
            negatives.0 += 1;
            if !verify_dtensor(old, &broken, c, pts, TOL).unwrap().passed() {
                negatives.1 += 1;
            }
        }
        r
    });
    let neg_ok = negatives.0 == negatives.1;
    Outcome::new(
        report.passed() && neg_ok,
        format!("{}; perturbed component rejected {}/{}", describe(&report), negatives.1, negatives.0),
    )
}

fn perturb_first(t: &DTensor) -> DTensor {
    let idx = vec![0; t.rank()];
    let bumped = t.get(&idx).add(&Expr::constant(0.5));
    t.with_component(&idx, bumped)
}

fn spray_covariance() -> Outcome {
    let report = over_suite(|_, c, h, phi, pts| {
        let old = MomentumSemispray::canonical(h, phi).unwrap();
        let new = MomentumSemispray::canonical(&h.transport(c).unwrap(), &phi.transport(c).unwrap()).unwrap();
        let mut r = verify_temporal_law(&old.temporal, &new.temporal, c, pts, TOL).unwrap();
        r.extend(verify_spatial_law(&old.spatial, &new.spatial, c, pts, TOL).unwrap());
        r
    });

    // Homogeneous part of the temporal law alone, under t̃ = t + t³.
    let (mut rejected, mut total) = (0, 0);
    for n in DIMS {
        let c = cubic_time_chart(n);
        for (h, phi) in metric_pairs(n) {
            let old = MomentumSemispray::canonical(&h, &phi).unwrap();
            let new = MomentumSemispray::canonical(&h.transport(&c).unwrap(), &phi).unwrap();
            for q in points(n, 300 + n as u64) {
                let mut td = c.transition(&q).unwrap();
                td.dp_tilde_dt.iter_mut().for_each(|v| *v = 0.0);
                let old_vals = grid(&old.temporal.g1, &q);
                let predicted: Vec<f64> = temporal_law_rhs(&old_vals, &td).concat();
                let actual: Vec<f64> = grid(&new.temporal.g1, &td.image).concat().iter().map(|v| 2.0 * v).collect();
                total += 1;
                if max_residual(&predicted, &actual) > TOL {
                    rejected += 1;
                }
            }
        }
    }
    Outcome::new(
        report.passed() && rejected == total,
        format!("{}; uncorrected law rejected at {rejected}/{total} points", describe(&report)),
    )
}

fn grid(es: &[Vec<Expr>], q: &Point) -> Vec<Vec<f64>> {
    es.iter().map(|row| row.iter().map(|e| e.eval(q).unwrap()).collect()).collect()
}

fn canonical_consistency() -> Outcome {
    let mut report = Report::new();
    let mut closed_form = Report::new();
    for n in DIMS {
        let pts = points(n, 400 + n as u64);
        for (h, phi) in metric_pairs(n) {
            let from_spray = connection_from_spray(&MomentumSemispray::canonical(&h, &phi).unwrap(), &phi).unwrap();
            let direct = canonical_connection(&h, &phi).unwrap();
            for q in &pts {
                let (a1, a2) = from_spray.eval(q).unwrap();
                let (b1, b2) = direct.eval(q).unwrap();
                let r = max_residual(&a1, &b1).max(max_residual(&a2.concat(), &b2.concat()));
                report.push("canonical.connection", "", q, r, TOL);
            }
        }
        let (h, phi) = polar_metrics(n);
        let conn = connection_from_spray(&MomentumSemispray::canonical(&h, &phi).unwrap(), &phi).unwrap();
        for q in &pts {
            let (n1, _) = conn.eval(q).unwrap();
            closed_form.push("canonical.exp_time", "", q, max_residual(&n1, &q.p), TOL);
        }
    }
    Outcome::new(
        report.passed() && closed_form.passed(),
        format!("{}; N1 = p for h = exp(2t): {}", describe(&report), describe(&closed_form)),
    )
}

fn quadratic_temporal(rng: &mut ChaCha8Rng, n: usize) -> TemporalSemispray {
    let base: Vec<Var> = std::iter::once(Var::Time).chain((0..n).map(Var::Space)).collect();
    let g1 = (0..n)
        .map(|_| {
            (0..n)
                .map(|_| {
                    Expr::sum((0..n).flat_map(|a| (a..n).map(move |b| (a, b))).map(|(a, b)| {
                        random_expr_over(rng, &base, 2).mul(&Expr::momentum(a)).mul(&Expr::momentum(b))
                    }))
                })
                .collect()
        })
        .collect();
    TemporalSemispray { g1 }
}

fn finite_at(es: &[&Expr], pts: &[Point]) -> bool {
    pts.iter().all(|q| es.iter().all(|e| e.eval(q).is_ok_and(|v| v.is_finite() && v.abs() < 1e8)))
}

fn random_connection(rng: &mut ChaCha8Rng, n: usize, pts: &[Point]) -> NonlinearConnection {
    loop {
        let n1: Vec<Expr> = (0..n).map(|_| random_expr(rng, n, 3)).collect();
        let n2: Vec<Vec<Expr>> = (0..n).map(|_| (0..n).map(|_| random_expr(rng, n, 3)).collect()).collect();
        if finite_at(&n1.iter().chain(n2.iter().flatten()).collect::<Vec<_>>(), pts) {
            return NonlinearConnection::new(n1, n2).unwrap();
        }
    }
}

fn round_trips() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut spatial_exact, mut spatial_checked) = (true, 0);
    let mut idempotence = Report::new();
    for n in DIMS {
        let pts = points(n, 600 + n as u64);
        for (_, phi) in metric_pairs(n) {
            for _ in 0..5 {
                let conn = random_connection(&mut rng, n, &pts);
                let back = connection_from_spray(&spray_from_connection(&conn), &phi).unwrap();
                let g2: Vec<Vec<Expr>> = conn.n2.clone();
                let g = MomentumSemispray::new(
                    TemporalSemispray { g1: vec![vec![Expr::zero(); n]; n] },
                    SpatialSemispray { g2: g2.clone() },
                )
                .unwrap();
                let again = spray_from_connection(&connection_from_spray(&g, &phi).unwrap());
                for q in &pts {
                    spatial_checked += 1;
                    spatial_exact &= grid(&conn.n2, q) == grid(&back.n2, q);
                    spatial_exact &= grid(&g2, q) == grid(&again.spatial.g2, q);
                }

                let g = loop {
                    let g1 = quadratic_temporal(&mut rng, n);
                    if finite_at(&g1.g1.iter().flatten().collect::<Vec<_>>(), &pts) {
                        break g1;
                    }
                };
                let g = MomentumSemispray::new(g, SpatialSemispray { g2: vec![vec![Expr::zero(); n]; n] }).unwrap();
                let once = connection_from_spray(&g, &phi).unwrap();
                let twice = connection_from_spray(&spray_from_connection(&once), &phi).unwrap();
                for q in &pts {
                    let a: Vec<f64> = once.n1.iter().map(|e| e.eval(q).unwrap()).collect();
                    let b: Vec<f64> = twice.n1.iter().map(|e| e.eval(q).unwrap()).collect();
                    idempotence.push("nlconn.temporal_idempotence", "", q, max_residual(&a, &b), TOL);
                }
            }
        }
    }
    Outcome::new(
        spatial_exact && idempotence.passed(),
        format!(
            "spatial exact at {spatial_checked} points: {spatial_exact}; temporal idempotence {}",
            describe(&idempotence)
        ),
    )
}

fn duality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut report = Report::new();
    for n in DIMS {
        let pts = points(n, 700 + n as u64);
        let (h, phi) = polar_metrics(n);
        let mut conns = vec![NonlinearConnection::zero(n), canonical_connection(&h, &phi).unwrap()];
        conns.extend((0..5).map(|_| random_connection(&mut rng, n, &pts)));
        for conn in &conns {
            report.extend(verify_duality(conn, "", &pts, 1e-12).unwrap());
        }
    }
    Outcome::new(report.passed(), format!("{} at 1e-12", describe(&report)))
}

fn tensoriality() -> Outcome {
    let mut negatives = (0, 0);
    let report = over_suite(|_, c, h, phi, pts| {
        let old = canonical_connection(h, phi).unwrap();
        let new = canonical_connection(&h.transport(c).unwrap(), &phi.transport(c).unwrap()).unwrap();
        let mut r = verify_connection_law(&old, &new, c, pts, TOL).unwrap();
        r.extend(verify_adapted_tensoriality(&old, &new, c, pts, TOL).unwrap());
        let mut broken = new.clone();
        broken.n1[0] = broken.n1[0].add(&Expr::one());
        negatives.0 += 1;
        if !adapted_tensoriality(&old, &broken, c, pts, TOL).unwrap().passed() {
            negatives.1 += 1;
        }
        r
    });
    let mixing = report.records.iter().filter(|r| r.check_id.ends_with(".mixing")).map(|r| r.residual).fold(0.0, f64::max);
    Outcome::new(
        report.passed() && negatives.0 == negatives.1,
        format!(
            "{}; max mixing {mixing:.2e}; violated connection rejected {}/{}",
            describe(&report),
            negatives.1,
            negatives.0
        ),
    )
}

fn cli_end_to_end() -> Outcome {
    let problem = concat!(env!("CARGO_MANIFEST_DIR"), "/problems/polar_exp.json");
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    let mut codes = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("report{k}.json"));
        let status = Command::new(env!("CARGO_BIN_EXE_jetham"))
            .args(["verify", "--problem", problem, "--json"])
            .arg(&out)
            .output()
            .unwrap()
            .status;
        codes.push(status.code());
        outputs.push(std::fs::read(&out).unwrap_or_default());
    }
    let identical = !outputs[0].is_empty() && outputs[0] == outputs[1];
    Outcome::new(
        codes.iter().all(|&c| c == Some(0)) && identical,
        format!("exit codes {codes:?}; JSON byte-identical: {identical} ({} bytes)", outputs[0].len()),
    )
}

fn main() {
    let start = Instant::now();
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 9] = [
        ("derivative exactness", derivative_exactness),
        ("momentum map linear and functorial", momentum_structure),
        ("d-tensor law for the built-in tensors", dtensor_suite),
        ("semispray covariance", spray_covariance),
        ("canonical connection from canonical sprays", canonical_consistency),
        ("semispray/connection round trips", round_trips),
        ("adapted frame/coframe duality", duality),
        ("tensoriality of adapted frames", tensoriality),
        ("CLI end to end", cli_end_to_end),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = run();
        failed += usize::from(!o.pass);
        println!(
            "criterion {} {:<44} {}  ({:.2}s) {}",
            k + 1,
            name,
            if o.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            o.detail
        );
    }
    let total = start.elapsed().as_secs_f64();
    println!("acceptance: {}/9 pass in {total:.2}s", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
