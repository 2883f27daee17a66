//! Problem files: a JSON document naming the metric pair, the charts and the
//! sample points, with every expression written in the DSL.

use jetham_core::dtensor::Hamiltonian;
use jetham_core::expr::{parse, Expr, ParseError};
use jetham_core::metrics::{SpaceMetric, TimeMetric};
use jetham_core::report::DEFAULT_TOL;
use jetham_core::sampling::{sample_points, Interval, SampleBox};
use jetham_core::{CoordChange, Point, MAX_DIM};
use serde::Deserialize;

use crate::error::{CliError, Result};
use crate::point::point_from_values;

/// Upper bound on `sample.count`.
pub const MAX_SAMPLE_POINTS: usize = 100_000;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub n: usize,
    pub time_metric: String,
    pub space_metric: Vec<Vec<String>>,
    #[serde(default)]
    pub hamiltonian: Option<String>,
    pub charts: Vec<ChartSpec>,
    pub sample: SampleSpec,
    #[serde(default)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub name: String,
    pub t_fwd: String,
    pub t_inv: String,
    pub x_fwd: Vec<String>,
    pub x_inv: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SampleSpec {
    Seeded(SeededSample),
    /// Explicit points, each `[t, x1..xn, p1..pn]`.
    Points(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeededSample {
    pub seed: u64,
    pub count: usize,
    #[serde(rename = "box")]
    pub bounds: BoxSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub t: Interval,
    pub x: IntervalSpec,
    pub p: IntervalSpec,
}

/// One interval for every coordinate, or one per coordinate.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum IntervalSpec {
    All(Interval),
    Each(Vec<Interval>),
}

impl IntervalSpec {
    fn expand(&self, n: usize, what: &str) -> Result<Vec<Interval>> {
        match self {
            IntervalSpec::All(iv) => Ok(vec![*iv; n]),
            IntervalSpec::Each(v) if v.len() == n => Ok(v.clone()),
            IntervalSpec::Each(v) => {
                Err(CliError::Config(format!("sample.box.{what}: expected {n} intervals, found {}", v.len())))
            }
        }
    }
}

/// A validated problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub n: usize,
    pub time_metric: TimeMetric,
    pub space_metric: SpaceMetric,
    pub hamiltonian: Hamiltonian,
    pub charts: Vec<CoordChange>,
    pub points: Vec<Point>,
    pub tolerance: f64,
}

fn caret(src: &str, offset: usize) -> String {
    let col = src[..offset.min(src.len())].chars().count();
    format!("\n    {src}\n    {}^", " ".repeat(col))
}

/// Parses `src`, labelling errors with the JSON location `at`.
fn expr_at(at: &str, src: &str, n: usize) -> Result<Expr> {
    parse(src, n).map_err(|e: ParseError| CliError::Config(format!("{at}: {e}{}", caret(src, e.offset()))))
}

fn exprs_at(at: &str, srcs: &[String], n: usize) -> Result<Vec<Expr>> {
    srcs.iter().enumerate().map(|(i, s)| expr_at(&format!("{at}[{i}]"), s, n)).collect()
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn validate(&self) -> Result<Problem> {
        let n = self.n;
        if n == 0 {
            return Err(CliError::Config("n must be at least 1".into()));
        }
        if n > MAX_DIM {
            return Err(jetham_core::Error::Dimension { n, max: MAX_DIM }.into());
        }

        let time_metric = TimeMetric::new(expr_at("time_metric", &self.time_metric, 0)?)?;

        if self.space_metric.len() != n || self.space_metric.iter().any(|r| r.len() != n) {
            return Err(CliError::Config(format!("space_metric must be a {n}x{n} matrix")));
        }
        let rows = self
            .space_metric
            .iter()
            .enumerate()
            .map(|(i, r)| exprs_at(&format!("space_metric[{i}]"), r, n))
            .collect::<Result<Vec<_>>>()?;
        let space_metric = SpaceMetric::new(rows)?;

        let hamiltonian = match &self.hamiltonian {
            Some(src) => Hamiltonian::new(n, expr_at("hamiltonian", src, n)?)?,
            None => Hamiltonian::from_metrics(&time_metric, &space_metric)?,
        };

        let charts = self
            .charts
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let at = format!("charts[{k}]");
                if c.x_fwd.len() != n || c.x_inv.len() != n {
                    return Err(CliError::Config(format!("{at}: x_fwd and x_inv need {n} entries each")));
                }
                Ok(CoordChange::new(
                    c.name.clone(),
                    n,
                    expr_at(&format!("{at}.t_fwd"), &c.t_fwd, n)?,
                    expr_at(&format!("{at}.t_inv"), &c.t_inv, n)?,
                    exprs_at(&format!("{at}.x_fwd"), &c.x_fwd, n)?,
                    exprs_at(&format!("{at}.x_inv"), &c.x_inv, n)?,
                )?)
            })
            .collect::<Result<Vec<_>>>()?;

        let points = match &self.sample {
            SampleSpec::Seeded(s) if s.count > MAX_SAMPLE_POINTS => {
                return Err(CliError::Config(format!(
                    "sample.count is {}, the limit is {MAX_SAMPLE_POINTS}",
                    s.count
                )));
            }
            SampleSpec::Seeded(s) => {
                let b = SampleBox { t: s.bounds.t, x: s.bounds.x.expand(n, "x")?, p: s.bounds.p.expand(n, "p")? };
                sample_points(&b, s.count, s.seed)?
            }
            SampleSpec::Points(list) => list.iter().map(|v| point_from_values(v, n)).collect::<Result<_>>()?,
        };
        if points.is_empty() {
            return Err(CliError::Config("sample must produce at least one point".into()));
        }

        let tolerance = self.tolerance.unwrap_or(DEFAULT_TOL);
        if !(tolerance.is_finite() && tolerance > 0.0) {
            return Err(CliError::Config(format!("tolerance must be a positive number, found {tolerance}")));
        }

        for q in &points {
            time_metric.check_at(q)?;
            space_metric.check_at(q)?;
        }

        Ok(Problem { n, time_metric, space_metric, hamiltonian, charts, points, tolerance })
    }
}

impl Problem {
    pub fn from_json(text: &str) -> Result<Self> {
        ProblemFile::from_json(text)?.validate()
    }

    pub fn load(path: &str) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
        Problem::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "n": 1,
        "time_metric": "exp(2*t)",
        "space_metric": [["1 + x1^2"]],
        "charts": [{"name": "c", "t_fwd": "2*t", "t_inv": "t/2", "x_fwd": ["x1"], "x_inv": ["x1"]}],
        "sample": {"seed": 1, "count": 3, "box": {"t": [0.5, 2], "x": [0.5, 2], "p": [[-1, 1]]}}
    }"#;

    #[test]
    fn loads_a_minimal_problem() {
        let p = Problem::from_json(BASE).unwrap();
        assert_eq!((p.n, p.points.len(), p.tolerance), (1, 3, 1e-9));
        assert_eq!(p.charts[0].name(), "c");
    }

    #[test]
    fn explicit_points() {
        let text = BASE.replace(
            r#"{"seed": 1, "count": 3, "box": {"t": [0.5, 2], "x": [0.5, 2], "p": [[-1, 1]]}}"#,
            "[[1, 1, 2], [1.5, 0.5, -1]]",
        );
        let p = Problem::from_json(&text).unwrap();
        assert_eq!(p.points[1], Point::new(1.5, vec![0.5], vec![-1.0]));
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = BASE.replacen("\"n\": 1,", "\"n\": 1, \"extra\": 0,", 1);
        assert!(matches!(Problem::from_json(&text), Err(CliError::Json(_))));
    }

    #[test]
    fn labels_parse_errors() {
        let text = BASE.replace("1 + x1^2", "1 + y^2");
        let msg = Problem::from_json(&text).unwrap_err().to_string();
        assert!(msg.starts_with("space_metric[0][0]:"), "{msg}");
        assert!(msg.contains("^"), "{msg}");
    }

    #[test]
    fn dimension_bound() {
        let text = BASE.replace("\"n\": 1", "\"n\": 5");
        assert!(matches!(
            Problem::from_json(&text),
            Err(CliError::Core(jetham_core::Error::Dimension { n: 5, max: 4 }))
        ));
    }

    #[test]
    fn sample_count_limit() {
        let text = BASE.replace("\"count\": 3", "\"count\": 100001");
        let msg = Problem::from_json(&text).unwrap_err().to_string();
        assert!(msg.contains("sample.count"), "{msg}");
    }

    #[test]
    fn singular_metric_at_a_sample_point() {
        let text = BASE.replace("1 + x1^2", "x1 - x1");
        assert!(Problem::from_json(&text).is_err());
    }
}
