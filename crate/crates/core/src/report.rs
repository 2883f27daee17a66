//! Residual records produced by the verifiers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::expr::Point;

/// Pass threshold used by every verifier unless overridden.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Below this magnitude residuals are measured absolutely.
pub const ABSOLUTE_FLOOR: f64 = 1e-6;

/// Absolute difference when both sides are tiny, relative difference otherwise.
pub fn residual(lhs: f64, rhs: f64) -> f64 {
    let scale = lhs.abs().max(rhs.abs());
    let diff = (lhs - rhs).abs();
    if diff.is_nan() {
        return f64::INFINITY;
    }
    if scale < ABSOLUTE_FLOOR {
        diff
    } else {
        diff / scale
    }
}

/// Worst [`residual`] over paired slices.
pub fn max_residual(lhs: &[f64], rhs: &[f64]) -> f64 {
    assert_eq!(lhs.len(), rhs.len());
    lhs.iter().zip(rhs).map(|(a, b)| residual(*a, *b)).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub check_id: String,
    pub chart: String,
    pub point: Vec<f64>,
    pub residual: f64,
    pub pass: bool,
}

impl Record {
    /// Check family: the part of the id before the first `.`.
    pub fn family(&self) -> &str {
        self.check_id.split('.').next().unwrap_or(&self.check_id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub pass: bool,
    pub max_residual: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub records: Vec<Record>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, check_id: impl Into<String>, chart: &str, q: &Point, residual: f64, tol: f64) {
        self.records.push(Record {
            check_id: check_id.into(),
            chart: chart.to_string(),
            point: q.to_flat(),
            residual,
            pass: residual <= tol,
        });
    }

    pub fn extend(&mut self, other: Report) {
        self.records.extend(other.records);
    }

    pub fn passed(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn max_residual(&self) -> f64 {
        self.records.iter().map(|r| r.residual).fold(0.0, f64::max)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Record> {
        self.records.iter().filter(|r| !r.pass)
    }

    pub fn summary(&self) -> Summary {
        let mut max_residual = BTreeMap::new();
        for r in &self.records {
            let slot = max_residual.entry(r.family().to_string()).or_insert(0.0_f64);
            *slot = slot.max(r.residual);
        }
        Summary {
            pass: self.passed(),
            max_residual,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ReportDoc {
    summary: Summary,
    records: Vec<Record>,
}

impl Serialize for Report {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ReportDoc {
            summary: self.summary(),
            records: self.records.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Report {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let doc = ReportDoc::deserialize(d)?;
        Ok(Report { records: doc.records })
    }
}
