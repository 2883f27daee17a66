use jetham_core::Point;

use crate::error::{CliError, Result};

/// Parses `t,x1,…,xn,p1,…,pn`.
pub fn parse_point(src: &str, n: usize) -> Result<Point> {
    let values = src
        .split(',')
        .enumerate()
        .map(|(i, s)| {
            let s = s.trim();
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(CliError::Config(format!("point coordinate {} is not a finite number: `{s}`", i + 1))),
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    point_from_values(&values, n)
}

pub(crate) fn point_from_values(values: &[f64], n: usize) -> Result<Point> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Config("point coordinates must be finite".into()));
    }
    Point::from_flat(n, values).ok_or_else(|| {
        CliError::Config(format!(
            "a point in dimension {n} has {} coordinates (t, x1..x{n}, p1..p{n}), found {}",
            2 * n + 1,
            values.len()
        ))
    })
}
