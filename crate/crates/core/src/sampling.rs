//! Seeded sampling of points in a box of `(t, x, p)` space.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::expr::Point;

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval(pub f64, pub f64);

impl Interval {
    fn check(self, what: &str) -> Result<()> {
        if self.0.is_finite() && self.1.is_finite() && self.0 <= self.1 {
            Ok(())
        } else {
            Err(Error::Precondition(format!("sample interval for {what} is invalid: [{}, {}]", self.0, self.1)))
        }
    }

    fn draw(self, rng: &mut ChaCha8Rng) -> f64 {
        if self.0 == self.1 {
            self.0
        } else {
            rng.gen_range(self.0..=self.1)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBox {
    pub t: Interval,
    pub x: Vec<Interval>,
    pub p: Vec<Interval>,
}

impl SampleBox {
    /// The same interval for every coordinate.
    pub fn uniform(n: usize, t: Interval, x: Interval, p: Interval) -> Self {
        SampleBox { t, x: vec![x; n], p: vec![p; n] }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn validate(&self) -> Result<()> {
        check_dim(self.x.len(), self.p.len())?;
        self.t.check("t")?;
        for (i, iv) in self.x.iter().enumerate() {
            iv.check(&format!("x{}", i + 1))?;
        }
        for (i, iv) in self.p.iter().enumerate() {
            iv.check(&format!("p{}", i + 1))?;
        }
        Ok(())
    }

    pub fn contains(&self, q: &Point) -> bool {
        let inside = |iv: &Interval, v: f64| iv.0 <= v && v <= iv.1;
        q.dim() == self.dim()
            && inside(&self.t, q.t)
            && self.x.iter().zip(&q.x).all(|(iv, &v)| inside(iv, v))
            && self.p.iter().zip(&q.p).all(|(iv, &v)| inside(iv, v))
    }
}

/// `count` points drawn uniformly from `b`; the sequence depends only on `seed`.
pub fn sample_points(b: &SampleBox, count: usize, seed: u64) -> Result<Vec<Point>> {
    b.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            let t = b.t.draw(&mut rng);
            let x = b.x.iter().map(|iv| iv.draw(&mut rng)).collect();
            let p = b.p.iter().map(|iv| iv.draw(&mut rng)).collect();
            Point::new(t, x, p)
        })
        .collect())
}
