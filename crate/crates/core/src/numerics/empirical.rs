use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A non-empty sample kept in non-decreasing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EmpiricalSample {
    values: Vec<f64>,
}

impl EmpiricalSample {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("empirical sample needs at least one value"));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::domain("empirical sample contains NaN"));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn mean(&self) -> f64 {
        kahan_sum(self.values.iter().copied()) / self.len() as f64
    }

    /// Unbiased sample variance (0 for a single value).
    pub fn variance(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        kahan_sum(self.values.iter().map(|v| (v - m) * (v - m))) / (n - 1) as f64
    }

    /// Number of values ≤ x.
    pub fn count_le(&self, x: f64) -> usize {
        self.values.partition_point(|v| *v <= x)
    }

    /// Number of values < x.
    pub fn count_lt(&self, x: f64) -> usize {
        self.values.partition_point(|v| *v < x)
    }

    /// Empirical CDF, right-continuous.
    pub fn ecdf(&self, x: f64) -> f64 {
        self.count_le(x) as f64 / self.len() as f64
    }

    /// Fraction of values within `tol` of `x`.
    pub fn fraction_near(&self, x: f64, tol: f64) -> f64 {
        let lo = self.values.partition_point(|v| *v < x - tol);
        let hi = self.values.partition_point(|v| *v <= x + tol);
        (hi - lo) as f64 / self.len() as f64
    }

    /// Copy with every value within `tol` of one of `points` replaced by that point.
    pub fn snapped(&self, points: &[f64], tol: f64) -> EmpiricalSample {
        let values =
            self.values.iter().map(|&v| points.iter().copied().find(|p| (v - p).abs() <= tol).unwrap_or(v)).collect();
        EmpiricalSample::new(values).expect("snapping keeps the sample non-empty and NaN-free")
    }

    /// Apply `f` to every value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<EmpiricalSample> {
        EmpiricalSample::new(self.values.iter().map(|&v| f(v)).collect())
    }
}

impl TryFrom<Vec<f64>> for EmpiricalSample {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        EmpiricalSample::new(values)
    }
}

impl From<EmpiricalSample> for Vec<f64> {
    fn from(s: EmpiricalSample) -> Self {
        s.values
    }
}

pub(crate) fn kahan_sum(xs: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for x in xs {
        let y = x - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Kolmogorov–Smirnov distance sup |F_n − F| for a continuous `cdf`.
pub fn ks_statistic(sample: &EmpiricalSample, cdf: impl Fn(f64) -> f64) -> f64 {
    ks_statistic_with_jumps(sample, &cdf, &cdf)
}

/// Exact sup-distance between the empirical CDF and a CDF that may jump.
///
/// `cdf_left(x)` must return the left limit F(x−). At each distinct sample
/// value both one-sided gaps are checked, which covers the supremum over the
/// whole line because F is monotone between sample points.
pub fn ks_statistic_with_jumps(
    sample: &EmpiricalSample,
    cdf: impl Fn(f64) -> f64,
    cdf_left: impl Fn(f64) -> f64,
) -> f64 {
    let n = sample.len() as f64;
    let values = sample.values();
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < values.len() {
        let v = values[i];
        let mut j = i;
        while j < values.len() && values[j] == v {
            j += 1;
        }
        let below = i as f64 / n;
        let at = j as f64 / n;
        d = d.max((below - cdf_left(v)).abs()).max((at - cdf(v)).abs());
        i = j;
    }
    d
}
