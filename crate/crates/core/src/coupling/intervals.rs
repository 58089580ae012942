use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

// Endpoints this close are treated as touching.
const JOIN_TOLERANCE: f64 = 1e-12;

/// Uniform law on a finite union of disjoint intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct IntervalUnion {
    intervals: Vec<[f64; 2]>,
    // total length of the intervals before index i
    cumulative: Vec<f64>,
    length: f64,
}

impl IntervalUnion {
    /// Sorts, drops empty pieces and merges touching ones.
    pub fn new(mut intervals: Vec<[f64; 2]>) -> Result<Self> {
        if intervals.iter().any(|[lo, hi]| !(lo.is_finite() && hi.is_finite() && lo <= hi)) {
            return Err(Error::domain("intervals need finite endpoints with lo <= hi"));
        }
        intervals.retain(|[lo, hi]| hi > lo);
        intervals.sort_by(|a, b| a[0].total_cmp(&b[0]));
        let mut merged: Vec<[f64; 2]> = Vec::with_capacity(intervals.len());
        for [lo, hi] in intervals {
            match merged.last_mut() {
                Some(last) if lo <= last[1] + JOIN_TOLERANCE => {
                    if lo < last[1] - JOIN_TOLERANCE {
                        return Err(Error::domain("intervals of a uniform union must not overlap"));
                    }
                    last[1] = last[1].max(hi);
                }
                _ => merged.push([lo, hi]),
            }
        }
        if merged.is_empty() {
            return Err(Error::domain("uniform law needs an interval of positive length"));
        }
        let mut cumulative = Vec::with_capacity(merged.len());
        let mut length = 0.0;
        for [lo, hi] in &merged {
            cumulative.push(length);
            length += hi - lo;
        }
        Ok(Self { intervals: merged, cumulative, length })
    }

    pub fn intervals(&self) -> &[[f64; 2]] {
        &self.intervals
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn lo(&self) -> f64 {
        self.intervals[0][0]
    }

    pub fn hi(&self) -> f64 {
        self.intervals[self.intervals.len() - 1][1]
    }

    /// Index of the interval containing s (closed on both sides).
    pub fn position(&self, s: f64) -> Option<usize> {
        let i = self.intervals.partition_point(|iv| iv[1] < s);
        (i < self.intervals.len() && self.intervals[i][0] <= s).then_some(i)
    }

    pub fn contains(&self, s: f64) -> bool {
        self.position(s).is_some()
    }

    pub fn cdf(&self, s: f64) -> f64 {
        let i = self.intervals.partition_point(|iv| iv[0] <= s);
        let Some(i) = i.checked_sub(1) else { return 0.0 };
        let [lo, hi] = self.intervals[i];
        ((self.cumulative[i] + (s.min(hi) - lo)) / self.length).min(1.0)
    }

    /// Inverse CDF on [0, 1].
    pub fn quantile(&self, u: f64) -> f64 {
        let target = u.clamp(0.0, 1.0) * self.length;
        let i = self.cumulative.partition_point(|c| *c <= target).saturating_sub(1);
        let [lo, hi] = self.intervals[i];
        (lo + (target - self.cumulative[i])).min(hi)
    }

    pub fn mean(&self) -> f64 {
        self.intervals.iter().map(|[lo, hi]| (hi - lo) * 0.5 * (lo + hi)).sum::<f64>() / self.length
    }
}

impl TryFrom<Vec<[f64; 2]>> for IntervalUnion {
    type Error = Error;

    fn try_from(v: Vec<[f64; 2]>) -> Result<Self> {
        IntervalUnion::new(v)
    }
}

impl From<IntervalUnion> for Vec<[f64; 2]> {
    fn from(u: IntervalUnion) -> Self {
        u.intervals
    }
}
