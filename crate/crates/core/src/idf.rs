//! Integrated distribution functions φ(x) = ∫_{−∞}^x F(t) dt.
//!
//! Convex order between two laws with equal means is pointwise order of
//! their integrated distribution functions, so everything about
//! sub-uniformity reduces to comparing these curves.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::EmpiricalSample;

/// Closed-form families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Uniform on [0, 1]: φ(x) = x²/2.
    Uniform01,
    /// Beta(2, 2): φ(x) = x³ − x⁴/2.
    Beta22,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IntegratedDf {
    Analytic { family: Family },
    Piecewise(PiecewiseIdf),
}

/// A CDF that is linear between breakpoints and may jump at them.
///
/// `cdf[i]` is F(x_i) and `cdf_left[i]` is the left limit F(x_i−). On
/// (x_i, x_{i+1}) the CDF runs linearly from `cdf[i]` to `cdf_left[i + 1]`.
/// When `cdf_left` is omitted the CDF is a step function, which is what an
/// empirical sample produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PiecewiseSpec", into = "PiecewiseSpec")]
pub struct PiecewiseIdf {
    breakpoints: Vec<f64>,
    cdf: Vec<f64>,
    cdf_left: Vec<f64>,
    sample_size: Option<usize>,
    // φ at each breakpoint
    integral: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PiecewiseSpec {
    breakpoints: Vec<f64>,
    cdf: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cdf_left: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sample_size: Option<usize>,
}

impl TryFrom<PiecewiseSpec> for PiecewiseIdf {
    type Error = Error;

    fn try_from(spec: PiecewiseSpec) -> Result<Self> {
        let mut idf = PiecewiseIdf::new(spec.breakpoints, spec.cdf, spec.cdf_left)?;
        idf.sample_size = spec.sample_size;
        Ok(idf)
    }
}

impl From<PiecewiseIdf> for PiecewiseSpec {
    fn from(idf: PiecewiseIdf) -> Self {
        let step: Vec<f64> = step_left_limits(&idf.cdf);
        let cdf_left = (idf.cdf_left != step).then_some(idf.cdf_left);
        PiecewiseSpec { breakpoints: idf.breakpoints, cdf: idf.cdf, cdf_left, sample_size: idf.sample_size }
    }
}

fn step_left_limits(cdf: &[f64]) -> Vec<f64> {
    std::iter::once(0.0).chain(cdf.iter().copied()).take(cdf.len()).collect()
}

impl PiecewiseIdf {
    /// Builds the table without checking the CDF values; see [`IntegratedDf::validate`].
    pub fn new(breakpoints: Vec<f64>, cdf: Vec<f64>, cdf_left: Option<Vec<f64>>) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::domain("piecewise IDF needs at least one breakpoint"));
        }
        if cdf.len() != breakpoints.len() {
            return Err(Error::domain("breakpoints and cdf must have equal length"));
        }
        let cdf_left = cdf_left.unwrap_or_else(|| step_left_limits(&cdf));
        if cdf_left.len() != breakpoints.len() {
            return Err(Error::domain("breakpoints and cdf_left must have equal length"));
        }
        let mut integral = Vec::with_capacity(breakpoints.len());
        integral.push(0.0);
        for i in 1..breakpoints.len() {
            let width = breakpoints[i] - breakpoints[i - 1];
            let area = 0.5 * width * (cdf[i - 1] + cdf_left[i]);
            integral.push(integral[i - 1] + area);
        }
        Ok(Self { breakpoints, cdf, cdf_left, sample_size: None, integral })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn cdf_values(&self) -> &[f64] {
        &self.cdf
    }

    pub fn cdf_left_values(&self) -> &[f64] {
        &self.cdf_left
    }

    pub fn sample_size(&self) -> Option<usize> {
        self.sample_size
    }

    /// Generalized inverse inf{x : F(x) > u} for u ∈ [0, 1).
    ///
    /// A u falling inside a jump returns the breakpoint itself, bit for bit,
    /// so atoms come out exactly.
    pub fn quantile(&self, u: f64) -> f64 {
        let j = self.cdf.partition_point(|c| *c <= u);
        if j == self.cdf.len() {
            return self.breakpoints[j - 1];
        }
        if j == 0 || self.cdf_left[j] <= u {
            return self.breakpoints[j];
        }
        let (x0, x1) = (self.breakpoints[j - 1], self.breakpoints[j]);
        let (f0, f1) = (self.cdf[j - 1], self.cdf_left[j]);
        (x0 + (u - f0) / (f1 - f0) * (x1 - x0)).clamp(x0, x1)
    }

    /// Index of the last breakpoint ≤ x, if any.
    fn segment(&self, x: f64) -> Option<usize> {
        self.breakpoints.partition_point(|b| *b <= x).checked_sub(1)
    }

    fn slope(&self, i: usize) -> f64 {
        let width = self.breakpoints[i + 1] - self.breakpoints[i];
        (self.cdf_left[i + 1] - self.cdf[i]) / width
    }

    fn evaluate(&self, x: f64) -> f64 {
        let Some(i) = self.segment(x) else { return 0.0 };
        let dx = x - self.breakpoints[i];
        let last = self.breakpoints.len() - 1;
        if i == last {
            return self.integral[i] + dx * self.cdf[i];
        }
        self.integral[i] + dx * self.cdf[i] + 0.5 * dx * dx * self.slope(i)
    }

    fn cdf(&self, x: f64) -> f64 {
        let Some(i) = self.segment(x) else { return 0.0 };
        if i == self.breakpoints.len() - 1 {
            return self.cdf[i];
        }
        self.cdf[i] + (x - self.breakpoints[i]) * self.slope(i)
    }

    fn cdf_left(&self, x: f64) -> f64 {
        // index of the first breakpoint ≥ x
        let j = self.breakpoints.partition_point(|b| *b < x);
        if j < self.breakpoints.len() && self.breakpoints[j] == x {
            return self.cdf_left[j];
        }
        // strictly inside a segment the CDF is continuous
        self.cdf(x)
    }
}

/// Which defining property of an integrated distribution function failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    /// Breakpoints not finite and strictly increasing.
    Malformed,
    /// φ decreases somewhere (a negative CDF value).
    Monotonicity,
    /// φ is not convex (the CDF decreases).
    Convexity,
    /// A CDF value above one.
    DerivativeRange,
    /// φ does not vanish at −∞ or its slope does not reach one.
    Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub property: Property,
    pub location: f64,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} violated at x = {}: {}", self.property, self.location, self.detail)
    }
}

/// Outcome of a convex-order comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dominance {
    pub holds: bool,
    /// Where the violation is largest, when `holds` is false.
    pub witness: Option<f64>,
    /// max over the grid of φ_lower − φ_upper (or the mean gap if that is what failed).
    pub max_violation: f64,
}

const VALIDATION_GRID: usize = 1024;
const DOMINANCE_GRID: usize = 1024;
const ANALYTIC_TOLERANCE: f64 = 1e-9;

impl IntegratedDf {
    pub fn uniform() -> Self {
        IntegratedDf::Analytic { family: Family::Uniform01 }
    }

    pub fn beta22() -> Self {
        IntegratedDf::Analytic { family: Family::Beta22 }
    }

    pub fn point_mass(at: f64) -> Self {
        IntegratedDf::Piecewise(PiecewiseIdf::new(vec![at], vec![1.0], Some(vec![0.0])).expect("one breakpoint"))
    }

    pub fn piecewise(breakpoints: Vec<f64>, cdf: Vec<f64>, cdf_left: Option<Vec<f64>>) -> Result<Self> {
        PiecewiseIdf::new(breakpoints, cdf, cdf_left).map(IntegratedDf::Piecewise)
    }

    /// Step-function IDF of a sample: φ(x) = (1/n) Σ max(0, x − v_i).
    pub fn from_samples(sample: &EmpiricalSample) -> Self {
        let n = sample.len();
        let mut breakpoints = Vec::new();
        let mut cdf = Vec::new();
        let values = sample.values();
        let mut i = 0;
        while i < n {
            let v = values[i];
            while i < n && values[i] == v {
                i += 1;
            }
            breakpoints.push(v);
            cdf.push(i as f64 / n as f64);
        }
        let mut idf = PiecewiseIdf::new(breakpoints, cdf, None).expect("non-empty sample");
        idf.sample_size = Some(n);
        IntegratedDf::Piecewise(idf)
    }

    /// φ(x).
    pub fn evaluate(&self, x: f64) -> f64 {
        match self {
            IntegratedDf::Analytic { family } => {
                let t = x.clamp(0.0, 1.0);
                let inside = match family {
                    Family::Uniform01 => 0.5 * t * t,
                    Family::Beta22 => t * t * t - 0.5 * t * t * t * t,
                };
                inside + (x - 1.0).max(0.0)
            }
            IntegratedDf::Piecewise(p) => p.evaluate(x),
        }
    }

    /// φ⁺(x) = F(x).
    pub fn right_derivative(&self, x: f64) -> f64 {
        match self {
            IntegratedDf::Analytic { family } => {
                let t = x.clamp(0.0, 1.0);
                match family {
                    Family::Uniform01 => t,
                    Family::Beta22 => t * t * (3.0 - 2.0 * t),
                }
            }
            IntegratedDf::Piecewise(p) => p.cdf(x),
        }
    }

    /// φ⁻(x) = F(x−).
    pub fn left_derivative(&self, x: f64) -> f64 {
        match self {
            IntegratedDf::Analytic { .. } => self.right_derivative(x),
            IntegratedDf::Piecewise(p) => p.cdf_left(x),
        }
    }

    /// Smallest interval carrying all the mass.
    pub fn support(&self) -> (f64, f64) {
        match self {
            IntegratedDf::Analytic { .. } => (0.0, 1.0),
            IntegratedDf::Piecewise(p) => (p.breakpoints[0], p.breakpoints[p.breakpoints.len() - 1]),
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        match self {
            IntegratedDf::Analytic { .. } => &[],
            IntegratedDf::Piecewise(p) => p.breakpoints(),
        }
    }

    /// Number of draws behind an empirical IDF.
    pub fn sample_size(&self) -> Option<usize> {
        match self {
            IntegratedDf::Analytic { .. } => None,
            IntegratedDf::Piecewise(p) => p.sample_size,
        }
    }

    /// E(X) = hi − φ(hi) for any hi at or beyond the top of the support.
    pub fn mean(&self) -> Result<f64> {
        let (_, hi) = self.support();
        if (self.right_derivative(hi) - 1.0).abs() > 1e-12 {
            return Err(Error::domain("distribution has mass beyond its last breakpoint"));
        }
        Ok(hi - self.evaluate(hi))
    }

    /// Checks the defining properties and reports the first (leftmost) failure.
    pub fn validate(&self) -> std::result::Result<(), Violation> {
        if let IntegratedDf::Piecewise(p) = self {
            validate_table(p)?;
        }
        self.validate_on_grid()
    }

    fn validate_on_grid(&self) -> std::result::Result<(), Violation> {
        let (lo, hi) = self.support();
        let span = (hi - lo).max(1e-12);
        let grid: Vec<f64> = (0..=VALIDATION_GRID).map(|i| lo + span * i as f64 / VALIDATION_GRID as f64).collect();
        let values: Vec<f64> = grid.iter().map(|&x| self.evaluate(x)).collect();
        for i in 1..grid.len() {
            if values[i] < values[i - 1] - 1e-12 {
                return Err(Violation {
                    property: Property::Monotonicity,
                    location: grid[i],
                    detail: format!("φ drops from {} to {}", values[i - 1], values[i]),
                });
            }
            if i + 1 < grid.len() {
                let chord = 0.5 * (values[i - 1] + values[i + 1]);
                if values[i] > chord + 1e-12 {
                    return Err(Violation {
                        property: Property::Convexity,
                        location: grid[i],
                        detail: format!("midpoint value {} above chord {}", values[i], chord),
                    });
                }
            }
        }
        Ok(())
    }
}

fn validate_table(p: &PiecewiseIdf) -> std::result::Result<(), Violation> {
    let violation = |property, location, detail: String| Err(Violation { property, location, detail });
    for (i, &x) in p.breakpoints.iter().enumerate() {
        if !x.is_finite() || (i > 0 && x <= p.breakpoints[i - 1]) {
            return violation(Property::Malformed, x, "breakpoints must be finite and strictly increasing".into());
        }
    }
    if p.cdf_left[0] != 0.0 {
        return violation(
            Property::Boundary,
            p.breakpoints[0],
            format!("CDF must vanish below the first breakpoint, left limit is {}", p.cdf_left[0]),
        );
    }
    for i in 0..p.breakpoints.len() {
        let x = p.breakpoints[i];
        for (value, side) in [(p.cdf_left[i], "left limit"), (p.cdf[i], "value")] {
            if value.is_nan() || value < 0.0 {
                return violation(Property::Monotonicity, x, format!("CDF {side} {value} is negative"));
            }
            if value > 1.0 {
                return violation(Property::DerivativeRange, x, format!("CDF {side} {value} exceeds one"));
            }
        }
        if p.cdf[i] < p.cdf_left[i] {
            return violation(Property::Convexity, x, format!("CDF jumps down from {} to {}", p.cdf_left[i], p.cdf[i]));
        }
        if i + 1 < p.breakpoints.len() && p.cdf_left[i + 1] < p.cdf[i] {
            return violation(
                Property::Convexity,
                x,
                format!("CDF decreases from {} to {} after this breakpoint", p.cdf[i], p.cdf_left[i + 1]),
            );
        }
    }
    let last = p.breakpoints.len() - 1;
    if (p.cdf[last] - 1.0).abs() > 1e-12 {
        return violation(
            Property::Boundary,
            p.breakpoints[last],
            format!("CDF must reach one at the last breakpoint, got {}", p.cdf[last]),
        );
    }
    Ok(())
}

/// Default comparison tolerance: 1e-9 for exact curves, 3/√n once a sample is involved.
pub fn default_tolerance(a: &IntegratedDf, b: &IntegratedDf) -> f64 {
    [a.sample_size(), b.sample_size()]
        .into_iter()
        .flatten()
        .map(|n| 3.0 / (n as f64).sqrt())
        .fold(ANALYTIC_TOLERANCE, f64::max)
}

/// Tests `lower ≤_cx upper`: φ_lower ≤ φ_upper + tol on the grid and equal means.
///
/// The grid is the union of both breakpoint sets plus 1024 equispaced points
/// over the joint support. Piecewise curves are quadratic between their own
/// breakpoints, so for two tables the check is exact at every kink.
pub fn dominates_cx(lower: &IntegratedDf, upper: &IntegratedDf, tol: f64) -> Dominance {
    let (lo_a, hi_a) = lower.support();
    let (lo_b, hi_b) = upper.support();
    let (lo, hi) = (lo_a.min(lo_b), hi_a.max(hi_b));
    let span = hi - lo;
    let grid = lower
        .breakpoints()
        .iter()
        .chain(upper.breakpoints())
        .copied()
        .chain((0..=DOMINANCE_GRID).map(|i| lo + span * i as f64 / DOMINANCE_GRID as f64));

    let mut worst = f64::NEG_INFINITY;
    let mut witness = lo;
    for x in grid {
        let gap = lower.evaluate(x) - upper.evaluate(x);
        if gap > worst {
            worst = gap;
            witness = x;
        }
    }
    if worst > tol {
        return Dominance { holds: false, witness: Some(witness), max_violation: worst };
    }
    // beyond both supports the curves are x − mean, so the means must agree
    let mean_gap = (upper.evaluate(hi) - lower.evaluate(hi)).abs();
    if mean_gap > tol {
        return Dominance { holds: false, witness: Some(hi), max_violation: mean_gap };
    }
    Dominance { holds: true, witness: None, max_violation: worst.max(0.0) }
}
