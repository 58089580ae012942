//! Calibration bounds for posterior predictive p-values.
//!
//! A sub-uniform p-value P satisfies P(P ≤ α) ≤ 2α; the functions here turn
//! that fact into conservative answers for a single p-value, for Fisher's
//! combination of many, and for their minimum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::idf::IntegratedDf;
use crate::numerics::{chi2_quantile, chi2_sf, golden_minimum, kahan_sum};

/// p-values of exactly zero are replaced by this before taking logs.
pub const ZERO_PVALUE_FLOOR: f64 = 1e-300;

const WEIGHT_TOLERANCE: f64 = 1e-12;

/// Largest h with F_X(α) ≤ h for every X ≤_cx Y, given φ_Y.
///
/// h = min(1, max{w ≥ 0 : w(x − α) ≤ φ_Y(x) for all x}). The feasible weights
/// form an interval [0, w*], found by bisection; each feasibility test
/// minimizes the convex gap φ_Y(x) − w(x − α) by golden-section search.
pub fn h_bound(alpha: f64, phi_y: &IntegratedDf) -> f64 {
    if feasible(alpha, phi_y, 1.0) {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > WEIGHT_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if feasible(alpha, phi_y, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn feasible(alpha: f64, phi_y: &IntegratedDf, w: f64) -> bool {
    // left of α the line is negative; right of the support the gap has
    // slope 1 − w ≥ 0, so the minimum lies in [α, hi]
    let (_, hi) = phi_y.support();
    if alpha >= hi {
        return true;
    }
    let gap = |x: f64| phi_y.evaluate(x) - w * (x - alpha);
    let mut best = gap(alpha).min(gap(hi));
    for &b in phi_y.breakpoints() {
        if b > alpha && b < hi {
            best = best.min(gap(b));
        }
    }
    best = best.min(golden_minimum(gap, alpha, hi));
    best >= 0.0
}

/// min(1, 2p): the calibrated version of a single posterior predictive p-value.
pub fn conservative_single(p: f64) -> Result<f64> {
    check_probability(p, "p")?;
    Ok((2.0 * p).min(1.0))
}

fn check_probability(p: f64, name: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("{name} must lie in [0, 1], got {p}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherScore {
    /// −2 Σ ln pᵢ.
    pub score: f64,
    pub m: usize,
    /// How many zero p-values were floored at [`ZERO_PVALUE_FLOOR`].
    pub floored: usize,
}

/// Fisher's statistic −2 Σ ln pᵢ.
pub fn fisher_score(pvals: &[f64]) -> Result<FisherScore> {
    if pvals.is_empty() {
        return Err(Error::domain("Fisher's score needs at least one p-value"));
    }
    let mut floored = 0;
    let mut logs = Vec::with_capacity(pvals.len());
    for &p in pvals {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(format!("p-values must lie in (0, 1], got {p}")));
        }
        if p == 0.0 {
            floored += 1;
            logs.push(ZERO_PVALUE_FLOOR.ln());
        } else {
            logs.push(p.ln());
        }
    }
    let score = -2.0 * kahan_sum(logs.into_iter());
    Ok(FisherScore { score: score.max(0.0), m: pvals.len(), floored })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherReport {
    pub score: f64,
    pub m: usize,
    /// Tail probability under independent uniform p-values.
    pub nominal_p: f64,
    pub bound_shifted_chi2: f64,
    pub bound_cantelli: Option<f64>,
    pub bound_mgf: Option<f64>,
    /// Why the Cantelli and MGF bounds are missing, when they are.
    pub inapplicable_reason: Option<String>,
    /// Minimum of the applicable bounds, capped at 1.
    pub conservative_p: f64,
    pub floored_zero_pvalues: usize,
    pub warning: Option<String>,
}

/// Conservative tail bounds for Fisher's score of m sub-uniform p-values.
///
/// * shifted χ²: S_{2m}(x − 2m ln 2)
/// * Cantelli: m / (m + ((x − 2m)/2)²), for x ≥ 2m
/// * moment generating function: exp{m − x/2 − m ln(2m/x)}, for x ≥ 2m
pub fn fisher_bounds(score: f64, m: usize) -> Result<FisherReport> {
    if !(score >= 0.0) || score.is_infinite() {
        return Err(Error::domain(format!("Fisher's score must be finite and non-negative, got {score}")));
    }
    if m == 0 {
        return Err(Error::domain("m must be at least 1"));
    }
    let mf = m as f64;
    let dof = 2.0 * mf;
    let nominal_p = chi2_sf(score, dof)?;
    let bound_shifted_chi2 = chi2_sf((score - dof * std::f64::consts::LN_2).max(0.0), dof)?;

    let (bound_cantelli, bound_mgf, inapplicable_reason) = if score >= dof {
        let excess = 0.5 * (score - dof);
        let cantelli = mf / (mf + excess * excess);
        // m{ln(1 + δ) − δ} with δ = x/(2m) − 1, stable for m in the billions
        let delta = score / dof - 1.0;
        let mgf = (mf * (delta.ln_1p() - delta)).exp();
        (Some(cantelli.min(1.0)), Some(mgf.min(1.0)), None)
    } else {
        (None, None, Some(format!("Cantelli and MGF bounds hold only for score >= 2m = {dof}")))
    };

    let conservative_p =
        [Some(bound_shifted_chi2), bound_cantelli, bound_mgf].into_iter().flatten().fold(1.0, f64::min);

    Ok(FisherReport {
        score,
        m,
        nominal_p,
        bound_shifted_chi2,
        bound_cantelli,
        bound_mgf,
        inapplicable_reason,
        conservative_p,
        floored_zero_pvalues: 0,
        warning: None,
    })
}

/// Score and bounds in one step, carrying the zero-flooring flag through.
pub fn fisher_report(pvals: &[f64]) -> Result<FisherReport> {
    let FisherScore { score, m, floored } = fisher_score(pvals)?;
    let mut report = fisher_bounds(score, m)?;
    report.floored_zero_pvalues = floored;
    if floored > 0 {
        report.warning = Some(format!(
            "{floored} p-value(s) equal to 0 were floored at {ZERO_PVALUE_FLOOR:e}; the score is a lower bound"
        ));
    }
    Ok(report)
}

/// Critical value t with P(−2 Σ ln Uᵢ ≥ t) = α for m independent uniforms.
pub fn fisher_critical(alpha: f64, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::domain("m must be at least 1"));
    }
    chi2_quantile(alpha, 2.0 * m as f64)
}

/// P{min Pᵢ ≤ x} ≤ 1 − (1 − 2x)^m for m independent sub-uniform p-values.
pub fn minp_bound(x: f64, m: usize) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::domain(format!("x must be a probability, got {x}")));
    }
    if m == 0 {
        return Err(Error::domain("m must be at least 1"));
    }
    if x >= 0.5 {
        return Ok(1.0);
    }
    Ok(-(m as f64 * (-2.0 * x).ln_1p()).exp_m1())
}

/// 1 − (1 − x)^m: the min-p tail for independent uniforms.
pub fn minp_nominal(x: f64, m: usize) -> Result<f64> {
    check_probability(x, "x")?;
    if m == 0 {
        return Err(Error::domain("m must be at least 1"));
    }
    Ok(-(m as f64 * (-x).ln_1p()).exp_m1())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinpLimit {
    /// 1 − {2(1 − q)^{1/m} − 1}^m, or `None` when the base is negative.
    pub bound_in_q: Option<f64>,
    /// 2q − q², the m → ∞ limit.
    pub limit: f64,
}

/// Rejection probability when min Pᵢ is compared to the Šidák threshold for level q.
pub fn minp_limit_check(q: f64, m: usize) -> Result<MinpLimit> {
    if !(0.0..1.0).contains(&q) {
        return Err(Error::domain(format!("q must lie in [0, 1), got {q}")));
    }
    if m == 0 {
        return Err(Error::domain("m must be at least 1"));
    }
    let mf = m as f64;
    // 2(1 − q)^{1/m} − 1 = 1 + 2 expm1(ln(1 − q)/m)
    let shift = 2.0 * ((-q).ln_1p() / mf).exp_m1();
    let bound_in_q = (1.0 + shift >= 0.0).then(|| -(mf * shift.ln_1p()).exp_m1());
    Ok(MinpLimit { bound_in_q, limit: 2.0 * q - q * q })
}
