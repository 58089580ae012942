//! Smoothing a discrete law inside the region where it is strictly below its
//! convex-order upper bound.
//!
//! On each connected component (l, u) of {φ_μ < φ_ν} a sequence of
//! interpolation points is built from left to right: from xⱼ, the next point
//! is the furthest x whose chord of φ_μ over [xⱼ, x] stays under φ_ν, pulled
//! back by at most a fraction β of the step so it misses every atom of μ.
//! Each atom a between consecutive points is then spread uniformly over the
//! interval centered at a that fits between them. The result μ̃ satisfies
//! φ_μ ≤ φ_μ̃ ≤ φ_ν and all of its atoms sit where φ_μ = φ_ν.

use serde::{Deserialize, Serialize};

use super::shadow::{discrete_idf, normalize_atoms};
use crate::distributions::{Atom, UniformPiece};
use crate::error::{Error, Result};
use crate::idf::{dominates_cx, IntegratedDf};
use crate::numerics::golden_minimum;

/// Gaps at or below this count as contact between φ_μ and φ_ν.
const CONTACT: f64 = 1e-12;
const SEARCH_STEPS: usize = 100;
const MAX_POINTS: usize = 100_000;
/// Retreat grid resolution, relative to the retreat interval.
const GRID_FRACTION: f64 = 1.0 / (1u64 << 20) as f64;

/// One connected component of {φ_μ < φ_ν} and its interpolation points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationRegion {
    pub lo: f64,
    pub hi: f64,
    pub points: Vec<f64>,
}

/// An atom of μ and the half-width of the centered uniform it is spread over;
/// zero means the atom is kept as is.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingKernel {
    pub atom: Atom,
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Continuization {
    pub regions: Vec<InterpolationRegion>,
    pub kernels: Vec<SmoothingKernel>,
}

impl Continuization {
    /// Atoms left untouched.
    pub fn singular_atoms(&self) -> Vec<Atom> {
        self.kernels.iter().filter(|k| k.half_width == 0.0).map(|k| k.atom).collect()
    }

    /// The absolutely continuous part of μ̃.
    pub fn pieces(&self) -> Vec<UniformPiece> {
        self.kernels
            .iter()
            .filter(|k| k.half_width > 0.0)
            .map(|k| UniformPiece {
                lo: k.atom.location - k.half_width,
                hi: k.atom.location + k.half_width,
                mass: k.atom.mass,
            })
            .collect()
    }

    /// φ_μ̃(x).
    pub fn idf(&self, x: f64) -> f64 {
        self.kernels
            .iter()
            .map(|k| {
                let a = k.atom.location;
                let h = k.half_width;
                if x <= a - h {
                    0.0
                } else if x >= a + h {
                    k.atom.mass * (x - a)
                } else {
                    k.atom.mass * (x - a + h).powi(2) / (4.0 * h)
                }
            })
            .sum()
    }
}

fn discrete_phi(atoms: &[Atom], x: f64) -> f64 {
    atoms.iter().map(|a| a.mass * (x - a.location).max(0.0)).sum()
}

/// Smooths the discrete law `mu` under the IDF `nu`; see the module docs.
pub fn continuize(mu: &[Atom], nu: &IntegratedDf, beta: f64) -> Result<Continuization> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::domain(format!("beta must lie in (0, 1), got {beta}")));
    }
    let atoms = normalize_atoms(mu)?;
    let total: f64 = atoms.iter().map(|a| a.mass).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::domain(format!("mu must have total mass 1, got {total}")));
    }
    let order = dominates_cx(&discrete_idf(&atoms)?, nu, 1e-9);
    if !order.holds {
        return Err(Error::Infeasible {
            reason: format!("mu is not below nu in convex order (gap {:.3e})", order.max_violation),
            witness: order.witness.unwrap_or(f64::NAN),
        });
    }

    let phi_mu = |x: f64| discrete_phi(&atoms, x);
    let gap = |x: f64| nu.evaluate(x) - phi_mu(x);
    let (nu_lo, nu_hi) = nu.support();
    let lower = nu_lo.min(atoms[0].location);
    let upper = nu_hi.max(atoms[atoms.len() - 1].location);

    // Between neighbouring atoms φ_μ is linear, so the gap is convex there.
    let segment_min = |a: f64, b: f64| if b > a { golden_minimum(gap, a, b).min(gap(a)).min(gap(b)) } else { gap(a) };
    let interior: Vec<bool> = atoms.iter().map(|a| gap(a.location) > CONTACT).collect();

    let mut kernels: Vec<SmoothingKernel> =
        atoms.iter().map(|&atom| SmoothingKernel { atom, half_width: 0.0 }).collect();
    let mut regions = Vec::new();
    let mut i = 0;
    while i < atoms.len() {
        if !interior[i] {
            i += 1;
            continue;
        }
        let first = i;
        while i + 1 < atoms.len() && interior[i + 1] && segment_min(atoms[i].location, atoms[i + 1].location) > CONTACT
        {
            i += 1;
        }
        let last = i;
        i += 1;

        let left_end = if first == 0 { lower } else { atoms[first - 1].location };
        let right_end = if last + 1 == atoms.len() { upper } else { atoms[last + 1].location };
        let lo = contact_toward(&gap, atoms[first].location, left_end);
        let hi = contact_toward(&gap, atoms[last].location, right_end);

        let members = &atoms[first..=last];
        let points = interpolation_points(members, lo, hi, beta, &phi_mu, nu)?;
        for (k, kernel) in kernels[first..=last].iter_mut().enumerate() {
            let a = members[k].location;
            let j = points.partition_point(|p| *p < a);
            kernel.half_width = (a - points[j - 1]).min(points[j] - a);
        }
        regions.push(InterpolationRegion { lo, hi, points });
    }
    Ok(Continuization { regions, kernels })
}

/// Walks from `inside` (gap > 0) toward `end` over a convex stretch of the gap
/// and returns where contact first happens.
fn contact_toward(gap: &impl Fn(f64) -> f64, inside: f64, end: f64) -> f64 {
    let (a, b) = if end < inside { (end, inside) } else { (inside, end) };
    let mut outer = if b > a {
        // Minimizer of the convex gap on [a, b].
        let ratio = 0.5 * (5f64.sqrt() - 1.0);
        let (mut lo, mut hi) = (a, b);
        for _ in 0..SEARCH_STEPS {
            let c = hi - ratio * (hi - lo);
            let d = lo + ratio * (hi - lo);
            if gap(c) <= gap(d) {
                hi = d;
            } else {
                lo = c;
            }
        }
        0.5 * (lo + hi)
    } else {
        end
    };
    if gap(outer) > CONTACT {
        outer = end;
    }
    let mut near = inside;
    for _ in 0..SEARCH_STEPS {
        let mid = 0.5 * (near + outer);
        if gap(mid) > CONTACT {
            near = mid;
        } else {
            outer = mid;
        }
    }
    outer
}

fn interpolation_points(
    members: &[Atom],
    lo: f64,
    hi: f64,
    beta: f64,
    phi_mu: &impl Fn(f64) -> f64,
    nu: &IntegratedDf,
) -> Result<Vec<f64>> {
    let last_atom = members[members.len() - 1].location;
    let mut points = vec![0.5 * (lo + members[0].location)];
    while points[points.len() - 1] < last_atom {
        if points.len() > MAX_POINTS {
            return Err(Error::Convergence("continuization interpolation points"));
        }
        let from = points[points.len() - 1];
        let reach = furthest_chord(from, hi, phi_mu, nu);
        if reach <= from {
            return Err(Error::Convergence("continuization chord search"));
        }
        let step = beta * (reach - from) * GRID_FRACTION;
        let floor = reach - beta * (reach - from);
        let mut candidate = reach;
        while members.iter().any(|a| (a.location - candidate).abs() < 0.5 * step) {
            candidate -= step;
        }
        if candidate < floor || candidate <= from {
            return Err(Error::Convergence("continuization retreat"));
        }
        points.push(candidate);
    }
    Ok(points)
}

/// sup{x ≤ limit : the chord of φ_μ over [from, x] stays under φ_ν}.
fn furthest_chord(from: f64, limit: f64, phi_mu: &impl Fn(f64) -> f64, nu: &IntegratedDf) -> f64 {
    let start = phi_mu(from);
    let fits = |x: f64| {
        let slope = (phi_mu(x) - start) / (x - from);
        // The excess of the chord over φ_ν is concave in y.
        let excess = |y: f64| start + slope * (y - from) - nu.evaluate(y);
        -golden_minimum(|y| -excess(y), from, x) <= 0.0 && excess(x) <= 0.0
    };
    if fits(limit) {
        return limit;
    }
    let (mut good, mut bad) = (from, limit);
    for _ in 0..SEARCH_STEPS {
        let mid = 0.5 * (good + bad);
        if mid <= good || mid >= bad {
            break;
        }
        if fits(mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    good
}
