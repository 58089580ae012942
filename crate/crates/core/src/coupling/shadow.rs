//! Martingale transport by successive shadows (the left-curtain coupling).
//!
//! Source atoms are handled from left to right. Each one takes, from what is
//! left of the destination, the contiguous window in quantile coordinates
//! whose mass equals the atom's mass and whose mean equals its location.
//! That window is the atom's shadow: the least spread-out piece of the
//! destination it can be mapped onto while keeping E(Y | X) = X. The
//! destination can be discrete (point cells) or have uniform density on
//! intervals; the shadows of a discrete source into a density are then
//! uniform on unions of intervals.

use serde::{Deserialize, Serialize};

use crate::distributions::Atom;
use crate::error::{Error, Result};
use crate::idf::{dominates_cx, IntegratedDf};

const MEAN_TOLERANCE: f64 = 1e-9;
const SLIVER: f64 = 1e-15;
const BISECTION_STEPS: usize = 200;

/// Mass spread uniformly over [lo, hi]; a point mass when lo == hi.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Cell {
    pub lo: f64,
    pub hi: f64,
    pub mass: f64,
    /// Index of the destination atom or interval this cell came from.
    pub origin: usize,
}

impl Cell {
    fn position(&self, fraction: f64) -> f64 {
        if self.hi == self.lo {
            self.lo
        } else {
            self.lo + fraction * (self.hi - self.lo)
        }
    }

    /// Sub-cell between mass fractions a and b of this cell.
    fn slice(&self, a: f64, b: f64) -> Cell {
        Cell { lo: self.position(a), hi: self.position(b), mass: (b - a) * self.mass, origin: self.origin }
    }

    fn first_moment(&self) -> f64 {
        self.mass * 0.5 * (self.lo + self.hi)
    }
}

/// What is left of the destination.
#[derive(Debug, Clone)]
pub(crate) struct Reservoir {
    cells: Vec<Cell>,
}

impl Reservoir {
    pub fn new(mut cells: Vec<Cell>) -> Self {
        cells.retain(|c| c.mass > 0.0);
        cells.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(a.hi.total_cmp(&b.hi)));
        Self { cells }
    }

    pub fn total(&self) -> f64 {
        self.cells.iter().map(|c| c.mass).sum()
    }

    /// Visits the parts of cells lying in the mass window [start, start + width].
    fn visit_window(&self, start: f64, width: f64, mut visit: impl FnMut(usize, f64, f64)) {
        let end = start + width;
        let mut offset = 0.0;
        for (i, c) in self.cells.iter().enumerate() {
            let (c0, c1) = (offset, offset + c.mass);
            offset = c1;
            if c1 <= start {
                continue;
            }
            if c0 >= end {
                break;
            }
            let a = ((start - c0) / c.mass).clamp(0.0, 1.0);
            let b = ((end - c0) / c.mass).clamp(0.0, 1.0);
            if b > a {
                visit(i, a, b);
            }
        }
    }

    fn window_mean(&self, start: f64, width: f64) -> f64 {
        let mut moment = 0.0;
        let mut mass = 0.0;
        self.visit_window(start, width, |i, a, b| {
            let piece = self.cells[i].slice(a, b);
            moment += piece.first_moment();
            mass += piece.mass;
        });
        moment / mass
    }

    fn take_window(&mut self, start: f64, width: f64) -> Vec<Cell> {
        let mut taken = Vec::new();
        let mut remaining = Vec::with_capacity(self.cells.len() + 2);
        let mut touched = vec![None; self.cells.len()];
        self.visit_window(start, width, |i, a, b| touched[i] = Some((a, b)));
        for (cell, window) in self.cells.iter().zip(touched) {
            match window {
                None => remaining.push(*cell),
                Some((a, b)) => {
                    taken.push(cell.slice(a, b));
                    for (x, y) in [(0.0, a), (b, 1.0)] {
                        let rest = cell.slice(x, y);
                        if rest.mass > SLIVER {
                            remaining.push(rest);
                        }
                    }
                }
            }
        }
        self.cells = remaining;
        taken
    }

    /// Removes and returns the shadow of `mass` at `location`.
    pub fn shadow(&mut self, location: f64, mass: f64) -> Result<Vec<Cell>> {
        let total = self.total();
        let width = mass.min(total);
        if width <= 0.0 {
            return Ok(Vec::new());
        }
        let slack = total - width;
        let leftmost = self.window_mean(0.0, width);
        let rightmost = self.window_mean(slack, width);
        if location < leftmost - MEAN_TOLERANCE || location > rightmost + MEAN_TOLERANCE {
            return Err(Error::Infeasible {
                reason: format!(
                    "no window of mass {width} in the remaining destination has mean {location} \
                     (possible means span [{leftmost}, {rightmost}])"
                ),
                witness: location,
            });
        }
        let (mut lo, mut hi) = (0.0, slack);
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.window_mean(mid, width) < location {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let start = if (self.window_mean(lo, width) - location).abs() <= (self.window_mean(hi, width) - location).abs()
        {
            lo
        } else {
            hi
        };
        Ok(self.take_window(start, width))
    }
}

/// Discrete martingale coupling: `mass[i][j]` moves from source i to destination j.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub source: Vec<Atom>,
    pub destination: Vec<Atom>,
    pub mass: Vec<Vec<f64>>,
}

impl TransportPlan {
    pub fn row_sums(&self) -> Vec<f64> {
        self.mass.iter().map(|row| row.iter().sum()).collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.destination.len()).map(|j| self.mass.iter().map(|row| row[j]).sum()).collect()
    }

    /// E(Y | X = xᵢ) for each source atom.
    pub fn row_means(&self) -> Vec<f64> {
        self.mass
            .iter()
            .map(|row| {
                let total: f64 = row.iter().sum();
                row.iter().zip(&self.destination).map(|(m, d)| m * d.location).sum::<f64>() / total
            })
            .collect()
    }

    /// Largest |E(Y | X = xᵢ) − xᵢ|.
    pub fn martingale_residual(&self) -> f64 {
        self.row_means().iter().zip(&self.source).map(|(m, s)| (m - s.location).abs()).fold(0.0, f64::max)
    }
}

/// Merges equal locations, drops empty atoms and sorts.
pub(crate) fn normalize_atoms(atoms: &[Atom]) -> Result<Vec<Atom>> {
    if atoms.iter().any(|a| !a.location.is_finite() || !(a.mass >= 0.0)) {
        return Err(Error::domain("atoms need finite locations and non-negative masses"));
    }
    let mut sorted: Vec<Atom> = atoms.iter().copied().filter(|a| a.mass > 0.0).collect();
    if sorted.is_empty() {
        return Err(Error::domain("a distribution needs positive mass"));
    }
    sorted.sort_by(|a, b| a.location.total_cmp(&b.location));
    let mut merged: Vec<Atom> = Vec::with_capacity(sorted.len());
    for a in sorted {
        match merged.last_mut() {
            Some(last) if last.location == a.location => last.mass += a.mass,
            _ => merged.push(a),
        }
    }
    Ok(merged)
}

/// IDF of a finite discrete law.
pub fn discrete_idf(atoms: &[Atom]) -> Result<IntegratedDf> {
    let atoms = normalize_atoms(atoms)?;
    let total: f64 = atoms.iter().map(|a| a.mass).sum();
    let mut cdf = Vec::with_capacity(atoms.len());
    let mut acc = 0.0;
    for a in &atoms {
        acc += a.mass / total;
        cdf.push(acc);
    }
    let last = cdf.len() - 1;
    cdf[last] = 1.0;
    IntegratedDf::piecewise(atoms.iter().map(|a| a.location).collect(), cdf, None)
}

/// A martingale coupling of two finite discrete laws with source ≤_cx destination.
pub fn martingale_transport(source: &[Atom], destination: &[Atom]) -> Result<TransportPlan> {
    let source = normalize_atoms(source)?;
    let destination = normalize_atoms(destination)?;
    let total_source: f64 = source.iter().map(|a| a.mass).sum();
    let total_destination: f64 = destination.iter().map(|a| a.mass).sum();
    if (total_source - total_destination).abs() > 1e-12 {
        return Err(Error::domain(format!(
            "source and destination masses differ ({total_source} vs {total_destination})"
        )));
    }
    let order = dominates_cx(&discrete_idf(&source)?, &discrete_idf(&destination)?, MEAN_TOLERANCE);
    if !order.holds {
        return Err(Error::Infeasible {
            reason: format!("source is not below destination in convex order (gap {:.3e})", order.max_violation),
            witness: order.witness.unwrap_or(f64::NAN),
        });
    }
    let mut reservoir = Reservoir::new(
        destination
            .iter()
            .enumerate()
            .map(|(j, d)| Cell { lo: d.location, hi: d.location, mass: d.mass, origin: j })
            .collect(),
    );
    let mut mass = vec![vec![0.0; destination.len()]; source.len()];
    for (i, s) in source.iter().enumerate() {
        for piece in reservoir.shadow(s.location, s.mass)? {
            mass[i][piece.origin] += piece.mass;
        }
    }
    Ok(TransportPlan { source, destination, mass })
}
