//! Concrete sub-uniform laws on [0, 1].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::idf::{dominates_cx, Dominance, IntegratedDf, PiecewiseIdf};
use crate::numerics::{EmpiricalSample, RngStream};

const MASS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// Uniform mass spread over [lo, hi].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformPiece {
    pub lo: f64,
    pub hi: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SubUniformDist {
    Uniform01,
    Beta22,
    Mixture(Mixture),
}

/// Point masses plus uniform pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MixtureSpec", into = "MixtureSpec")]
pub struct Mixture {
    atoms: Vec<Atom>,
    uniform_pieces: Vec<UniformPiece>,
    table: PiecewiseIdf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MixtureSpec {
    #[serde(default)]
    atoms: Vec<Atom>,
    #[serde(default)]
    uniform_pieces: Vec<UniformPiece>,
}

impl TryFrom<MixtureSpec> for Mixture {
    type Error = Error;

    fn try_from(spec: MixtureSpec) -> Result<Self> {
        Mixture::new(spec.atoms, spec.uniform_pieces)
    }
}

impl From<Mixture> for MixtureSpec {
    fn from(m: Mixture) -> Self {
        MixtureSpec { atoms: m.atoms, uniform_pieces: m.uniform_pieces }
    }
}

impl Mixture {
    pub fn new(atoms: Vec<Atom>, uniform_pieces: Vec<UniformPiece>) -> Result<Self> {
        for a in &atoms {
            if !(0.0..=1.0).contains(&a.location) || !(a.mass >= 0.0) {
                return Err(Error::domain(format!("atom {a:?} must sit in [0, 1] with non-negative mass")));
            }
        }
        for p in &uniform_pieces {
            if !(0.0 <= p.lo && p.lo < p.hi && p.hi <= 1.0) || !(p.mass >= 0.0) {
                return Err(Error::domain(format!(
                    "uniform piece {p:?} needs 0 <= lo < hi <= 1 and non-negative mass"
                )));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.mass).chain(uniform_pieces.iter().map(|p| p.mass)).sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::domain(format!("mixture masses sum to {total}, not 1")));
        }
        let table = mixture_table(&atoms, &uniform_pieces);
        Ok(Self { atoms, uniform_pieces, table })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn uniform_pieces(&self) -> &[UniformPiece] {
        &self.uniform_pieces
    }

    pub fn table(&self) -> &PiecewiseIdf {
        &self.table
    }

    fn cdf(&self, x: f64) -> f64 {
        mass_up_to(&self.atoms, &self.uniform_pieces, x, true)
    }

    fn cdf_left(&self, x: f64) -> f64 {
        mass_up_to(&self.atoms, &self.uniform_pieces, x, false)
    }
}

fn mass_up_to(atoms: &[Atom], pieces: &[UniformPiece], x: f64, inclusive: bool) -> f64 {
    let atoms: f64 =
        atoms.iter().filter(|a| if inclusive { a.location <= x } else { a.location < x }).map(|a| a.mass).sum();
    let spread: f64 = pieces.iter().map(|p| p.mass * ((x - p.lo) / (p.hi - p.lo)).clamp(0.0, 1.0)).sum();
    atoms + spread
}

fn mixture_table(atoms: &[Atom], pieces: &[UniformPiece]) -> PiecewiseIdf {
    let mut points: Vec<f64> = atoms
        .iter()
        .filter(|a| a.mass > 0.0)
        .map(|a| a.location)
        .chain(pieces.iter().filter(|p| p.mass > 0.0).flat_map(|p| [p.lo, p.hi]))
        .collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    let mut cdf: Vec<f64> = points.iter().map(|&x| mass_up_to(atoms, pieces, x, true)).collect();
    let mut cdf_left: Vec<f64> = points.iter().map(|&x| mass_up_to(atoms, pieces, x, false)).collect();
    cdf_left[0] = 0.0;
    // the total is 1 up to rounding; make the top exact
    let last = cdf.len() - 1;
    cdf[last] = 1.0;
    PiecewiseIdf::new(points, cdf, Some(cdf_left)).expect("consistent table")
}

impl SubUniformDist {
    /// Point mass 2α at α plus a uniform on [2α, 1]; the extremal law with P(P ≤ α) = 2α.
    pub fn p2alpha(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 0.5) {
            return Err(Error::domain(format!("alpha must lie in (0, 1/2], got {alpha}")));
        }
        let atom = Atom { location: alpha, mass: 2.0 * alpha };
        let pieces =
            if alpha < 0.5 { vec![UniformPiece { lo: 2.0 * alpha, hi: 1.0, mass: 1.0 - 2.0 * alpha }] } else { vec![] };
        Ok(SubUniformDist::Mixture(Mixture::new(vec![atom], pieces)?))
    }

    /// A single point mass; sub-uniform only at 1/2.
    pub fn point_mass(at: f64) -> Result<Self> {
        Ok(SubUniformDist::Mixture(Mixture::new(vec![Atom { location: at, mass: 1.0 }], vec![])?))
    }

    /// The α of a 𝒫_{2α} law, if this is one.
    pub fn as_p2alpha(&self) -> Option<f64> {
        let SubUniformDist::Mixture(m) = self else { return None };
        let atoms: Vec<&Atom> = m.atoms.iter().filter(|a| a.mass > 0.0).collect();
        let pieces: Vec<&UniformPiece> = m.uniform_pieces.iter().filter(|p| p.mass > 0.0).collect();
        let [atom] = atoms[..] else { return None };
        let alpha = atom.location;
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
        let matches = close(atom.mass, 2.0 * alpha)
            && match pieces[..] {
                [] => close(alpha, 0.5),
                [p] => close(p.lo, 2.0 * alpha) && close(p.hi, 1.0) && close(p.mass, 1.0 - 2.0 * alpha),
                _ => false,
            };
        matches.then_some(alpha)
    }

    /// Right-continuous CDF.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            SubUniformDist::Uniform01 => x.clamp(0.0, 1.0),
            SubUniformDist::Beta22 => {
                let t = x.clamp(0.0, 1.0);
                t * t * (3.0 - 2.0 * t)
            }
            SubUniformDist::Mixture(m) => m.cdf(x).min(1.0),
        }
    }

    /// Left limit F(x−).
    pub fn cdf_left(&self, x: f64) -> f64 {
        match self {
            SubUniformDist::Mixture(m) => m.cdf_left(x).min(1.0),
            _ => self.cdf(x),
        }
    }

    /// Point masses (empty for the continuous families).
    pub fn atoms(&self) -> Vec<Atom> {
        match self {
            SubUniformDist::Mixture(m) => m.atoms.iter().copied().filter(|a| a.mass > 0.0).collect(),
            _ => vec![],
        }
    }

    pub fn atom_locations(&self) -> Vec<f64> {
        self.atoms().iter().map(|a| a.location).collect()
    }

    /// Inverse CDF; atoms are returned verbatim.
    pub fn quantile(&self, u: f64) -> f64 {
        match self {
            SubUniformDist::Uniform01 => u,
            SubUniformDist::Beta22 => beta22_quantile(u),
            SubUniformDist::Mixture(m) => m.table.quantile(u),
        }
    }

    pub fn sample_one(&self, rng: &mut RngStream) -> f64 {
        self.quantile(rng.uniform())
    }

    /// `n` independent draws.
    pub fn sample(&self, rng: &mut RngStream, n: usize) -> Result<EmpiricalSample> {
        if n == 0 {
            return Err(Error::domain("sample size must be at least 1"));
        }
        EmpiricalSample::new((0..n).map(|_| self.sample_one(rng)).collect())
    }

    pub fn idf(&self) -> IntegratedDf {
        match self {
            SubUniformDist::Uniform01 => IntegratedDf::uniform(),
            SubUniformDist::Beta22 => IntegratedDf::beta22(),
            SubUniformDist::Mixture(m) => IntegratedDf::Piecewise(m.table.clone()),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            SubUniformDist::Uniform01 | SubUniformDist::Beta22 => 0.5,
            SubUniformDist::Mixture(m) => {
                let atoms: f64 = m.atoms.iter().map(|a| a.mass * a.location).sum();
                let pieces: f64 = m.uniform_pieces.iter().map(|p| p.mass * 0.5 * (p.lo + p.hi)).sum();
                atoms + pieces
            }
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            SubUniformDist::Uniform01 => 1.0 / 12.0,
            SubUniformDist::Beta22 => 0.05,
            SubUniformDist::Mixture(m) => {
                let mean = self.mean();
                let atoms: f64 = m.atoms.iter().map(|a| a.mass * (a.location - mean).powi(2)).sum();
                let pieces: f64 = m
                    .uniform_pieces
                    .iter()
                    .map(|p| {
                        let c = 0.5 * (p.lo + p.hi) - mean;
                        p.mass * (c * c + (p.hi - p.lo).powi(2) / 12.0)
                    })
                    .sum();
                atoms + pieces
            }
        }
    }

    /// Convex-order check against the uniform law, including the mean.
    pub fn is_sub_uniform(&self) -> Dominance {
        let mean_gap = (self.mean() - 0.5).abs();
        if mean_gap > 1e-9 {
            return Dominance { holds: false, witness: Some(1.0), max_violation: mean_gap };
        }
        dominates_cx(&self.idf(), &IntegratedDf::uniform(), 1e-9)
    }

    /// Short label used in reports.
    pub fn name(&self) -> String {
        match self {
            SubUniformDist::Uniform01 => "uniform01".into(),
            SubUniformDist::Beta22 => "beta22".into(),
            SubUniformDist::Mixture(_) => match self.as_p2alpha() {
                Some(alpha) => format!("p2alpha({alpha})"),
                None => "mixture".into(),
            },
        }
    }
}

/// Root of 3x² − 2x³ = u, via the trigonometric form of the cubic.
fn beta22_quantile(u: f64) -> f64 {
    let x = 0.5 + ((2.0 * u - 1.0).asin() / 3.0).sin();
    // one Newton step against the polynomial itself
    let f = x * x * (3.0 - 2.0 * x) - u;
    let slope = 6.0 * x * (1.0 - x);
    let polished = if slope > 1e-8 { x - f / slope } else { x };
    polished.clamp(0.0, 1.0)
}
