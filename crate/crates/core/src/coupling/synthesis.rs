//! A generative model whose posterior predictive p-value has a prescribed
//! sub-uniform law.
//!
//! Given P with law μ ≤_cx U[0, 1], pick S | P with E(S | P) = P and S
//! uniform. With θ ~ G independent of S, the family
//! U_t = F⁻¹_{S|P}[{F_{S|P}(S) + G(t)} mod 1] is uniform for every t and
//! averages back to P over t. Taking D = S and f(D, t) = −ln U_t makes the
//! conditional tail equal U_t, so the p-value of D is exactly P.

use serde::{Deserialize, Serialize};

use super::intervals::IntervalUnion;
use super::shadow::{normalize_atoms, Cell, Reservoir};
use crate::distributions::{Atom, Mixture, SubUniformDist, UniformPiece};
use crate::error::{Error, Result};
use crate::models::GenerativeModel;
use crate::numerics::{bisect_increasing, RngStream, StreamId};

/// Atom budget for general targets.
pub const MAX_ATOMS: usize = 512;
/// Atom budget for the Beta(2, 2) target.
pub const BETA22_ATOMS: usize = 256;

/// Law of the parameter θ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaLaw {
    #[default]
    Logistic,
}

impl ThetaLaw {
    pub fn cdf(&self, t: f64) -> f64 {
        match self {
            ThetaLaw::Logistic => 1.0 / (1.0 + (-t).exp()),
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        match self {
            ThetaLaw::Logistic => {
                let u = rng.uniform_open0();
                (u / (1.0 - u)).ln()
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ThetaLaw::Logistic => "logistic",
        }
    }
}

/// The law of S given one value of P.
#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    /// S = P.
    Singular(f64),
    /// Uniform on a union of intervals.
    Uniform(IntervalUnion),
}

impl Kernel {
    pub fn mean(&self) -> f64 {
        match self {
            Kernel::Singular(p) => *p,
            Kernel::Uniform(u) => u.mean(),
        }
    }

    pub fn contains(&self, s: f64) -> bool {
        match self {
            Kernel::Singular(p) => s == *p,
            Kernel::Uniform(u) => u.contains(s),
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        match self {
            Kernel::Singular(p) => *p,
            Kernel::Uniform(u) => u.quantile(rng.uniform()),
        }
    }
}

/// F⁻¹[{F(s) + G(t)} mod 1] for the kernel F; the identity for singular kernels.
///
/// A sum of exactly 1 wraps to 0.
pub fn mod1_family(kernel: &Kernel, theta_law: ThetaLaw, t: f64, s: f64) -> Result<f64> {
    match kernel {
        Kernel::Singular(p) => {
            if s != *p {
                return Err(Error::domain(format!("s = {s} is not the singular point {p}")));
            }
            Ok(s)
        }
        Kernel::Uniform(u) => {
            if !u.contains(s) {
                return Err(Error::domain(format!("s = {s} lies outside the kernel support")));
            }
            Ok(u.quantile((u.cdf(s) + theta_law.cdf(t)).fract()))
        }
    }
}

/// An atom of P together with the support of S given that atom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomKernel {
    pub location: f64,
    pub mass: f64,
    pub support: IntervalUnion,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Slot {
    Atom(usize),
    PassThrough,
}

/// Joint law of (P, S) with S uniform and E(S | P) = P.
///
/// Atoms of P carry uniform kernels; on the pass-through pieces P has
/// density one and S = P.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConditionalLawSpec", into = "ConditionalLawSpec")]
pub struct ConditionalLaw {
    atoms: Vec<AtomKernel>,
    pass_through: Vec<UniformPiece>,
    // sorted [lo, hi] cover of [0, 1] for reverse lookups
    index: Vec<(f64, f64, Slot)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ConditionalLawSpec {
    atoms: Vec<AtomKernel>,
    #[serde(default)]
    pass_through: Vec<UniformPiece>,
}

impl TryFrom<ConditionalLawSpec> for ConditionalLaw {
    type Error = Error;

    fn try_from(spec: ConditionalLawSpec) -> Result<Self> {
        ConditionalLaw::new(spec.atoms, spec.pass_through)
    }
}

impl From<ConditionalLaw> for ConditionalLawSpec {
    fn from(law: ConditionalLaw) -> Self {
        ConditionalLawSpec { atoms: law.atoms, pass_through: law.pass_through }
    }
}

impl ConditionalLaw {
    pub fn new(atoms: Vec<AtomKernel>, pass_through: Vec<UniformPiece>) -> Result<Self> {
        for piece in &pass_through {
            if !(piece.lo < piece.hi && (piece.mass - (piece.hi - piece.lo)).abs() <= 1e-12) {
                return Err(Error::domain("pass-through pieces need density one"));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.mass).sum::<f64>() + pass_through.iter().map(|p| p.mass).sum::<f64>();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!("conditional law has total mass {total}")));
        }
        let mut index: Vec<(f64, f64, Slot)> = pass_through.iter().map(|p| (p.lo, p.hi, Slot::PassThrough)).collect();
        for (i, a) in atoms.iter().enumerate() {
            index.extend(a.support.intervals().iter().map(|[lo, hi]| (*lo, *hi, Slot::Atom(i))));
        }
        index.sort_by(|a, b| a.0.total_cmp(&b.0));
        for pair in index.windows(2) {
            if pair[1].0 < pair[0].1 - 1e-9 {
                return Err(Error::domain("kernel supports overlap"));
            }
        }
        Ok(Self { atoms, pass_through, index })
    }

    /// S = P everywhere.
    pub fn singular() -> Self {
        Self::new(vec![], vec![UniformPiece { lo: 0.0, hi: 1.0, mass: 1.0 }]).expect("valid")
    }

    /// S | P = α uniform on [0, 2α]; S = P on [2α, 1].
    pub fn explicit_p2alpha(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(Error::domain(format!("alpha must lie in (0, 1/2), got {alpha}")));
        }
        let support = IntervalUnion::new(vec![[0.0, 2.0 * alpha]])?;
        let atom = AtomKernel { location: alpha, mass: 2.0 * alpha, support };
        Self::new(vec![atom], vec![UniformPiece { lo: 2.0 * alpha, hi: 1.0, mass: 1.0 - 2.0 * alpha }])
    }

    /// Kernels for a discrete P: the left-curtain shadows of its atoms in U[0, 1].
    pub fn from_atoms(atoms: &[Atom]) -> Result<Self> {
        let atoms = normalize_atoms(atoms)?;
        let total: f64 = atoms.iter().map(|a| a.mass).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!("atoms must have total mass 1, got {total}")));
        }
        let mut reservoir = Reservoir::new(vec![Cell { lo: 0.0, hi: 1.0, mass: 1.0, origin: 0 }]);
        let mut kernels = Vec::with_capacity(atoms.len());
        for a in &atoms {
            let cells = reservoir.shadow(a.location, a.mass)?;
            let support = IntervalUnion::new(cells.iter().map(|c| [c.lo, c.hi]).collect())?;
            kernels.push(AtomKernel { location: a.location, mass: a.mass, support });
        }
        Self::new(kernels, vec![])
    }

    pub fn atoms(&self) -> &[AtomKernel] {
        &self.atoms
    }

    pub fn pass_through(&self) -> &[UniformPiece] {
        &self.pass_through
    }

    /// True when S = P almost surely.
    pub fn is_singular(&self) -> bool {
        self.atoms.is_empty()
    }

    /// The law of S given P = p, if p is in the support of P.
    pub fn kernel_at(&self, p: f64) -> Option<Kernel> {
        if let Some(a) = self.atoms.iter().find(|a| a.location == p) {
            return Some(Kernel::Uniform(a.support.clone()));
        }
        self.pass_through.iter().any(|piece| piece.lo <= p && p <= piece.hi).then_some(Kernel::Singular(p))
    }

    /// The value of P and the kernel of S | P for an observed s.
    pub fn locate(&self, s: f64) -> (f64, Kernel) {
        let s = s.clamp(0.0, 1.0);
        let i = self.index.partition_point(|entry| entry.1 < s);
        let slot = match self.index.get(i) {
            Some(&(lo, _, slot)) if lo <= s => slot,
            // Rounding left a sliver uncovered; use the nearest piece.
            _ => {
                let left = i.checked_sub(1).map(|j| (s - self.index[j].1, j));
                let right = self.index.get(i).map(|e| (e.0 - s, i));
                let (_, j) = [left, right].into_iter().flatten().min_by(|a, b| a.0.total_cmp(&b.0)).expect("cover");
                self.index[j].2
            }
        };
        match slot {
            Slot::Atom(k) => {
                let a = &self.atoms[k];
                (a.location, Kernel::Uniform(a.support.clone()))
            }
            Slot::PassThrough => (s, Kernel::Singular(s)),
        }
    }

    /// max over atoms of |E(S | P = p) − p|.
    pub fn martingale_residual(&self) -> f64 {
        self.atoms.iter().map(|a| (a.support.mean() - a.location).abs()).fold(0.0, f64::max)
    }

    /// The law of P.
    pub fn p_marginal(&self) -> Result<SubUniformDist> {
        if self.atoms.is_empty() && self.pass_through.iter().all(|p| p.lo <= 0.0 && p.hi >= 1.0) {
            return Ok(SubUniformDist::Uniform01);
        }
        let atoms = self.atoms.iter().map(|a| Atom { location: a.location, mass: a.mass }).collect();
        Ok(SubUniformDist::Mixture(Mixture::new(atoms, self.pass_through.clone())?))
    }

    /// Draws S given P = p.
    pub fn sample_s(&self, p: f64, rng: &mut RngStream) -> Result<f64> {
        match self.kernel_at(p) {
            Some(kernel) => Ok(kernel.sample(rng)),
            None => Err(Error::domain(format!("p = {p} is outside the support of P"))),
        }
    }
}

/// Atoms approximating a sub-uniform law, and their KS distance to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    pub atoms: Vec<Atom>,
    pub ks_error: f64,
}

/// Keeps the atoms of `target` and splits its continuous part into cells of
/// equal mass, each replaced by a point mass at its barycentre. The result
/// is below `target` in convex order.
pub fn discretize(target: &SubUniformDist, max_atoms: usize) -> Result<Discretization> {
    let kept = target.atoms();
    let atom_mass: f64 = kept.iter().map(|a| a.mass).sum();
    let continuous_mass = 1.0 - atom_mass;
    let mut atoms = kept.clone();
    if continuous_mass > 1e-12 {
        let cells = max_atoms.saturating_sub(kept.len());
        if cells == 0 {
            return Err(Error::domain(format!("{max_atoms} atoms cannot hold the continuous part")));
        }
        let idf = target.idf();
        let cdf_c = |x: f64| target.cdf(x) - kept.iter().filter(|a| a.location <= x).map(|a| a.mass).sum::<f64>();
        let idf_c = |x: f64| idf.evaluate(x) - kept.iter().map(|a| a.mass * (x - a.location).max(0.0)).sum::<f64>();
        let cell_mass = continuous_mass / cells as f64;
        let mut cuts = vec![0.0];
        for k in 1..cells {
            cuts.push(bisect_increasing(cdf_c, k as f64 * cell_mass, 0.0, 1.0, 1e-15));
        }
        cuts.push(1.0);
        for pair in cuts.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let (fa, fb) = (cdf_c(a), cdf_c(b));
            let mass = fb - fa;
            if mass <= 0.0 {
                continue;
            }
            let location = ((b * fb - a * fa - idf_c(b) + idf_c(a)) / mass).clamp(a, b);
            atoms.push(Atom { location, mass });
        }
    }
    let mut atoms = normalize_atoms(&atoms)?;
    let total: f64 = atoms.iter().map(|a| a.mass).sum();
    for a in &mut atoms {
        a.mass /= total;
    }
    let mut ks_error: f64 = 0.0;
    let mut below = 0.0;
    for a in &atoms {
        ks_error = ks_error.max((target.cdf_left(a.location) - below).abs());
        below += a.mass;
        ks_error = ks_error.max((target.cdf(a.location) - below).abs());
    }
    Ok(Discretization { atoms, ks_error })
}

/// A generative model whose posterior predictive p-value has law `target`.
///
/// θ follows `theta_law`, D = S is uniform and independent of θ, and
/// f(D, t) = −ln U_t(D).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticPppModel {
    pub target: SubUniformDist,
    pub coupling: ConditionalLaw,
    pub theta_law: ThetaLaw,
    /// Stream recorded at construction, for replay.
    pub stream: StreamId,
    /// KS distance between the law of P actually realized and `target`.
    pub discretization_ks: f64,
}

impl SyntheticPppModel {
    /// U_t(s).
    pub fn shifted(&self, t: f64, s: f64) -> f64 {
        let (_, kernel) = self.coupling.locate(s);
        match &kernel {
            Kernel::Singular(_) => s,
            Kernel::Uniform(u) => u.quantile((u.cdf(s) + self.theta_law.cdf(t)).fract()),
        }
    }

    /// "singular", "explicit" or "shadow", by how the coupling was built.
    pub fn coupling_kind(&self) -> &'static str {
        if self.coupling.is_singular() {
            "singular"
        } else if self.coupling.pass_through().is_empty() {
            "shadow"
        } else {
            "explicit"
        }
    }
}

/// Builds a [`SyntheticPppModel`] for a sub-uniform `target`.
///
/// The uniform law uses S = P, 𝒫_{2α} uses its closed-form kernel, and
/// other targets are discretized first ([`BETA22_ATOMS`] atoms for Beta(2, 2),
/// [`MAX_ATOMS`] otherwise). Construction is deterministic; `rng` only
/// labels the model for replay.
pub fn synthesize_ppp(target: &SubUniformDist, theta_law: ThetaLaw, rng: &RngStream) -> Result<SyntheticPppModel> {
    let order = target.is_sub_uniform();
    if !order.holds {
        return Err(Error::NotSubUniform {
            witness: order.witness.unwrap_or(f64::NAN),
            violation: order.max_violation,
        });
    }
    let (coupling, discretization_ks) = match target {
        SubUniformDist::Uniform01 => (ConditionalLaw::singular(), 0.0),
        _ => match target.as_p2alpha() {
            Some(alpha) if alpha < 0.5 => (ConditionalLaw::explicit_p2alpha(alpha)?, 0.0),
            _ => {
                let budget = if *target == SubUniformDist::Beta22 { BETA22_ATOMS } else { MAX_ATOMS };
                let grid = discretize(target, budget)?;
                (ConditionalLaw::from_atoms(&grid.atoms)?, grid.ks_error)
            }
        },
    };
    let residual = coupling.martingale_residual();
    if residual > 1e-6 {
        return Err(Error::Infeasible { reason: format!("martingale residual {residual:.3e}"), witness: f64::NAN });
    }
    Ok(SyntheticPppModel { target: target.clone(), coupling, theta_law, stream: rng.id(), discretization_ks })
}

impl GenerativeModel for SyntheticPppModel {
    type Param = f64;
    type Data = f64;

    fn name(&self) -> String {
        format!("synthetic({})", self.target.name())
    }

    fn sample_prior(&self, rng: &mut RngStream) -> f64 {
        self.theta_law.sample(rng)
    }

    fn sample_data(&self, _theta: f64, rng: &mut RngStream) -> f64 {
        rng.uniform()
    }

    fn discrepancy(&self, data: f64, theta: f64) -> f64 {
        -self.shifted(theta, data).ln()
    }

    fn conditional_sf(&self, theta: f64, data: f64) -> f64 {
        self.shifted(theta, data)
    }

    fn sample_posterior(&self, _data: f64, rng: &mut RngStream) -> f64 {
        self.theta_law.sample(rng)
    }

    fn exact_ppp(&self, data: f64) -> f64 {
        self.coupling.locate(data).0
    }

    fn known_atoms(&self) -> Vec<f64> {
        self.coupling.atoms().iter().map(|a| a.location).collect()
    }
}
