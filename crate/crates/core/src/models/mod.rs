//! Generative models with computable posterior predictive p-values.
//!
//! A model supplies a prior over a parameter θ, a sampler for data D given
//! θ, a discrepancy f(D, θ) and the exact conditional tail
//! Q(θ, D) = P{f(D*, θ) ≥ f(D, θ) | θ, D}. The posterior predictive p-value
//! is then P = E{Q(θ, D) | D}.

mod classical;
mod lasso;
mod port;
mod ruschendorf;
mod simplex;

use std::fmt::Debug;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::SubUniformDist;
use crate::error::{Error, Result};
use crate::idf::{dominates_cx, IntegratedDf};
use crate::numerics::{ks_statistic_with_jumps, EmpiricalSample, RngStream, StreamId};

pub use classical::ClassicalModel;
pub use lasso::{LassoModel, PowerSurvival, Rotation};
pub use port::{PortModel, PortPosterior};
pub use ruschendorf::{ruschendorf_sample, ruschendorf_value};
pub use simplex::SimplexModel;

/// Samples closer than this to a known atom of P are treated as that atom.
pub const ATOM_TOLERANCE: f64 = 1e-9;

/// Replicates handled per random substream in parallel loops.
pub const BATCH_SIZE: usize = 4096;

pub trait GenerativeModel: Send + Sync {
    type Param: Copy + Send + Sync + Debug;
    type Data: Copy + Send + Sync + Debug;

    fn name(&self) -> String;
    fn sample_prior(&self, rng: &mut RngStream) -> Self::Param;
    fn sample_data(&self, theta: Self::Param, rng: &mut RngStream) -> Self::Data;
    fn discrepancy(&self, data: Self::Data, theta: Self::Param) -> f64;
    /// P{f(D*, θ) ≥ f(D, θ) | θ, D} with D* a fresh draw given θ.
    fn conditional_sf(&self, theta: Self::Param, data: Self::Data) -> f64;
    fn sample_posterior(&self, data: Self::Data, rng: &mut RngStream) -> Self::Param;
    /// E{Q(θ, D) | D}.
    fn exact_ppp(&self, data: Self::Data) -> f64;

    /// Point masses of P known in closed form, used to undo rounding noise.
    fn known_atoms(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Models whose posterior has finite support.
pub trait FinitePosterior: GenerativeModel {
    fn posterior(&self, data: Self::Data) -> Posterior<Self::Param>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Posterior<T> {
    pub support: Vec<T>,
    pub weights: Vec<f64>,
}

impl<T: Copy> Posterior<T> {
    /// Normalizes non-negative weights.
    pub fn from_weights(support: Vec<T>, weights: Vec<f64>) -> Self {
        let total: f64 = weights.iter().sum();
        Posterior { support, weights: weights.into_iter().map(|w| w / total).collect() }
    }

    pub fn sample(&self, rng: &mut RngStream) -> T {
        self.support[rng.categorical(&self.weights)]
    }

    pub fn expectation(&self, f: impl Fn(T) -> f64) -> f64 {
        self.support.iter().zip(&self.weights).map(|(&t, &w)| w * f(t)).sum()
    }

    pub fn weight_of(&self, theta: T) -> f64
    where
        T: PartialEq,
    {
        self.support.iter().zip(&self.weights).filter(|(t, _)| **t == theta).map(|(_, w)| w).sum()
    }
}

/// Σ_θ p(θ | D) Q(θ, D) over a finite posterior.
pub fn finite_ppp<M: FinitePosterior + ?Sized>(model: &M, data: M::Data) -> f64 {
    model.posterior(data).expectation(|theta| model.conditional_sf(theta, data))
}

/// Realized p-values from repeated (θ, D) draws.
#[derive(Debug, Clone)]
pub struct FrequencyRun {
    pub pvalues: EmpiricalSample,
    pub n: usize,
    pub stream: StreamId,
    pub model_id: String,
}

/// n replicates of θ ~ prior, D ~ model, P = exact_ppp(D).
///
/// Replicates are split into fixed batches of [`BATCH_SIZE`], each driven by
/// its own substream of `rng`, so the result does not depend on the number
/// of worker threads.
pub fn frequency_run<M: GenerativeModel>(model: &M, n: usize, rng: &RngStream) -> Result<FrequencyRun> {
    let values = parallel_replicates(n, rng, |r| {
        let theta = model.sample_prior(r);
        let data = model.sample_data(theta, r);
        model.exact_ppp(data)
    })?;
    let atoms = model.known_atoms();
    let pvalues = EmpiricalSample::new(values)?.snapped(&atoms, ATOM_TOLERANCE);
    Ok(FrequencyRun { pvalues, n, stream: rng.id(), model_id: model.name() })
}

/// Writes p-values one per line, without a header.
pub fn write_pvalues(path: impl AsRef<Path>, pvalues: &[f64]) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for p in pvalues {
        writer.write_record([p.to_string()])?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads p-values written one per line; blank lines are skipped.
pub fn read_pvalues(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path)?;
    let mut values = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let Some(field) = record.get(0).filter(|f| !f.is_empty()) else { continue };
        let value: f64 =
            field.parse().map_err(|_| Error::domain(format!("line {}: '{field}' is not a number", line + 1)))?;
        values.push(value);
    }
    Ok(values)
}

/// Runs `draw` n times over deterministic parallel batches.
pub fn parallel_replicates<F>(n: usize, rng: &RngStream, draw: F) -> Result<Vec<f64>>
where
    F: Fn(&mut RngStream) -> f64 + Sync,
{
    if n == 0 {
        return Err(Error::domain("replicate count must be at least 1"));
    }
    let batches = n.div_ceil(BATCH_SIZE);
    let chunks: Vec<Vec<f64>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut r = rng.substream(b as u64);
            let len = BATCH_SIZE.min(n - b * BATCH_SIZE);
            (0..len).map(|_| draw(&mut r)).collect()
        })
        .collect();
    Ok(chunks.concat())
}

/// Standard levels at which tail frequencies are reported.
pub const REPORT_LEVELS: [f64; 4] = [0.01, 0.05, 0.1, 0.25];

const ECDF_POINTS: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFrequency {
    pub alpha: f64,
    /// Empirical P(P ≤ α).
    pub frequency: f64,
    /// The sub-uniform ceiling 2α (capped at 1).
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubUniformCheck {
    pub holds: bool,
    pub tolerance: f64,
    pub max_violation: f64,
    pub witness: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub tails: Vec<TailFrequency>,
    /// Empirical CDF at x_i = i/511.
    pub ecdf: Vec<[f64; 2]>,
    pub sub_uniform: SubUniformCheck,
    pub reference: Option<ReferenceFit>,
}

/// Comparison against a reference law (typically 𝒫_{2α}).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceFit {
    pub name: String,
    pub ks: f64,
    pub atoms: Vec<AtomFrequency>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomFrequency {
    pub location: f64,
    pub expected: f64,
    pub observed: f64,
}

/// Kolmogorov–Smirnov distance and atom frequencies against `reference`.
pub fn reference_fit(sample: &EmpiricalSample, reference: &SubUniformDist) -> ReferenceFit {
    let snapped = sample.snapped(&reference.atom_locations(), ATOM_TOLERANCE);
    let ks = ks_statistic_with_jumps(&snapped, |x| reference.cdf(x), |x| reference.cdf_left(x));
    let atoms = reference
        .atoms()
        .iter()
        .map(|a| AtomFrequency {
            location: a.location,
            expected: a.mass,
            observed: snapped.fraction_near(a.location, 0.0),
        })
        .collect();
    ReferenceFit { name: reference.name(), ks, atoms }
}

/// Empirical sub-uniformity: φ_emp ≤ x²/2 + 3/√n and mean 1/2.
pub fn empirical_sub_uniformity(sample: &EmpiricalSample) -> SubUniformCheck {
    let idf = IntegratedDf::from_samples(sample);
    let tolerance = 3.0 / (sample.len() as f64).sqrt();
    let d = dominates_cx(&idf, &IntegratedDf::uniform(), tolerance);
    SubUniformCheck { holds: d.holds, tolerance, max_violation: d.max_violation, witness: d.witness }
}

/// Summary statistics of a p-value sample.
pub fn summarize(sample: &EmpiricalSample, extra_level: Option<f64>, reference: Option<&SubUniformDist>) -> RunSummary {
    let mut levels: Vec<f64> = REPORT_LEVELS.to_vec();
    if let Some(a) = extra_level {
        if !levels.contains(&a) {
            levels.push(a);
            levels.sort_by(f64::total_cmp);
        }
    }
    let tails = levels
        .into_iter()
        .map(|alpha| TailFrequency { alpha, frequency: sample.ecdf(alpha), bound: (2.0 * alpha).min(1.0) })
        .collect();
    let ecdf = (0..ECDF_POINTS)
        .map(|i| {
            let x = i as f64 / (ECDF_POINTS - 1) as f64;
            [x, sample.ecdf(x)]
        })
        .collect();
    RunSummary {
        n: sample.len(),
        mean: sample.mean(),
        variance: sample.variance(),
        tails,
        ecdf,
        sub_uniform: empirical_sub_uniformity(sample),
        reference: reference.map(|r| reference_fit(sample, r)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replicates_do_not_depend_on_thread_count() {
        let rng = RngStream::new(3, 0);
        let draw = |r: &mut RngStream| r.uniform();
        let wide = parallel_replicates(10_000, &rng, draw).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let narrow = pool.install(|| parallel_replicates(10_000, &rng, draw).unwrap());
        assert_eq!(wide, narrow);
        assert_eq!(wide.len(), 10_000);
    }

    #[test]
    fn posterior_helpers() {
        let p = Posterior::from_weights(vec![0usize, 1], vec![1.0, 3.0]);
        assert_eq!(p.weights, vec![0.25, 0.75]);
        assert_eq!(p.expectation(|t| t as f64), 0.75);
        assert_eq!(p.weight_of(1), 0.75);
    }

    #[test]
    fn summary_of_uniform_grid() {
        let s = EmpiricalSample::new((0..10_000).map(|i| (i as f64 + 0.5) / 1e4).collect()).unwrap();
        let summary = summarize(&s, Some(0.2), None);
        assert!((summary.mean - 0.5).abs() < 1e-12);
        assert_eq!(summary.tails.len(), 5);
        assert_eq!(summary.ecdf.len(), 512);
        assert!(summary.sub_uniform.holds);
    }

    #[test]
    fn pvalue_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let values = [0.1, 1.0 / 3.0, 1e-300, 1.0];
        write_pvalues(&path, &values).unwrap();
        assert_eq!(read_pvalues(&path).unwrap(), values);
        std::fs::write(&path, "0.5\nabc\n").unwrap();
        assert!(matches!(read_pvalues(&path), Err(Error::Domain(_))));
        assert!(read_pvalues(dir.path().join("missing.csv")).unwrap_err().is_io());
    }
}
