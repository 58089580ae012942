use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{finite_ppp, FinitePosterior, GenerativeModel, Posterior};
use crate::error::{Error, Result};
use crate::numerics::RngStream;

const PMF_TOLERANCE: f64 = 1e-9;

/// How the posterior over applications is obtained from an observed port.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PortPosterior {
    /// The same weights whatever the port, standing in for a classifier that
    /// barely reacts to it.
    ///
    /// Such a posterior is not the Bayes posterior of the model, so the
    /// resulting p-value is not guaranteed to be sub-uniform.
    Fixed { weights: Vec<f64> },
    /// p(θ | π) ∝ prior(θ) h(π, θ).
    Bayes,
}

/// Discrete model of network ports: application θ emits port π with
/// probability h(π, θ).
///
/// The discrepancy is −h(π, θ), so a replicate port is at least as extreme
/// when it is no more probable than the observed one, and
/// Q(θ, π) = Σ_j h(j, θ) 𝕀{h(j, θ) ≤ h(π, θ)}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortModel {
    pmfs: Vec<Vec<f64>>,
    prior: Vec<f64>,
    posterior: PortPosterior,
}

impl PortModel {
    pub fn new(pmfs: Vec<Vec<f64>>, prior: Vec<f64>, posterior: PortPosterior) -> Result<Self> {
        if pmfs.is_empty() {
            return Err(Error::domain("port model needs at least one application"));
        }
        let ports = pmfs[0].len();
        for (theta, pmf) in pmfs.iter().enumerate() {
            check_pmf(pmf, &format!("pmf of application {theta}"))?;
            if pmf.len() != ports {
                return Err(Error::domain("every application needs a probability for every port"));
            }
        }
        check_pmf(&prior, "prior")?;
        if prior.len() != pmfs.len() {
            return Err(Error::domain("prior length must equal the number of applications"));
        }
        if let PortPosterior::Fixed { weights } = &posterior {
            check_pmf(weights, "fixed posterior")?;
            if weights.len() != pmfs.len() {
                return Err(Error::domain("fixed posterior length must equal the number of applications"));
            }
        }
        Ok(Self { pmfs, prior, posterior })
    }

    /// Uniform prior over applications.
    pub fn with_uniform_prior(pmfs: Vec<Vec<f64>>, posterior: PortPosterior) -> Result<Self> {
        let n = pmfs.len().max(1);
        Self::new(pmfs, vec![1.0 / n as f64; n], posterior)
    }

    /// Reads one pmf per line (rows are applications, columns are ports).
    pub fn pmfs_from_csv(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
        let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path)?;
        let mut pmfs = Vec::new();
        for record in reader.records() {
            let record = record?;
            let row = record
                .iter()
                .map(|field| field.parse::<f64>().map_err(|_| Error::domain(format!("not a probability: {field:?}"))))
                .collect::<Result<Vec<f64>>>()?;
            pmfs.push(row);
        }
        Ok(pmfs)
    }

    pub fn applications(&self) -> usize {
        self.pmfs.len()
    }

    pub fn ports(&self) -> usize {
        self.pmfs[0].len()
    }

    pub fn pmf(&self, theta: usize) -> &[f64] {
        &self.pmfs[theta]
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    /// Marginal probability of each port.
    pub fn port_marginal(&self) -> Vec<f64> {
        (0..self.ports()).map(|j| self.prior.iter().zip(&self.pmfs).map(|(w, h)| w * h[j]).sum()).collect()
    }

    /// The exact law of P as (value, probability) pairs, merged and sorted.
    pub fn ppp_distribution(&self) -> Vec<(f64, f64)> {
        let mut law: Vec<(f64, f64)> =
            self.port_marginal().into_iter().enumerate().map(|(j, mass)| (self.exact_ppp(j), mass)).collect();
        law.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(law.len());
        for (value, mass) in law {
            match merged.last_mut() {
                Some(last) if last.0 == value => last.1 += mass,
                _ => merged.push((value, mass)),
            }
        }
        merged
    }
}

fn check_pmf(pmf: &[f64], what: &str) -> Result<()> {
    if pmf.is_empty() || pmf.iter().any(|p| !(*p >= 0.0)) {
        return Err(Error::domain(format!("{what} must be a non-empty vector of non-negative numbers")));
    }
    let total: f64 = pmf.iter().sum();
    if (total - 1.0).abs() > PMF_TOLERANCE {
        return Err(Error::domain(format!("{what} sums to {total}, not 1")));
    }
    Ok(())
}

impl GenerativeModel for PortModel {
    type Param = usize;
    type Data = usize;

    fn name(&self) -> String {
        let kind = match self.posterior {
            PortPosterior::Fixed { .. } => "fixed",
            PortPosterior::Bayes => "bayes",
        };
        format!("port(apps={}, ports={}, posterior={kind})", self.applications(), self.ports())
    }

    fn sample_prior(&self, rng: &mut RngStream) -> usize {
        rng.categorical(&self.prior)
    }

    fn sample_data(&self, theta: usize, rng: &mut RngStream) -> usize {
        rng.categorical(&self.pmfs[theta])
    }

    fn discrepancy(&self, port: usize, theta: usize) -> f64 {
        -self.pmfs[theta][port]
    }

    fn conditional_sf(&self, theta: usize, port: usize) -> f64 {
        let h = &self.pmfs[theta];
        let observed = h[port];
        h.iter().filter(|&&p| p <= observed).sum()
    }

    fn sample_posterior(&self, port: usize, rng: &mut RngStream) -> usize {
        self.posterior(port).sample(rng)
    }

    fn exact_ppp(&self, port: usize) -> f64 {
        finite_ppp(self, port).min(1.0)
    }
}

impl FinitePosterior for PortModel {
    fn posterior(&self, port: usize) -> Posterior<usize> {
        let support = (0..self.applications()).collect();
        match &self.posterior {
            PortPosterior::Fixed { weights } => Posterior::from_weights(support, weights.clone()),
            PortPosterior::Bayes => {
                let weights = self.prior.iter().zip(&self.pmfs).map(|(w, h)| w * h[port]).collect();
                Posterior::from_weights(support, weights)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked() -> PortModel {
        PortModel::with_uniform_prior(
            vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.2, 0.7]],
            PortPosterior::Fixed { weights: vec![0.5, 0.5] },
        )
        .unwrap()
    }

    #[test]
    fn worked_example() {
        let m = worked();
        assert!((m.conditional_sf(0, 1) - 0.3).abs() < 1e-15);
        assert!((m.conditional_sf(1, 1) - 0.3).abs() < 1e-15);
        assert!((m.exact_ppp(1) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn most_likely_port_gives_one() {
        let m = PortModel::with_uniform_prior(
            vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.2, 0.7]],
            PortPosterior::Fixed { weights: vec![1.0, 0.0] },
        )
        .unwrap();
        assert!((m.exact_ppp(0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_application_is_classical() {
        let m = PortModel::with_uniform_prior(vec![vec![0.5, 0.3, 0.2]], PortPosterior::Bayes).unwrap();
        for port in 0..3 {
            assert_eq!(m.exact_ppp(port), m.conditional_sf(0, port));
        }
        assert!((m.exact_ppp(2) - 0.2).abs() < 1e-15);
        assert!((m.exact_ppp(1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bayes_posterior() {
        let m = PortModel::with_uniform_prior(vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.2, 0.7]], PortPosterior::Bayes)
            .unwrap();
        let p = m.posterior(0);
        assert!((p.weights[0] - 0.875).abs() < 1e-15);
    }

    #[test]
    fn law_of_p_sums_to_one() {
        let law = worked().ppp_distribution();
        let total: f64 = law.iter().map(|(_, m)| m).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn validation() {
        assert!(PortModel::with_uniform_prior(vec![vec![0.5, 0.4]], PortPosterior::Bayes).is_err());
        assert!(PortModel::with_uniform_prior(vec![vec![1.0], vec![0.5, 0.5]], PortPosterior::Bayes).is_err());
        assert!(
            PortModel::with_uniform_prior(vec![vec![1.0]], PortPosterior::Fixed { weights: vec![0.5, 0.5] }).is_err()
        );
    }

    #[test]
    fn reads_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pmfs.csv");
        std::fs::write(&path, "0.7, 0.2, 0.1\n0.1,0.2,0.7\n").unwrap();
        let pmfs = PortModel::pmfs_from_csv(&path).unwrap();
        assert_eq!(pmfs, vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.2, 0.7]]);
        std::fs::write(&path, "0.7,abc\n").unwrap();
        assert!(PortModel::pmfs_from_csv(&path).is_err());
    }
}
