use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use ppcheck::bounds::{
    conservative_single, fisher_bounds, fisher_critical, fisher_report, minp_bound, minp_limit_check, minp_nominal,
};
use ppcheck::coupling::{synthesize_ppp, ThetaLaw};
use ppcheck::distributions::SubUniformDist;
use ppcheck::estimators::{marginal_estimator_run, EstimatorKind, PosteriorSampler};
use ppcheck::models::{
    frequency_run, read_pvalues, reference_fit, ruschendorf_sample, summarize, write_pvalues, GenerativeModel,
    LassoModel, PortModel, PortPosterior, PowerSurvival, SimplexModel,
};
use ppcheck::numerics::{EmpiricalSample, RngStream};
use ppcheck::{Error, Result};
use serde_json::{json, Value};

use crate::output::Output;

const IDF_POINTS: usize = 512;
const FISHER_ALPHA_RANGE: (f64, f64) = (1e-5, 0.1);

fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub fn calibrate(p: f64) -> Result<Output> {
    let conservative_p = conservative_single(p)?;
    Ok(Output::Record(json!({ "p": p, "conservative_p": conservative_p })))
}

pub fn fisher(path: &Path) -> Result<Output> {
    let pvals = read_pvalues(path)?;
    let report = fisher_report(&pvals)?;
    Ok(Output::Record(serde_json::to_value(report)?))
}

pub fn minp(path: Option<&Path>, min: Option<f64>, m: Option<usize>) -> Result<Output> {
    let (x, m) = match (path, min, m) {
        (Some(path), _, _) => {
            let pvals = read_pvalues(path)?;
            if let Some(bad) = pvals.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(domain(format!("p-values must lie in [0, 1], got {bad}")));
            }
            let x = pvals.iter().copied().fold(f64::INFINITY, f64::min);
            if pvals.is_empty() {
                return Err(domain("no p-values in file"));
            }
            (x, pvals.len())
        }
        (None, Some(x), Some(m)) => (x, m),
        _ => return Err(domain("give either --pvals or both --min and --m")),
    };
    let conservative_p = minp_bound(x, m)?;
    let nominal_q = minp_nominal(x, m)?;
    let (limit, bound_in_q) = if nominal_q < 1.0 {
        let check = minp_limit_check(nominal_q, m)?;
        (check.limit, check.bound_in_q)
    } else {
        (1.0, Some(1.0))
    };
    Ok(Output::Record(json!({
        "min": x,
        "m": m,
        "conservative_p": conservative_p,
        "nominal_q": nominal_q,
        "limit_2q_minus_q2": limit,
        "bound_in_q": bound_in_q,
    })))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Lasso,
    Simplex,
    Port,
    Ruschendorf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Estimator {
    Exact,
    PHat,
    RHat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PortPosteriorKind {
    Fixed,
    Bayes,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub model: ModelKind,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Posterior draws per replicate for the Monte Carlo estimators.
    #[arg(long = "M", default_value_t = 1)]
    pub draws: usize,
    #[arg(long, value_enum, default_value = "exact")]
    pub estimator: Estimator,
    /// Lag-1 autocorrelation of the posterior sampler; 0 draws independently.
    #[arg(long, default_value_t = 0.0)]
    pub rho: f64,
    /// Where to write the p-values, one per line.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Exponent k of the lasso travel survival (1 − t)^k.
    #[arg(long, default_value_t = 1)]
    pub exponent: u32,
    /// Port probabilities, one row per application.
    #[arg(long)]
    pub pmfs: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "fixed")]
    pub posterior: PortPosteriorKind,
}

fn estimate<M: GenerativeModel>(model: &M, args: &SimulateArgs, rng: &RngStream) -> Result<EmpiricalSample> {
    let kind = match args.estimator {
        Estimator::Exact => return Ok(frequency_run(model, args.n, rng)?.pvalues),
        Estimator::PHat => EstimatorKind::PHat,
        Estimator::RHat => EstimatorKind::RHat,
    };
    let sampler = if args.rho == 0.0 { PosteriorSampler::Iid } else { PosteriorSampler::markov(args.rho)? };
    marginal_estimator_run(model, args.draws, sampler, kind, args.n, rng)
}

fn worked_port_pmfs() -> Vec<Vec<f64>> {
    vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.2, 0.7]]
}

pub fn simulate(args: &SimulateArgs) -> Result<Output> {
    let rng = RngStream::new(args.seed, 0);
    let exact = args.estimator == Estimator::Exact;
    let extremal = || SubUniformDist::p2alpha(args.alpha);
    let (name, sample, reference) = match args.model {
        ModelKind::Lasso => {
            let model = LassoModel::new(args.alpha, PowerSurvival { exponent: args.exponent })?;
            let reference = (exact && model.travel() == PowerSurvival::LINEAR).then(extremal).transpose()?;
            (model.name(), estimate(&model, args, &rng)?, reference)
        }
        ModelKind::Simplex => {
            let model = SimplexModel::achieving(args.alpha)?;
            let reference = exact.then(extremal).transpose()?;
            (model.name(), estimate(&model, args, &rng)?, reference)
        }
        ModelKind::Port => {
            if !(args.alpha > 0.0 && args.alpha < 1.0) {
                return Err(domain(format!("alpha must lie in (0, 1), got {}", args.alpha)));
            }
            let pmfs = match &args.pmfs {
                Some(path) => PortModel::pmfs_from_csv(path)?,
                None => worked_port_pmfs(),
            };
            let posterior = match args.posterior {
                PortPosteriorKind::Fixed => PortPosterior::Fixed { weights: vec![1.0 / pmfs.len() as f64; pmfs.len()] },
                PortPosteriorKind::Bayes => PortPosterior::Bayes,
            };
            let model = PortModel::with_uniform_prior(pmfs, posterior)?;
            (model.name(), estimate(&model, args, &rng)?, None)
        }
        ModelKind::Ruschendorf => {
            if !exact {
                return Err(domain("the Rüschendorf construction has no posterior to sample"));
            }
            let sample = ruschendorf_sample(args.alpha, &mut rng.clone(), args.n)?;
            ("ruschendorf".to_string(), sample, Some(extremal()?))
        }
    };
    if let Some(path) = &args.out {
        write_pvalues(path, sample.values())?;
    }
    let summary = summarize(&sample, Some(args.alpha), reference.as_ref());
    Ok(Output::Record(json!({
        "model": name,
        "alpha": args.alpha,
        "n": args.n,
        "seed": args.seed,
        "estimator": args.estimator.to_possible_value().map(|v| v.get_name().to_string()),
        "draws": args.draws,
        "rho": args.rho,
        "out": args.out,
        "p_le_alpha": sample.ecdf(args.alpha),
        "summary": summary,
    })))
}

/// Target laws accept the library's tagged form plus `p2alpha` and `point_mass` shorthands.
fn parse_target(v: Value) -> Result<SubUniformDist> {
    let number =
        |key: &str| v.get(key).and_then(Value::as_f64).ok_or_else(|| domain(format!("target needs a numeric '{key}'")));
    match v.get("kind").and_then(Value::as_str) {
        Some("p2alpha") => SubUniformDist::p2alpha(number("alpha")?),
        Some("point_mass") => SubUniformDist::point_mass(number("at")?),
        _ => Ok(serde_json::from_value(v)?),
    }
}

pub fn construct(path: &Path, n: usize, seed: u64) -> Result<Output> {
    let text = std::fs::read_to_string(path)?;
    let target = parse_target(serde_json::from_str(&text)?)?;
    let rng = RngStream::new(seed, 0);
    let model = synthesize_ppp(&target, ThetaLaw::default(), &rng)?;
    let run = frequency_run(&model, n, &rng)?;
    let realized = reference_fit(&run.pvalues, &target);
    Ok(Output::Record(json!({
        "target": target.name(),
        "coupling": model.coupling_kind(),
        "theta_law": model.theta_law.name(),
        "n": n,
        "seed": seed,
        "discretization_ks": model.discretization_ks,
        "realized": realized,
        "mean": run.pvalues.mean(),
        "model": model,
    })))
}

pub fn idf_curves(alpha: f64) -> Result<Output> {
    let curves = [SubUniformDist::Uniform01.idf(), SubUniformDist::Beta22.idf(), SubUniformDist::p2alpha(alpha)?.idf()];
    let rows = (0..IDF_POINTS)
        .map(|i| {
            let x = i as f64 / (IDF_POINTS - 1) as f64;
            std::iter::once(Some(x)).chain(curves.iter().map(|c| Some(c.evaluate(x)))).collect()
        })
        .collect();
    Ok(Output::Table {
        columns: vec!["x", "uniform", "beta22", "p2alpha"],
        rows,
        meta: json!({ "figure": "idf", "alpha": alpha }),
    })
}

pub fn fisher_curves(m: usize, points: usize) -> Result<Output> {
    if points < 2 {
        return Err(domain("the fisher figure needs at least 2 points"));
    }
    let (lo, hi) = FISHER_ALPHA_RANGE;
    let rows = (0..points)
        .map(|i| {
            let alpha = if i + 1 == points { hi } else { lo * (hi / lo).powf(i as f64 / (points - 1) as f64) };
            let critical = fisher_critical(alpha, m)?;
            let report = fisher_bounds(critical, m)?;
            Ok(vec![
                Some(alpha),
                Some(critical),
                Some(report.nominal_p),
                Some(report.bound_shifted_chi2),
                report.bound_cantelli,
                report.bound_mgf,
            ])
        })
        .collect::<Result<_>>()?;
    Ok(Output::Table {
        columns: vec!["alpha", "critical", "nominal", "shifted_chi2", "cantelli", "mgf"],
        rows,
        meta: json!({ "figure": "fisher", "m": m }),
    })
}
