//! End-to-end acceptance checks, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines reach stdout even when the
//! whole workspace is tested; the process fails if any check fails.

use std::time::Instant;

use ppcheck::bounds::{fisher_bounds, fisher_critical, fisher_score, h_bound};
use ppcheck::coupling::{synthesize_ppp, ThetaLaw};
use ppcheck::distributions::SubUniformDist;
use ppcheck::estimators::{marginal_estimator_run, EstimatorKind, PosteriorSampler};
use ppcheck::idf::{dominates_cx, IntegratedDf};
use ppcheck::models::{
    frequency_run, parallel_replicates, reference_fit, ruschendorf_sample, ClassicalModel, GenerativeModel, LassoModel,
    PortModel, PortPosterior, PowerSurvival, SimplexModel, REPORT_LEVELS,
};
use ppcheck::numerics::{ks_statistic, EmpiricalSample, RngStream};

const MILLION: usize = 1_000_000;

/// Outcome of one check: pass flag plus a short account of what was measured.
struct Check {
    pass: bool,
    detail: String,
}

impl Check {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Check { pass, detail: detail.into() }
    }
}

/// Folds several sub-checks into one line.
fn all(parts: Vec<Check>) -> Check {
    let pass = parts.iter().all(|c| c.pass);
    let detail = parts
        .iter()
        .filter(|c| !pass || !c.pass || parts.len() <= 4)
        .map(|c| c.detail.as_str())
        .collect::<Vec<_>>()
        .join("; ");
    Check { pass, detail: if pass && parts.len() > 4 { format!("{} sub-checks", parts.len()) } else { detail } }
}

fn rate(hits: &[f64]) -> f64 {
    hits.iter().sum::<f64>() / hits.len() as f64
}

fn tails_within_twice_alpha(name: &str, sample: &EmpiricalSample, slack: f64) -> Check {
    let worst = REPORT_LEVELS.iter().map(|&a| sample.ecdf(a) - 2.0 * a).fold(f64::NEG_INFINITY, f64::max);
    Check::new(worst <= slack, format!("{name}: max F(a) - 2a = {worst:.5}"))
}

fn lasso_worst_case() -> Check {
    let start = Instant::now();
    let model = LassoModel::new(0.1, PowerSurvival::LINEAR).unwrap();
    let run = frequency_run(&model, MILLION, &RngStream::new(1, 0)).unwrap().pvalues;
    let seconds = start.elapsed().as_secs_f64();
    let below = run.ecdf(0.1);
    let atom = run.fraction_near(0.1, 0.0);
    let pass = (0.197..=0.203).contains(&below) && (0.197..=0.203).contains(&atom) && seconds < 60.0;
    Check::new(pass, format!("P(P <= 0.1) = {below:.5}, atom = {atom:.5}, {seconds:.2} s"))
}

fn simplex_attains_extremal_law() -> Check {
    let model = SimplexModel::achieving(0.1).unwrap();
    let run = frequency_run(&model, MILLION, &RngStream::new(2, 0)).unwrap().pvalues;
    let fit = reference_fit(&run, &SubUniformDist::p2alpha(0.1).unwrap());
    let atom = fit.atoms[0].observed;
    Check::new(fit.ks <= 0.005 && (atom - 0.2).abs() <= 0.003, format!("KS = {:.5}, atom = {atom:.5}", fit.ks))
}

fn ruschendorf_matches_extremal_law() -> Check {
    all([0.05, 0.25]
        .into_iter()
        .map(|alpha| {
            let sample = ruschendorf_sample(alpha, &mut RngStream::new(3, 0), MILLION).unwrap();
            let fit = reference_fit(&sample, &SubUniformDist::p2alpha(alpha).unwrap());
            Check::new(fit.ks <= 0.003, format!("alpha {alpha}: KS = {:.5}", fit.ks))
        })
        .collect())
}

fn twice_alpha_is_universal() -> Check {
    let mut parts = Vec::new();
    let laws = [
        SubUniformDist::Uniform01,
        SubUniformDist::Beta22,
        SubUniformDist::p2alpha(0.05).unwrap(),
        SubUniformDist::p2alpha(0.1).unwrap(),
        SubUniformDist::p2alpha(0.25).unwrap(),
    ];
    for (i, law) in laws.iter().enumerate() {
        let sample = law.sample(&mut RngStream::new(4, i as u64), MILLION).unwrap();
        parts.push(tails_within_twice_alpha(&law.name(), &sample, 0.003));
    }
    let rng = RngStream::new(4, 100);
    let mut model_run =
        |name: &str, sample: EmpiricalSample| parts.push(tails_within_twice_alpha(name, &sample, 0.003));
    model_run(
        "lasso",
        frequency_run(&LassoModel::new(0.1, PowerSurvival::LINEAR).unwrap(), MILLION, &rng).unwrap().pvalues,
    );
    model_run(
        "lasso k=2",
        frequency_run(&LassoModel::new(0.1, PowerSurvival { exponent: 2 }).unwrap(), MILLION, &rng).unwrap().pvalues,
    );
    model_run("simplex", frequency_run(&SimplexModel::achieving(0.1).unwrap(), MILLION, &rng).unwrap().pvalues);
    model_run("port", frequency_run(&worked_port(PortPosterior::Bayes), MILLION, &rng).unwrap().pvalues);
    model_run("classical", frequency_run(&ClassicalModel, MILLION, &rng).unwrap().pvalues);
    model_run("ruschendorf", ruschendorf_sample(0.1, &mut rng.substream(9), MILLION).unwrap());
    for target in [SubUniformDist::Beta22, SubUniformDist::p2alpha(0.25).unwrap()] {
        let model = synthesize_ppp(&target, ThetaLaw::Logistic, &rng).unwrap();
        let name = model.name();
        model_run(&name, frequency_run(&model, MILLION, &rng).unwrap().pvalues);
    }
    all(parts)
}

/// φ of Beta(2, 2): ∫₀ˣ (3t² − 2t³) dt.
fn beta22_idf(x: f64) -> f64 {
    if x >= 1.0 {
        x - 0.5
    } else {
        x.powi(3) - 0.5 * x.powi(4)
    }
}

/// Largest weight on a 1e-5 grid whose line w(x − α) stays below φ on a 1e-4 x grid.
fn brute_force_h(alpha: f64) -> f64 {
    let steepest = (1..=10_000)
        .map(|i| i as f64 * 1e-4)
        .filter(|&x| x > alpha)
        .map(|x| beta22_idf(x) / (x - alpha))
        .fold(f64::INFINITY, f64::min);
    let mut w = 0.0f64;
    while w + 1e-5 <= steepest.min(1.0) {
        w += 1e-5;
    }
    w
}

fn h_bound_is_exact() -> Check {
    let uniform = IntegratedDf::uniform();
    let worst_uniform = (0..100)
        .map(|i| 0.001 + 0.998 * i as f64 / 99.0)
        .map(|a| (h_bound(a, &uniform) - (2.0 * a).min(1.0)).abs())
        .fold(0.0, f64::max);
    let beta = IntegratedDf::beta22();
    let worst_beta = [0.05, 0.1, 0.2, 0.3, 0.4]
        .into_iter()
        .map(|a| (h_bound(a, &beta) - brute_force_h(a)).abs())
        .fold(0.0, f64::max);
    all(vec![
        Check::new(worst_uniform <= 1e-9, format!("uniform: max error {worst_uniform:.2e}")),
        Check::new(worst_beta <= 1e-5, format!("beta22 vs grid: max error {worst_beta:.2e}")),
    ])
}

fn fisher_bounds_and_ordering() -> Check {
    let score = 9.21034;
    let r = fisher_bounds(score, 1).unwrap();
    let shifted = (-(score - 2.0 * std::f64::consts::LN_2) / 2.0).exp();
    let cantelli = 1.0 / (1.0 + ((score - 2.0) / 2.0).powi(2));
    let mgf = (1.0 - score / 2.0 - (2.0 / score).ln()).exp();
    let single = (r.bound_shifted_chi2 - shifted).abs() <= 1e-5
        && (r.bound_cantelli.unwrap() - cantelli).abs() <= 1e-5
        && (r.bound_mgf.unwrap() - mgf).abs() <= 1e-5
        && (shifted - 0.0200).abs() <= 1e-5
        && (cantelli - 0.07144).abs() <= 1e-5;

    let at = |alpha: f64, m: usize| fisher_bounds(fisher_critical(alpha, m).unwrap(), m).unwrap();
    let low = at(1e-5, 20);
    let mgf_best =
        low.bound_mgf.unwrap() < low.bound_cantelli.unwrap() && low.bound_mgf.unwrap() < low.bound_shifted_chi2;
    let wide = at(1e-5, MILLION);
    let shifted_worst =
        wide.bound_shifted_chi2 > wide.bound_cantelli.unwrap() && wide.bound_shifted_chi2 > wide.bound_mgf.unwrap();
    all(vec![
        Check::new(
            single,
            format!(
                "m=1: ({:.5}, {:.5}, {:.7})",
                r.bound_shifted_chi2,
                r.bound_cantelli.unwrap(),
                r.bound_mgf.unwrap()
            ),
        ),
        Check::new(mgf_best, format!("m=20, a=1e-5: mgf {:.2e} is smallest", low.bound_mgf.unwrap())),
        Check::new(shifted_worst, format!("m=1e6, a=1e-5: shifted {:.3} is largest", wide.bound_shifted_chi2)),
    ])
}

fn fisher_is_conservative() -> Check {
    let m = 200;
    let critical = fisher_critical(0.05, m).unwrap();
    let law = SubUniformDist::p2alpha(0.1).unwrap();
    let hits = parallel_replicates(100_000, &RngStream::new(7, 0), |r| {
        let pvals: Vec<f64> = (0..m).map(|_| law.sample_one(r)).collect();
        f64::from(fisher_score(&pvals).unwrap().score >= critical)
    })
    .unwrap();
    let level = rate(&hits);
    Check::new(level <= 0.05, format!("m=200: P(score >= t) = {level:.5}"))
}

fn minp_is_achievable() -> Check {
    let (x, m) = (0.05, 10);
    let law = SubUniformDist::p2alpha(x).unwrap();
    let hits = parallel_replicates(MILLION, &RngStream::new(8, 0), |r| {
        f64::from((0..m).map(|_| law.sample_one(r)).fold(1.0, f64::min) <= x)
    })
    .unwrap();
    let level = rate(&hits);
    Check::new((level - 0.65132).abs() <= 0.003, format!("P(min <= 0.05) = {level:.5}"))
}

fn estimator_dichotomy() -> Check {
    let model = LassoModel::new(0.1, PowerSurvival::LINEAR).unwrap();
    let rng = RngStream::new(9, 0);
    let mut parts = Vec::new();

    let coin = marginal_estimator_run(&model, 1, PosteriorSampler::Iid, EstimatorKind::PHat, MILLION, &rng).unwrap();
    let binary = coin.values().iter().all(|&v| v == 0.0 || v == 1.0);
    parts.push(Check::new(binary && (coin.mean() - 0.5).abs() <= 0.002, format!("P-hat_1 mean {:.5}", coin.mean())));

    let single = marginal_estimator_run(&model, 1, PosteriorSampler::Iid, EstimatorKind::RHat, 100_000, &rng).unwrap();
    let ks = ks_statistic(&single, |x| x.clamp(0.0, 1.0));
    parts.push(Check::new(ks <= 0.005, format!("R-hat_1 KS {ks:.5}")));

    let markov = PosteriorSampler::markov(0.9).unwrap();
    for draws in [4, 64] {
        let sample =
            marginal_estimator_run(&model, draws, markov, EstimatorKind::RHat, MILLION, &rng.substream(draws as u64))
                .unwrap();
        let idf = IntegratedDf::from_samples(&sample);
        let d = dominates_cx(&idf, &IntegratedDf::uniform(), 0.003);
        let tails = tails_within_twice_alpha(&format!("R-hat_{draws}"), &sample, 0.003);
        parts.push(Check::new(d.holds && tails.pass, format!("{}, idf excess {:.5}", tails.detail, d.max_violation)));
    }
    all(parts)
}

fn synthesis_end_to_end() -> Check {
    let mut parts = Vec::new();
    let targets = [
        SubUniformDist::Uniform01,
        SubUniformDist::p2alpha(0.05).unwrap(),
        SubUniformDist::p2alpha(0.1).unwrap(),
        SubUniformDist::p2alpha(0.25).unwrap(),
    ];
    for (i, target) in targets.iter().enumerate() {
        let rng = RngStream::new(10, i as u64);
        let model = synthesize_ppp(target, ThetaLaw::Logistic, &rng).unwrap();
        let run = frequency_run(&model, MILLION, &rng).unwrap().pvalues;
        let fit = reference_fit(&run, target);
        let atoms_ok = fit.atoms.iter().all(|a| (a.observed - a.expected).abs() <= 0.003);
        let residual = model.coupling.martingale_residual();
        let s = parallel_replicates(MILLION, &rng.substream(1 << 40), |r| {
            let p = target.sample_one(r);
            model.coupling.sample_s(p, r).unwrap()
        })
        .unwrap();
        let s_ks = ks_statistic(&EmpiricalSample::new(s).unwrap(), |x| x.clamp(0.0, 1.0));
        parts.push(Check::new(
            fit.ks <= 0.003 && atoms_ok && residual <= 1e-6 && s_ks <= 0.003,
            format!("{}: KS {:.5}, residual {residual:.1e}, S KS {s_ks:.5}", target.name(), fit.ks),
        ));
    }
    all(parts)
}

fn moment_bounds() -> Check {
    let laws = [
        SubUniformDist::Beta22,
        SubUniformDist::p2alpha(0.05).unwrap(),
        SubUniformDist::p2alpha(0.1).unwrap(),
        SubUniformDist::p2alpha(0.25).unwrap(),
    ];
    all(laws
        .iter()
        .enumerate()
        .map(|(i, law)| {
            let logs: Vec<f64> = law
                .sample(&mut RngStream::new(11, i as u64), MILLION)
                .unwrap()
                .values()
                .iter()
                .map(|p| -p.ln())
                .collect();
            let n = logs.len() as f64;
            let mean = logs.iter().sum::<f64>() / n;
            let centred: Vec<f64> = logs.iter().map(|v| (v - mean).powi(2)).collect();
            let var = centred.iter().sum::<f64>() / n;
            let fourth = centred.iter().map(|c| c * c).sum::<f64>() / n;
            let mean_se = (var / n).sqrt();
            let var_se = ((fourth - var * var) / n).sqrt();
            Check::new(
                mean + 3.0 * mean_se < 1.0 && var + 3.0 * var_se < 1.0,
                format!("{}: E = {mean:.4}, Var = {var:.4}", law.name()),
            )
        })
        .collect())
}

fn worked_port(posterior: PortPosterior) -> PortModel {
    PortModel::with_uniform_prior(vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.2, 0.7]], posterior).unwrap()
}

fn random_pmf(rng: &mut RngStream, ports: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..ports).map(|_| -rng.uniform_open0().ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

fn discrete_regime() -> Check {
    let mut parts = Vec::new();
    let fixed = worked_port(PortPosterior::Fixed { weights: vec![0.5, 0.5] }).exact_ppp(1);
    let bayes = worked_port(PortPosterior::Bayes).exact_ppp(1);
    parts.push(Check::new(
        (fixed - 0.3).abs() <= 1e-15 && (bayes - 0.3).abs() <= 1e-15,
        format!("worked model at port 1: {fixed}"),
    ));
    let mut rng = RngStream::new(12, 0);
    for i in 0..10 {
        let ports = 3 + i % 4;
        let pmfs = vec![random_pmf(&mut rng, ports), random_pmf(&mut rng, ports)];
        let model = PortModel::with_uniform_prior(pmfs, PortPosterior::Bayes).unwrap();
        let run = frequency_run(&model, 100_000, &rng.substream(i as u64)).unwrap().pvalues;
        parts.push(tails_within_twice_alpha(&format!("random port {i}"), &run, 0.003));
    }
    all(parts)
}

type CheckFn = fn() -> Check;

fn main() {
    let checks: [(&str, CheckFn); 12] = [
        ("worst-case lasso", lasso_worst_case),
        ("simplex model", simplex_attains_extremal_law),
        ("ruschendorf construction", ruschendorf_matches_extremal_law),
        ("2 alpha universality", twice_alpha_is_universal),
        ("h bound", h_bound_is_exact),
        ("fisher bounds", fisher_bounds_and_ordering),
        ("fisher conservativeness", fisher_is_conservative),
        ("min-p achievability", minp_is_achievable),
        ("estimator dichotomy", estimator_dichotomy),
        ("synthesis end to end", synthesis_end_to_end),
        ("moment bounds", moment_bounds),
        ("discrete regime", discrete_regime),
    ];
    let mut failures = 0;
    for (i, (name, run)) in checks.iter().enumerate() {
        let check = run();
        if !check.pass {
            failures += 1;
        }
        println!("{} {:>2} {name}: {}", if check.pass { "PASS" } else { "FAIL" }, i + 1, check.detail);
    }
    println!("acceptance: {} passed, {failures} failed", checks.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
