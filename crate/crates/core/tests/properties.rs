use ppcheck::bounds::{fisher_bounds, h_bound, minp_limit_check};
use ppcheck::coupling::{
    continuize, discrete_idf, discretize, martingale_transport, mod1_family, ConditionalLaw, Kernel, ThetaLaw,
};
use ppcheck::distributions::{Atom, Mixture, SubUniformDist, UniformPiece};
use ppcheck::idf::{dominates_cx, IntegratedDf};
use ppcheck::models::{GenerativeModel, LassoModel, PowerSurvival};
use ppcheck::numerics::{chi2_quantile, chi2_sf, log_gamma, RngStream};
use proptest::prelude::*;

/// Atoms at the midpoints of a random partition of [0, 1], each with the
/// width of its cell as mass: a discrete law below U[0, 1] in convex order.
fn sub_uniform_atoms(max_cells: usize) -> impl Strategy<Value = Vec<Atom>> {
    prop::collection::vec(0.01f64..1.0, 1..max_cells).prop_map(|weights| {
        let total: f64 = weights.iter().sum();
        let mut lo = 0.0;
        weights
            .iter()
            .map(|w| {
                let width = w / total;
                let atom = Atom { location: lo + 0.5 * width, mass: width };
                lo += width;
                atom
            })
            .collect()
    })
}

/// Any finite discrete law on [0, 1].
fn discrete_law() -> impl Strategy<Value = Vec<Atom>> {
    prop::collection::vec((0.0f64..=1.0, 0.01f64..1.0), 1..8).prop_map(|pairs| {
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        pairs.into_iter().map(|(location, m)| Atom { location, mass: m / total }).collect()
    })
}

fn grid(n: usize) -> impl Iterator<Item = f64> {
    (0..=n).map(move |i| i as f64 / n as f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chi2_two_degrees_is_exponential(x in 0.0f64..60.0) {
        prop_assert!((chi2_sf(x, 2.0).unwrap() - (-x / 2.0).exp()).abs() <= 1e-12);
    }

    #[test]
    fn chi2_quantile_inverts_sf(x in 0.01f64..100.0, k in prop::sample::select(vec![1.0, 2.0, 4.0, 40.0])) {
        let p = chi2_sf(x, k).unwrap();
        prop_assume!(p > 1e-300 && p < 1.0);
        let back = chi2_quantile(p, k).unwrap();
        if 1.0 - p > 1e-6 {
            prop_assert!((back - x).abs() <= 1e-8 * x.max(1.0), "x = {x}, k = {k}, back = {back}");
        } else {
            prop_assert!((chi2_sf(back, k).unwrap() - p).abs() <= 1e-15);
        }
    }

    #[test]
    fn log_gamma_recurrence(x in 0.5f64..50.0) {
        prop_assert!((log_gamma(x + 1.0).unwrap() - log_gamma(x).unwrap() - x.ln()).abs() <= 1e-11);
    }

    #[test]
    fn rng_streams_replay(seed in any::<u64>(), stream in any::<u64>()) {
        let draw = || {
            let mut r = RngStream::new(seed, stream);
            (0..32).map(|_| r.uniform().to_bits()).collect::<Vec<_>>()
        };
        prop_assert_eq!(draw(), draw());
    }

    #[test]
    fn idf_is_convex_with_monotone_slope(atoms in discrete_law(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let idf = discrete_idf(&atoms).unwrap();
        let mid = idf.evaluate(0.5 * (a + b));
        prop_assert!(mid <= 0.5 * (idf.evaluate(a) + idf.evaluate(b)) + 1e-12);
        let slopes: Vec<f64> = grid(256).map(|x| idf.right_derivative(x)).collect();
        prop_assert!(slopes.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }

    #[test]
    fn mutual_dominance_means_equal(atoms in discrete_law()) {
        let tol = 1e-9;
        let a = discrete_idf(&atoms).unwrap();
        let pieces: Vec<UniformPiece> = vec![];
        let b = SubUniformDist::Mixture(Mixture::new(atoms.clone(), pieces).unwrap()).idf();
        if dominates_cx(&a, &b, tol).holds && dominates_cx(&b, &a, tol).holds {
            let gap = grid(1024).map(|x| (a.evaluate(x) - b.evaluate(x)).abs()).fold(0.0, f64::max);
            prop_assert!(gap <= 2.0 * tol);
        }
    }

    #[test]
    fn h_bound_on_uniform_is_twice_alpha(alpha in 0.001f64..0.999) {
        prop_assert!((h_bound(alpha, &IntegratedDf::uniform()) - (2.0 * alpha).min(1.0)).abs() <= 1e-9);
    }

    #[test]
    fn h_bound_is_monotone(a in 0.0f64..1.0, b in 0.0f64..1.0, atoms in sub_uniform_atoms(6)) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        for idf in [IntegratedDf::beta22(), discrete_idf(&atoms).unwrap()] {
            prop_assert!(h_bound(lo, &idf) <= h_bound(hi, &idf) + 1e-9);
        }
    }

    #[test]
    fn single_shifted_bound_doubles_nominal(score in 0.0f64..80.0) {
        let r = fisher_bounds(score, 1).unwrap();
        prop_assert!((r.bound_shifted_chi2 - (2.0 * r.nominal_p).min(1.0)).abs() <= 1e-12);
    }

    #[test]
    fn minp_bound_in_q_decreases_with_m(q in 0.0f64..0.99, m in 1usize..200) {
        let now = minp_limit_check(q, m).unwrap().bound_in_q;
        let next = minp_limit_check(q, m + 1).unwrap().bound_in_q;
        if let (Some(now), Some(next)) = (now, next) {
            prop_assert!(next <= now + 1e-12);
        }
    }

    #[test]
    fn lasso_atom_is_exact(alpha in 0.01f64..0.49, frac in 0.0f64..1.0) {
        let model = LassoModel::new(alpha, PowerSurvival::LINEAR).unwrap();
        let x = 1.0 - 2.0 * alpha + 2.0 * alpha * frac;
        prop_assume!(x > 1.0 - 2.0 * alpha && x < 1.0);
        prop_assert!((model.exact_ppp(x) - alpha).abs() <= 1e-12);
    }

    #[test]
    fn transport_plans_are_martingales(source in sub_uniform_atoms(8), splits in prop::collection::vec(0.05f64..0.95, 8)) {
        // each atom splits into two points around it, keeping its mean
        let mut dest = Vec::new();
        for (a, s) in source.iter().zip(splits.iter().cycle()) {
            let spread = s * 0.5 * a.mass;
            dest.push(Atom { location: a.location - spread, mass: 0.5 * a.mass });
            dest.push(Atom { location: a.location + spread, mass: 0.5 * a.mass });
        }
        let plan = martingale_transport(&source, &dest).unwrap();
        prop_assert!(plan.martingale_residual() <= 1e-8);
        for (r, s) in plan.row_sums().iter().zip(&plan.source) {
            prop_assert!((r - s.mass).abs() <= 1e-12);
        }
        for (c, d) in plan.column_sums().iter().zip(&plan.destination) {
            prop_assert!((c - d.mass).abs() <= 1e-12);
        }
    }

    #[test]
    fn shadow_kernels_are_martingales(atoms in sub_uniform_atoms(40)) {
        let law = ConditionalLaw::from_atoms(&atoms).unwrap();
        prop_assert!(law.martingale_residual() <= 1e-6);
        for k in law.atoms() {
            prop_assert!((k.support.length() - k.mass).abs() <= 1e-9);
        }
    }

    #[test]
    fn mod1_stays_in_support(atoms in sub_uniform_atoms(12), t in -20.0f64..20.0, u in 0.0f64..1.0) {
        let law = ConditionalLaw::from_atoms(&atoms).unwrap();
        let kernel = &law.atoms()[0].support;
        let s = kernel.quantile(u);
        let shifted = mod1_family(&Kernel::Uniform(kernel.clone()), ThetaLaw::Logistic, t, s).unwrap();
        prop_assert!(kernel.contains(shifted));
        prop_assert_eq!(mod1_family(&Kernel::Uniform(kernel.clone()), ThetaLaw::Logistic, f64::NEG_INFINITY, s).unwrap(), s);
    }

    #[test]
    fn discretization_sits_below_target(alpha in 0.02f64..0.45, cells in 8usize..128) {
        for target in [SubUniformDist::Beta22, SubUniformDist::p2alpha(alpha).unwrap()] {
            let grid_law = discretize(&target, cells).unwrap();
            let idf = discrete_idf(&grid_law.atoms).unwrap();
            prop_assert!(dominates_cx(&idf, &target.idf(), 1e-9).holds);
            prop_assert!(grid_law.ks_error <= 1.0 / (cells - 1) as f64 + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn continuization_is_sandwiched(atoms in sub_uniform_atoms(8)) {
        let nu = IntegratedDf::uniform();
        let smooth = continuize(&atoms, &nu, 0.5).unwrap();
        let mu = discrete_idf(&atoms).unwrap();
        for x in grid(4096) {
            let value = smooth.idf(x);
            prop_assert!(value - mu.evaluate(x) >= -1e-9, "x = {x}");
            prop_assert!(nu.evaluate(x) - value >= -1e-9, "x = {x}");
        }
    }
}
