mod common;

use boundary_gp::geometry::{lebesgue_error, membership, Boundary, GridCurve};
use boundary_gp::harness::{simulate_case, CaseId, CaseParams};
use boundary_gp::models::{NoiseFamily, NoiseModel, RegionStats};
use boundary_gp::rng;
use boundary_gp::sampler::{
    posterior_mean_curve, run_chain, run_random_series_chain, slice_sample_1d, InitialState, PriorMean, SamplerConfig,
    SeriesConfig, UpdateMask,
};
use common::{ks_test, mean, variance};
use statrs::distribution::{ContinuousCDF, Exp, Gamma, Normal};

fn slice_chain(log_density: impl Fn(f64) -> f64, x0: f64, width: f64, n: usize, thin: usize, seed: u64) -> Vec<f64> {
    let mut r = rng::stream(seed);
    let mut x = x0;
    let mut out = Vec::with_capacity(n);
    for i in 0..n * thin {
        x = slice_sample_1d(&log_density, x, width, 100, &mut r).unwrap().value;
        if i % thin == thin - 1 {
            out.push(x);
        }
    }
    out
}

#[test]
fn slice_normal_ks() {
    let xs = slice_chain(|x| -0.5 * x * x, 0.0, 1.0, 10_000, 5, 1);
    let n = Normal::new(0.0, 1.0).unwrap();
    let p = ks_test(&xs, |x| n.cdf(x));
    assert!(p > 0.01, "p = {p}");
}

#[test]
fn slice_uniform_mean() {
    let xs = slice_chain(|x| if x > 0.0 && x < 1.0 { 0.0 } else { f64::NEG_INFINITY }, 0.5, 0.3, 10_000, 3, 2);
    assert!(xs.iter().all(|&x| x > 0.0 && x < 1.0));
    assert!((mean(&xs) - 0.5).abs() < 3.0 * (1.0 / 12.0 / 10_000.0f64).sqrt());
}

#[test]
fn slice_exponential_mean() {
    let xs = slice_chain(|x| if x > 0.0 { -x } else { f64::NEG_INFINITY }, 1.0, 1.0, 10_000, 5, 3);
    assert!((mean(&xs) - 1.0).abs() < 4.0 * (1.0 / 10_000.0f64).sqrt());
    let e = Exp::new(1.0).unwrap();
    assert!(ks_test(&xs, |x| e.cdf(x)) > 0.01);
}

#[test]
fn slice_rejects_non_finite_start() {
    let mut r = rng::stream(1);
    assert!(slice_sample_1d(|x: f64| if x > 0.0 { 0.0 } else { f64::NEG_INFINITY }, -1.0, 1.0, 10, &mut r).is_err());
}

fn frozen(curve: bool, precision: bool, noise: bool, scale: bool) -> UpdateMask {
    UpdateMask { curve, precision, noise, scale }
}

#[test]
fn precision_conditional_is_gamma() {
    let sim = simulate_case(CaseId::B1, 20, CaseId::B1.default_params(), 4).unwrap();
    let config = SamplerConfig {
        iterations: 10_001,
        burn_in: 1,
        grid_size: 16,
        updates: frozen(false, true, false, false),
        ..SamplerConfig::default()
    };
    let draws = run_chain(&sim.image, NoiseFamily::Bernoulli, &config, &mut rng::stream(9)).unwrap();
    let taus: Vec<f64> = draws.scalars.iter().map(|s| s.precision.unwrap()).collect();
    assert_eq!(taus.len(), 10_000);
    let shape = 500.0 + 10.5;
    let g = Gamma::new(shape, 1.0).unwrap();
    assert!(ks_test(&taus, |x| g.cdf(x)) > 0.01);
    assert!((mean(&taus) - shape).abs() < 3.0 * (shape / 10_000.0f64).sqrt());
    assert!(draws.coefficients.iter().all(|z| z.iter().all(|&v| v == 0.0)));
}

#[test]
fn frozen_curve_noise_matches_beta_posterior() {
    let sim = simulate_case(CaseId::B1, 100, CaseParams::Binary { p_in: 0.5, p_out: 0.2 }, 5).unwrap();
    let truth = GridCurve::tabulate(&sim.truth, 2048).unwrap();
    let config = SamplerConfig {
        iterations: 5001,
        burn_in: 1,
        grid_size: 16,
        prior_mean: PriorMean::Tabulated(truth.clone()),
        updates: frozen(false, false, true, false),
        ..SamplerConfig::default()
    };
    let draws = run_chain(&sim.image, NoiseFamily::Bernoulli, &config, &mut rng::stream(10)).unwrap();
    let values: Vec<f64> = sim.image.omegas().iter().map(|&w| truth.radius(w)).collect();
    let stats = RegionStats::from_partition(&sim.image.intensities(), &membership(&values, &sim.image));
    let (p_in, p_out): (Vec<f64>, Vec<f64>) = draws
        .scalars
        .iter()
        .map(|s| match s.noise {
            NoiseModel::Bernoulli { p_in, p_out } => (p_in, p_out),
            _ => unreachable!(),
        })
        .unzip();
    // Beta(N, n - N) posterior under the Beta(0, 0) prior; the order constraint is inactive here.
    for (draws, n, k) in [(&p_in, stats.n_in as f64, stats.sum_in), (&p_out, stats.n_out as f64, stats.sum_out)] {
        let post_mean = k / n;
        let post_sd = (post_mean * (1.0 - post_mean) / (n + 1.0)).sqrt();
        assert!((mean(draws) - post_mean).abs() < 4.0 * post_sd / (draws.len() as f64).sqrt(), "{} vs {post_mean}", mean(draws));
        assert!((variance(draws).sqrt() / post_sd - 1.0).abs() < 0.1);
    }
}

#[test]
fn prior_draws_centre_on_prior_mean() {
    let sim = simulate_case(CaseId::B1, 30, CaseId::B1.default_params(), 6).unwrap();
    // Equal regions: the likelihood no longer depends on the curve.
    let flat = NoiseModel::Bernoulli { p_in: 0.3, p_out: 0.3 };
    let config = SamplerConfig {
        iterations: 4000,
        burn_in: 500,
        grid_size: 32,
        updates: frozen(true, true, false, true),
        initial: InitialState { noise: Some(flat), ..InitialState::default() },
        ..SamplerConfig::default()
    };
    let draws = run_chain(&sim.image, NoiseFamily::Bernoulli, &config, &mut rng::stream(11)).unwrap();
    let m = posterior_mean_curve(&draws).unwrap();
    for &v in m.values() {
        assert!((v - 0.1).abs() < 0.02, "{v}");
    }
}

#[test]
fn chains_are_reproducible() {
    let sim = simulate_case(CaseId::B2, 30, CaseId::B2.default_params(), 7).unwrap();
    let config = SamplerConfig { iterations: 200, burn_in: 50, grid_size: 64, ..SamplerConfig::default() };
    let a = run_chain(&sim.image, NoiseFamily::Bernoulli, &config, &mut rng::stream(3)).unwrap();
    let b = run_chain(&sim.image, NoiseFamily::Bernoulli, &config, &mut rng::stream(3)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 150);
    let c = run_chain(&sim.image, NoiseFamily::Bernoulli, &config, &mut rng::stream(4)).unwrap();
    assert_ne!(a, c);
    let thinned = SamplerConfig { thinning: 4, ..config };
    assert_eq!(thinned.retained(), 37);
    assert_eq!(run_chain(&sim.image, NoiseFamily::Bernoulli, &thinned, &mut rng::stream(3)).unwrap().len(), 37);
}

#[test]
fn stationary_from_truth() {
    let sim = simulate_case(CaseId::B1, 100, CaseParams::Binary { p_in: 0.5, p_out: 0.2 }, 8).unwrap();
    let truth = GridCurve::tabulate(&sim.truth, 2048).unwrap();
    let config = SamplerConfig {
        iterations: 600,
        burn_in: 0,
        grid_size: 64,
        prior_mean: PriorMean::Tabulated(truth),
        initial: InitialState { noise: Some(NoiseModel::Bernoulli { p_in: 0.5, p_out: 0.2 }), ..InitialState::default() },
        ..SamplerConfig::default()
    };
    let draws = run_chain(&sim.image, NoiseFamily::Bernoulli, &config, &mut rng::stream(12)).unwrap();
    let lp = &draws.diagnostics.log_posterior[100..600];
    let batches: Vec<f64> = lp.chunks(50).map(mean).collect();
    let sd = variance(&batches).sqrt();
    let drift = batches[batches.len() - 1] - batches[0];
    assert!(drift > -3.0 * sd, "drift {drift}, batch sd {sd}");
}

#[test]
fn full_chain_recovers_b1() {
    let sim = simulate_case(CaseId::B1, 100, CaseParams::Binary { p_in: 0.5, p_out: 0.2 }, 13).unwrap();
    let config = SamplerConfig::default();
    let draws = run_chain(&sim.image, NoiseFamily::Bernoulli, &config, &mut rng::stream(13)).unwrap();
    assert_eq!(draws.len(), config.retained());
    let error = lebesgue_error(&posterior_mean_curve(&draws).unwrap(), &sim.truth, 10_000);
    assert!(error < 2e-2, "{error}");
    assert!(draws.diagnostics.clamp_fraction() < 1e-3);
    assert!(draws.scalars.iter().all(|s| s.noise.satisfies_order()));
}

#[test]
fn series_flat_likelihood_returns_prior() {
    let sim = simulate_case(CaseId::B1, 60, CaseId::B1.default_params(), 14).unwrap();
    let flat = NoiseModel::Bernoulli { p_in: 0.3, p_out: 0.3 };
    let config = SamplerConfig {
        iterations: 20_000,
        burn_in: 2000,
        grid_size: 32,
        prior_mean: PriorMean::Constant(0.35),
        updates: frozen(true, false, false, false),
        initial: InitialState { noise: Some(flat), ..InitialState::default() },
        ..SamplerConfig::default()
    };
    let series = SeriesConfig::default();
    let draws = run_random_series_chain(&sim.image, NoiseFamily::Bernoulli, 2, &config, &series, &mut rng::stream(15)).unwrap();
    let s2 = series.coefficient_sd.powi(2);
    for k in 0..5 {
        let zk: Vec<f64> = draws.coefficients.iter().map(|z| z[k]).collect();
        let v = variance(&zk);
        assert!((v / s2 - 1.0).abs() < 0.15, "coefficient {k}: variance {v}");
    }
}

#[test]
fn series_chain_recovers_b1() {
    let sim = simulate_case(CaseId::B1, 100, CaseParams::Binary { p_in: 0.5, p_out: 0.2 }, 16).unwrap();
    // Coordinate-wise random-walk moves need a longer burn-in than the slice sampler.
    let config = SamplerConfig { iterations: 16_000, burn_in: 8000, ..SamplerConfig::default() };
    let draws =
        run_random_series_chain(&sim.image, NoiseFamily::Bernoulli, 5, &config, &SeriesConfig::default(), &mut rng::stream(16))
            .unwrap();
    let error = lebesgue_error(&posterior_mean_curve(&draws).unwrap(), &sim.truth, 10_000);
    assert!(error < 3e-2, "{error}");
    let rate = draws.diagnostics.acceptance_rate.unwrap();
    assert!((0.2..=0.5).contains(&rate), "{rate}");
}
