use std::time::Instant;

use boundary_gp::geometry::lebesgue_error;
use boundary_gp::harness::{mce_baseline, simulate_case, BaselineConfig, CaseId};
use boundary_gp::rng;
use boundary_gp::sampler::{posterior_mean_curve, run_chain, uniform_credible_band, SamplerConfig};

fn main() {
    let case: CaseId = std::env::args().nth(1).unwrap_or_else(|| "b1".into()).parse().unwrap();
    let seed: u64 = std::env::args().nth(2).map(|s| s.parse().unwrap()).unwrap_or(1);
    let sim = simulate_case(case, 100, case.default_params(), seed).unwrap();
    let iterations = std::env::var("ITERS").ok().map(|s| s.parse().unwrap()).unwrap_or(6000);
    let config = SamplerConfig { iterations, burn_in: iterations / 6, ..SamplerConfig::default() };
    let t = Instant::now();
    let draws = run_chain(&sim.image, case.fitted_family(), &config, &mut rng::stream(seed)).unwrap();
    let mean = posterior_mean_curve(&draws).unwrap();
    let band = uniform_credible_band(&draws, 0.95).unwrap();
    println!(
        "{case} bayes {:.5} covers {} L0 {:.3} clamp {:.5} rejected {} a {:.3} time {:.1}s evals {} stepouts {}",
        lebesgue_error(&mean, &sim.truth, 10_000),
        band.contains(&sim.truth),
        band.multiplier,
        draws.diagnostics.clamp_fraction(),
        draws.diagnostics.rejected_noise_updates,
        draws.scalars.iter().filter_map(|s| s.scale).sum::<f64>() / draws.len() as f64,
        t.elapsed().as_secs_f64(), draws.diagnostics.density_evaluations, draws.diagnostics.step_outs
    );
    for n in [5, 31] {
        let fit = mce_baseline(&sim.image, &BaselineConfig::default().with_basis(n)).unwrap();
        println!("mce{n} {:.5}", lebesgue_error(&fit, &sim.truth, 10_000));
    }
}
