use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::chain::{check_family, GridEvaluator, PixelSet};
use super::{PosteriorDraws, SamplerConfig, ScalarDraw};
use crate::error::{Error, Result};
use crate::geometry::PolarImage;
use crate::models::{mle_from_stats, region_loglik_unchecked, sample_ordered_posterior, NoiseFamily};

/// Settings of the fixed-order random-series sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeriesConfig {
    /// Prior standard deviation of every coefficient.
    pub coefficient_sd: f64,
    /// Initial random-walk step for every coefficient.
    pub step: f64,
    /// Burn-in iterations between step adaptations.
    pub adapt_interval: usize,
    pub target_acceptance: (f64, f64),
}

impl Default for SeriesConfig {
    fn default() -> Self {
        Self { coefficient_sd: 0.2, step: 0.02, adapt_interval: 50, target_acceptance: (0.25, 0.45) }
    }
}

/// Fixed-`J` trigonometric series prior with independent `N(0, s²)`
/// coefficients, sampled by per-coordinate random-walk Metropolis.
///
/// Steps are adapted per coordinate during burn-in towards the target
/// acceptance window and frozen afterwards. Noise parameters get the same
/// ordered conjugate scan as [`run_chain`](super::run_chain). Only
/// `iterations`, `burn_in`, `thinning`, `prior`, `prior_mean`, `grid_size`,
/// `updates.curve`/`updates.noise` and `initial` are read from `config`.
pub fn run_random_series_chain<R: Rng + ?Sized>(
    image: &PolarImage,
    family: NoiseFamily,
    half_order: usize,
    config: &SamplerConfig,
    series: &SeriesConfig,
    rng: &mut R,
) -> Result<PosteriorDraws> {
    config.validate()?;
    if half_order == 0 {
        return Err(Error::Config("half order J must be at least 1".into()));
    }
    if !(series.coefficient_sd > 0.0 && series.step > 0.0 && series.adapt_interval > 0) {
        return Err(Error::Config("series prior sd, step and adapt interval must be positive".into()));
    }
    if image.is_empty() {
        return Err(Error::EmptyRegion("image has no pixels".into()));
    }
    let basis_len = 2 * half_order + 1;
    let pixels = PixelSet::new(image, basis_len, &config.prior_mean);
    let grid = GridEvaluator::new(config.grid_size, basis_len, &config.prior_mean);
    let prior_prec = 1.0 / (series.coefficient_sd * series.coefficient_sd);

    let mut z = config.initial.coefficients.clone().unwrap_or_else(|| vec![0.0; basis_len]);
    if z.len() != basis_len {
        return Err(Error::Config(format!("{} initial coefficients for L = {basis_len}", z.len())));
    }
    let mut raw = pixels.raw_from(&z);
    let mut stats = pixels.stats(&raw);
    if stats.is_degenerate() {
        return Err(Error::EmptyRegion("initial curve empties a region".into()));
    }
    let mut noise = match config.initial.noise {
        Some(m) => {
            check_family(&m, family)?;
            m
        }
        None => mle_from_stats(&stats, family)?,
    };

    let mut steps = vec![series.step; basis_len];
    let mut window_accepts = vec![0usize; basis_len];
    let mut window_len = 0usize;
    let (mut accepted, mut proposed) = (0u64, 0u64);
    let mut draws = PosteriorDraws::empty(grid.angles.clone(), config.retained());
    let mut diag = std::mem::take(&mut draws.diagnostics);

    for it in 0..config.iterations {
        if it % config.refresh_interval == 0 {
            raw = pixels.raw_from(&z);
        }
        if config.updates.curve {
            let mut current = region_loglik_unchecked(&noise, &stats);
            for k in 0..basis_len {
                let eps: f64 = StandardNormal.sample(rng);
                let proposal = z[k] + steps[k] * eps;
                let st = pixels.stats_shifted(&raw, k, proposal - z[k]);
                diag.density_evaluations += 1;
                let accept = if st.is_degenerate() {
                    false
                } else {
                    let ll = region_loglik_unchecked(&noise, &st);
                    let log_ratio = ll - current - 0.5 * prior_prec * (proposal * proposal - z[k] * z[k]);
                    let ok = log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio;
                    if ok {
                        current = ll;
                        stats = st;
                    }
                    ok
                };
                if accept {
                    pixels.shift(&mut raw, k, proposal - z[k]);
                    z[k] = proposal;
                    window_accepts[k] += 1;
                }
                if it >= config.burn_in {
                    proposed += 1;
                    accepted += accept as u64;
                }
            }
            window_len += 1;
            if it < config.burn_in && window_len == series.adapt_interval {
                for (s, a) in steps.iter_mut().zip(window_accepts.iter_mut()) {
                    let rate = *a as f64 / window_len as f64;
                    if rate < series.target_acceptance.0 {
                        *s *= 0.8;
                    } else if rate > series.target_acceptance.1 {
                        *s *= 1.25;
                    }
                    *a = 0;
                }
                window_len = 0;
            }
        }

        if config.updates.noise {
            match sample_ordered_posterior(&config.prior, &stats, &noise, rng) {
                Ok(m) => noise = m,
                Err(Error::DegeneratePosterior(_)) => diag.rejected_noise_updates += 1,
                Err(e) => return Err(e),
            }
        }

        let prior_term: f64 = -0.5 * prior_prec * z.iter().map(|v| v * v).sum::<f64>();
        diag.log_posterior.push(region_loglik_unchecked(&noise, &stats) + prior_term);

        if it >= config.burn_in && (it - config.burn_in).is_multiple_of(config.thinning) && draws.len() < config.retained() {
            let (values, grid_clamps) = grid.evaluate(&z);
            diag.clamp_events += PixelSet::clamp_count(&raw) + grid_clamps;
            diag.clamp_checks += (raw.len() + values.len()) as u64;
            draws.push(&values, &z, ScalarDraw { scale: None, precision: None, noise });
        }
    }
    diag.iterations = config.iterations;
    diag.acceptance_rate = (proposed > 0).then(|| accepted as f64 / proposed as f64);
    draws.diagnostics = diag;
    Ok(draws)
}
