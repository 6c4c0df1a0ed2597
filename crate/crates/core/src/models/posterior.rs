use rand::Rng;

use super::truncated::{truncated_beta, truncated_gamma, truncated_normal};
use super::{GaussianOrder, NoiseModel, PriorHyperparams, RegionStats};
use crate::error::{Error, Result};

/// One Gibbs scan over the noise parameters given the current partition.
///
/// Each parameter is drawn from its conjugate conditional truncated so the
/// order constraint against the other region's current value holds, by
/// inversion of the truncated CDF. `current` supplies the starting values and
/// the family.
pub fn sample_ordered_posterior<R: Rng + ?Sized>(
    prior: &PriorHyperparams,
    stats: &RegionStats,
    current: &NoiseModel,
    rng: &mut R,
) -> Result<NoiseModel> {
    let (n1, n2) = (stats.n_in as f64, stats.n_out as f64);
    let next = match *current {
        NoiseModel::Bernoulli { p_out, .. } => {
            let (a, b) = prior.beta;
            let p_in = truncated_beta(a + stats.sum_in, b + n1 - stats.sum_in, p_out, 1.0, rng)?;
            let p_in = above(p_in, p_out);
            let p_out = truncated_beta(a + stats.sum_out, b + n2 - stats.sum_out, 0.0, p_in, rng)?;
            NoiseModel::Bernoulli { p_in, p_out: below(p_out, p_in) }
        }
        NoiseModel::Poisson { rate_out, .. } => {
            let (a, b) = prior.poisson_gamma;
            let rate_in = above(truncated_gamma(a + stats.sum_in, b + n1, rate_out, f64::INFINITY, rng)?, rate_out);
            let rate_out = below(truncated_gamma(a + stats.sum_out, b + n2, 0.0, rate_in, rng)?, rate_in);
            NoiseModel::Poisson { rate_in, rate_out }
        }
        NoiseModel::Exponential { rate_out, .. } => {
            let (a, b) = prior.exponential_gamma;
            let rate_in = above(truncated_gamma(a + n1, b + stats.sum_in, rate_out, f64::INFINITY, rng)?, rate_out);
            let rate_out = below(truncated_gamma(a + n2, b + stats.sum_out, 0.0, rate_in, rng)?, rate_in);
            NoiseModel::Exponential { rate_in, rate_out }
        }
        NoiseModel::Gaussian { sd_in, sd_out, mean_out, order, .. } => {
            gaussian_scan(prior, stats, sd_in, sd_out, mean_out, order, rng)?
        }
    };
    Ok(next)
}

#[allow(clippy::too_many_arguments)]
fn gaussian_scan<R: Rng + ?Sized>(
    prior: &PriorHyperparams,
    s: &RegionStats,
    sd_in: f64,
    sd_out: f64,
    mean_out: f64,
    order: GaussianOrder,
    rng: &mut R,
) -> Result<NoiseModel> {
    let (n1, n2) = (s.n_in as f64, s.n_out as f64);
    if s.total() == 0 {
        return Err(Error::DegeneratePosterior("no observations".into()));
    }
    let mu0 = prior
        .normal_mean
        .unwrap_or((s.sum_in + s.sum_out) / s.total() as f64);
    let prior_prec = 1.0 / (prior.normal_sd * prior.normal_sd);
    // Conditional normal for a mean given the region's precision(s).
    let conditional = |n: f64, sum: f64, prec: f64| {
        let post_prec = prior_prec + n * prec;
        ((prior_prec * mu0 + prec * sum) / post_prec, post_prec.sqrt().recip())
    };
    let (p1, p2) = (sd_in.powi(-2), sd_out.powi(-2));

    let (mean_in, mean_out) = match order {
        GaussianOrder::MeanEqualVariance | GaussianOrder::MeanAndVariance => {
            let (m, sd) = conditional(n1, s.sum_in, p1);
            let mean_in = above(truncated_normal(m, sd, mean_out, f64::INFINITY, rng)?, mean_out);
            let (m, sd) = conditional(n2, s.sum_out, p2);
            let mean_out = below(truncated_normal(m, sd, f64::NEG_INFINITY, mean_in, rng)?, mean_in);
            (mean_in, mean_out)
        }
        GaussianOrder::VarianceEqualMean => {
            let post_prec = prior_prec + n1 * p1 + n2 * p2;
            let m = (prior_prec * mu0 + p1 * s.sum_in + p2 * s.sum_out) / post_prec;
            let mu = truncated_normal(m, post_prec.sqrt().recip(), f64::NEG_INFINITY, f64::INFINITY, rng)?;
            (mu, mu)
        }
        GaussianOrder::Variance => {
            let (m, sd) = conditional(n1, s.sum_in, p1);
            let mean_in = truncated_normal(m, sd, f64::NEG_INFINITY, f64::INFINITY, rng)?;
            let (m, sd) = conditional(n2, s.sum_out, p2);
            let mean_out = truncated_normal(m, sd, f64::NEG_INFINITY, f64::INFINITY, rng)?;
            (mean_in, mean_out)
        }
    };

    let ss = |n: f64, sum: f64, sumsq: f64, mean: f64| (sumsq - 2.0 * mean * sum + n * mean * mean).max(0.0);
    let ss1 = ss(n1, s.sum_in, s.sumsq_in, mean_in);
    let ss2 = ss(n2, s.sum_out, s.sumsq_out, mean_out);
    let (a, b) = prior.precision_gamma;
    let (sd_in, sd_out) = match order {
        GaussianOrder::MeanEqualVariance => {
            let prec = truncated_gamma(a + 0.5 * (n1 + n2), b + 0.5 * (ss1 + ss2), 0.0, f64::INFINITY, rng)?;
            let sd = prec.sqrt().recip();
            (sd, sd)
        }
        _ => {
            // σ1 > σ2 is precision_in < precision_out.
            let prec_in = below(truncated_gamma(a + 0.5 * n1, b + 0.5 * ss1, 0.0, p2, rng)?, p2);
            let prec_out = above(truncated_gamma(a + 0.5 * n2, b + 0.5 * ss2, prec_in, f64::INFINITY, rng)?, prec_in);
            (prec_in.sqrt().recip(), prec_out.sqrt().recip())
        }
    };
    Ok(NoiseModel::Gaussian { mean_in, sd_in, mean_out, sd_out, order })
}

fn above(x: f64, bound: f64) -> f64 {
    if x > bound {
        x
    } else {
        next_up(bound)
    }
}

fn below(x: f64, bound: f64) -> f64 {
    if x < bound {
        x
    } else {
        next_down(bound)
    }
}

fn next_up(x: f64) -> f64 {
    if x == 0.0 {
        f64::from_bits(1)
    } else if x > 0.0 {
        f64::from_bits(x.to_bits() + 1)
    } else {
        f64::from_bits(x.to_bits() - 1)
    }
}

fn next_down(x: f64) -> f64 {
    -next_up(-x)
}
