//! Noise families, region likelihoods, ordered conjugate posteriors and the
//! Hellinger separation diagnostic.
//!
//! The inside parameter is constrained to exceed the outside one (for the
//! Gaussian family, per the configured [`GaussianOrder`]) so that the two
//! regions stay identifiable.

mod posterior;
pub mod truncated;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use posterior::sample_ordered_posterior;

/// Which coordinates of the Gaussian pair `((μ1, σ1), (μ2, σ2))` are ordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GaussianOrder {
    /// `μ1 > μ2`, common standard deviation.
    MeanEqualVariance,
    /// `μ1 > μ2` and `σ1 > σ2`.
    #[default]
    MeanAndVariance,
    /// `σ1 > σ2`, common mean.
    VarianceEqualMean,
    /// `σ1 > σ2`, means unrestricted.
    Variance,
}

impl GaussianOrder {
    pub fn orders_means(self) -> bool {
        matches!(self, GaussianOrder::MeanEqualVariance | GaussianOrder::MeanAndVariance)
    }

    pub fn orders_variances(self) -> bool {
        matches!(self, GaussianOrder::MeanAndVariance | GaussianOrder::VarianceEqualMean | GaussianOrder::Variance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum NoiseFamily {
    Bernoulli,
    Gaussian { order: GaussianOrder },
    Poisson,
    Exponential,
}

impl NoiseFamily {
    pub fn name(&self) -> &'static str {
        match self {
            NoiseFamily::Bernoulli => "bernoulli",
            NoiseFamily::Gaussian { .. } => "gaussian",
            NoiseFamily::Poisson => "poisson",
            NoiseFamily::Exponential => "exponential",
        }
    }
}

/// A single-region density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum RegionDensity {
    Bernoulli { p: f64 },
    Gaussian { mean: f64, sd: f64 },
    Poisson { rate: f64 },
    Exponential { rate: f64 },
}

impl RegionDensity {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            RegionDensity::Bernoulli { p } => p > 0.0 && p < 1.0,
            RegionDensity::Gaussian { mean, sd } => mean.is_finite() && sd > 0.0 && sd.is_finite(),
            RegionDensity::Poisson { rate } | RegionDensity::Exponential { rate } => rate > 0.0 && rate.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid density parameters {self:?}")))
        }
    }

    /// Log density (or mass) of one observation, including every constant.
    pub fn ln_density(&self, y: f64) -> f64 {
        match *self {
            RegionDensity::Bernoulli { p } => {
                if y > 0.5 {
                    p.ln()
                } else {
                    (1.0 - p).ln()
                }
            }
            RegionDensity::Gaussian { mean, sd } => {
                -sd.ln() - 0.5 * (2.0 * PI).ln() - (y - mean).powi(2) / (2.0 * sd * sd)
            }
            RegionDensity::Poisson { rate } => {
                y * rate.ln() - rate - statrs::function::gamma::ln_gamma(y + 1.0)
            }
            RegionDensity::Exponential { rate } => rate.ln() - rate * y,
        }
    }
}

/// Inside/outside parameters `(ξ, ρ)` of one noise family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum NoiseModel {
    Bernoulli { p_in: f64, p_out: f64 },
    Gaussian { mean_in: f64, sd_in: f64, mean_out: f64, sd_out: f64, order: GaussianOrder },
    Poisson { rate_in: f64, rate_out: f64 },
    Exponential { rate_in: f64, rate_out: f64 },
}

impl NoiseModel {
    pub fn family(&self) -> NoiseFamily {
        match *self {
            NoiseModel::Bernoulli { .. } => NoiseFamily::Bernoulli,
            NoiseModel::Gaussian { order, .. } => NoiseFamily::Gaussian { order },
            NoiseModel::Poisson { .. } => NoiseFamily::Poisson,
            NoiseModel::Exponential { .. } => NoiseFamily::Exponential,
        }
    }

    pub fn inside(&self) -> RegionDensity {
        match *self {
            NoiseModel::Bernoulli { p_in, .. } => RegionDensity::Bernoulli { p: p_in },
            NoiseModel::Gaussian { mean_in, sd_in, .. } => RegionDensity::Gaussian { mean: mean_in, sd: sd_in },
            NoiseModel::Poisson { rate_in, .. } => RegionDensity::Poisson { rate: rate_in },
            NoiseModel::Exponential { rate_in, .. } => RegionDensity::Exponential { rate: rate_in },
        }
    }

    pub fn outside(&self) -> RegionDensity {
        match *self {
            NoiseModel::Bernoulli { p_out, .. } => RegionDensity::Bernoulli { p: p_out },
            NoiseModel::Gaussian { mean_out, sd_out, .. } => RegionDensity::Gaussian { mean: mean_out, sd: sd_out },
            NoiseModel::Poisson { rate_out, .. } => RegionDensity::Poisson { rate: rate_out },
            NoiseModel::Exponential { rate_out, .. } => RegionDensity::Exponential { rate: rate_out },
        }
    }

    /// Positivity plus the family's strict order constraint.
    pub fn validate(&self) -> Result<()> {
        self.validate_params()?;
        if self.satisfies_order() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("order constraint violated by {self:?}")))
        }
    }

    /// Positivity/range checks only; equal inside and outside parameters pass.
    pub fn validate_params(&self) -> Result<()> {
        self.inside().validate()?;
        self.outside().validate()
    }

    pub fn satisfies_order(&self) -> bool {
        match *self {
            NoiseModel::Bernoulli { p_in, p_out } => p_in > p_out,
            NoiseModel::Poisson { rate_in, rate_out } | NoiseModel::Exponential { rate_in, rate_out } => {
                rate_in > rate_out
            }
            NoiseModel::Gaussian { mean_in, sd_in, mean_out, sd_out, order } => match order {
                GaussianOrder::MeanEqualVariance => mean_in > mean_out && sd_in == sd_out,
                GaussianOrder::MeanAndVariance => mean_in > mean_out && sd_in > sd_out,
                GaussianOrder::VarianceEqualMean => mean_in == mean_out && sd_in > sd_out,
                GaussianOrder::Variance => sd_in > sd_out,
            },
        }
    }

    /// Hellinger distance between the inside and outside densities.
    pub fn separation(&self) -> f64 {
        hellinger(&self.inside(), &self.outside()).expect("same family")
    }
}

/// Region counts and sufficient statistics for a partition of the image.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RegionStats {
    pub n_in: usize,
    pub n_out: usize,
    pub sum_in: f64,
    pub sum_out: f64,
    pub sumsq_in: f64,
    pub sumsq_out: f64,
}

impl RegionStats {
    pub fn from_partition(ys: &[f64], inside: &[bool]) -> Self {
        let mut s = RegionStats::default();
        for (&y, &inn) in ys.iter().zip(inside) {
            if inn {
                s.n_in += 1;
                s.sum_in += y;
                s.sumsq_in += y * y;
            } else {
                s.n_out += 1;
                s.sum_out += y;
                s.sumsq_out += y * y;
            }
        }
        s
    }

    /// Builds statistics from the inside accumulators and whole-image totals.
    pub fn from_inside(n_in: usize, sum_in: f64, sumsq_in: f64, totals: &RegionStats) -> Self {
        let n = totals.total();
        let (sum, sumsq) = (totals.sum_in + totals.sum_out, totals.sumsq_in + totals.sumsq_out);
        RegionStats {
            n_in,
            n_out: n - n_in,
            sum_in,
            sum_out: sum - sum_in,
            sumsq_in,
            sumsq_out: sumsq - sumsq_in,
        }
    }

    pub fn total(&self) -> usize {
        self.n_in + self.n_out
    }

    pub fn is_degenerate(&self) -> bool {
        self.n_in == 0 || self.n_out == 0
    }
}

/// Conjugate hyperparameters. Gamma laws are shape–rate throughout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriorHyperparams {
    /// Beta(α1, β1) on each Bernoulli probability; zeros allowed.
    pub beta: (f64, f64),
    /// Prior mean of the Gaussian means; `None` uses the image mean.
    pub normal_mean: Option<f64>,
    pub normal_sd: f64,
    /// Gamma on each Gaussian precision `σ^{-2}`.
    pub precision_gamma: (f64, f64),
    pub poisson_gamma: (f64, f64),
    pub exponential_gamma: (f64, f64),
    /// Gamma prior on the kernel precision τ.
    pub tau: (f64, f64),
    /// Gamma prior on the kernel scale a.
    pub scale: (f64, f64),
}

impl Default for PriorHyperparams {
    fn default() -> Self {
        Self {
            beta: (0.0, 0.0),
            normal_mean: None,
            normal_sd: 1e3,
            precision_gamma: (1e-2, 1e-2),
            poisson_gamma: (1e-2, 1e-2),
            exponential_gamma: (1e-2, 1e-2),
            tau: (500.0, 1.0),
            scale: (2.0, 1.0),
        }
    }
}

impl PriorHyperparams {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
            }
        };
        let (a, b) = self.beta;
        if !((a == 0.0 && b == 0.0) || (a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite())) {
            return Err(Error::InvalidParameter(format!("beta prior ({a}, {b}) must be positive or both zero")));
        }
        pos(self.normal_sd, "normal_sd")?;
        for (name, (s, r)) in [
            ("precision_gamma", self.precision_gamma),
            ("poisson_gamma", self.poisson_gamma),
            ("exponential_gamma", self.exponential_gamma),
            ("tau", self.tau),
            ("scale", self.scale),
        ] {
            pos(s, name)?;
            pos(r, name)?;
        }
        if let Some(m) = self.normal_mean {
            if !m.is_finite() {
                return Err(Error::InvalidParameter("normal_mean must be finite".into()));
            }
        }
        Ok(())
    }
}

/// Log-likelihood of the image given the partition summarized by `stats`.
///
/// Exact except for terms that depend on the data alone: the Poisson form
/// omits `-Σ log y_i!`. Bernoulli, Gaussian and exponential forms are the
/// complete log-likelihoods.
pub fn region_loglik(noise: &NoiseModel, stats: &RegionStats) -> Result<f64> {
    noise.validate_params()?;
    Ok(region_loglik_unchecked(noise, stats))
}

pub(crate) fn region_loglik_unchecked(noise: &NoiseModel, s: &RegionStats) -> f64 {
    let (n1, n2) = (s.n_in as f64, s.n_out as f64);
    match *noise {
        NoiseModel::Bernoulli { p_in, p_out } => {
            s.sum_in * p_in.ln()
                + (n1 - s.sum_in) * (-p_in).ln_1p()
                + s.sum_out * p_out.ln()
                + (n2 - s.sum_out) * (-p_out).ln_1p()
        }
        NoiseModel::Gaussian { mean_in, sd_in, mean_out, sd_out, .. } => {
            let half_ln_2pi = 0.5 * (2.0 * PI).ln();
            let region = |n: f64, sum: f64, sumsq: f64, mean: f64, sd: f64| {
                let ss = sumsq - 2.0 * mean * sum + n * mean * mean;
                -n * (sd.ln() + half_ln_2pi) - ss / (2.0 * sd * sd)
            };
            region(n1, s.sum_in, s.sumsq_in, mean_in, sd_in) + region(n2, s.sum_out, s.sumsq_out, mean_out, sd_out)
        }
        NoiseModel::Poisson { rate_in, rate_out } => {
            s.sum_in * rate_in.ln() - n1 * rate_in + s.sum_out * rate_out.ln() - n2 * rate_out
        }
        NoiseModel::Exponential { rate_in, rate_out } => {
            n1 * rate_in.ln() - rate_in * s.sum_in + n2 * rate_out.ln() - rate_out * s.sum_out
        }
    }
}

/// Hellinger distance `h` with `h² = 1 - ∫ √(f g)`.
pub fn hellinger(a: &RegionDensity, b: &RegionDensity) -> Result<f64> {
    a.validate()?;
    b.validate()?;
    let affinity = match (*a, *b) {
        (RegionDensity::Bernoulli { p }, RegionDensity::Bernoulli { p: q }) => (p * q).sqrt() + ((1.0 - p) * (1.0 - q)).sqrt(),
        (RegionDensity::Gaussian { mean: m1, sd: s1 }, RegionDensity::Gaussian { mean: m2, sd: s2 }) => {
            let v = s1 * s1 + s2 * s2;
            (2.0 * s1 * s2 / v).sqrt() * (-(m1 - m2).powi(2) / (4.0 * v)).exp()
        }
        (RegionDensity::Poisson { rate: l1 }, RegionDensity::Poisson { rate: l2 }) => {
            (-0.5 * (l1.sqrt() - l2.sqrt()).powi(2)).exp()
        }
        (RegionDensity::Exponential { rate: l1 }, RegionDensity::Exponential { rate: l2 }) => {
            2.0 * (l1 * l2).sqrt() / (l1 + l2)
        }
        _ => {
            return Err(Error::InvalidParameter(format!(
                "cannot compare densities of different families: {a:?} vs {b:?}"
            )))
        }
    };
    Ok((1.0 - affinity).max(0.0).sqrt())
}

/// `h(f(ξ0), f(ρ)) + h(f(ρ0), f(ξ))`: how far a fitted pair is from swapping
/// the true inside and outside laws.
pub fn cross_separation(truth: &NoiseModel, fitted: &NoiseModel) -> Result<f64> {
    Ok(hellinger(&truth.inside(), &fitted.outside())? + hellinger(&truth.outside(), &fitted.inside())?)
}

/// Relative gap used when projecting tied estimates onto a strict order.
const ORDER_EPSILON: f64 = 1e-6;

/// Maximum-likelihood parameters for a partition, projected onto the family's
/// order constraint. Bernoulli proportions are smoothed with 0.5 pseudo-counts.
pub fn mle_from_stats(stats: &RegionStats, family: NoiseFamily) -> Result<NoiseModel> {
    if stats.is_degenerate() {
        return Err(Error::EmptyRegion(format!(
            "cannot fit with {} inside and {} outside pixels",
            stats.n_in, stats.n_out
        )));
    }
    let (n1, n2) = (stats.n_in as f64, stats.n_out as f64);
    let (m1, m2) = (stats.sum_in / n1, stats.sum_out / n2);
    let ordered = |hi: f64, lo: f64| -> (f64, f64) {
        if hi > lo {
            (hi, lo)
        } else if hi < lo {
            (lo, hi)
        } else {
            let gap = ORDER_EPSILON * hi.abs().max(ORDER_EPSILON);
            (hi + gap, lo - gap)
        }
    };
    let model = match family {
        NoiseFamily::Bernoulli => {
            let p1 = (stats.sum_in + 0.5) / (n1 + 1.0);
            let p2 = (stats.sum_out + 0.5) / (n2 + 1.0);
            let (p_in, p_out) = ordered(p1, p2);
            NoiseModel::Bernoulli { p_in, p_out }
        }
        NoiseFamily::Poisson => {
            let (rate_in, rate_out) = ordered(m1.max(ORDER_EPSILON), m2.max(ORDER_EPSILON));
            NoiseModel::Poisson { rate_in, rate_out: rate_out.max(ORDER_EPSILON * 0.5) }
        }
        NoiseFamily::Exponential => {
            let (rate_in, rate_out) = ordered(1.0 / m1.max(1e-300), 1.0 / m2.max(1e-300));
            NoiseModel::Exponential { rate_in, rate_out }
        }
        NoiseFamily::Gaussian { order } => {
            let var = |n: f64, sum: f64, sumsq: f64, mean: f64| ((sumsq - 2.0 * mean * sum + n * mean * mean) / n).max(1e-12);
            let pooled = (stats.sum_in + stats.sum_out) / (n1 + n2);
            let (mean_in, mean_out) = match order {
                GaussianOrder::VarianceEqualMean => (pooled, pooled),
                GaussianOrder::Variance => (m1, m2),
                _ => ordered(m1, m2),
            };
            let v1 = var(n1, stats.sum_in, stats.sumsq_in, mean_in);
            let v2 = var(n2, stats.sum_out, stats.sumsq_out, mean_out);
            let (sd_in, sd_out) = match order {
                GaussianOrder::MeanEqualVariance => {
                    let s = ((v1 * n1 + v2 * n2) / (n1 + n2)).sqrt();
                    (s, s)
                }
                _ => ordered(v1.sqrt(), v2.sqrt()),
            };
            NoiseModel::Gaussian { mean_in, sd_in, mean_out, sd_out, order }
        }
    };
    Ok(model)
}

/// MLE given a boundary: partitions the image by `curve` and fits each region.
pub fn mle_given_boundary(
    image: &crate::geometry::PolarImage,
    curve: &impl crate::geometry::Boundary,
    family: NoiseFamily,
) -> Result<NoiseModel> {
    let ys = image.intensities();
    let inside: Vec<bool> = image.observations.iter().map(|o| o.r < curve.radius(o.omega)).collect();
    mle_from_stats(&RegionStats::from_partition(&ys, &inside), family)
}
