use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{angle_grid, max_radius, Boundary, PolarImage, MIN_RADIUS};
use crate::models::NoiseFamily;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineMethod {
    Mce,
    Cp,
}

impl BaselineMethod {
    pub fn name(self) -> &'static str {
        match self {
            BaselineMethod::Mce => "mce",
            BaselineMethod::Cp => "cp",
        }
    }
}

impl fmt::Display for BaselineMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaselineMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mce" => Ok(BaselineMethod::Mce),
            "cp" => Ok(BaselineMethod::Cp),
            other => Err(Error::Parse(format!("unknown baseline '{other}' (expected mce or cp)"))),
        }
    }
}

/// Change-point radius used on rays without a significant split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UndetectedRays {
    /// No change along the ray: the boundary is placed at the image frame.
    #[default]
    Frame,
    /// Linear interpolation between the neighbouring detected rays.
    Interpolate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    pub n_angles: usize,
    /// Half-width of the angular band around each ray, in radians.
    pub band_halfwidth: f64,
    /// Number of trigonometric functions in the smoother (odd).
    pub n_basis: usize,
    /// Ridge penalty on the non-constant Fourier coefficients.
    pub penalty: f64,
    pub min_band_pixels: usize,
    pub min_side_pixels: usize,
    pub undetected: UndetectedRays,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            n_angles: 1000,
            band_halfwidth: PI / 64.0,
            n_basis: 5,
            penalty: 1e-3,
            min_band_pixels: 20,
            min_side_pixels: 5,
            undetected: UndetectedRays::default(),
        }
    }
}

impl BaselineConfig {
    pub fn with_basis(mut self, n_basis: usize) -> Self {
        self.n_basis = n_basis;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_angles < self.n_basis || self.n_basis == 0 || self.n_basis.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "n_basis must be odd and at most n_angles, got {} with {} angles",
                self.n_basis, self.n_angles
            )));
        }
        if !(self.band_halfwidth > 0.0 && self.band_halfwidth < PI) {
            return Err(Error::InvalidParameter(format!("band half-width {} outside (0, π)", self.band_halfwidth)));
        }
        if !(self.penalty >= 0.0) {
            return Err(Error::InvalidParameter(format!("penalty must be non-negative, got {}", self.penalty)));
        }
        if self.min_side_pixels == 0 || self.min_band_pixels < 2 * self.min_side_pixels {
            return Err(Error::InvalidParameter("min_band_pixels must allow two non-empty sides".into()));
        }
        Ok(())
    }
}

/// Raw per-ray split radii and their Fourier smooth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineFit {
    pub method: BaselineMethod,
    pub angles: Vec<f64>,
    pub raw_radii: Vec<f64>,
    /// False where the ray showed no significant change.
    pub detected: Vec<bool>,
    pub coefficients: Vec<f64>,
}

impl BaselineFit {
    pub fn smooth(&self, omega: f64) -> f64 {
        let mut v = self.coefficients[0];
        for (j, pair) in self.coefficients[1..].chunks(2).enumerate() {
            let k = (j + 1) as f64;
            v += pair[0] * (k * omega).cos() + pair[1] * (k * omega).sin();
        }
        v
    }

    pub fn detected_fraction(&self) -> f64 {
        self.detected.iter().filter(|&&d| d).count() as f64 / self.detected.len() as f64
    }
}

impl Boundary for BaselineFit {
    /// Smoothed radius, clamped to the image frame.
    fn radius(&self, omega: f64) -> f64 {
        self.smooth(omega).clamp(MIN_RADIUS, max_radius(omega))
    }
}

/// Pixels sorted by angle for band queries.
struct AngularIndex {
    omegas: Vec<f64>,
    radii: Vec<f64>,
    ys: Vec<f64>,
}

impl AngularIndex {
    fn new(image: &PolarImage) -> Self {
        let mut obs = image.observations.clone();
        obs.sort_by(|a, b| a.omega.total_cmp(&b.omega));
        Self {
            omegas: obs.iter().map(|p| p.omega).collect(),
            radii: obs.iter().map(|p| p.r).collect(),
            ys: obs.iter().map(|p| p.y).collect(),
        }
    }

    fn push_range(&self, lo: f64, hi: f64, out: &mut Vec<(f64, f64)>) {
        let a = self.omegas.partition_point(|&w| w < lo);
        let b = self.omegas.partition_point(|&w| w <= hi);
        out.extend((a..b).map(|i| (self.radii[i], self.ys[i])));
    }

    /// `(r, y)` pairs within `halfwidth` of `omega`, sorted by radius.
    fn band(&self, omega: f64, halfwidth: f64, out: &mut Vec<(f64, f64)>) {
        out.clear();
        let (lo, hi) = (omega - halfwidth, omega + halfwidth);
        self.push_range(lo.max(0.0), hi.min(TAU), out);
        if lo < 0.0 {
            self.push_range(lo + TAU, TAU, out);
        }
        if hi > TAU {
            self.push_range(0.0, hi - TAU, out);
        }
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
}

/// Best split `s` (inside = first `s` pixels) and its score.
fn best_split(band: &[(f64, f64)], min_side: usize, score: impl Fn(usize, f64, f64, usize, f64, f64) -> f64) -> (usize, f64) {
    let n = band.len();
    let total: f64 = band.iter().map(|p| p.1).sum();
    let total_sq: f64 = band.iter().map(|p| p.1 * p.1).sum();
    let (mut sum, mut sq) = (0.0, 0.0);
    let mut best = (min_side, f64::NEG_INFINITY);
    for s in 1..=n - min_side {
        sum += band[s - 1].1;
        sq += band[s - 1].1 * band[s - 1].1;
        if s < min_side {
            continue;
        }
        let v = score(s, sum, sq, n - s, total - sum, total_sq - sq);
        if v > best.1 {
            best = (s, v);
        }
    }
    best
}

fn split_radius(band: &[(f64, f64)], s: usize) -> f64 {
    0.5 * (band[s - 1].0 + band[s].0)
}

fn check_band(omega: f64, band: &[(f64, f64)], config: &BaselineConfig) -> Result<()> {
    if band.len() < config.min_band_pixels {
        return Err(Error::InsufficientBandData { omega, count: band.len(), required: config.min_band_pixels });
    }
    Ok(())
}

/// Ridge fit of `radii` on `1, cos kω, sin kω`; the intercept is unpenalized.
pub fn fourier_ridge(angles: &[f64], radii: &[f64], n_basis: usize, penalty: f64) -> Result<Vec<f64>> {
    let x = DMatrix::from_fn(angles.len(), n_basis, |i, c| {
        if c == 0 {
            1.0
        } else {
            let k = c.div_ceil(2) as f64;
            if c % 2 == 1 {
                (k * angles[i]).cos()
            } else {
                (k * angles[i]).sin()
            }
        }
    });
    let mut gram = x.transpose() * &x;
    for c in 1..n_basis {
        gram[(c, c)] += penalty;
    }
    let rhs = x.transpose() * DVector::from_column_slice(radii);
    let sol = gram
        .cholesky()
        .ok_or_else(|| Error::InvalidParameter("singular Fourier design".into()))?
        .solve(&rhs);
    Ok(sol.iter().copied().collect())
}

/// Maximum-contrast estimator.
///
/// Each ray takes the split radius maximizing the difference of the sample
/// means on either side, then the raw radii are smoothed.
pub fn mce_baseline(image: &PolarImage, config: &BaselineConfig) -> Result<BaselineFit> {
    config.validate()?;
    let index = AngularIndex::new(image);
    let angles = angle_grid(config.n_angles);
    let mut band = Vec::new();
    let mut raw = Vec::with_capacity(angles.len());
    for &w in &angles {
        index.band(w, config.band_halfwidth, &mut band);
        check_band(w, &band, config)?;
        let (s, _) = best_split(&band, config.min_side_pixels, |n1, s1, _, n2, s2, _| (s1 / n1 as f64 - s2 / n2 as f64).abs());
        raw.push(split_radius(&band, s));
    }
    let coefficients = fourier_ridge(&angles, &raw, config.n_basis, config.penalty)?;
    Ok(BaselineFit { method: BaselineMethod::Mce, detected: vec![true; raw.len()], angles, raw_radii: raw, coefficients })
}

fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Binomial log-likelihood at the MLE for `k` successes in `n` trials.
fn bernoulli_ll(k: f64, n: f64) -> f64 {
    xlogx(k) + xlogx(n - k) - xlogx(n)
}

/// Single change-point detector.
///
/// Each ray fits a two-segment model (Bernoulli for binary data, Gaussian
/// mean shift with pooled variance otherwise). Rays whose likelihood-ratio
/// statistic falls below `2 ln n` are flagged and resolved per
/// [`UndetectedRays`].
pub fn cp_baseline(image: &PolarImage, family: NoiseFamily, config: &BaselineConfig) -> Result<BaselineFit> {
    config.validate()?;
    let index = AngularIndex::new(image);
    let angles = angle_grid(config.n_angles);
    let binary = matches!(family, NoiseFamily::Bernoulli);
    let mut band = Vec::new();
    let mut raw = Vec::with_capacity(angles.len());
    let mut detected = Vec::with_capacity(angles.len());
    for &w in &angles {
        index.band(w, config.band_halfwidth, &mut band);
        check_band(w, &band, config)?;
        let n = band.len() as f64;
        let total: f64 = band.iter().map(|p| p.1).sum();
        let total_sq: f64 = band.iter().map(|p| p.1 * p.1).sum();
        let (s, stat) = if binary {
            let ll0 = bernoulli_ll(total, n);
            best_split(&band, config.min_side_pixels, |n1, s1, _, n2, s2, _| {
                2.0 * (bernoulli_ll(s1, n1 as f64) + bernoulli_ll(s2, n2 as f64) - ll0)
            })
        } else {
            let rss0 = (total_sq - total * total / n).max(0.0);
            best_split(&band, config.min_side_pixels, |n1, s1, q1, n2, s2, q2| {
                let rss1 = (q1 - s1 * s1 / n1 as f64) + (q2 - s2 * s2 / n2 as f64);
                if rss1 > 0.0 && rss0 > 0.0 {
                    n * (rss0 / rss1).ln()
                } else {
                    0.0
                }
            })
        };
        raw.push(split_radius(&band, s));
        detected.push(stat > 2.0 * n.ln());
    }
    if config.undetected == UndetectedRays::Interpolate && detected.iter().any(|&d| d) {
        interpolate_undetected(&angles, &mut raw, &detected);
    } else {
        for ((r, &w), _) in raw.iter_mut().zip(&angles).zip(&detected).filter(|(_, &d)| !d) {
            *r = max_radius(w);
        }
    }
    let coefficients = fourier_ridge(&angles, &raw, config.n_basis, config.penalty)?;
    Ok(BaselineFit { method: BaselineMethod::Cp, angles, raw_radii: raw, detected, coefficients })
}

/// Linear interpolation around the circle between detected rays.
fn interpolate_undetected(angles: &[f64], raw: &mut [f64], detected: &[bool]) {
    let n = angles.len();
    let hits: Vec<usize> = (0..n).filter(|&i| detected[i]).collect();
    for (h, &i) in hits.iter().enumerate() {
        let j = hits[(h + 1) % hits.len()];
        let gap = (j + n - i) % n;
        let gap = if gap == 0 { n } else { gap };
        for step in 1..gap {
            let t = step as f64 / gap as f64;
            raw[(i + step) % n] = (1.0 - t) * raw[i] + t * raw[j];
        }
    }
}
