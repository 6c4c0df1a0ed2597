//! Inverse-CDF draws from Beta, Gamma and Normal laws truncated to an interval.

use rand::Rng;
use statrs::distribution::{Beta, Continuous, ContinuousCDF, Gamma, Normal};

use crate::error::{Error, Result};

/// A continuous law with cumulative and survival functions.
trait Law {
    fn cdf(&self, x: f64) -> f64;
    fn sf(&self, x: f64) -> f64;
    fn ln_pdf(&self, x: f64) -> f64;
}

macro_rules! impl_law {
    ($t:ty) => {
        impl Law for $t {
            fn cdf(&self, x: f64) -> f64 {
                ContinuousCDF::cdf(self, x)
            }
            fn sf(&self, x: f64) -> f64 {
                ContinuousCDF::sf(self, x)
            }
            fn ln_pdf(&self, x: f64) -> f64 {
                Continuous::ln_pdf(self, x)
            }
        }
    };
}

impl_law!(Beta);
impl_law!(Gamma);
impl_law!(Normal);

/// Beta(`shape_a`, `shape_b`) restricted to `(lo, hi) ⊂ (0, 1)`.
pub fn truncated_beta<R: Rng + ?Sized>(shape_a: f64, shape_b: f64, lo: f64, hi: f64, rng: &mut R) -> Result<f64> {
    if !(shape_a > 0.0 && shape_b > 0.0 && shape_a.is_finite() && shape_b.is_finite()) {
        return Err(Error::DegeneratePosterior(format!("Beta({shape_a}, {shape_b}) is improper")));
    }
    let law = Beta::new(shape_a, shape_b).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    draw(&law, lo.max(0.0), hi.min(1.0), rng)
}

/// Gamma(shape, rate) restricted to `(lo, hi) ⊂ (0, ∞)`.
pub fn truncated_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, lo: f64, hi: f64, rng: &mut R) -> Result<f64> {
    if !(shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite()) {
        return Err(Error::DegeneratePosterior(format!("Gamma({shape}, {rate}) is improper")));
    }
    let law = Gamma::new(shape, rate).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    draw(&law, lo.max(0.0), hi, rng)
}

/// Normal(mean, sd) restricted to `(lo, hi)`.
pub fn truncated_normal<R: Rng + ?Sized>(mean: f64, sd: f64, lo: f64, hi: f64, rng: &mut R) -> Result<f64> {
    if !(sd > 0.0 && sd.is_finite() && mean.is_finite()) {
        return Err(Error::DegeneratePosterior(format!("Normal({mean}, {sd}) is improper")));
    }
    // Work on the standardized scale; the upper tail is mirrored onto the lower one.
    let (a, b) = ((lo - mean) / sd, (hi - mean) / sd);
    let std = Normal::new(0.0, 1.0).expect("standard normal");
    let z = if a > 0.0 {
        -draw(&std, -b, -a, rng)?
    } else {
        draw(&std, a, b, rng)?
    };
    Ok(mean + sd * z)
}

fn draw<L: Law, R: Rng + ?Sized>(law: &L, lo: f64, hi: f64, rng: &mut R) -> Result<f64> {
    if !(lo < hi) {
        return Err(Error::InvalidParameter(format!("empty truncation interval ({lo}, {hi})")));
    }
    let u: f64 = rng.random();
    // Invert whichever tail keeps precision: the CDF on the left half, the
    // survival function on the right half.
    let use_sf = law.cdf(lo) > 0.5;
    let (p_lo, p_hi) = if use_sf {
        (law.sf(hi), law.sf(lo))
    } else {
        (law.cdf(lo), law.cdf(hi))
    };
    let mass = p_hi - p_lo;
    if !(mass > 1e-300) || mass < 1e-13 * p_hi {
        return Ok(boundary_tilt(law, lo, hi, u));
    }
    let target = p_lo + u * mass;
    let f = |x: f64| if use_sf { p_hi + p_lo - law.sf(x) } else { law.cdf(x) };
    Ok(invert(law, f, target, lo, hi))
}

// Finite bracket `[a, b]` inside `[lo, hi]` with `g(a) <= target <= g(b)`,
// found by doubling steps away from the finite end.
fn bracket(g: &impl Fn(f64) -> f64, target: f64, lo: f64, hi: f64) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    if !a.is_finite() {
        let mut step = 1.0;
        let mut x = if b.is_finite() { b - 1.0 } else { 0.0 };
        while g(x) > target && step < 1e300 {
            b = x;
            x -= step;
            step *= 2.0;
        }
        a = x;
    }
    if !b.is_finite() {
        let mut step = 1.0;
        let mut x = a + 1.0;
        while g(x) < target && step < 1e300 {
            a = x;
            x += step;
            step *= 2.0;
        }
        b = x;
    }
    (a, b)
}

// Safeguarded Newton on a monotone increasing function g with g' = pdf,
// falling back to bisection whenever a step leaves the bracket.
fn invert<L: Law>(law: &L, g: impl Fn(f64) -> f64, target: f64, lo: f64, hi: f64) -> f64 {
    let (mut a, mut b) = bracket(&g, target, lo, hi);
    let mut x = 0.5 * (a + b);
    for _ in 0..2000 {
        let gx = g(x) - target;
        if gx == 0.0 {
            return x;
        }
        if gx < 0.0 {
            a = x;
        } else {
            b = x;
        }
        let dens = law.ln_pdf(x).exp();
        let mut next = x - gx / dens;
        if !(next > a && next < b) {
            next = 0.5 * (a + b);
        }
        if (next - x).abs() <= 1e-15 * x.abs().max(1e-300) || (b - a) <= 1e-15 * b.abs().max(a.abs()) {
            return next;
        }
        x = next;
    }
    x
}

// When the interval holds numerically negligible mass, the density is
// monotone across it; approximate it by the exponential tilt at the end
// nearest the mode and sample that truncated exponential.
fn boundary_tilt<L: Law>(law: &L, lo: f64, hi: f64, u: f64) -> f64 {
    let from_lo = !hi.is_finite() || (lo.is_finite() && law.ln_pdf(lo) >= law.ln_pdf(hi));
    let (edge, dir) = if from_lo { (lo, 1.0) } else { (hi, -1.0) };
    let width = if lo.is_finite() && hi.is_finite() { hi - lo } else { f64::INFINITY };
    let h = (edge.abs() * 1e-6).max(1e-12);
    let slope = -dir * (law.ln_pdf(edge + dir * h) - law.ln_pdf(edge)) / h;
    if !(slope > 0.0) || !slope.is_finite() {
        return if width.is_finite() { lo + u * width } else { edge };
    }
    let cap = if width.is_finite() { 1.0 - (-slope * width).exp() } else { 1.0 };
    let step = -(1.0 - u * cap).ln() / slope;
    (edge + dir * step).clamp(lo.min(hi), hi.max(lo))
}
