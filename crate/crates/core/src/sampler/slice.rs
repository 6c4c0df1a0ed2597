//! Univariate slice sampling with stepping out and shrinkage.

use rand::Rng;

use crate::error::{Error, Result};

/// Result of one slice update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceStep {
    pub value: f64,
    pub evaluations: u32,
    pub step_outs: u32,
}

/// One slice-sampling transition from `x0` for the density `exp(log_density)`.
///
/// The interval is grown in steps of `width` (at most `max_step_outs` in
/// total, split randomly between the two sides) and then shrunk towards `x0`
/// until a point above the slice level is found. `-∞` is a valid log density
/// outside the support.
pub fn slice_sample_1d<F, R>(
    mut log_density: F,
    x0: f64,
    width: f64,
    max_step_outs: u32,
    rng: &mut R,
) -> Result<SliceStep>
where
    F: FnMut(f64) -> f64,
    R: Rng + ?Sized,
{
    let f0 = log_density(x0);
    let mut evaluations = 1;
    if !f0.is_finite() {
        return Err(Error::NonFiniteDensity(x0));
    }
    let level = f0 + (1.0 - rng.random::<f64>()).ln();

    let mut left = x0 - width * rng.random::<f64>();
    let mut right = left + width;
    let mut left_budget = (max_step_outs as f64 * rng.random::<f64>()).floor() as u32;
    let mut right_budget = max_step_outs.saturating_sub(1).saturating_sub(left_budget);
    let mut step_outs = 0;
    while left_budget > 0 {
        evaluations += 1;
        if log_density(left) <= level {
            break;
        }
        left -= width;
        left_budget -= 1;
        step_outs += 1;
    }
    while right_budget > 0 {
        evaluations += 1;
        if log_density(right) <= level {
            break;
        }
        right += width;
        right_budget -= 1;
        step_outs += 1;
    }

    loop {
        let x1 = left + rng.random::<f64>() * (right - left);
        evaluations += 1;
        if log_density(x1) > level {
            return Ok(SliceStep { value: x1, evaluations, step_outs });
        }
        if x1 < x0 {
            left = x1;
        } else {
            right = x1;
        }
        if right - left <= f64::EPSILON * x0.abs().max(1e-300) {
            return Ok(SliceStep { value: x0, evaluations, step_outs });
        }
    }
}
