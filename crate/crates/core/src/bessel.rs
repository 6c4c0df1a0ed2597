//! Exponentially scaled modified Bessel functions of the first kind.
//!
//! Everything here returns `e^{-x} I_n(x)` rather than `I_n(x)`: the raw
//! values overflow long before the arguments the sampler visits, and every
//! downstream formula only ever needs the scaled product.
//!
//! Evaluation uses the power series for `x <= SERIES_CROSSOVER` and Miller's
//! backward recurrence normalized by `e^{-x}(I_0 + 2 Σ I_k) = 1` above it.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Arguments at or below this use the power series.
pub const SERIES_CROSSOVER: f64 = 30.0;

/// Relative size at which a series or tail term is considered negligible.
const TERM_TOLERANCE: f64 = 1e-16;

/// Values larger than this trigger a rescale during backward recurrence.
const RESCALE_THRESHOLD: f64 = 1e250;

/// `e^{-x} I_n(x)` for `n = 0..=max_order` at a fixed argument.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledBesselTable {
    x: f64,
    values: Vec<f64>,
}

impl ScaledBesselTable {
    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn max_order(&self) -> usize {
        self.values.len() - 1
    }

    /// Entry for order `n`; negative orders map to `|n|`.
    pub fn get(&self, n: i64) -> Option<f64> {
        self.values.get(n.unsigned_abs() as usize).copied()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

fn check_argument(x: f64) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("argument must be finite, got {x}")));
    }
    if x < 0.0 {
        return Err(Error::Domain(format!("argument must be non-negative, got {x}")));
    }
    Ok(())
}

/// `e^{-x} I_{|n|}(x)`.
pub fn scaled_bessel_i(n: i64, x: f64) -> Result<f64> {
    check_argument(x)?;
    let order = n.unsigned_abs();
    if order > 1_000_000 {
        return Err(Error::Domain(format!("order {n} exceeds 10^6")));
    }
    let order = order as usize;
    if x == 0.0 {
        return Ok(if order == 0 { 1.0 } else { 0.0 });
    }
    if x <= SERIES_CROSSOVER {
        Ok(series(order, x))
    } else {
        Ok(miller(x, order)[order])
    }
}

/// Batch evaluation of `e^{-x} I_n(x)` for `n = 0..=max_order`.
pub fn scaled_bessel_table(x: f64, max_order: usize) -> Result<ScaledBesselTable> {
    check_argument(x)?;
    let values = if x == 0.0 {
        let mut v = vec![0.0; max_order + 1];
        v[0] = 1.0;
        v
    } else if x <= SERIES_CROSSOVER {
        (0..=max_order).map(|n| series(n, x)).collect()
    } else {
        miller(x, max_order)
    };
    Ok(ScaledBesselTable { x, values })
}

// e^{-x} Σ_k (x/2)^{2k+n} / (k! (k+n)!), with the leading factor taken in log space.
fn series(n: usize, x: f64) -> f64 {
    let half = 0.5 * x;
    let log_lead = n as f64 * half.ln() - ln_gamma(n as f64 + 1.0) - x;
    let lead = log_lead.exp();
    if lead == 0.0 {
        return 0.0;
    }
    let q = half * half;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * (k + n as f64));
        sum += term;
        if term < TERM_TOLERANCE * sum {
            break;
        }
    }
    lead * sum
}

// Miller's backward recurrence I_{k-1} = I_{k+1} + (2k/x) I_k, normalized with
// the generating-function identity at z = 1. Returns orders 0..=max_order.
fn miller(x: f64, max_order: usize) -> Vec<f64> {
    // Terms fall off like exp(-k^2 / 2x) for k << x, so ~10 sqrt(x) orders
    // past the largest requested one reach far below f64 resolution.
    let start = max_order + (10.0 * x.sqrt()).ceil() as usize + 30;
    let mut out = vec![0.0; max_order + 1];
    let mut next = 0.0_f64; // I_{k+1}
    let mut current = 1e-280_f64; // I_k
    let mut norm = 0.0_f64; // 2 Σ_{k>=1} I_k so far
    let two_over_x = 2.0 / x;
    let mut k = start;
    while k > 0 {
        if k <= max_order {
            out[k] = current;
        }
        norm += 2.0 * current;
        let prev = next + (k as f64) * two_over_x * current;
        next = current;
        current = prev;
        k -= 1;
        if current > RESCALE_THRESHOLD {
            let s = 1.0 / current;
            current = 1.0;
            next *= s;
            norm *= s;
            let upper = max_order.min(start);
            for v in out[k.min(upper + 1)..=upper].iter_mut() {
                *v *= s;
            }
        }
    }
    out[0] = current;
    norm += current;
    for v in &mut out {
        *v /= norm;
    }
    out
}

/// `Σ_{n=-N..N} e^{-2x} I_n(2x) n^{2j}` with `N = tail_order`.
///
/// Fails with [`Error::Truncation`] unless the first omitted pair of terms is
/// below `1e-15` of the accumulated sum. [`required_tail_order`] gives a
/// sufficient order.
pub fn weighted_order_moment(x: f64, j: u32, tail_order: usize) -> Result<f64> {
    check_argument(x)?;
    let table = scaled_bessel_table(2.0 * x, tail_order + 1)?;
    let v = table.values();
    let weight = |n: usize| (n as f64).powi(2 * j as i32);
    let mut sum = if j == 0 { v[0] } else { 0.0 };
    for n in 1..=tail_order {
        sum += 2.0 * v[n] * weight(n);
    }
    let next = 2.0 * v[tail_order + 1] * weight(tail_order + 1);
    if next >= 1e-15 * sum && next > 0.0 {
        return Err(Error::Truncation(format!(
            "order {tail_order} leaves a tail term {next:e} against a sum of {sum:e}"
        )));
    }
    Ok(sum)
}

/// An order large enough for [`weighted_order_moment`] at `(x, j)`.
pub fn required_tail_order(x: f64, j: u32) -> usize {
    let arg = 2.0 * x;
    (2.0 * j as f64 + 10.0 * arg.sqrt() + 4.0 * arg.cbrt() + 40.0).ceil() as usize
}

/// `(4j)! / (2j)! * max(x^j, 1)`, the upper bound on the weighted moment.
pub fn moment_bound(x: f64, j: u32) -> f64 {
    let ratio = (ln_gamma(4.0 * j as f64 + 1.0) - ln_gamma(2.0 * j as f64 + 1.0)).exp();
    ratio * x.powi(j as i32).max(1.0)
}
