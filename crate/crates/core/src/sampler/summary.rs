use serde::{Deserialize, Serialize};

use super::PosteriorDraws;
use crate::error::{Error, Result};
use crate::geometry::{Boundary, GridCurve};

/// Floor applied to the pointwise posterior standard deviation.
pub const SCALE_FLOOR: f64 = 1e-8;

/// Pointwise posterior mean over the retained draws.
pub fn posterior_mean_curve(draws: &PosteriorDraws) -> Result<GridCurve> {
    if draws.len() < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 draws, got {}", draws.len())));
    }
    let first = draws.curve(0);
    let mut shift = vec![0.0; first.len()];
    for c in draws.curves().skip(1) {
        for ((d, v), f) in shift.iter_mut().zip(c).zip(first) {
            *d += v - f;
        }
    }
    let n = draws.len() as f64;
    GridCurve::new(first.iter().zip(shift).map(|(f, d)| f + d / n).collect())
}

/// Pointwise posterior standard deviation (`n - 1` denominator).
pub fn posterior_sd_curve(draws: &PosteriorDraws, mean: &GridCurve) -> Result<Vec<f64>> {
    if draws.len() < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 draws, got {}", draws.len())));
    }
    let mut acc = vec![0.0; draws.grid().len()];
    for c in draws.curves() {
        for ((a, v), m) in acc.iter_mut().zip(c).zip(mean.values()) {
            *a += (v - m).powi(2);
        }
    }
    let denom = (draws.len() - 1) as f64;
    Ok(acc.into_iter().map(|a| (a / denom).sqrt()).collect())
}

/// Uniform band `center ± multiplier · scale` on the summary grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CredibleBand {
    pub grid: Vec<f64>,
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
    pub multiplier: f64,
    pub level: f64,
    /// Grid points whose standard deviation was raised to [`SCALE_FLOOR`].
    pub floored_points: usize,
}

impl CredibleBand {
    pub fn lower(&self) -> Vec<f64> {
        self.center.iter().zip(&self.scale).map(|(c, s)| c - self.multiplier * s).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.center.iter().zip(&self.scale).map(|(c, s)| c + self.multiplier * s).collect()
    }

    /// Whether grid values lie inside the band at every grid angle.
    pub fn contains_values(&self, values: &[f64]) -> bool {
        values.len() == self.grid.len()
            && values
                .iter()
                .zip(self.center.iter().zip(&self.scale))
                .all(|(v, (c, s))| (v - c).abs() <= self.multiplier * s)
    }

    /// Whether a curve lies inside the band at every grid angle.
    pub fn contains(&self, curve: &impl Boundary) -> bool {
        let values: Vec<f64> = self.grid.iter().map(|&w| curve.radius(w)).collect();
        self.contains_values(&values)
    }
}

/// `sup_ω |γ(ω) - center(ω)| / scale(ω)`.
fn sup_ratio(curve: &[f64], center: &[f64], scale: &[f64]) -> f64 {
    curve
        .iter()
        .zip(center.iter().zip(scale))
        .map(|(v, (c, s))| (v - c).abs() / s)
        .fold(0.0, f64::max)
}

/// Uniform credible band from the draws' sup-norm standardized deviations.
///
/// The multiplier is the `level` empirical quantile of
/// `u_i = sup_ω |γ_i - γ̂| / ŝ`, taken as the `⌈level · n⌉`-th smallest value.
pub fn uniform_credible_band(draws: &PosteriorDraws, level: f64) -> Result<CredibleBand> {
    if !(level > 0.0 && level <= 1.0) {
        return Err(Error::InvalidParameter(format!("level must be in (0, 1], got {level}")));
    }
    let center = posterior_mean_curve(draws)?;
    let mut scale = posterior_sd_curve(draws, &center)?;
    let mut floored_points = 0;
    for s in scale.iter_mut() {
        if !(*s >= SCALE_FLOOR) {
            *s = SCALE_FLOOR;
            floored_points += 1;
        }
    }
    let mut u: Vec<f64> = draws.curves().map(|c| sup_ratio(c, center.values(), &scale)).collect();
    u.sort_by(f64::total_cmp);
    let rank = ((level * u.len() as f64).ceil() as usize).clamp(1, u.len());
    Ok(CredibleBand {
        grid: draws.grid().to_vec(),
        center: center.values().to_vec(),
        scale,
        multiplier: u[rank - 1],
        level,
        floored_points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::angle_grid;
    use crate::rng;
    use crate::sampler::ChainDiagnostics;
    use rand_distr::{Distribution, StandardNormal};

    fn gauss(r: &mut rng::StreamRng) -> f64 {
        StandardNormal.sample(r)
    }

    fn draws_from(curves: Vec<Vec<f64>>) -> PosteriorDraws {
        let g = angle_grid(curves[0].len());
        PosteriorDraws::new(g, curves, vec![], ChainDiagnostics::default()).unwrap()
    }

    #[test]
    fn mean_examples() {
        let d = draws_from(vec![vec![0.2; 8], vec![0.2; 8], vec![0.2; 8]]);
        assert_eq!(posterior_mean_curve(&d).unwrap().values(), &[0.2; 8]);
        let d = draws_from(vec![vec![0.2; 8], vec![0.4; 8]]);
        for v in posterior_mean_curve(&d).unwrap().values() {
            assert!((v - 0.3).abs() < 1e-15);
        }
        let d = draws_from(vec![vec![0.2; 8]]);
        assert!(posterior_mean_curve(&d).is_err());
    }

    #[test]
    fn outlier_sets_the_multiplier() {
        let mut curves: Vec<Vec<f64>> = (0..9).map(|i| vec![0.3 + 1e-3 * (i % 2) as f64; 16]).collect();
        curves.push(vec![0.5; 16]);
        let d = draws_from(curves);
        let band = uniform_credible_band(&d, 0.95).unwrap();
        let center = posterior_mean_curve(&d).unwrap();
        let expected = sup_ratio(d.curve(9), center.values(), &band.scale);
        assert_eq!(band.multiplier, expected);
        assert!(band.contains_values(d.curve(9)));
    }

    #[test]
    fn level_one_contains_everything() {
        let mut r = rng::stream(3);
        let curves: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..32).map(|_| 0.3 + 0.01 * gauss(&mut r)).collect())
            .collect();
        let d = draws_from(curves);
        let band = uniform_credible_band(&d, 1.0).unwrap();
        assert!(d.curves().all(|c| band.contains_values(c)));
    }

    #[test]
    fn band_holds_the_requested_fraction() {
        let mut r = rng::stream(4);
        let n = 2000;
        let curves: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..64).map(|_| 0.3 + 0.02 * gauss(&mut r)).collect())
            .collect();
        let d = draws_from(curves);
        let band = uniform_credible_band(&d, 0.95).unwrap();
        let inside = d.curves().filter(|c| band.contains_values(c)).count();
        assert_eq!(inside, (0.95 * n as f64).ceil() as usize);
        // Fresh draws from the same law: coverage close to the level.
        let fresh = (0..n)
            .filter(|_| {
                let c: Vec<f64> = (0..64).map(|_| 0.3 + 0.02 * gauss(&mut r)).collect();
                band.contains_values(&c)
            })
            .count();
        assert!((fresh as f64 / n as f64 - 0.95).abs() < 0.03);
    }

    #[test]
    fn zero_spread_is_floored() {
        let d = draws_from(vec![vec![0.2; 8], vec![0.2; 8]]);
        let band = uniform_credible_band(&d, 0.95).unwrap();
        assert_eq!(band.floored_points, 8);
        assert!(band.scale.iter().all(|&s| s == SCALE_FLOOR));
        assert!(uniform_credible_band(&d, 0.0).is_err());
    }
}
