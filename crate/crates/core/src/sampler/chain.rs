use rand::Rng;
use rand_distr::{Distribution, Gamma};

use super::slice::slice_sample_1d;
use super::{clamp_radius, PosteriorDraws, PriorMean, SamplerConfig, ScalarDraw};
use crate::error::{Error, Result};
use crate::geometry::{angle_grid, PolarImage, MAX_RADIUS, MIN_RADIUS};
use crate::kernel::{basis_row_at, eigenvalues, EigenSystem};
use crate::models::{
    mle_from_stats, region_loglik_unchecked, sample_ordered_posterior, NoiseFamily, NoiseModel, RegionStats,
};

/// Per-pixel data laid out for the coordinate updates: the basis is stored
/// column by column so that shifting one coefficient touches one contiguous
/// slice.
pub(crate) struct PixelSet {
    n: usize,
    basis_len: usize,
    r: Vec<f64>,
    y: Vec<f64>,
    y2: Vec<f64>,
    mean: Vec<f64>,
    basis: Vec<f64>,
    totals: RegionStats,
}

impl PixelSet {
    pub(crate) fn new(image: &PolarImage, basis_len: usize, prior_mean: &PriorMean) -> Self {
        let n = image.len();
        let mut basis = vec![0.0; n * basis_len];
        let mut row = vec![0.0; basis_len];
        for (i, o) in image.observations.iter().enumerate() {
            basis_row_at(o.omega / std::f64::consts::TAU, &mut row);
            for (k, &v) in row.iter().enumerate() {
                basis[k * n + i] = v;
            }
        }
        let y = image.intensities();
        let y2: Vec<f64> = y.iter().map(|v| v * v).collect();
        let totals = RegionStats {
            n_in: 0,
            n_out: n,
            sum_in: 0.0,
            sum_out: y.iter().sum(),
            sumsq_in: 0.0,
            sumsq_out: y2.iter().sum(),
        };
        Self {
            n,
            basis_len,
            r: image.radii().into_iter().map(effective_radius).collect(),
            y,
            y2,
            mean: image.observations.iter().map(|o| prior_mean.at(o.omega)).collect(),
            basis,
            totals,
        }
    }

    pub(crate) fn column(&self, k: usize) -> &[f64] {
        &self.basis[k * self.n..(k + 1) * self.n]
    }

    /// Unclamped curve values `μ_i + Ψ_i·z`.
    pub(crate) fn raw_from(&self, z: &[f64]) -> Vec<f64> {
        let mut raw = self.mean.clone();
        for (k, &zk) in z.iter().enumerate().take(self.basis_len) {
            if zk != 0.0 {
                for (v, b) in raw.iter_mut().zip(self.column(k)) {
                    *v += b * zk;
                }
            }
        }
        raw
    }

    pub(crate) fn stats(&self, raw: &[f64]) -> RegionStats {
        let (mut n_in, mut s, mut s2) = (0.0, 0.0, 0.0);
        for i in 0..self.n {
            let m = (self.r[i] < raw[i]) as u8 as f64;
            n_in += m;
            s += m * self.y[i];
            s2 += m * self.y2[i];
        }
        RegionStats::from_inside(n_in as usize, s, s2, &self.totals)
    }

    /// Statistics after moving coefficient `k` by `delta`.
    pub(crate) fn stats_shifted(&self, raw: &[f64], k: usize, delta: f64) -> RegionStats {
        let (n_in, s, s2) = masked_sums(raw, self.column(k), &self.r, &self.y, &self.y2, delta);
        RegionStats::from_inside(n_in, s, s2, &self.totals)
    }

    /// Collects the pixels whose membership can change for `|delta| <= bound`
    /// along coefficient `k`; the rest are summarized once.
    pub(crate) fn fill_window(&self, raw: &[f64], k: usize, bound: f64, w: &mut Window) {
        w.clear();
        w.bound = bound;
        let col = self.column(k);
        for i in 0..self.n {
            let reach = col[i].abs() * bound;
            let r = self.r[i];
            if r >= raw[i] - reach && r < raw[i] + reach {
                w.raw.push(raw[i]);
                w.col.push(col[i]);
                w.r.push(r);
                w.y.push(self.y[i]);
                w.y2.push(self.y2[i]);
            } else if r < raw[i] {
                w.n_in += 1;
                w.sum += self.y[i];
                w.sumsq += self.y2[i];
            }
        }
    }

    /// Same as [`Self::stats_shifted`] for `|delta| <= window.bound`.
    pub(crate) fn window_stats(&self, w: &Window, delta: f64) -> RegionStats {
        let (n_in, s, s2) = masked_sums(&w.raw, &w.col, &w.r, &w.y, &w.y2, delta);
        RegionStats::from_inside(n_in + w.n_in, s + w.sum, s2 + w.sumsq, &self.totals)
    }

    pub(crate) fn shift(&self, raw: &mut [f64], k: usize, delta: f64) {
        for (v, b) in raw.iter_mut().zip(self.column(k)) {
            *v += b * delta;
        }
    }

    pub(crate) fn clamp_count(raw: &[f64]) -> u64 {
        raw.iter().filter(|&&v| clamp_radius(v) != v).count() as u64
    }
}

/// Pixels near the curve along one coordinate, plus the fixed remainder.
#[derive(Default)]
pub(crate) struct Window {
    bound: f64,
    raw: Vec<f64>,
    col: Vec<f64>,
    r: Vec<f64>,
    y: Vec<f64>,
    y2: Vec<f64>,
    n_in: usize,
    sum: f64,
    sumsq: f64,
}

impl Window {
    fn clear(&mut self) {
        self.raw.clear();
        self.col.clear();
        self.r.clear();
        self.y.clear();
        self.y2.clear();
        self.n_in = 0;
        self.sum = 0.0;
        self.sumsq = 0.0;
    }

    pub(crate) fn covers(&self, delta: f64) -> bool {
        delta.abs() <= self.bound
    }
}

/// Count, sum and sum of squares of `y` over pixels with `r < raw + col·delta`.
fn masked_sums(raw: &[f64], col: &[f64], r: &[f64], y: &[f64], y2: &[f64], delta: f64) -> (usize, f64, f64) {
    const LANES: usize = 8;
    let n = raw.len();
    let (col, r, y, y2) = (&col[..n], &r[..n], &y[..n], &y2[..n]);
    let mut count = [0u64; LANES];
    let mut acc = [[0.0f64; LANES]; 2];
    let body = n - n % LANES;
    let chunks = raw[..body]
        .chunks_exact(LANES)
        .zip(col[..body].chunks_exact(LANES))
        .zip(r[..body].chunks_exact(LANES))
        .zip(y[..body].chunks_exact(LANES).zip(y2[..body].chunks_exact(LANES)));
    for (((raw, col), r), (y, y2)) in chunks {
        for l in 0..LANES {
            let inside = r[l] < raw[l] + col[l] * delta;
            let mask = 0u64.wrapping_sub(inside as u64);
            count[l] += inside as u64;
            acc[0][l] += f64::from_bits(y[l].to_bits() & mask);
            acc[1][l] += f64::from_bits(y2[l].to_bits() & mask);
        }
    }
    let (mut n_in, mut s, mut s2) = (count.iter().sum::<u64>() as usize, 0.0, 0.0);
    for l in 0..LANES {
        s += acc[0][l];
        s2 += acc[1][l];
    }
    for i in body..n {
        if r[i] < raw[i] + col[i] * delta {
            n_in += 1;
            s += y[i];
            s2 += y2[i];
        }
    }
    (n_in, s, s2)
}

/// Radius threshold equivalent to comparing against the clamped curve:
/// `r < clamp(v, MIN, MAX)` iff `effective_radius(r) < v` for finite `v`.
fn effective_radius(r: f64) -> f64 {
    if r >= MAX_RADIUS {
        f64::INFINITY
    } else if r < MIN_RADIUS {
        f64::NEG_INFINITY
    } else {
        r
    }
}

/// Summary-grid evaluation of the curve.
pub(crate) struct GridEvaluator {
    pub(crate) angles: Vec<f64>,
    basis: Vec<f64>,
    mean: Vec<f64>,
    basis_len: usize,
}

impl GridEvaluator {
    pub(crate) fn new(grid_size: usize, basis_len: usize, prior_mean: &PriorMean) -> Self {
        let angles = angle_grid(grid_size);
        let mut basis = vec![0.0; grid_size * basis_len];
        for (i, &w) in angles.iter().enumerate() {
            basis_row_at(w / std::f64::consts::TAU, &mut basis[i * basis_len..(i + 1) * basis_len]);
        }
        let mean = angles.iter().map(|&w| prior_mean.at(w)).collect();
        Self { angles, basis, mean, basis_len }
    }

    /// Clamped values and the number of clamped points.
    pub(crate) fn evaluate(&self, z: &[f64]) -> (Vec<f64>, u64) {
        let mut clamps = 0;
        let values = self
            .basis
            .chunks(self.basis_len)
            .zip(&self.mean)
            .map(|(row, m)| {
                let raw = m + row.iter().zip(z).map(|(b, z)| b * z).sum::<f64>();
                let v = clamp_radius(raw);
                clamps += (v != raw) as u64;
                v
            })
            .collect();
        (values, clamps)
    }
}

pub(crate) fn check_family(noise: &NoiseModel, family: NoiseFamily) -> Result<()> {
    if noise.family() != family {
        return Err(Error::InvalidParameter(format!(
            "initial noise model {noise:?} does not belong to {family:?}"
        )));
    }
    noise.validate_params()
}

fn log_gamma_kernel(x: f64, (shape, rate): (f64, f64)) -> f64 {
    (shape - 1.0) * x.ln() - rate * x
}

/// Runs the slice-within-Gibbs sampler.
///
/// Each iteration updates, in order: every curve coefficient `z_k` by a slice
/// step against the region log-likelihood plus `-τ z_k² / (2 v_k(a))`; the
/// precision `τ` from its Gamma conditional; the noise parameters by one
/// ordered conjugate scan; and the scale `a` by a slice step. Coefficient
/// values that empty either region have zero density and are never accepted.
pub fn run_chain<R: Rng + ?Sized>(
    image: &PolarImage,
    family: NoiseFamily,
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<PosteriorDraws> {
    config.validate()?;
    if image.is_empty() {
        return Err(Error::EmptyRegion("image has no pixels".into()));
    }
    let half_order = config.half_order;
    let basis_len = 2 * half_order + 1;
    let prior = config.prior;
    let pixels = PixelSet::new(image, basis_len, &config.prior_mean);
    let grid = GridEvaluator::new(config.grid_size, basis_len, &config.prior_mean);

    let mut z = config.initial.coefficients.clone().unwrap_or_else(|| vec![0.0; basis_len]);
    if z.len() != basis_len {
        return Err(Error::Config(format!("{} initial coefficients for L = {basis_len}", z.len())));
    }
    let mut tau = config.initial.precision.unwrap_or(500.0);
    let mut scale = config.initial.scale.unwrap_or(1.0);
    if !(tau > 0.0 && scale > 0.0) {
        return Err(Error::Config("initial precision and scale must be positive".into()));
    }
    let mut eig = eigenvalues(scale, half_order)?;
    let mut raw = pixels.raw_from(&z);
    let mut stats = pixels.stats(&raw);
    if stats.is_degenerate() {
        return Err(Error::EmptyRegion(format!(
            "initial curve leaves {} pixels inside and {} outside",
            stats.n_in, stats.n_out
        )));
    }
    let mut noise = match config.initial.noise {
        Some(m) => {
            check_family(&m, family)?;
            m
        }
        None => mle_from_stats(&stats, family)?,
    };

    let mut window = Window::default();
    let mut draws = PosteriorDraws::empty(grid.angles.clone(), config.retained());
    let mut diag = std::mem::take(&mut draws.diagnostics);
    diag.log_posterior.reserve(config.iterations);

    for it in 0..config.iterations {
        if it % config.refresh_interval == 0 {
            raw = pixels.raw_from(&z);
        }

        if config.updates.curve {
            for k in 0..basis_len {
                let vk = eig.eigenvalues()[k].max(crate::kernel::EIGENVALUE_FLOOR);
                let zk = z[k];
                let half_tau = 0.5 * tau;
                pixels.fill_window(&raw, k, config.z_width, &mut window);
                let log_density = |x: f64| {
                    let delta = x - zk;
                    let st = if window.covers(delta) {
                        pixels.window_stats(&window, delta)
                    } else {
                        pixels.stats_shifted(&raw, k, delta)
                    };
                    if st.is_degenerate() {
                        f64::NEG_INFINITY
                    } else {
                        region_loglik_unchecked(&noise, &st) - half_tau * x * x / vk
                    }
                };
                let step = slice_sample_1d(log_density, zk, config.z_width, config.max_step_outs, rng)?;
                diag.density_evaluations += step.evaluations as u64;
                diag.step_outs += step.step_outs as u64;
                pixels.shift(&mut raw, k, step.value - zk);
                z[k] = step.value;
            }
            stats = pixels.stats(&raw);
        }

        if config.updates.precision {
            let shape = prior.tau.0 + 0.5 * basis_len as f64;
            let rate = prior.tau.1 + 0.5 * eig.quadratic_form(&z);
            tau = Gamma::new(shape, 1.0 / rate)
                .map_err(|e| Error::InvalidParameter(e.to_string()))?
                .sample(rng);
        }

        if config.updates.noise {
            match sample_ordered_posterior(&prior, &stats, &noise, rng) {
                Ok(m) => noise = m,
                Err(Error::DegeneratePosterior(_)) => diag.rejected_noise_updates += 1,
                Err(e) => return Err(e),
            }
        }

        if config.updates.scale {
            let log_density = |a: f64| {
                if !(a > 0.0) {
                    return f64::NEG_INFINITY;
                }
                match eigenvalues(a, half_order) {
                    Ok(e) => scale_log_density(&e, &z, tau) + log_gamma_kernel(a, prior.scale),
                    Err(_) => f64::NEG_INFINITY,
                }
            };
            let step = slice_sample_1d(log_density, scale, config.scale_width, config.max_step_outs, rng)?;
            diag.density_evaluations += step.evaluations as u64;
            diag.step_outs += step.step_outs as u64;
            scale = step.value;
            eig = eigenvalues(scale, half_order)?;
        }

        diag.log_posterior.push(
            region_loglik_unchecked(&noise, &stats)
                + scale_log_density(&eig, &z, tau)
                + 0.5 * basis_len as f64 * tau.ln()
                + log_gamma_kernel(tau, prior.tau)
                + log_gamma_kernel(scale, prior.scale),
        );

        if it >= config.burn_in && (it - config.burn_in).is_multiple_of(config.thinning) && draws.len() < config.retained() {
            let (values, grid_clamps) = grid.evaluate(&z);
            diag.clamp_events += PixelSet::clamp_count(&raw) + grid_clamps;
            diag.clamp_checks += (raw.len() + values.len()) as u64;
            draws.push(&values, &z, ScalarDraw { scale: Some(scale), precision: Some(tau), noise });
        }
    }
    diag.iterations = config.iterations;
    draws.diagnostics = diag;
    Ok(draws)
}

/// `-½ Σ log v_k - ½ τ Σ z_k² / v_k`.
fn scale_log_density(eig: &EigenSystem, z: &[f64], tau: f64) -> f64 {
    -0.5 * eig.log_det() - 0.5 * tau * eig.quadratic_form(z)
}
