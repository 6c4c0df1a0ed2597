//! Posterior sampling for the boundary curve and noise parameters.
//!
//! [`run_chain`] is the slice-within-Gibbs sampler over `(z, τ, noise, a)`
//! with the truncated Karhunen–Loève prior; [`run_random_series_chain`] is a
//! fixed-order trigonometric series with independent coefficient priors and
//! random-walk Metropolis updates. Both return [`PosteriorDraws`], which
//! [`posterior_mean_curve`] and [`uniform_credible_band`] summarize.

mod chain;
mod series;
mod slice;
mod summary;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Boundary, GridCurve, MAX_RADIUS, MIN_RADIUS};
use crate::kernel::{basis_row_at, KernelSpec, DEFAULT_HALF_ORDER};
use crate::models::{NoiseModel, PriorHyperparams};

pub use chain::run_chain;
pub use series::{run_random_series_chain, SeriesConfig};
pub use slice::{slice_sample_1d, SliceStep};
pub use summary::{posterior_mean_curve, posterior_sd_curve, uniform_credible_band, CredibleBand, SCALE_FLOOR};

/// Default number of summary-grid angles.
pub const DEFAULT_GRID_SIZE: usize = 512;

/// Prior mean function `μ(ω)` of the boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum PriorMean {
    Constant(f64),
    Tabulated(GridCurve),
}

impl Default for PriorMean {
    fn default() -> Self {
        PriorMean::Constant(0.1)
    }
}

impl PriorMean {
    pub fn at(&self, omega: f64) -> f64 {
        match self {
            PriorMean::Constant(c) => *c,
            PriorMean::Tabulated(g) => g.radius(omega),
        }
    }
}

/// Clamps a raw radius into `[MIN_RADIUS, MAX_RADIUS]`.
#[inline]
pub fn clamp_radius(raw: f64) -> f64 {
    raw.clamp(MIN_RADIUS, MAX_RADIUS)
}

/// `γ(ω) = ψ(ω)·z + μ(ω)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCurve {
    pub coefficients: Vec<f64>,
    pub mean: PriorMean,
    pub kernel: KernelSpec,
}

impl BoundaryCurve {
    pub fn new(coefficients: Vec<f64>, mean: PriorMean, kernel: KernelSpec) -> Result<Self> {
        if coefficients.len() != kernel.basis_len() {
            return Err(Error::InvalidParameter(format!(
                "{} coefficients for {} basis functions",
                coefficients.len(),
                kernel.basis_len()
            )));
        }
        Ok(Self { coefficients, mean, kernel })
    }

    /// Unclamped value.
    pub fn raw(&self, omega: f64) -> f64 {
        let mut row = vec![0.0; self.coefficients.len()];
        basis_row_at(omega / std::f64::consts::TAU, &mut row);
        row.iter().zip(&self.coefficients).map(|(b, z)| b * z).sum::<f64>() + self.mean.at(omega)
    }

    /// Clamped value and whether the clamp fired.
    pub fn evaluate(&self, omega: f64) -> (f64, bool) {
        let raw = self.raw(omega);
        let v = clamp_radius(raw);
        (v, v != raw)
    }
}

impl Boundary for BoundaryCurve {
    fn radius(&self, omega: f64) -> f64 {
        self.evaluate(omega).0
    }
}

/// Which Gibbs blocks are updated. Disabling blocks freezes them at their
/// initial values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct UpdateMask {
    pub curve: bool,
    pub precision: bool,
    pub noise: bool,
    pub scale: bool,
}

impl Default for UpdateMask {
    fn default() -> Self {
        Self { curve: true, precision: true, noise: true, scale: true }
    }
}

/// Overrides of the default starting state (`z = 0`, `τ = 500`, `a = 1`,
/// noise parameters by MLE at the prior mean).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct InitialState {
    pub coefficients: Option<Vec<f64>>,
    pub precision: Option<f64>,
    pub scale: Option<f64>,
    pub noise: Option<NoiseModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    /// Total iterations including burn-in.
    pub iterations: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub z_width: f64,
    pub scale_width: f64,
    pub max_step_outs: u32,
    pub seed: u64,
    pub half_order: usize,
    pub prior: PriorHyperparams,
    pub prior_mean: PriorMean,
    pub grid_size: usize,
    pub updates: UpdateMask,
    pub initial: InitialState,
    /// Iterations between full recomputations of the per-pixel curve values.
    pub refresh_interval: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            iterations: 5000,
            burn_in: 1000,
            thinning: 1,
            z_width: 0.05,
            scale_width: 0.5,
            max_step_outs: 100,
            seed: 0,
            half_order: DEFAULT_HALF_ORDER,
            prior: PriorHyperparams::default(),
            prior_mean: PriorMean::default(),
            grid_size: DEFAULT_GRID_SIZE,
            updates: UpdateMask::default(),
            initial: InitialState::default(),
            refresh_interval: 50,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.iterations <= self.burn_in {
            return bad(format!("iterations ({}) must exceed burn_in ({})", self.iterations, self.burn_in));
        }
        if self.thinning == 0 {
            return bad("thinning must be at least 1".into());
        }
        if !(self.z_width > 0.0 && self.scale_width > 0.0) {
            return bad("slice widths must be positive".into());
        }
        if self.max_step_outs == 0 {
            return bad("max_step_outs must be at least 1".into());
        }
        if self.half_order == 0 {
            return bad("half_order must be at least 1".into());
        }
        if self.grid_size < 3 {
            return bad("grid_size must be at least 3".into());
        }
        if self.refresh_interval == 0 {
            return bad("refresh_interval must be at least 1".into());
        }
        self.prior.validate()
    }

    /// Number of retained draws.
    pub fn retained(&self) -> usize {
        (self.iterations - self.burn_in) / self.thinning
    }
}

/// Per-draw scalar parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarDraw {
    /// Kernel scale `a` (absent for the random-series sampler).
    pub scale: Option<f64>,
    /// Kernel precision `τ` (absent for the random-series sampler).
    pub precision: Option<f64>,
    pub noise: NoiseModel,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    pub iterations: usize,
    pub density_evaluations: u64,
    pub step_outs: u64,
    /// Per-pixel curve evaluations that hit the radius clamp after burn-in.
    pub clamp_events: u64,
    pub clamp_checks: u64,
    /// Noise-parameter updates skipped because the posterior was improper.
    pub rejected_noise_updates: u64,
    /// Metropolis acceptance rate after burn-in (random-series sampler only).
    pub acceptance_rate: Option<f64>,
    /// Unnormalized log posterior after every iteration.
    pub log_posterior: Vec<f64>,
}

impl ChainDiagnostics {
    pub fn clamp_fraction(&self) -> f64 {
        if self.clamp_checks == 0 {
            0.0
        } else {
            self.clamp_events as f64 / self.clamp_checks as f64
        }
    }
}

/// Retained posterior draws: curves on a shared angle grid plus scalars.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    grid: Vec<f64>,
    curves: Vec<f64>,
    pub scalars: Vec<ScalarDraw>,
    /// Basis coefficients `z` of each retained draw (empty when built from curves).
    pub coefficients: Vec<Vec<f64>>,
    pub diagnostics: ChainDiagnostics,
}

impl PosteriorDraws {
    pub fn new(grid: Vec<f64>, curves: Vec<Vec<f64>>, scalars: Vec<ScalarDraw>, diagnostics: ChainDiagnostics) -> Result<Self> {
        if curves.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::InvalidParameter("every draw must cover the shared grid".into()));
        }
        if !scalars.is_empty() && scalars.len() != curves.len() {
            return Err(Error::InvalidParameter("scalar draws must match curve draws".into()));
        }
        Ok(Self { grid, curves: curves.concat(), scalars, coefficients: Vec::new(), diagnostics })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn len(&self) -> usize {
        if self.grid.is_empty() {
            0
        } else {
            self.curves.len() / self.grid.len()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn curve(&self, i: usize) -> &[f64] {
        let g = self.grid.len();
        &self.curves[i * g..(i + 1) * g]
    }

    pub fn curves(&self) -> impl Iterator<Item = &[f64]> {
        self.curves.chunks(self.grid.len().max(1))
    }

    pub(crate) fn push(&mut self, curve: &[f64], coefficients: &[f64], scalar: ScalarDraw) {
        self.curves.extend_from_slice(curve);
        self.coefficients.push(coefficients.to_vec());
        self.scalars.push(scalar);
    }

    pub(crate) fn empty(grid: Vec<f64>, capacity: usize) -> Self {
        let cap = capacity * grid.len();
        Self {
            grid,
            curves: Vec::with_capacity(cap),
            scalars: Vec::with_capacity(capacity),
            coefficients: Vec::with_capacity(capacity),
            diagnostics: ChainDiagnostics::default(),
        }
    }
}
