use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{generate_design, Boundary, Design, PolarImage, ShapeCase};
use crate::models::{GaussianOrder, NoiseFamily};
use crate::rng;

/// Simulation scenarios: binary images on three shapes, Gaussian images on B2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseId {
    B1,
    B2,
    B3,
    G1,
    G2,
    G3,
    G4,
}

impl CaseId {
    pub const ALL: [CaseId; 7] = [CaseId::B1, CaseId::B2, CaseId::B3, CaseId::G1, CaseId::G2, CaseId::G3, CaseId::G4];

    pub fn name(self) -> &'static str {
        match self {
            CaseId::B1 => "b1",
            CaseId::B2 => "b2",
            CaseId::B3 => "b3",
            CaseId::G1 => "g1",
            CaseId::G2 => "g2",
            CaseId::G3 => "g3",
            CaseId::G4 => "g4",
        }
    }

    pub fn is_binary(self) -> bool {
        matches!(self, CaseId::B1 | CaseId::B2 | CaseId::B3)
    }

    pub fn shape(self) -> ShapeCase {
        match self {
            CaseId::B1 => ShapeCase::b1(),
            CaseId::B3 => ShapeCase::b3(),
            _ => ShapeCase::b2(),
        }
    }

    /// Noise family fitted by the sampler for this case.
    ///
    /// G2 only differs in spread, so its means are left unordered.
    pub fn fitted_family(self) -> NoiseFamily {
        match self {
            CaseId::B1 | CaseId::B2 | CaseId::B3 => NoiseFamily::Bernoulli,
            CaseId::G2 => NoiseFamily::Gaussian { order: GaussianOrder::Variance },
            _ => NoiseFamily::Gaussian { order: GaussianOrder::MeanAndVariance },
        }
    }

    pub fn default_params(self) -> CaseParams {
        if self.is_binary() {
            CaseParams::Binary { p_in: 0.5, p_out: 0.2 }
        } else {
            CaseParams::Gaussian { sd_in: 1.5, sd_out: 1.0 }
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CaseId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CaseId::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Parse(format!("unknown case '{s}' (expected one of b1, b2, b3, g1, g2, g3, g4)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CaseParams {
    Binary { p_in: f64, p_out: f64 },
    Gaussian { sd_in: f64, sd_out: f64 },
}

impl CaseParams {
    fn validate_for(&self, case: CaseId) -> Result<()> {
        match (*self, case.is_binary()) {
            (CaseParams::Binary { p_in, p_out }, true) => {
                if (0.0..=1.0).contains(&p_in) && (0.0..=1.0).contains(&p_out) {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("probabilities must lie in [0, 1], got ({p_in}, {p_out})")))
                }
            }
            (CaseParams::Gaussian { sd_in, sd_out }, false) => {
                if sd_in > 0.0 && sd_out > 0.0 && sd_in.is_finite() && sd_out.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("standard deviations must be positive, got ({sd_in}, {sd_out})")))
                }
            }
            _ => Err(Error::InvalidParameter(format!("parameters {self:?} do not match case {case}"))),
        }
    }
}

/// A simulated image with its generating boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedImage {
    pub case: CaseId,
    pub params: CaseParams,
    pub truth: ShapeCase,
    pub image: PolarImage,
}

/// Inside-region G4 draw: `0.6 N(2, σ1²) + 0.4 N(1, σ2²)`.
fn g4_inside<R: Rng>(sd_in: f64, sd_out: f64, rng: &mut R) -> f64 {
    if rng.random::<f64>() < 0.6 {
        2.0 + sd_in * gauss(rng)
    } else {
        1.0 + sd_out * gauss(rng)
    }
}

fn gauss<R: Rng>(rng: &mut R) -> f64 {
    Normal::new(0.0, 1.0).expect("unit normal").sample(rng)
}

/// Simulates case `case` on a jittered `m × m` design.
pub fn simulate_case(case: CaseId, m: usize, params: CaseParams, seed: u64) -> Result<SimulatedImage> {
    params.validate_for(case)?;
    let design = Design::Jittered { m };
    let points = generate_design(design, rng::derive_seed(seed, 0))?;
    let truth = case.shape();
    let skeleton = PolarImage::from_cartesian(&points, &vec![0.0; points.len()], design, seed)?;
    let inside: Vec<bool> = skeleton.observations.iter().map(|p| p.r < truth.radius(p.omega)).collect();

    let mut rng = rng::stream(rng::derive_seed(seed, 1));
    let values: Vec<f64> = match params {
        CaseParams::Binary { p_in, p_out } => inside
            .iter()
            .map(|&ins| {
                let p = if ins { p_in } else { p_out };
                if rng.random::<f64>() < p {
                    1.0
                } else {
                    0.0
                }
            })
            .collect(),
        CaseParams::Gaussian { sd_in, sd_out } => {
            // Extremes over the pixel set: smallest inside radius, largest outside radius.
            let radii = skeleton.radii();
            let r_in = radii.iter().zip(&inside).filter(|(_, &i)| i).map(|(r, _)| *r).fold(f64::INFINITY, f64::min);
            let r_out = radii.iter().zip(&inside).filter(|(_, &i)| !i).map(|(r, _)| *r).fold(0.0, f64::max);
            radii
                .iter()
                .zip(&inside)
                .map(|(&r, &ins)| match (case, ins) {
                    (CaseId::G1, true) => 4.0 + sd_in * gauss(&mut rng),
                    (CaseId::G3, true) => r - r_in + 0.2 + sd_in * gauss(&mut rng),
                    (CaseId::G3, false) => r - r_out + sd_out * gauss(&mut rng),
                    (CaseId::G4, true) => g4_inside(sd_in, sd_out, &mut rng),
                    (_, true) => 1.0 + sd_in * gauss(&mut rng),
                    (_, false) => 1.0 + sd_out * gauss(&mut rng),
                })
                .collect()
        }
    };
    let image = PolarImage::from_cartesian(&points, &values, design, seed)?;
    Ok(SimulatedImage { case, params, truth, image })
}
