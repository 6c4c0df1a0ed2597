//! Sampling designs, polar images, the shape library and the Lebesgue error.
//!
//! Images live on `T = [-1/2, 1/2]²` with the reference point at the origin.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Lower clamp applied to every evaluated boundary radius.
pub const MIN_RADIUS: f64 = 1e-3;

/// Upper clamp applied to every evaluated boundary radius (half the square's diagonal).
pub const MAX_RADIUS: f64 = FRAC_1_SQRT_2;

/// Quadrature points used by [`lebesgue_error`] when no size is given.
pub const DEFAULT_LEBESGUE_GRID: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Design {
    /// One uniform location in each cell of an `m × m` partition.
    Jittered { m: usize },
    /// `n` i.i.d. uniform locations.
    CompletelyRandom { n: usize },
}

impl Design {
    pub fn len(&self) -> usize {
        match *self {
            Design::Jittered { m } => m * m,
            Design::CompletelyRandom { n } => n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Cartesian pixel locations in `T`, deterministic in `seed`.
pub fn generate_design(design: Design, seed: u64) -> Result<Vec<[f64; 2]>> {
    let mut rng = rng::stream(seed);
    match design {
        Design::Jittered { m } => {
            if m < 2 {
                return Err(Error::InvalidParameter(format!("jittered design needs m >= 2, got {m}")));
            }
            let h = 1.0 / m as f64;
            let mut out = Vec::with_capacity(m * m);
            for row in 0..m {
                for col in 0..m {
                    let x = -0.5 + h * (col as f64 + rng.random::<f64>());
                    let y = -0.5 + h * (row as f64 + rng.random::<f64>());
                    out.push([x, y]);
                }
            }
            Ok(out)
        }
        Design::CompletelyRandom { n } => {
            if n == 0 {
                return Err(Error::InvalidParameter("completely random design needs n >= 1".into()));
            }
            Ok((0..n)
                .map(|_| [rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5])
                .collect())
        }
    }
}

/// `(ω, r)` with `ω ∈ [0, 2π)`. The origin maps to `(0, 0)`.
pub fn to_polar(x: f64, y: f64) -> (f64, f64) {
    let r = x.hypot(y);
    if r == 0.0 {
        return (0.0, 0.0);
    }
    let mut omega = y.atan2(x);
    if omega < 0.0 {
        omega += TAU;
    }
    if omega >= TAU {
        omega -= TAU;
    }
    (omega, r)
}

/// Distance from the origin to the edge of `T` along `ω`.
pub fn max_radius(omega: f64) -> f64 {
    0.5 / omega.cos().abs().max(omega.sin().abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelObservation {
    pub omega: f64,
    pub r: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarImage {
    pub observations: Vec<PixelObservation>,
    pub design: Design,
    pub seed: u64,
}

impl PolarImage {
    /// Builds an image from Cartesian locations and intensities.
    pub fn from_cartesian(points: &[[f64; 2]], values: &[f64], design: Design, seed: u64) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::InvalidParameter(format!(
                "{} locations but {} intensities",
                points.len(),
                values.len()
            )));
        }
        let observations = points
            .iter()
            .zip(values)
            .map(|(p, &y)| {
                let (omega, r) = to_polar(p[0], p[1]);
                PixelObservation { omega, r, y }
            })
            .collect();
        Ok(Self { observations, design, seed })
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn omegas(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.omega).collect()
    }

    pub fn radii(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.r).collect()
    }

    pub fn intensities(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.y).collect()
    }

    pub fn mean_intensity(&self) -> f64 {
        self.observations.iter().map(|o| o.y).sum::<f64>() / self.len().max(1) as f64
    }
}

/// Anything with a radius function around the origin.
pub trait Boundary {
    fn radius(&self, omega: f64) -> f64;
}

impl<F: Fn(f64) -> f64> Boundary for F {
    fn radius(&self, omega: f64) -> f64 {
        self(omega)
    }
}

/// A closed curve tabulated on `n` equispaced angles `2πi/n`, read back by
/// periodic linear interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCurve {
    values: Vec<f64>,
}

impl GridCurve {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::InvalidParameter("grid curve needs at least 3 points".into()));
        }
        Ok(Self { values })
    }

    pub fn tabulate(boundary: &impl Boundary, n: usize) -> Result<Self> {
        Self::new(angle_grid(n).into_iter().map(|w| boundary.radius(w)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn angles(&self) -> Vec<f64> {
        angle_grid(self.values.len())
    }
}

impl Boundary for GridCurve {
    fn radius(&self, omega: f64) -> f64 {
        let n = self.values.len();
        let pos = omega.rem_euclid(TAU) / TAU * n as f64;
        let i = (pos.floor() as usize).min(n - 1);
        let frac = pos - i as f64;
        let j = (i + 1) % n;
        self.values[i] * (1.0 - frac) + self.values[j] * frac
    }
}

/// `n` equispaced angles `2πi/n`, `i = 0..n`.
pub fn angle_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| TAU * i as f64 / n as f64).collect()
}

/// The parametric shapes used as ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ShapeCase {
    Circle { radius: f64 },
    /// Axis-aligned ellipse centred at the origin, major semi-axis along ω = 0.
    Ellipse { b1: f64, b2: f64 },
    /// Ellipse centred at `center`, rotated counterclockwise by `rotation` radians.
    ShiftedEllipse { b1: f64, b2: f64, center: [f64; 2], rotation: f64 },
    /// Regular triangle centred at the origin with one vertex on the positive x-axis.
    Triangle { height: f64 },
}

impl ShapeCase {
    pub fn b1() -> Self {
        ShapeCase::Ellipse { b1: 0.35, b2: 0.25 }
    }

    pub fn b2() -> Self {
        ShapeCase::ShiftedEllipse { b1: 0.35, b2: 0.25, center: [0.1, 0.1], rotation: PI / 3.0 }
    }

    pub fn b3() -> Self {
        ShapeCase::Triangle { height: 0.5 }
    }

    /// Checks positivity, that the origin is interior and that the shape
    /// stays inside the image frame.
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
            }
        };
        match *self {
            ShapeCase::Circle { radius } => positive(radius, "radius")?,
            ShapeCase::Ellipse { b1, b2 } => {
                positive(b1, "b1")?;
                positive(b2, "b2")?;
            }
            ShapeCase::ShiftedEllipse { b1, b2, center, rotation } => {
                positive(b1, "b1")?;
                positive(b2, "b2")?;
                let (u, v) = rotate(-center[0], -center[1], -rotation);
                if (u / b1).powi(2) + (v / b2).powi(2) >= 1.0 {
                    return Err(Error::InvalidParameter(
                        "reference point must lie inside the shifted ellipse".into(),
                    ));
                }
            }
            ShapeCase::Triangle { height } => positive(height, "height")?,
        }
        for omega in angle_grid(720) {
            let r = self.radius_checked(omega)?;
            if r >= max_radius(omega) {
                return Err(Error::InvalidParameter(format!(
                    "shape leaves the image frame at ω = {omega:.4}"
                )));
            }
        }
        Ok(())
    }

    /// Radius along `ω`, failing if the ray misses the shape.
    pub fn radius_checked(&self, omega: f64) -> Result<f64> {
        match *self {
            ShapeCase::Circle { radius } => Ok(radius),
            ShapeCase::Ellipse { b1, b2 } => {
                let (s, c) = omega.sin_cos();
                Ok(b1 * b2 / ((b2 * c).powi(2) + (b1 * s).powi(2)).sqrt())
            }
            ShapeCase::ShiftedEllipse { b1, b2, center, rotation } => {
                // Ray t·d in the ellipse frame: q(t) = t·u - w.
                let (s, c) = omega.sin_cos();
                let (ux, uy) = rotate(c, s, -rotation);
                let (wx, wy) = rotate(center[0], center[1], -rotation);
                let (ib1, ib2) = (1.0 / (b1 * b1), 1.0 / (b2 * b2));
                let qa = ux * ux * ib1 + uy * uy * ib2;
                let qb = ux * wx * ib1 + uy * wy * ib2;
                let qc = wx * wx * ib1 + wy * wy * ib2 - 1.0;
                let disc = qb * qb - qa * qc;
                if disc < 0.0 {
                    return Err(Error::NoIntersection(omega));
                }
                let t = (qb + disc.sqrt()) / qa;
                if t > 0.0 {
                    Ok(t)
                } else {
                    Err(Error::NoIntersection(omega))
                }
            }
            ShapeCase::Triangle { height } => {
                // Edge normals sit halfway between vertices at 0, 2π/3, 4π/3.
                let apothem = height / 3.0;
                let best = (0..3)
                    .map(|k| (omega - PI / 3.0 - 2.0 * PI * k as f64 / 3.0).cos())
                    .fold(f64::MIN, f64::max);
                Ok(apothem / best)
            }
        }
    }

    /// Enclosed area.
    pub fn area(&self) -> f64 {
        match *self {
            ShapeCase::Circle { radius } => PI * radius * radius,
            ShapeCase::Ellipse { b1, b2 } | ShapeCase::ShiftedEllipse { b1, b2, .. } => PI * b1 * b2,
            ShapeCase::Triangle { height } => height * height / 3.0_f64.sqrt(),
        }
    }
}

impl Boundary for ShapeCase {
    fn radius(&self, omega: f64) -> f64 {
        self.radius_checked(omega).expect("validated shapes contain the origin")
    }
}

pub fn shape_radius(case: &ShapeCase, omega: f64) -> Result<f64> {
    case.radius_checked(omega)
}

fn rotate(x: f64, y: f64, angle: f64) -> (f64, f64) {
    let (s, c) = angle.sin_cos();
    (c * x - s * y, s * x + c * y)
}

/// Inside flags `r_i < γ_i`; ties count as outside.
pub fn membership(curve_values: &[f64], image: &PolarImage) -> Vec<bool> {
    curve_values
        .iter()
        .zip(&image.observations)
        .map(|(&g, o)| o.r < g)
        .collect()
}

/// Area of the symmetric difference of the regions bounded by two curves,
/// `½ ∫ |γ_a² - γ_b²| dω`, by the periodic trapezoid rule on `grid_size` angles.
pub fn lebesgue_error(a: &impl Boundary, b: &impl Boundary, grid_size: usize) -> f64 {
    let n = grid_size.max(1);
    let h = TAU / n as f64;
    let sum: f64 = (0..n)
        .map(|i| {
            let w = h * i as f64;
            let (ra, rb) = (a.radius(w), b.radius(w));
            (ra * ra - rb * rb).abs()
        })
        .sum();
    0.5 * h * sum
}
