//! The squared-exponential-periodic kernel on `[0, 1]` and its
//! Karhunen–Loève expansion.
//!
//! `G_a(t1, t2) = exp(-4a² sin²(π(t1 - t2)))`. Its eigenfunctions are the
//! Fourier basis and its eigenvalues are `e^{-2a²} I_j(2a²)`, each harmonic
//! `j >= 1` appearing twice (cosine and sine). The basis used here is
//! orthonormal on `[0, 1]`: `{1, √2 cos 2πjt, √2 sin 2πjt}`, so that
//! `G = Σ v_k ψ_k ⊗ ψ_k` holds exactly.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;

use crate::bessel::scaled_bessel_table;
use crate::error::{Error, Result};

/// Default number of harmonics kept in the truncated expansion.
pub const DEFAULT_HALF_ORDER: usize = 10;

/// Eigenvalues below this are clamped before inversion.
pub const EIGENVALUE_FLOOR: f64 = 1e-300;

/// Scale `a`, precision `τ` and truncation `J` of a rescaled kernel prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    scale: f64,
    precision: f64,
    half_order: usize,
}

impl KernelSpec {
    pub fn new(scale: f64, precision: f64, half_order: usize) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter(format!("kernel scale must be positive, got {scale}")));
        }
        if !(precision > 0.0 && precision.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "kernel precision must be positive, got {precision}"
            )));
        }
        if half_order == 0 {
            return Err(Error::InvalidParameter("half order J must be at least 1".into()));
        }
        Ok(Self { scale, precision, half_order })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn precision(&self) -> f64 {
        self.precision
    }

    pub fn half_order(&self) -> usize {
        self.half_order
    }

    /// Number of basis functions `L = 2J + 1`.
    pub fn basis_len(&self) -> usize {
        2 * self.half_order + 1
    }

    pub fn with_scale(self, scale: f64) -> Result<Self> {
        Self::new(scale, self.precision, self.half_order)
    }

    pub fn with_precision(self, precision: f64) -> Result<Self> {
        Self::new(self.scale, precision, self.half_order)
    }
}

/// Eigenvalues `v_1..v_L` of the kernel at a given scale, in basis order.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    scale: f64,
    eigenvalues: Vec<f64>,
}

impl EigenSystem {
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Eigenvalues clamped at [`EIGENVALUE_FLOOR`], safe to invert.
    pub fn floored(&self) -> impl Iterator<Item = f64> + '_ {
        self.eigenvalues.iter().map(|v| v.max(EIGENVALUE_FLOOR))
    }

    /// `zᵀ Σ_a^{-1} z` for a coefficient vector of matching length.
    pub fn quadratic_form(&self, z: &[f64]) -> f64 {
        z.iter().zip(self.floored()).map(|(z, v)| z * z / v).sum()
    }

    /// `Σ log v_k`, with the floor applied.
    pub fn log_det(&self) -> f64 {
        self.floored().map(f64::ln).sum()
    }
}

/// `exp(-4a² sin²(π(t1 - t2)))`.
pub fn kernel_value(a: f64, t1: f64, t2: f64) -> f64 {
    let s = (PI * (t1 - t2)).sin();
    (-4.0 * a * a * s * s).exp()
}

/// Eigenvalues for scale `a` and `J` harmonics, without validating `a`.
pub fn eigenvalues(a: f64, half_order: usize) -> Result<EigenSystem> {
    if !(a >= 0.0) {
        return Err(Error::Domain(format!("kernel scale must be non-negative, got {a}")));
    }
    let table = scaled_bessel_table(2.0 * a * a, half_order)?;
    let v = table.values();
    let mut eigenvalues = Vec::with_capacity(2 * half_order + 1);
    eigenvalues.push(v[0]);
    for &vj in &v[1..] {
        eigenvalues.push(vj);
        eigenvalues.push(vj);
    }
    Ok(EigenSystem { scale: a, eigenvalues })
}

pub fn eigen_system(spec: &KernelSpec) -> Result<EigenSystem> {
    eigenvalues(spec.scale(), spec.half_order())
}

/// Writes the `L` orthonormal basis functions at `t` into `row`.
pub fn basis_row_at(t: f64, row: &mut [f64]) {
    debug_assert!(row.len() % 2 == 1);
    row[0] = 1.0;
    let half = row.len() / 2;
    for j in 1..=half {
        let (s, c) = (2.0 * PI * j as f64 * t).sin_cos();
        row[2 * j - 1] = SQRT_2 * c;
        row[2 * j] = SQRT_2 * s;
    }
}

/// Basis evaluated at angles (radians), `t = ω / 2π`. One row per angle.
pub fn basis_matrix(omegas: &[f64], basis_len: usize) -> Result<DMatrix<f64>> {
    if basis_len.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("basis length must be odd, got {basis_len}")));
    }
    let mut m = DMatrix::zeros(omegas.len(), basis_len);
    let mut row = vec![0.0; basis_len];
    for (i, &omega) in omegas.iter().enumerate() {
        basis_row_at(omega / (2.0 * PI), &mut row);
        for (k, &v) in row.iter().enumerate() {
            m[(i, k)] = v;
        }
    }
    Ok(m)
}

/// Fraction of the kernel's total variance carried by the first `2J + 1` eigenvalues.
///
/// The total is exactly one, so this is simply the truncated eigenvalue sum.
pub fn pve(a: f64, half_order: usize) -> Result<f64> {
    if half_order == 0 {
        return Err(Error::InvalidParameter("half order J must be at least 1".into()));
    }
    Ok(eigenvalues(a, half_order)?.eigenvalues().iter().sum())
}

/// `Σ_{k<=L} v_k ψ_k(t1) ψ_k(t2)`.
pub fn truncated_kernel(spec: &KernelSpec, t1: f64, t2: f64) -> Result<f64> {
    let eig = eigen_system(spec)?;
    Ok(truncated_kernel_with(&eig, t1, t2))
}

/// As [`truncated_kernel`] with precomputed eigenvalues.
pub fn truncated_kernel_with(eig: &EigenSystem, t1: f64, t2: f64) -> f64 {
    let v = eig.eigenvalues();
    let half = v.len() / 2;
    // ψ_{2j}ψ_{2j} + ψ_{2j+1}ψ_{2j+1} = 2 cos(2πj(t1 - t2)).
    let d = t1 - t2;
    let mut total = v[0];
    for j in 1..=half {
        total += 2.0 * v[2 * j - 1] * (2.0 * PI * j as f64 * d).cos();
    }
    total
}

/// `2 Σ_{j=J+1}^{J+extra} e^{-2a²} I_j(2a²)`, the neglected variance.
pub fn tail_bound(a: f64, half_order: usize, extra: usize) -> Result<f64> {
    let table = scaled_bessel_table(2.0 * a * a, half_order + extra)?;
    Ok(2.0 * table.values()[half_order + 1..].iter().sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn spec_validation() {
        assert!(KernelSpec::new(0.0, 1.0, 3).is_err());
        assert!(KernelSpec::new(1.0, -1.0, 3).is_err());
        assert!(KernelSpec::new(1.0, 1.0, 0).is_err());
        let s = KernelSpec::new(1.0, 500.0, 10).unwrap();
        assert_eq!(s.basis_len(), 21);
    }

    #[test]
    fn kernel_value_examples() {
        assert_eq!(kernel_value(1.0, 0.3, 0.3), 1.0);
        assert_relative_eq!(kernel_value(1.0, 0.0, 0.5), (-4.0f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(kernel_value(2.0, 0.1, 0.35), (-8.0f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(kernel_value(2.0, 0.1, 0.35), 3.3546e-4, max_relative = 1e-4);
        assert_relative_eq!(kernel_value(3.0, 0.2, 1.2), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn eigenvalue_examples() {
        let e = eigen_system(&KernelSpec::new(1e-8, 1.0, 2).unwrap()).unwrap();
        assert_relative_eq!(e.eigenvalues()[0], 1.0, epsilon = 1e-12);
        assert!(e.eigenvalues()[1..].iter().all(|&v| v < 1e-12));

        let e = eigen_system(&KernelSpec::new(1.0, 1.0, 2).unwrap()).unwrap();
        let expected = [0.308_508_322_553_671, 0.215_269_289_248_937_66, 0.215_269_289_248_937_66, 0.093_239_033_304_733_38, 0.093_239_033_304_733_38];
        for (v, x) in e.eigenvalues().iter().zip(expected) {
            assert_relative_eq!(*v, x, max_relative = 1e-12);
        }
        for a in [0.3, 2.0, 9.0] {
            let e = eigenvalues(a, 4).unwrap();
            let v = e.eigenvalues();
            assert_eq!(v[1], v[2]);
            assert_eq!(v[3], v[4]);
            assert!(v[0] > v[1] && v[2] > v[3]);
        }
    }

    #[test]
    fn basis_rows() {
        let m = basis_matrix(&[0.0], 5).unwrap();
        let expected = [1.0, SQRT_2, 0.0, SQRT_2, 0.0];
        for k in 0..5 {
            assert_relative_eq!(m[(0, k)], expected[k], epsilon = 1e-15);
        }
        let m = basis_matrix(&[PI], 3).unwrap();
        assert_relative_eq!(m[(0, 1)], -SQRT_2, epsilon = 1e-15);
        assert_relative_eq!(m[(0, 2)], 0.0, epsilon = 1e-15);
        assert!(basis_matrix(&[0.0], 4).is_err());
    }

    #[test]
    fn basis_is_orthonormal_under_quadrature() {
        let n = 4096;
        let omegas: Vec<f64> = (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect();
        let m = basis_matrix(&omegas, 21).unwrap();
        let gram = m.transpose() * &m / n as f64;
        for i in 0..21 {
            for j in 0..21 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((gram[(i, j)] - e).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn pve_examples() {
        assert_relative_eq!(pve(1e-9, 1).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(pve(0.0, 1).unwrap(), 1.0, epsilon = 1e-15);
        // Independent reference (scipy.special.ive): 21 terms at a = 10 explain about 54%.
        assert_relative_eq!(pve(10.0, 10).unwrap(), 0.542_516_296_102_489_9, max_relative = 1e-10);
        assert_relative_eq!(pve(3.1, 10).unwrap(), 0.982_972_984_456_051_7, max_relative = 1e-10);
        assert_relative_eq!(pve(1.0, 2).unwrap(), 0.925_524_967_661_013_1, max_relative = 1e-12);
        assert!(pve(1.0, 0).is_err());
    }

    #[test]
    fn truncated_kernel_examples() {
        let tiny = KernelSpec::new(1e-9, 1.0, 3).unwrap();
        assert_relative_eq!(truncated_kernel(&tiny, 0.1, 0.8).unwrap(), 1.0, epsilon = 1e-12);

        let s = KernelSpec::new(1.0, 1.0, 10).unwrap();
        let got = truncated_kernel(&s, 0.2, 0.7).unwrap();
        assert!((got - kernel_value(1.0, 0.2, 0.7)).abs() < 1e-6);

        let s = KernelSpec::new(1.0, 1.0, 1).unwrap();
        let got = truncated_kernel(&s, 0.0, 0.0).unwrap();
        assert_relative_eq!(got, 0.739_046_901_051_546_4, max_relative = 1e-12);
        assert!((1.0 - got - 0.260_953_098_948_453_6).abs() < 1e-6);
        assert_relative_eq!(1.0 - got, tail_bound(1.0, 1, 200).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn quadratic_form_and_log_det() {
        let e = eigenvalues(1.0, 1).unwrap();
        let z = [0.1, -0.2, 0.3];
        let v = e.eigenvalues();
        let expected = 0.01 / v[0] + 0.04 / v[1] + 0.09 / v[2];
        assert_relative_eq!(e.quadratic_form(&z), expected, max_relative = 1e-14);
        assert_relative_eq!(e.log_det(), v.iter().map(|v| v.ln()).sum::<f64>(), max_relative = 1e-14);
        // Huge scale with short truncation stays finite thanks to the floor.
        let e = eigenvalues(40.0, 10).unwrap();
        assert!(e.log_det().is_finite());
        assert!(e.quadratic_form(&[1.0; 21]).is_finite());
    }
}
