//! Kernels, diagonal bandwidths and the pairwise kernel-weight cache.
//!
//! Weights are written `K_B(z_i − z) = K(B⁻¹(z_i − z)) / |B|`. The `1/n`
//! factor of a density estimate is left out everywhere except
//! [`crate::estimator::density_estimate`]: it cancels in every ratio
//! estimator, and keeping it out lets the cache be reused for leave-one-out
//! work.
//!
//! The consistency theory assumes all diagonal entries of `B` are equal;
//! bandwidth selection works over distinct entries, so [`BandwidthMatrix`]
//! allows them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Sample;
use crate::quadrature::adaptive_simpson;

/// `Φ(2) − Φ(−2) = erf(√2)`.
pub const TRUNCATED_GAUSSIAN_MASS: f64 = 0.954_499_736_103_641_6;
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const MOMENT_TOL: f64 = 1e-6;
const QUAD_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("expected a vector of length {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("bandwidth entry {index} is {value}; entries must be positive and finite")]
    NonPositiveBandwidth { index: usize, value: f64 },
    #[error("kernel dimension must be at least 1")]
    ZeroDimension,
    #[error("kernel moment check failed: {0}")]
    MomentCheck(String),
    #[error("bandwidth schedule needs n >= 2 and 0 < rho, got n = {n}, rho = {rho}")]
    BadSchedule { n: usize, rho: f64 },
}

/// Univariate kernel shapes. The product of `k` copies forms the kernel on `ℝᵏ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelShape {
    /// `1_{[−2,2]}(u) φ(u) / (Φ(2) − Φ(−2))`.
    #[default]
    TruncatedGaussian,
    /// `½ · 1_{[−1,1]}(u)`.
    Box,
    /// `¾ (1 − u²) 1_{[−1,1]}(u)`.
    Epanechnikov,
}

impl KernelShape {
    #[inline]
    pub fn eval(self, u: f64) -> f64 {
        match self {
            KernelShape::TruncatedGaussian => univariate_truncated_gaussian(u),
            KernelShape::Box => {
                if u.abs() <= 1.0 {
                    0.5
                } else {
                    0.0
                }
            }
            KernelShape::Epanechnikov => {
                if u.abs() <= 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
        }
    }

    /// Half-width of the support interval.
    pub fn support(self) -> f64 {
        match self {
            KernelShape::TruncatedGaussian => 2.0,
            KernelShape::Box | KernelShape::Epanechnikov => 1.0,
        }
    }

    /// `∫K²(u)du` of the univariate kernel, by quadrature.
    pub fn l2_norm(self) -> f64 {
        let s = self.support();
        // The integrand is smooth on the open support, so splitting at the
        // origin is enough for the adaptive rule.
        let half = adaptive_simpson(|u| self.eval(u).powi(2), 0.0, s, QUAD_TOL * 1e-2)
            .expect("kernel L2 quadrature");
        2.0 * half
    }
}

/// `1_{[−2,2]}(u) φ(u) / (Φ(2) − Φ(−2))`.
#[inline]
pub fn univariate_truncated_gaussian(u: f64) -> f64 {
    if u.abs() <= 2.0 {
        (-0.5 * u * u).exp() * FRAC_1_SQRT_2PI / TRUNCATED_GAUSSIAN_MASS
    } else {
        0.0
    }
}

/// Product kernel on `ℝᵏ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    shape: KernelShape,
    dim: usize,
}

impl KernelSpec {
    /// Builds the product kernel, checking `∫K = 1` and `∫uK = 0` of the
    /// univariate factor by quadrature.
    pub fn new(shape: KernelShape, dim: usize) -> Result<Self, KernelError> {
        if dim == 0 {
            return Err(KernelError::ZeroDimension);
        }
        let s = shape.support();
        let mass = adaptive_simpson(|u| shape.eval(u), -s, s, QUAD_TOL)
            .map_err(|e| KernelError::MomentCheck(e.to_string()))?;
        let first = adaptive_simpson(|u| u * shape.eval(u), -s, s, QUAD_TOL)
            .map_err(|e| KernelError::MomentCheck(e.to_string()))?;
        if (mass - 1.0).abs() > MOMENT_TOL {
            return Err(KernelError::MomentCheck(format!("integral is {mass}")));
        }
        if first.abs() > MOMENT_TOL {
            return Err(KernelError::MomentCheck(format!("first moment is {first}")));
        }
        Ok(Self { shape, dim })
    }

    pub fn truncated_gaussian(dim: usize) -> Self {
        Self::new(KernelShape::TruncatedGaussian, dim).expect("built-in kernel is normalized")
    }

    pub fn shape(&self) -> KernelShape {
        self.shape
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `Π K̃(u_i)`.
    pub fn product_kernel(&self, u: &[f64]) -> Result<f64, KernelError> {
        self.check_dim(u.len())?;
        Ok(u.iter().map(|&x| self.shape.eval(x)).product())
    }

    /// `K(0)`.
    pub fn value_at_origin(&self) -> f64 {
        self.shape.eval(0.0).powi(self.dim as i32)
    }

    /// `K(B⁻¹(z_i − z))`, without the `1/|B|` factor. Dimensions are not
    /// checked.
    #[inline]
    pub fn raw_weight(&self, bandwidth: &BandwidthMatrix, z_i: &[f64], z: &[f64]) -> f64 {
        let mut w = 1.0;
        for ((a, b), h) in z_i.iter().zip(z).zip(&bandwidth.diagonal) {
            w *= self.shape.eval((a - b) / h);
            if w == 0.0 {
                return 0.0;
            }
        }
        w
    }

    /// `K(B⁻¹(z_i − z)) / |B|`.
    pub fn scaled_weight(
        &self,
        bandwidth: &BandwidthMatrix,
        z_i: &[f64],
        z: &[f64],
    ) -> Result<f64, KernelError> {
        self.check_dim(z_i.len())?;
        self.check_dim(z.len())?;
        self.check_dim(bandwidth.dim())?;
        Ok(self.raw_weight(bandwidth, z_i, z) / bandwidth.determinant())
    }

    /// `∫K²(u)du` over `ℝᵏ`: the univariate value to the `k`-th power.
    pub fn l2_norm(&self) -> f64 {
        self.shape.l2_norm().powi(self.dim as i32)
    }

    pub(crate) fn check_dim(&self, found: usize) -> Result<(), KernelError> {
        if found == self.dim {
            Ok(())
        } else {
            Err(KernelError::DimensionMismatch {
                expected: self.dim,
                found,
            })
        }
    }
}

/// `∫K²(u)du` for a kernel spec.
pub fn kernel_l2_norm(spec: &KernelSpec) -> f64 {
    spec.l2_norm()
}

/// Diagonal bandwidth matrix `diag(b₁, …, b_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthMatrix {
    diagonal: Vec<f64>,
}

impl BandwidthMatrix {
    pub fn new(diagonal: Vec<f64>) -> Result<Self, KernelError> {
        if diagonal.is_empty() {
            return Err(KernelError::ZeroDimension);
        }
        if let Some((index, &value)) = diagonal
            .iter()
            .enumerate()
            .find(|(_, &b)| !(b.is_finite() && b > 0.0))
        {
            return Err(KernelError::NonPositiveBandwidth { index, value });
        }
        Ok(Self { diagonal })
    }

    pub fn isotropic(b: f64, dim: usize) -> Result<Self, KernelError> {
        Self::new(vec![b; dim])
    }

    /// `b_n = (log n / n^ρ)^{1/k}` on every diagonal entry.
    pub fn schedule(n: usize, rho: f64, dim: usize) -> Result<Self, KernelError> {
        if n < 2 || !(rho > 0.0) || dim == 0 {
            return Err(KernelError::BadSchedule { n, rho });
        }
        let nf = n as f64;
        let b = (nf.ln() / nf.powf(rho)).powf(1.0 / dim as f64);
        Self::isotropic(b, dim)
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    /// `|B| = Π b_i`.
    pub fn determinant(&self) -> f64 {
        self.diagonal.iter().product()
    }
}

/// Source of raw pairwise kernel values `K(B⁻¹(Z_j − Z_m))` over a sample.
pub trait PairwiseWeights: Sync {
    fn len(&self) -> usize;
    fn weight(&self, j: usize, m: usize) -> f64;
    fn self_weight(&self) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `Σ_j K(B⁻¹(Z_j − Z_m))`, including the self term, summed in index order.
    fn column_sum(&self, m: usize) -> f64 {
        (0..self.len()).map(|j| self.weight(j, m)).sum()
    }
}

/// Kernel values computed on demand.
#[derive(Debug, Clone, Copy)]
pub struct DirectWeights<'a> {
    pub sample: &'a Sample,
    pub kernel: &'a KernelSpec,
    pub bandwidth: &'a BandwidthMatrix,
}

impl PairwiseWeights for DirectWeights<'_> {
    fn len(&self) -> usize {
        self.sample.len()
    }

    #[inline]
    fn weight(&self, j: usize, m: usize) -> f64 {
        self.kernel.raw_weight(
            self.bandwidth,
            self.sample.covariates(j),
            self.sample.covariates(m),
        )
    }

    fn self_weight(&self) -> f64 {
        self.kernel.value_at_origin()
    }
}

/// All pairwise raw kernel values of a sample at a fixed bandwidth.
///
/// Only the strict upper triangle is stored (row-major, packed); the
/// diagonal is the single value `K(0)`. Building performs exactly
/// `n(n−1)/2 + 1` kernel evaluations.
#[derive(Debug, Clone)]
pub struct WeightCache {
    n: usize,
    bandwidth: BandwidthMatrix,
    self_value: f64,
    upper: Vec<f64>,
    evaluations: usize,
}

impl WeightCache {
    pub fn build(
        sample: &Sample,
        kernel: &KernelSpec,
        bandwidth: &BandwidthMatrix,
    ) -> Result<Self, KernelError> {
        kernel.check_dim(sample.dim())?;
        kernel.check_dim(bandwidth.dim())?;
        let n = sample.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let zj = sample.covariates(j);
                (j + 1..n)
                    .map(|m| kernel.raw_weight(bandwidth, zj, sample.covariates(m)))
                    .collect()
            })
            .collect();
        let upper: Vec<f64> = rows.concat();
        let evaluations = upper.len() + 1;
        Ok(Self {
            n,
            bandwidth: bandwidth.clone(),
            self_value: kernel.value_at_origin(),
            upper,
            evaluations,
        })
    }

    pub fn bandwidth(&self) -> &BandwidthMatrix {
        &self.bandwidth
    }

    /// Number of raw kernel evaluations performed while building.
    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    #[inline]
    fn packed_index(&self, j: usize, m: usize) -> usize {
        debug_assert!(j < m);
        j * self.n - j * (j + 1) / 2 + (m - j - 1)
    }
}

impl PairwiseWeights for WeightCache {
    fn len(&self) -> usize {
        self.n
    }

    #[inline]
    fn weight(&self, j: usize, m: usize) -> f64 {
        use std::cmp::Ordering::*;
        match j.cmp(&m) {
            Equal => self.self_value,
            Less => self.upper[self.packed_index(j, m)],
            Greater => self.upper[self.packed_index(m, j)],
        }
    }

    fn self_weight(&self) -> f64 {
        self.self_value
    }
}
