//! Plug-in asymptotic variances and pointwise confidence intervals.
//!
//! With `c = ∫K² / ĝ(z)` and sums over the jumps `u ≤ s ∧ t` of `Λ̂†`:
//!
//! * `σ²_L(t, s) = c Σ (1 − ΔΛ̂(u)) ΔΛ̂(u) / (1 − Ĥ(u−))`
//! * `σ²_Z(t, s) = F̄̂(t) F̄̂(s) c Σ ΔΛ̂(u) / ((1 − Ĥ(u−)) (1 − ΔΛ̂(u)))`
//!
//! `√(n|B|) (F̂† − F)` is asymptotically centred normal with variance
//! `σ²_Z(t, t)`. For a biased expert the same dispersion holds around
//! `φ(−Λ − Γ)`, see [`biased_center`]. The plug-in variances are heuristics;
//! their calibration is checked by simulation.

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::curves::StepCurve;
use crate::estimator::{ConditionalFit, DENOMINATOR_FLOOR};
use crate::expert::{biased_limit, BiasFunctional, ExpertError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AsymptoticsError {
    #[error("density estimate {g_hat} is not positive")]
    ZeroDensity { g_hat: f64 },
    #[error("1 - H(u-) = {denominator} at u = {time} is below the floor")]
    DenominatorUnderflow { time: f64, denominator: f64 },
    #[error("hazard jump of size 1 at t = {time}: variance undefined")]
    SaturatedJump { time: f64 },
    #[error("confidence level {0} is outside [0, 1)")]
    InvalidLevel(f64),
    #[error(transparent)]
    Expert(#[from] ExpertError),
}

fn scale_factor(fit: &ConditionalFit, kernel_l2: f64) -> Result<f64, AsymptoticsError> {
    if fit.g_hat > 0.0 && fit.g_hat.is_finite() {
        Ok(kernel_l2 / fit.g_hat)
    } else {
        Err(AsymptoticsError::ZeroDensity { g_hat: fit.g_hat })
    }
}

fn hazard_terms(
    fit: &ConditionalFit,
    upper: f64,
    mut term: impl FnMut(f64, f64, f64) -> Result<f64, AsymptoticsError>,
) -> Result<f64, AsymptoticsError> {
    let mut acc = 0.0;
    for (u, d) in fit.lambda.iter_jumps().take_while(|&(u, _)| u <= upper) {
        let denom = fit.at_risk(u);
        if denom < DENOMINATOR_FLOOR {
            return Err(AsymptoticsError::DenominatorUnderflow {
                time: u,
                denominator: denom,
            });
        }
        acc += term(u, d, denom)?;
    }
    Ok(acc)
}

/// `σ²_L(t, s)`.
pub fn sigma2_hazard(
    t: f64,
    s: f64,
    fit: &ConditionalFit,
    kernel_l2: f64,
) -> Result<f64, AsymptoticsError> {
    let c = scale_factor(fit, kernel_l2)?;
    let sum = hazard_terms(fit, t.min(s), |_, d, denom| Ok((1.0 - d) * d / denom))?;
    Ok(c * sum)
}

/// `Σ_{u ≤ t} ΔΛ̂ / ((1 − Ĥ(u−)) (1 − ΔΛ̂))`, the integral factor of `σ²_Z`.
pub fn distribution_integral(fit: &ConditionalFit, t: f64) -> Result<f64, AsymptoticsError> {
    hazard_terms(fit, t, |u, d, denom| {
        if d >= 1.0 {
            Err(AsymptoticsError::SaturatedJump { time: u })
        } else {
            Ok(d / (denom * (1.0 - d)))
        }
    })
}

/// `σ²_Z(t, s)`.
pub fn sigma2_distribution(
    t: f64,
    s: f64,
    fit: &ConditionalFit,
    kernel_l2: f64,
) -> Result<f64, AsymptoticsError> {
    let c = scale_factor(fit, kernel_l2)?;
    let integral = distribution_integral(fit, t.min(s))?;
    Ok(fit.survival(t) * fit.survival(s) * c * integral)
}

/// `σ²_L` and `σ²_Z` on the diagonal `s = t` over a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceCurve {
    pub t_grid: Vec<f64>,
    pub sigma2_l: Vec<f64>,
    pub sigma2_z: Vec<f64>,
    /// `n|B|`.
    pub scale: f64,
}

pub fn variance_curve(
    fit: &ConditionalFit,
    t_grid: &[f64],
    kernel_l2: f64,
    scale: f64,
) -> Result<VarianceCurve, AsymptoticsError> {
    let mut sigma2_l = Vec::with_capacity(t_grid.len());
    let mut sigma2_z = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        sigma2_l.push(sigma2_hazard(t, t, fit, kernel_l2)?);
        sigma2_z.push(sigma2_distribution(t, t, fit, kernel_l2)?);
    }
    Ok(VarianceCurve {
        t_grid: t_grid.to_vec(),
        sigma2_l,
        sigma2_z,
        scale,
    })
}

/// Standard normal quantile (Wichura's AS241, relative accuracy about 1e-16).
#[allow(clippy::inconsistent_digit_grouping, clippy::excessive_precision)]
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q
            * (((((((2509.080_928_730_122_7 * r + 33430.575_583_588_128) * r
                + 67265.770_927_008_7)
                * r
                + 45921.953_931_549_87)
                * r
                + 13731.693_765_509_461)
                * r
                + 1971.590_950_306_551_3)
                * r
                + 133.141_667_891_784_38)
                * r
                + 3.387_132_872_796_366_5)
            / (((((((5226.495_278_852_545 * r + 28729.085_735_721_943) * r
                + 39307.895_800_092_71)
                * r
                + 21213.794_301_586_597)
                * r
                + 5394.196_021_424_751)
                * r
                + 687.187_007_492_057_9)
                * r
                + 42.313_330_701_600_91)
                * r
                + 1.0);
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-tail.ln()).sqrt();
    let value = if r <= 5.0 {
        r -= 1.6;
        (((((((7.745_450_142_783_414e-4 * r + 0.022_723_844_989_269_184) * r
            + 0.241_780_725_177_450_6)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_546)
            * r
            + 1.423_437_110_749_683_5)
            / (((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_345e-4) * r
                + 0.015_198_666_563_616_457)
                * r
                + 0.148_103_976_427_480_08)
                * r
                + 0.689_767_334_985_1)
                * r
                + 1.676_384_830_183_803_8)
                * r
                + 2.053_191_626_637_759)
                * r
                + 1.0)
    } else {
        r -= 5.0;
        (((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 1.242_660_947_388_078_4e-3)
            * r
            + 0.026_532_189_526_576_124)
            * r
            + 0.296_560_571_828_504_9)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103)
            / (((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446e-7) * r
                + 1.846_318_317_510_054_8e-5)
                * r
                + 7.868_691_311_456_133e-4)
                * r
                + 0.014_875_361_290_850_615)
                * r
                + 0.136_929_880_922_735_8)
                * r
                + 0.599_832_206_555_888)
                * r
                + 1.0)
    };
    if q < 0.0 {
        -value
    } else {
        value
    }
}

/// `z_{(1+level)/2}`; `0` for `level = 0`.
pub fn two_sided_quantile(level: f64) -> Result<f64, AsymptoticsError> {
    if !(0.0..1.0).contains(&level) {
        return Err(AsymptoticsError::InvalidLevel(level));
    }
    Ok(if level == 0.0 {
        0.0
    } else {
        normal_quantile(0.5 * (1.0 + level))
    })
}

/// One row of a pointwise confidence table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CiRow {
    pub t: f64,
    pub lower: f64,
    pub upper: f64,
    pub center: f64,
    pub sigma2: f64,
}

/// `center ± quantile · √(σ² / scale)` clipped to `[0, 1]`.
pub fn interval(t: f64, center: f64, sigma2: f64, scale: f64, quantile: f64) -> CiRow {
    let half = if quantile == 0.0 {
        0.0
    } else {
        quantile * (sigma2 / scale).sqrt()
    };
    CiRow {
        t,
        lower: (center - half).clamp(0.0, 1.0),
        upper: (center + half).clamp(0.0, 1.0),
        center,
        sigma2,
    }
}

/// `F̂†(t) ± z_{(1+level)/2} √(σ²_Z(t, t) / (n|B|))` at each grid point.
pub fn pointwise_ci(
    fit: &ConditionalFit,
    t_grid: &[f64],
    level: f64,
    scale: f64,
    kernel_l2: f64,
) -> Result<Vec<CiRow>, AsymptoticsError> {
    let q = two_sided_quantile(level)?;
    t_grid
        .iter()
        .map(|&t| {
            let s2 = sigma2_distribution(t, t, fit, kernel_l2)?;
            Ok(interval(t, fit.f.value(t), s2, scale, q))
        })
        .collect()
}

pub fn write_ci_table<W: Write>(rows: &[CiRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "t,lower,upper,center,sigma2")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.t, r.lower, r.upper, r.center, r.sigma2
        )?;
    }
    Ok(())
}

/// The distribution function `1 − φ(−Λ̂† − Γ)` around which a biased
/// expert's estimate concentrates.
pub fn biased_center(
    fit: &ConditionalFit,
    gamma: &BiasFunctional,
) -> Result<StepCurve, AsymptoticsError> {
    Ok(biased_limit(&fit.lambda, gamma)?)
}
