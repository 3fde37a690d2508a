//! The conditional expert Kaplan–Meier estimator.
//!
//! At a covariate point `z0` the sample is reweighted by kernel weights
//! `K_B(Z_i − z0)` and three Nadaraya–Watson step functions are formed:
//!
//! * `Ĥ(t)`, the weighted empirical distribution of the observed times `W`;
//! * `Ĥ₁†(t)`, the same sum restricted to observations the expert accepts
//!   (`η = 1`), or to all flagged events (`η = δ`) for the naive estimator.
//!
//! The cumulative hazard is `Λ̂†(t) = ∫_{[0,t]} dĤ₁†(s) / (1 − Ĥ(s−))` and the
//! distribution estimate is the product integral
//! `1 − F̂†(t) = Π_{s ≤ t} (1 − ΔΛ̂†(s))`.
//!
//! Observations sharing a time are merged into one jump before the hazard
//! step. `1 − Ĥ(s−)` is evaluated as the weight mass at or after `s`, which
//! keeps every hazard increment in `[0, 1]` in floating point.

use std::io::Write;

use thiserror::Error;

use crate::curves::{CurveError, StepCurve};
use crate::data::Sample;
use crate::kernels::{BandwidthMatrix, KernelError, KernelSpec};

/// Denominators `1 − Ĥ(s−)` below this stop the hazard recursion.
pub const DENOMINATOR_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("no observation has positive kernel weight at z = {z0:?}")]
    ZeroDensity { z0: Vec<f64> },
    #[error("expert judgments are missing from the sample")]
    MissingJudgments,
    #[error("hazard increment {size} at t = {time} lies outside [0, 1]")]
    JumpOutOfRange { time: f64, size: f64 },
    #[error("1 - H(s-) = {denominator} at s = {time} is below the floor")]
    DenominatorUnderflow { time: f64, denominator: f64 },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// Which event indicator feeds the sub-distribution estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Judgments {
    /// `η = δ`: every flagged event is taken as true.
    Naive,
    /// The expert judgments stored in the sample.
    Expert,
}

/// Raw kernel weights `K(B⁻¹(Z_i − z0))` in the sample's sorted order.
pub fn kernel_weights(
    sample: &Sample,
    kernel: &KernelSpec,
    bandwidth: &BandwidthMatrix,
    z0: &[f64],
) -> Result<Vec<f64>, EstimatorError> {
    kernel.check_dim(sample.dim())?;
    kernel.check_dim(bandwidth.dim())?;
    kernel.check_dim(z0.len())?;
    Ok((0..sample.len())
        .map(|i| kernel.raw_weight(bandwidth, sample.covariates(i), z0))
        .collect())
}

/// `ĝ(z0) = (1 / (n|B|)) Σ K(B⁻¹(Z_i − z0))`.
pub fn density_estimate(
    sample: &Sample,
    kernel: &KernelSpec,
    bandwidth: &BandwidthMatrix,
    z0: &[f64],
) -> Result<f64, EstimatorError> {
    let w = kernel_weights(sample, kernel, bandwidth, z0)?;
    let total: f64 = w.iter().sum();
    Ok(total / (sample.len() as f64 * bandwidth.determinant()))
}

/// `Ĥ(·|z0)`: weighted empirical distribution function of `W`.
pub fn h_estimate(
    sample: &Sample,
    kernel: &KernelSpec,
    bandwidth: &BandwidthMatrix,
    z0: &[f64],
) -> Result<StepCurve, EstimatorError> {
    let w = kernel_weights(sample, kernel, bandwidth, z0)?;
    let total = positive_total(&w, z0)?;
    weighted_distribution(sample, &w, None, total)
}

/// `Ĥ₁†(·|z0)`: like [`h_estimate`] with each observation weighted by `η`.
pub fn h1_expert_estimate(
    sample: &Sample,
    kernel: &KernelSpec,
    bandwidth: &BandwidthMatrix,
    z0: &[f64],
) -> Result<StepCurve, EstimatorError> {
    let marks = sample.judgments().ok_or(EstimatorError::MissingJudgments)?;
    let w = kernel_weights(sample, kernel, bandwidth, z0)?;
    let total = positive_total(&w, z0)?;
    weighted_distribution(sample, &w, Some(marks), total)
}

/// `Ĥ₁ˣ(·|z0)`: the δ-weighted (naive) sub-distribution estimate.
pub fn h1_naive_estimate(
    sample: &Sample,
    kernel: &KernelSpec,
    bandwidth: &BandwidthMatrix,
    z0: &[f64],
) -> Result<StepCurve, EstimatorError> {
    let w = kernel_weights(sample, kernel, bandwidth, z0)?;
    let total = positive_total(&w, z0)?;
    weighted_distribution(sample, &w, Some(sample.deltas()), total)
}

fn positive_total(weights: &[f64], z0: &[f64]) -> Result<f64, EstimatorError> {
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        Ok(total)
    } else {
        Err(EstimatorError::ZeroDensity { z0: z0.to_vec() })
    }
}

/// One jump per distinct time with positive mass.
fn weighted_distribution(
    sample: &Sample,
    weights: &[f64],
    marks: Option<&[bool]>,
    total: f64,
) -> Result<StepCurve, EstimatorError> {
    let starts = sample.group_starts();
    let times = sample.times();
    let mut jt = Vec::with_capacity(starts.len());
    let mut js = Vec::with_capacity(starts.len());
    for g in starts.windows(2) {
        let mass: f64 = match marks {
            None => weights[g[0]..g[1]].iter().sum(),
            Some(m) => (g[0]..g[1]).filter(|&i| m[i]).map(|i| weights[i]).sum(),
        };
        if mass > 0.0 {
            jt.push(times[g[0]]);
            js.push(mass / total);
        }
    }
    Ok(StepCurve::new_monotone(jt, js, 0.0)?)
}

/// `1 − Ĥ(s−)` evaluated as the jump mass of `Ĥ` at times `≥ s`.
#[derive(Debug, Clone, PartialEq)]
pub struct AtRisk {
    times: Vec<f64>,
    tails: Vec<f64>,
}

impl AtRisk {
    /// Assumes `h` has unit total mass, as every estimate of `H` does.
    pub fn from_distribution(h: &StepCurve) -> Self {
        let mut tails = vec![0.0; h.len()];
        let mut acc = 0.0;
        for (i, d) in h.jumps().iter().enumerate().rev() {
            acc += d;
            tails[i] = acc;
        }
        Self {
            times: h.times().to_vec(),
            tails,
        }
    }

    pub fn at(&self, s: f64) -> f64 {
        let idx = self.times.partition_point(|&u| u < s);
        self.tails.get(idx).copied().unwrap_or(0.0)
    }
}

/// Hazard estimate plus the time at which the recursion had to stop, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct HazardEstimate {
    pub lambda: StepCurve,
    /// First jump time at which `1 − Ĥ(s−)` fell below [`DENOMINATOR_FLOOR`];
    /// `lambda` holds only the jumps before it.
    pub truncated_at: Option<f64>,
}

/// `Λ̂†(t) = ∫_{[0,t]} dĤ₁†(s) / (1 − Ĥ(s−))` for `t ≤ t_max`.
pub fn nelson_aalen_expert(
    h: &StepCurve,
    h1: &StepCurve,
    t_max: f64,
) -> Result<HazardEstimate, EstimatorError> {
    nelson_aalen_with(&AtRisk::from_distribution(h), h1, t_max)
}

fn nelson_aalen_with(
    at_risk: &AtRisk,
    h1: &StepCurve,
    t_max: f64,
) -> Result<HazardEstimate, EstimatorError> {
    let mut times = Vec::new();
    let mut jumps = Vec::new();
    let mut truncated_at = None;
    for (s, d) in h1.iter_jumps().take_while(|&(s, _)| s <= t_max) {
        if d == 0.0 {
            continue;
        }
        let denom = at_risk.at(s);
        if denom < DENOMINATOR_FLOOR {
            truncated_at = Some(s);
            break;
        }
        let size = d / denom;
        if !(0.0..=1.0).contains(&size) {
            return Err(EstimatorError::JumpOutOfRange { time: s, size });
        }
        times.push(s);
        jumps.push(size);
    }
    Ok(HazardEstimate {
        lambda: StepCurve::new_monotone(times, jumps, 0.0)?,
        truncated_at,
    })
}

/// `F(t) = 1 − Π_{s ≤ t} (1 − ΔΛ(s))` for `t ≤ t_max`.
pub fn product_integral(lambda: &StepCurve, t_max: f64) -> Result<StepCurve, EstimatorError> {
    let mut survival = 1.0;
    let mut times = Vec::with_capacity(lambda.len());
    let mut values = Vec::with_capacity(lambda.len());
    for (s, d) in lambda.iter_jumps().take_while(|&(s, _)| s <= t_max) {
        if !(0.0..=1.0).contains(&d) {
            return Err(EstimatorError::JumpOutOfRange { time: s, size: d });
        }
        survival *= 1.0 - d;
        times.push(s);
        values.push(1.0 - survival);
    }
    Ok(StepCurve::from_values(times, values, 0.0)?)
}

/// The estimator chain evaluated at one covariate point.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalFit {
    pub z0: Vec<f64>,
    /// `Ĥ(·|z0)`.
    pub h: StepCurve,
    /// `Ĥ₁†(·|z0)`.
    pub h1: StepCurve,
    /// `Λ̂†(·|z0)`.
    pub lambda: StepCurve,
    /// `F̂†(·|z0)`.
    pub f: StepCurve,
    /// `ĝ(z0)`.
    pub g_hat: f64,
    /// Sum of the raw kernel weights `Σ K(B⁻¹(Z_i − z0))`.
    pub n_effective: f64,
    pub t_max: f64,
    pub truncated_at: Option<f64>,
    at_risk: AtRisk,
}

impl ConditionalFit {
    /// Runs the chain from precomputed raw kernel weights (sorted order).
    ///
    /// `determinant` is `|B|`, used only for `ĝ`.
    pub fn from_weights(
        sample: &Sample,
        weights: &[f64],
        judgments: Judgments,
        z0: &[f64],
        determinant: f64,
        t_max: f64,
    ) -> Result<Self, EstimatorError> {
        let marks = match judgments {
            Judgments::Naive => sample.deltas(),
            Judgments::Expert => sample.judgments().ok_or(EstimatorError::MissingJudgments)?,
        };
        let total = positive_total(weights, z0)?;
        let h = weighted_distribution(sample, weights, None, total)?;
        let h1 = weighted_distribution(sample, weights, Some(marks), total)?;
        let at_risk = AtRisk::from_distribution(&h);
        let hazard = nelson_aalen_with(&at_risk, &h1, t_max)?;
        let f = product_integral(&hazard.lambda, t_max)?;
        Ok(Self {
            z0: z0.to_vec(),
            h,
            h1,
            lambda: hazard.lambda,
            f,
            g_hat: total / (sample.len() as f64 * determinant),
            n_effective: total,
            t_max,
            truncated_at: hazard.truncated_at,
            at_risk,
        })
    }

    /// Assembles a fit from curves built elsewhere.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        z0: Vec<f64>,
        h: StepCurve,
        h1: StepCurve,
        lambda: StepCurve,
        f: StepCurve,
        g_hat: f64,
        n_effective: f64,
        t_max: f64,
    ) -> Self {
        let at_risk = AtRisk::from_distribution(&h);
        Self {
            z0,
            h,
            h1,
            lambda,
            f,
            g_hat,
            n_effective,
            t_max,
            truncated_at: None,
            at_risk,
        }
    }

    /// `1 − F̂†(t)`.
    pub fn survival(&self, t: f64) -> f64 {
        1.0 - self.f.value(t)
    }

    /// `1 − Ĥ(u−)`.
    pub fn at_risk(&self, u: f64) -> f64 {
        self.at_risk.at(u)
    }

    /// Upper end of the range on which the fit is valid.
    pub fn valid_until(&self) -> f64 {
        self.truncated_at.map_or(self.t_max, |t| t.min(self.t_max))
    }

    /// Rows `(t, F, survival, Lambda, H)` at `t = 0` and every jump of `Ĥ`
    /// up to `t_max`.
    pub fn write_table<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,F,survival,Lambda,H")?;
        let mut times: Vec<f64> = vec![0.0];
        times.extend(
            self.h
                .times()
                .iter()
                .copied()
                .filter(|&t| t > 0.0 && t <= self.t_max),
        );
        for t in times {
            let f = self.f.value(t);
            writeln!(
                out,
                "{t},{f},{},{},{}",
                1.0 - f,
                self.lambda.value(t),
                self.h.value(t)
            )?;
        }
        Ok(())
    }
}

/// Composes `Ĥ → Ĥ₁† → Λ̂† → F̂†` at `z0`.
pub fn fit_conditional_km(
    sample: &Sample,
    judgments: Judgments,
    kernel: &KernelSpec,
    bandwidth: &BandwidthMatrix,
    z0: &[f64],
    t_max: f64,
) -> Result<ConditionalFit, EstimatorError> {
    let w = kernel_weights(sample, kernel, bandwidth, z0)?;
    ConditionalFit::from_weights(sample, &w, judgments, z0, bandwidth.determinant(), t_max)
}

/// `∫_0^upper (1 − F_a(t)) − (1 − F_b(t)) dt`.
pub fn survival_integral_difference(f_a: &StepCurve, f_b: &StepCurve, upper: f64) -> f64 {
    f_b.integrate(0.0, upper) - f_a.integrate(0.0, upper)
}
