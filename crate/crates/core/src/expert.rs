//! Expert-judgment models and the bias they induce.
//!
//! An expert replaces each observed event indicator `δ` by a judgment
//! `η ≤ δ`. With `p(w, z)` the probability that an observed event at
//! `(w, z)` is genuine, the models here accept an observed event with
//! probability
//!
//! | model             | acceptance probability           |
//! |-------------------|----------------------------------|
//! | `Perfect`         | `p(w, z)`                        |
//! | `Naive`           | `1`                              |
//! | `Partial`         | `(1 − p0) + p0 · p(w, z)`        |
//! | `UniformCensor`   | `c`                              |
//! | `ThresholdCensor` | `c` where the predicate holds, else `1` |
//!
//! A partially informed expert drives the estimator towards
//! `φ(−Λ − Γ)` with
//! `Γ(t; z) = (1 − p0) ∫_{[0,t]} (1 − p(s, z)) / (1 − H(s−|z)) dH₁ˣ(s|z)`,
//! which [`gamma_functional`] evaluates by plugging in estimates.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curves::{CurveError, StepCurve};
use crate::data::Observation;
use crate::estimator::{product_integral, AtRisk, EstimatorError, DENOMINATOR_FLOOR};
use crate::quadrature::{adaptive_simpson, QuadratureError};
use crate::rng::{substream, Domain};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExpertError {
    #[error("probability {value} at w = {w} is outside [0, 1]")]
    ProbabilityOutOfRange { w: f64, value: f64 },
    #[error("parameter {name} = {value} is outside [0, 1]")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("both densities vanish at w = {w}, z = {z:?}")]
    BothDensitiesZero { w: f64, z: Vec<f64> },
    #[error("1 - H(s-) = {denominator} at s = {time} is below the floor")]
    DenominatorUnderflow { time: f64, denominator: f64 },
    #[error("predicate covariate index {index} out of range for dimension {dim}")]
    PredicateIndex { index: usize, dim: usize },
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Probability that an observed event at `(w, z)` is a true event.
pub trait EventProbability: Send + Sync {
    fn probability(&self, w: f64, z: &[f64]) -> Result<f64, ExpertError>;
}

impl<F> EventProbability for F
where
    F: Fn(f64, &[f64]) -> f64 + Send + Sync,
{
    fn probability(&self, w: f64, z: &[f64]) -> Result<f64, ExpertError> {
        Ok(self(w, z))
    }
}

/// `p ≡ value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantProbability(pub f64);

impl EventProbability for ConstantProbability {
    fn probability(&self, _w: f64, _z: &[f64]) -> Result<f64, ExpertError> {
        Ok(self.0)
    }
}

/// `p(w, z) = f_event(w, z) / (f_event(w, z) + f_contam(w, z))`.
pub struct DensityRatio<E, C> {
    pub f_event: E,
    pub f_contam: C,
}

/// Builds the density-ratio probability from event and contamination densities.
pub fn p_from_densities<E, C>(f_event: E, f_contam: C) -> DensityRatio<E, C>
where
    E: Fn(f64, &[f64]) -> f64 + Send + Sync,
    C: Fn(f64, &[f64]) -> f64 + Send + Sync,
{
    DensityRatio { f_event, f_contam }
}

impl<E, C> EventProbability for DensityRatio<E, C>
where
    E: Fn(f64, &[f64]) -> f64 + Send + Sync,
    C: Fn(f64, &[f64]) -> f64 + Send + Sync,
{
    fn probability(&self, w: f64, z: &[f64]) -> Result<f64, ExpertError> {
        let a = (self.f_event)(w, z);
        let b = (self.f_contam)(w, z);
        if a + b > 0.0 {
            Ok(a / (a + b))
        } else {
            Err(ExpertError::BothDensitiesZero { w, z: z.to_vec() })
        }
    }
}

/// `z[index] ≤ threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovariatePredicate {
    pub index: usize,
    pub threshold: f64,
}

impl CovariatePredicate {
    pub fn holds(&self, z: &[f64]) -> Result<bool, ExpertError> {
        z.get(self.index)
            .map(|&v| v <= self.threshold)
            .ok_or(ExpertError::PredicateIndex {
                index: self.index,
                dim: z.len(),
            })
    }
}

#[derive(Clone)]
pub enum ExpertModel {
    Perfect {
        p: Arc<dyn EventProbability>,
    },
    Naive,
    Partial {
        p0: f64,
        p: Arc<dyn EventProbability>,
    },
    UniformCensor {
        c: f64,
    },
    ThresholdCensor {
        c: f64,
        predicate: CovariatePredicate,
    },
}

impl fmt::Debug for ExpertModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExpertModel::Perfect { .. } => write!(f, "Perfect"),
            ExpertModel::Naive => write!(f, "Naive"),
            ExpertModel::Partial { p0, .. } => write!(f, "Partial(p0 = {p0})"),
            ExpertModel::UniformCensor { c } => write!(f, "UniformCensor(c = {c})"),
            ExpertModel::ThresholdCensor { c, predicate } => write!(
                f,
                "ThresholdCensor(c = {c}, z[{}] <= {})",
                predicate.index, predicate.threshold
            ),
        }
    }
}

fn unit_interval(name: &'static str, value: f64) -> Result<f64, ExpertError> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(ExpertError::InvalidParameter { name, value })
    }
}

impl ExpertModel {
    /// Probability that an observed event (`δ = 1`) at `(w, z)` is accepted.
    pub fn acceptance_probability(&self, w: f64, z: &[f64]) -> Result<f64, ExpertError> {
        let checked = |p: &Arc<dyn EventProbability>| -> Result<f64, ExpertError> {
            let value = p.probability(w, z)?;
            if (0.0..=1.0).contains(&value) {
                Ok(value)
            } else {
                Err(ExpertError::ProbabilityOutOfRange { w, value })
            }
        };
        match self {
            ExpertModel::Perfect { p } => checked(p),
            ExpertModel::Naive => Ok(1.0),
            ExpertModel::Partial { p0, p } => {
                let p0 = unit_interval("p0", *p0)?;
                Ok((1.0 - p0) + p0 * checked(p)?)
            }
            ExpertModel::UniformCensor { c } => unit_interval("c", *c),
            ExpertModel::ThresholdCensor { c, predicate } => {
                let c = unit_interval("c", *c)?;
                Ok(if predicate.holds(z)? { c } else { 1.0 })
            }
        }
    }

    /// Draws `η` for one observation. `δ = 0` always yields `η = 0`.
    pub fn judge_raw<R: Rng + ?Sized>(
        &self,
        w: f64,
        delta: bool,
        z: &[f64],
        rng: &mut R,
    ) -> Result<bool, ExpertError> {
        if !delta {
            return Ok(false);
        }
        let p = self.acceptance_probability(w, z)?;
        Ok(rng.random::<f64>() < p)
    }

    pub fn judge<R: Rng + ?Sized>(
        &self,
        obs: &Observation,
        rng: &mut R,
    ) -> Result<bool, ExpertError> {
        self.judge_raw(obs.w, obs.delta, &obs.z, rng)
    }

    /// Judges every observation, observation `i` drawing from the substream
    /// `(seed, domain, replication, i)`.
    pub fn judge_all(
        &self,
        observations: &[Observation],
        seed: u64,
        domain: Domain,
        replication: u64,
    ) -> Result<Vec<bool>, ExpertError> {
        observations
            .iter()
            .enumerate()
            .map(|(i, o)| {
                let mut rng = substream(seed, domain, replication, i as u64);
                self.judge(o, &mut rng)
            })
            .collect()
    }
}

/// Turns a perfect-expert judgment into a partial one: accepted events stay
/// accepted, rejections are kept with probability `p0`.
pub fn thin_perfect_to_partial<R: Rng + ?Sized>(
    perfect: bool,
    p0: f64,
    rng: &mut R,
) -> Result<bool, ExpertError> {
    let p0 = unit_interval("p0", p0)?;
    Ok(perfect || rng.random::<f64>() >= p0)
}

/// The integrated bias `Γ(·; z)` of a partially informed expert at fixed `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasFunctional {
    pub gamma: StepCurve,
    pub p0: f64,
}

impl BiasFunctional {
    pub fn zero(p0: f64) -> Self {
        Self {
            gamma: StepCurve::zero(),
            p0,
        }
    }

    /// `e^{−Γ(t)}`.
    pub fn factor(&self, t: f64) -> f64 {
        (-self.gamma.value(t)).exp()
    }
}

/// Plug-in `Γ(t; z0) = (1 − p0) Σ_{s ≤ t} (1 − p̂(s, z0)) ΔĤ₁ˣ(s) / (1 − Ĥ(s−))`.
///
/// `h1_naive` is the δ-weighted sub-distribution estimate.
pub fn gamma_functional(
    p_hat: &dyn EventProbability,
    z0: &[f64],
    p0: f64,
    h: &StepCurve,
    h1_naive: &StepCurve,
) -> Result<BiasFunctional, ExpertError> {
    let p0 = unit_interval("p0", p0)?;
    let at_risk = AtRisk::from_distribution(h);
    let mut times = Vec::new();
    let mut jumps = Vec::new();
    for (s, d) in h1_naive.iter_jumps() {
        let denom = at_risk.at(s);
        if denom < DENOMINATOR_FLOOR {
            return Err(ExpertError::DenominatorUnderflow {
                time: s,
                denominator: denom,
            });
        }
        let p = p_hat.probability(s, z0)?;
        if !(0.0..=1.0).contains(&p) {
            return Err(ExpertError::ProbabilityOutOfRange { w: s, value: p });
        }
        let size = (1.0 - p0) * (1.0 - p) * d / denom;
        if size > 0.0 {
            times.push(s);
            jumps.push(size);
        }
    }
    Ok(BiasFunctional {
        gamma: StepCurve::new_monotone(times, jumps, 0.0)?,
        p0,
    })
}

/// `Γ(t)` for continuous ingredients:
/// `(1 − p0) ∫_0^t (1 − p(s)) h₁ˣ(s) / H̄(s) ds`, where `integrand(s)` returns
/// `(1 − p(s)) h₁ˣ(s) / H̄(s)` with `h₁ˣ` the density of `H₁ˣ`.
pub fn continuous_gamma(
    p0: f64,
    t: f64,
    integrand: impl Fn(f64) -> f64,
    tol: f64,
) -> Result<f64, ExpertError> {
    let p0 = unit_interval("p0", p0)?;
    if p0 == 1.0 || t <= 0.0 {
        return Ok(0.0);
    }
    Ok((1.0 - p0) * adaptive_simpson(integrand, 0.0, t, tol)?)
}

/// The limit `1 − φ(−Λ − Γ)` of the biased estimator, as a distribution
/// function. With `Γ ≡ 0` this is exactly [`product_integral`] of `Λ`.
pub fn biased_limit(lambda: &StepCurve, bias: &BiasFunctional) -> Result<StepCurve, ExpertError> {
    if bias.gamma.is_empty() {
        return Ok(product_integral(lambda, f64::INFINITY)?);
    }
    let combined =
        StepCurve::from_unsorted_jumps(lambda.iter_jumps().chain(bias.gamma.iter_jumps()), 0.0)?;
    Ok(product_integral(&combined, f64::INFINITY)?)
}

/// Continuous-case shortcut `survival · e^{−Γ}`.
pub fn biased_survival_continuous(survival: f64, gamma: f64) -> f64 {
    survival * (-gamma).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    fn obs(delta: bool) -> Observation {
        Observation::new(1.0, delta, vec![0.0])
    }

    fn constant(p: f64) -> Arc<dyn EventProbability> {
        Arc::new(ConstantProbability(p))
    }

    #[test]
    fn naive_accepts_every_event() {
        let mut rng = substream(1, Domain::JUDGMENTS, 0, 0);
        for _ in 0..100 {
            assert!(ExpertModel::Naive.judge(&obs(true), &mut rng).unwrap());
        }
    }

    #[test]
    fn censored_observations_are_never_accepted() {
        let models = [
            ExpertModel::Naive,
            ExpertModel::Perfect { p: constant(1.0) },
            ExpertModel::UniformCensor { c: 1.0 },
        ];
        let mut rng = substream(1, Domain::JUDGMENTS, 0, 0);
        for m in &models {
            assert!(!m.judge(&obs(false), &mut rng).unwrap());
        }
    }

    #[test]
    fn partial_acceptance_frequency() {
        let m = ExpertModel::Partial {
            p0: 0.85,
            p: constant(0.6),
        };
        assert!((m.acceptance_probability(1.0, &[0.0]).unwrap() - 0.66).abs() < 1e-15);
        let mut rng = substream(2, Domain::JUDGMENTS, 0, 0);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| m.judge(&obs(true), &mut rng).unwrap())
            .count();
        let freq = hits as f64 / n as f64;
        assert!((freq - 0.66).abs() < 0.01, "{freq}");
    }

    #[test]
    fn out_of_range_probability_is_rejected() {
        let m = ExpertModel::Perfect { p: constant(1.2) };
        let mut rng = substream(1, Domain::JUDGMENTS, 0, 0);
        assert!(matches!(
            m.judge(&obs(true), &mut rng),
            Err(ExpertError::ProbabilityOutOfRange { .. })
        ));
        let m = ExpertModel::UniformCensor { c: -0.1 };
        assert!(m.judge(&obs(true), &mut rng).is_err());
    }

    #[test]
    fn partial_endpoints() {
        let p = constant(0.3);
        let perfect = ExpertModel::Perfect { p: p.clone() };
        let full = ExpertModel::Partial {
            p0: 1.0,
            p: p.clone(),
        };
        let none = ExpertModel::Partial { p0: 0.0, p };
        assert_eq!(
            full.acceptance_probability(1.0, &[0.0]).unwrap(),
            perfect.acceptance_probability(1.0, &[0.0]).unwrap()
        );
        assert_eq!(none.acceptance_probability(1.0, &[0.0]).unwrap(), 1.0);
    }

    #[test]
    fn threshold_censor_applies_only_where_predicate_holds() {
        let m = ExpertModel::ThresholdCensor {
            c: 0.95,
            predicate: CovariatePredicate {
                index: 1,
                threshold: 10.0,
            },
        };
        assert_eq!(m.acceptance_probability(1.0, &[12.0, 9.0]).unwrap(), 0.95);
        assert_eq!(m.acceptance_probability(1.0, &[12.0, 10.5]).unwrap(), 1.0);
        assert!(m.acceptance_probability(1.0, &[12.0]).is_err());
    }

    #[test]
    fn density_ratio_examples() {
        let equal = p_from_densities(|_: f64, _: &[f64]| 0.2, |_: f64, _: &[f64]| 0.2);
        assert_eq!(equal.probability(1.0, &[]).unwrap(), 0.5);
        let clean = p_from_densities(|_: f64, _: &[f64]| 0.2, |_: f64, _: &[f64]| 0.0);
        assert_eq!(clean.probability(1.0, &[]).unwrap(), 1.0);
        let dead = p_from_densities(|_: f64, _: &[f64]| 0.0, |_: f64, _: &[f64]| 0.0);
        assert!(matches!(
            dead.probability(1.0, &[]),
            Err(ExpertError::BothDensitiesZero { .. })
        ));
        // disability/contamination densities at w = 0, age 50, no reportings
        let f_dis = |w: f64, z: &[f64]| {
            let mu = 0.01 * (0.02 * (w + z[0])).exp();
            mu * (-(0.5) * (0.02 * z[0]).exp() * ((0.02 * w).exp() - 1.0)).exp()
        };
        let f_con = |w: f64, z: &[f64]| {
            let rate = 0.005 + 0.02 * z[1];
            rate * (-rate * w).exp()
        };
        let p = p_from_densities(f_dis, f_con)
            .probability(0.0, &[50.0, 0.0])
            .unwrap();
        assert!((p - 0.8446).abs() < 1e-3);
    }

    fn one_jump() -> (StepCurve, StepCurve) {
        let h = StepCurve::new(vec![1.0, 2.0], vec![0.5, 0.5], 0.0).unwrap();
        let h1x = StepCurve::new(vec![1.0], vec![0.4], 0.0).unwrap();
        (h, h1x)
    }

    #[test]
    fn gamma_examples() {
        let (h, h1x) = one_jump();
        let g = gamma_functional(&ConstantProbability(0.5), &[0.0], 0.0, &h, &h1x).unwrap();
        assert!((g.gamma.value(1.0) - 0.2).abs() < 1e-15);
        let g = gamma_functional(&ConstantProbability(0.5), &[0.0], 1.0, &h, &h1x).unwrap();
        assert_eq!(g.gamma.value(10.0), 0.0);
        let g = gamma_functional(&ConstantProbability(1.0), &[0.0], 0.2, &h, &h1x).unwrap();
        assert_eq!(g.gamma.value(10.0), 0.0);
    }

    #[test]
    fn gamma_underflow() {
        let h = StepCurve::new(vec![1.0], vec![1.0], 0.0).unwrap();
        let h1x = StepCurve::new(vec![3.0], vec![0.1], 0.0).unwrap();
        assert!(matches!(
            gamma_functional(&ConstantProbability(0.5), &[0.0], 0.0, &h, &h1x),
            Err(ExpertError::DenominatorUnderflow { .. })
        ));
    }

    #[test]
    fn gamma_decreases_in_p0() {
        let h = StepCurve::new(vec![1.0, 2.0, 3.0, 4.0], vec![0.25; 4], 0.0).unwrap();
        let h1x = StepCurve::new(vec![1.0, 3.0], vec![0.25, 0.25], 0.0).unwrap();
        let p = |w: f64, _: &[f64]| 1.0 / (1.0 + w);
        let grid = [0.0, 0.25, 0.5, 0.85, 1.0];
        let values: Vec<f64> = grid
            .iter()
            .map(|&p0| {
                gamma_functional(&p, &[0.0], p0, &h, &h1x)
                    .unwrap()
                    .gamma
                    .value(3.5)
            })
            .collect();
        for pair in values.windows(2) {
            assert!(pair[1] < pair[0]);
        }
    }

    #[test]
    fn biased_limit_examples() {
        let lambda = StepCurve::new(vec![1.0, 2.0], vec![0.2, 0.5], 0.0).unwrap();
        let zero = BiasFunctional::zero(1.0);
        assert_eq!(
            biased_limit(&lambda, &zero).unwrap(),
            product_integral(&lambda, f64::INFINITY).unwrap()
        );
        let gamma = BiasFunctional {
            gamma: StepCurve::new(vec![2.0], vec![0.1], 0.0).unwrap(),
            p0: 0.5,
        };
        let f = biased_limit(&lambda, &gamma).unwrap();
        assert!((1.0 - f.value(2.0) - 0.8 * 0.4).abs() < 1e-15);
        assert!((biased_survival_continuous(0.8, 0.1) - 0.7238).abs() < 1e-4);
    }

    #[test]
    fn continuous_gamma_constant_integrand() {
        let g = continuous_gamma(0.5, 2.0, |_| 0.3, 1e-12).unwrap();
        assert!((g - 0.3).abs() < 1e-12);
        assert_eq!(continuous_gamma(1.0, 2.0, |_| 0.3, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn thinning_matches_direct_partial_law() {
        let p = 0.6;
        let p0 = 0.85;
        let n = 100_000u64;
        let mut thinned = 0usize;
        let mut direct = 0usize;
        let perfect = ExpertModel::Perfect { p: constant(p) };
        let partial = ExpertModel::Partial { p0, p: constant(p) };
        for i in 0..n {
            let mut r1 = substream(5, Domain(10), 0, i);
            let eta = perfect.judge(&obs(true), &mut r1).unwrap();
            if thin_perfect_to_partial(eta, p0, &mut r1).unwrap() {
                thinned += 1;
            }
            let mut r2 = substream(5, Domain(11), 0, i);
            if partial.judge(&obs(true), &mut r2).unwrap() {
                direct += 1;
            }
        }
        let (a, b) = (thinned as f64 / n as f64, direct as f64 / n as f64);
        // two independent binomial proportions around 0.66
        let se = (2.0 * 0.66 * 0.34 / n as f64).sqrt();
        assert!((a - b).abs() < 4.0 * se, "{a} vs {b}");
        assert!((a - 0.66).abs() < 0.01);
    }

    #[test]
    fn acceptance_frequency_within_three_standard_errors() {
        let models = [
            ExpertModel::Perfect { p: constant(0.3) },
            ExpertModel::Partial {
                p0: 0.5,
                p: constant(0.3),
            },
            ExpertModel::UniformCensor { c: 0.95 },
        ];
        let n = 100_000u64;
        for (k, m) in models.iter().enumerate() {
            let target = m.acceptance_probability(1.0, &[0.0]).unwrap();
            let hits = (0..n)
                .filter(|&i| {
                    let mut r = substream(9, Domain(20 + k as u64), 0, i);
                    m.judge(&obs(true), &mut r).unwrap()
                })
                .count();
            let freq = hits as f64 / n as f64;
            let se = (target * (1.0 - target) / n as f64).sqrt();
            assert!(
                (freq - target).abs() <= 3.0 * se,
                "{m:?}: {freq} vs {target}"
            );
        }
    }
}
