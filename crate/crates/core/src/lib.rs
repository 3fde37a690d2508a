//! Conditional expert Kaplan–Meier estimation for right-censored data whose
//! observed events may be contaminated.
//!
//! The crate is organised bottom-up:
//!
//! * [`curves`]: càdlàg step functions and Stieltjes sums;
//! * [`kernels`]: product kernels, diagonal bandwidths, pairwise weight cache;
//! * [`estimator`]: Nadaraya–Watson estimates of `H`, `H₁†` and the
//!   expert Nelson–Aalen / Kaplan–Meier chain;
//! * [`expert`]: expert-judgment models and the bias functional `Γ`;
//! * [`asymptotics`]: plug-in variances and pointwise confidence intervals;
//! * [`bandwidth`]: functional least-squares cross-validation;
//! * [`simulation`]: the disability contamination model and Monte Carlo harness;
//! * [`dataset`] and [`loan`]: CSV ingestion and the loan-schema converter.

pub mod asymptotics;
pub mod bandwidth;
pub mod curves;
pub mod data;
pub mod dataset;
pub mod estimator;
pub mod expert;
pub mod kernels;
pub mod loan;
pub mod quadrature;
pub mod rng;
pub mod simulation;

pub use curves::StepCurve;
pub use data::{Observation, Sample};
pub use estimator::{fit_conditional_km, ConditionalFit, Judgments};
pub use kernels::{BandwidthMatrix, KernelShape, KernelSpec};
