//! Observations and the time-sorted sample every estimator works on.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("the sample is empty")]
    Empty,
    #[error("observation {index}: time {value} is negative or not finite")]
    InvalidTime { index: usize, value: f64 },
    #[error("observation {index}: covariate vector has length {found}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("observation {index}: covariate is not finite")]
    NonFiniteCovariate { index: usize },
    #[error("observation {index}: expert judgment marks an event where delta = 0")]
    EtaExceedsDelta { index: usize },
    #[error("covariate selection index {0} is out of range")]
    BadCovariateSelection(usize),
    #[error("judgment vector has length {found}, sample has {expected}")]
    JudgmentLength { expected: usize, found: usize },
}

/// One subject: observed time, naive event indicator, covariates and an
/// optional expert judgment of the event indicator.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub w: f64,
    pub delta: bool,
    pub z: Vec<f64>,
    pub eta: Option<bool>,
}

impl Observation {
    pub fn new(w: f64, delta: bool, z: Vec<f64>) -> Self {
        Self {
            w,
            delta,
            z,
            eta: None,
        }
    }

    pub fn with_eta(mut self, eta: bool) -> Self {
        self.eta = Some(eta);
        self
    }

    fn validate(&self, index: usize, k: usize) -> Result<(), DataError> {
        if !(self.w.is_finite() && self.w >= 0.0) {
            return Err(DataError::InvalidTime {
                index,
                value: self.w,
            });
        }
        if self.z.len() != k {
            return Err(DataError::DimensionMismatch {
                index,
                expected: k,
                found: self.z.len(),
            });
        }
        if self.z.iter().any(|v| !v.is_finite()) {
            return Err(DataError::NonFiniteCovariate { index });
        }
        if self.eta == Some(true) && !self.delta {
            return Err(DataError::EtaExceedsDelta { index });
        }
        Ok(())
    }
}

/// Observations sorted by observed time, with covariates stored row-major.
///
/// The sort is stable, so observations sharing a time keep their input
/// order. `order[i]` is the input index of the `i`-th sorted observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    w: Vec<f64>,
    delta: Vec<bool>,
    eta: Option<Vec<bool>>,
    z: Vec<f64>,
    dim: usize,
    group_starts: Vec<usize>,
    order: Vec<usize>,
}

impl Sample {
    /// Sorts and validates a list of observations using all covariates.
    pub fn from_observations(obs: &[Observation]) -> Result<Self, DataError> {
        let k = obs.first().map(|o| o.z.len()).ok_or(DataError::Empty)?;
        let all: Vec<usize> = (0..k).collect();
        Self::with_covariates(obs, &all)
    }

    /// Like [`Sample::from_observations`] but keeps only the covariate
    /// coordinates in `columns` (0-based) for smoothing.
    pub fn with_covariates(obs: &[Observation], columns: &[usize]) -> Result<Self, DataError> {
        let k_full = obs.first().map(|o| o.z.len()).ok_or(DataError::Empty)?;
        for (i, o) in obs.iter().enumerate() {
            o.validate(i, k_full)?;
        }
        if let Some(&bad) = columns.iter().find(|&&c| c >= k_full) {
            return Err(DataError::BadCovariateSelection(bad));
        }
        let mut order: Vec<usize> = (0..obs.len()).collect();
        order.sort_by(|&a, &b| obs[a].w.total_cmp(&obs[b].w));

        let has_eta = obs.iter().all(|o| o.eta.is_some());
        let dim = columns.len();
        let mut w = Vec::with_capacity(obs.len());
        let mut delta = Vec::with_capacity(obs.len());
        let mut eta = Vec::with_capacity(if has_eta { obs.len() } else { 0 });
        let mut z = Vec::with_capacity(obs.len() * dim);
        for &i in &order {
            let o = &obs[i];
            w.push(o.w);
            delta.push(o.delta);
            if has_eta {
                eta.push(o.eta.unwrap_or(false));
            }
            z.extend(columns.iter().map(|&c| o.z[c]));
        }
        let group_starts = group_starts(&w);
        Ok(Self {
            w,
            delta,
            eta: has_eta.then_some(eta),
            z,
            dim,
            group_starts,
            order,
        })
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// Covariate dimension used for smoothing.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn times(&self) -> &[f64] {
        &self.w
    }

    pub fn deltas(&self) -> &[bool] {
        &self.delta
    }

    pub fn judgments(&self) -> Option<&[bool]> {
        self.eta.as_deref()
    }

    pub fn covariates(&self, i: usize) -> &[f64] {
        &self.z[i * self.dim..(i + 1) * self.dim]
    }

    /// Input index of the `i`-th sorted observation.
    pub fn input_index(&self, i: usize) -> usize {
        self.order[i]
    }

    /// Start offsets of runs of equal observed times, followed by `len()`.
    pub fn group_starts(&self) -> &[usize] {
        &self.group_starts
    }

    /// Replaces the expert judgments. `eta` is indexed like the original
    /// input (not the sorted order).
    pub fn with_judgments(&self, eta_by_input: &[bool]) -> Result<Self, DataError> {
        if eta_by_input.len() != self.len() {
            return Err(DataError::JudgmentLength {
                expected: self.len(),
                found: eta_by_input.len(),
            });
        }
        let eta: Vec<bool> = self.order.iter().map(|&i| eta_by_input[i]).collect();
        for (i, (&e, &d)) in eta.iter().zip(&self.delta).enumerate() {
            if e && !d {
                return Err(DataError::EtaExceedsDelta {
                    index: self.order[i],
                });
            }
        }
        Ok(Self {
            eta: Some(eta),
            ..self.clone()
        })
    }

    /// Drops expert judgments.
    pub fn without_judgments(&self) -> Self {
        Self {
            eta: None,
            ..self.clone()
        }
    }
}

fn group_starts(sorted: &[f64]) -> Vec<usize> {
    let mut starts = Vec::new();
    for i in 0..sorted.len() {
        if i == 0 || sorted[i] != sorted[i - 1] {
            starts.push(i);
        }
    }
    starts.push(sorted.len());
    starts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorts_and_groups_ties() {
        let obs = vec![
            Observation::new(3.0, true, vec![0.0]),
            Observation::new(1.0, false, vec![1.0]),
            Observation::new(3.0, false, vec![2.0]),
        ];
        let s = Sample::from_observations(&obs).unwrap();
        assert_eq!(s.times(), &[1.0, 3.0, 3.0]);
        assert_eq!(s.group_starts(), &[0, 1, 3]);
        assert_eq!(s.input_index(1), 0);
        assert_eq!(s.covariates(2), &[2.0]);
        assert!(s.judgments().is_none());
    }

    #[test]
    fn validation_errors() {
        assert_eq!(Sample::from_observations(&[]), Err(DataError::Empty));
        let bad = [Observation::new(-1.0, true, vec![0.0])];
        assert!(matches!(
            Sample::from_observations(&bad),
            Err(DataError::InvalidTime { index: 0, .. })
        ));
        let ragged = [
            Observation::new(1.0, true, vec![0.0]),
            Observation::new(1.0, true, vec![0.0, 1.0]),
        ];
        assert!(matches!(
            Sample::from_observations(&ragged),
            Err(DataError::DimensionMismatch { index: 1, .. })
        ));
        let eta = [Observation::new(1.0, false, vec![0.0]).with_eta(true)];
        assert_eq!(
            Sample::from_observations(&eta),
            Err(DataError::EtaExceedsDelta { index: 0 })
        );
    }

    #[test]
    fn covariate_selection_and_judgments() {
        let obs = vec![
            Observation::new(2.0, true, vec![50.0, 1.0]),
            Observation::new(1.0, true, vec![40.0, 0.0]),
        ];
        let s = Sample::with_covariates(&obs, &[0]).unwrap();
        assert_eq!(s.dim(), 1);
        assert_eq!(s.covariates(0), &[40.0]);
        let judged = s.with_judgments(&[false, true]).unwrap();
        assert_eq!(judged.judgments().unwrap(), &[true, false]);
        assert!(Sample::with_covariates(&obs, &[2]).is_err());
    }
}
