//! Functional least-squares cross-validation of the bandwidth.
//!
//! `Ĥ(t|z)` and `Ĥ₁†(t|z)` are Nadaraya–Watson regressions of the responses
//! `1{W ≤ t}` and `1{W ≤ t}·η`. Writing `S_m = Σ_j K_B(Z_j − Z_m)` (self term
//! included), the leave-one-out residual satisfies
//!
//! `y_m − Ĥ_{−m}(t|Z_m) = (y_m − Ĥ(t|Z_m)) / (1 − K_B(0) / S_m)`,
//!
//! so one pass over the full-sample weights gives every leave-one-out
//! residual. The pointwise score `CV(t)` averages the squared residuals over
//! the observations whose neighbourhood is not empty (`S_m > K_B(0)`); the
//! functional score integrates `w(t) (CV_H(t)² + CV_H1(t)²)` over a time grid
//! with the trapezoid rule.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::data::Sample;
use crate::estimator::Judgments;
use crate::kernels::{
    BandwidthMatrix, DirectWeights, KernelError, KernelSpec, PairwiseWeights, WeightCache,
};

/// Samples larger than this are scored without a weight cache.
pub const CACHE_LIMIT: usize = 6000;

/// Observations per parallel work unit. Fixed so that summation order does
/// not depend on the thread count.
const CHUNK: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BandwidthError {
    #[error("every leave-one-out term is degenerate ({excluded} isolated observations)")]
    DegenerateNeighborhood { excluded: usize },
    #[error("no bandwidth candidate produced a defined score")]
    AllCandidatesDegenerate,
    #[error("time grid is empty")]
    EmptyGrid,
    #[error("time grid is not increasing at position {0}")]
    UnsortedGrid(usize),
    #[error("candidate set is empty")]
    NoCandidates,
    #[error("invalid search setting: {0}")]
    InvalidSearch(String),
    #[error("expert judgments are missing from the sample")]
    MissingJudgments,
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Which regression curves enter the functional score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CvTarget {
    H,
    H1,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Search {
    /// Cartesian product of per-coordinate candidates.
    Grid { candidates: Vec<Vec<f64>> },
    /// Multiplicative coordinate descent. Each sweep tries `b·shrink` and
    /// `b·grow` per coordinate; a sweep without improvement halves the
    /// factors on the log scale. Stops after `max_iterations` sweeps or when
    /// `|ln grow| < tolerance`.
    CoordinateDescent {
        initial: Vec<f64>,
        shrink: f64,
        grow: f64,
        max_iterations: usize,
        tolerance: f64,
    },
}

pub type WeightFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct CvConfig {
    pub t_grid: Vec<f64>,
    pub weight: WeightFn,
    pub search: Search,
    pub targets: Vec<CvTarget>,
    /// Marks used as the `H₁` response.
    pub judgments: Judgments,
}

impl fmt::Debug for CvConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CvConfig")
            .field("t_grid", &self.t_grid)
            .field("search", &self.search)
            .field("targets", &self.targets)
            .field("judgments", &self.judgments)
            .finish_non_exhaustive()
    }
}

impl CvConfig {
    /// Both targets, `w ≡ 1`.
    pub fn new(t_grid: Vec<f64>, search: Search, judgments: Judgments) -> Self {
        Self {
            t_grid,
            weight: Arc::new(|_| 1.0),
            search,
            targets: vec![CvTarget::H, CvTarget::H1],
            judgments,
        }
    }

    pub fn with_weight(mut self, weight: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.weight = Arc::new(weight);
        self
    }

    pub fn with_targets(mut self, targets: Vec<CvTarget>) -> Self {
        self.targets = targets;
        self
    }
}

/// Distinct observed event times (`δ = 1`) in `[0, t_max]`.
pub fn default_t_grid(sample: &Sample, t_max: f64) -> Vec<f64> {
    let mut grid: Vec<f64> = sample
        .times()
        .iter()
        .zip(sample.deltas())
        .filter(|&(&w, &d)| d && w <= t_max)
        .map(|(&w, _)| w)
        .collect();
    grid.dedup();
    grid
}

fn check_grid(t_grid: &[f64]) -> Result<(), BandwidthError> {
    if t_grid.is_empty() {
        return Err(BandwidthError::EmptyGrid);
    }
    for i in 1..t_grid.len() {
        if !(t_grid[i] > t_grid[i - 1]) {
            return Err(BandwidthError::UnsortedGrid(i));
        }
    }
    Ok(())
}

fn marks(sample: &Sample, judgments: Judgments) -> Result<&[bool], BandwidthError> {
    match judgments {
        Judgments::Naive => Ok(sample.deltas()),
        Judgments::Expert => sample.judgments().ok_or(BandwidthError::MissingJudgments),
    }
}

/// Pointwise leave-one-out scores on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvCurves {
    pub t_grid: Vec<f64>,
    pub cv_h: Vec<f64>,
    pub cv_h1: Vec<f64>,
    /// Observations whose neighbourhood contains only themselves.
    pub excluded_terms: usize,
    pub included_terms: usize,
}

/// `CV_H(t)` and `CV_H1(t)` for every `t` in an increasing grid.
pub fn cv_curves(
    sample: &Sample,
    weights: &dyn PairwiseWeights,
    t_grid: &[f64],
    judgments: Judgments,
) -> Result<CvCurves, BandwidthError> {
    check_grid(t_grid)?;
    let marks = marks(sample, judgments)?;
    let times = sample.times();
    let n = sample.len();
    let k0 = weights.self_weight();
    let nt = t_grid.len();

    let chunks: Vec<(Vec<f64>, Vec<f64>, usize)> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut sh = vec![0.0; nt];
            let mut sh1 = vec![0.0; nt];
            let mut excluded = 0;
            for m in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let s_m = weights.column_sum(m);
                if s_m == k0 {
                    excluded += 1;
                    continue;
                }
                let r = 1.0 - k0 / s_m;
                let wm = times[m];
                let mark_m = if marks[m] { 1.0 } else { 0.0 };
                let (mut acc, mut acc1, mut j) = (0.0, 0.0, 0);
                for (k, &t) in t_grid.iter().enumerate() {
                    while j < n && times[j] <= t {
                        let wt = weights.weight(j, m);
                        acc += wt;
                        if marks[j] {
                            acc1 += wt;
                        }
                        j += 1;
                    }
                    let ind = if wm <= t { 1.0 } else { 0.0 };
                    let e = (ind - acc / s_m) / r;
                    let e1 = (ind * mark_m - acc1 / s_m) / r;
                    sh[k] += e * e;
                    sh1[k] += e1 * e1;
                }
            }
            (sh, sh1, excluded)
        })
        .collect();

    let mut cv_h = vec![0.0; nt];
    let mut cv_h1 = vec![0.0; nt];
    let mut excluded = 0;
    for (sh, sh1, ex) in chunks {
        for k in 0..nt {
            cv_h[k] += sh[k];
            cv_h1[k] += sh1[k];
        }
        excluded += ex;
    }
    let included = n - excluded;
    if included == 0 {
        return Err(BandwidthError::DegenerateNeighborhood { excluded });
    }
    for v in cv_h.iter_mut().chain(cv_h1.iter_mut()) {
        *v /= included as f64;
    }
    Ok(CvCurves {
        t_grid: t_grid.to_vec(),
        cv_h,
        cv_h1,
        excluded_terms: excluded,
        included_terms: included,
    })
}

/// Leave-one-out scores computed by refitting without each observation,
/// `O(n²T)`. Reference for checking [`cv_curves`] on small samples.
pub fn direct_loo_curves(
    sample: &Sample,
    kernel: &KernelSpec,
    bandwidth: &BandwidthMatrix,
    t_grid: &[f64],
    judgments: Judgments,
) -> Result<CvCurves, BandwidthError> {
    check_grid(t_grid)?;
    kernel.check_dim(sample.dim())?;
    kernel.check_dim(bandwidth.dim())?;
    let marks = marks(sample, judgments)?;
    let times = sample.times();
    let n = sample.len();
    let nt = t_grid.len();
    let mut cv_h = vec![0.0; nt];
    let mut cv_h1 = vec![0.0; nt];
    let mut excluded = 0;
    for m in 0..n {
        let zm = sample.covariates(m);
        let w: Vec<f64> = (0..n)
            .map(|j| {
                if j == m {
                    0.0
                } else {
                    kernel.raw_weight(bandwidth, sample.covariates(j), zm)
                }
            })
            .collect();
        let total: f64 = w.iter().sum();
        if total == 0.0 {
            excluded += 1;
            continue;
        }
        for (k, &t) in t_grid.iter().enumerate() {
            let (mut h, mut h1) = (0.0, 0.0);
            for j in (0..n).filter(|&j| times[j] <= t) {
                h += w[j];
                if marks[j] {
                    h1 += w[j];
                }
            }
            let ind = if times[m] <= t { 1.0 } else { 0.0 };
            let ind1 = if marks[m] { ind } else { 0.0 };
            cv_h[k] += (ind - h / total).powi(2);
            cv_h1[k] += (ind1 - h1 / total).powi(2);
        }
    }
    let included = n - excluded;
    if included == 0 {
        return Err(BandwidthError::DegenerateNeighborhood { excluded });
    }
    for v in cv_h.iter_mut().chain(cv_h1.iter_mut()) {
        *v /= included as f64;
    }
    Ok(CvCurves {
        t_grid: t_grid.to_vec(),
        cv_h,
        cv_h1,
        excluded_terms: excluded,
        included_terms: included,
    })
}

/// Pointwise score at one time, for one target.
pub fn cv_score_at_t(
    t: f64,
    sample: &Sample,
    weights: &dyn PairwiseWeights,
    target: CvTarget,
    judgments: Judgments,
) -> Result<f64, BandwidthError> {
    let c = cv_curves(sample, weights, &[t], judgments)?;
    Ok(match target {
        CvTarget::H => c.cv_h[0],
        CvTarget::H1 => c.cv_h1[0],
    })
}

/// Trapezoid rule over the grid; a single point yields its value.
pub fn trapezoid(t_grid: &[f64], values: &[f64]) -> f64 {
    match t_grid.len() {
        0 => 0.0,
        1 => values[0],
        _ => t_grid
            .windows(2)
            .zip(values.windows(2))
            .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
            .sum(),
    }
}

/// Functional score of one set of curves.
pub fn integrate_curves(curves: &CvCurves, config: &CvConfig) -> f64 {
    let use_h = config.targets.contains(&CvTarget::H);
    let use_h1 = config.targets.contains(&CvTarget::H1);
    let integrand: Vec<f64> = curves
        .t_grid
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let mut norm2 = 0.0;
            if use_h {
                norm2 += curves.cv_h[k] * curves.cv_h[k];
            }
            if use_h1 {
                norm2 += curves.cv_h1[k] * curves.cv_h1[k];
            }
            (config.weight)(t) * norm2
        })
        .collect();
    trapezoid(&curves.t_grid, &integrand)
}

/// Score of one candidate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvScore {
    pub score: f64,
    pub excluded_terms: usize,
}

/// Functional score using precomputed pairwise weights.
pub fn functional_cv_with(
    sample: &Sample,
    weights: &dyn PairwiseWeights,
    config: &CvConfig,
) -> Result<CvScore, BandwidthError> {
    let curves = cv_curves(sample, weights, &config.t_grid, config.judgments)?;
    Ok(CvScore {
        score: integrate_curves(&curves, config),
        excluded_terms: curves.excluded_terms,
    })
}

/// Functional score at bandwidth `bandwidth`.
pub fn functional_cv(
    sample: &Sample,
    kernel: &KernelSpec,
    bandwidth: &BandwidthMatrix,
    config: &CvConfig,
) -> Result<CvScore, BandwidthError> {
    if sample.len() <= CACHE_LIMIT {
        let cache = WeightCache::build(sample, kernel, bandwidth)?;
        functional_cv_with(sample, &cache, config)
    } else {
        kernel.check_dim(sample.dim())?;
        kernel.check_dim(bandwidth.dim())?;
        let direct = DirectWeights {
            sample,
            kernel,
            bandwidth,
        };
        functional_cv_with(sample, &direct, config)
    }
}

/// One evaluated candidate; `score` is `None` when every term was degenerate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateReport {
    pub bandwidth: Vec<f64>,
    pub score: Option<f64>,
    pub excluded_terms: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub bandwidth: BandwidthMatrix,
    pub score: f64,
    pub report: Vec<CandidateReport>,
}

impl Selection {
    /// Rows `b1, …, bk, score, excluded_terms`; an undefined score is written empty.
    pub fn write_report<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        let k = self.bandwidth.dim();
        let header: Vec<String> = (1..=k).map(|i| format!("b{i}")).collect();
        writeln!(out, "{},score,excluded_terms", header.join(","))?;
        for r in &self.report {
            let bs: Vec<String> = r.bandwidth.iter().map(|b| b.to_string()).collect();
            let score = r.score.map(|s| s.to_string()).unwrap_or_default();
            writeln!(out, "{},{},{}", bs.join(","), score, r.excluded_terms)?;
        }
        Ok(())
    }
}

fn evaluate(
    sample: &Sample,
    kernel: &KernelSpec,
    diagonal: &[f64],
    config: &CvConfig,
) -> Result<CandidateReport, BandwidthError> {
    let bw = BandwidthMatrix::new(diagonal.to_vec())?;
    match functional_cv(sample, kernel, &bw, config) {
        Ok(s) => Ok(CandidateReport {
            bandwidth: diagonal.to_vec(),
            score: Some(s.score),
            excluded_terms: s.excluded_terms,
        }),
        Err(BandwidthError::DegenerateNeighborhood { excluded }) => Ok(CandidateReport {
            bandwidth: diagonal.to_vec(),
            score: None,
            excluded_terms: excluded,
        }),
        Err(e) => Err(e),
    }
}

fn det(b: &[f64]) -> f64 {
    b.iter().product()
}

/// `a` beats `b`: lower score, ties (relative 1e-12) going to the larger `|B|`.
fn better(a: &CandidateReport, b: &CandidateReport) -> bool {
    match (a.score, b.score) {
        (Some(_), None) => true,
        (None, _) => false,
        (Some(x), Some(y)) => {
            let tie = (x - y).abs() <= 1e-12 * x.abs().max(y.abs());
            if tie {
                det(&a.bandwidth) > det(&b.bandwidth)
            } else {
                x < y
            }
        }
    }
}

fn cartesian(candidates: &[Vec<f64>]) -> Vec<Vec<f64>> {
    candidates.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&b| {
                    let mut v = prefix.clone();
                    v.push(b);
                    v
                })
            })
            .collect()
    })
}

/// Minimises the functional score over the configured search.
pub fn select_bandwidth(
    sample: &Sample,
    kernel: &KernelSpec,
    config: &CvConfig,
) -> Result<Selection, BandwidthError> {
    check_grid(&config.t_grid)?;
    let report = match &config.search {
        Search::Grid { candidates } => {
            if candidates.len() != sample.dim() {
                return Err(BandwidthError::InvalidSearch(format!(
                    "{} candidate axes for covariate dimension {}",
                    candidates.len(),
                    sample.dim()
                )));
            }
            let all = cartesian(candidates);
            if all.is_empty() {
                return Err(BandwidthError::NoCandidates);
            }
            all.iter()
                .map(|d| evaluate(sample, kernel, d, config))
                .collect::<Result<Vec<_>, _>>()?
        }
        Search::CoordinateDescent {
            initial,
            shrink,
            grow,
            max_iterations,
            tolerance,
        } => coordinate_descent(
            sample,
            kernel,
            config,
            initial,
            *shrink,
            *grow,
            *max_iterations,
            *tolerance,
        )?,
    };
    let best = report
        .iter()
        .fold(None::<&CandidateReport>, |best, c| match best {
            Some(b) if !better(c, b) => Some(b),
            _ => Some(c),
        })
        .ok_or(BandwidthError::NoCandidates)?;
    let score = best.score.ok_or(BandwidthError::AllCandidatesDegenerate)?;
    Ok(Selection {
        bandwidth: BandwidthMatrix::new(best.bandwidth.clone())?,
        score,
        report,
    })
}

#[allow(clippy::too_many_arguments)]
fn coordinate_descent(
    sample: &Sample,
    kernel: &KernelSpec,
    config: &CvConfig,
    initial: &[f64],
    shrink: f64,
    grow: f64,
    max_iterations: usize,
    tolerance: f64,
) -> Result<Vec<CandidateReport>, BandwidthError> {
    if initial.len() != sample.dim() {
        return Err(BandwidthError::InvalidSearch(format!(
            "initial bandwidth has {} entries for covariate dimension {}",
            initial.len(),
            sample.dim()
        )));
    }
    if !(shrink > 0.0 && shrink < 1.0 && grow > 1.0 && tolerance > 0.0) {
        return Err(BandwidthError::InvalidSearch(
            "need 0 < shrink < 1 < grow and tolerance > 0".into(),
        ));
    }
    let mut report = vec![evaluate(sample, kernel, initial, config)?];
    let mut current = report[0].clone();
    let (mut ls, mut lg) = (shrink.ln(), grow.ln());
    for _ in 0..max_iterations {
        if lg.abs() < tolerance {
            break;
        }
        let mut moved = false;
        for i in 0..initial.len() {
            for step in [ls, lg] {
                let mut d = current.bandwidth.clone();
                d[i] *= step.exp();
                let c = evaluate(sample, kernel, &d, config)?;
                report.push(c.clone());
                if better(&c, &current) {
                    current = c;
                    moved = true;
                }
            }
        }
        if !moved {
            ls *= 0.5;
            lg *= 0.5;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Observation;

    fn sample(rows: &[(f64, bool, f64)]) -> Sample {
        let obs: Vec<_> = rows
            .iter()
            .map(|&(w, d, z)| Observation::new(w, d, vec![z]))
            .collect();
        Sample::from_observations(&obs).unwrap()
    }

    fn direct(b: f64) -> (KernelSpec, BandwidthMatrix) {
        (
            KernelSpec::truncated_gaussian(1),
            BandwidthMatrix::isotropic(b, 1).unwrap(),
        )
    }

    #[test]
    fn two_point_hand_value() {
        // Ĥ_{-m} at t = 1.5 is the other point's indicator
        let s = sample(&[(1.0, true, 0.0), (2.0, false, 0.5)]);
        let (k, b) = direct(1.0);
        let w = DirectWeights {
            sample: &s,
            kernel: &k,
            bandwidth: &b,
        };
        let cv = cv_score_at_t(1.5, &s, &w, CvTarget::H, Judgments::Naive).unwrap();
        assert!((cv - 1.0).abs() < 1e-12);
        let cv = cv_score_at_t(2.5, &s, &w, CvTarget::H, Judgments::Naive).unwrap();
        assert!(cv.abs() < 1e-12);
    }

    #[test]
    fn isolated_points_make_the_score_undefined() {
        let s = sample(&[(1.0, true, 0.0), (2.0, true, 10.0)]);
        let (k, b) = direct(0.1);
        let w = DirectWeights {
            sample: &s,
            kernel: &k,
            bandwidth: &b,
        };
        assert_eq!(
            cv_score_at_t(1.5, &s, &w, CvTarget::H, Judgments::Naive),
            Err(BandwidthError::DegenerateNeighborhood { excluded: 2 })
        );
    }

    #[test]
    fn identical_covariates_beyond_all_times_score_zero() {
        let s = sample(&[(1.0, true, 0.0), (2.0, true, 0.0), (3.0, true, 0.0)]);
        let (k, b) = direct(1.0);
        let cache = WeightCache::build(&s, &k, &b).unwrap();
        let c = cv_curves(&s, &cache, &[5.0], Judgments::Naive).unwrap();
        assert_eq!(c.cv_h[0], 0.0);
        assert_eq!(c.cv_h1[0], 0.0);
    }

    #[test]
    fn grid_validation_and_trapezoid() {
        assert_eq!(trapezoid(&[1.0], &[3.0]), 3.0);
        assert_eq!(trapezoid(&[0.0, 1.0, 3.0], &[1.0, 1.0, 2.0]), 1.0 + 3.0);
        assert_eq!(check_grid(&[]), Err(BandwidthError::EmptyGrid));
        assert_eq!(
            check_grid(&[1.0, 1.0]),
            Err(BandwidthError::UnsortedGrid(1))
        );
    }

    #[test]
    fn zero_weight_function_gives_zero() {
        let s = sample(&[(1.0, true, 0.0), (2.0, false, 0.3), (3.0, true, 0.6)]);
        let k = KernelSpec::truncated_gaussian(1);
        let cfg = CvConfig::new(
            vec![1.0, 2.0, 3.0],
            Search::Grid {
                candidates: vec![vec![0.5, 1.0]],
            },
            Judgments::Naive,
        )
        .with_weight(|_| 0.0);
        for b in [0.5, 1.0] {
            let bw = BandwidthMatrix::isotropic(b, 1).unwrap();
            assert_eq!(functional_cv(&s, &k, &bw, &cfg).unwrap().score, 0.0);
        }
    }

    #[test]
    fn tie_goes_to_the_larger_bandwidth() {
        // identical covariates: every bandwidth yields the same weights
        let s = sample(&[(1.0, true, 0.0), (2.0, false, 0.0), (3.0, true, 0.0)]);
        let k = KernelSpec::truncated_gaussian(1);
        let cfg = CvConfig::new(
            vec![1.0, 2.0, 3.0],
            Search::Grid {
                candidates: vec![vec![0.5, 2.0, 1.0]],
            },
            Judgments::Naive,
        );
        let sel = select_bandwidth(&s, &k, &cfg).unwrap();
        assert_eq!(sel.bandwidth.diagonal(), &[2.0]);
        assert_eq!(sel.report.len(), 3);
    }

    #[test]
    fn single_candidate_and_all_degenerate() {
        let s = sample(&[(1.0, true, 0.0), (2.0, false, 5.0), (3.0, true, 10.0)]);
        let k = KernelSpec::truncated_gaussian(1);
        let cfg = CvConfig::new(
            vec![1.0, 2.0],
            Search::Grid {
                candidates: vec![vec![3.0]],
            },
            Judgments::Naive,
        );
        assert_eq!(
            select_bandwidth(&s, &k, &cfg).unwrap().bandwidth.diagonal(),
            &[3.0]
        );
        let cfg = CvConfig::new(
            vec![1.0, 2.0],
            Search::Grid {
                candidates: vec![vec![0.1, 0.2]],
            },
            Judgments::Naive,
        );
        assert_eq!(
            select_bandwidth(&s, &k, &cfg),
            Err(BandwidthError::AllCandidatesDegenerate)
        );
    }

    #[test]
    fn report_rows() {
        let s = sample(&[(1.0, true, 0.0), (2.0, false, 0.5), (3.0, true, 0.7)]);
        let k = KernelSpec::truncated_gaussian(1);
        let cfg = CvConfig::new(
            vec![1.0, 2.0],
            Search::Grid {
                candidates: vec![vec![0.01, 1.0]],
            },
            Judgments::Naive,
        );
        let sel = select_bandwidth(&s, &k, &cfg).unwrap();
        let mut buf = Vec::new();
        sel.write_report(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "b1,score,excluded_terms");
        assert_eq!(lines[1], "0.01,,3");
        assert!(lines[2].starts_with("1,"));
    }

    #[test]
    fn coordinate_descent_reaches_a_reported_minimum() {
        let rows: Vec<(f64, bool, f64)> = (0..40)
            .map(|i| {
                let z = i as f64 / 40.0;
                (1.0 + z + (i % 7) as f64 * 0.1, i % 3 != 0, z)
            })
            .collect();
        let s = sample(&rows);
        let k = KernelSpec::truncated_gaussian(1);
        let cfg = CvConfig::new(
            default_t_grid(&s, 10.0),
            Search::CoordinateDescent {
                initial: vec![0.3],
                shrink: 0.5,
                grow: 2.0,
                max_iterations: 20,
                tolerance: 0.01,
            },
            Judgments::Naive,
        );
        let sel = select_bandwidth(&s, &k, &cfg).unwrap();
        let min = sel
            .report
            .iter()
            .filter_map(|r| r.score)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(sel.score, min);
    }
}
