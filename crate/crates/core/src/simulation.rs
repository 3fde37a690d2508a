//! The disability contamination model and a Monte Carlo harness.
//!
//! Each subject has covariates `(Z_age, Z_rep)` with `Z_age ~ N(50, 10²)` and
//! `Z_rep ~ Poisson(0.3)`, a disability time `X` with hazard
//! `a·e^{b(t + z_age)}`, a contamination time `Y ~ Exp(c0 + c1·z_rep)` and a
//! censoring time `C ~ U[0, 50]`. We observe `W = min(X, Y, C)` and
//! `δ = 1{min(X, Y) ≤ C}`; an observed event is genuine when `W = X`.
//!
//! Regression uses `z_age` only. The true centres integrate out `Z_rep`
//! over its Poisson law, truncated once the remaining tail mass is below
//! `1e-10`.

use std::io::Write;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{DataError, Observation, Sample};
use crate::estimator::{kernel_weights, ConditionalFit, EstimatorError, Judgments};
use crate::expert::{EventProbability, ExpertError, ExpertModel};
use crate::kernels::{BandwidthMatrix, KernelError, KernelSpec};
use crate::quadrature::{adaptive_simpson, QuadratureError};
use crate::rng::{substream, Domain};

const POISSON_TAIL: f64 = 1e-10;
const QUAD_TOL: f64 = 1e-11;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulationError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("invalid study configuration: {0}")]
    InvalidStudy(String),
    #[error("grids differ in shape or coordinates")]
    GridMismatch,
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Expert(#[from] ExpertError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// How the expert's event probability `p(w, z)` is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbabilityRule {
    /// `f_X / (f_X + f_Y)` with `f = hazard × survival`.
    #[default]
    DensityRatio,
    /// `μ_X / (μ_X + μ_Y)`, the exact conditional probability that an
    /// observed event at `w` is a disability.
    HazardRatio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DisabilityScenario {
    pub n: usize,
    pub age_mean: f64,
    pub age_var: f64,
    pub reportings_rate: f64,
    pub censor_upper: f64,
    pub a: f64,
    pub b: f64,
    pub c0: f64,
    pub c1: f64,
    pub probability_rule: ProbabilityRule,
}

impl Default for DisabilityScenario {
    fn default() -> Self {
        Self {
            n: 2000,
            age_mean: 50.0,
            age_var: 100.0,
            reportings_rate: 0.3,
            censor_upper: 50.0,
            a: 0.01,
            b: 0.02,
            c0: 0.005,
            c1: 0.02,
            probability_rule: ProbabilityRule::DensityRatio,
        }
    }
}

/// One simulated subject with its latent times. `obs.z = [age, reportings]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioRecord {
    pub obs: Observation,
    pub x: f64,
    pub y: f64,
    pub c: f64,
}

impl PortfolioRecord {
    /// The observed event is a disability.
    pub fn is_true_event(&self) -> bool {
        self.obs.delta && self.x <= self.y
    }
}

impl DisabilityScenario {
    pub fn validate(&self) -> Result<(), SimulationError> {
        let positive = [
            ("age_var", self.age_var),
            ("reportings_rate", self.reportings_rate),
            ("censor_upper", self.censor_upper),
            ("a", self.a),
            ("b", self.b),
            ("c0", self.c0),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SimulationError::InvalidScenario(format!(
                    "{name} = {v} must be positive"
                )));
            }
        }
        if !(self.c1 >= 0.0 && self.c1.is_finite() && self.age_mean.is_finite()) {
            return Err(SimulationError::InvalidScenario(
                "c1 and age_mean must be finite, c1 ≥ 0".into(),
            ));
        }
        if self.n == 0 {
            return Err(SimulationError::InvalidScenario(
                "n must be positive".into(),
            ));
        }
        Ok(())
    }

    /// `μ_X(t | z_age)`.
    pub fn disability_hazard(&self, t: f64, age: f64) -> f64 {
        self.a * (self.b * (t + age)).exp()
    }

    /// `S_X(t | z_age) = exp(−(a/b) e^{b z_age} (e^{bt} − 1))`.
    pub fn true_survival(&self, t: f64, age: f64) -> f64 {
        (-(self.a / self.b) * (self.b * age).exp() * (self.b * t).exp_m1()).exp()
    }

    /// `μ_Y(z_rep) = c0 + c1 z_rep`.
    pub fn contamination_rate(&self, reportings: f64) -> f64 {
        self.c0 + self.c1 * reportings
    }

    pub fn censor_survival(&self, t: f64) -> f64 {
        (1.0 - t / self.censor_upper).clamp(0.0, 1.0)
    }

    /// `p(w, z)` under the configured rule, `z = [age, reportings]`.
    pub fn event_probability(&self, w: f64, age: f64, reportings: f64) -> f64 {
        let mu_x = self.disability_hazard(w, age);
        let r = self.contamination_rate(reportings);
        match self.probability_rule {
            ProbabilityRule::HazardRatio => mu_x / (mu_x + r),
            ProbabilityRule::DensityRatio => {
                let fx = mu_x * self.true_survival(w, age);
                let fy = r * (-r * w).exp();
                fx / (fx + fy)
            }
        }
    }

    /// Poisson weights `π_0, …, π_M` with `M` the first index whose
    /// remaining tail mass is below `1e-10`.
    pub fn reportings_pmf(&self) -> Vec<f64> {
        let lam = self.reportings_rate;
        let mut pmf = vec![(-lam).exp()];
        let mut cum = pmf[0];
        while 1.0 - cum >= POISSON_TAIL {
            let m = pmf.len() as f64;
            let next = pmf[pmf.len() - 1] * lam / m;
            if next == 0.0 {
                break;
            }
            pmf.push(next);
            cum += next;
        }
        pmf
    }

    /// Density of the regression covariate `Z_age`.
    pub fn age_density(&self, age: f64) -> f64 {
        let sd = self.age_var.sqrt();
        let u = (age - self.age_mean) / sd;
        (-0.5 * u * u).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
    }

    /// `(1 − p) dH₁ˣ / H̄` at `s` given `z_age`, mixed over `Z_rep`.
    fn gamma_density(&self, s: f64, age: f64, pmf: &[f64]) -> f64 {
        let mu_x = self.disability_hazard(s, age);
        let (mut num, mut den) = (0.0, 0.0);
        for (m, &pi) in pmf.iter().enumerate() {
            let r = self.contamination_rate(m as f64);
            let w = pi * (-r * s).exp();
            let p = self.event_probability(s, age, m as f64);
            num += w * (mu_x + r) * (1.0 - p);
            den += w;
        }
        num / den
    }

    /// `Γ(t; z_age)` with true ingredients.
    pub fn true_gamma(&self, t: f64, age: f64, p0: f64) -> Result<f64, SimulationError> {
        if !(0.0..=1.0).contains(&p0) {
            return Err(ExpertError::InvalidParameter {
                name: "p0",
                value: p0,
            }
            .into());
        }
        if p0 == 1.0 || t <= 0.0 {
            return Ok(0.0);
        }
        let pmf = self.reportings_pmf();
        let integral = adaptive_simpson(|s| self.gamma_density(s, age, &pmf), 0.0, t, QUAD_TOL)?;
        Ok((1.0 - p0) * integral)
    }

    /// `e^{−Γ(t)} · S_X(t)`, the survival centre of an expert of
    /// effectiveness `p0`.
    pub fn true_biased_center(&self, t: f64, age: f64, p0: f64) -> Result<f64, SimulationError> {
        Ok(self.true_survival(t, age) * (-self.true_gamma(t, age, p0)?).exp())
    }

    /// `H̄(u | z_age) = P(W ≥ u | z_age)`.
    pub fn at_risk(&self, u: f64, age: f64, pmf: &[f64]) -> f64 {
        let mix: f64 = pmf
            .iter()
            .enumerate()
            .map(|(m, &pi)| pi * (-self.contamination_rate(m as f64) * u).exp())
            .sum();
        self.true_survival(u, age) * mix * self.censor_survival(u)
    }

    /// `σ²_Z(t, t)` at the centre of an expert of effectiveness `p0`,
    /// with hazard `dΛ + dΓ`, true `H̄` and the normal covariate density.
    pub fn true_sigma2_distribution(
        &self,
        t: f64,
        age: f64,
        p0: f64,
        kernel_l2: f64,
    ) -> Result<f64, SimulationError> {
        if t <= 0.0 {
            return Ok(0.0);
        }
        let pmf = self.reportings_pmf();
        let bias = 1.0 - p0;
        let integral = adaptive_simpson(
            |u| {
                let hazard = self.disability_hazard(u, age)
                    + if bias > 0.0 {
                        bias * self.gamma_density(u, age, &pmf)
                    } else {
                        0.0
                    };
                hazard / self.at_risk(u, age, &pmf)
            },
            0.0,
            t,
            QUAD_TOL,
        )?;
        let surv = self.true_biased_center(t, age, p0)?;
        Ok(surv * surv * kernel_l2 / self.age_density(age) * integral)
    }

    fn draw_record<R: Rng + ?Sized>(&self, rng: &mut R) -> PortfolioRecord {
        let age = Normal::new(self.age_mean, self.age_var.sqrt())
            .expect("validated variance")
            .sample(rng);
        let reportings: f64 = Poisson::new(self.reportings_rate)
            .expect("validated rate")
            .sample(rng);
        let c = rng.random::<f64>() * self.censor_upper;
        // inversion of S_X: ln(1 − ln U / A) / b with A = (a/b) e^{b z}
        let u: f64 = 1.0 - rng.random::<f64>();
        let scale = (self.a / self.b) * (self.b * age).exp();
        let x = (-u.ln() / scale).ln_1p() / self.b;
        let y = Exp::new(self.contamination_rate(reportings))
            .expect("positive rate")
            .sample(rng);
        let w = x.min(y).min(c);
        let delta = x.min(y) <= c;
        PortfolioRecord {
            obs: Observation::new(w, delta, vec![age, reportings]),
            x,
            y,
            c,
        }
    }
}

/// Draws `scenario.n` subjects; subject `i` uses substream
/// `(seed, PORTFOLIO, replication, i)`.
pub fn simulate_portfolio(
    scenario: &DisabilityScenario,
    seed: u64,
    replication: u64,
) -> Result<Vec<PortfolioRecord>, SimulationError> {
    scenario.validate()?;
    Ok((0..scenario.n)
        .map(|i| {
            let mut rng = substream(seed, Domain::PORTFOLIO, replication, i as u64);
            scenario.draw_record(&mut rng)
        })
        .collect())
}

/// `S_X(t | z_age)` under the default parameters.
pub fn true_survival_disability(t: f64, z_age: f64) -> f64 {
    DisabilityScenario::default().true_survival(t, z_age)
}

/// `p(w, z)` of a scenario as an [`EventProbability`] on `z = [age, reportings]`.
#[derive(Debug, Clone)]
pub struct DisabilityProbability(pub DisabilityScenario);

impl EventProbability for DisabilityProbability {
    fn probability(&self, w: f64, z: &[f64]) -> Result<f64, ExpertError> {
        Ok(self.0.event_probability(w, z[0], z[1]))
    }
}

/// Expert used in a study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyExpert {
    Naive,
    /// Partially informed expert; `1.0` is the perfect expert.
    Effectiveness(f64),
}

impl StudyExpert {
    /// Effectiveness `p0`, with the naive estimator at `0`.
    pub fn p0(self) -> f64 {
        match self {
            StudyExpert::Naive => 0.0,
            StudyExpert::Effectiveness(p0) => p0,
        }
    }

    pub fn label(self) -> String {
        match self {
            StudyExpert::Naive => "naive".into(),
            StudyExpert::Effectiveness(p0) => format!("{}%", (p0 * 1e6).round() / 1e4),
        }
    }

    pub fn model(self, scenario: &DisabilityScenario) -> ExpertModel {
        match self {
            StudyExpert::Naive => ExpertModel::Naive,
            StudyExpert::Effectiveness(p0) => ExpertModel::Partial {
                p0,
                p: Arc::new(DisabilityProbability(scenario.clone())),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthChoice {
    /// `b_n = (ln n / n^ρ)^{1/k}`.
    Schedule {
        rho: f64,
    },
    Fixed {
        b: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapSpec {
    pub t: Vec<f64>,
    pub z: Vec<f64>,
}

impl Default for HeatmapSpec {
    fn default() -> Self {
        Self {
            t: (0..=30).map(f64::from).collect(),
            z: (40..=60).map(f64::from).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McStudyConfig {
    pub scenario: DisabilityScenario,
    pub replications: usize,
    pub seed: u64,
    pub bandwidth: BandwidthChoice,
    pub z_points: Vec<f64>,
    pub t_points: Vec<f64>,
    pub experts: Vec<StudyExpert>,
    pub heatmap: Option<HeatmapSpec>,
}

impl Default for McStudyConfig {
    /// Desk scale: 100 replications of 2,000 subjects.
    fn default() -> Self {
        Self {
            scenario: DisabilityScenario::default(),
            replications: 100,
            seed: 20240601,
            bandwidth: BandwidthChoice::Schedule { rho: 0.3 },
            z_points: vec![45.0, 50.0, 55.0],
            t_points: vec![2.0, 5.0, 10.0],
            experts: vec![
                StudyExpert::Naive,
                StudyExpert::Effectiveness(0.85),
                StudyExpert::Effectiveness(1.0),
            ],
            heatmap: Some(HeatmapSpec::default()),
        }
    }
}

impl McStudyConfig {
    /// 300 replications of 10,000 subjects.
    pub fn full_scale() -> Self {
        Self {
            scenario: DisabilityScenario {
                n: 10_000,
                ..DisabilityScenario::default()
            },
            replications: 300,
            ..Self::default()
        }
    }

    pub fn bandwidth_matrix(&self) -> Result<BandwidthMatrix, SimulationError> {
        Ok(match self.bandwidth {
            BandwidthChoice::Schedule { rho } => {
                BandwidthMatrix::schedule(self.scenario.n, rho, 1)?
            }
            BandwidthChoice::Fixed { b } => BandwidthMatrix::isotropic(b, 1)?,
        })
    }
}

/// Values on a `(z, t)` grid, stored row-major by `z`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalGrid {
    pub t: Vec<f64>,
    pub z: Vec<f64>,
    pub values: Vec<f64>,
}

impl SurvivalGrid {
    pub fn from_fn(t: &[f64], z: &[f64], mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let values = z
            .iter()
            .flat_map(|&zz| t.iter().map(|&tt| f(tt, zz)).collect::<Vec<_>>())
            .collect();
        Self {
            t: t.to_vec(),
            z: z.to_vec(),
            values,
        }
    }

    pub fn get(&self, iz: usize, it: usize) -> f64 {
        self.values[iz * self.t.len() + it]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Rows `z,t,value`.
    pub fn write_csv<W: Write>(&self, mut out: W, value_name: &str) -> std::io::Result<()> {
        writeln!(out, "z,t,{value_name}")?;
        for (iz, z) in self.z.iter().enumerate() {
            for (it, t) in self.t.iter().enumerate() {
                writeln!(out, "{z},{t},{}", self.get(iz, it))?;
            }
        }
        Ok(())
    }
}

/// `a − b` on aligned grids.
pub fn heatmap_difference(
    a: &SurvivalGrid,
    b: &SurvivalGrid,
) -> Result<SurvivalGrid, SimulationError> {
    if a.t != b.t || a.z != b.z || a.values.len() != b.values.len() {
        return Err(SimulationError::GridMismatch);
    }
    Ok(SurvivalGrid {
        t: a.t.clone(),
        z: a.z.clone(),
        values: a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect(),
    })
}

/// Summary of one `(z_age, expert, t)` cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McCell {
    pub z_age: f64,
    pub expert: String,
    pub p0: f64,
    pub t: f64,
    pub replications: usize,
    pub failures: usize,
    /// More than 5% of replications failed.
    pub flagged: bool,
    pub mean: f64,
    pub std_dev: f64,
    pub true_survival: f64,
    pub true_center: f64,
    pub error_mean: f64,
    /// `σ_Z / √(n|B|)` at the true centre.
    pub true_std_dev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpertGrid {
    pub expert: String,
    pub mean: SurvivalGrid,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McStudyResult {
    pub bandwidth: f64,
    pub replications: usize,
    pub cells: Vec<McCell>,
    pub truth_grid: Option<SurvivalGrid>,
    pub expert_grids: Vec<ExpertGrid>,
}

impl McStudyResult {
    pub fn cell(&self, z_age: f64, expert: &str, t: f64) -> Option<&McCell> {
        self.cells
            .iter()
            .find(|c| c.z_age == z_age && c.expert == expert && c.t == t)
    }

    pub fn grid(&self, expert: &str) -> Option<&SurvivalGrid> {
        self.expert_grids
            .iter()
            .find(|g| g.expert == expert)
            .map(|g| &g.mean)
    }

    /// Table with one row per cell.
    pub fn write_cells_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "z_age,expert,t,replications,failures,flagged,true_center,mean,error_mean,true_std_dev,std_dev"
        )?;
        for c in &self.cells {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                c.z_age,
                c.expert,
                c.t,
                c.replications,
                c.failures,
                c.flagged,
                c.true_center,
                c.mean,
                c.error_mean,
                c.true_std_dev,
                c.std_dev
            )?;
        }
        Ok(())
    }
}

/// Survival values of one replication: `cells[z][expert][t]` and
/// `grids[expert][z][t]`; `None` where the fit failed.
struct Replication {
    cells: Vec<Vec<Option<Vec<f64>>>>,
    grids: Vec<Vec<Option<Vec<f64>>>>,
}

fn fit_survival(
    sample: &Sample,
    weights: &[f64],
    z: f64,
    det: f64,
    t_max: f64,
    ts: &[f64],
) -> Option<Vec<f64>> {
    let fit =
        ConditionalFit::from_weights(sample, weights, Judgments::Expert, &[z], det, t_max).ok()?;
    // survival is undefined from the truncation point on
    if let Some(cut) = fit.truncated_at {
        if ts.iter().any(|&t| t >= cut) {
            return None;
        }
    }
    Some(ts.iter().map(|&t| fit.survival(t)).collect())
}

fn run_replication(
    config: &McStudyConfig,
    models: &[ExpertModel],
    kernel: &KernelSpec,
    bandwidth: &BandwidthMatrix,
    t_max: f64,
    rep: u64,
) -> Result<Replication, SimulationError> {
    let records = simulate_portfolio(&config.scenario, config.seed, rep)?;
    let obs: Vec<Observation> = records.into_iter().map(|r| r.obs).collect();
    let base = Sample::with_covariates(&obs, &[0])?;
    let samples = models
        .iter()
        .enumerate()
        .map(|(e, m)| {
            let eta = m.judge_all(&obs, config.seed, Domain::judgments_for(e), rep)?;
            Ok(base.with_judgments(&eta)?)
        })
        .collect::<Result<Vec<Sample>, SimulationError>>()?;
    let det = bandwidth.determinant();
    let evaluate = |z: f64, ts: &[f64]| -> Vec<Option<Vec<f64>>> {
        match kernel_weights(&base, kernel, bandwidth, &[z]) {
            Ok(w) => samples
                .iter()
                .map(|s| fit_survival(s, &w, z, det, t_max, ts))
                .collect(),
            Err(_) => vec![None; samples.len()],
        }
    };
    let cells = config
        .z_points
        .iter()
        .map(|&z| evaluate(z, &config.t_points))
        .collect();
    let grids = match &config.heatmap {
        Some(h) => {
            let by_z: Vec<Vec<Option<Vec<f64>>>> = h.z.iter().map(|&z| evaluate(z, &h.t)).collect();
            (0..models.len())
                .map(|e| by_z.iter().map(|row| row[e].clone()).collect())
                .collect()
        }
        None => Vec::new(),
    };
    Ok(Replication { cells, grids })
}

fn mean_and_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

/// Runs the study. Replications run in parallel; aggregation follows
/// replication order, so results do not depend on the thread count.
pub fn run_mc_study(config: &McStudyConfig) -> Result<McStudyResult, SimulationError> {
    config.scenario.validate()?;
    if config.replications < 2 {
        return Err(SimulationError::InvalidStudy(
            "at least two replications are required".into(),
        ));
    }
    if config.experts.is_empty() || config.z_points.is_empty() || config.t_points.is_empty() {
        return Err(SimulationError::InvalidStudy(
            "experts, z_points and t_points must be nonempty".into(),
        ));
    }
    let kernel = KernelSpec::truncated_gaussian(1);
    let bandwidth = config.bandwidth_matrix()?;
    let models: Vec<ExpertModel> = config
        .experts
        .iter()
        .map(|e| e.model(&config.scenario))
        .collect();
    let t_max = config
        .t_points
        .iter()
        .chain(config.heatmap.iter().flat_map(|h| h.t.iter()))
        .copied()
        .fold(0.0, f64::max);

    let reps: Vec<Replication> = (0..config.replications as u64)
        .into_par_iter()
        .map(|r| run_replication(config, &models, &kernel, &bandwidth, t_max, r))
        .collect::<Result<_, _>>()?;

    let n = config.scenario.n as f64;
    let scale = n * bandwidth.determinant();
    let l2 = kernel.l2_norm();
    let mut cells = Vec::new();
    for (iz, &z) in config.z_points.iter().enumerate() {
        for (e, expert) in config.experts.iter().enumerate() {
            let p0 = expert.p0();
            let ok: Vec<&Vec<f64>> = reps
                .iter()
                .filter_map(|r| r.cells[iz][e].as_ref())
                .collect();
            let failures = reps.len() - ok.len();
            for (it, &t) in config.t_points.iter().enumerate() {
                let values: Vec<f64> = ok.iter().map(|v| v[it]).collect();
                let (mean, sd) = mean_and_sd(&values);
                let center = config.scenario.true_biased_center(t, z, p0)?;
                let sigma2 = config.scenario.true_sigma2_distribution(t, z, p0, l2)?;
                cells.push(McCell {
                    z_age: z,
                    expert: expert.label(),
                    p0,
                    t,
                    replications: reps.len(),
                    failures,
                    flagged: failures as f64 > 0.05 * reps.len() as f64,
                    mean,
                    std_dev: sd,
                    true_survival: config.scenario.true_survival(t, z),
                    true_center: center,
                    error_mean: mean - center,
                    true_std_dev: (sigma2 / scale).sqrt(),
                });
            }
        }
    }

    let (truth_grid, expert_grids) = match &config.heatmap {
        Some(h) => {
            let truth =
                SurvivalGrid::from_fn(&h.t, &h.z, |t, z| config.scenario.true_survival(t, z));
            let grids = config
                .experts
                .iter()
                .enumerate()
                .map(|(e, expert)| {
                    let mut failures = 0;
                    let mut values = Vec::with_capacity(h.z.len() * h.t.len());
                    for iz in 0..h.z.len() {
                        let ok: Vec<&Vec<f64>> = reps
                            .iter()
                            .filter_map(|r| r.grids[e][iz].as_ref())
                            .collect();
                        failures += reps.len() - ok.len();
                        for it in 0..h.t.len() {
                            let v: Vec<f64> = ok.iter().map(|row| row[it]).collect();
                            values.push(mean_and_sd(&v).0);
                        }
                    }
                    ExpertGrid {
                        expert: expert.label(),
                        mean: SurvivalGrid {
                            t: h.t.clone(),
                            z: h.z.clone(),
                            values,
                        },
                        failures,
                    }
                })
                .collect();
            (Some(truth), grids)
        }
        None => (None, Vec::new()),
    };

    Ok(McStudyResult {
        bandwidth: bandwidth.diagonal()[0],
        replications: config.replications,
        cells,
        truth_grid,
        expert_grids,
    })
}
