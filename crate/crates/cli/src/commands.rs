//! Subcommand implementations. Each returns after queueing its files on the
//! [`RunOutput`]; nothing touches the disk until the run has succeeded.

use std::io::Write;
use std::path::PathBuf;

use chrono::NaiveDate;
use serde::Serialize;

use expert_km::asymptotics::{interval, sigma2_distribution, two_sided_quantile};
use expert_km::bandwidth::{
    cv_curves, default_t_grid, direct_loo_curves, select_bandwidth, CvConfig, CvTarget, Search,
    Selection,
};
use expert_km::curves::StepCurve;
use expert_km::dataset::{ingest_csv, write_csv, Dataset, IngestOptions};
use expert_km::estimator::{
    fit_conditional_km, h1_naive_estimate, h_estimate, survival_integral_difference, AtRisk,
    DENOMINATOR_FLOOR,
};
use expert_km::expert::{
    biased_limit, gamma_functional, ConstantProbability, CovariatePredicate, EventProbability,
    ExpertModel,
};
use expert_km::kernels::WeightCache;
use expert_km::loan::{read_loans, synthetic_loans, to_observations, write_loans};
use expert_km::rng::Domain;
use expert_km::simulation::{
    heatmap_difference, run_mc_study, simulate_portfolio, DisabilityScenario, McStudyConfig,
    SurvivalGrid,
};
use expert_km::{BandwidthMatrix, Judgments, KernelSpec, Sample};

use crate::config::{BandwidthConfig, ExpertConfig, LoadedConfig, PHatConfig};
use crate::error::CliError;
use crate::output::RunOutput;

/// Largest sample for which `cv --verify-loo` runs the quadratic reference.
pub const VERIFY_LOO_LIMIT: usize = 200;
const VERIFY_LOO_TOL: f64 = 1e-10;

pub struct Context {
    pub loaded: LoadedConfig,
    pub seed: u64,
    pub out: RunOutput,
}

/// The dataset after covariate selection and expert judgments.
struct Prepared {
    dataset: Dataset,
    sample: Sample,
    judgments: Judgments,
    kernel: KernelSpec,
    columns: Vec<usize>,
}

fn prepare(ctx: &mut Context, skip_bad: bool) -> Result<Prepared, CliError> {
    let cfg = &ctx.loaded.config;
    let data = cfg.data()?;
    let path = ctx.loaded.resolve(&data.path);
    let options = IngestOptions {
        require_eta: matches!(cfg.expert, ExpertConfig::Precomputed),
        skip_bad,
    };
    let report = ingest_csv(&path, options)?;
    for r in &report.rejected {
        ctx.out
            .warn(format!("skipped line {}: {}", r.line, r.reason));
    }
    ctx.out.detail("rows_read", report.rows_read);
    ctx.out
        .detail("rows_used", report.dataset.observations.len());
    let dataset = report.dataset;
    let column_of = |name: &str| {
        dataset
            .covariate_names
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| CliError::Validation(format!("unknown covariate `{name}`")))
    };
    let columns: Vec<usize> = match &data.covariates {
        Some(names) => names
            .iter()
            .map(|n| column_of(n))
            .collect::<Result<_, _>>()?,
        None => (0..dataset.covariate_names.len()).collect(),
    };
    if columns.is_empty() {
        return Err(CliError::Validation("no covariate columns selected".into()));
    }
    let sample = Sample::with_covariates(&dataset.observations, &columns)?;
    let model = match &cfg.expert {
        ExpertConfig::Naive | ExpertConfig::Precomputed => None,
        ExpertConfig::UniformCensor { c } => Some(ExpertModel::UniformCensor { c: *c }),
        ExpertConfig::ThresholdCensor {
            c,
            covariate,
            threshold,
        } => Some(ExpertModel::ThresholdCensor {
            c: *c,
            predicate: CovariatePredicate {
                index: column_of(covariate)?,
                threshold: *threshold,
            },
        }),
    };
    let (sample, judgments) = match (&cfg.expert, model) {
        (ExpertConfig::Naive, _) => (sample, Judgments::Naive),
        (ExpertConfig::Precomputed, _) => (sample, Judgments::Expert),
        (_, Some(m)) => {
            let eta = m.judge_all(&dataset.observations, ctx.seed, Domain::JUDGMENTS, 0)?;
            (sample.with_judgments(&eta)?, Judgments::Expert)
        }
        (_, None) => unreachable!("every drawing expert builds a model"),
    };
    let kernel = KernelSpec::new(cfg.kernel.shape, columns.len())?;
    Ok(Prepared {
        dataset,
        sample,
        judgments,
        kernel,
        columns,
    })
}

fn horizon(ctx: &Context, sample: &Sample) -> f64 {
    ctx.loaded
        .config
        .query
        .as_ref()
        .map(|q| q.t_max)
        .unwrap_or_else(|| sample.times().last().copied().unwrap_or(0.0))
}

fn cv_config(ctx: &Context, p: &Prepared) -> Result<CvConfig, CliError> {
    let BandwidthConfig::Cv {
        candidates,
        initial,
        shrink,
        grow,
        max_iterations,
        tolerance,
        t_grid,
        weight_decay,
        targets,
    } = ctx.loaded.config.bandwidth()?
    else {
        return Err(CliError::Validation("bandwidth.mode must be \"cv\"".into()));
    };
    let search = match (candidates, initial) {
        (Some(c), None) => Search::Grid {
            candidates: c.clone(),
        },
        (None, Some(i)) => Search::CoordinateDescent {
            initial: i.clone(),
            shrink: *shrink,
            grow: *grow,
            max_iterations: *max_iterations,
            tolerance: *tolerance,
        },
        _ => {
            return Err(CliError::Validation(
                "cv needs exactly one of `candidates` or `initial`".into(),
            ))
        }
    };
    let grid = match t_grid {
        Some(g) => g.clone(),
        None => default_t_grid(&p.sample, horizon(ctx, &p.sample)),
    };
    let mut config = CvConfig::new(grid, search, p.judgments);
    if *weight_decay != 0.0 {
        let decay = *weight_decay;
        config = config.with_weight(move |t| (-decay * t).exp());
    }
    if let Some(names) = targets {
        let parsed = names
            .iter()
            .map(|n| match n.as_str() {
                "H" => Ok(CvTarget::H),
                "H1" => Ok(CvTarget::H1),
                other => Err(CliError::Validation(format!("unknown CV target `{other}`"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        if parsed.is_empty() {
            return Err(CliError::Validation("bandwidth.targets is empty".into()));
        }
        config = config.with_targets(parsed);
    }
    Ok(config)
}

fn write_selection(out: &mut RunOutput, selection: &Selection) -> Result<(), CliError> {
    let chosen = selection.bandwidth.diagonal().to_vec();
    out.csv("cv_report.csv", |buf| {
        let k = chosen.len();
        let names: Vec<String> = (1..=k).map(|i| format!("b{i}")).collect();
        writeln!(buf, "{},score,excluded_terms,selected", names.join(","))?;
        for r in &selection.report {
            let bs: Vec<String> = r.bandwidth.iter().map(|b| b.to_string()).collect();
            let score = r.score.map(|s| s.to_string()).unwrap_or_default();
            let selected = u8::from(r.bandwidth == chosen);
            writeln!(
                buf,
                "{},{},{},{}",
                bs.join(","),
                score,
                r.excluded_terms,
                selected
            )?;
        }
        Ok(())
    })?;
    out.detail("cv_score", selection.score);
    out.detail("cv_candidates", selection.report.len());
    Ok(())
}

fn resolve_bandwidth(ctx: &mut Context, p: &Prepared) -> Result<BandwidthMatrix, CliError> {
    let dim = p.columns.len();
    let bw = match ctx.loaded.config.bandwidth()? {
        BandwidthConfig::Explicit { values } => {
            if values.len() != dim {
                return Err(CliError::Validation(format!(
                    "{} bandwidth values for {dim} covariates",
                    values.len()
                )));
            }
            BandwidthMatrix::new(values.clone())?
        }
        BandwidthConfig::Schedule { rho } => BandwidthMatrix::schedule(p.sample.len(), *rho, dim)?,
        BandwidthConfig::Cv { .. } => {
            let config = cv_config(ctx, p)?;
            let selection = select_bandwidth(&p.sample, &p.kernel, &config)?;
            write_selection(&mut ctx.out, &selection)?;
            selection.bandwidth
        }
    };
    ctx.out.detail("bandwidth", bw.diagonal());
    Ok(bw)
}

fn evaluation_times(curve_times: &[f64], extra: &[f64], t_max: f64) -> Vec<f64> {
    let mut times: Vec<f64> = std::iter::once(0.0)
        .chain(
            curve_times
                .iter()
                .copied()
                .filter(|&t| t > 0.0 && t <= t_max),
        )
        .chain(extra.iter().copied().filter(|&t| t >= 0.0 && t <= t_max))
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
}

#[derive(Serialize)]
struct PointSummary {
    z: Vec<f64>,
    n_effective: f64,
    g_hat: f64,
    truncated_at: Option<f64>,
    file: String,
}

pub fn fit(ctx: &mut Context, skip_bad: bool) -> Result<(), CliError> {
    let p = prepare(ctx, skip_bad)?;
    let query = ctx.loaded.config.query()?.clone();
    let bw = resolve_bandwidth(ctx, &p)?;
    let q = two_sided_quantile(query.level)?;
    let scale = p.sample.len() as f64 * bw.determinant();
    let l2 = p.kernel.l2_norm();
    let mut summaries = Vec::new();
    for (i, z0) in query.points.iter().enumerate() {
        let fit = fit_conditional_km(&p.sample, p.judgments, &p.kernel, &bw, z0, query.t_max)?;
        if let Some(t) = fit.truncated_at {
            ctx.out.warn(format!(
                "point {i}: at-risk mass vanishes at t = {t}; estimate held constant beyond"
            ));
        }
        let times = evaluation_times(fit.h.times(), &query.t_grid, query.t_max);
        let mut ci_failure = None;
        let mut rows = Vec::with_capacity(times.len());
        for &t in &times {
            let ci = match sigma2_distribution(t, t, &fit, l2) {
                Ok(s2) => Some(interval(t, fit.f.value(t), s2, scale, q)),
                Err(e) => {
                    ci_failure.get_or_insert((t, e.to_string()));
                    None
                }
            };
            rows.push((t, ci));
        }
        if let Some((t, why)) = ci_failure {
            ctx.out.warn(format!(
                "point {i}: no confidence interval from t = {t}: {why}"
            ));
        }
        let name = format!("fit_{i}.csv");
        ctx.out.csv(&name, |buf| {
            writeln!(buf, "t,F,survival,Lambda,H,lower,upper")?;
            for (t, ci) in &rows {
                let f = fit.f.value(*t);
                let (lo, hi) = ci.map_or((String::new(), String::new()), |r| {
                    (r.lower.to_string(), r.upper.to_string())
                });
                writeln!(
                    buf,
                    "{t},{f},{},{},{},{lo},{hi}",
                    1.0 - f,
                    fit.lambda.value(*t),
                    fit.h.value(*t)
                )?;
            }
            Ok(())
        })?;
        summaries.push(PointSummary {
            z: z0.clone(),
            n_effective: fit.n_effective,
            g_hat: fit.g_hat,
            truncated_at: fit.truncated_at,
            file: name,
        });
    }
    ctx.out.detail("points", &summaries);
    ctx.out.detail("level", query.level);
    if let Some(diff) = ctx.loaded.config.integral_difference.clone() {
        integral_difference(ctx, &p, &bw, diff.upper, &diff.axes)?;
    }
    Ok(())
}

fn cartesian(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect()
    })
}

/// `∫_0^upper (S_expert − S_naive)` over a covariate grid.
fn integral_difference(
    ctx: &mut Context,
    p: &Prepared,
    bw: &BandwidthMatrix,
    upper: f64,
    axes: &[Vec<f64>],
) -> Result<(), CliError> {
    if axes.len() != p.columns.len() {
        return Err(CliError::Validation(format!(
            "integral_difference.axes has {} axes for {} covariates",
            axes.len(),
            p.columns.len()
        )));
    }
    if !(upper > 0.0) {
        return Err(CliError::Validation(
            "integral_difference.upper must be positive".into(),
        ));
    }
    let mut rows = Vec::new();
    let mut failed = 0;
    for z in cartesian(axes) {
        let pair =
            fit_conditional_km(&p.sample, p.judgments, &p.kernel, bw, &z, upper).and_then(|e| {
                fit_conditional_km(&p.sample, Judgments::Naive, &p.kernel, bw, &z, upper)
                    .map(|n| (e, n))
            });
        match pair {
            Ok((e, n)) => rows.push((z, Some(survival_integral_difference(&e.f, &n.f, upper)))),
            Err(_) => {
                failed += 1;
                rows.push((z, None));
            }
        }
    }
    if failed > 0 {
        ctx.out.warn(format!(
            "integral difference undefined at {failed} grid points"
        ));
    }
    let names: Vec<String> = p
        .columns
        .iter()
        .map(|&c| p.dataset.covariate_names[c].clone())
        .collect();
    ctx.out.csv("integral_difference.csv", |buf| {
        writeln!(buf, "{},difference", names.join(","))?;
        for (z, d) in &rows {
            let zs: Vec<String> = z.iter().map(|v| v.to_string()).collect();
            writeln!(
                buf,
                "{},{}",
                zs.join(","),
                d.map(|v| v.to_string()).unwrap_or_default()
            )?;
        }
        Ok(())
    })
}

pub fn cv(ctx: &mut Context, skip_bad: bool, verify_loo: bool) -> Result<(), CliError> {
    let p = prepare(ctx, skip_bad)?;
    let config = cv_config(ctx, &p)?;
    if verify_loo && p.sample.len() > VERIFY_LOO_LIMIT {
        return Err(CliError::Validation(format!(
            "--verify-loo needs at most {VERIFY_LOO_LIMIT} observations, got {}",
            p.sample.len()
        )));
    }
    let selection = select_bandwidth(&p.sample, &p.kernel, &config)?;
    write_selection(&mut ctx.out, &selection)?;
    ctx.out.detail("bandwidth", selection.bandwidth.diagonal());
    if verify_loo {
        let cache = WeightCache::build(&p.sample, &p.kernel, &selection.bandwidth)?;
        let fast = cv_curves(&p.sample, &cache, &config.t_grid, config.judgments)?;
        let slow = direct_loo_curves(
            &p.sample,
            &p.kernel,
            &selection.bandwidth,
            &config.t_grid,
            config.judgments,
        )?;
        let mut worst = 0.0f64;
        for i in 0..fast.t_grid.len() {
            worst = worst
                .max((fast.cv_h[i] - slow.cv_h[i]).abs())
                .max((fast.cv_h1[i] - slow.cv_h1[i]).abs());
        }
        ctx.out.csv("loo_verification.csv", |buf| {
            writeln!(
                buf,
                "t,cv_h_shortcut,cv_h_direct,cv_h1_shortcut,cv_h1_direct"
            )?;
            for i in 0..fast.t_grid.len() {
                writeln!(
                    buf,
                    "{},{},{},{},{}",
                    fast.t_grid[i], fast.cv_h[i], slow.cv_h[i], fast.cv_h1[i], slow.cv_h1[i]
                )?;
            }
            Ok(())
        })?;
        ctx.out.detail("loo_max_abs_difference", worst);
        if fast.excluded_terms != slow.excluded_terms || !(worst <= VERIFY_LOO_TOL) {
            return Err(CliError::Numerical(format!(
                "leave-one-out shortcut disagrees with direct refits (max difference {worst:e})"
            )));
        }
    }
    Ok(())
}

fn scenario_or_default(ctx: &Context) -> DisabilityScenario {
    ctx.loaded
        .config
        .simulation
        .as_ref()
        .map(|s| s.scenario.clone())
        .unwrap_or_default()
}

pub fn simulate(ctx: &mut Context, keep_latents: bool) -> Result<(), CliError> {
    let scenario = scenario_or_default(ctx);
    let expert = ctx.loaded.config.simulation.as_ref().and_then(|s| s.expert);
    let records = simulate_portfolio(&scenario, ctx.seed, 0)?;
    let eta = match expert {
        Some(e) => {
            let obs: Vec<_> = records.iter().map(|r| r.obs.clone()).collect();
            Some(
                e.model(&scenario)
                    .judge_all(&obs, ctx.seed, Domain::JUDGMENTS, 0)?,
            )
        }
        None => None,
    };
    ctx.out.csv("portfolio.csv", |buf| {
        let mut header = vec!["w", "delta"];
        if eta.is_some() {
            header.push("eta");
        }
        header.extend(["age", "reportings"]);
        if keep_latents {
            header.extend(["x", "y", "c"]);
        }
        writeln!(buf, "{}", header.join(","))?;
        for (i, r) in records.iter().enumerate() {
            let o = &r.obs;
            write!(buf, "{},{}", o.w, u8::from(o.delta))?;
            if let Some(eta) = &eta {
                write!(buf, ",{}", u8::from(eta[i]))?;
            }
            write!(buf, ",{},{}", o.z[0], o.z[1])?;
            if keep_latents {
                write!(buf, ",{},{},{}", r.x, r.y, r.c)?;
            }
            writeln!(buf)?;
        }
        Ok(())
    })?;
    let events = records.iter().filter(|r| r.obs.delta).count();
    let true_events = records.iter().filter(|r| r.is_true_event()).count();
    ctx.out.detail("n", records.len());
    ctx.out.detail("observed_events", events);
    ctx.out.detail("true_events", true_events);
    if let Some(e) = expert {
        ctx.out.detail("expert", e.label());
    }
    Ok(())
}

fn file_label(label: &str) -> String {
    label.replace('%', "pct").replace('.', "_")
}

pub fn mc_study(ctx: &mut Context, full_scale: bool) -> Result<(), CliError> {
    let base = if full_scale {
        McStudyConfig::full_scale()
    } else {
        McStudyConfig::default()
    };
    let mut config = match &ctx.loaded.config.study {
        Some(s) => s.apply(base),
        None => base,
    };
    config.seed = ctx.seed;
    let result = run_mc_study(&config)?;
    ctx.out
        .csv("study_cells.csv", |buf| result.write_cells_csv(buf))?;
    ctx.out.detail("bandwidth", result.bandwidth);
    ctx.out.detail("replications", result.replications);
    ctx.out.detail("n", config.scenario.n);
    let flagged = result.cells.iter().filter(|c| c.flagged).count();
    if flagged > 0 {
        ctx.out.warn(format!(
            "{flagged} cells had more than 5% failed replications"
        ));
    }
    if let Some(truth) = &result.truth_grid {
        ctx.out
            .csv("heatmap_truth.csv", |buf| truth.write_csv(buf, "survival"))?;
        let mut sup = Vec::new();
        for g in &result.expert_grids {
            let label = file_label(&g.expert);
            ctx.out.csv(&format!("heatmap_mean_{label}.csv"), |buf| {
                g.mean.write_csv(buf, "survival")
            })?;
            let diff = heatmap_difference(&g.mean, truth)?;
            ctx.out
                .csv(&format!("heatmap_{label}_minus_truth.csv"), |buf| {
                    diff.write_csv(buf, "difference")
                })?;
            sup.push((g.expert.clone(), diff.sup_norm()));
        }
        if let Some(naive) = result.grid("naive") {
            for g in result.expert_grids.iter().filter(|g| g.expert != "naive") {
                let diff: SurvivalGrid = heatmap_difference(naive, &g.mean)?;
                let label = file_label(&g.expert);
                ctx.out
                    .csv(&format!("heatmap_naive_minus_{label}.csv"), |buf| {
                        diff.write_csv(buf, "difference")
                    })?;
            }
        }
        ctx.out.detail("sup_norm_error", sup);
    }
    Ok(())
}

/// `Σ p̂ ΔĤ₁ˣ / (1 − Ĥ(s−))`, the hazard of true events implied by `p̂`.
fn weighted_hazard(
    p_hat: &dyn EventProbability,
    z0: &[f64],
    h: &StepCurve,
    h1_naive: &StepCurve,
    t_max: f64,
) -> Result<StepCurve, CliError> {
    let at_risk = AtRisk::from_distribution(h);
    let mut times = Vec::new();
    let mut jumps = Vec::new();
    for (s, d) in h1_naive.iter_jumps().take_while(|&(s, _)| s <= t_max) {
        let denom = at_risk.at(s);
        if denom < DENOMINATOR_FLOOR {
            break;
        }
        let size = (p_hat.probability(s, z0)? * d / denom).min(1.0);
        if size > 0.0 {
            times.push(s);
            jumps.push(size);
        }
    }
    StepCurve::new_monotone(times, jumps, 0.0).map_err(|e| CliError::Numerical(e.to_string()))
}

struct DisabilityPHat {
    scenario: DisabilityScenario,
    reportings: f64,
}

impl EventProbability for DisabilityPHat {
    fn probability(&self, w: f64, z: &[f64]) -> Result<f64, expert_km::expert::ExpertError> {
        Ok(self.scenario.event_probability(w, z[0], self.reportings))
    }
}

pub fn bias(ctx: &mut Context, skip_bad: bool) -> Result<(), CliError> {
    let p = prepare(ctx, skip_bad)?;
    let query = ctx.loaded.config.query()?.clone();
    let bias = ctx
        .loaded
        .config
        .bias
        .clone()
        .ok_or_else(|| CliError::Validation("missing [bias] section".into()))?;
    let p_hat: Box<dyn EventProbability> = match bias.p_hat {
        PHatConfig::Constant { value } => {
            if !(0.0..=1.0).contains(&value) {
                return Err(CliError::Validation(format!(
                    "p_hat.value must lie in [0, 1], got {value}"
                )));
            }
            Box::new(ConstantProbability(value))
        }
        PHatConfig::Disability { reportings } => Box::new(DisabilityPHat {
            scenario: scenario_or_default(ctx),
            reportings,
        }),
    };
    let bw = resolve_bandwidth(ctx, &p)?;
    for (i, z0) in query.points.iter().enumerate() {
        let h = h_estimate(&p.sample, &p.kernel, &bw, z0)?;
        let h1x = h1_naive_estimate(&p.sample, &p.kernel, &bw, z0)?;
        let lambda_p = weighted_hazard(p_hat.as_ref(), z0, &h, &h1x, query.t_max)?;
        let times = evaluation_times(h1x.times(), &query.t_grid, query.t_max);
        let mut rows = Vec::new();
        for &p0 in &bias.p0 {
            let gamma = gamma_functional(p_hat.as_ref(), z0, p0, &h, &h1x)?;
            let center = biased_limit(&lambda_p, &gamma)?;
            let truth = biased_limit(&lambda_p, &expert_km::expert::BiasFunctional::zero(p0))?;
            for &t in &times {
                rows.push((
                    p0,
                    t,
                    gamma.gamma.value(t),
                    gamma.factor(t),
                    1.0 - truth.value(t),
                    1.0 - center.value(t),
                ));
            }
        }
        ctx.out.csv(&format!("bias_{i}.csv"), |buf| {
            writeln!(buf, "p0,t,gamma,factor,survival,biased_survival")?;
            for (p0, t, g, f, s, b) in &rows {
                writeln!(buf, "{p0},{t},{g},{f},{s},{b}")?;
            }
            Ok(())
        })?;
    }
    Ok(())
}

fn parse_cutoff(flag: Option<&str>, ctx: &Context) -> Result<NaiveDate, CliError> {
    let raw = flag
        .map(str::to_string)
        .or_else(|| ctx.loaded.config.loan.as_ref().map(|l| l.cutoff.clone()))
        .ok_or_else(|| {
            CliError::Validation("no cut-off date (use --cutoff or [loan].cutoff)".into())
        })?;
    NaiveDate::parse_from_str(&raw, "%Y-%m-%d").map_err(|_| {
        CliError::Validation(format!(
            "cannot parse cut-off `{raw}` (expected YYYY-MM-DD)"
        ))
    })
}

fn loan_dataset(observations: Vec<expert_km::Observation>, note: String) -> Dataset {
    Dataset {
        observations,
        covariate_names: vec!["debt_to_income".into(), "interest_rate".into()],
        has_eta: false,
        note,
    }
}

pub fn loan_convert(
    ctx: &mut Context,
    input: Option<PathBuf>,
    cutoff: Option<&str>,
) -> Result<(), CliError> {
    let cutoff = parse_cutoff(cutoff, ctx)?;
    let path = match input {
        Some(p) => p,
        None => ctx
            .loaded
            .config
            .loan
            .as_ref()
            .and_then(|l| l.input.as_ref())
            .map(|p| ctx.loaded.resolve(p))
            .ok_or_else(|| {
                CliError::Validation("no loan input (use --input or [loan].input)".into())
            })?,
    };
    let file = std::fs::File::open(&path)
        .map_err(|e| CliError::Validation(format!("cannot open {}: {e}", path.display())))?;
    let records = read_loans(file)?;
    let obs = to_observations(&records, cutoff)?;
    let ds = loan_dataset(obs, String::new());
    ctx.out
        .csv("observations.csv", |buf| write_csv(&ds, &[], buf))?;
    ctx.out.detail("loans", records.len());
    ctx.out.detail(
        "defaults",
        ds.observations.iter().filter(|o| o.delta).count(),
    );
    ctx.out.detail("cutoff", cutoff.to_string());
    Ok(())
}

pub fn loan_synth(
    ctx: &mut Context,
    n: Option<usize>,
    cutoff: Option<&str>,
) -> Result<(), CliError> {
    let cutoff = parse_cutoff(cutoff, ctx)?;
    let n = n
        .or_else(|| ctx.loaded.config.loan.as_ref().and_then(|l| l.n))
        .unwrap_or(5000);
    if n == 0 {
        return Err(CliError::Validation(
            "loan portfolio size must be positive".into(),
        ));
    }
    let records = synthetic_loans(n, ctx.seed, cutoff);
    let obs = to_observations(&records, cutoff)?;
    let ds = loan_dataset(obs, String::new());
    ctx.out
        .csv("loans.csv", |buf| write_loans(&records, &[], buf))?;
    ctx.out
        .csv("observations.csv", |buf| write_csv(&ds, &[], buf))?;
    ctx.out.detail("loans", n);
    ctx.out.detail(
        "defaults",
        ds.observations.iter().filter(|o| o.delta).count(),
    );
    ctx.out.detail("cutoff", cutoff.to_string());
    ctx.out
        .warn("synthetic data; not drawn from any real loan book");
    Ok(())
}
