//! Cross-validated bandwidths against a known conditional distribution.

use expert_km::bandwidth::{default_t_grid, select_bandwidth, CvConfig, Search};
use expert_km::rng::{substream, Domain};
use expert_km::{fit_conditional_km, BandwidthMatrix, Judgments, KernelSpec, Observation, Sample};
use rand::Rng;

/// `X | z ~ Exp(1 + 0.3 z)`, `C ~ Exp(0.3)`, `Z ~ U[0, 3]`.
fn synthetic(n: usize, seed: u64) -> Vec<Observation> {
    (0..n)
        .map(|i| {
            let mut rng = substream(seed, Domain(77), 0, i as u64);
            let z = 3.0 * rng.random::<f64>();
            let x = -(1.0 - rng.random::<f64>()).ln() / (1.0 + 0.3 * z);
            let c = -(1.0 - rng.random::<f64>()).ln() / 0.3;
            Observation::new(x.min(c), x <= c, vec![z])
        })
        .collect()
}

fn ise(sample: &Sample, b: f64) -> f64 {
    let kernel = KernelSpec::truncated_gaussian(1);
    let bw = BandwidthMatrix::isotropic(b, 1).unwrap();
    let mut total = 0.0;
    for z in [0.5, 1.5, 2.5] {
        let fit = fit_conditional_km(sample, Judgments::Naive, &kernel, &bw, &[z], f64::INFINITY)
            .unwrap();
        for k in 0..=60 {
            let t = f64::from(k) * 0.05;
            let truth = 1.0 - (-(1.0 + 0.3 * z) * t).exp();
            total += (fit.f.value(t) - truth).powi(2) * 0.05;
        }
    }
    total
}

#[test]
fn selected_bandwidth_has_near_best_ise() {
    for seed in 0..3 {
        let obs = synthetic(400, seed);
        let sample = Sample::from_observations(&obs).unwrap();
        let grid = [0.5, 1.0, 2.0];
        let config = CvConfig::new(
            default_t_grid(&sample, 3.0),
            Search::Grid {
                candidates: vec![grid.to_vec()],
            },
            Judgments::Naive,
        );
        let sel = select_bandwidth(&sample, &KernelSpec::truncated_gaussian(1), &config).unwrap();
        let ises: Vec<f64> = grid.iter().map(|&b| ise(&sample, b)).collect();
        let best = ises.iter().copied().fold(f64::INFINITY, f64::min);
        let chosen = ises[grid
            .iter()
            .position(|&b| b == sel.bandwidth.diagonal()[0])
            .unwrap()];
        assert!(
            chosen <= 2.0 * best,
            "seed {seed}: {chosen} vs {best} ({:?})",
            sel.report
        );
        assert_eq!(sel.report.len(), 3);
    }
}

#[test]
fn weight_rescaling_keeps_the_argmin() {
    let obs = synthetic(200, 9);
    let sample = Sample::from_observations(&obs).unwrap();
    let base = CvConfig::new(
        default_t_grid(&sample, 3.0),
        Search::Grid {
            candidates: vec![vec![0.3, 0.6, 1.2, 2.4]],
        },
        Judgments::Naive,
    )
    .with_weight(|t| (-t).exp());
    let scaled = base.clone().with_weight(|t| 7.5 * (-t).exp());
    let k = KernelSpec::truncated_gaussian(1);
    let a = select_bandwidth(&sample, &k, &base).unwrap();
    let b = select_bandwidth(&sample, &k, &scaled).unwrap();
    assert_eq!(a.bandwidth, b.bandwidth);
    assert!((b.score - 7.5 * a.score).abs() <= 1e-12 * b.score);
}
