//! With constant covariates and the naive expert the conditional estimator
//! is the ordinary product-limit estimator.

use expert_km::{fit_conditional_km, BandwidthMatrix, Judgments, KernelSpec, Observation, Sample};
use proptest::prelude::*;

/// Textbook product-limit estimate of `F` at `t`.
fn product_limit(data: &[(f64, bool)], t: f64) -> f64 {
    let mut times: Vec<f64> = data.iter().filter(|d| d.1).map(|d| d.0).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut surv = 1.0;
    for &s in times.iter().take_while(|&&s| s <= t) {
        let at_risk = data.iter().filter(|d| d.0 >= s).count() as f64;
        let events = data.iter().filter(|d| d.1 && d.0 == s).count() as f64;
        surv *= 1.0 - events / at_risk;
    }
    1.0 - surv
}

fn dataset() -> impl Strategy<Value = Vec<(f64, bool)>> {
    // integer-valued times produce many ties
    prop::collection::vec((0u32..40, any::<bool>()), 1..200).prop_map(|v| {
        v.into_iter()
            .map(|(t, d)| (f64::from(t) * 0.5, d))
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn matches_product_limit(data in dataset(), b in 0.1f64..5.0) {
        let obs: Vec<Observation> = data.iter().map(|&(w, d)| Observation::new(w, d, vec![1.0])).collect();
        let sample = Sample::from_observations(&obs).unwrap();
        let fit = fit_conditional_km(
            &sample,
            Judgments::Naive,
            &KernelSpec::truncated_gaussian(1),
            &BandwidthMatrix::isotropic(b, 1).unwrap(),
            &[1.0],
            f64::INFINITY,
        )
        .unwrap();
        for k in 0..=42 {
            let t = f64::from(k) * 0.5 - 0.25;
            for tt in [t, t + 0.25] {
                let want = product_limit(&data, tt);
                prop_assert!((fit.f.value(tt) - want).abs() <= 1e-12, "t = {}: {} vs {}", tt, fit.f.value(tt), want);
            }
        }
    }
}

#[test]
fn all_censored_gives_unit_survival() {
    let obs: Vec<Observation> = (0..10)
        .map(|i| Observation::new(f64::from(i), false, vec![0.0]))
        .collect();
    let sample = Sample::from_observations(&obs).unwrap();
    let fit = fit_conditional_km(
        &sample,
        Judgments::Naive,
        &KernelSpec::truncated_gaussian(1),
        &BandwidthMatrix::isotropic(1.0, 1).unwrap(),
        &[0.0],
        100.0,
    )
    .unwrap();
    for t in [0.0, 3.5, 9.0, 50.0] {
        assert_eq!(fit.survival(t), 1.0);
    }
}
