//! Properties of the plug-in bias functional and the biased limit.

use expert_km::estimator::{h1_naive_estimate, h_estimate, nelson_aalen_expert, product_integral};
use expert_km::expert::{biased_limit, gamma_functional, BiasFunctional};
use expert_km::{BandwidthMatrix, KernelSpec, Observation, Sample};
use proptest::prelude::*;

fn sample() -> impl Strategy<Value = Vec<Observation>> {
    prop::collection::vec((0u32..30, any::<bool>(), -1.0f64..1.0), 2..80).prop_map(|v| {
        v.into_iter()
            .map(|(t, d, z)| Observation::new(f64::from(t) + 0.5, d, vec![z]))
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gamma_is_zero_at_full_effectiveness_and_decreasing_in_p0(obs in sample(), slope in 0.01f64..1.0) {
        let s = Sample::from_observations(&obs).unwrap();
        let k = KernelSpec::truncated_gaussian(1);
        let b = BandwidthMatrix::isotropic(1.0, 1).unwrap();
        let h = h_estimate(&s, &k, &b, &[0.0]);
        prop_assume!(h.is_ok());
        let h = h.unwrap();
        let h1 = h1_naive_estimate(&s, &k, &b, &[0.0]).unwrap();
        // p̂ < 1 wherever H₁ˣ has mass
        let p = move |w: f64, _: &[f64]| 1.0 / (1.0 + slope * w);
        let gammas: Vec<f64> = [0.0, 0.25, 0.5, 0.85, 1.0]
            .iter()
            .map(|&p0| gamma_functional(&p, &[0.0], p0, &h, &h1).unwrap().gamma.value(f64::INFINITY))
            .collect();
        prop_assert_eq!(gammas[4], 0.0);
        if !h1.is_empty() {
            for w in gammas.windows(2) {
                prop_assert!(w[1] < w[0], "{:?}", gammas);
            }
        }
    }

    #[test]
    fn zero_gamma_limit_is_the_product_integral(obs in sample()) {
        let s = Sample::from_observations(&obs).unwrap();
        let k = KernelSpec::truncated_gaussian(1);
        let b = BandwidthMatrix::isotropic(1.0, 1).unwrap();
        let Ok(h) = h_estimate(&s, &k, &b, &[0.0]) else { return Ok(()) };
        let h1 = h1_naive_estimate(&s, &k, &b, &[0.0]).unwrap();
        let lambda = nelson_aalen_expert(&h, &h1, f64::INFINITY).unwrap().lambda;
        let limit = biased_limit(&lambda, &BiasFunctional::zero(1.0)).unwrap();
        prop_assert_eq!(limit, product_integral(&lambda, f64::INFINITY).unwrap());
    }
}
