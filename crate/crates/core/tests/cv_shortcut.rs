//! The leave-one-out shortcut against a direct leave-one-out computation.

use expert_km::bandwidth::{cv_curves, BandwidthError};
use expert_km::kernels::{DirectWeights, WeightCache};
use expert_km::{BandwidthMatrix, Judgments, KernelSpec, Observation, Sample};
use proptest::prelude::*;

fn k1(u: f64) -> f64 {
    if u.abs() <= 2.0 {
        (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt() / 0.954_499_736_103_641_6
    } else {
        0.0
    }
}

/// Direct leave-one-out scores `(CV_H, CV_H1)` at `t`, averaged over the
/// observations whose leave-one-out neighbourhood carries weight.
fn direct_loo(
    rows: &[(f64, bool, bool, Vec<f64>)],
    b: &[f64],
    t: f64,
    expert: bool,
) -> Option<(f64, f64, usize)> {
    let n = rows.len();
    let (mut sh, mut sh1, mut included) = (0.0, 0.0, 0);
    for m in 0..n {
        let mut s = 0.0;
        let mut acc = 0.0;
        let mut acc1 = 0.0;
        for j in (0..n).filter(|&j| j != m) {
            let w: f64 = (0..b.len())
                .map(|c| k1((rows[j].3[c] - rows[m].3[c]) / b[c]))
                .product();
            s += w;
            if rows[j].0 <= t {
                acc += w;
                let mark = if expert { rows[j].2 } else { rows[j].1 };
                if mark {
                    acc1 += w;
                }
            }
        }
        if s == 0.0 {
            continue;
        }
        included += 1;
        let ind = if rows[m].0 <= t { 1.0 } else { 0.0 };
        let mark = if expert { rows[m].2 } else { rows[m].1 };
        let ind1 = if mark { ind } else { 0.0 };
        sh += (ind - acc / s).powi(2);
        sh1 += (ind1 - acc1 / s).powi(2);
    }
    (included > 0).then(|| (sh / included as f64, sh1 / included as f64, n - included))
}

type Row = (f64, bool, bool, Vec<f64>);

fn rows(k: usize) -> impl Strategy<Value = Vec<Row>> {
    prop::collection::vec(
        (
            0u32..10,
            any::<bool>(),
            any::<bool>(),
            prop::collection::vec(0.0f64..3.0, k),
        ),
        2..30,
    )
    .prop_map(|v| {
        v.into_iter()
            .map(|(t, d, e, z)| (f64::from(t), d, d && e, z))
            .collect()
    })
}

fn check(data: &[Row], b: Vec<f64>, t: f64) -> Result<(), TestCaseError> {
    let obs: Vec<Observation> = data
        .iter()
        .map(|(w, d, e, z)| Observation::new(*w, *d, z.clone()).with_eta(*e))
        .collect();
    let sample = Sample::from_observations(&obs).unwrap();
    let kernel = KernelSpec::truncated_gaussian(b.len());
    let bw = BandwidthMatrix::new(b.clone()).unwrap();
    let cache = WeightCache::build(&sample, &kernel, &bw).unwrap();
    let direct = DirectWeights {
        sample: &sample,
        kernel: &kernel,
        bandwidth: &bw,
    };
    for expert in [false, true] {
        let judg = if expert {
            Judgments::Expert
        } else {
            Judgments::Naive
        };
        let got = cv_curves(&sample, &cache, &[t], judg);
        let uncached = cv_curves(&sample, &direct, &[t], judg);
        prop_assert_eq!(&got, &uncached);
        match (got, direct_loo(data, &b, t, expert)) {
            (Ok(c), Some((h, h1, excluded))) => {
                prop_assert_eq!(c.excluded_terms, excluded);
                prop_assert!(
                    (c.cv_h[0] - h).abs() <= 1e-10 * h.abs().max(1.0),
                    "{} vs {}",
                    c.cv_h[0],
                    h
                );
                prop_assert!(
                    (c.cv_h1[0] - h1).abs() <= 1e-10 * h1.abs().max(1.0),
                    "{} vs {}",
                    c.cv_h1[0],
                    h1
                );
            }
            (Err(BandwidthError::DegenerateNeighborhood { excluded }), None) => {
                prop_assert_eq!(excluded, data.len());
            }
            (got, want) => prop_assert!(false, "mismatch: {:?} vs {:?}", got, want),
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn shortcut_equals_direct_1d(data in rows(1), b in 0.05f64..2.0, t in 0.0f64..10.0) {
        check(&data, vec![b], t)?;
    }

    #[test]
    fn shortcut_equals_direct_2d(data in rows(2), b1 in 0.05f64..2.0, b2 in 0.05f64..2.0, t in 0.0f64..10.0) {
        check(&data, vec![b1, b2], t)?;
    }
}
