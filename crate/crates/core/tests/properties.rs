use nbrig::compound::convolve;
use nbrig::fit::log_likelihood;
use nbrig::{CountData, NbrigError, NbrigParams, RigParams};
use proptest::prelude::*;

fn rig() -> impl Strategy<Value = RigParams> {
    (0.1f64..100.0, 0.1f64..50.0).prop_map(|(a, m)| RigParams::new(a, m).unwrap())
}

fn nbrig() -> impl Strategy<Value = NbrigParams> {
    (0.1f64..10.0, rig()).prop_map(|(r, mix)| NbrigParams::from_parts(r, mix).unwrap())
}

fn prob_vec(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, 1..len).prop_map(|v| {
        let s: f64 = v.iter().sum::<f64>().max(1e-300);
        v.into_iter().map(|x| x / s).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mgf_is_one_at_zero_and_increasing(mix in rig(), a in -20.0f64..0.0, b in -20.0f64..0.0) {
        prop_assert_eq!(mix.mgf(0.0).unwrap(), 1.0);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(mix.mgf(lo).unwrap() <= mix.mgf(hi).unwrap());
        prop_assert!(mix.mgf(hi).unwrap() <= 1.0);
    }

    #[test]
    fn mgf_log_form_is_consistent(mix in rig(), t in -50.0f64..0.0) {
        let lin = mix.mgf(t).unwrap();
        let log = mix.log_mgf(t).unwrap();
        prop_assume!(lin > 1e-300);
        prop_assert!((log.exp() - lin).abs() <= 1e-12 * lin);
    }

    #[test]
    fn closed_form_and_recursion_agree(p in nbrig(), x in 0u64..=15) {
        match (p.direct(x), p.recursive(x)) {
            (Ok(d), Ok(r)) => prop_assert!((d.value - r.value).abs() <= 1e-9 * d.value),
            (Err(NbrigError::Precision { .. }), _) | (_, Err(NbrigError::Precision { .. })) => {}
            (d, r) => prop_assert!(false, "{:?} {:?}", d, r),
        }
    }

    #[test]
    fn pmf_is_a_probability_and_logs_agree(p in nbrig(), x in 0u64..200) {
        let v = p.pmf(x).unwrap();
        prop_assert!(v > 0.0 && v <= 1.0);
        let l = p.log_pmf(x).unwrap();
        if v > 1e-300 {
            prop_assert!((l.exp() - v).abs() <= 1e-12 * v);
        }
    }

    #[test]
    fn cdf_is_monotone(p in nbrig(), x in 0i64..30) {
        let a = p.cdf(x).unwrap();
        let b = p.cdf(x + 1).unwrap();
        prop_assert!(a <= b + 1e-15);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&b));
    }

    #[test]
    fn moments_are_consistent(r in 0.1f64..10.0, a in 4.5f64..100.0, m in 0.1f64..50.0) {
        let p = NbrigParams::new(r, a, m).unwrap();
        let mean = p.mean().unwrap();
        let var = p.variance().unwrap();
        prop_assert!((p.factorial_moment(1).unwrap() - mean).abs() <= 1e-13 * mean);
        prop_assert!(var > mean);
        let d = p.dispersion_report().unwrap();
        prop_assert!(d.variance > d.nb_matched_variance);
    }

    #[test]
    fn convolution_conserves_mass(a in prob_vec(8), b in prob_vec(8), x_max in 0u64..20) {
        let ab = convolve(&a, &b, x_max);
        let ba = convolve(&b, &a, x_max);
        let total = ab.probs.iter().sum::<f64>() + ab.tail;
        prop_assert!((total - 1.0).abs() < 1e-12);
        for (u, v) in ab.probs.iter().zip(&ba.probs) {
            prop_assert!((u - v).abs() <= 1e-15);
        }
    }

    #[test]
    fn count_data_is_order_and_split_invariant(
        cells in prop::collection::vec((0u64..20, 1u64..1000), 1..12),
        seed in any::<u64>(),
    ) {
        let base = CountData::from_pairs(cells.clone()).unwrap();
        let mut shuffled = cells.clone();
        shuffled.rotate_left((seed % cells.len() as u64) as usize);
        let split: Vec<(u64, u64)> = cells.iter().flat_map(|&(x, f)| [(x, f / 3), (x, f - f / 3)]).collect();
        prop_assert_eq!(&CountData::from_pairs(shuffled).unwrap(), &base);
        prop_assert_eq!(&CountData::from_pairs(split).unwrap(), &base);
        let p = NbrigParams::new(2.0, 20.0, 5.0).unwrap();
        let ll = log_likelihood(&p, &base).unwrap();
        prop_assert!(ll < 0.0 && ll.is_finite());
    }

    #[test]
    fn sampling_is_deterministic(p in nbrig(), seed in any::<u64>()) {
        prop_assert_eq!(p.sample(2000, seed).unwrap(), p.sample(2000, seed).unwrap());
    }
}
