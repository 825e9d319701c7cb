use nbrig::dist::{cdf, pmf, pmf_direct, pmf_recursive, survival};
use nbrig::special::compensated_sum;
use nbrig::{Execution, Method, NbrigError, NbrigParams, PmfTable};

fn grid() -> Vec<NbrigParams> {
    let mut out = Vec::new();
    for &r in &[0.5, 1.0, 3.4] {
        for &a in &[0.5, 2.0, 61.4973] {
            for &m in &[0.5, 2.0, 35.8961] {
                out.push(NbrigParams::new(r, a, m).unwrap());
            }
        }
    }
    out
}

fn swiss_fit() -> NbrigParams {
    NbrigParams::new(3.3999, 61.4973, 35.8961).unwrap()
}

fn accidents_fit() -> NbrigParams {
    NbrigParams::new(2.03, 24.87, 17.42).unwrap()
}

#[test]
fn closed_form_and_recursion_agree_on_grid() {
    let start = std::time::Instant::now();
    for p in grid() {
        for x in 0..=15 {
            let d = pmf_direct(x, &p).unwrap();
            let r = pmf_recursive(x, &p).unwrap();
            assert!((d - r).abs() <= 1e-9 * d, "{p:?} x={x}: {d} vs {r}");
        }
    }
    assert!(start.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn closed_form_never_negative() {
    for p in grid() {
        for x in 0..=30 {
            match pmf_direct(x, &p) {
                Ok(v) => assert!(v >= 0.0, "{p:?} x={x}: {v}"),
                Err(NbrigError::Precision { .. }) => {}
                Err(e) => panic!("{p:?} x={x}: {e}"),
            }
            assert!(pmf(x, &p).unwrap() > 0.0, "{p:?} x={x}");
        }
    }
}

#[test]
fn precision_error_instead_of_garbage() {
    let p = swiss_fit();
    assert!(matches!(p.direct(200), Err(NbrigError::Precision { .. })));
    let ev = p.evaluate(200).unwrap();
    assert_eq!(ev.method, Method::Mixture);
    assert!(ev.value > 0.0 && ev.rel_err < 1e-10);
}

#[test]
fn expected_frequencies_at_reference_fit() {
    let want = [103_710.0, 14_054.8, 1_787.35, 251.933, 40.2211, 7.21741, 1.43701];
    let p = NbrigParams::new(3.4, 61.4973, 35.8961).unwrap();
    for (x, w) in want.iter().enumerate() {
        let e = 119_853.0 * p.pmf(x as u64).unwrap();
        assert!((e - w).abs() <= 0.005 * w, "x={x}: {e} vs {w}");
    }
}

#[test]
fn zero_count_is_the_mgf() {
    for p in grid() {
        let want = p.mix().mgf(-p.r()).unwrap();
        let got = p.pmf(0).unwrap();
        assert!((got - want).abs() <= 1e-15 * want);
    }
}

#[test]
fn log_and_linear_pmf_agree() {
    for p in grid() {
        for x in [0, 1, 5, 15, 40, 120] {
            let lin = p.pmf(x).unwrap();
            let log = p.log_pmf(x).unwrap();
            if lin > 1e-300 {
                assert!((log.exp() - lin).abs() <= 1e-12 * lin, "{p:?} x={x}");
            }
            assert!(log.is_finite());
        }
    }
}

#[test]
fn batch_log_pmf_matches_pointwise() {
    let p = accidents_fit();
    let xs = [0, 3, 1, 7, 0, 80];
    let batch = p.log_pmfs(&xs).unwrap();
    for (x, b) in xs.iter().zip(batch) {
        assert!((p.log_pmf(*x).unwrap() - b).abs() < 1e-12);
    }
}

#[test]
fn table_sums_to_one() {
    for p in [swiss_fit(), accidents_fit(), NbrigParams::new(1.0, 2.0, 0.5).unwrap()] {
        let t = PmfTable::new(p, 200, Execution::Parallel).unwrap();
        assert!((t.total() - 1.0).abs() < 1e-8, "{p:?}: {}", t.total());
    }
}

#[test]
fn table_is_mode_independent() {
    let p = swiss_fit();
    let a = PmfTable::new(p, 150, Execution::Sequential).unwrap();
    let b = PmfTable::new(p, 150, Execution::Parallel).unwrap();
    assert_eq!(a, b);
}

#[test]
fn table_matches_dispatcher() {
    let p = swiss_fit();
    let t = PmfTable::new(p, 100, Execution::Parallel).unwrap();
    for (x, v) in t.probs.iter().enumerate() {
        let w = p.pmf(x as u64).unwrap();
        assert!((v - w).abs() <= 1e-12 * w, "x={x}");
    }
    assert!(t.methods.contains(&Method::Recursive));
    assert!(t.methods.contains(&Method::Mixture));
}

#[test]
fn truncated_table_leaves_little_mass() {
    let p = accidents_fit();
    let t = PmfTable::to_truncation(p, Execution::Parallel).unwrap();
    let mean = p.mean().unwrap();
    assert!(t.x_max() as f64 > 10.0 * (mean + 1.0));
    assert!(*t.probs.last().unwrap() < 1e-14);
    assert!(t.tail_mass < 1e-10);
    assert!(NbrigParams::new(1.0, 1.5, 1.0).unwrap().truncation_point().is_err());
}

#[test]
fn cdf_is_monotone_and_complements_survival() {
    for p in [swiss_fit(), accidents_fit(), NbrigParams::new(0.5, 0.5, 2.0).unwrap()] {
        assert_eq!(cdf(-1, &p).unwrap(), 0.0);
        assert_eq!(survival(-1, &p).unwrap(), 1.0);
        let mut last = 0.0;
        for x in 0..60 {
            let c = cdf(x, &p).unwrap();
            let s = survival(x, &p).unwrap();
            assert!(c >= last && c <= 1.0 + 1e-12);
            assert!((c + s - 1.0).abs() < 1e-10, "{p:?} x={x}");
            last = c;
        }
    }
}

#[test]
fn survival_keeps_relative_accuracy_in_the_tail() {
    let p = swiss_fit();
    let t = PmfTable::new(p, 80, Execution::Parallel).unwrap();
    // P(X > 40) by summing cells 41..=80 and the independent tail beyond 80
    let direct = compensated_sum(t.probs[41..].iter().copied().chain([t.tail_mass]));
    let s = survival(40, &p).unwrap();
    assert!((s - direct).abs() <= 1e-8 * direct, "{s} vs {direct}");
}

#[test]
fn rejects_invalid_parameters() {
    for (r, a, m) in [
        (0.0, 1.0, 1.0),
        (-1.0, 1.0, 1.0),
        (1.0, 0.0, 1.0),
        (1.0, 1.0, -2.0),
        (f64::NAN, 1.0, 1.0),
        (1.0, f64::INFINITY, 1.0),
    ] {
        assert!(NbrigParams::new(r, a, m).is_err(), "({r}, {a}, {m})");
    }
}

#[test]
fn sampler_frequencies_match_pmf() {
    let p = swiss_fit();
    let n = 1_000_000;
    let draws = p.sample(n, 99).unwrap();
    for x in 0..3u64 {
        let f = draws.iter().filter(|&&d| d == x).count() as f64 / n as f64;
        let q = p.pmf(x).unwrap();
        let se = (q * (1.0 - q) / n as f64).sqrt();
        assert!((f - q).abs() < 4.0 * se, "x={x}: {f} vs {q}");
    }
    let mean = draws.iter().map(|&d| d as f64).sum::<f64>() / n as f64;
    let se = (p.variance().unwrap() / n as f64).sqrt();
    assert!((mean - p.mean().unwrap()).abs() < 4.0 * se);
}

#[test]
fn sampler_is_reproducible_across_modes() {
    let p = accidents_fit();
    let a = p.sample_with(50_000, 5, Execution::Sequential).unwrap();
    let b = p.sample_with(50_000, 5, Execution::Parallel).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, p.sample(50_000, 6).unwrap());
}
