use nbrig::dist::{dispersion_report, factorial_moment, mean, second_moment, variance};
use nbrig::special::compensated_sum;
use nbrig::{Execution, NbrigParams, PmfTable};

/// Grid points with `alpha > 4`, where mean and variance exist.
fn moment_grid() -> Vec<NbrigParams> {
    let mut out = Vec::new();
    for &r in &[0.5, 1.0, 3.4] {
        for &a in &[16.0, 24.87, 61.4973] {
            for &m in &[0.5, 2.0, 35.8961] {
                out.push(NbrigParams::new(r, a, m).unwrap());
            }
        }
    }
    out
}

/// `E[h(X)]` summed over a table twice the truncation point long. The
/// summand decays like `x^(-alpha/2 - 1)` up to slowly varying factors, so
/// this is only an oracle for `alpha` well above 4.
fn brute<F: Fn(f64) -> f64>(p: &NbrigParams, h: F) -> f64 {
    let t = PmfTable::new(*p, 2 * p.truncation_point().unwrap(), Execution::Parallel).unwrap();
    compensated_sum(t.probs.iter().enumerate().map(|(x, q)| h(x as f64) * q))
}

#[test]
fn moments_match_brute_force_sums() {
    for p in moment_grid() {
        let m1 = brute(&p, |x| x);
        let m2 = brute(&p, |x| x * x);
        let fm2 = brute(&p, |x| x * (x - 1.0));
        let mu = mean(&p).unwrap();
        assert!((mu - m1).abs() <= 1e-8 * m1, "{p:?}: mean {mu} vs {m1}");
        assert!((second_moment(&p).unwrap() - m2).abs() <= 1e-7 * m2, "{p:?}");
        assert!((factorial_moment(2, &p).unwrap() - fm2).abs() <= 1e-7 * fm2, "{p:?}");
        let v = m2 - m1 * m1;
        assert!((variance(&p).unwrap() - v).abs() <= 1e-6 * v, "{p:?}");
    }
}

#[test]
fn factorial_moment_identities() {
    for p in moment_grid() {
        assert_eq!(factorial_moment(0, &p).unwrap(), 1.0);
        let mu = mean(&p).unwrap();
        assert!((factorial_moment(1, &p).unwrap() - mu).abs() <= 1e-14 * mu);
        let via_fm = factorial_moment(2, &p).unwrap() + mu - mu * mu;
        let v = variance(&p).unwrap();
        assert!((via_fm - v).abs() <= 1e-9 * v, "{p:?}");
    }
}

#[test]
fn third_factorial_moment_matches_brute_force() {
    let p = NbrigParams::new(2.03, 24.87, 17.42).unwrap();
    let fm3 = brute(&p, |x| x * (x - 1.0) * (x - 2.0));
    assert!((factorial_moment(3, &p).unwrap() - fm3).abs() <= 1e-7 * fm3);
}

#[test]
fn moments_need_enough_mixing_tail() {
    let p = NbrigParams::new(1.0, 1.5, 1.0).unwrap();
    assert!(mean(&p).is_err());
    let p = NbrigParams::new(1.0, 3.0, 1.0).unwrap();
    assert!(mean(&p).is_ok());
    assert!(variance(&p).is_err());
    assert!(factorial_moment(2, &p).is_err());
}

#[test]
fn overdispersed_beyond_matched_negative_binomial() {
    for p in moment_grid() {
        let d = dispersion_report(&p).unwrap();
        assert!(d.ratio > 1.0);
        assert!(d.variance > d.nb_matched_variance);
        assert!(d.nb_matched_variance > d.mean);
        // the excess over the matched NB is (r + r^2) Var(e^λ)
        let r = p.r();
        let gap = (r + r * r) * p.mixing_exp_variance().unwrap();
        let got = d.variance - d.nb_matched_variance;
        assert!((got - gap).abs() <= 1e-6 * gap.max(1e-300), "{p:?}: {got} vs {gap}");
    }
}

#[test]
fn dispersion_ratio_decreases_towards_the_negative_binomial_limit() {
    let (r, m) = (3.4, 2.0_f64);
    let limit = (1.0 / m).exp();
    let mut last = f64::INFINITY;
    for &a in &[1e2, 1e4, 1e6] {
        let d = dispersion_report(&NbrigParams::new(r, a, m).unwrap()).unwrap();
        assert!(d.ratio < last && d.ratio > limit, "alpha={a}: {}", d.ratio);
        last = d.ratio;
    }
    assert!((last - limit) / limit < 1e-3);
}
