use kcq_core::metrics::*;
use kcq_core::special::binary_entropy;

#[test]
fn trial_complexity_examples() {
    for n in 1..12 {
        let size = 1usize << n;
        let p = ErrorProfile::new(vec![1.0 / size as f64; size]).unwrap();
        let want = libm::exp2((n - 1) as f64) + 0.5;
        assert!((trial_complexity(&p).unwrap() - want).abs() < 1e-9);
    }
    assert_eq!(trial_complexity(&ErrorProfile::new(vec![1.0]).unwrap()).unwrap(), 1.0);
    let p = ErrorProfile::new(vec![0.5, 0.25, 0.25]).unwrap();
    assert!((trial_complexity(&p).unwrap() - 1.75).abs() < 1e-15);
    assert!(ErrorProfile::new(vec![0.25, 0.75]).is_err());
    assert!(trial_complexity(&ErrorProfile { probs: vec![0.25, 0.75] }).is_err());
}

#[test]
fn p1_solver() {
    let p = solve_p1_given_info(100.0, 1.0).unwrap();
    assert!((p - 1.09e-2).abs() <= 0.05 * 1.09e-2, "{p}");
    // oracle: residual of the defining equation
    let lhs = binary_entropy(p) + (1.0 - p) * (100.0 + (1.0 - 2f64.powi(-100)).log2());
    assert!((lhs - 99.0).abs() < 1e-9);
    assert!((solve_p1_given_info(100.0, 100.0).unwrap() - 1.0).abs() < 1e-9);
    for n in [4.0, 10.0, 30.0] {
        assert!((solve_p1_given_info(n, 0.0).unwrap() - 2f64.powf(-n)).abs() < 1e-12);
    }
    assert!(solve_p1_given_info(10.0, 11.0).is_err());
    let mut prev = 0.0;
    for k in 0..=40 {
        let v = solve_p1_given_info(20.0, 0.5 * k as f64).unwrap();
        assert!(v >= prev);
        prev = v;
    }
}

#[test]
fn fano_examples() {
    assert_eq!(fano_bound(0.0, 10.0), 0.5);
    assert_eq!(fano_bound(10.0, 10.0), 0.0);
    assert!((fano_bound(5.0, 10.0) - 0.11003).abs() < 1e-5);
    for k in 0..20 {
        let i = 0.5 * k as f64;
        assert!((binary_entropy(fano_bound(i, 10.0)) - (1.0 - i / 10.0)).abs() < 1e-9);
    }
}

#[test]
fn profile_bound_examples() {
    let b = profile_bounds(3, 10).unwrap();
    assert_eq!(b.min_trial_complexity, 4.5);
    assert_eq!(b.max_info, 7.0);
    assert_eq!(trial_complexity(&b.extremal_profile).unwrap(), 4.5);
    assert_eq!(profile_bounds(0, 5).unwrap().min_trial_complexity, 1.0);
    assert!(profile_bounds(6, 5).is_err());
}

#[test]
fn information_examples() {
    // independent
    let mut probs = vec![0.0; 4];
    let px = [0.3, 0.7];
    let py = [0.6, 0.4];
    for x in 0..2 {
        for y in 0..2 {
            probs[x * 2 + y] = px[x] * py[y];
        }
    }
    let j = DiscreteJoint::new((2, 2, 1), probs).unwrap();
    assert!(j.query(InfoQuery::IXY).abs() < 1e-12);
    // X = Y uniform on 8 values
    let mut probs = vec![0.0; 64];
    for x in 0..8 {
        probs[x * 8 + x] = 0.125;
    }
    let j = DiscreteJoint::new((8, 8, 1), probs).unwrap();
    assert!((j.query(InfoQuery::IXY) - 3.0).abs() < 1e-12);
    assert!(DiscreteJoint::new((2, 2, 1), vec![0.5, 0.5, 0.5, -0.5]).is_err());
}

#[test]
fn lemma_checks_pass() {
    let r = lemma_checks(2000, 77);
    assert!(r.passes(1e-9), "{r:?}");
    // the bounds are actually approached, so the checks are not vacuous
    assert!(r.lemma3_violation > -1e-9 || r.lemma2_violation > -0.5);
}

#[test]
fn efficiency_and_splitting() {
    let e = keygen_efficiency(1.0, 32.0, 1024.0, 0.0, 16.0, 100.0, false).unwrap();
    assert!((e - 0.96859).abs() < 5e-6);
    let e = keygen_efficiency(1.0, 32.0, 1024.0, 0.0, 16.0, 100.0, true).unwrap();
    assert!((e - 0.99984).abs() < 5e-6);
    assert_eq!(keygen_efficiency(0.7, 0.0, 10.0, 0.0, 0.0, 3.0, false).unwrap(), 0.7);
    assert_eq!(splitting_cheat_probability(1.0, 2f64.powi(-10)).unwrap(), 2f64.powi(-10));
    assert_eq!(splitting_cheat_probability(0.0, 0.3).unwrap(), 0.0);
    assert!((splitting_cheat_probability(0.9, 0.01).unwrap() - 0.009).abs() < 1e-15);
    assert!(splitting_cheat_probability(1.2, 0.5).is_err());
}

#[test]
fn rate_window_examples() {
    let w = rate_window_check(0.1, 0.9, 0.5, 0.0, 1.0).unwrap();
    assert!(w.window_satisfied);
    assert!((w.lower_margin - 0.4).abs() < 1e-12 && (w.upper_margin - 0.4).abs() < 1e-12);
    assert!(!rate_window_check(0.1, 0.9, 0.9, 0.0, 1.0).unwrap().window_satisfied);
    let w = rate_window_check(0.0, 160.0, 0.5, 100.0, 200.0).unwrap();
    assert!(w.net_key_satisfied);
    assert!(!rate_window_check(0.0, 160.0, 0.5, 160.0, 200.0).unwrap().net_key_satisfied);
}
