use core::f64::consts::PI;

use rand::Rng;

use kcq_core::alpha_eta::*;
use kcq_core::keystream::{LfsrSpec, SymbolSelector};
use kcq_core::mc::{trial_rng, Serial};
use kcq_core::qumode::cutoff_rule;
use kcq_core::special::{q_function, wrap_angle};

fn config(m: usize, s: f64, dsr: Dsr, polarity: bool) -> AlphaEtaConfig {
    AlphaEtaConfig {
        m,
        s,
        dsr,
        polarity,
        lfsr: LfsrSpec::primitive(16).unwrap(),
        key: kcq_core::keystream::bits_of(0xACE1, 16),
        data_len: 64,
        transmittance: 1.0,
        phase_offset: 0.0,
        rng_seed: 99,
    }
}

fn sel(basis: usize, pol: Option<bool>) -> SymbolSelector {
    SymbolSelector {
        basis_index: basis,
        polarity: pol,
    }
}

#[test]
fn modulation_mapping() {
    let c = config(16, 4.0, Dsr::None, true);
    let a = alpha_eta_modulate_with(true, &sel(3, Some(false)), &c, 0.0).unwrap();
    let expect = 2.0 * PI * 3.0 / 16.0 + PI;
    assert!(wrap_angle(a.phase() - expect).abs() < 1e-12);
    assert!((a.photon_number() - 4.0).abs() < 1e-12);
    for b in 0..8 {
        for p in [false, true] {
            let s = sel(b, Some(p));
            let x = alpha_eta_modulate_with(false, &s, &c, 0.0).unwrap();
            let y = alpha_eta_modulate_with(true, &s, &c, 0.0).unwrap();
            assert!((x.0 + y.0).norm() < 1e-12);
        }
    }
    assert!(alpha_eta_modulate_with(false, &sel(8, None), &c, 0.0).is_err());
}

#[test]
fn full_circle_dsr_phase_is_uniform() {
    // one-sample Kolmogorov–Smirnov against U[0, 2π)
    let c = config(16, 4.0, Dsr::FullCircle, true);
    let mut rng = trial_rng(3, 0);
    let n = 100_000;
    let mut u: Vec<f64> = (0..n)
        .map(|_| {
            let a = alpha_eta_modulate(false, &sel(5, Some(true)), &c, &mut rng).unwrap();
            a.phase().rem_euclid(2.0 * PI) / (2.0 * PI)
        })
        .collect();
    u.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let d = u
        .iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / n as f64 - x).max(x - i as f64 / n as f64))
        .fold(0.0, f64::max);
    // 1% critical value 1.63/√n
    assert!(d < 1.63 / (n as f64).sqrt(), "D = {d}");
}

#[test]
fn homodyne_ber_at_nine_photons_is_q_of_six() {
    assert!((bob_homodyne_ber_analytic(9.0, Dsr::None) - 9.865_876e-10).abs() < 1e-15);
    let c = config(16, 0.0, Dsr::None, true);
    let e = bob_ber(&c, AlphaEtaReceiver::Homodyne, 2000, &Serial).unwrap();
    assert!(e.within_binomial_sigmas(0.5, 3.0));
}

#[test]
fn homodyne_ber_matches_q_without_dsr() {
    let c = config(16, 1.0, Dsr::None, true);
    let e = bob_ber(&c, AlphaEtaReceiver::Homodyne, 4000, &Serial).unwrap();
    assert!(e.within_binomial_sigmas(q_function(2.0), 3.0), "{e:?}");
}

#[test]
fn semicircle_dsr_raises_homodyne_error() {
    let c = config(16, 4.0, Dsr::Semicircle, true);
    let want = bob_homodyne_ber_analytic(4.0, Dsr::Semicircle);
    assert!(want > bob_homodyne_ber_analytic(4.0, Dsr::None));
    let e = bob_ber(&c, AlphaEtaReceiver::Homodyne, 4000, &Serial).unwrap();
    assert!(e.within_binomial_sigmas(want, 3.0), "{e:?} vs {want}");
}

#[test]
fn kennedy_model_matches_half_exp_minus_four_s() {
    let mut c = config(16, 1.0, Dsr::None, true);
    c.transmittance = 0.5;
    let want = 0.5 * (-4.0 * 0.5_f64).exp();
    assert!((bob_kennedy_ber_analytic(0.5, Dsr::None) - want).abs() < 1e-15);
    let e = bob_ber(&c, AlphaEtaReceiver::KennedyModel, 4000, &Serial).unwrap();
    assert!(e.within_binomial_sigmas(want, 3.0), "{e:?}");
}

#[test]
fn analytic_dsr_averages_agree() {
    let a = bob_homodyne_ber_analytic(4.0, Dsr::Semicircle);
    let b = bob_homodyne_ber_analytic(4.0, Dsr::Discretized { count: 720 });
    assert!((a - b).abs() < 1e-6);
    assert!((bob_kennedy_ber_analytic(3.0, Dsr::FullCircle) - 0.5).abs() < 1e-9);
}

fn attack_ber(c: &AlphaEtaConfig, key: &[SymbolSelector], n: usize, seed: u64) -> (f64, usize) {
    let mut rng = trial_rng(seed, 0);
    let truth = sel(0, None);
    let data: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
    let amps: Vec<_> = data
        .iter()
        .map(|&x| alpha_eta_modulate(x, &truth, c, &mut rng).unwrap())
        .collect();
    let r = eve_phase_attack(&amps, &data, &[key.to_vec()], c, &mut rng).unwrap();
    (r.ber_by_trial_key[0], n)
}

#[test]
fn eve_with_true_key_gets_heterodyne_error() {
    let c = config(32, 2.0, Dsr::None, false);
    let n = 200_000;
    let (ber, _) = attack_ber(&c, &std::vec![sel(0, None); n], n, 7);
    let want = q_function(2.0);
    let sigma = (want * (1.0 - want) / n as f64).sqrt();
    assert!((ber - want).abs() < 3.0 * sigma, "{ber} vs {want}");
    let c0 = config(32, 0.0, Dsr::None, false);
    let (ber0, _) = attack_ber(&c0, &std::vec![sel(0, None); n], n, 8);
    assert!((ber0 - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt());
}

#[test]
fn eve_with_uniformly_wrong_basis_sees_half() {
    let c = config(32, 25.0, Dsr::None, false);
    let n = 150_000;
    let mut rng = trial_rng(9, 1);
    let key: Vec<_> = (0..n).map(|_| sel(rng.random_range(1..16), None)).collect();
    let (ber, _) = attack_ber(&c, &key, n, 10);
    assert!((ber - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt(), "{ber}");
    // brute force over offsets: error(k) + error(M/2 − k) = 1
    let per_offset: Vec<f64> = (1..16)
        .map(|k| attack_ber(&c, &std::vec![sel(k, None); 20_000], 20_000, 100 + k as u64).0)
        .collect();
    let mean = per_offset.iter().sum::<f64>() / 15.0;
    assert!((mean - 0.5).abs() < 0.01, "{per_offset:?}");
}

#[test]
fn wrong_keys_do_no_better_than_bob() {
    // one long block: each symbol sits on a fresh keystream position, so
    // a wrong key's error count is binomial(n, 1/2)
    for s in [0.5, 2.0, 8.0] {
        let mut c = config(16, s, Dsr::None, true);
        c.data_len = 60_000;
        let keys: Vec<Vec<bool>> = (1..=8u64).map(|k| kcq_core::keystream::bits_of(0x1357 * k, 16)).collect();
        let t = simulate_phase_attack(&c, &keys, 1, &Serial).unwrap();
        let bob = t.bob.estimate();
        for e in &t.eve {
            let e = e.estimate();
            assert!(e.value >= bob.value, "S={s}");
            assert!(e.within_binomial_sigmas(0.5, 3.0), "S={s}: {e:?}");
        }
    }
}

#[test]
fn key_hiding_full_circle() {
    let c = config(16, 4.0, Dsr::FullCircle, true);
    let cut = cutoff_rule(4.0);
    for (a, b) in [(0, 1), (2, 7), (3, 4)] {
        let d = key_hiding_distance(&c, &sel(a, Some(false)), &sel(b, Some(true)), cut).unwrap();
        assert!(d <= 1e-10, "{d}");
    }
}

#[test]
fn key_hiding_semicircle() {
    for dsr in [Dsr::Semicircle, Dsr::Discretized { count: 720 }] {
        let c = config(16, 4.0, dsr, true);
        let d = key_hiding_distance(&c, &sel(0, None), &sel(5, None), cutoff_rule(4.0)).unwrap();
        assert!(d <= 1e-3, "{dsr:?}: {d}");
    }
}

#[test]
fn no_dsr_reveals_basis() {
    let c = config(4, 4.0, Dsr::None, true);
    let d = key_hiding_distance(&c, &sel(0, None), &sel(1, None), cutoff_rule(4.0)).unwrap();
    assert!(d > 0.1, "{d}");
    // oracle: two-point mixtures |±α⟩ vs |±iα⟩ have overlap structure that
    // the Gram matrix captures; equal-basis distance is zero
    let z = key_hiding_distance(&c, &sel(1, Some(true)), &sel(1, Some(false)), cutoff_rule(4.0)).unwrap();
    assert!(z < 1e-12);
}

#[test]
fn averaged_state_is_a_density_matrix() {
    let c = config(8, 3.0, Dsr::Discretized { count: 32 }, true);
    let rho = averaged_symbol_state(&c, &sel(2, None), cutoff_rule(3.0)).unwrap();
    assert!(kcq_core::linalg::hermiticity_defect(&rho) < 1e-14);
    let tr: f64 = (0..rho.nrows()).map(|i| rho[(i, i)].re).sum();
    assert!((tr - 1.0).abs() < 1e-8);
    assert!(kcq_core::linalg::hermitian_eigenvalues(&rho).iter().all(|&e| e > -1e-12));
}

#[test]
fn discretized_count_is_checked() {
    let mut c = config(8, 3.0, Dsr::Discretized { count: 8 }, true);
    assert!(c.validate().is_err());
    c.dsr = Dsr::Discretized { count: 16 };
    assert!(c.validate().is_ok());
}
