use rand::Rng;

use kcq_core::Error;
use kcq_core::keystream::{bits_of, LfsrSpec, SymbolSelector};
use kcq_core::mc::{trial_rng, Counts, Serial, TrialRunner};
use kcq_core::qk::*;
use kcq_core::qubit::{helstrom_error, BitConvention, QkConstellation};

fn config(m: usize, polarity: bool, n: usize, lambda: f64) -> QkConfig {
    QkConfig {
        constellation: QkConstellation::new(m, BitConvention::SemicircleBlocks, polarity).unwrap(),
        lfsr: LfsrSpec::primitive(8).unwrap(),
        key: bits_of(0b1011_0110, 8),
        key_mode: KeyMode::Running,
        data_len: n,
        channel_noise: lambda,
        verify_bits: 16,
        eve_angle: None,
        rng_seed: 42,
    }
}

#[test]
fn noiseless_bob_is_error_free() {
    let cfg = config(16, true, 2000, 0.0);
    for rec in run_qk_batch(&cfg, 5).unwrap() {
        assert_eq!(rec.bob_errors, 0);
        assert_eq!(rec.verify_verdict, Verdict::Accept);
    }
}

#[test]
fn trials_are_deterministic() {
    let cfg = config(8, true, 300, 0.05);
    assert_eq!(run_qk_trial(&cfg, 3).unwrap(), run_qk_trial(&cfg, 3).unwrap());
    assert_ne!(run_qk_trial(&cfg, 3).unwrap(), run_qk_trial(&cfg, 4).unwrap());
}

#[test]
fn record_counts_match_bits() {
    let cfg = config(8, false, 500, 0.2);
    let r = run_qk_trial(&cfg, 0).unwrap();
    let count = |v: &[bool]| v.iter().zip(&r.data_bits).filter(|(a, b)| a != b).count();
    assert_eq!(r.bob_errors, count(&r.bob_bits));
    assert_eq!(r.eve_errors, count(&r.eve_bits));
    assert_eq!(r.bob_bits.len(), 500);
}

#[test]
fn depolarizing_ber_is_half_lambda() {
    let cfg = config(8, true, 100_000, 0.1);
    let ber = simulate_bers(&cfg, None, 1, &Serial).unwrap().bob;
    assert!(ber.within_binomial_sigmas(0.05, 3.0), "{ber:?}");
}

#[test]
fn polarity_pins_eve_at_one_half() {
    let cfg = config(4, true, 100_000, 0.0);
    for angle in [0.0, 0.7, 2.0] {
        let e = eve_constant_individual_attack(&cfg, angle, 1, &Serial).unwrap();
        assert!(e.within_binomial_sigmas(0.5, 3.0), "{e:?}");
    }
}

#[test]
fn semicircle_attack_reaches_helstrom() {
    let cfg = config(4, false, 100_000, 0.0);
    let s = cfg.constellation.eve_states();
    let h = helstrom_error(&s.rho0, &s.rho1, 0.5).unwrap();
    let best = cfg.constellation.best_measurement_angle();
    let e = eve_constant_individual_attack(&cfg, best, 1, &Serial).unwrap();
    assert!(e.within_binomial_sigmas(h, 3.0), "{e:?} vs {h}");

    let mut cfg32 = config(32, false, 100_000, 0.0);
    cfg32.key = bits_of(0b1011_0110, 8);
    let e32 = eve_constant_individual_attack(&cfg32, cfg32.constellation.best_measurement_angle(), 1, &Serial).unwrap();
    assert!(e32.value > e.value);
}

#[test]
fn right_guess_always_wins_on_clean_channel() {
    let cfg = config(4, true, 500, 0.0);
    let truth = cfg.selectors().unwrap();
    let mut rng = trial_rng(1, 0);
    for _ in 0..20 {
        assert!(key_guess_success(&cfg, &truth, &cfg.key, &mut rng).unwrap());
    }
}

#[test]
fn right_guess_survives_noise_per_qubit() {
    let (n, lambda) = (20, 0.05);
    let cfg = config(4, true, n, lambda);
    let truth = cfg.selectors().unwrap();
    let trials = 200_000u64;
    let counts: Counts = Serial.run(9, trials, |_, rng, t: &mut Counts| {
        t.record(key_guess_success(&cfg, &truth, &cfg.key, rng).unwrap())
    });
    let p = (1.0 - lambda / 2.0_f64).powi(n as i32);
    assert!(counts.estimate().within_binomial_sigmas(p, 3.0));
}

#[test]
fn key_guess_cap() {
    let mut cfg = config(4, true, 10, 0.0);
    cfg.lfsr = LfsrSpec::primitive(21).unwrap();
    cfg.key = bits_of(1, 21);
    assert!(matches!(
        eve_key_guess_attack(&cfg, 10, &Serial),
        Err(Error::Tractability { .. })
    ));
}

#[test]
fn repeated_key_mode() {
    let mut cfg = config(8, true, 50, 0.0);
    cfg.key_mode = KeyMode::Repeated;
    cfg.key = std::vec![true, false, true];
    let sel = cfg.selectors().unwrap();
    assert!(sel.iter().all(|s| *s == SymbolSelector { basis_index: 1, polarity: Some(true) }));
    let r = run_qk_trial(&cfg, 0).unwrap();
    assert_eq!(r.bob_errors, 0);
}

#[test]
fn verification_basics() {
    let a = bits_of(0xdead_beef, 32);
    let kv = bits_of(0x5a, 8);
    for seed in 0..100 {
        assert_eq!(key_verify(&a, &a, &kv, seed).unwrap(), Verdict::Accept);
    }
    assert!(key_verify(&a, &a[..31], &kv, 0).is_err());
    // one hash bit: collisions half the time
    let e = false_accept_rate(64, 1, 40_000, 3, &Serial).unwrap();
    assert!(e.within_binomial_sigmas(0.5, 3.0), "{e:?}");
}

#[test]
fn toeplitz_is_linear_and_constant_on_diagonals() {
    let (out, inp) = (11, 150);
    let h = ToeplitzHash::new(out, inp, 77);
    let unit = |c: usize| (0..inp).map(|i| i == c).collect::<Vec<bool>>();
    let cols: Vec<Vec<bool>> = (0..inp).map(|c| h.hash(&unit(c))).collect();
    for r in 1..out {
        for c in 1..inp {
            assert_eq!(cols[c][r], cols[c - 1][r - 1], "entry ({r},{c})");
        }
    }
    let mut rng = trial_rng(5, 0);
    for _ in 0..20 {
        let k: Vec<bool> = (0..inp).map(|_| rng.random_bool(0.5)).collect();
        let naive: Vec<bool> = (0..out)
            .map(|r| (0..inp).fold(false, |acc, c| acc ^ (cols[c][r] & k[c])))
            .collect();
        assert_eq!(h.hash(&k), naive);
    }
}
