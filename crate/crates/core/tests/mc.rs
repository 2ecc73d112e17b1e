use rand::Rng;

use kcq_core::mc::*;

#[test]
fn trial_streams_are_reproducible_and_distinct() {
    let a: u64 = trial_rng(7, 3).random();
    let b: u64 = trial_rng(7, 3).random();
    let c: u64 = trial_rng(7, 4).random();
    let d: u64 = trial_rng(8, 3).random();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_ne!(a, d);
}

#[test]
fn serial_runner_covers_every_index_once() {
    let t: Moments = Serial.run(1, 10_000, |i, _, t: &mut Moments| t.push(i as f64));
    assert_eq!(t.n, 10_000);
    assert_eq!(t.sum, (0..10_000u64).sum::<u64>() as f64);
}

#[test]
fn binomial_gate() {
    let e = Estimate::binomial(500, 1000);
    assert!(e.within_binomial_sigmas(0.5, 3.0));
    assert!(!e.within_binomial_sigmas(0.3, 3.0));
}
