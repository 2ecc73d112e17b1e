use core::f64::consts::PI;

use kcq_core::qubit::*;
use kcq_core::{Complex64, Error};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn circle_states() {
    let n = state_on_circle(0.0);
    assert!(close(n.entries[0][0].re, 1.0, 1e-15) && close(n.entries[1][1].re, 0.0, 1e-15));
    let s = state_on_circle(PI);
    assert!(close(s.entries[1][1].re, 1.0, 1e-15));
    assert!(close(trace_distance(&n, &s).unwrap(), 2.0, 1e-12));
    let e = state_on_circle(PI / 2.0);
    assert!(close(e.entries[0][1].re, 0.5, 1e-15) && close(e.entries[1][0].re, 0.5, 1e-15));
    assert!(close(e.purity(), 1.0, 1e-15));
}

#[test]
fn trace_distance_examples() {
    let a = state_on_circle(0.3);
    assert_eq!(trace_distance(&a, &a).unwrap(), 0.0);
    // oracle: explicit eigenvalues of the difference [[1/2, -1/2], [-1/2, -1/2]]
    // are ±1/√2
    let d = trace_distance(&state_on_circle(0.0), &state_on_circle(PI / 2.0)).unwrap();
    assert!(close(d, 2.0 * (PI / 4.0).sin(), 1e-12));
    assert!(close(d, 1.414_213_562_373_095, 1e-12));
}

#[test]
fn rejects_non_hermitian() {
    let mut m = state_on_circle(0.2);
    m.entries[0][1] = Complex64::new(0.1, 0.3);
    assert!(matches!(
        trace_distance(&m, &state_on_circle(0.0)),
        Err(Error::InvariantViolation(_))
    ));
    assert!(DensityMatrix2::new(m.entries).is_err());
}

#[test]
fn helstrom_examples() {
    let a = state_on_circle(1.0);
    let b = state_on_circle(1.0 + PI);
    assert!(close(helstrom_error(&a, &a, 0.5).unwrap(), 0.5, 1e-15));
    assert!(close(helstrom_error(&a, &b, 0.5).unwrap(), 0.0, 1e-15));
    assert!(close(helstrom_error(&a, &state_on_circle(0.3), 1.0).unwrap(), 0.0, 1e-15));
    assert!(matches!(helstrom_error(&a, &b, 1.5), Err(Error::Range { .. })));
}

#[test]
fn cipher_state_is_maximally_mixed() {
    for m in [4, 8, 16, 32] {
        for conv in [BitConvention::SemicircleBlocks, BitConvention::AlternatingNeighbors] {
            for pol in [false, true] {
                let s = QkConstellation::new(m, conv, pol).unwrap().eve_states();
                let d = trace_distance(&s.cipher, &DensityMatrix2::maximally_mixed()).unwrap();
                assert!(d <= 1e-12, "M={m} {conv:?} pol={pol}: {d}");
            }
        }
    }
}

#[test]
fn polarity_hides_the_bit() {
    let c = QkConstellation::new(8, BitConvention::SemicircleBlocks, true).unwrap();
    let s = c.eve_states();
    assert!(close(helstrom_error(&s.rho0, &s.rho1, 0.5).unwrap(), 0.5, 1e-12));
}

#[test]
fn semicircle_m4_states_by_hand() {
    // oracle: ρ₀ = average of circle points 0 and π/2, Bloch (1/2, 0, 1/2);
    // ρ₁ is its negative, so ‖ρ₁ − ρ₀‖₁ = |r₀ − r₁| = √2.
    let c = QkConstellation::new(4, BitConvention::SemicircleBlocks, false).unwrap();
    let s = c.eve_states();
    let d = trace_distance(&s.rho0, &s.rho1).unwrap();
    assert!(close(d, 2.0_f64.sqrt(), 1e-12));
    let num = eve_qubit_ber(4, EveBerMode::Numeric(c)).unwrap();
    assert!(close(num, 0.5 - 2.0_f64.sqrt() / 4.0, 1e-12));
}

#[test]
fn alternating_classes_coincide() {
    let c = QkConstellation::new(8, BitConvention::AlternatingNeighbors, false).unwrap();
    let s = c.eve_states();
    assert!(trace_distance(&s.rho0, &s.rho1).unwrap() < 1e-12);
}

#[test]
fn eq1_values() {
    // direct evaluation: 1 − cos(π/4) = 0.292893, 2 sin²(π/4) = 1
    let v = eq1_eve_ber(4).unwrap();
    assert!(close(v, 0.5 - (1.0 - (PI / 4.0).cos()).sqrt() / 4.0, 1e-15));
    assert!(close(v, 0.364_70, 5e-6));
    let big = eq1_eve_ber(1000).unwrap();
    assert!(close(big, 0.499_50, 5e-6));
    assert!(close(big, 0.5 - 1.0 / 2000.0, 1e-6));
    assert!(eve_qubit_ber(7, EveBerMode::Formula).is_err());
}

#[test]
fn eq1_is_increasing_and_bounded() {
    let mut prev = 0.0;
    for m in (4..=512).step_by(2) {
        let v = eq1_eve_ber(m).unwrap();
        assert!(v > prev && v < 0.5);
        prev = v;
    }
}

#[test]
fn point_encoding() {
    let c = QkConstellation::new(8, BitConvention::SemicircleBlocks, false).unwrap();
    assert_eq!(c.point_for(3, false).unwrap(), 3);
    assert_eq!(c.point_for(3, true).unwrap(), 7);
    assert!(c.point_for(4, true).is_err());
    let a = QkConstellation::new(6, BitConvention::AlternatingNeighbors, false).unwrap();
    for j in 0..3 {
        for b in [false, true] {
            let l = a.point_for(j, b).unwrap();
            assert_eq!(a.bit_of_point(l), b);
            assert!(l == j || l == j + 3);
        }
    }
    let a8 = QkConstellation::new(8, BitConvention::AlternatingNeighbors, false).unwrap();
    assert!(a8.point_for(0, false).is_err());
}

#[test]
fn best_angle_attains_helstrom() {
    for m in [4, 8, 16] {
        let c = QkConstellation::new(m, BitConvention::SemicircleBlocks, false).unwrap();
        let s = c.eve_states();
        let h = helstrom_error(&s.rho0, &s.rho1, 0.5).unwrap();
        assert!(close(c.constant_attack_ber(c.best_measurement_angle()), h, 1e-12));
        for k in 0..360 {
            let a = k as f64 * PI / 180.0;
            assert!(c.constant_attack_ber(a) >= h - 1e-12);
        }
    }
}
