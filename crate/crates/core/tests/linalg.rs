use kcq_core::Complex64;
use kcq_core::linalg::*;

#[test]
fn trace_norm_of_pauli_z_is_two() {
    let z = CMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(-1.0, 0.0),
        ],
    );
    assert!((hermitian_trace_norm(&z) - 2.0).abs() < 1e-14);
}

#[test]
fn complex_hermitian_spectrum() {
    // [[2, i], [-i, 2]] has eigenvalues 1 and 3
    let m = CMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(2.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(2.0, 0.0),
        ],
    );
    let mut e = hermitian_eigenvalues(&m);
    e.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert!((e[0] - 1.0).abs() < 1e-12 && (e[1] - 3.0).abs() < 1e-12);
}
