use kcq_core::alpha_eta::{key_hiding_distance, AlphaEtaConfig, Dsr};
use kcq_core::cppm::{cppm_modulate, GivensMesh};
use kcq_core::keystream::{berlekamp_massey, bits_of, chunk_running_key, expand_key, LfsrSpec, SymbolSelector};
use kcq_core::linalg::unitarity_defect;
use kcq_core::metrics::{fano_bound, solve_p1_given_info};
use kcq_core::qubit::{helstrom_error, trace_distance, DensityMatrix2};
use kcq_core::qumode::{coherent_helstrom, cutoff_rule, CoherentAmplitude};
use kcq_core::special::binary_entropy;
use proptest::prelude::*;

fn bloch() -> impl Strategy<Value = DensityMatrix2> {
    (0.0..=1.0f64, 0.0..std::f64::consts::PI, 0.0..(2.0 * std::f64::consts::PI)).prop_map(|(r, t, p)| {
        DensityMatrix2::from_bloch([r * t.sin() * p.cos(), r * t.sin() * p.sin(), r * t.cos()])
    })
}

fn lfsr_with_seed() -> impl Strategy<Value = (LfsrSpec, Vec<bool>)> {
    (3u32..=16).prop_flat_map(|d| {
        let taps = proptest::collection::vec(1u32..d, 0..4);
        let seed = proptest::collection::vec(any::<bool>(), d as usize)
            .prop_filter("nonzero seed", |s| s.iter().any(|&b| b));
        (taps, seed).prop_map(move |(mut t, s)| {
            t.push(d);
            (LfsrSpec::new(d, &t).unwrap(), s)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn trace_distance_is_a_metric(a in bloch(), b in bloch(), c in bloch()) {
        let ab = trace_distance(&a, &b).unwrap();
        let ba = trace_distance(&b, &a).unwrap();
        let ac = trace_distance(&a, &c).unwrap();
        let cb = trace_distance(&c, &b).unwrap();
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!((0.0..=2.0 + 1e-12).contains(&ab));
        prop_assert!(ab <= ac + cb + 1e-12);
        prop_assert!(trace_distance(&a, &a).unwrap() < 1e-12);
    }

    #[test]
    fn helstrom_is_symmetric_and_bounded(a in bloch(), b in bloch(), p in 0.0..=1.0f64) {
        let e = helstrom_error(&a, &b, p).unwrap();
        let f = helstrom_error(&b, &a, 1.0 - p).unwrap();
        prop_assert!((e - f).abs() < 1e-12);
        prop_assert!(e >= -1e-12 && e <= p.min(1.0 - p) + 1e-12);
    }

    #[test]
    fn selectors_round_trip(bits in proptest::collection::vec(any::<bool>(), 0..40), logm in 2u32..6, pol in any::<bool>()) {
        let m = 1usize << logm;
        let per = (logm - 1) as usize + pol as usize;
        let bits = &bits[..bits.len() - bits.len() % per];
        let sels = chunk_running_key(bits, m, pol).unwrap();
        let back: Vec<bool> = sels.iter().flat_map(|s: &SymbolSelector| s.to_bits(m)).collect();
        prop_assert_eq!(back, bits.to_vec());
        prop_assert!(sels.iter().all(|s| s.basis_index < m / 2));
    }

    #[test]
    fn berlekamp_massey_recovers_any_lfsr((spec, seed) in lfsr_with_seed()) {
        let d = spec.degree as usize;
        let out = expand_key(&spec, &seed, 4 * d).unwrap().bits;
        let lc = berlekamp_massey(&out[..2 * d]);
        prop_assert!(lc.linear_complexity <= d);
        prop_assert_eq!(lc.regenerate(&out, 4 * d), out);
    }

    #[test]
    fn mesh_is_unitary_and_energy_preserving(key in 1u64..0xFFFF, logm in 1u32..7, i in 0usize..64, s in 0.0..20.0f64) {
        let m = 1usize << logm;
        let mesh = GivensMesh::from_key(&LfsrSpec::primitive(16).unwrap(), &bits_of(key, 16), m).unwrap();
        prop_assert!(unitarity_defect(&mesh.to_matrix()) <= 1e-12);
        let x = cppm_modulate(i % m, &mesh, s).unwrap();
        prop_assert!((x.total_energy() - s).abs() <= 1e-10 * (1.0 + s));
    }

    #[test]
    fn coherent_helstrom_decreases_with_separation(a in 0.0..3.0f64, extra in 0.01..2.0f64) {
        let z = CoherentAmplitude::new(0.0, 0.0);
        let near = coherent_helstrom(z, CoherentAmplitude::new(a, 0.0));
        let far = coherent_helstrom(z, CoherentAmplitude::new(a + extra, 0.0));
        prop_assert!(far <= near);
    }

    #[test]
    fn p1_is_monotone_in_information(n in 2.0..60.0f64, a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(solve_p1_given_info(n, lo * n).unwrap() <= solve_p1_given_info(n, hi * n).unwrap() + 1e-12);
    }

    #[test]
    fn fano_inverts_entropy(frac in 0.0..=1.0f64, n in 1.0..200.0f64) {
        let b = fano_bound(frac * n, n);
        prop_assert!(b <= 0.5);
        prop_assert!((binary_entropy(b) - (1.0 - frac)).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn key_hiding_ignores_global_phase(rot in 0.0..(2.0 * std::f64::consts::PI), a in 0usize..4, b in 0usize..4) {
        let mut cfg = AlphaEtaConfig {
            m: 8,
            s: 2.0,
            dsr: Dsr::None,
            polarity: false,
            lfsr: LfsrSpec::primitive(8).unwrap(),
            key: bits_of(1, 8),
            data_len: 1,
            transmittance: 1.0,
            phase_offset: 0.0,
            rng_seed: 0,
        };
        let sel = |i| SymbolSelector { basis_index: i, polarity: None };
        let cut = cutoff_rule(2.0);
        let d0 = key_hiding_distance(&cfg, &sel(a), &sel(b), cut).unwrap();
        cfg.phase_offset = rot;
        let d1 = key_hiding_distance(&cfg, &sel(a), &sel(b), cut).unwrap();
        prop_assert!((d0 - d1).abs() < 1e-9);
    }
}

#[test]
fn bundled_polynomials_are_primitive() {
    for d in 2..=20 {
        let spec = LfsrSpec::primitive(d).unwrap();
        assert!(spec.is_maximal().unwrap(), "degree {d}");
    }
}
