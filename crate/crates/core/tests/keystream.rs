use std::collections::BTreeSet;

use kcq_core::Error;
use kcq_core::keystream::*;

fn seed(s: &str) -> Vec<bool> {
    s.bytes().map(|c| c == b'1').collect()
}

#[test]
fn degree_four_stream_has_period_fifteen() {
    let spec = LfsrSpec::new(4, &[4, 1]).unwrap();
    let k = expand_key(&spec, &seed("0001"), 30).unwrap();
    // oracle: walk the state graph from every nonzero state
    let mut cycle_lengths = BTreeSet::new();
    for s in 1u64..16 {
        let sd = bits_of(s, 4);
        cycle_lengths.insert(spec.period(&sd).unwrap());
    }
    assert_eq!(cycle_lengths.into_iter().collect::<Vec<_>>(), [15]);
    assert_eq!(k.bits[..15], k.bits[15..]);
    let shortest = (1..=15).find(|&p| (0..30 - p).all(|i| k.bits[i] == k.bits[i + p]));
    assert_eq!(shortest, Some(15));
}

#[test]
fn degree_three_visits_all_nonzero_states() {
    let spec = LfsrSpec::new(3, &[3, 1]).unwrap();
    let mut lfsr = Lfsr::new(&spec, &seed("001")).unwrap();
    let mut seen = BTreeSet::new();
    for _ in 0..7 {
        seen.insert(lfsr.state());
        lfsr.step();
    }
    assert_eq!(seen, (1u64..8).collect());
}

#[test]
fn zero_seed_is_rejected() {
    let spec = LfsrSpec::new(4, &[4, 1]).unwrap();
    assert_eq!(expand_key(&spec, &seed("0000"), 5), Err(Error::DegenerateSeed));
    assert!(matches!(
        expand_key(&spec, &seed("001"), 5),
        Err(Error::SeedLength { .. })
    ));
}

#[test]
fn empty_length_is_valid() {
    let spec = LfsrSpec::new(4, &[4, 1]).unwrap();
    assert!(expand_key(&spec, &seed("1000"), 0).unwrap().is_empty());
}

#[test]
fn spec_validation() {
    assert!(LfsrSpec::new(4, &[1]).is_err());
    assert!(LfsrSpec::new(4, &[]).is_err());
    assert!(LfsrSpec::new(1, &[1]).is_err());
    assert!(LfsrSpec::new(4, &[4, 5]).is_err());
}

#[test]
fn seed_is_stream_prefix() {
    let spec = LfsrSpec::primitive(8).unwrap();
    let s = seed("10110010");
    assert_eq!(expand_key(&spec, &s, 8).unwrap().bits, s);
}

#[test]
fn chunking_examples() {
    let sel = chunk_running_key(&seed("1011"), 4, true).unwrap();
    assert_eq!(
        sel,
        [
            SymbolSelector { basis_index: 0, polarity: Some(true) },
            SymbolSelector { basis_index: 1, polarity: Some(true) },
        ]
    );
    let sel = chunk_running_key(&seed("011011"), 8, false).unwrap();
    let idx: Vec<_> = sel.iter().map(|s| s.basis_index).collect();
    assert_eq!(idx, [1, 2, 3]);
    assert_eq!(
        chunk_running_key(&seed("01"), 6, false),
        Err(Error::UnsupportedConstellation(6))
    );
    assert!(matches!(
        chunk_running_key(&seed("011"), 8, false),
        Err(Error::LengthMismatch { .. })
    ));
}

#[test]
fn lazy_selectors_match_eager_chunking() {
    let spec = LfsrSpec::primitive(9).unwrap();
    let s = bits_of(0x155, 9);
    let k = expand_key(&spec, &s, 300).unwrap();
    let eager = chunk_running_key(&k.bits, 16, true).unwrap();
    let lazy: Vec<_> = Selectors::new(Lfsr::new(&spec, &s).unwrap(), 16, true)
        .unwrap()
        .take(eager.len())
        .collect();
    assert_eq!(eager, lazy);
}

#[test]
fn berlekamp_massey_recovers_degree_four() {
    let spec = LfsrSpec::new(4, &[4, 1]).unwrap();
    let k = expand_key(&spec, &seed("0001"), 30).unwrap();
    let lc = berlekamp_massey(&k.bits[..8]);
    assert_eq!(lc.linear_complexity, 4);
    assert_eq!(lc.regenerate(&k.bits, 30), k.bits);
    assert_eq!(lc.to_spec(), Some(spec));
}

#[test]
fn berlekamp_massey_edge_sequences() {
    let zeros = std::vec![false; 12];
    assert_eq!(berlekamp_massey(&zeros).linear_complexity, 0);

    for len in 1..20 {
        let mut s = std::vec![false; len];
        s[0] = true;
        let lc = berlekamp_massey(&s);
        assert_eq!(lc.regenerate(&s, len), s);
        // trailing impulse: 0...01 has complexity equal to its length
        let mut t = std::vec![false; len];
        t[len - 1] = true;
        let lt = berlekamp_massey(&t);
        assert_eq!(lt.linear_complexity, len);
        assert_eq!(lt.regenerate(&t, len), t);
    }
}

#[test]
fn hex_round_trip() {
    let spec = LfsrSpec::primitive(5).unwrap();
    let k = expand_key(&spec, &seed("10000"), 13).unwrap();
    let back = bits_from_hex(&k.to_hex(), 13).unwrap();
    assert_eq!(back, k.bits);
    assert_eq!(bits_to_hex(&seed("10100101")), "a5");
}
