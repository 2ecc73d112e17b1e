//! Runs an experiment config point by point and turns the protocol results
//! into gated report rows.

use kcq_core::alpha_eta::{
    bob_ber, bob_homodyne_ber_analytic, bob_kennedy_ber_analytic, key_hiding_distance, simulate_phase_attack,
    AlphaEtaConfig, AlphaEtaReceiver, Dsr,
};
use kcq_core::cppm::{
    bob_block_error, direct_detection_error, eve_block_error, error_profile, heterodyne_bound_default,
    heterodyne_error_lower_bound, heterodyne_error_lower_bound_max, key_leak_given_plaintext, CppmConfig,
    ExponentConvention,
};
use kcq_core::keystream::{berlekamp_massey, bits_from_hex, bits_of, expand_key, LfsrSpec, SymbolSelector};
use kcq_core::mc::{derive_seed, trial_rng, Estimate, TrialRunner};
use kcq_core::metrics::{lemma_checks, solve_p1_given_info, trial_complexity, ErrorProfile};
use kcq_core::qk::{eve_key_guess_attack, false_accept_rate, run_qk_batch, simulate_bers, KeyMode, QkConfig, Verdict};
use kcq_core::qubit::{compare_eq1, state_on_circle, trace_distance, BitConvention, DensityMatrix2, QkConstellation};
use kcq_core::qumode::{
    bpsk_ber, cutoff_rule, heterodyne_bpsk_ber, heterodyne_bpsk_ber_mc, phase_pom_bpsk_ber, phase_pom_distribution,
    BpskReceiver, CoherentAmplitude,
};
use rand::Rng;
use serde::Deserialize;

use crate::config::{decode_at, ExperimentConfig, Protocol, SweepPoint};
use crate::error::{HarnessError, Result};
use crate::report::{Gate, Measurement, ReportRow};

/// Stream label for drawing seed keys, kept apart from the trial streams.
const KEY_LABEL: u64 = 0x6b65_7973;

const THREE_SIGMA: f64 = 3.0;

fn bad(path: &str, msg: impl std::fmt::Display) -> HarnessError {
    HarnessError::config(format!("params.{path}"), msg)
}

/// `keyHex` when given, else a uniform nonzero key drawn from the point seed.
fn seed_key(key_bits: u32, key_hex: Option<&str>, seed: u64) -> Result<Vec<bool>> {
    if key_bits == 0 || key_bits > 64 {
        return Err(bad("keyBits", format!("{key_bits} not in 1..=64")));
    }
    if let Some(h) = key_hex {
        let k = bits_from_hex(h, key_bits as usize).map_err(|e| bad("keyHex", e))?;
        if k.iter().all(|&b| !b) {
            return Err(bad("keyHex", "all-zero key"));
        }
        return Ok(k);
    }
    let mut rng = trial_rng(derive_seed(seed, KEY_LABEL), 0);
    loop {
        let k: Vec<bool> = (0..key_bits).map(|_| rng.random_bool(0.5)).collect();
        if k.iter().any(|&b| b) {
            return Ok(k);
        }
    }
}

/// `count` distinct nonzero keys different from `avoid`.
fn other_keys(key_bits: u32, avoid: &[bool], count: usize, seed: u64) -> Result<Vec<Vec<bool>>> {
    let space = if key_bits >= 63 { u64::MAX } else { (1u64 << key_bits) - 2 };
    if count as u64 > space {
        return Err(bad("wrongKeys", format!("only {space} other keys exist")));
    }
    let mut rng = trial_rng(derive_seed(seed, KEY_LABEL), 1);
    let mut keys: Vec<Vec<bool>> = Vec::with_capacity(count);
    while keys.len() < count {
        let k: Vec<bool> = (0..key_bits).map(|_| rng.random_bool(0.5)).collect();
        if k.iter().any(|&b| b) && k != avoid && !keys.contains(&k) {
            keys.push(k);
        }
    }
    Ok(keys)
}

fn lfsr_for(key_bits: u32, taps: &Option<Vec<u32>>) -> Result<LfsrSpec> {
    match taps {
        Some(t) => LfsrSpec::new(key_bits, t).map_err(|e| bad("lfsrTaps", e)),
        None => LfsrSpec::primitive(key_bits).map_err(|e| bad("keyBits", e)),
    }
}

// ---------------------------------------------------------------- qk

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum QkMeasure {
    /// Bob's and Eve's bit error rates.
    Bers,
    /// One row per trial with Bob's error count.
    Records,
    KeyGuess,
    FalseAccept,
    CipherIndependence,
    Eq1Asymptote,
}

fn d_m() -> usize {
    8
}
fn d_true() -> bool {
    true
}
fn d_key_bits() -> u32 {
    8
}
fn d_data_len() -> usize {
    1000
}
fn d_verify_bits() -> usize {
    8
}
fn d_key_length() -> usize {
    64
}
fn d_convention() -> BitConvention {
    BitConvention::SemicircleBlocks
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct QkParams {
    pub measure: QkMeasure,
    #[serde(default = "d_m")]
    pub m: usize,
    #[serde(default = "d_convention")]
    pub convention: BitConvention,
    #[serde(default = "d_true")]
    pub polarity: bool,
    #[serde(default = "d_key_bits")]
    pub key_bits: u32,
    #[serde(default)]
    pub key_hex: Option<String>,
    #[serde(default)]
    pub lfsr_taps: Option<Vec<u32>>,
    #[serde(default)]
    pub key_mode: KeyMode,
    #[serde(default = "d_data_len")]
    pub data_length: usize,
    #[serde(default)]
    pub channel_noise: f64,
    #[serde(default = "d_verify_bits")]
    pub verify_bits: usize,
    /// Length of the compared keys in the false-accept measure.
    #[serde(default = "d_key_length")]
    pub key_length: usize,
    #[serde(default)]
    pub eve_angle: Option<f64>,
    #[serde(default)]
    pub tolerance: Option<f64>,
}

impl QkParams {
    fn qk_config(&self, seed: u64) -> Result<QkConfig> {
        let constellation = QkConstellation::new(self.m, self.convention, self.polarity).map_err(|e| bad("m", e))?;
        let cfg = QkConfig {
            constellation,
            lfsr: lfsr_for(self.key_bits, &self.lfsr_taps)?,
            key: seed_key(self.key_bits, self.key_hex.as_deref(), seed)?,
            key_mode: self.key_mode,
            data_len: self.data_length,
            channel_noise: self.channel_noise,
            verify_bits: self.verify_bits,
            eve_angle: self.eve_angle,
            rng_seed: seed,
        };
        cfg.validate().map_err(|e| bad("channelNoise", e))?;
        // all selectors must exist on this constellation
        cfg.selectors().map_err(|e| bad("m", e))?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        match self.measure {
            QkMeasure::CipherIndependence | QkMeasure::Eq1Asymptote => {
                QkConstellation::new(self.m, self.convention, self.polarity).map_err(|e| bad("m", e))?;
            }
            QkMeasure::FalseAccept => {
                if self.key_length == 0 || self.verify_bits == 0 {
                    return Err(bad("keyLength", "key and verification lengths must be >= 1"));
                }
            }
            _ => {
                self.qk_config(0)?;
            }
        }
        Ok(())
    }
}

/// Eve's expected BER under the constant attack at `angle` for the actual
/// selector sequence, averaged over uniform data: the exact conditional
/// reference for a fixed key.
fn eve_conditional_ber(cfg: &QkConfig, angle: f64) -> Result<f64> {
    let c = &cfg.constellation;
    let states = c.eve_states();
    let p0 = states.rho0.prob_plus(angle);
    let p1 = states.rho1.prob_plus(angle);
    let rule = |q0: f64, q1: f64| if (q0 - q1).abs() < 1e-15 { None } else { Some(q1 > q0) };
    let on_plus = rule(p0, p1);
    let on_minus = rule(1.0 - p0, 1.0 - p1);
    let miss = |d: Option<bool>, x: bool| match d {
        None => 0.5,
        Some(d) => (d != x) as u8 as f64,
    };
    let sels = cfg.selectors()?;
    let mut total = 0.0;
    for sel in &sels {
        for x in [false, true] {
            let sent = c.point_angle(c.point_for(sel.basis_index, x ^ sel.polarity_bit())?);
            let pp = state_on_circle(sent).depolarize(cfg.channel_noise).prob_plus(angle);
            total += 0.5 * (pp * miss(on_plus, x) + (1.0 - pp) * miss(on_minus, x));
        }
    }
    Ok(total / sels.len() as f64)
}

fn run_qk<R: TrialRunner>(p: &QkParams, trials: u64, seed: u64, runner: &R) -> Result<Vec<Measurement>> {
    let mut out = Vec::new();
    match p.measure {
        QkMeasure::Bers => {
            let cfg = p.qk_config(seed)?;
            let angle = p.eve_angle.unwrap_or_else(|| cfg.constellation.best_measurement_angle());
            let bers = simulate_bers(&cfg, Some(angle), trials, runner)?;
            let lambda = p.channel_noise;
            let bob = Measurement::new("bobBer", bers.bob);
            out.push(if lambda == 0.0 {
                bob.gated(0.0, Gate::Equal)
            } else {
                bob.gated(lambda / 2.0, Gate::BinomialSigma { k: THREE_SIGMA })
            });
            out.push(
                Measurement::new("eveBer", bers.eve)
                    .gated(eve_conditional_ber(&cfg, angle)?, Gate::BinomialSigma { k: THREE_SIGMA }),
            );
            // key-averaged value for comparison, not gated
            let c = cfg.constellation;
            let avg = 0.5 - (1.0 - lambda) * (0.5 - c.constant_attack_ber(angle));
            out.push(Measurement::exact("eveBerKeyAveraged", avg));
        }
        QkMeasure::Records => {
            let cfg = p.qk_config(seed)?;
            let records = run_qk_batch(&cfg, trials)?;
            let noiseless = p.channel_noise == 0.0;
            let mut accepted = 0u64;
            for r in &records {
                let m = Measurement::exact(format!("bobErrors[{}]", r.trial_index), r.bob_errors as f64);
                out.push(if noiseless { m.gated(0.0, Gate::Equal) } else { m });
                accepted += (r.verify_verdict == Verdict::Accept) as u64;
            }
            let rate = Measurement::new("verifyAcceptRate", Estimate::binomial(accepted, records.len() as u64));
            out.push(if noiseless { rate.gated(1.0, Gate::Equal) } else { rate });
        }
        QkMeasure::KeyGuess => {
            let cfg = p.qk_config(seed)?;
            let est = eve_key_guess_attack(&cfg, trials, runner)?;
            let r = (-(p.key_bits as f64)).exp2();
            out.push(Measurement::new("keyGuessSuccess", est).gated(r, Gate::BinomialSigma { k: THREE_SIGMA }));
        }
        QkMeasure::FalseAccept => {
            let est = false_accept_rate(p.key_length, p.verify_bits, trials, seed, runner)?;
            let r = (-(p.verify_bits as f64)).exp2();
            out.push(Measurement::new("falseAcceptRate", est).gated(r, Gate::BinomialSigma { k: THREE_SIGMA }));
        }
        QkMeasure::CipherIndependence => {
            let c = QkConstellation::new(p.m, p.convention, p.polarity)?;
            let d = trace_distance(&c.eve_states().cipher, &DensityMatrix2::maximally_mixed())?;
            out.push(Measurement::exact("cipherTraceDistance", d).gated(p.tolerance.unwrap_or(1e-12), Gate::AtMost));
        }
        QkMeasure::Eq1Asymptote => {
            let cmp = compare_eq1(p.m)?;
            let limit = 0.5 - 0.5 / p.m as f64;
            out.push(
                Measurement::exact("eq1Deviation", (cmp.formula - limit).abs())
                    .gated(p.tolerance.unwrap_or(1e-4), Gate::AtMost),
            );
            out.push(Measurement::exact("eq1Formula", cmp.formula).reference(limit));
            out.push(Measurement::exact("helstromSemicircleBlocks", cmp.semicircle_blocks));
            out.push(Measurement::exact("helstromAlternatingNeighbors", cmp.alternating_neighbors));
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------- αη

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum AlphaEtaMeasure {
    BobBer,
    PhaseAttack,
    KeyHiding,
    HeterodyneBpsk,
    ReceiverOrdering,
    PhaseWidth,
}

fn d_s() -> f64 {
    4.0
}
fn d_one() -> f64 {
    1.0
}
fn d_ae_key_bits() -> u32 {
    16
}
fn d_wrong_keys() -> usize {
    8
}
fn d_grid() -> usize {
    4096
}
fn d_amplitudes() -> [f64; 2] {
    [2.0, 4.0]
}
fn d_ratio_window() -> [f64; 2] {
    [0.45, 0.55]
}
fn d_receiver() -> AlphaEtaReceiver {
    AlphaEtaReceiver::Homodyne
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct AlphaEtaParams {
    pub measure: AlphaEtaMeasure,
    #[serde(default = "d_m")]
    pub m: usize,
    #[serde(default = "d_s")]
    pub s: f64,
    #[serde(default)]
    pub dsr: Dsr,
    #[serde(default = "d_true")]
    pub polarity: bool,
    #[serde(default = "d_ae_key_bits")]
    pub key_bits: u32,
    #[serde(default)]
    pub key_hex: Option<String>,
    #[serde(default)]
    pub lfsr_taps: Option<Vec<u32>>,
    #[serde(default = "d_data_len")]
    pub data_length: usize,
    #[serde(default = "d_one")]
    pub transmittance: f64,
    #[serde(default)]
    pub phase_offset: f64,
    #[serde(default = "d_receiver")]
    pub receiver: AlphaEtaReceiver,
    #[serde(default = "d_wrong_keys")]
    pub wrong_keys: usize,
    /// Upper gate on the largest pairwise trace distance.
    #[serde(default)]
    pub max_distance: Option<f64>,
    /// Lower gate on the smallest distance between distinct bases.
    #[serde(default)]
    pub min_distance: Option<f64>,
    #[serde(default)]
    pub cutoff: Option<usize>,
    #[serde(default = "d_grid")]
    pub grid: usize,
    /// Coherent amplitudes α₀ compared by the phase-width measure.
    #[serde(default = "d_amplitudes")]
    pub amplitudes: [f64; 2],
    #[serde(default = "d_ratio_window")]
    pub ratio_window: [f64; 2],
}

impl AlphaEtaParams {
    fn ae_config(&self, seed: u64) -> Result<AlphaEtaConfig> {
        let cfg = AlphaEtaConfig {
            m: self.m,
            s: self.s,
            dsr: self.dsr,
            polarity: self.polarity,
            lfsr: lfsr_for(self.key_bits, &self.lfsr_taps)?,
            key: seed_key(self.key_bits, self.key_hex.as_deref(), seed)?,
            data_len: self.data_length,
            transmittance: self.transmittance,
            phase_offset: self.phase_offset,
            rng_seed: seed,
        };
        cfg.validate().map_err(|e| bad("m", e))?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if !(self.s >= 0.0) || !self.s.is_finite() {
            return Err(bad("s", "must be finite and >= 0"));
        }
        match self.measure {
            AlphaEtaMeasure::HeterodyneBpsk => Ok(()),
            AlphaEtaMeasure::ReceiverOrdering => {
                if self.grid < 256 {
                    return Err(bad("grid", "must be >= 256"));
                }
                Ok(())
            }
            AlphaEtaMeasure::PhaseWidth => {
                if self.amplitudes.iter().any(|a| !(*a > 0.0)) {
                    return Err(bad("amplitudes", "must be > 0"));
                }
                if self.grid < 256 {
                    return Err(bad("grid", "must be >= 256"));
                }
                Ok(())
            }
            _ => self.ae_config(0).map(|_| ()),
        }
    }
}

fn run_alpha_eta<R: TrialRunner>(p: &AlphaEtaParams, trials: u64, seed: u64, runner: &R) -> Result<Vec<Measurement>> {
    let sigma3 = Gate::BinomialSigma { k: THREE_SIGMA };
    let mut out = Vec::new();
    match p.measure {
        AlphaEtaMeasure::BobBer => {
            let cfg = p.ae_config(seed)?;
            let est = bob_ber(&cfg, p.receiver, trials, runner)?;
            let r = match p.receiver {
                AlphaEtaReceiver::Homodyne => bob_homodyne_ber_analytic(cfg.s_eff(), p.dsr),
                AlphaEtaReceiver::KennedyModel => bob_kennedy_ber_analytic(cfg.s_eff(), p.dsr),
            };
            out.push(Measurement::new("bobBer", est).gated(r, sigma3));
        }
        AlphaEtaMeasure::PhaseAttack => {
            let cfg = p.ae_config(seed)?;
            let mut keys = vec![cfg.key.clone()];
            keys.extend(other_keys(p.key_bits, &cfg.key, p.wrong_keys, seed)?);
            let t = simulate_phase_attack(&cfg, &keys, trials, runner)?;
            out.push(Measurement::new("bobBer", t.bob.estimate()).gated(bob_homodyne_ber_analytic(cfg.s_eff(), p.dsr), sigma3));
            // Eve taps before the loss; her in-phase heterodyne component
            // has half the homodyne signal-to-noise ratio
            out.push(
                Measurement::new("eveBerTrueKey", t.eve[0].estimate())
                    .gated(bob_homodyne_ber_analytic(cfg.s / 2.0, p.dsr), sigma3),
            );
            if t.eve.len() > 1 {
                let mut wrong = kcq_core::mc::Counts::default();
                for c in &t.eve[1..] {
                    wrong.add(c.hits, c.total);
                }
                out.push(Measurement::new("eveBerWrongKeys", wrong.estimate()).reference(0.5));
            }
        }
        AlphaEtaMeasure::KeyHiding => {
            let cfg = p.ae_config(seed)?;
            let cutoff = p.cutoff.unwrap_or_else(|| cutoff_rule(cfg.s));
            let bases = cfg.m / 2;
            let sel = |i| SymbolSelector {
                basis_index: i,
                polarity: None,
            };
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for a in 0..bases {
                for b in a + 1..bases {
                    let d = key_hiding_distance(&cfg, &sel(a), &sel(b), cutoff)?;
                    lo = lo.min(d);
                    hi = hi.max(d);
                }
            }
            if bases < 2 {
                lo = 0.0;
            }
            let mx = Measurement::exact("maxTraceDistance", hi);
            out.push(match p.max_distance {
                Some(b) => mx.gated(b, Gate::AtMost),
                None => mx,
            });
            let mn = Measurement::exact("minTraceDistance", lo);
            out.push(match p.min_distance {
                Some(b) => mn.gated(b, Gate::Above { k: 0.0 }),
                None => mn,
            });
        }
        AlphaEtaMeasure::HeterodyneBpsk => {
            let est = heterodyne_bpsk_ber_mc(p.s, trials, seed, runner);
            out.push(Measurement::new("heterodyneBer", est).gated(heterodyne_bpsk_ber(p.s), sigma3));
        }
        AlphaEtaMeasure::ReceiverOrdering => {
            let opt = bpsk_ber(p.s, BpskReceiver::OptimalExact)?;
            let pom = phase_pom_bpsk_ber(p.s, p.grid)?;
            let het = heterodyne_bpsk_ber_mc(p.s, trials, seed, runner);
            out.push(Measurement::exact("optimalExactBer", opt));
            out.push(Measurement::exact("phasePomBer", pom).between(opt, het.value));
            out.push(Measurement::new("heterodyneBer", het).gated(heterodyne_bpsk_ber(p.s), sigma3));
        }
        AlphaEtaMeasure::PhaseWidth => {
            let [a, b] = p.amplitudes;
            let dist = |x: f64| {
                phase_pom_distribution(CoherentAmplitude::new(x, 0.0), p.cutoff.unwrap_or_else(|| cutoff_rule(x * x)), p.grid)
            };
            let (da, db) = (dist(a)?, dist(b)?);
            let (ca, cb) = (da.circular_std(), db.circular_std());
            let (ra, rb) = (da.rms_width(0.0), db.rms_width(0.0));
            out.push(Measurement::exact(format!("circularStd[{a}]"), ca));
            out.push(Measurement::exact(format!("circularStd[{b}]"), cb));
            out.push(Measurement::exact("circularStdRatio", cb / ca).within(p.ratio_window[0], p.ratio_window[1]));
            out.push(Measurement::exact("wrappedRmsRatio", rb / ra).reference(a / b));
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------- CPPM

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum CppmMeasure {
    Bob,
    Eve,
    EveScaling,
    ErrorProfile,
    KeyLeak,
    Bound,
}

fn d_cppm_m() -> usize {
    16
}
fn d_cppm_key_bits() -> u32 {
    20
}
fn d_chi() -> f64 {
    1.5
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CppmParams {
    pub measure: CppmMeasure,
    #[serde(default = "d_cppm_m")]
    pub m: usize,
    #[serde(default = "d_s")]
    pub s: f64,
    #[serde(default = "d_cppm_key_bits")]
    pub key_bits: u32,
    #[serde(default = "d_one")]
    pub transmittance: f64,
    #[serde(default = "d_wrong_keys")]
    pub wrong_keys: usize,
    /// Mode counts for the scaling measure.
    #[serde(default)]
    pub ms: Vec<usize>,
    #[serde(default = "d_chi")]
    pub max_chi_square: f64,
    #[serde(default)]
    pub min_events: u64,
}

impl CppmParams {
    fn cppm_config(&self, m: usize, seed: u64) -> Result<CppmConfig> {
        let cfg = CppmConfig {
            m,
            s: self.s,
            key_bits: self.key_bits,
            transmittance: self.transmittance,
            rng_seed: seed,
        };
        cfg.validate().map_err(|e| match e {
            kcq_core::Error::UnsupportedConstellation(_) => bad("m", e),
            kcq_core::Error::Range { name: "S", .. } => bad("s", e),
            kcq_core::Error::Range { .. } => bad("transmittance", e),
            other => bad("keyBits", other),
        })?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.measure == CppmMeasure::EveScaling {
            if self.ms.len() < 2 {
                return Err(bad("ms", "needs at least two mode counts"));
            }
            for &m in &self.ms {
                self.cppm_config(m, 0)?;
            }
            return Ok(());
        }
        self.cppm_config(self.m, 0).map(|_| ())
    }
}

fn bound_max(m: usize, s: f64, conv: ExponentConvention) -> f64 {
    heterodyne_bound_default(m, s, conv).1
}

fn run_cppm<R: TrialRunner>(p: &CppmParams, trials: u64, seed: u64, runner: &R) -> Result<Vec<Measurement>> {
    let mut out = Vec::new();
    match p.measure {
        CppmMeasure::Bob => {
            let cfg = p.cppm_config(p.m, seed)?;
            let est = bob_block_error(&cfg, trials, runner)?;
            let r = direct_detection_error(p.m, p.s, p.transmittance);
            out.push(Measurement::new("bobBlockError", est).gated(r, Gate::BinomialSigma { k: THREE_SIGMA }));
        }
        CppmMeasure::Eve => {
            let cfg = p.cppm_config(p.m, seed)?;
            let st = eve_block_error(&cfg, p.wrong_keys, trials, runner)?;
            let bob = direct_detection_error(p.m, p.s, p.transmittance);
            let bound = bound_max(p.m, p.s, ExponentConvention::MMinusOne);
            out.push(Measurement::new("eveTrueKey", st.true_key).gated(bound, Gate::AtLeast { k: THREE_SIGMA }));
            out.push(Measurement::new("eveIncluded", st.included).gated(bob, Gate::Above { k: THREE_SIGMA }));
            out.push(Measurement::new("eveExcluded", st.excluded).reference(1.0 - 1.0 / p.m as f64));
            out.push(Measurement::new("evePerWrongKey", st.per_wrong_key));
        }
        CppmMeasure::EveScaling => {
            let mut prev: Option<f64> = None;
            let mut increasing = true;
            for (j, &m) in p.ms.iter().enumerate() {
                let cfg = p.cppm_config(m, derive_seed(seed, j as u64))?;
                let st = eve_block_error(&cfg, p.wrong_keys, trials, runner)?;
                let bound = bound_max(m, p.s, ExponentConvention::MMinusOne);
                out.push(Measurement::new(format!("eveExcluded[m={m}]"), st.excluded).reference(1.0 - 1.0 / m as f64));
                out.push(Measurement::new(format!("eveTrueKey[m={m}]"), st.true_key).gated(bound, Gate::AtLeast { k: THREE_SIGMA }));
                if let Some(q) = prev {
                    increasing &= st.excluded.value > q;
                }
                prev = Some(st.excluded.value);
            }
            out.push(Measurement::exact("eveExcludedIncreasing", increasing as u8 as f64).gated(1.0, Gate::Equal));
        }
        CppmMeasure::ErrorProfile => {
            let cfg = p.cppm_config(p.m, seed)?;
            let t = error_profile(&cfg, trials, runner)?;
            out.push(Measurement::exact("chiSquarePerDof", t.chi_square_per_dof).gated(p.max_chi_square, Gate::AtMost));
            let ev = Measurement::exact("errorEvents", t.error_events as f64);
            out.push(if p.min_events > 0 {
                ev.gated(p.min_events as f64, Gate::AtLeast { k: 0.0 })
            } else {
                ev
            });
        }
        CppmMeasure::KeyLeak => {
            let cfg = p.cppm_config(p.m, seed)?;
            let est = key_leak_given_plaintext(&cfg, trials, runner)?;
            out.push(Measurement::new("keyLeakBits", est).reference(p.key_bits as f64));
        }
        CppmMeasure::Bound => {
            for (name, conv) in [("boundMMinusOne", ExponentConvention::MMinusOne), ("boundLog2m", ExponentConvention::Log2M)] {
                let (y, b) = heterodyne_bound_default(p.m, p.s, conv);
                out.push(Measurement::exact(name, b));
                out.push(Measurement::exact(format!("{name}ArgY"), y));
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------- metrics

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum MetricsMeasure {
    SolveP1,
    TrialComplexityUniform,
    LemmaChecks,
    LfsrPeriod,
    BerlekampMassey,
    PrintedClaims,
}

fn d_window() -> [f64; 2] {
    [0.009, 0.012]
}
fn d_lemma_tol() -> f64 {
    1e-9
}
fn d_claim_ns() -> Vec<u32> {
    vec![3, 6, 9, 12, 20, 40]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct MetricsParams {
    pub measure: MetricsMeasure,
    #[serde(default)]
    pub n: Option<f64>,
    #[serde(default)]
    pub info: Option<f64>,
    #[serde(default = "d_window")]
    pub window: [f64; 2],
    #[serde(default)]
    pub bits: Option<u32>,
    #[serde(default)]
    pub degree: Option<u32>,
    #[serde(default = "d_lemma_tol")]
    pub tolerance: f64,
    /// Photon number for the printed-claims comparison.
    #[serde(default)]
    pub s: Option<f64>,
    /// Photon number for the bound comparison.
    #[serde(default = "d_s")]
    pub bound_s: f64,
    /// log₂ m values for the bound comparison.
    #[serde(default = "d_claim_ns")]
    pub ns: Vec<u32>,
}

impl MetricsParams {
    fn need<T: Copy>(&self, v: Option<T>, name: &str) -> Result<T> {
        v.ok_or_else(|| bad(name, "required for this measure"))
    }

    fn validate(&self) -> Result<()> {
        match self.measure {
            MetricsMeasure::SolveP1 => {
                let n = self.need(self.n, "n")?;
                let i = self.need(self.info, "info")?;
                if !(n > 0.0) {
                    return Err(bad("n", "must be > 0"));
                }
                if !(0.0..=n).contains(&i) {
                    return Err(bad("info", "must lie in [0, n]"));
                }
            }
            MetricsMeasure::TrialComplexityUniform => {
                let b = self.need(self.bits, "bits")?;
                if b > 24 {
                    return Err(bad("bits", "at most 24"));
                }
            }
            MetricsMeasure::LfsrPeriod | MetricsMeasure::BerlekampMassey => {
                let d = self.need(self.degree, "degree")?;
                if !(2..=24).contains(&d) {
                    return Err(bad("degree", "must be in 2..=24"));
                }
            }
            MetricsMeasure::PrintedClaims => {
                if self.ns.iter().any(|&n| n == 0 || n > 48) {
                    return Err(bad("ns", "entries must be in 1..=48"));
                }
            }
            MetricsMeasure::LemmaChecks => {}
        }
        Ok(())
    }
}

fn run_metrics(p: &MetricsParams, trials: u64, seed: u64) -> Result<Vec<Measurement>> {
    let mut out = Vec::new();
    match p.measure {
        MetricsMeasure::SolveP1 => {
            let v = solve_p1_given_info(p.need(p.n, "n")?, p.need(p.info, "info")?)?;
            out.push(Measurement::exact("p1", v).within(p.window[0], p.window[1]));
        }
        MetricsMeasure::TrialComplexityUniform => {
            let b = p.need(p.bits, "bits")?;
            let size = 1usize << b;
            let prof = ErrorProfile::new(vec![1.0 / size as f64; size])?;
            let want = (b as f64 - 1.0).exp2() + 0.5;
            out.push(Measurement::exact("trialComplexity", trial_complexity(&prof)?).gated(want, Gate::Equal));
        }
        MetricsMeasure::LemmaChecks => {
            let r = lemma_checks(trials as usize, seed);
            for (name, v) in [
                ("lemma1Violation", r.lemma1_violation),
                ("eqZDefect", r.eq_z_defect),
                ("lemma1EqualityGap", r.lemma1_equality_gap),
                ("lemma2Violation", r.lemma2_violation),
                ("lemma3Violation", r.lemma3_violation),
                ("eqNViolation", r.eq_n_violation),
            ] {
                let e = Estimate {
                    value: v,
                    std_err: 0.0,
                    samples: r.draws as u64,
                };
                out.push(Measurement::new(name, e).gated(p.tolerance, Gate::AtMost));
            }
        }
        MetricsMeasure::LfsrPeriod => {
            let d = p.need(p.degree, "degree")?;
            let spec = LfsrSpec::primitive(d)?;
            let period = spec.period(&bits_of(1, d as usize))?;
            out.push(Measurement::exact("period", period as f64).gated(((1u64 << d) - 1) as f64, Gate::Equal));
        }
        MetricsMeasure::BerlekampMassey => {
            let d = p.need(p.degree, "degree")?;
            let du = d as usize;
            let mut recovered = 0u64;
            let mut worst = 0usize;
            for i in 0..trials {
                let mut rng = trial_rng(seed, i);
                let mut taps: Vec<u32> = (1..d).filter(|_| rng.random_bool(0.5)).collect();
                taps.push(d);
                let spec = LfsrSpec::new(d, &taps)?;
                let key = loop {
                    let k: Vec<bool> = (0..du).map(|_| rng.random_bool(0.5)).collect();
                    if k.iter().any(|&b| b) {
                        break k;
                    }
                };
                let stream = expand_key(&spec, &key, 4 * du)?.bits;
                let lc = berlekamp_massey(&stream[..2 * du]);
                worst = worst.max(lc.linear_complexity);
                recovered += (lc.linear_complexity <= du && lc.regenerate(&stream, 4 * du) == stream) as u64;
            }
            out.push(Measurement::new("recoveredFraction", Estimate::binomial(recovered, trials)).gated(1.0, Gate::Equal));
            out.push(Measurement::exact("maxLinearComplexity", worst as f64).gated(d as f64, Gate::AtMost));
        }
        MetricsMeasure::PrintedClaims => printed_claims(p, &mut out),
    }
    Ok(out)
}

/// Printed numeric illustrations next to what the formulas give.
fn printed_claims(p: &MetricsParams, out: &mut Vec<Measurement>) {
    // exponentials with prefactors dropped, as in the illustration
    let printed = [("optimum", 4.0, 1e-12), ("heterodyne", 1.0, 1e-3), ("phase", 2.0, 1e-6)];
    let s_text = p.s.unwrap_or(10.0);
    let s_fit = 3.0 * std::f64::consts::LN_10;
    for (name, rate, claim) in printed {
        out.push(Measurement::exact(format!("{name}ExpAtS{s_text}"), (-rate * s_text).exp()).reference(claim));
        let at_fit = (-rate * s_fit).exp();
        out.push(Measurement::exact(format!("{name}ExpAtS3ln10"), at_fit).within(claim * (1.0 - 1e-9), claim * (1.0 + 1e-9)));
    }
    let s = p.bound_s;
    let hi = 10.0 + (2.0 * s).sqrt();
    let mut largest = None;
    for &n in &p.ns {
        let m = 1usize << n;
        let (_, printed) = heterodyne_error_lower_bound_max(m, s, ExponentConvention::Log2M, -4.0, hi, 4001);
        let (_, orth) = heterodyne_error_lower_bound_max(m, s, ExponentConvention::MMinusOne, -4.0, hi, 4001);
        let y_rule = (2.0 * n as f64).sqrt();
        out.push(Measurement::exact(format!("boundLog2mMax[n={n}]"), printed));
        out.push(Measurement::exact(
            format!("boundLog2mAtSqrt2n[n={n}]"),
            heterodyne_error_lower_bound(m, s, y_rule, ExponentConvention::Log2M),
        ));
        out.push(Measurement::exact(format!("boundMMinusOneMax[n={n}]"), orth));
        if largest.is_none_or(|(k, _, _)| n > k) {
            largest = Some((n, printed, orth));
        }
    }
    if let Some((_, printed, orth)) = largest {
        // the printed exponent stays far from 1; m − 1 approaches it
        out.push(Measurement::exact("boundLog2mMaxLargestN", printed).gated(0.5, Gate::AtMost));
        out.push(Measurement::exact("boundMMinusOneMaxLargestN", orth).gated(0.99, Gate::AtLeast { k: 0.0 }));
    }
}

// ---------------------------------------------------------------- driver

#[derive(Debug, Clone)]
pub enum PointParams {
    Qk(QkParams),
    AlphaEta(AlphaEtaParams),
    Cppm(CppmParams),
    Metrics(MetricsParams),
}

/// Decode and validate one point's parameter block.
pub fn point_params(protocol: Protocol, point: &SweepPoint) -> Result<PointParams> {
    let v = point.params.clone();
    let with_point = |e: HarnessError| match e {
        HarnessError::Config { path, msg } if !point.label.is_empty() => {
            HarnessError::config(path, format!("{msg} (sweep point {})", point.label))
        }
        other => other,
    };
    let parsed = match protocol {
        Protocol::Qk => decode_at::<QkParams>("params", v).and_then(|p| p.validate().map(|_| PointParams::Qk(p))),
        Protocol::AlphaEta => {
            decode_at::<AlphaEtaParams>("params", v).and_then(|p| p.validate().map(|_| PointParams::AlphaEta(p)))
        }
        Protocol::Cppm => decode_at::<CppmParams>("params", v).and_then(|p| p.validate().map(|_| PointParams::Cppm(p))),
        Protocol::Metrics => {
            decode_at::<MetricsParams>("params", v).and_then(|p| p.validate().map(|_| PointParams::Metrics(p)))
        }
    };
    parsed.map_err(with_point)
}

/// Decode every sweep point before anything runs.
pub fn plan(cfg: &ExperimentConfig) -> Result<Vec<(SweepPoint, PointParams)>> {
    cfg.points()
        .into_iter()
        .map(|pt| point_params(cfg.protocol, &pt).map(|p| (pt, p)))
        .collect()
}

/// Run every sweep point; point `i` uses seed `derive_seed(rngSeed, i)`.
pub fn run_experiment<R: TrialRunner>(cfg: &ExperimentConfig, runner: &R) -> Result<Vec<ReportRow>> {
    let mut rows = Vec::new();
    for (pt, params) in plan(cfg)? {
        let seed = derive_seed(cfg.rng_seed, pt.index);
        let ms = match &params {
            PointParams::Qk(p) => run_qk(p, cfg.trials, seed, runner)?,
            PointParams::AlphaEta(p) => run_alpha_eta(p, cfg.trials, seed, runner)?,
            PointParams::Cppm(p) => run_cppm(p, cfg.trials, seed, runner)?,
            PointParams::Metrics(p) => run_metrics(p, cfg.trials, seed)?,
        };
        rows.extend(ms.into_iter().map(|m| m.into_row(&cfg.name, pt.index, &pt.label)));
    }
    Ok(rows)
}
