//! The αη scheme: M coherent states `α₀e^{iθ_l}`, θ_l = 2πl/M, with the
//! running key choosing the antipodal pair (basis) and the data bit choosing
//! the point within it.
//!
//! Phase of a transmitted symbol:
//! `θ = offset + 2π·basis/M + (b ⊕ polarity)·π + δ`, where δ is the
//! deliberate signal randomization (DSR) draw. Polarity is applied before DSR.

use alloc::vec::Vec;
use core::f64::consts::PI;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::keystream::{bits_per_symbol, chunk_running_key, expand_key, LfsrSpec, SymbolSelector};
use crate::linalg::{hermitian_trace_norm, CMatrix};
use crate::mc::{Counts, Estimate, TrialRunner};
use crate::qumode::{heterodyne, homodyne, CoherentAmplitude};
use crate::special::{ln_factorial, q_function, simpson};
use crate::{Complex64, Error, Result};

/// Smallest allowed point count for a discretized DSR.
pub const MIN_DSR_POINTS: usize = 16;

/// Deliberate signal randomization policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "kind")]
pub enum Dsr {
    #[default]
    None,
    /// Uniform offset in (−π/2, π/2) about the keyed phase.
    Semicircle,
    /// Uniform offset in [0, 2π).
    FullCircle,
    /// Uniform over `count` midpoints of the semicircle,
    /// `δ_k = −π/2 + (k + ½)π/count`.
    Discretized { count: usize },
}

impl Dsr {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Dsr::Discretized { count } if count < MIN_DSR_POINTS => Err(Error::Domain(alloc::format!(
                "discretized DSR needs at least {MIN_DSR_POINTS} points, got {count}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Dsr::None => 0.0,
            Dsr::Semicircle => -PI / 2.0 + PI * rng.random::<f64>(),
            Dsr::FullCircle => 2.0 * PI * rng.random::<f64>(),
            Dsr::Discretized { count } => discretized_point(rng.random_range(0..count), count),
        }
    }

    /// E[e^{ikδ}] under this policy.
    pub fn characteristic(&self, k: i64) -> Complex64 {
        if k == 0 {
            return Complex64::new(1.0, 0.0);
        }
        match *self {
            Dsr::None => Complex64::new(1.0, 0.0),
            Dsr::FullCircle => Complex64::new(0.0, 0.0),
            Dsr::Semicircle => {
                let x = k as f64 * PI / 2.0;
                Complex64::new(libm::sin(x) / x, 0.0)
            }
            Dsr::Discretized { count } => {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..count {
                    acc += Complex64::from_polar(1.0, k as f64 * discretized_point(j, count));
                }
                acc / count as f64
            }
        }
    }
}

fn discretized_point(j: usize, count: usize) -> f64 {
    -PI / 2.0 + (j as f64 + 0.5) * PI / count as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum AlphaEtaReceiver {
    Homodyne,
    /// Displace the bit-1 state to vacuum and count photons.
    KennedyModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AlphaEtaConfig {
    pub m: usize,
    /// Mean photon number per symbol at the transmitter.
    pub s: f64,
    #[serde(default)]
    pub dsr: Dsr,
    #[serde(default = "default_true")]
    pub polarity: bool,
    pub lfsr: LfsrSpec,
    pub key: Vec<bool>,
    pub data_len: usize,
    /// Channel transmittance η seen by Bob.
    #[serde(default = "default_one")]
    pub transmittance: f64,
    /// Global rotation of the whole constellation.
    #[serde(default)]
    pub phase_offset: f64,
    pub rng_seed: u64,
}

fn default_true() -> bool {
    true
}

fn default_one() -> f64 {
    1.0
}

impl AlphaEtaConfig {
    pub fn validate(&self) -> Result<()> {
        bits_per_symbol(self.m, self.polarity)?;
        if !(self.s >= 0.0) || !self.s.is_finite() {
            return Err(Error::Range { name: "S", value: self.s });
        }
        if !(0.0..=1.0).contains(&self.transmittance) {
            return Err(Error::Range {
                name: "transmittance",
                value: self.transmittance,
            });
        }
        if self.data_len == 0 {
            return Err(Error::Domain("dataLength must be >= 1".into()));
        }
        self.dsr.validate()?;
        self.lfsr.validate()
    }

    pub fn amplitude(&self) -> f64 {
        libm::sqrt(self.s)
    }

    /// Photon number reaching Bob, ηS.
    pub fn s_eff(&self) -> f64 {
        self.transmittance * self.s
    }

    /// Per-symbol selectors for `data_len` symbols under seed key `key`.
    pub fn selectors_for(&self, key: &[bool]) -> Result<Vec<SymbolSelector>> {
        let per = bits_per_symbol(self.m, self.polarity)?;
        let k = expand_key(&self.lfsr, key, per * self.data_len)?;
        chunk_running_key(&k.bits, self.m, self.polarity)
    }

    pub fn selectors(&self) -> Result<Vec<SymbolSelector>> {
        self.selectors_for(&self.key)
    }

    fn check_basis(&self, sel: &SymbolSelector) -> Result<()> {
        if sel.basis_index >= self.m / 2 {
            return Err(Error::Domain(alloc::format!(
                "basis {} out of range for M = {}",
                sel.basis_index,
                self.m
            )));
        }
        Ok(())
    }

    /// Phase of the bit-0 point of the keyed pair, polarity included.
    fn keyed_axis(&self, sel: &SymbolSelector) -> f64 {
        let mut t = self.phase_offset + 2.0 * PI * sel.basis_index as f64 / self.m as f64;
        if sel.polarity_bit() {
            t += PI;
        }
        t
    }
}

/// Transmitted amplitude with a given DSR offset `delta`.
pub fn alpha_eta_modulate_with(bit: bool, sel: &SymbolSelector, config: &AlphaEtaConfig, delta: f64) -> Result<CoherentAmplitude> {
    config.check_basis(sel)?;
    let mut theta = config.keyed_axis(sel) + delta;
    if bit {
        theta += PI;
    }
    Ok(CoherentAmplitude::from_polar(config.amplitude(), theta))
}

/// Transmitted amplitude with the DSR offset drawn from `rng`.
pub fn alpha_eta_modulate<R: Rng + ?Sized>(
    bit: bool,
    sel: &SymbolSelector,
    config: &AlphaEtaConfig,
    rng: &mut R,
) -> Result<CoherentAmplitude> {
    let delta = config.dsr.sample(rng);
    alpha_eta_modulate_with(bit, sel, config, delta)
}

/// Bob's keyed binary decision on a transmitted amplitude. The channel
/// attenuation √η is applied here.
pub fn bob_receive<R: Rng + ?Sized>(
    amplitude: CoherentAmplitude,
    sel: &SymbolSelector,
    receiver: AlphaEtaReceiver,
    config: &AlphaEtaConfig,
    rng: &mut R,
) -> Result<bool> {
    config.check_basis(sel)?;
    let axis = config.keyed_axis(sel);
    let received = amplitude.scaled(libm::sqrt(config.transmittance));
    Ok(match receiver {
        AlphaEtaReceiver::Homodyne => homodyne(received, axis, rng) < 0.0,
        AlphaEtaReceiver::KennedyModel => {
            let shift = Complex64::from_polar(libm::sqrt(config.s_eff()), axis);
            let mean = (received.0 + shift).norm_sqr();
            // no click ⇔ the bit-1 state was nulled
            poisson_is_zero(mean, rng)
        }
    })
}

fn poisson_is_zero<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> bool {
    rng.random::<f64>() < libm::exp(-mean)
}

/// Monte Carlo BER of Bob's keyed receiver over `trials` blocks of
/// `data_len` symbols with uniform data.
pub fn bob_ber<R: TrialRunner>(config: &AlphaEtaConfig, receiver: AlphaEtaReceiver, trials: u64, runner: &R) -> Result<Estimate> {
    config.validate()?;
    let selectors = config.selectors()?;
    let counts: Counts = runner.run(config.rng_seed, trials, |_, rng, t: &mut Counts| {
        for sel in &selectors {
            let x = rng.random_bool(0.5);
            let a = alpha_eta_modulate(x, sel, config, rng).expect("validated selector");
            let y = bob_receive(a, sel, receiver, config, rng).expect("validated selector");
            t.record(y != x);
        }
    });
    Ok(counts.estimate())
}

/// Homodyne BER averaged over the DSR density:
/// `∫ Q(2√S cos δ) p(δ) dδ`.
pub fn bob_homodyne_ber_analytic(s_eff: f64, dsr: Dsr) -> f64 {
    let a = 2.0 * libm::sqrt(s_eff);
    match dsr {
        Dsr::None => q_function(a),
        Dsr::FullCircle => 0.5,
        Dsr::Semicircle => simpson(|d| q_function(a * libm::cos(d)), -PI / 2.0, PI / 2.0, 4000) / PI,
        Dsr::Discretized { count } => {
            (0..count).map(|j| q_function(a * libm::cos(discretized_point(j, count)))).sum::<f64>() / count as f64
        }
    }
}

/// Kennedy-model BER with the DSR offset averaged in. Bit 0 errs when no
/// photon is counted from `|√S(1 + e^{iδ})|²`; bit 1 errs when a photon is
/// counted from `|√S(1 − e^{iδ})|²`.
pub fn bob_kennedy_ber_analytic(s_eff: f64, dsr: Dsr) -> f64 {
    let err = |d: f64| {
        let c = libm::cos(d);
        let e0 = libm::exp(-2.0 * s_eff * (1.0 + c));
        let e1 = -libm::expm1(-2.0 * s_eff * (1.0 - c));
        0.5 * (e0 + e1)
    };
    match dsr {
        Dsr::None => err(0.0),
        Dsr::FullCircle => simpson(err, 0.0, 2.0 * PI, 8000) / (2.0 * PI),
        Dsr::Semicircle => simpson(err, -PI / 2.0, PI / 2.0, 4000) / PI,
        Dsr::Discretized { count } => (0..count).map(|j| err(discretized_point(j, count))).sum::<f64>() / count as f64,
    }
}

/// Eve's heterodyne phase estimates and her BER under each trial key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PhaseAttack {
    pub phase_estimates: Vec<f64>,
    pub ber_by_trial_key: Vec<f64>,
}

/// Bit decoded from a phase estimate under one keyed basis.
pub fn decode_phase(phase: f64, sel: &SymbolSelector, config: &AlphaEtaConfig) -> bool {
    libm::cos(phase - config.keyed_axis(sel)) < 0.0
}

/// Eve heterodynes every symbol (before channel loss) and decodes the
/// resulting phases under every trial key, each a per-symbol selector list.
pub fn eve_phase_attack<R: Rng + ?Sized>(
    amplitudes: &[CoherentAmplitude],
    data: &[bool],
    trial_keys: &[Vec<SymbolSelector>],
    config: &AlphaEtaConfig,
    rng: &mut R,
) -> Result<PhaseAttack> {
    if data.len() != amplitudes.len() {
        return Err(Error::Domain("data and amplitudes differ in length".into()));
    }
    for key in trial_keys {
        if key.len() < amplitudes.len() {
            return Err(Error::KeystreamExhausted {
                needed: amplitudes.len(),
                available: key.len(),
            });
        }
        for sel in key {
            config.check_basis(sel)?;
        }
    }
    let phase_estimates: Vec<f64> = amplitudes.iter().map(|&a| heterodyne(a, rng).arg()).collect();
    let ber_by_trial_key = trial_keys
        .iter()
        .map(|key| {
            let errors = phase_estimates
                .iter()
                .zip(key)
                .zip(data)
                .filter(|((&p, sel), &x)| decode_phase(p, sel, config) != x)
                .count();
            errors as f64 / data.len().max(1) as f64
        })
        .collect();
    Ok(PhaseAttack {
        phase_estimates,
        ber_by_trial_key,
    })
}

/// Error counts for Bob and for Eve under each trial key, accumulated over
/// `trials` fresh blocks of `data_len` symbols.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AttackTally {
    pub bob: Counts,
    pub eve: Vec<Counts>,
}

impl crate::mc::Tally for AttackTally {
    fn merge(&mut self, other: Self) {
        self.bob.merge(other.bob);
        if self.eve.len() < other.eve.len() {
            self.eve.resize(other.eve.len(), Counts::default());
        }
        for (a, b) in self.eve.iter_mut().zip(other.eve) {
            a.merge(b);
        }
    }
}

/// Monte Carlo of Bob's homodyne against Eve's heterodyne phase attack with
/// the given trial keys (seed keys, expanded with the configured LFSR).
pub fn simulate_phase_attack<R: TrialRunner>(
    config: &AlphaEtaConfig,
    trial_keys: &[Vec<bool>],
    trials: u64,
    runner: &R,
) -> Result<AttackTally> {
    config.validate()?;
    let truth = config.selectors()?;
    let keyed: Vec<Vec<SymbolSelector>> = trial_keys.iter().map(|k| config.selectors_for(k)).collect::<Result<_>>()?;
    let tally: AttackTally = runner.run(config.rng_seed, trials, |_, rng, t: &mut AttackTally| {
        if t.eve.is_empty() {
            t.eve.resize(keyed.len(), Counts::default());
        }
        let data: Vec<bool> = (0..truth.len()).map(|_| rng.random_bool(0.5)).collect();
        let amps: Vec<CoherentAmplitude> = truth
            .iter()
            .zip(&data)
            .map(|(sel, &x)| alpha_eta_modulate(x, sel, config, rng).expect("validated selector"))
            .collect();
        for ((a, sel), &x) in amps.iter().zip(&truth).zip(&data) {
            let y = bob_receive(*a, sel, AlphaEtaReceiver::Homodyne, config, rng).expect("validated selector");
            t.bob.record(y != x);
        }
        let phases: Vec<f64> = amps.iter().map(|&a| heterodyne(a, rng).arg()).collect();
        for (key, c) in keyed.iter().zip(t.eve.iter_mut()) {
            for ((&p, sel), &x) in phases.iter().zip(key).zip(&data) {
                c.record(decode_phase(p, sel, config) != x);
            }
        }
    });
    Ok(tally)
}

/// Per-symbol output state averaged over uniform data and the DSR density,
/// truncated to `cutoff` number states:
/// `ρ_nm = |c_n||c_m| e^{i(n−m)θ_axis} · [n−m even] · χ(n−m)`.
pub fn averaged_symbol_state(config: &AlphaEtaConfig, sel: &SymbolSelector, cutoff: usize) -> Result<CMatrix> {
    config.check_basis(sel)?;
    config.dsr.validate()?;
    let s = config.s;
    let r = config.amplitude();
    let mags: Vec<f64> = (0..cutoff)
        .map(|n| {
            if r == 0.0 {
                if n == 0 { 1.0 } else { 0.0 }
            } else {
                libm::exp(-0.5 * s + n as f64 * libm::log(r) - 0.5 * ln_factorial(n))
            }
        })
        .collect();
    let tail = 1.0 - mags.iter().map(|c| c * c).sum::<f64>();
    if tail > crate::qumode::FOCK_TAIL_TOL {
        return Err(Error::Truncation { cutoff, tail });
    }
    let axis = config.keyed_axis(sel);
    let chi: Vec<Complex64> = (0..cutoff as i64).map(|k| config.dsr.characteristic(k)).collect();
    Ok(CMatrix::from_fn(cutoff, cutoff, |n, m| {
        let k = n as i64 - m as i64;
        if k % 2 != 0 {
            return Complex64::new(0.0, 0.0);
        }
        let ch = if k >= 0 { chi[k as usize] } else { chi[(-k) as usize].conj() };
        Complex64::from_polar(mags[n] * mags[m], k as f64 * axis) * ch
    }))
}

/// ‖ρ̄(kA) − ρ̄(kB)‖₁ between the averaged symbol states of two keyed
/// selectors. Only the basis matters: polarity is absorbed by the uniform
/// data average.
pub fn key_hiding_distance(config: &AlphaEtaConfig, ka: &SymbolSelector, kb: &SymbolSelector, cutoff: usize) -> Result<f64> {
    let a = averaged_symbol_state(config, ka, cutoff)?;
    let b = averaged_symbol_state(config, kb, cutoff)?;
    Ok(hermitian_trace_norm(&(a - b)))
}
