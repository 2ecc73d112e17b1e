//! Monte Carlo simulation of the keyed qubit scheme.
//!
//! Alice draws uniform data bits and sends each one on the constellation point
//! chosen by the running-key selector (line bit = data ⊕ polarity). The channel
//! depolarizes every qubit independently with probability λ. Bob measures in
//! the keyed basis. Eve is handed the same channel output and attacks it
//! either with one fixed projective measurement per qubit or by guessing the
//! seed key outright. A generated key is checked with a public Toeplitz hash.

use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::keystream::{bits_per_symbol, chunk_running_key, expand_key, Lfsr, LfsrSpec, Selectors, SymbolSelector};
use crate::mc::{derive_seed, trial_rng, Counts, Estimate, TrialRng, TrialRunner};
use crate::qubit::{state_on_circle, QkConstellation};
use crate::{Error, Result};

/// Largest seed key for which the key-guessing attack is simulated.
pub const KEY_GUESS_CAP: u32 = 20;

/// How the seed key K drives the per-qubit selectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum KeyMode {
    /// Expand K with the LFSR and take fresh selector bits for every qubit.
    #[default]
    Running,
    /// Use K itself as one selector, repeated on every qubit.
    Repeated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QkConfig {
    pub constellation: QkConstellation,
    pub lfsr: LfsrSpec,
    pub key: Vec<bool>,
    #[serde(default)]
    pub key_mode: KeyMode,
    pub data_len: usize,
    pub channel_noise: f64,
    #[serde(default = "default_verify_bits")]
    pub verify_bits: usize,
    /// Eve's constant measurement angle; the Helstrom direction when absent.
    #[serde(default)]
    pub eve_angle: Option<f64>,
    pub rng_seed: u64,
}

fn default_verify_bits() -> usize {
    16
}

impl QkConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.channel_noise) {
            return Err(Error::Range {
                name: "channelNoise",
                value: self.channel_noise,
            });
        }
        if self.data_len == 0 {
            return Err(Error::Domain("dataLength must be >= 1".into()));
        }
        if self.verify_bits == 0 {
            return Err(Error::Domain("verifyBits must be >= 1".into()));
        }
        self.lfsr.validate()?;
        Ok(())
    }

    pub fn per_symbol_bits(&self) -> Result<usize> {
        bits_per_symbol(self.constellation.m, self.constellation.polarity)
    }

    /// Selectors for all `data_len` qubits under `key`.
    pub fn selectors_for(&self, key: &[bool]) -> Result<Vec<SymbolSelector>> {
        let c = &self.constellation;
        let per = self.per_symbol_bits()?;
        match self.key_mode {
            KeyMode::Running => {
                let k = expand_key(&self.lfsr, key, per * self.data_len)?;
                chunk_running_key(&k.bits, c.m, c.polarity)
            }
            KeyMode::Repeated => {
                let one = chunk_running_key(key, c.m, c.polarity)?;
                Ok(alloc::vec![one[0]; self.data_len])
            }
        }
    }

    pub fn selectors(&self) -> Result<Vec<SymbolSelector>> {
        self.selectors_for(&self.key)
    }

    fn eve_angle_or_best(&self) -> f64 {
        self.eve_angle
            .unwrap_or_else(|| self.constellation.best_measurement_angle())
    }
}

/// Hook for a classical error-correcting code on Bob's raw bits.
pub trait ErrorCorrection {
    fn decode(&self, raw: Vec<bool>) -> Vec<bool>;
}

/// The identity code: Bob keeps his raw decisions.
#[derive(Debug, Clone, Copy, Default)]
pub struct PassThrough;

impl ErrorCorrection for PassThrough {
    fn decode(&self, raw: Vec<bool>) -> Vec<bool> {
        raw
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accept,
    Reject,
}

/// One protocol run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrialRecord {
    pub trial_index: u64,
    pub data_bits: Vec<bool>,
    pub bob_bits: Vec<bool>,
    pub eve_bits: Vec<bool>,
    pub bob_errors: usize,
    pub eve_errors: usize,
    pub verify_verdict: Verdict,
}

/// Circle angle of the point that carries `data` under `sel`.
fn tx_angle(c: &QkConstellation, sel: &SymbolSelector, data: bool) -> Result<f64> {
    Ok(c.point_angle(c.point_for(sel.basis_index, data ^ sel.polarity_bit())?))
}

/// Measure the channel output in the basis of `sel` and decode a data bit.
fn keyed_measure(
    c: &QkConstellation,
    sel: &SymbolSelector,
    sent_angle: f64,
    lambda: f64,
    rng: &mut TrialRng,
) -> Result<bool> {
    let zero_angle = c.point_angle(c.point_for(sel.basis_index, false)?);
    let p_plus = state_on_circle(sent_angle)
        .depolarize(lambda)
        .prob_plus(zero_angle);
    let line_bit = !rng.random_bool(p_plus);
    Ok(line_bit ^ sel.polarity_bit())
}

/// Eve's per-qubit decision rule for a fixed measurement angle.
#[derive(Debug, Clone, Copy)]
struct ConstantDecoder {
    angle: f64,
    // decision for outcome +, outcome −; None means a coin flip
    on_plus: Option<bool>,
    on_minus: Option<bool>,
}

impl ConstantDecoder {
    fn new(c: &QkConstellation, angle: f64) -> Self {
        let s = c.eve_states();
        let p0 = s.rho0.prob_plus(angle);
        let p1 = s.rho1.prob_plus(angle);
        let pick = |q0: f64, q1: f64| {
            if (q0 - q1).abs() < 1e-15 {
                None
            } else {
                Some(q1 > q0)
            }
        };
        Self {
            angle,
            on_plus: pick(p0, p1),
            on_minus: pick(1.0 - p0, 1.0 - p1),
        }
    }

    fn decide(&self, sent_angle: f64, lambda: f64, rng: &mut TrialRng) -> bool {
        let p_plus = state_on_circle(sent_angle)
            .depolarize(lambda)
            .prob_plus(self.angle);
        let plus = rng.random_bool(p_plus);
        let rule = if plus { self.on_plus } else { self.on_minus };
        rule.unwrap_or_else(|| rng.random_bool(0.5))
    }
}

fn random_bits(rng: &mut TrialRng, n: usize) -> Vec<bool> {
    (0..n).map(|_| rng.random_bool(0.5)).collect()
}

/// One full run: data, keyed transmission, Bob, Eve's constant attack and
/// key verification of Bob's (raw) bits against Alice's.
pub fn run_qk_trial(config: &QkConfig, trial_index: u64) -> Result<TrialRecord> {
    run_qk_trial_with(config, trial_index, &PassThrough)
}

pub fn run_qk_trial_with(
    config: &QkConfig,
    trial_index: u64,
    code: &dyn ErrorCorrection,
) -> Result<TrialRecord> {
    config.validate()?;
    let selectors = config.selectors()?;
    let decoder = ConstantDecoder::new(&config.constellation, config.eve_angle_or_best());
    let mut rng = trial_rng(config.rng_seed, trial_index);
    trial_with(config, &selectors, &decoder, code, trial_index, &mut rng)
}

fn trial_with(
    config: &QkConfig,
    selectors: &[SymbolSelector],
    decoder: &ConstantDecoder,
    code: &dyn ErrorCorrection,
    trial_index: u64,
    rng: &mut TrialRng,
) -> Result<TrialRecord> {
    let c = &config.constellation;
    let lambda = config.channel_noise;
    let data = random_bits(rng, config.data_len);
    let mut bob = Vec::with_capacity(data.len());
    let mut eve = Vec::with_capacity(data.len());
    for (sel, &x) in selectors.iter().zip(&data) {
        let angle = tx_angle(c, sel, x)?;
        bob.push(keyed_measure(c, sel, angle, lambda, rng)?);
        eve.push(decoder.decide(angle, lambda, rng));
    }
    let bob = code.decode(bob);
    let kv = random_bits(rng, config.verify_bits);
    let hash_seed: u64 = rng.random();
    let verdict = key_verify(&data, &bob, &kv, hash_seed)?;
    let errors = |v: &[bool]| v.iter().zip(&data).filter(|(a, b)| a != b).count();
    Ok(TrialRecord {
        trial_index,
        bob_errors: errors(&bob),
        eve_errors: errors(&eve),
        data_bits: data,
        bob_bits: bob,
        eve_bits: eve,
        verify_verdict: verdict,
    })
}

/// A batch of `trials` runs, in trial order.
pub fn run_qk_batch(config: &QkConfig, trials: u64) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    let selectors = config.selectors()?;
    let decoder = ConstantDecoder::new(&config.constellation, config.eve_angle_or_best());
    (0..trials)
        .map(|i| {
            let mut rng = trial_rng(config.rng_seed, i);
            trial_with(config, &selectors, &decoder, &PassThrough, i, &mut rng)
        })
        .collect()
}

/// Bob's and Eve's bit error rates over `trials` runs of `data_len` qubits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerPair {
    pub bob: Estimate,
    pub eve: Estimate,
}

/// Monte Carlo BER for Bob's keyed measurement and Eve's constant individual
/// attack at `angle` (Helstrom direction when `None`).
pub fn simulate_bers<R: TrialRunner>(
    config: &QkConfig,
    angle: Option<f64>,
    trials: u64,
    runner: &R,
) -> Result<BerPair> {
    config.validate()?;
    let selectors = config.selectors()?;
    let angle = angle.unwrap_or_else(|| config.eve_angle_or_best());
    let decoder = ConstantDecoder::new(&config.constellation, angle);
    let c = config.constellation;
    let lambda = config.channel_noise;
    // every selector was validated when it was built
    for sel in &selectors {
        c.point_for(sel.basis_index, false)?;
    }
    let (bob, eve): (Counts, Counts) = runner.run(
        config.rng_seed,
        trials,
        |_, rng, t: &mut (Counts, Counts)| {
            for sel in &selectors {
                let x = rng.random_bool(0.5);
                let angle = tx_angle(&c, sel, x).expect("validated selector");
                let b = keyed_measure(&c, sel, angle, lambda, rng).expect("validated selector");
                let e = decoder.decide(angle, lambda, rng);
                t.0.record(b != x);
                t.1.record(e != x);
            }
        },
    );
    Ok(BerPair {
        bob: bob.estimate(),
        eve: eve.estimate(),
    })
}

/// Eve's constant individual attack: same projective measurement at `angle`
/// on every qubit, per-qubit ML decoding against the key-averaged states.
pub fn eve_constant_individual_attack<R: TrialRunner>(
    config: &QkConfig,
    angle: f64,
    trials: u64,
    runner: &R,
) -> Result<Estimate> {
    Ok(simulate_bers(config, Some(angle), trials, runner)?.eve)
}

/// Whether Eve, measuring every qubit in the bases of `guess`, decodes all
/// `data_len` bits of one fresh run correctly.
pub fn key_guess_success(config: &QkConfig, true_selectors: &[SymbolSelector], guess: &[bool], rng: &mut TrialRng) -> Result<bool> {
    let c = &config.constellation;
    if guess.iter().all(|&b| !b) && config.key_mode == KeyMode::Running {
        return Ok(false);
    }
    let guessed: alloc::boxed::Box<dyn Iterator<Item = SymbolSelector>> = match config.key_mode {
        KeyMode::Running => alloc::boxed::Box::new(Selectors::new(
            Lfsr::new(&config.lfsr, guess)?,
            c.m,
            c.polarity,
        )?),
        KeyMode::Repeated => {
            let one = chunk_running_key(guess, c.m, c.polarity)?[0];
            alloc::boxed::Box::new(core::iter::repeat(one))
        }
    };
    for (truth, g) in true_selectors.iter().zip(guessed) {
        let x = rng.random_bool(0.5);
        let angle = tx_angle(c, truth, x)?;
        if keyed_measure(c, &g, angle, config.channel_noise, rng)? != x {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Per trial Eve guesses the whole seed key uniformly from `{0,1}^|K|` and
/// succeeds iff every bit of the run decodes correctly.
pub fn eve_key_guess_attack<R: TrialRunner>(config: &QkConfig, trials: u64, runner: &R) -> Result<Estimate> {
    config.validate()?;
    let key_len = config.key.len() as u32;
    if key_len > KEY_GUESS_CAP {
        return Err(Error::Tractability {
            what: "|K|",
            value: key_len as u64,
            cap: KEY_GUESS_CAP as u64,
        });
    }
    let truth = config.selectors()?;
    let seed = derive_seed(config.rng_seed, 0x6b65_795f_6775_6573);
    let counts: Counts = runner.run(seed, trials, |_, rng, t: &mut Counts| {
        let guess = random_bits(rng, key_len as usize);
        let ok = key_guess_success(config, &truth, &guess, rng).expect("validated config");
        t.record(ok);
    });
    Ok(counts.estimate())
}

/// Random binary Toeplitz matrix of size `out_bits × in_bits`, drawn from a
/// seed that both parties may announce publicly. For any fixed nonzero input
/// difference the hash difference is uniform, so two distinct keys collide
/// with probability exactly 2^−out_bits.
#[derive(Debug, Clone)]
pub struct ToeplitzHash {
    out_bits: usize,
    in_bits: usize,
    diag: Vec<u64>,
}

impl ToeplitzHash {
    pub fn new(out_bits: usize, in_bits: usize, seed: u64) -> Self {
        let len = out_bits + in_bits - 1;
        let mut rng = trial_rng(seed, 0);
        let diag = (0..len.div_ceil(64) + 1).map(|_| rng.random()).collect();
        Self {
            out_bits,
            in_bits,
            diag,
        }
    }

    fn window(&self, offset: usize, word: usize) -> u64 {
        let bit = offset + 64 * word;
        let (w, s) = (bit / 64, bit % 64);
        let lo = self.diag[w] >> s;
        if s == 0 {
            lo
        } else {
            lo | self.diag.get(w + 1).copied().unwrap_or(0) << (64 - s)
        }
    }

    /// Hash of `key` (length must equal `in_bits`), one output bit per row.
    pub fn hash(&self, key: &[bool]) -> Vec<bool> {
        debug_assert_eq!(key.len(), self.in_bits);
        let words = pack(key);
        let tail = self.in_bits % 64;
        (0..self.out_bits)
            .map(|row| {
                let offset = self.out_bits - 1 - row;
                let mut acc = 0u64;
                for (w, &kw) in words.iter().enumerate() {
                    let mut t = self.window(offset, w);
                    if w == words.len() - 1 && tail != 0 {
                        t &= (1u64 << tail) - 1;
                    }
                    acc ^= t & kw;
                }
                acc.count_ones() % 2 == 1
            })
            .collect()
    }
}

fn pack(bits: &[bool]) -> Vec<u64> {
    bits.chunks(64)
        .map(|c| {
            c.iter()
                .enumerate()
                .fold(0u64, |w, (i, &b)| w | (b as u64) << i)
        })
        .collect()
}

/// Open key verification: Alice publishes `hash(kgA) ⊕ kv`, Bob compares it
/// with `hash(kgB) ⊕ kv`. The hash is chosen by `hash_seed` and has |kv|
/// output bits.
pub fn key_verify(kg_a: &[bool], kg_b: &[bool], kv: &[bool], hash_seed: u64) -> Result<Verdict> {
    if kg_a.len() != kg_b.len() {
        return Err(Error::Domain(alloc::format!(
            "key lengths differ: {} vs {}",
            kg_a.len(),
            kg_b.len()
        )));
    }
    if kv.is_empty() || kg_a.is_empty() {
        return Err(Error::Domain("empty key or verification key".into()));
    }
    let h = ToeplitzHash::new(kv.len(), kg_a.len(), hash_seed);
    let tag = |k: &[bool]| -> Vec<bool> { h.hash(k).iter().zip(kv).map(|(a, b)| a ^ b).collect() };
    Ok(if tag(kg_a) == tag(kg_b) {
        Verdict::Accept
    } else {
        Verdict::Reject
    })
}

/// Rate at which `key_verify` accepts uniformly random distinct key pairs.
pub fn false_accept_rate<R: TrialRunner>(
    key_bits: usize,
    kv_bits: usize,
    trials: u64,
    seed: u64,
    runner: &R,
) -> Result<Estimate> {
    if key_bits == 0 || kv_bits == 0 {
        return Err(Error::Domain("key and verification lengths must be >= 1".into()));
    }
    let counts: Counts = runner.run(seed, trials, |_, rng, t: &mut Counts| {
        let a = random_bits(rng, key_bits);
        let mut b = random_bits(rng, key_bits);
        if a == b {
            let i = rng.random_range(0..key_bits);
            b[i] = !b[i];
        }
        let kv = random_bits(rng, kv_bits);
        let hash_seed: u64 = rng.random();
        let v = key_verify(&a, &b, &kv, hash_seed).expect("lengths checked");
        t.record(v == Verdict::Accept);
    });
    Ok(counts.estimate())
}
