//! Coherent pulse position modulation scrambled by a keyed mode mixer.
//!
//! A message `i < m` is the PPM state `√S·e_i` (all energy in mode i, the
//! other modes in vacuum). The key selects a unitary `U_k` realized as a
//! butterfly mesh of two-mode Givens rotations; the transmitted amplitude
//! vector is `U_k √S e_i`. Coherent states stay coherent under linear optics,
//! so amplitude vectors describe the state exactly.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::keystream::{bits_value, expand_key, LfsrSpec};
use crate::linalg::CMatrix;
use crate::mc::{derive_seed, trial_rng, Counts, Estimate, Histogram, Moments, Tally, TrialRunner};
use crate::qumode::heterodyne_noise;
use crate::special::normal_cdf;
use crate::{Complex64, Error, Result};

/// Key bits spent on one rotation angle.
pub const ANGLE_BITS: usize = 8;
/// Key bits spent on one rotation phase.
pub const PHASE_BITS: usize = 8;
/// Largest key length for which key-space enumeration is allowed.
pub const BRUTE_FORCE_KEY_CAP: u32 = 20;
/// Largest key length for the posterior key-leak estimate.
pub const KEY_LEAK_CAP: u32 = 12;
/// Photon means below this are sampled as vacuum; the skipped click
/// probability is below 1e−24 per mode.
const VACUUM_MEAN: f64 = 1e-24;

/// Amplitudes of an m-mode coherent state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeAmplitudes {
    pub amps: Vec<Complex64>,
}

impl ModeAmplitudes {
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() < 2 {
            return Err(Error::Domain("need at least two modes".into()));
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::Domain("non-finite amplitude".into()));
        }
        Ok(Self { amps })
    }

    /// PPM state `√S·e_i` on `m` modes.
    pub fn ppm(i: usize, m: usize, s: f64) -> Result<Self> {
        if i >= m {
            return Err(Error::Domain(alloc::format!("message {i} out of range for m = {m}")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); m];
        amps[i] = Complex64::new(libm::sqrt(s), 0.0);
        Self::new(amps)
    }

    pub fn m(&self) -> usize {
        self.amps.len()
    }

    pub fn total_energy(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ExponentConvention {
    /// The printed exponent n = log₂ m.
    Log2M,
    /// m − 1, the orthogonal-signal bound.
    #[default]
    MMinusOne,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CppmConfig {
    pub m: usize,
    pub s: f64,
    pub key_bits: u32,
    #[serde(default = "default_one")]
    pub transmittance: f64,
    pub rng_seed: u64,
}

fn default_one() -> f64 {
    1.0
}

impl CppmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m < 2 || !self.m.is_power_of_two() {
            return Err(Error::UnsupportedConstellation(self.m));
        }
        if !(self.s >= 0.0) || !self.s.is_finite() {
            return Err(Error::Range { name: "S", value: self.s });
        }
        if !(self.transmittance > 0.0 && self.transmittance <= 1.0) {
            return Err(Error::Range {
                name: "transmittance",
                value: self.transmittance,
            });
        }
        LfsrSpec::primitive(self.key_bits)?;
        Ok(())
    }

    /// LFSR used to expand a key into mesh parameters.
    pub fn lfsr(&self) -> Result<LfsrSpec> {
        LfsrSpec::primitive(self.key_bits)
    }

    /// Mesh for seed key `key`.
    pub fn mesh(&self, key: &[bool]) -> Result<GivensMesh> {
        GivensMesh::from_key(&self.lfsr()?, key, self.m)
    }

    /// Uniform nonzero key of `key_bits` bits.
    pub fn random_key<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<bool> {
        let n = self.key_bits as usize;
        loop {
            let k: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
            if k.iter().any(|&b| b) {
                return k;
            }
        }
    }

    /// Every nonzero key, in counting order.
    pub fn key_space(&self) -> Result<Vec<Vec<bool>>> {
        if self.key_bits > BRUTE_FORCE_KEY_CAP {
            return Err(Error::Tractability {
                what: "key space",
                value: 1u64 << self.key_bits.min(63),
                cap: 1u64 << BRUTE_FORCE_KEY_CAP,
            });
        }
        Ok((1u64..1u64 << self.key_bits)
            .map(|v| crate::keystream::bits_of(v, self.key_bits as usize))
            .collect())
    }
}

/// One two-mode rotation `[[c, −e^{−iφ}s], [e^{iφ}s, c]]` on modes (a, b).
#[derive(Debug, Clone, Copy, PartialEq)]
struct Givens {
    a: usize,
    b: usize,
    c: f64,
    /// e^{iφ}·sin θ
    s: Complex64,
}

impl Givens {
    fn apply(&self, v: &mut [Complex64]) {
        let (x, y) = (v[self.a], v[self.b]);
        v[self.a] = x * self.c - self.s.conj() * y;
        v[self.b] = self.s * x + y * self.c;
    }

    fn apply_inverse(&self, v: &mut [Complex64]) {
        let (x, y) = (v[self.a], v[self.b]);
        v[self.a] = x * self.c + self.s.conj() * y;
        v[self.b] = -self.s * x + y * self.c;
    }
}

/// Butterfly network of `m·log₂m/2` Givens rotations: stage `t` pairs modes
/// `j` and `j + 2^t` for every `j` with bit `t` clear.
#[derive(Debug, Clone, PartialEq)]
pub struct GivensMesh {
    m: usize,
    rotations: Vec<Givens>,
}

impl GivensMesh {
    pub fn rotation_count(m: usize) -> usize {
        m * m.trailing_zeros() as usize / 2
    }

    /// Key bits consumed by a mesh on `m` modes.
    pub fn bits_needed(m: usize) -> usize {
        Self::rotation_count(m) * (ANGLE_BITS + PHASE_BITS)
    }

    /// Build from raw parameter bits: per rotation, 8 angle bits `v` give
    /// θ = (v/255)·π/2 and 8 phase bits `w` give φ = 2πw/256.
    pub fn from_bits(bits: &[bool], m: usize) -> Result<Self> {
        if m < 2 || !m.is_power_of_two() {
            return Err(Error::UnsupportedConstellation(m));
        }
        let needed = Self::bits_needed(m);
        if bits.len() < needed {
            return Err(Error::KeystreamExhausted {
                needed,
                available: bits.len(),
            });
        }
        let angle_max = ((1u64 << ANGLE_BITS) - 1) as f64;
        let phase_steps = (1u64 << PHASE_BITS) as f64;
        let mut chunks = bits.chunks(ANGLE_BITS + PHASE_BITS);
        let mut rotations = Vec::with_capacity(Self::rotation_count(m));
        for t in 0..m.trailing_zeros() {
            let span = 1usize << t;
            for a in (0..m).filter(|j| j & span == 0) {
                let chunk = chunks.next().expect("length checked");
                let theta = bits_value(&chunk[..ANGLE_BITS]) as f64 / angle_max * PI / 2.0;
                let phi = 2.0 * PI * bits_value(&chunk[ANGLE_BITS..]) as f64 / phase_steps;
                rotations.push(Givens {
                    a,
                    b: a + span,
                    c: libm::cos(theta),
                    s: Complex64::from_polar(libm::sin(theta), phi),
                });
            }
        }
        Ok(Self { m, rotations })
    }

    /// Expand `key` with `lfsr` and build the mesh.
    pub fn from_key(lfsr: &LfsrSpec, key: &[bool], m: usize) -> Result<Self> {
        let k = expand_key(lfsr, key, Self::bits_needed(m))?;
        Self::from_bits(&k.bits, m)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn apply(&self, v: &mut [Complex64]) {
        debug_assert_eq!(v.len(), self.m);
        for g in &self.rotations {
            g.apply(v);
        }
    }

    pub fn apply_inverse(&self, v: &mut [Complex64]) {
        debug_assert_eq!(v.len(), self.m);
        for g in self.rotations.iter().rev() {
            g.apply_inverse(v);
        }
    }

    /// Dense matrix of the mesh.
    pub fn to_matrix(&self) -> CMatrix {
        let mut u = CMatrix::zeros(self.m, self.m);
        let mut col = vec![Complex64::new(0.0, 0.0); self.m];
        for j in 0..self.m {
            col.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
            col[j] = Complex64::new(1.0, 0.0);
            self.apply(&mut col);
            for (i, c) in col.iter().enumerate() {
                u[(i, j)] = *c;
            }
        }
        u
    }
}

/// Dense unitary `U_k` for seed key `key`.
pub fn key_unitary(lfsr: &LfsrSpec, key: &[bool], m: usize) -> Result<CMatrix> {
    Ok(GivensMesh::from_key(lfsr, key, m)?.to_matrix())
}

/// `U_k · √S e_i`.
pub fn cppm_modulate(i: usize, mesh: &GivensMesh, s: f64) -> Result<ModeAmplitudes> {
    let mut v = ModeAmplitudes::ppm(i, mesh.m(), s)?;
    mesh.apply(&mut v.amps);
    Ok(v)
}

/// Uniform choice among the indices attaining the maximum of `score`.
fn argmax_uniform<R: Rng + ?Sized>(scores: impl Iterator<Item = f64>, rng: &mut R) -> usize {
    let mut best = f64::NEG_INFINITY;
    let mut ties = 0usize;
    let mut pick = 0usize;
    for (j, x) in scores.enumerate() {
        if x > best {
            best = x;
            ties = 1;
            pick = j;
        } else if x == best {
            // reservoir sampling over tied indices
            ties += 1;
            if rng.random_range(0..ties) == 0 {
                pick = j;
            }
        }
    }
    pick
}

fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean < VACUUM_MEAN {
        return 0;
    }
    Poisson::new(mean).map(|p| p.sample(rng) as u64).unwrap_or(0)
}

/// Bob undoes the keyed mixing and counts photons in every mode
/// (`count_j ~ Poisson(η|v_j|²)`); the largest count wins, ties and the
/// all-dark outcome are broken uniformly.
pub fn bob_direct_decode<R: Rng + ?Sized>(
    received: &ModeAmplitudes,
    mesh: &GivensMesh,
    transmittance: f64,
    rng: &mut R,
) -> usize {
    let mut v = received.amps.clone();
    mesh.apply_inverse(&mut v);
    let counts: Vec<u64> = v.iter().map(|a| poisson_count(transmittance * a.norm_sqr(), rng)).collect();
    argmax_uniform(counts.iter().map(|&c| c as f64), rng)
}

/// Closed-form direct-detection block error `(1 − 1/m)·e^{−ηS}`.
pub fn direct_detection_error(m: usize, s: f64, eta: f64) -> f64 {
    (1.0 - 1.0 / m as f64) * libm::exp(-eta * s)
}

/// Monte Carlo block error of Bob's decoder with one key per experiment.
pub fn bob_block_error<R: TrialRunner>(config: &CppmConfig, trials: u64, runner: &R) -> Result<Estimate> {
    config.validate()?;
    let mut krng = trial_rng(derive_seed(config.rng_seed, 1), 0);
    let mesh = config.mesh(&config.random_key(&mut krng))?;
    let counts: Counts = runner.run(config.rng_seed, trials, |_, rng, t: &mut Counts| {
        let i = rng.random_range(0..config.m);
        let x = cppm_modulate(i, &mesh, config.s).expect("index in range");
        t.record(bob_direct_decode(&x, &mesh, config.transmittance, rng) != i);
    });
    Ok(counts.estimate())
}

/// Eve's per-key guesses for one heterodyne record `y`: argmax over modes of
/// `|U_k'^{−1} y|`, plus the joint guess maximizing over keys and modes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EveGuess {
    pub per_key: Vec<usize>,
    /// `(key index, message)` of the largest magnitude overall.
    pub joint: Option<(usize, usize)>,
}

/// One heterodyne draw on all modes of the transmitted state.
pub fn heterodyne_modes<R: Rng + ?Sized>(transmitted: &ModeAmplitudes, rng: &mut R) -> Vec<Complex64> {
    transmitted.amps.iter().map(|&a| a + heterodyne_noise(rng)).collect()
}

/// Decode a heterodyne record under each trial mesh.
pub fn eve_decode_record<R: Rng + ?Sized>(y: &[Complex64], trial_meshes: &[GivensMesh], rng: &mut R) -> EveGuess {
    let mut per_key = Vec::with_capacity(trial_meshes.len());
    let mut joint = None;
    let mut best = f64::NEG_INFINITY;
    let mut buf = y.to_vec();
    for (k, mesh) in trial_meshes.iter().enumerate() {
        buf.copy_from_slice(y);
        mesh.apply_inverse(&mut buf);
        let g = argmax_uniform(buf.iter().map(|c| c.norm_sqr()), rng);
        let mag = buf[g].norm_sqr();
        if mag > best {
            best = mag;
            joint = Some((k, g));
        }
        per_key.push(g);
    }
    EveGuess { per_key, joint }
}

/// Eve heterodynes the transmitted state (before channel loss) and decodes
/// it under each trial mesh.
pub fn eve_heterodyne_decode<R: Rng + ?Sized>(transmitted: &ModeAmplitudes, trial_meshes: &[GivensMesh], rng: &mut R) -> EveGuess {
    let y = heterodyne_modes(transmitted, rng);
    eve_decode_record(&y, trial_meshes, rng)
}

/// Block-error statistics for Eve's heterodyne attack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EveBlockStats {
    /// Decoding with the true key alone.
    pub true_key: Estimate,
    /// Joint decision over the trial keys plus the true key.
    pub included: Estimate,
    /// Joint decision over the trial keys only.
    pub excluded: Estimate,
    /// Average over trial keys of the per-key block error.
    pub per_wrong_key: Estimate,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct EveTally {
    true_key: Counts,
    included: Counts,
    excluded: Counts,
    per_wrong_key: Counts,
}

impl Tally for EveTally {
    fn merge(&mut self, o: Self) {
        self.true_key.merge(o.true_key);
        self.included.merge(o.included);
        self.excluded.merge(o.excluded);
        self.per_wrong_key.merge(o.per_wrong_key);
    }
}

/// Monte Carlo of Eve's heterodyne attack with one true key and
/// `wrong_keys` distinct random trial keys fixed for the experiment.
pub fn eve_block_error<R: TrialRunner>(config: &CppmConfig, wrong_keys: usize, trials: u64, runner: &R) -> Result<EveBlockStats> {
    config.validate()?;
    let mut krng = trial_rng(derive_seed(config.rng_seed, 1), 0);
    let truth = config.random_key(&mut krng);
    let mut keys: Vec<Vec<bool>> = Vec::with_capacity(wrong_keys);
    let space = (1u64 << config.key_bits.min(63)) - 2;
    if wrong_keys as u64 > space {
        return Err(Error::Domain(alloc::format!("only {space} wrong keys exist")));
    }
    while keys.len() < wrong_keys {
        let k = config.random_key(&mut krng);
        if k != truth && !keys.contains(&k) {
            keys.push(k);
        }
    }
    let true_mesh = config.mesh(&truth)?;
    let mut meshes = keys.iter().map(|k| config.mesh(k)).collect::<Result<Vec<_>>>()?;
    meshes.push(true_mesh.clone());
    let n_wrong = meshes.len() - 1;
    let t: EveTally = runner.run(derive_seed(config.rng_seed, 2), trials, |_, rng, t: &mut EveTally| {
        let i = rng.random_range(0..config.m);
        let x = cppm_modulate(i, &true_mesh, config.s).expect("index in range");
        let y = heterodyne_modes(&x, rng);
        let wrong = eve_decode_record(&y, &meshes[..n_wrong], rng);
        let own = eve_decode_record(&y, &meshes[n_wrong..], rng);
        t.true_key.record(own.per_key[0] != i);
        for &g in &wrong.per_key {
            t.per_wrong_key.record(g != i);
        }
        if let Some((_, g)) = wrong.joint {
            t.excluded.record(g != i);
        }
        // the true key joins the joint decision when it beats every wrong key
        let mut buf = y.clone();
        true_mesh.apply_inverse(&mut buf);
        let own_mag = buf[own.per_key[0]].norm_sqr();
        let wrong_best = wrong
            .joint
            .map(|(k, g)| {
                let mut b = y.clone();
                meshes[k].apply_inverse(&mut b);
                b[g].norm_sqr()
            })
            .unwrap_or(f64::NEG_INFINITY);
        let inc = if own_mag >= wrong_best { own.per_key[0] } else { wrong.joint.map(|(_, g)| g).unwrap_or(0) };
        t.included.record(inc != i);
    });
    Ok(EveBlockStats {
        true_key: t.true_key.estimate(),
        included: t.included.estimate(),
        excluded: t.excluded.estimate(),
        per_wrong_key: t.per_wrong_key.estimate(),
    })
}

/// Lower bound on heterodyne block error: `(1 − Φ(y)^e)·Φ(y − √(2S))`.
pub fn heterodyne_error_lower_bound(m: usize, s: f64, y: f64, convention: ExponentConvention) -> f64 {
    let e = match convention {
        ExponentConvention::Log2M => m.trailing_zeros() as f64,
        ExponentConvention::MMinusOne => (m - 1) as f64,
    };
    (1.0 - libm::pow(normal_cdf(y), e)) * normal_cdf(y - libm::sqrt(2.0 * s))
}

/// Best bound over `y ∈ [lo, hi]` on a uniform grid of `points`.
pub fn heterodyne_error_lower_bound_max(
    m: usize,
    s: f64,
    convention: ExponentConvention,
    lo: f64,
    hi: f64,
    points: usize,
) -> (f64, f64) {
    let points = points.max(2);
    (0..points)
        .map(|j| {
            let y = lo + (hi - lo) * j as f64 / (points - 1) as f64;
            (y, heterodyne_error_lower_bound(m, s, y, convention))
        })
        .fold((lo, f64::NEG_INFINITY), |acc, p| if p.1 > acc.1 { p } else { acc })
}

/// The default search window for the bound maximization.
pub fn heterodyne_bound_default(m: usize, s: f64, convention: ExponentConvention) -> (f64, f64) {
    heterodyne_error_lower_bound_max(m, s, convention, -4.0, 4.0 + libm::sqrt(2.0 * s), 2001)
}

/// Conditional wrong-guess distribution: histogram of `guess ⊕ message`
/// over error events, and its chi-square statistic per degree of freedom
/// against uniform over the `m − 1` alternatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ErrorProfileTest {
    pub m: usize,
    pub trials: u64,
    pub error_events: u64,
    pub histogram: Vec<u64>,
    pub chi_square_per_dof: f64,
}

/// Eve decodes with an independent uniform key in every trial (the true key
/// also fresh per trial) until the trial budget is spent.
pub fn error_profile<R: TrialRunner>(config: &CppmConfig, trials: u64, runner: &R) -> Result<ErrorProfileTest> {
    config.validate()?;
    let lfsr = config.lfsr()?;
    let h: Histogram = runner.run(derive_seed(config.rng_seed, 3), trials, |_, rng, h: &mut Histogram| {
        if h.bins.is_empty() {
            h.bins.resize(config.m, 0);
        }
        let truth = GivensMesh::from_key(&lfsr, &config.random_key(rng), config.m).expect("valid key");
        let guess_key = GivensMesh::from_key(&lfsr, &config.random_key(rng), config.m).expect("valid key");
        let i = rng.random_range(0..config.m);
        let x = cppm_modulate(i, &truth, config.s).expect("index in range");
        let g = eve_heterodyne_decode(&x, core::slice::from_ref(&guess_key), rng).per_key[0];
        h.bump(g ^ i);
    });
    let mut hist = h.bins;
    hist.resize(config.m, 0);
    let events: u64 = hist[1..].iter().sum();
    Ok(ErrorProfileTest {
        m: config.m,
        trials,
        error_events: events,
        chi_square_per_dof: chi_square_uniform(&hist[1..]),
        histogram: hist,
    })
}

/// Pearson chi-square against uniform, divided by `len − 1`.
pub fn chi_square_uniform(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    if counts.len() < 2 || n == 0 {
        return 0.0;
    }
    let e = n as f64 / counts.len() as f64;
    let chi: f64 = counts.iter().map(|&c| (c as f64 - e) * (c as f64 - e) / e).sum();
    chi / (counts.len() - 1) as f64
}

/// Monte Carlo estimate of I(K; Y_E | X) in bits for a key drawn uniformly
/// from `keys`, by exact posterior over `keys` with complex Gaussian
/// likelihoods `∝ exp(−|y − √S·U_k e_x|²)`.
pub fn key_leak_over_keys<R: TrialRunner>(config: &CppmConfig, keys: &[Vec<bool>], trials: u64, runner: &R) -> Result<Estimate> {
    config.validate()?;
    if keys.is_empty() {
        return Err(Error::Domain("empty key set".into()));
    }
    let meshes = keys.iter().map(|k| config.mesh(k)).collect::<Result<Vec<_>>>()?;
    // columns U_k √S e_x for every key and message
    let columns: Vec<Vec<ModeAmplitudes>> = meshes
        .iter()
        .map(|u| (0..config.m).map(|x| cppm_modulate(x, u, config.s)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let n = keys.len();
    let log2n = libm::log2(n as f64);
    let moments: Moments = runner.run(derive_seed(config.rng_seed, 4), trials, |_, rng, t: &mut Moments| {
        let k = rng.random_range(0..n);
        let x = rng.random_range(0..config.m);
        let y = heterodyne_modes(&columns[k][x], rng);
        let ll: Vec<f64> = columns
            .iter()
            .map(|c| -c[x].amps.iter().zip(&y).map(|(a, b)| (b - a).norm_sqr()).sum::<f64>())
            .collect();
        let top = ll.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = ll.iter().map(|l| libm::exp(l - top)).sum();
        let log_post = (ll[k] - top - libm::log(z)) / core::f64::consts::LN_2;
        t.push(log2n + log_post);
    });
    Ok(moments.estimate())
}

/// [`key_leak_over_keys`] over the whole nonzero key space.
pub fn key_leak_given_plaintext<R: TrialRunner>(config: &CppmConfig, trials: u64, runner: &R) -> Result<Estimate> {
    if config.key_bits > KEY_LEAK_CAP {
        return Err(Error::Tractability {
            what: "key-leak posterior",
            value: 1u64 << config.key_bits.min(63),
            cap: 1u64 << KEY_LEAK_CAP,
        });
    }
    key_leak_over_keys(config, &config.key_space()?, trials, runner)
}
