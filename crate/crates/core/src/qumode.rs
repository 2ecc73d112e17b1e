//! Coherent-state receivers.
//!
//! Noise convention: heterodyne returns `y = α + w` with `w` circular complex
//! Gaussian, `E|w|² = 1`; homodyne at phase φ returns `Re(α e^{−iφ}) + g` with
//! `Var g = 1/4`. Under this convention binary antipodal signals `±√S` have
//! heterodyne error `Q(√(2S)) ≈ e^{−S}` and homodyne error `Q(2√S) ≈ e^{−2S}`.

use alloc::vec::Vec;
use core::f64::consts::PI;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::mc::{Counts, Estimate, TrialRunner};
use crate::special::{ln_factorial, q_function, wrap_angle};
use crate::{Complex64, Error, Result};

/// Largest allowed tail mass outside a truncated Fock expansion.
pub const FOCK_TAIL_TOL: f64 = 1e-8;

/// Single-mode coherent state amplitude α.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentAmplitude(pub Complex64);

impl CoherentAmplitude {
    pub fn new(re: f64, im: f64) -> Self {
        Self(Complex64::new(re, im))
    }

    pub fn from_polar(magnitude: f64, phase: f64) -> Self {
        Self(Complex64::from_polar(magnitude, phase))
    }

    /// Mean photon number S = |α|².
    pub fn photon_number(&self) -> f64 {
        self.0.norm_sqr()
    }

    pub fn phase(&self) -> f64 {
        self.0.arg()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0 * factor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "kind")]
pub enum GaussianReceiver {
    Heterodyne,
    Homodyne { phase: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReceiverOutcome {
    Heterodyne(Complex64),
    Homodyne(f64),
}

/// Circular complex Gaussian with unit total variance.
pub fn heterodyne_noise<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
}

pub fn heterodyne<R: Rng + ?Sized>(alpha: CoherentAmplitude, rng: &mut R) -> Complex64 {
    alpha.0 + heterodyne_noise(rng)
}

pub fn homodyne<R: Rng + ?Sized>(alpha: CoherentAmplitude, phase: f64, rng: &mut R) -> f64 {
    let g: f64 = rng.sample(StandardNormal);
    (alpha.0 * Complex64::from_polar(1.0, -phase)).re + 0.5 * g
}

pub fn gaussian_receiver_sample<R: Rng + ?Sized>(
    alpha: CoherentAmplitude,
    kind: GaussianReceiver,
    rng: &mut R,
) -> ReceiverOutcome {
    match kind {
        GaussianReceiver::Heterodyne => ReceiverOutcome::Heterodyne(heterodyne(alpha, rng)),
        GaussianReceiver::Homodyne { phase } => ReceiverOutcome::Homodyne(homodyne(alpha, phase, rng)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum BpskReceiver {
    OptimalExact,
    OptimalApprox,
    Kennedy,
    HeterodyneApprox,
    PhaseApprox,
}

/// Error probability for `{|√S⟩, |−√S⟩}` with equal priors.
pub fn bpsk_ber(s: f64, receiver: BpskReceiver) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::Range { name: "S", value: s });
    }
    let e = |k: f64| libm::exp(-k * s);
    Ok(match receiver {
        // ½(1 − √(1 − x)) written without cancellation
        BpskReceiver::OptimalExact => {
            let x = e(4.0);
            0.5 * x / (1.0 + libm::sqrt(-libm::expm1(-4.0 * s)))
        }
        BpskReceiver::OptimalApprox => 0.25 * e(4.0),
        BpskReceiver::Kennedy => 0.5 * e(4.0),
        BpskReceiver::HeterodyneApprox => 0.5 * e(1.0),
        BpskReceiver::PhaseApprox => 0.5 * e(2.0),
    })
}

/// Heterodyne BPSK error under the unit-noise convention, `Q(√(2S))`.
pub fn heterodyne_bpsk_ber(s: f64) -> f64 {
    q_function(libm::sqrt(2.0 * s))
}

/// Homodyne BPSK error along the signal axis, `Q(2√S)`.
pub fn homodyne_bpsk_ber(s: f64) -> f64 {
    q_function(2.0 * libm::sqrt(s))
}

/// |⟨α|β⟩|² = exp(−|α − β|²).
pub fn coherent_overlap_sq(a: CoherentAmplitude, b: CoherentAmplitude) -> f64 {
    libm::exp(-(a.0 - b.0).norm_sqr())
}

/// Helstrom error for two equiprobable coherent states.
pub fn coherent_helstrom(a: CoherentAmplitude, b: CoherentAmplitude) -> f64 {
    let d2 = (a.0 - b.0).norm_sqr();
    0.5 * (1.0 - libm::sqrt(-libm::expm1(-d2)))
}

/// Monte Carlo heterodyne BER for `±√S`, thresholding `Re(y)` at zero.
pub fn heterodyne_bpsk_ber_mc<R: TrialRunner>(s: f64, trials: u64, seed: u64, runner: &R) -> Estimate {
    let amp = libm::sqrt(s);
    let counts: Counts = runner.run(seed, trials, |_, rng, t: &mut Counts| {
        let bit = rng.random_bool(0.5);
        let alpha = CoherentAmplitude::new(if bit { -amp } else { amp }, 0.0);
        let y = heterodyne(alpha, rng);
        t.record((y.re < 0.0) != bit);
    });
    counts.estimate()
}

/// Displacement receiver with offset: the Chernoff-type expression
/// `exp(−2S cos²θ / (1 − cos θ)²)`.
///
/// Provisional: the source expression is typographically damaged and the
/// denominator is read as `(1 − cos θ)²`.
pub fn kennedy_offset_chernoff(s: f64, theta: f64) -> f64 {
    let c = libm::cos(theta);
    let d = (1.0 - c) * (1.0 - c);
    if d == 0.0 {
        return 0.0;
    }
    libm::exp(-2.0 * s * c * c / d)
}

/// Heterodyne Gaussian upper bound with offset, `½ exp(−S cos²θ)`.
pub fn heterodyne_offset_bound(s: f64, theta: f64) -> f64 {
    let c = libm::cos(theta);
    0.5 * libm::exp(-s * c * c)
}

/// Photon-number truncation that keeps the coherent-state tail below
/// [`FOCK_TAIL_TOL`] for S ≤ 100.
pub fn cutoff_rule(s: f64) -> usize {
    libm::ceil(s + 6.0 * libm::sqrt(s) + 10.0) as usize
}

/// Coherent state on number states `0..cutoff`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedFockVector {
    pub coefficients: Vec<Complex64>,
}

impl TruncatedFockVector {
    /// `c_n = e^{−|α|²/2} αⁿ / √n!`, failing when the discarded tail mass
    /// exceeds [`FOCK_TAIL_TOL`].
    pub fn coherent(alpha: CoherentAmplitude, cutoff: usize) -> Result<Self> {
        let r = alpha.0.norm();
        let phase = alpha.0.arg();
        let s = r * r;
        let coefficients: Vec<Complex64> = (0..cutoff)
            .map(|n| {
                let mag = if r == 0.0 {
                    if n == 0 { 1.0 } else { 0.0 }
                } else {
                    libm::exp(-0.5 * s + n as f64 * libm::log(r) - 0.5 * ln_factorial(n))
                };
                Complex64::from_polar(mag, n as f64 * phase)
            })
            .collect();
        let v = Self { coefficients };
        let tail = 1.0 - v.norm_sqr();
        if tail > FOCK_TAIL_TOL {
            return Err(Error::Truncation { cutoff, tail });
        }
        Ok(v)
    }

    pub fn cutoff(&self) -> usize {
        self.coefficients.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Canonical phase density sampled on a uniform grid over `[0, 2π)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDistribution {
    pub theta: Vec<f64>,
    pub density: Vec<f64>,
}

impl PhaseDistribution {
    pub fn step(&self) -> f64 {
        2.0 * PI / self.theta.len() as f64
    }

    /// Σ P(θ_k) Δθ. For a grid finer than the cutoff this equals the
    /// retained Fock norm exactly.
    pub fn total_mass(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.step()
    }

    /// Circular root-mean-square deviation about `center`.
    pub fn rms_width(&self, center: f64) -> f64 {
        let h = self.step();
        let m2: f64 = self
            .theta
            .iter()
            .zip(&self.density)
            .map(|(&t, &p)| {
                let d = wrap_angle(t - center);
                d * d * p * h
            })
            .sum();
        libm::sqrt(m2 / self.total_mass())
    }

    /// Mean resultant length R = |∫ e^{iθ} P(θ) dθ|.
    pub fn mean_resultant_length(&self) -> f64 {
        let h = self.step();
        let mut acc = Complex64::new(0.0, 0.0);
        for (&t, &p) in self.theta.iter().zip(&self.density) {
            acc += Complex64::from_polar(p * h, t);
        }
        acc.norm() / self.total_mass()
    }

    /// Circular standard deviation √(−2 ln R), the phase width Δθ used in
    /// reports. Agrees with [`Self::rms_width`] for well-peaked densities.
    pub fn circular_std(&self) -> f64 {
        libm::sqrt(-2.0 * libm::log(self.mean_resultant_length()))
    }

    /// Mass farther than π/2 from `center`: the error of deciding between
    /// `center` and its antipode by the nearer half-circle.
    pub fn antipodal_error(&self, center: f64) -> f64 {
        let h = self.step();
        let mut err = 0.0;
        for (&t, &p) in self.theta.iter().zip(&self.density) {
            let d = libm::fabs(wrap_angle(t - center));
            let w = if libm::fabs(d - PI / 2.0) < 1e-12 {
                0.5
            } else if d > PI / 2.0 {
                1.0
            } else {
                0.0
            };
            err += w * p * h;
        }
        err / self.total_mass()
    }
}

/// P(θ) = |Σ_n c_n e^{−inθ}|² / (2π) for the coherent state `alpha`,
/// peaked at arg α.
pub fn phase_pom_distribution(alpha: CoherentAmplitude, cutoff: usize, grid: usize) -> Result<PhaseDistribution> {
    if grid < 256 {
        return Err(Error::Domain(alloc::format!("grid size {grid} < 256")));
    }
    let v = TruncatedFockVector::coherent(alpha, cutoff)?;
    let h = 2.0 * PI / grid as f64;
    let mut theta = Vec::with_capacity(grid);
    let mut density = Vec::with_capacity(grid);
    for k in 0..grid {
        let t = h * k as f64;
        let step = Complex64::from_polar(1.0, -t);
        let mut w = Complex64::new(1.0, 0.0);
        let mut acc = Complex64::new(0.0, 0.0);
        for c in &v.coefficients {
            acc += c * w;
            w *= step;
        }
        theta.push(t);
        density.push(acc.norm_sqr() / (2.0 * PI));
    }
    Ok(PhaseDistribution { theta, density })
}

/// BPSK error of the canonical phase measurement for `±√S`.
pub fn phase_pom_bpsk_ber(s: f64, grid: usize) -> Result<f64> {
    let d = phase_pom_distribution(CoherentAmplitude::new(libm::sqrt(s), 0.0), cutoff_rule(s), grid)?;
    Ok(d.antipodal_error(0.0))
}
