//! Qubit states of the `qk` constellation and minimum-error discrimination.
//!
//! All constellation points live on the x–z great circle of the Bloch sphere:
//! circle angle φ has Bloch vector (sin φ, 0, cos φ), so φ = 0 is |0⟩⟨0| and
//! antipodal angles are orthogonal states. Eigenvalues are taken in closed
//! form for 2×2 Hermitian matrices.

use alloc::vec::Vec;
use core::f64::consts::PI;
use serde::{Deserialize, Serialize};

use crate::{Complex64, Error, Result};

const TOL: f64 = 1e-12;

/// 2×2 density operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix2 {
    pub entries: [[Complex64; 2]; 2],
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Eigenvalues of the Hermitian matrix [[a, b], [b*, d]], smallest first.
fn hermitian_eigs(a: f64, d: f64, b: Complex64) -> [f64; 2] {
    let mean = 0.5 * (a + d);
    let r = libm::hypot(0.5 * (a - d), b.norm());
    [mean - r, mean + r]
}

impl DensityMatrix2 {
    /// Build from entries, checking Hermiticity, unit trace and positivity.
    pub fn new(entries: [[Complex64; 2]; 2]) -> Result<Self> {
        let m = Self { entries };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.entries;
        let herm = (e[0][1] - e[1][0].conj())
            .norm()
            .max(e[0][0].im.abs())
            .max(e[1][1].im.abs());
        if herm > TOL {
            return Err(Error::InvariantViolation(alloc::format!(
                "not Hermitian (defect {herm:e})"
            )));
        }
        let tr = e[0][0].re + e[1][1].re;
        if (tr - 1.0).abs() > TOL {
            return Err(Error::InvariantViolation(alloc::format!("trace {tr}")));
        }
        let [lo, _] = hermitian_eigs(e[0][0].re, e[1][1].re, e[0][1]);
        if lo < -TOL {
            return Err(Error::InvariantViolation(alloc::format!(
                "negative eigenvalue {lo:e}"
            )));
        }
        Ok(())
    }

    /// ρ = (I + r·σ)/2.
    pub fn from_bloch(r: [f64; 3]) -> Self {
        let [x, y, z] = r;
        Self {
            entries: [
                [c(0.5 * (1.0 + z), 0.0), c(0.5 * x, -0.5 * y)],
                [c(0.5 * x, 0.5 * y), c(0.5 * (1.0 - z), 0.0)],
            ],
        }
    }

    pub fn bloch(&self) -> [f64; 3] {
        let e = &self.entries;
        [2.0 * e[1][0].re, 2.0 * e[1][0].im, e[0][0].re - e[1][1].re]
    }

    /// The maximally mixed state I/2.
    pub fn maximally_mixed() -> Self {
        Self::from_bloch([0.0; 3])
    }

    pub fn purity(&self) -> f64 {
        let r = self.bloch();
        0.5 * (1.0 + r[0] * r[0] + r[1] * r[1] + r[2] * r[2])
    }

    /// Equal-weight mixture.
    pub fn average(states: &[Self]) -> Self {
        let n = states.len() as f64;
        let mut r = [0.0; 3];
        for s in states {
            let b = s.bloch();
            for k in 0..3 {
                r[k] += b[k] / n;
            }
        }
        Self::from_bloch(r)
    }

    /// Depolarize: (1 − λ)ρ + λ I/2.
    pub fn depolarize(&self, lambda: f64) -> Self {
        let r = self.bloch();
        Self::from_bloch([r[0] * (1.0 - lambda), r[1] * (1.0 - lambda), r[2] * (1.0 - lambda)])
    }

    /// Born probability of the `+` outcome of the projective measurement onto
    /// the circle state at `angle` (and its antipode).
    pub fn prob_plus(&self, angle: f64) -> f64 {
        let r = self.bloch();
        (0.5 * (1.0 + r[0] * libm::sin(angle) + r[2] * libm::cos(angle))).clamp(0.0, 1.0)
    }
}

/// Pure state whose Bloch vector sits at `angle` on the x–z great circle.
pub fn state_on_circle(angle: f64) -> DensityMatrix2 {
    DensityMatrix2::from_bloch([libm::sin(angle), 0.0, libm::cos(angle)])
}

/// ‖ρ − σ‖₁, the sum of absolute eigenvalues of the difference.
pub fn trace_distance(rho: &DensityMatrix2, sigma: &DensityMatrix2) -> Result<f64> {
    rho.validate()?;
    sigma.validate()?;
    Ok(weighted_difference_norm(rho, 1.0, sigma, 1.0))
}

fn weighted_difference_norm(a: &DensityMatrix2, wa: f64, b: &DensityMatrix2, wb: f64) -> f64 {
    let (x, y) = (&a.entries, &b.entries);
    let d00 = wa * x[0][0].re - wb * y[0][0].re;
    let d11 = wa * x[1][1].re - wb * y[1][1].re;
    let d01 = x[0][1] * wa - y[0][1] * wb;
    let [l0, l1] = hermitian_eigs(d00, d11, d01);
    l0.abs() + l1.abs()
}

/// Minimum error probability for discriminating ρ₀ (prior `p0`) from ρ₁:
/// (1 − ‖p₁ρ₁ − p₀ρ₀‖₁)/2.
pub fn helstrom_error(rho0: &DensityMatrix2, rho1: &DensityMatrix2, p0: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p0) {
        return Err(Error::Range {
            name: "p0",
            value: p0,
        });
    }
    rho0.validate()?;
    rho1.validate()?;
    let norm = weighted_difference_norm(rho1, 1.0 - p0, rho0, p0);
    Ok((0.5 * (1.0 - norm)).max(0.0))
}

/// How the M circle points are split between the two bit values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum BitConvention {
    /// Bit value is the parity of the point index `l`.
    AlternatingNeighbors,
    /// Bit 0 on points `l < M/2`, bit 1 on their antipodes.
    SemicircleBlocks,
}

/// The M-point qubit constellation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QkConstellation {
    pub m: usize,
    pub convention: BitConvention,
    pub polarity: bool,
}

/// Key-averaged states seen by an attacker without the key.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EveStates {
    pub rho0: DensityMatrix2,
    pub rho1: DensityMatrix2,
    pub cipher: DensityMatrix2,
}

impl QkConstellation {
    pub fn new(m: usize, convention: BitConvention, polarity: bool) -> Result<Self> {
        if m < 4 || m % 2 != 0 {
            return Err(Error::UnsupportedConstellation(m));
        }
        Ok(Self {
            m,
            convention,
            polarity,
        })
    }

    /// Circle angle of point `l`: 2πl/M.
    pub fn point_angle(&self, l: usize) -> f64 {
        2.0 * PI * l as f64 / self.m as f64
    }

    pub fn bit_of_point(&self, l: usize) -> bool {
        match self.convention {
            BitConvention::SemicircleBlocks => l >= self.m / 2,
            BitConvention::AlternatingNeighbors => l % 2 == 1,
        }
    }

    /// Point carrying line bit `bit` in basis `basis` (the basis is the
    /// antipodal pair {basis, basis + M/2}).
    ///
    /// Under `AlternatingNeighbors` the two points of a basis only carry
    /// different bits when M/2 is odd; otherwise there is no valid encoding.
    pub fn point_for(&self, basis: usize, bit: bool) -> Result<usize> {
        let half = self.m / 2;
        if basis >= half {
            return Err(Error::Domain(alloc::format!(
                "basis {basis} out of range for M = {}",
                self.m
            )));
        }
        match self.convention {
            BitConvention::SemicircleBlocks => Ok(basis + if bit { half } else { 0 }),
            BitConvention::AlternatingNeighbors => {
                if half % 2 == 0 {
                    return Err(Error::Domain(alloc::format!(
                        "alternatingNeighbors cannot encode antipodal bits when M/2 = {half} is even"
                    )));
                }
                let l = if (basis % 2 == 1) == bit { basis } else { basis + half };
                Ok(l)
            }
        }
    }

    /// ρ₀, ρ₁ averaged over uniform keys, and the ciphertext state averaged
    /// over uniform data as well.
    pub fn eve_states(&self) -> EveStates {
        let all: Vec<_> = (0..self.m).map(|l| state_on_circle(self.point_angle(l))).collect();
        let class = |b: bool| -> DensityMatrix2 {
            let pts: Vec<_> = (0..self.m)
                .filter(|&l| self.bit_of_point(l) == b)
                .map(|l| all[l])
                .collect();
            DensityMatrix2::average(&pts)
        };
        let (rho0, rho1) = if self.polarity {
            let mixed = DensityMatrix2::average(&all);
            (mixed, mixed)
        } else {
            (class(false), class(true))
        };
        EveStates {
            rho0,
            rho1,
            cipher: DensityMatrix2::average(&[rho0, rho1]),
        }
    }

    /// Circle angle of the Helstrom projector for the key-averaged states:
    /// the direction of r₀ − r₁ (0 when the states coincide).
    pub fn best_measurement_angle(&self) -> f64 {
        let s = self.eve_states();
        let (a, b) = (s.rho0.bloch(), s.rho1.bloch());
        let (dx, dz) = (a[0] - b[0], a[2] - b[2]);
        if libm::hypot(dx, dz) < 1e-15 {
            0.0
        } else {
            libm::atan2(dx, dz)
        }
    }

    /// Exact expected BER of a constant projective measurement at `angle`
    /// followed by per-qubit maximum-likelihood decoding against the
    /// key-averaged states. Ties are broken by a fair coin.
    pub fn constant_attack_ber(&self, angle: f64) -> f64 {
        let s = self.eve_states();
        let p0 = s.rho0.prob_plus(angle);
        let p1 = s.rho1.prob_plus(angle);
        // P(error) = ½ Σ_outcome min-ish weight under ML with fair ties
        let outcome_err = |q0: f64, q1: f64| -> f64 {
            if (q0 - q1).abs() < 1e-15 {
                0.5 * (0.5 * q0 + 0.5 * q1)
            } else {
                0.5 * q0.min(q1)
            }
        };
        outcome_err(p0, p1) + outcome_err(1.0 - p0, 1.0 - p1)
    }
}

/// Attacker bit-error probability formula for the M-point qubit scheme:
/// ½ − (1/M)·√[(1 − cos(π/M)) / (2 sin²(π/M))].
pub fn eq1_eve_ber(m: usize) -> Result<f64> {
    if m < 4 || m % 2 != 0 {
        return Err(Error::Domain(alloc::format!("M = {m} must be even and >= 4")));
    }
    let x = PI / m as f64;
    let s = libm::sin(x);
    Ok(0.5 - libm::sqrt((1.0 - libm::cos(x)) / (2.0 * s * s)) / m as f64)
}

/// Which evaluation of the attacker's qubit BER to use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EveBerMode {
    Formula,
    Numeric(QkConstellation),
}

pub fn eve_qubit_ber(m: usize, mode: EveBerMode) -> Result<f64> {
    if m % 2 != 0 {
        return Err(Error::Domain(alloc::format!("M = {m} is odd")));
    }
    match mode {
        EveBerMode::Formula => eq1_eve_ber(m),
        EveBerMode::Numeric(c) => {
            let s = c.eve_states();
            helstrom_error(&s.rho0, &s.rho1, 0.5)
        }
    }
}

/// The printed formula next to the Helstrom value under both conventions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eq1Comparison {
    pub m: usize,
    pub formula: f64,
    pub semicircle_blocks: f64,
    pub alternating_neighbors: f64,
}

pub fn compare_eq1(m: usize) -> Result<Eq1Comparison> {
    let numeric = |conv| {
        QkConstellation::new(m, conv, false)
            .and_then(|c| eve_qubit_ber(m, EveBerMode::Numeric(c)))
    };
    Ok(Eq1Comparison {
        m,
        formula: eq1_eve_ber(m)?,
        semicircle_blocks: numeric(BitConvention::SemicircleBlocks)?,
        alternating_neighbors: numeric(BitConvention::AlternatingNeighbors)?,
    })
}
