//! Security bookkeeping: error profiles, trial complexity, information
//! bounds and exact entropies of small discrete distributions. All logs are
//! base 2.

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::mc::trial_rng;
use crate::special::{binary_entropy, binary_entropy_inverse};
use crate::{Error, Result};

/// Tolerance on the sum of an error profile.
pub const PROFILE_SUM_TOL: f64 = 1e-9;
/// Tolerance on the sum of a joint distribution.
pub const JOINT_SUM_TOL: f64 = 1e-12;
/// Largest `l` for which an extremal profile is materialized.
pub const MAX_EXTREMAL_BITS: u32 = 24;

/// Eve's guessing probabilities over candidate keys, largest first.
/// Trailing zero entries may be omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorProfile {
    pub probs: Vec<f64>,
}

impl ErrorProfile {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let p = Self { probs };
        p.validate()?;
        Ok(p)
    }

    /// Sort descending and wrap.
    pub fn from_unsorted(mut probs: Vec<f64>) -> Result<Self> {
        probs.sort_by(|a, b| b.total_cmp(a));
        Self::new(probs)
    }

    pub fn validate(&self) -> Result<()> {
        if self.probs.is_empty() {
            return Err(Error::InvariantViolation("empty profile".into()));
        }
        if let Some(p) = self.probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvariantViolation(alloc::format!("probability {p} outside [0, 1]")));
        }
        if self.probs.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvariantViolation("profile not in descending order".into()));
        }
        let sum: f64 = self.probs.iter().sum();
        if (sum - 1.0).abs() > PROFILE_SUM_TOL {
            return Err(Error::InvariantViolation(alloc::format!("profile sums to {sum}")));
        }
        Ok(())
    }

    /// p₁, Eve's best single-guess success.
    pub fn p1(&self) -> f64 {
        self.probs[0]
    }

    pub fn entropy(&self) -> f64 {
        entropy(&self.probs)
    }
}

/// Σ n·p_n over a descending profile.
pub fn trial_complexity(profile: &ErrorProfile) -> Result<f64> {
    profile.validate()?;
    Ok(profile.probs.iter().enumerate().map(|(i, p)| (i + 1) as f64 * p).sum())
}

/// log₂(2ⁿ − 1) without overflow.
fn log2_pow2_minus_one(n: f64) -> f64 {
    n + libm::log1p(-libm::exp2(-n)) / core::f64::consts::LN_2
}

/// Root p₁ ∈ [2⁻ⁿ, 1] of `H₂(p₁) + (1 − p₁)·log₂(2ⁿ − 1) = n − I_E`.
///
/// The left side falls monotonically from n at p₁ = 2⁻ⁿ to 0 at p₁ = 1, so
/// the root on this interval is unique; it is the larger of the two roots.
pub fn solve_p1_given_info(n: f64, info: f64) -> Result<f64> {
    if !(n > 0.0) || !(0.0..=n).contains(&info) {
        return Err(Error::Domain(alloc::format!("need 0 <= I_E <= n, got I_E = {info}, n = {n}")));
    }
    let tail = log2_pow2_minus_one(n);
    let target = n - info;
    let f = |p: f64| binary_entropy(p) + (1.0 - p) * tail - target;
    let (mut lo, mut hi) = (libm::exp2(-n), 1.0_f64);
    // f peaks at 2⁻ⁿ with zero slope, so I_E = 0 is a double root there
    if f(lo) <= 1e-12 {
        return Ok(lo);
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        let v = f(mid);
        if v.abs() <= 1e-12 {
            return Ok(mid);
        }
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Lower bound on Eve's per-bit error from Fano's inequality:
/// `H₂⁻¹(max(0, 1 − I/n))` on the branch ≤ ½.
pub fn fano_bound(info: f64, n: f64) -> f64 {
    let h = if n > 0.0 { 1.0 - info / n } else { 0.0 };
    binary_entropy_inverse(h.max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProfileBounds {
    pub max_info: f64,
    pub min_trial_complexity: f64,
    /// 2^l entries of 2^{−l}; the remaining zeros are omitted.
    pub extremal_profile: ErrorProfile,
}

/// Bounds implied by p₁ ≤ 2^{−l} on n-bit keys: information at most n − l,
/// trial complexity at least (2^l + 1)/2.
pub fn profile_bounds(l: u32, n: u32) -> Result<ProfileBounds> {
    if l > n {
        return Err(Error::Domain(alloc::format!("l = {l} exceeds n = {n}")));
    }
    if l > MAX_EXTREMAL_BITS {
        return Err(Error::Tractability {
            what: "extremal profile",
            value: 1u64 << l.min(63),
            cap: 1u64 << MAX_EXTREMAL_BITS,
        });
    }
    let size = 1usize << l;
    let q = libm::exp2(-(l as f64));
    Ok(ProfileBounds {
        max_info: (n - l) as f64,
        min_trial_complexity: (size as f64 + 1.0) / 2.0,
        extremal_profile: ErrorProfile { probs: vec![q; size] },
    })
}

/// Shannon entropy of a probability vector.
pub fn entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * libm::log2(x)).sum()
}

/// Joint distribution of (X, Y, K), stored x-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DiscreteJoint {
    pub dims: (usize, usize, usize),
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum InfoQuery {
    IXY,
    IXYK,
    IXYGivenK,
    IXK,
    HXGivenY,
    HK,
}

impl DiscreteJoint {
    pub fn new(dims: (usize, usize, usize), probs: Vec<f64>) -> Result<Self> {
        let j = Self { dims, probs };
        j.validate()?;
        Ok(j)
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b, c) = self.dims;
        if a * b * c != self.probs.len() || self.probs.is_empty() {
            return Err(Error::InvariantViolation("joint dimensions do not match".into()));
        }
        if self.probs.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::InvariantViolation("negative joint entry".into()));
        }
        let s: f64 = self.probs.iter().sum();
        if (s - 1.0).abs() > JOINT_SUM_TOL {
            return Err(Error::InvariantViolation(alloc::format!("joint sums to {s}")));
        }
        Ok(())
    }

    pub fn p(&self, x: usize, y: usize, k: usize) -> f64 {
        let (_, b, c) = self.dims;
        self.probs[(x * b + y) * c + k]
    }

    /// Entropy of the marginal on the variables flagged in `keep` (X, Y, K).
    pub fn marginal_entropy(&self, keep: [bool; 3]) -> f64 {
        let (a, b, c) = self.dims;
        let size = |d: usize, f: bool| if f { d } else { 1 };
        let (ma, mb, mc) = (size(a, keep[0]), size(b, keep[1]), size(c, keep[2]));
        let mut m = vec![0.0; ma * mb * mc];
        for x in 0..a {
            for y in 0..b {
                for k in 0..c {
                    let (i, j, l) = (if keep[0] { x } else { 0 }, if keep[1] { y } else { 0 }, if keep[2] { k } else { 0 });
                    m[(i * mb + j) * mc + l] += self.p(x, y, k);
                }
            }
        }
        entropy(&m)
    }

    pub fn query(&self, q: InfoQuery) -> f64 {
        let h = |x, y, k| self.marginal_entropy([x, y, k]);
        match q {
            InfoQuery::IXY => h(true, false, false) + h(false, true, false) - h(true, true, false),
            InfoQuery::IXYK => h(true, false, false) + h(false, true, true) - h(true, true, true),
            InfoQuery::IXK => h(true, false, false) + h(false, false, true) - h(true, false, true),
            InfoQuery::IXYGivenK => h(true, false, true) + h(false, true, true) - h(true, true, true) - h(false, false, true),
            InfoQuery::HXGivenY => h(true, true, false) - h(false, true, false),
            InfoQuery::HK => h(false, false, true),
        }
    }
}

/// `discrete_information(joint, query)`.
pub fn discrete_information(joint: &DiscreteJoint, q: InfoQuery) -> f64 {
    joint.query(q)
}

/// `R − |K_m|/n − I_E/n − |K_v|/(mn)`, dropping the |K_m| term when the
/// seed key is reused.
pub fn keygen_efficiency(r: f64, km: f64, n: f64, info: f64, kv: f64, m: f64, key_reused: bool) -> Result<f64> {
    if n < 1.0 || m < 1.0 {
        return Err(Error::Domain("n and m must be >= 1".into()));
    }
    if [r, km, info, kv].iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::Domain("costs must be nonnegative".into()));
    }
    let km_term = if key_reused { 0.0 } else { km / n };
    Ok(r - km_term - info / n - kv / (m * n))
}

/// Eve's success when splitting the signal: the product of the two
/// branch probabilities.
pub fn splitting_cheat_probability(p_b: f64, p_e: f64) -> Result<f64> {
    for (name, v) in [("pB", p_b), ("pE", p_e)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Range { name, value: v });
        }
    }
    Ok(p_b * p_e)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RateWindow {
    pub window_satisfied: bool,
    /// R − I_BE/n
    pub lower_margin: f64,
    /// I_AB/n − R
    pub upper_margin: f64,
    /// ΔI = I_AB − I_BE
    pub delta_info: f64,
    pub net_key_satisfied: bool,
    /// ΔI − |K|
    pub key_margin: f64,
}

/// Check `I_BE/n < R < I_AB/n` and `|K| < ΔI` for informations measured over
/// n channel uses.
pub fn rate_window_check(i_be: f64, i_ab: f64, r: f64, key_bits: f64, n: f64) -> Result<RateWindow> {
    if [i_be, i_ab, r, key_bits].iter().any(|v| !(*v >= 0.0)) || !(n > 0.0) {
        return Err(Error::Domain("rate window inputs must be nonnegative with n > 0".into()));
    }
    let lower = r - i_be / n;
    let upper = i_ab / n - r;
    let delta = i_ab - i_be;
    Ok(RateWindow {
        window_satisfied: lower > 0.0 && upper > 0.0,
        lower_margin: lower,
        upper_margin: upper,
        delta_info: delta,
        net_key_satisfied: key_bits < delta,
        key_margin: delta - key_bits,
    })
}

/// Worst-case slack of the brute-force lemma checks. Every `*_violation`
/// field is the largest amount by which an inequality failed (≤ 0 means it
/// held everywhere); `eq_z_defect` is the largest identity residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LemmaReport {
    pub draws: usize,
    /// I(X;YK) − I(X;Y) − H(K)
    pub lemma1_violation: f64,
    /// |I(X;YK) − I(X;Y|K) − I(X;K)|
    pub eq_z_defect: f64,
    /// Lemma 1 gap in the one-time-pad equality case.
    pub lemma1_equality_gap: f64,
    /// (n − H(profile)) − (n − l) over profiles with p₁ ≤ 2^{−l}
    pub lemma2_violation: f64,
    /// (2^l + 1)/2 − C_t over the same profiles
    pub lemma3_violation: f64,
    /// H(X|Y) − H(K) for Y = X ⊕ K
    pub eq_n_violation: f64,
}

impl LemmaReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.lemma1_violation <= tol
            && self.eq_z_defect <= tol
            && self.lemma1_equality_gap <= tol
            && self.lemma2_violation <= tol
            && self.lemma3_violation <= tol
            && self.eq_n_violation <= tol
    }
}

fn random_simplex<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    // sparse corners are where the bounds are tight
    let mut v: Vec<f64> = (0..len)
        .map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.sample::<f64, _>(Exp1) })
        .collect();
    if v.iter().all(|&x| x == 0.0) {
        v[rng.random_range(0..len)] = 1.0;
    }
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// Random joint with each dimension in `1..=4`.
pub fn random_joint<R: Rng + ?Sized>(rng: &mut R) -> DiscreteJoint {
    let dims = (rng.random_range(1..=4), rng.random_range(1..=4), rng.random_range(1..=4));
    let probs = random_simplex(dims.0 * dims.1 * dims.2, rng);
    DiscreteJoint { dims, probs }
}

/// Joint of (X, Y = X ⊕ K, K) with independent X and K on `2^bits` values.
pub fn xor_cipher_joint(px: &[f64], pk: &[f64]) -> DiscreteJoint {
    let n = px.len();
    debug_assert_eq!(n, pk.len());
    let mut probs = vec![0.0; n * n * n];
    for x in 0..n {
        for k in 0..n {
            probs[(x * n + (x ^ k)) * n + k] += px[x] * pk[k];
        }
    }
    DiscreteJoint { dims: (n, n, n), probs }
}

/// Brute-force the lemma inequalities on `draws` random instances.
pub fn lemma_checks(draws: usize, seed: u64) -> LemmaReport {
    let mut rng = trial_rng(seed, 0);
    let mut r = LemmaReport {
        draws,
        lemma1_violation: f64::NEG_INFINITY,
        eq_z_defect: 0.0,
        lemma1_equality_gap: 0.0,
        lemma2_violation: f64::NEG_INFINITY,
        lemma3_violation: f64::NEG_INFINITY,
        eq_n_violation: f64::NEG_INFINITY,
    };
    for _ in 0..draws {
        let j = random_joint(&mut rng);
        let ixyk = j.query(InfoQuery::IXYK);
        r.lemma1_violation = r.lemma1_violation.max(ixyk - j.query(InfoQuery::IXY) - j.query(InfoQuery::HK));
        r.eq_z_defect = r
            .eq_z_defect
            .max((ixyk - j.query(InfoQuery::IXYGivenK) - j.query(InfoQuery::IXK)).abs());

        let bits = rng.random_range(1..=2u32);
        let size = 1usize << bits;
        let c = xor_cipher_joint(&random_simplex(size, &mut rng), &random_simplex(size, &mut rng));
        r.eq_n_violation = r.eq_n_violation.max(c.query(InfoQuery::HXGivenY) - c.query(InfoQuery::HK));

        // equality case: uniform pad independent of a uniform message
        let u = vec![1.0 / size as f64; size];
        let pad = xor_cipher_joint(&u, &u);
        let gap = pad.query(InfoQuery::IXY) + pad.query(InfoQuery::HK) - pad.query(InfoQuery::IXYK);
        r.lemma1_equality_gap = r.lemma1_equality_gap.max(gap.abs());

        // profile on n ≤ 8 bits with p₁ ≤ 2^{−l}: blend a random draw toward
        // uniform just far enough to meet the cap (often exactly at it)
        let n = rng.random_range(1..=8u32);
        let l = rng.random_range(0..=n.min(6));
        let cap = libm::exp2(-(l as f64));
        let size = 1usize << n;
        let u = 1.0 / size as f64;
        let mut p = random_simplex(size, &mut rng);
        let top = p.iter().cloned().fold(0.0, f64::max);
        if top > cap {
            let t_min = (top - cap) / (top - u);
            let t = if rng.random_bool(0.5) { t_min } else { t_min + (1.0 - t_min) * rng.random::<f64>() };
            p.iter_mut().for_each(|x| *x = t * u + (1.0 - t) * *x);
        }
        let profile = ErrorProfile::from_unsorted(p).expect("normalized");
        let info = n as f64 - profile.entropy();
        r.lemma2_violation = r.lemma2_violation.max(info - (n - l) as f64);
        let ct = trial_complexity(&profile).expect("valid profile");
        r.lemma3_violation = r.lemma3_violation.max((libm::exp2(l as f64) + 1.0) / 2.0 - ct);
    }
    r
}
