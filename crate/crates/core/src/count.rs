//! Pairwise-independent hashing and gap counting.
//!
//! [`gap_decide`] separates `S <= (2/3)T` from `S >= (3/4)T`. The ratio between
//! the two sides is only 9/8, far below what a single hashing estimate resolves,
//! so each trial hashes `c`-tuples of members (the set `S^c`, of size `S^c`)
//! with `c = 12`, where the ratio grows to `(9/8)^12 > 4`. A trial answers HIGH
//! iff its estimate of `S^c` reaches the geometric midpoint `T^c / 2^(c/2)`;
//! the majority over an odd number of trials drives the error below `δ`.

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::SearchBudgetError;

/// Largest domain width (in bits) that [`exact_count`] will scan.
pub const COUNT_CAP: usize = 24;

/// Cartesian power used by [`gap_decide`]; least `c` with `(9/8)^c >= 4`.
pub const POWER: u32 = 12;

/// Largest hash output width per trial; bounds the `2^j` Fourier terms.
const MAX_HASH_BITS: usize = 8;

/// `h(x) = Mx + b` over the two-element field, mapping `m` bits to `j` bits.
/// Bit `k` of `x` is coordinate `k`; row `r` of `M` is `rows[r]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AffineHash {
    pub m: usize,
    pub j: usize,
    pub rows: Vec<u128>,
    pub offset: u128,
}

impl AffineHash {
    pub fn apply(&self, x: u128) -> u128 {
        let mut out = self.offset;
        for (r, row) in self.rows.iter().enumerate() {
            out ^= (((row & x).count_ones() & 1) as u128) << r;
        }
        out
    }

    /// Every member of the family for the given shape, `2^(j(m+1))` maps.
    pub fn family(m: usize, j: usize) -> impl Iterator<Item = AffineHash> {
        let bits = j * (m + 1);
        (0u64..1 << bits).map(move |code| {
            let rows = (0..j).map(|r| ((code >> (r * m)) & ((1 << m) - 1)) as u128).collect();
            let offset = (code >> (j * m)) as u128;
            AffineHash { m, j, rows, offset }
        })
    }
}

fn low_mask(bits: usize) -> u128 {
    if bits >= 128 {
        u128::MAX
    } else {
        (1u128 << bits) - 1
    }
}

pub fn sample_hash<R: Rng + ?Sized>(m: usize, j: usize, rng: &mut R) -> AffineHash {
    assert!(j >= 1 && j <= m && m <= 128, "hash shape needs 1 <= j <= m <= 128");
    let rows = (0..j).map(|_| rng.gen::<u128>() & low_mask(m)).collect();
    let offset = rng.gen::<u128>() & low_mask(j);
    AffineHash { m, j, rows, offset }
}

pub fn exact_count<F: Fn(u64) -> bool + Sync>(membership: F, m: usize) -> Result<u64, SearchBudgetError> {
    if m > COUNT_CAP {
        return Err(SearchBudgetError::WitnessLength { len: m, cap: COUNT_CAP });
    }
    Ok((0u64..1 << m).into_par_iter().filter(|&w| membership(w)).count() as u64)
}

/// Membership in `S^c` for strings of `c·m` bits; tuple component `i` is bits
/// `i·m .. (i+1)·m`.
pub fn power_membership<F: Fn(u64) -> bool>(membership: F, m: usize, c: usize) -> impl Fn(u64) -> bool {
    move |w| (0..c).all(|i| membership((w >> (i * m)) & ((1 << m) - 1)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Low,
    High,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapVerdict {
    pub verdict: Verdict,
    /// Hashing trials run; 0 when the threshold is small enough to count directly.
    pub trials: u32,
    /// The configured success probability `1 - δ`.
    #[serde(with = "crate::ratio")]
    pub confidence: Ratio<u64>,
}

/// Odd trial count `r >= 8 ln(1/δ)`: each trial errs with probability at most
/// 1/4, so the majority errs with probability at most `exp(-r/8)`.
pub fn trial_count(delta: Ratio<u64>) -> u32 {
    let d = delta.to_f64().unwrap_or(1.0).clamp(f64::MIN_POSITIVE, 1.0);
    let r = (8.0 * (1.0 / d).ln()).ceil().max(1.0) as u32;
    r | 1
}

/// Walsh–Hadamard transform of the indicator: `ĝ(v) = Σ_{x in S} (-1)^{v·x}`.
fn indicator_spectrum<F: Fn(u64) -> bool + Sync>(membership: &F, m: usize) -> Vec<i64> {
    let mut g: Vec<i64> = (0u64..1 << m).into_par_iter().map(|x| membership(x) as i64).collect();
    let mut h = 1;
    while h < g.len() {
        for i in (0..g.len()).step_by(2 * h) {
            for k in i..i + h {
                let (a, b) = (g[k], g[k + h]);
                g[k] = a + b;
                g[k + h] = a - b;
            }
        }
        h *= 2;
    }
    g
}

/// `|{w in S^c : h(w) = 0}|` for a hash on `c·m` bits, computed from the
/// spectrum: bucket membership is `[Σ_i M_i w_i = b]`, whose Fourier expansion
/// over `λ in {0,1}^j` factors across the `c` components.
fn bucket_count(spectrum: &[i64], h: &AffineHash, m: usize, c: usize) -> BigInt {
    let mut total = BigInt::zero();
    for lambda in 0u128..(1 << h.j) {
        let sign = if (lambda & h.offset).count_ones().is_multiple_of(2) { 1 } else { -1 };
        let mut prod = BigInt::from(sign);
        for i in 0..c {
            // v = M_i^T λ, restricted to component i's coordinates
            let mut v = 0u128;
            for (r, row) in h.rows.iter().enumerate() {
                if (lambda >> r) & 1 == 1 {
                    v ^= row >> (i * m);
                }
            }
            let v = (v & low_mask(m)) as usize;
            prod *= spectrum[v];
            if prod.is_zero() {
                break;
            }
        }
        total += prod;
    }
    total >> h.j
}

pub fn gap_decide<F, R>(
    membership: F,
    m: usize,
    threshold: u64,
    delta: Ratio<u64>,
    rng: &mut R,
) -> Result<GapVerdict, SearchBudgetError>
where
    F: Fn(u64) -> bool + Sync,
    R: Rng + ?Sized,
{
    if m > COUNT_CAP {
        return Err(SearchBudgetError::WitnessLength { len: m, cap: COUNT_CAP });
    }
    let c = POWER as usize;
    let confidence = Ratio::one() - delta;
    // τ = T^c / 2^(c/2); HIGH iff 2^j·Y >= τ, i.e. 2^c (2^j Y)^2 >= T^(2c)
    let t_pow = BigInt::from(threshold).pow(2 * POWER);
    let log_tau = (threshold.max(1) as f64).log2() * c as f64 - (c / 2) as f64;
    let j = (log_tau.floor() as i64 - 3).clamp(1, (c * m).min(MAX_HASH_BITS) as i64) as usize;
    let high_from = |estimate: &BigInt| (BigInt::one() << c) * estimate * estimate >= t_pow;

    if log_tau < 4.0 {
        // too few expected hits for the hashing estimate; count directly
        let s = exact_count(&membership, m)?;
        let estimate = BigInt::from(s).pow(POWER);
        let verdict = if high_from(&estimate) { Verdict::High } else { Verdict::Low };
        return Ok(GapVerdict { verdict, trials: 0, confidence });
    }

    if c * m > 128 {
        return Err(SearchBudgetError::WitnessLength { len: c * m, cap: 128 });
    }
    let spectrum = indicator_spectrum(&membership, m);
    let trials = trial_count(delta);
    let seeds: Vec<u64> = (0..trials).map(|_| rng.gen()).collect();
    let highs = seeds
        .par_iter()
        .filter(|&&seed| {
            let mut trial_rng = ChaCha8Rng::seed_from_u64(seed);
            let h = sample_hash(c * m, j, &mut trial_rng);
            let estimate = bucket_count(&spectrum, &h, m, c) << j;
            high_from(&estimate)
        })
        .count() as u32;
    let verdict = if 2 * highs > trials { Verdict::High } else { Verdict::Low };
    Ok(GapVerdict { verdict, trials, confidence })
}
