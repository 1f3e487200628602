//! Primality testing and random prime sampling.

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Intervals at most this wide are enumerated instead of rejection-sampled.
const ENUMERATE_WIDTH: u64 = 1 << 16;

// Deterministic for every n < 3.3 * 10^24.
const WITNESSES_U64: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

// 40 random rounds bound the error by 4^-40 = 2^-80.
const BIG_ROUNDS: usize = 40;

#[inline]
fn mul_mod(a: u64, b: u64, n: u64) -> u64 {
    ((a as u128 * b as u128) % n as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, n: u64) -> u64 {
    let mut r = 1u64;
    b %= n;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, n);
        }
        b = mul_mod(b, b, n);
        e >>= 1;
    }
    r
}

pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &WITNESSES_U64 {
        if n % p == 0 {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &WITNESSES_U64 {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Primality of an arbitrary-precision integer. Exact below 2^64; above
/// that, Miller-Rabin with 40 pseudo-random bases.
pub fn is_prime(n: &BigUint) -> bool {
    if let Some(small) = n.to_u64() {
        return is_prime_u64(small);
    }
    if !n.bit(0) {
        return false;
    }
    for &p in &WITNESSES_U64 {
        if (n % p).is_zero() {
            return false;
        }
    }
    let one = BigUint::one();
    let n_minus_1 = n - &one;
    let s = n_minus_1.trailing_zeros().unwrap();
    let d = &n_minus_1 >> s;
    let two = BigUint::from(2u32);
    let mut rng = ChaCha8Rng::seed_from_u64(0x0005_eed0_fb16_u64);
    'round: for _ in 0..BIG_ROUNDS {
        let a = rng.gen_biguint_range(&two, &n_minus_1);
        let mut x = a.modpow(&d, n);
        if x == one || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'round;
            }
        }
        return false;
    }
    true
}

/// Seeded source of every random draw the interpolation makes.
#[derive(Clone, Debug)]
pub struct PrimeSampler {
    rng: ChaCha8Rng,
}

impl PrimeSampler {
    pub fn new(seed: u64) -> Self {
        PrimeSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Uniform element of `[lo, hi]`.
    pub fn uniform(&mut self, lo: u64, hi: u64) -> u64 {
        self.rng.gen_range(lo..=hi)
    }
}

fn primes_in(lo: u64, hi: u64) -> Vec<u64> {
    (lo..=hi).filter(|&x| is_prime_u64(x)).collect()
}

pub fn random_prime(lo: u64, hi: u64, sampler: &mut PrimeSampler) -> Result<u64> {
    if lo > hi {
        return Err(Error::NoPrime { lo, hi });
    }
    if hi - lo < ENUMERATE_WIDTH {
        let all = primes_in(lo, hi);
        return all
            .choose(sampler.rng())
            .copied()
            .ok_or(Error::NoPrime { lo, hi });
    }
    // Prime density near 2^62 is about 1/43; this budget fails with
    // negligible probability on any interval that contains primes at
    // a typical density.
    for _ in 0..4096 {
        let x = sampler.uniform(lo, hi);
        if is_prime_u64(x) {
            return Ok(x);
        }
    }
    // Sparse interval: scan upward from a random start, wrapping once.
    let start = sampler.uniform(lo, hi);
    (start..=hi)
        .chain(lo..start)
        .find(|&x| is_prime_u64(x))
        .ok_or(Error::NoPrime { lo, hi })
}

/// `count` pairwise-distinct primes from `[lo, hi]`, in random order.
pub fn distinct_primes(
    lo: u64,
    hi: u64,
    count: usize,
    sampler: &mut PrimeSampler,
) -> Result<Vec<u64>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let enumerate = |sampler: &mut PrimeSampler| -> Result<Vec<u64>> {
        let mut all = if lo <= hi { primes_in(lo, hi) } else { Vec::new() };
        if all.len() < count {
            return Err(Error::InsufficientPrimes {
                lo,
                hi,
                requested: count,
                available: all.len(),
            });
        }
        let (chosen, _) = all.partial_shuffle(sampler.rng(), count);
        Ok(chosen.to_vec())
    };
    if lo > hi || hi - lo < ENUMERATE_WIDTH {
        return enumerate(sampler);
    }
    let mut chosen: Vec<u64> = Vec::with_capacity(count);
    let budget = 64 * count + 1024;
    for _ in 0..budget {
        let p = random_prime(lo, hi, sampler)?;
        if !chosen.contains(&p) {
            chosen.push(p);
            if chosen.len() == count {
                return Ok(chosen);
            }
        }
    }
    enumerate(sampler)
}
