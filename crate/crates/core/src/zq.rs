//! Scalar arithmetic in Z/qZ for a word-size prime q.
//!
//! Residues are plain `u64` values in `[0, q)`. Products go through a
//! 128-bit intermediate, which is why q is capped below 2^62.

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::primes::is_prime_u64;

/// Exclusive upper bound on a coefficient prime.
pub const MODULUS_LIMIT: u64 = 1 << 62;

/// A prime modulus q with 2 < q < 2^62.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Modulus(u64);

impl Modulus {
    pub fn new(q: u64) -> Result<Self> {
        if q <= 2 || q >= MODULUS_LIMIT || !is_prime_u64(q) {
            return Err(Error::InvalidModulus(q));
        }
        Ok(Modulus(q))
    }

    #[inline]
    pub fn value(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn reduce(self, a: u64) -> u64 {
        a % self.0
    }

    pub fn reduce_i64(self, a: i64) -> u64 {
        (a as i128).rem_euclid(self.0 as i128) as u64
    }

    /// Lifts a signed big integer into `[0, q)`.
    pub fn reduce_bigint(self, a: &BigInt) -> u64 {
        let r = (a.magnitude() % self.0).to_u64().unwrap();
        match a.sign() {
            Sign::Minus if r != 0 => self.0 - r,
            _ => r,
        }
    }

    pub fn reduce_biguint(self, a: &BigUint) -> u64 {
        (a % self.0).to_u64().unwrap()
    }

    #[inline]
    pub fn add(self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.0 {
            s - self.0
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.0 - b
        }
    }

    #[inline]
    pub fn neg(self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.0 - a
        }
    }

    #[inline]
    pub fn mul(self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.0 as u128) as u64
    }

    pub fn pow(self, base: u64, mut exp: u64) -> u64 {
        let mut result = 1 % self.0;
        let mut b = base % self.0;
        while exp > 0 {
            if exp & 1 == 1 {
                result = self.mul(result, b);
            }
            b = self.mul(b, b);
            exp >>= 1;
        }
        result
    }

    /// Square-and-multiply over the full binary expansion of `exp`.
    pub fn pow_big(self, base: u64, exp: &BigUint) -> u64 {
        if let Some(small) = exp.to_u64() {
            return self.pow(base, small);
        }
        let digits = exp.to_u64_digits();
        let mut result = 1 % self.0;
        let b = base % self.0;
        for &digit in digits.iter().rev() {
            for bit in (0..64).rev() {
                result = self.mul(result, result);
                if (digit >> bit) & 1 == 1 {
                    result = self.mul(result, b);
                }
            }
        }
        result
    }

    pub fn inv(self, a: u64) -> Result<u64> {
        let a = a % self.0;
        if a == 0 {
            return Err(Error::ZeroInverse(self.0));
        }
        let (mut r0, mut r1) = (self.0 as i128, a as i128);
        let (mut t0, mut t1) = (0i128, 1i128);
        while r1 != 0 {
            let quot = r0 / r1;
            (r0, r1) = (r1, r0 - quot * r1);
            (t0, t1) = (t1, t0 - quot * t1);
        }
        debug_assert_eq!(r0, 1);
        Ok(t0.rem_euclid(self.0 as i128) as u64)
    }

    /// Symmetric representative in `[-q/2, q/2]`.
    pub fn signed_lift(self, a: u64) -> i64 {
        let a = a % self.0;
        if a > self.0 / 2 {
            a as i64 - self.0 as i64
        } else {
            a as i64
        }
    }
}

impl std::fmt::Display for Modulus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}
