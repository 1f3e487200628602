//! Exact convolution for large operands: three NTT-friendly primes near
//! 2^62, Montgomery arithmetic, and a Garner reconstruction modulo q.
//!
//! A coefficient of the linear convolution is below p * q^2 < 2^144, well
//! under the ~2^186 product of the three transform primes.

use crate::zq::Modulus;

#[derive(Clone, Copy)]
struct Mont {
    p: u64,
    // -p^{-1} mod 2^64
    neg_inv: u64,
    // 2^128 mod p
    r2: u64,
    g: u64,
}

impl Mont {
    const fn new(p: u64, g: u64) -> Self {
        // Newton iteration for p^{-1} mod 2^64
        let mut inv = 1u64;
        let mut i = 0;
        while i < 6 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(p.wrapping_mul(inv)));
            i += 1;
        }
        let r = ((1u128 << 64) % p as u128) as u64;
        let r2 = ((r as u128 * r as u128) % p as u128) as u64;
        Mont {
            p,
            neg_inv: inv.wrapping_neg(),
            r2,
            g,
        }
    }

    #[inline(always)]
    fn redc(&self, t: u128) -> u64 {
        let m = (t as u64).wrapping_mul(self.neg_inv);
        let u = ((t + m as u128 * self.p as u128) >> 64) as u64;
        if u >= self.p {
            u - self.p
        } else {
            u
        }
    }

    #[inline(always)]
    fn mul(&self, a: u64, b: u64) -> u64 {
        self.redc(a as u128 * b as u128)
    }

    #[inline(always)]
    fn enter(&self, a: u64) -> u64 {
        self.mul(a % self.p, self.r2)
    }

    #[inline(always)]
    fn leave(&self, a: u64) -> u64 {
        self.redc(a as u128)
    }

    #[inline(always)]
    fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline(always)]
    fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    fn pow(&self, base: u64, mut e: u64) -> u64 {
        let mut r = self.enter(1);
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, b);
            }
            b = self.mul(b, b);
            e >>= 1;
        }
        r
    }

    /// In-place transform of Montgomery-form data; `inverse` also scales by 1/n.
    fn transform(&self, a: &mut [u64], inverse: bool) {
        let n = a.len();
        debug_assert!(n.is_power_of_two());
        if n == 1 {
            return;
        }
        let log_n = n.trailing_zeros();
        for i in 0..n {
            let j = i.reverse_bits() >> (usize::BITS - log_n);
            if i < j {
                a.swap(i, j);
            }
        }
        let g = self.enter(self.g);
        let mut twiddles = Vec::with_capacity(n / 2);
        let mut len = 2;
        while len <= n {
            let mut w = self.pow(g, (self.p - 1) / len as u64);
            if inverse {
                w = self.pow(w, self.p - 2);
            }
            let half = len / 2;
            twiddles.clear();
            let mut cur = self.enter(1);
            for _ in 0..half {
                twiddles.push(cur);
                cur = self.mul(cur, w);
            }
            for chunk in a.chunks_exact_mut(len) {
                let (lo, hi) = chunk.split_at_mut(half);
                for ((x, y), &tw) in lo.iter_mut().zip(hi.iter_mut()).zip(&twiddles) {
                    let v = self.mul(*y, tw);
                    let u = *x;
                    *x = self.add(u, v);
                    *y = self.sub(u, v);
                }
            }
            len <<= 1;
        }
        if inverse {
            let n_inv = self.pow(self.enter(n as u64), self.p - 2);
            for x in a.iter_mut() {
                *x = self.mul(*x, n_inv);
            }
        }
    }

    fn convolve(&self, a: &[u64], b: &[u64], n: usize) -> Vec<u64> {
        let mut fa = vec![0u64; n];
        let mut fb = vec![0u64; n];
        for (dst, &x) in fa.iter_mut().zip(a) {
            *dst = self.enter(x);
        }
        for (dst, &x) in fb.iter_mut().zip(b) {
            *dst = self.enter(x);
        }
        self.transform(&mut fa, false);
        self.transform(&mut fb, false);
        for (x, y) in fa.iter_mut().zip(&fb) {
            *x = self.mul(*x, *y);
        }
        self.transform(&mut fa, true);
        for x in fa.iter_mut() {
            *x = self.leave(*x);
        }
        fa
    }
}

// p - 1 divisible by 2^32 for each.
const PRIMES: [Mont; 3] = [
    Mont::new(4611685941117976577, 3),
    Mont::new(4611685692009873409, 19),
    Mont::new(4611685606110527489, 3),
];

#[inline]
fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn inv_mod(a: u64, m: u64) -> u64 {
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let quot = r0 / r1;
        (r0, r1) = (r1, r0 - quot * r1);
        (t0, t1) = (t1, t0 - quot * t1);
    }
    t0.rem_euclid(m as i128) as u64
}

/// Cyclic convolution of two length-p residue vectors modulo (z^p - 1, q).
pub(crate) fn cyclic_convolve(a: &[u64], b: &[u64], q: Modulus) -> Vec<u64> {
    let p = a.len();
    debug_assert_eq!(p, b.len());
    let n = (2 * p - 1).next_power_of_two();
    let [m0, m1, m2] = PRIMES;
    let r0 = m0.convolve(a, b, n);
    let r1 = m1.convolve(a, b, n);
    let r2 = m2.convolve(a, b, n);

    let (p0, p1, p2) = (m0.p, m1.p, m2.p);
    let p0_inv_p1 = inv_mod(p0, p1);
    let p0p1_inv_p2 = inv_mod(mulmod(p0, p1, p2), p2);
    let p0_mod_q = q.reduce(p0);
    let p0p1_mod_q = q.mul(p0_mod_q, q.reduce(p1));

    let mut out = vec![0u64; p];
    for k in 0..(2 * p - 1) {
        let (x0, x1, x2) = (r0[k], r1[k], r2[k]);
        let t1 = mulmod((x1 + p1 - x0 % p1) % p1, p0_inv_p1, p1);
        let partial = (x0 as u128 + p0 as u128 * t1 as u128) % p2 as u128;
        let t2 = mulmod(
            ((x2 as u128 + p2 as u128 - partial) % p2 as u128) as u64,
            p0p1_inv_p2,
            p2,
        );
        let v = q.add(
            q.add(q.reduce(x0), q.mul(p0_mod_q, q.reduce(t1))),
            q.mul(p0p1_mod_q, q.reduce(t2)),
        );
        let slot = &mut out[k % p];
        *slot = q.add(*slot, v);
    }
    out
}
