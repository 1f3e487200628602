//! Dense arithmetic in (Z/qZ)[z]/(z^p - 1).

mod ntt;

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::zq::Modulus;

/// Operands at or below this ring degree always use the direct product.
const DIRECT_DEGREE: usize = 64;

/// An element of (Z/qZ)[z]/(z^p - 1), stored densely: `coeffs[j]` is the
/// coefficient of z^j.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CyclicPoly {
    modulus: Modulus,
    coeffs: Vec<u64>,
}

impl CyclicPoly {
    pub fn zero(p: usize, modulus: Modulus) -> Self {
        assert!(p > 0, "ring degree must be positive");
        CyclicPoly {
            modulus,
            coeffs: vec![0; p],
        }
    }

    pub fn constant(c: u64, p: usize, modulus: Modulus) -> Self {
        let mut r = Self::zero(p, modulus);
        r.coeffs[0] = modulus.reduce(c);
        r
    }

    /// c * z^(e mod p)
    pub fn monomial(c: u64, e: usize, p: usize, modulus: Modulus) -> Self {
        let mut r = Self::zero(p, modulus);
        r.coeffs[e % p] = modulus.reduce(c);
        r
    }

    /// Builds from a coefficient vector; entries are reduced mod q.
    pub fn from_coeffs(coeffs: Vec<u64>, modulus: Modulus) -> Self {
        assert!(!coeffs.is_empty(), "ring degree must be positive");
        let coeffs = coeffs.into_iter().map(|c| modulus.reduce(c)).collect();
        CyclicPoly { modulus, coeffs }
    }

    /// Folds a sparse polynomial into the ring: each `c * z^E` lands on
    /// index `E mod p`, and terms sharing an index add up.
    pub fn from_sparse<'a, I>(terms: I, p: usize, modulus: Modulus) -> Self
    where
        I: IntoIterator<Item = (u64, &'a BigUint)>,
    {
        let mut r = Self::zero(p, modulus);
        for (c, e) in terms {
            let j = (e % p as u64).to_usize().unwrap();
            r.add_at(j, c);
        }
        r
    }

    #[inline]
    pub(crate) fn add_at(&mut self, index: usize, c: u64) {
        let slot = &mut self.coeffs[index];
        *slot = self.modulus.add(*slot, self.modulus.reduce(c));
    }

    pub fn degree_bound(&self) -> usize {
        self.coeffs.len()
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn coeff(&self, j: usize) -> u64 {
        self.coeffs[j]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    /// All `(coefficient, index)` pairs with a nonzero coefficient, by
    /// ascending index.
    pub fn nonzero_terms(&self) -> Vec<(u64, usize)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(j, &c)| (c, j))
            .collect()
    }

    fn check_same_ring(&self, other: &CyclicPoly) -> Result<()> {
        if self.coeffs.len() != other.coeffs.len() || self.modulus != other.modulus {
            return Err(Error::RingMismatch {
                lhs_p: self.coeffs.len(),
                lhs_q: self.modulus.value(),
                rhs_p: other.coeffs.len(),
                rhs_q: other.modulus.value(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &CyclicPoly) -> Result<CyclicPoly> {
        self.check_same_ring(other)?;
        let q = self.modulus;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| q.add(a, b))
            .collect();
        Ok(CyclicPoly { modulus: q, coeffs })
    }

    pub fn sub(&self, other: &CyclicPoly) -> Result<CyclicPoly> {
        self.check_same_ring(other)?;
        let q = self.modulus;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| q.sub(a, b))
            .collect();
        Ok(CyclicPoly { modulus: q, coeffs })
    }

    pub fn neg(&self) -> CyclicPoly {
        let q = self.modulus;
        CyclicPoly {
            modulus: q,
            coeffs: self.coeffs.iter().map(|&a| q.neg(a)).collect(),
        }
    }

    pub fn scale(&self, c: u64) -> CyclicPoly {
        let q = self.modulus;
        let c = q.reduce(c);
        CyclicPoly {
            modulus: q,
            coeffs: self.coeffs.iter().map(|&a| q.mul(a, c)).collect(),
        }
    }

    /// Cyclic convolution. Sparse operands are multiplied term by term;
    /// dense ones go through a multi-prime transform. Both paths are exact.
    pub fn mul(&self, other: &CyclicPoly) -> Result<CyclicPoly> {
        self.check_same_ring(other)?;
        let p = self.coeffs.len();
        let a = self.nonzero_terms();
        let b = other.nonzero_terms();
        let n = (2 * p - 1).next_power_of_two();
        let transform_cost = n * n.trailing_zeros() as usize;
        if p <= DIRECT_DEGREE || a.len().saturating_mul(b.len()) <= transform_cost {
            Ok(self.mul_direct(&a, &b))
        } else {
            Ok(CyclicPoly {
                modulus: self.modulus,
                coeffs: ntt::cyclic_convolve(&self.coeffs, &other.coeffs, self.modulus),
            })
        }
    }

    fn mul_direct(&self, a: &[(u64, usize)], b: &[(u64, usize)]) -> CyclicPoly {
        let p = self.coeffs.len();
        let q = self.modulus;
        let mut out = vec![0u64; p];
        for &(ca, ia) in a {
            for &(cb, ib) in b {
                let mut k = ia + ib;
                if k >= p {
                    k -= p;
                }
                out[k] = q.add(out[k], q.mul(ca, cb));
            }
        }
        CyclicPoly {
            modulus: q,
            coeffs: out,
        }
    }

    /// Forces the transform path regardless of operand density.
    #[doc(hidden)]
    pub fn mul_transform(&self, other: &CyclicPoly) -> Result<CyclicPoly> {
        self.check_same_ring(other)?;
        Ok(CyclicPoly {
            modulus: self.modulus,
            coeffs: ntt::cyclic_convolve(&self.coeffs, &other.coeffs, self.modulus),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn m(q: u64) -> Modulus {
        Modulus::new(q).unwrap()
    }

    fn brute(a: &[u64], b: &[u64], q: u64) -> Vec<u64> {
        let p = a.len();
        let mut out = vec![0u128; p];
        for i in 0..p {
            for j in 0..p {
                let k = (i + j) % p;
                out[k] = (out[k] + a[i] as u128 * b[j] as u128 % q as u128) % q as u128;
            }
        }
        out.into_iter().map(|x| x as u64).collect()
    }

    fn random_poly(rng: &mut ChaCha8Rng, p: usize, q: Modulus, density: f64) -> CyclicPoly {
        let coeffs = (0..p)
            .map(|_| {
                if rng.gen_bool(density) {
                    rng.gen_range(0..q.value())
                } else {
                    0
                }
            })
            .collect();
        CyclicPoly::from_coeffs(coeffs, q)
    }

    #[test]
    fn add_examples() {
        let q = m(5);
        let a = CyclicPoly::from_coeffs(vec![1, 3], q);
        let b = CyclicPoly::from_coeffs(vec![2, 4], q);
        assert_eq!(a.add(&b).unwrap().coeffs(), &[3, 2]);
        assert_eq!(a.add(&CyclicPoly::zero(2, q)).unwrap(), a);
        assert!(a.add(&a.neg()).unwrap().is_zero());
    }

    #[test]
    fn mismatched_rings() {
        let a = CyclicPoly::zero(3, m(5));
        assert!(matches!(
            a.mul(&CyclicPoly::zero(4, m(5))),
            Err(Error::RingMismatch { .. })
        ));
        assert!(a.add(&CyclicPoly::zero(3, m(7))).is_err());
    }

    #[test]
    fn mul_examples() {
        let q = m(5);
        let one = CyclicPoly::constant(1, 2, q);
        let a = CyclicPoly::from_coeffs(vec![1, 1], q);
        assert_eq!(a.mul(&one).unwrap(), a);
        // (z+1)^2 = z^2 + 2z + 1 = 2z + 2 in p = 2
        assert_eq!(a.mul(&a).unwrap().coeffs(), &[2, 2]);

        let p = 11;
        let top = CyclicPoly::monomial(1, p - 1, p, q);
        let z = CyclicPoly::monomial(1, 1, p, q);
        assert_eq!(top.mul(&z).unwrap(), CyclicPoly::constant(1, p, q));
    }

    #[test]
    fn sparse_folding_matches_worked_example() {
        let q = m(101);
        let exps: Vec<BigUint> = [20u32, 43, 59].into_iter().map(BigUint::from).collect();
        let terms = || [3u64, 2, 7].into_iter().zip(exps.iter());

        let f17 = CyclicPoly::from_sparse(terms(), 17, q);
        let mut expect = vec![0; 17];
        expect[9] = 2;
        expect[8] = 7;
        expect[3] = 3;
        assert_eq!(f17.coeffs(), &expect[..]);
        assert_eq!(f17.nonzero_terms(), vec![(3, 3), (7, 8), (2, 9)]);

        let f13 = CyclicPoly::from_sparse(terms(), 13, q);
        assert_eq!(f13.nonzero_terms(), vec![(2, 4), (10, 7)]);

        let f7 = CyclicPoly::from_sparse(terms(), 7, q);
        assert_eq!(f7.nonzero_terms(), vec![(2, 1), (7, 3), (3, 6)]);
    }

    #[test]
    fn nonzero_terms_edges() {
        assert!(CyclicPoly::zero(9, m(7)).nonzero_terms().is_empty());
        assert_eq!(CyclicPoly::constant(5, 4, m(7)).nonzero_terms(), vec![(5, 0)]);
    }

    #[test]
    fn mul_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let small_primes: Vec<u64> = (3..=97).filter(|&x| crate::primes::is_prime_u64(x)).collect();
        for _ in 0..1000 {
            let p = rng.gen_range(1..=32);
            let q = m(small_primes[rng.gen_range(0..small_primes.len())]);
            let a = random_poly(&mut rng, p, q, 0.7);
            let b = random_poly(&mut rng, p, q, 0.7);
            assert_eq!(a.mul(&b).unwrap().coeffs(), &brute(a.coeffs(), b.coeffs(), q.value())[..]);
        }
    }

    #[test]
    fn transform_path_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for &(p, q) in &[(1usize, 5u64), (2, 7), (97, 101), (300, 4611686018427387847), (513, 1_000_003)] {
            let q = m(q);
            let a = random_poly(&mut rng, p, q, 1.0);
            let b = random_poly(&mut rng, p, q, 1.0);
            let got = a.mul_transform(&b).unwrap();
            assert_eq!(got.coeffs(), &brute(a.coeffs(), b.coeffs(), q.value())[..]);
            assert_eq!(a.mul(&b).unwrap(), got);
        }
        // worst case magnitudes: every coefficient q - 1
        let q = m(4611686018427387847);
        let a = CyclicPoly::from_coeffs(vec![q.value() - 1; 1000], q);
        let got = a.mul_transform(&a).unwrap();
        assert_eq!(got.coeffs(), &brute(a.coeffs(), a.coeffs(), q.value())[..]);
    }

    #[test]
    fn folding_is_a_ring_homomorphism() {
        // sparse product then fold == fold each then multiply
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let q = m(1_000_003);
        for _ in 0..200 {
            let p = rng.gen_range(1..=40);
            let u: Vec<(u64, u64)> = (0..rng.gen_range(0..6)).map(|_| (rng.gen_range(0..q.value()), rng.gen_range(0..500))).collect();
            let v: Vec<(u64, u64)> = (0..rng.gen_range(0..6)).map(|_| (rng.gen_range(0..q.value()), rng.gen_range(0..500))).collect();
            let mut uv = Vec::new();
            for &(cu, eu) in &u {
                for &(cv, ev) in &v {
                    uv.push((q.mul(cu, cv), BigUint::from(eu + ev)));
                }
            }
            let fold = |terms: &[(u64, u64)]| {
                let owned: Vec<(u64, BigUint)> = terms.iter().map(|&(c, e)| (c, BigUint::from(e))).collect();
                CyclicPoly::from_sparse(owned.iter().map(|(c, e)| (*c, e)), p, q)
            };
            let lhs = CyclicPoly::from_sparse(uv.iter().map(|(c, e)| (*c, e)), p, q);
            assert_eq!(lhs, fold(&u).mul(&fold(&v)).unwrap());
        }
    }

    proptest! {
        #[test]
        fn mul_commutes_and_associates(
            p in 1usize..24,
            seed in any::<u64>(),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let q = m(97);
            let a = random_poly(&mut rng, p, q, 0.6);
            let b = random_poly(&mut rng, p, q, 0.6);
            let c = random_poly(&mut rng, p, q, 0.6);
            prop_assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
            prop_assert_eq!(
                a.mul(&b).unwrap().mul(&c).unwrap(),
                a.mul(&b.mul(&c).unwrap()).unwrap()
            );
            prop_assert!(a.mul(&b).unwrap().coeffs().iter().all(|&x| x < 97));
        }
    }
}
