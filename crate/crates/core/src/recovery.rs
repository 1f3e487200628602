//! From term images back to a polynomial: group the harvested triples by
//! coefficient, keep the groups seen often enough, Chinese-remainder their
//! exponents, undo the diversification and expand base D.

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::cyclic::CyclicPoly;
use crate::error::{Error, Result};
use crate::sparse::{d_adic_expand, kronecker_bound, SparsePoly, Term};
use crate::zq::Modulus;

/// One nonzero coefficient of one modular image: `coeff * z^expo` in
/// the image modulo `z^prime - 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TermImage {
    pub coeff: u64,
    pub expo: u64,
    pub prime: u64,
}

/// Every `(expo, prime)` pair that appeared with one coefficient value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoeffGroup {
    pub coeff: u64,
    pub pairs: Vec<(u64, u64)>,
    /// False when one prime contributed two different residues.
    pub valid: bool,
}

/// Why a group did or did not yield a term.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GroupOutcome {
    Accepted(Term),
    BelowThreshold,
    /// Two residues for the same prime.
    Contradictory,
    /// All primes together cannot pin down an exponent below D^n.
    Underdetermined,
    /// The reconstructed exponent is at least D^n.
    OutOfRange,
    /// A residue beyond the CRT prefix disagrees with the exponent.
    Inconsistent,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Recovery {
    pub terms: Vec<Term>,
    pub accepted: usize,
    pub below_threshold: usize,
    pub rejected: usize,
}

impl Recovery {
    pub fn from_outcomes(outcomes: impl IntoIterator<Item = GroupOutcome>) -> Self {
        let mut r = Recovery::default();
        for o in outcomes {
            match o {
                GroupOutcome::Accepted(t) => {
                    r.accepted += 1;
                    r.terms.push(t);
                }
                GroupOutcome::BelowThreshold => r.below_threshold += 1,
                _ => r.rejected += 1,
            }
        }
        r
    }
}

/// Nonzero coefficients of one image as triples.
pub fn harvest(image: &CyclicPoly, prime: u64) -> Vec<TermImage> {
    image
        .nonzero_terms()
        .into_iter()
        .map(|(coeff, j)| TermImage {
            coeff,
            expo: j as u64,
            prime,
        })
        .collect()
}

/// Sorts and groups.
pub fn group_images(mut images: Vec<TermImage>) -> Vec<CoeffGroup> {
    images.sort_unstable();
    group_sorted(&images)
}

/// Groups a list already sorted by `(coeff, expo, prime)`.
pub fn group_sorted(images: &[TermImage]) -> Vec<CoeffGroup> {
    images
        .chunk_by(|a, b| a.coeff == b.coeff)
        .map(|run| {
            let mut primes: Vec<u64> = run.iter().map(|t| t.prime).collect();
            primes.sort_unstable();
            let valid = primes.windows(2).all(|w| w[0] != w[1]);
            CoeffGroup {
                coeff: run[0].coeff,
                pairs: run.iter().map(|t| (t.expo, t.prime)).collect(),
                valid,
            }
        })
        .collect()
}

/// The unique `E < prod(moduli)` with `E = r_i mod m_i` for every
/// `(r_i, m_i)`.
pub fn crt_combine(pairs: &[(u64, u64)]) -> Result<BigUint> {
    let mut value = BigUint::zero();
    let mut product = BigUint::one();
    for (i, &(residue, modulus)) in pairs.iter().enumerate() {
        if modulus == 0 {
            return Err(Error::InvalidParams("zero modulus".into()));
        }
        let prod_mod = (&product % modulus).to_u64().unwrap();
        if prod_mod.gcd(&modulus) != 1 && modulus != 1 {
            let other = pairs[..i]
                .iter()
                .map(|&(_, m)| m)
                .find(|m| m.gcd(&modulus) != 1)
                .unwrap_or(modulus);
            return Err(Error::NonCoprime(other, modulus));
        }
        let current = (&value % modulus).to_u64().unwrap();
        let diff = (residue % modulus + modulus - current) % modulus;
        let t = (diff as u128 * inv_mod(prod_mod, modulus) as u128 % modulus as u128) as u64;
        value += &product * t;
        product *= modulus;
    }
    Ok(value)
}

fn inv_mod(a: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let (mut r0, mut r1) = (m as i128, a as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let quot = r0 / r1;
        (r0, r1) = (r1, r0 - quot * r1);
        (t0, t1) = (t1, t0 - quot * t1);
    }
    t0.rem_euclid(m as i128) as u64
}

/// Frequency threshold for `mu` primes: a term must show up uncollided
/// in at least half of the images.
pub fn threshold(mu: usize) -> usize {
    mu.div_ceil(2)
}

/// Shared, per-run constants for group recovery.
#[derive(Clone, Debug)]
pub struct RecoveryContext {
    pub threshold: usize,
    pub degree: BigUint,
    pub nvars: usize,
    pub modulus: Modulus,
    pub alpha_inv: u64,
    bound: BigUint,
}

impl RecoveryContext {
    pub fn new(mu: usize, degree: BigUint, nvars: usize, modulus: Modulus, alpha: u64) -> Result<Self> {
        let alpha_inv = modulus.inv(alpha)?;
        Ok(RecoveryContext {
            threshold: threshold(mu),
            bound: kronecker_bound(&degree, nvars),
            degree,
            nvars,
            modulus,
            alpha_inv,
        })
    }

    pub fn recover_group(&self, group: &CoeffGroup) -> GroupOutcome {
        if group.pairs.len() < self.threshold {
            return GroupOutcome::BelowThreshold;
        }
        if !group.valid {
            return GroupOutcome::Contradictory;
        }
        let mut pairs = group.pairs.clone();
        pairs.sort_unstable_by_key(|&(_, prime)| std::cmp::Reverse(prime));

        // shortest prefix of largest primes whose product reaches D^n
        let mut product = BigUint::one();
        let mut used = 0;
        while product < self.bound && used < pairs.len() {
            product *= pairs[used].1;
            used += 1;
        }
        if product < self.bound {
            return GroupOutcome::Underdetermined;
        }
        let prefix: Vec<(u64, u64)> = pairs[..used].to_vec();
        let code = match crt_combine(&prefix) {
            Ok(c) => c,
            Err(_) => return GroupOutcome::Contradictory,
        };
        if code >= self.bound {
            return GroupOutcome::OutOfRange;
        }
        if pairs[used..]
            .iter()
            .any(|&(expo, prime)| (&code % prime).to_u64() != Some(expo))
        {
            return GroupOutcome::Inconsistent;
        }
        let q = self.modulus;
        let coeff = q.signed_lift(q.mul(group.coeff, q.pow_big(self.alpha_inv, &code)));
        let exps = d_adic_expand(&code, &self.degree, self.nvars).expect("code below D^n");
        GroupOutcome::Accepted(Term {
            coeff: BigInt::from(coeff),
            exps,
        })
    }
}

/// Sequential recovery over all groups.
pub fn recover_terms(
    groups: &[CoeffGroup],
    mu: usize,
    degree: &BigUint,
    nvars: usize,
    modulus: Modulus,
    alpha: u64,
) -> Result<Recovery> {
    let ctx = RecoveryContext::new(mu, degree.clone(), nvars, modulus, alpha)?;
    Ok(Recovery::from_outcomes(groups.iter().map(|g| ctx.recover_group(g))))
}

/// For each prime, how many terms of `planted` share their exponent
/// residue with another term.
pub fn collision_census(planted: &SparsePoly, primes: &[u64]) -> Vec<usize> {
    let codes = planted.codes();
    primes
        .iter()
        .map(|&p| {
            let residues: Vec<u64> = codes.iter().map(|c| (c % p).to_u64().unwrap()).collect();
            let mut counts: HashMap<u64, usize> = HashMap::new();
            for &r in &residues {
                *counts.entry(r).or_default() += 1;
            }
            residues.iter().filter(|r| counts[r] > 1).count()
        })
        .collect()
}
