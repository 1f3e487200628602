//! Sparse multivariate integer polynomials, the Kronecker map, and the
//! plain-text file format.
//!
//! ```text
//! nvars 2
//! degree 10
//! term 3 0 2
//! term 2 3 4
//! ```
//!
//! Blank lines and `#` comments are ignored. The zero polynomial is the
//! header with no `term` lines.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use num_bigint::{BigInt, BigUint, RandBigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Pow, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Term {
    pub coeff: BigInt,
    pub exps: Vec<BigUint>,
}

impl Term {
    pub fn new(coeff: impl Into<BigInt>, exps: Vec<BigUint>) -> Self {
        Term {
            coeff: coeff.into(),
            exps,
        }
    }

    /// Convenience constructor for small exponents.
    pub fn small(coeff: i64, exps: &[u64]) -> Self {
        Term::new(coeff, exps.iter().map(|&e| BigUint::from(e)).collect())
    }
}

/// Ascending Kronecker order: compare exponent vectors from the last
/// variable down.
fn kronecker_cmp(a: &[BigUint], b: &[BigUint]) -> Ordering {
    a.iter().rev().cmp(b.iter().rev())
}

/// `e_1 + e_2 D + ... + e_n D^(n-1)`.
pub fn kronecker_code(exps: &[BigUint], degree: &BigUint) -> Result<BigUint> {
    let mut code = BigUint::zero();
    for e in exps.iter().rev() {
        if e >= degree {
            return Err(Error::ExponentOutOfRange {
                exponent: e.to_string(),
                degree: degree.to_string(),
            });
        }
        code = code * degree + e;
    }
    Ok(code)
}

/// Base-D digits of `code`, least significant first; inverse of
/// [`kronecker_code`].
pub fn d_adic_expand(code: &BigUint, degree: &BigUint, nvars: usize) -> Result<Vec<BigUint>> {
    let mut rest = code.clone();
    let mut digits = Vec::with_capacity(nvars);
    for _ in 0..nvars {
        let (quot, digit) = rest.div_rem(degree);
        digits.push(digit);
        rest = quot;
    }
    if !rest.is_zero() {
        return Err(Error::ExponentOutOfRange {
            exponent: code.to_string(),
            degree: format!("{degree}^{nvars}"),
        });
    }
    Ok(digits)
}

/// D^n, the size of the exponent space.
pub fn kronecker_bound(degree: &BigUint, nvars: usize) -> BigUint {
    Pow::pow(degree, nvars)
}

/// A sparse polynomial in canonical form: nonzero coefficients, distinct
/// exponent vectors with every entry below the degree bound, sorted by
/// ascending Kronecker code.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SparsePoly {
    nvars: usize,
    degree: BigUint,
    terms: Vec<Term>,
}

impl SparsePoly {
    pub fn zero(nvars: usize, degree: BigUint) -> Self {
        SparsePoly {
            nvars,
            degree,
            terms: Vec::new(),
        }
    }

    /// Merges repeated exponent vectors, drops zero coefficients and sorts.
    pub fn canonicalize(nvars: usize, degree: BigUint, mut terms: Vec<Term>) -> Result<Self> {
        for t in &terms {
            check_exponents(t, nvars, &degree)?;
        }
        terms.sort_by(|a, b| kronecker_cmp(&a.exps, &b.exps));
        let mut merged: Vec<Term> = Vec::with_capacity(terms.len());
        for t in terms {
            match merged.last_mut() {
                Some(last) if last.exps == t.exps => last.coeff += t.coeff,
                _ => merged.push(t),
            }
        }
        merged.retain(|t| !t.coeff.is_zero());
        Ok(SparsePoly {
            nvars,
            degree,
            terms: merged,
        })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn degree(&self) -> &BigUint {
        &self.degree
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest absolute coefficient; zero for the zero polynomial.
    pub fn height(&self) -> BigUint {
        self.terms
            .iter()
            .map(|t| t.coeff.magnitude().clone())
            .max()
            .unwrap_or_default()
    }

    /// Same terms under a different (not smaller than needed) degree bound.
    pub fn with_degree(&self, degree: BigUint) -> Result<Self> {
        Self::canonicalize(self.nvars, degree, self.terms.clone())
    }

    /// Kronecker codes of the terms, in term order.
    pub fn codes(&self) -> Vec<BigUint> {
        self.terms
            .iter()
            .map(|t| kronecker_code(&t.exps, &self.degree).expect("canonical exponents"))
            .collect()
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut header: Vec<(usize, &str)> = Vec::new();
        let mut body: Vec<(usize, &str)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if header.len() < 2 {
                header.push((idx + 1, line));
            } else {
                body.push((idx + 1, line));
            }
        }
        let nvars_line = header.first().ok_or(Error::Parse {
            line: 1,
            msg: "missing `nvars` header".into(),
        })?;
        let nvars: usize = header_value(nvars_line, "nvars")?;
        if nvars == 0 {
            return Err(parse_err(nvars_line.0, "nvars must be positive"));
        }
        let degree_line = header.get(1).ok_or(Error::Parse {
            line: nvars_line.0 + 1,
            msg: "missing `degree` header".into(),
        })?;
        let degree: BigUint = header_value(degree_line, "degree")?;
        if degree.is_zero() {
            return Err(parse_err(degree_line.0, "degree bound must be positive"));
        }

        let mut terms = Vec::with_capacity(body.len());
        let mut seen = BTreeSet::new();
        for &(line, content) in &body {
            let mut fields = content.split_whitespace();
            if fields.next() != Some("term") {
                return Err(parse_err(line, "expected `term <coeff> <e1> ... <en>`"));
            }
            let coeff: BigInt = fields
                .next()
                .ok_or_else(|| parse_err(line, "missing coefficient"))?
                .parse()
                .map_err(|_| parse_err(line, "bad coefficient"))?;
            if coeff.is_zero() {
                return Err(parse_err(line, "zero coefficient"));
            }
            let exps = fields
                .map(|f| f.parse::<BigUint>().map_err(|_| parse_err(line, "bad exponent")))
                .collect::<Result<Vec<_>>>()?;
            if exps.len() != nvars {
                return Err(parse_err(
                    line,
                    &format!("expected {nvars} exponents, found {}", exps.len()),
                ));
            }
            if let Some(e) = exps.iter().find(|e| **e >= degree) {
                return Err(parse_err(line, &format!("exponent {e} is not below degree {degree}")));
            }
            if !seen.insert(exps.clone()) {
                return Err(parse_err(line, "duplicate exponent vector"));
            }
            terms.push(Term { coeff, exps });
        }
        Self::canonicalize(nvars, degree, terms)
    }

    /// `terms` distinct uniformly random exponent vectors with coefficients
    /// uniform in `[-H, H] \ {0}`.
    pub fn random<R: Rng + ?Sized>(
        nvars: usize,
        terms: usize,
        degree: &BigUint,
        height: &BigUint,
        rng: &mut R,
    ) -> Result<Self> {
        let space = kronecker_bound(degree, nvars);
        if BigUint::from(terms) > space {
            return Err(Error::Infeasible {
                terms,
                capacity: space.to_string(),
            });
        }
        if terms > 0 && height.is_zero() {
            return Err(Error::InvalidParams("height bound must be at least 1".into()));
        }
        let codes: Vec<BigUint> = match space.to_usize() {
            Some(size) if terms.saturating_mul(2) >= size => {
                let mut all: Vec<usize> = (0..size).collect();
                let (chosen, _) = all.partial_shuffle(rng, terms);
                chosen.iter().map(|&c| BigUint::from(c)).collect()
            }
            _ => {
                let mut chosen = BTreeSet::new();
                while chosen.len() < terms {
                    chosen.insert(rng.gen_biguint_below(&space));
                }
                chosen.into_iter().collect()
            }
        };
        let two_h = height << 1u32;
        let poly_terms = codes
            .iter()
            .map(|code| {
                let exps = d_adic_expand(code, degree, nvars).expect("code below D^n");
                // x in [1, 2H] maps onto [-H, -1] and [1, H]
                let x = rng.gen_biguint_range(&BigUint::one(), &(&two_h + 1u32));
                let coeff = if &x <= height {
                    -BigInt::from_biguint(Sign::Plus, height - &x + 1u32)
                } else {
                    BigInt::from_biguint(Sign::Plus, x - height)
                };
                Term { coeff, exps }
            })
            .collect();
        Self::canonicalize(nvars, degree.clone(), poly_terms)
    }
}

impl fmt::Display for SparsePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "nvars {}", self.nvars)?;
        writeln!(f, "degree {}", self.degree)?;
        for t in &self.terms {
            write!(f, "term {}", t.coeff)?;
            for e in &t.exps {
                write!(f, " {e}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn check_exponents(t: &Term, nvars: usize, degree: &BigUint) -> Result<()> {
    if t.exps.len() != nvars {
        return Err(Error::DimensionMismatch {
            expected: nvars,
            found: t.exps.len(),
        });
    }
    if let Some(e) = t.exps.iter().find(|e| *e >= degree) {
        return Err(Error::ExponentOutOfRange {
            exponent: e.to_string(),
            degree: degree.to_string(),
        });
    }
    Ok(())
}

fn parse_err(line: usize, msg: &str) -> Error {
    Error::Parse {
        line,
        msg: msg.to_string(),
    }
}

fn header_value<T: std::str::FromStr>(&(line, content): &(usize, &str), key: &str) -> Result<T> {
    let mut fields = content.split_whitespace();
    if fields.next() != Some(key) {
        return Err(parse_err(line, &format!("expected `{key} <value>`")));
    }
    let value = fields
        .next()
        .ok_or_else(|| parse_err(line, &format!("missing {key} value")))?;
    if fields.next().is_some() {
        return Err(parse_err(line, "trailing fields"));
    }
    value
        .parse()
        .map_err(|_| parse_err(line, &format!("bad {key} value `{value}`")))
}
