//! The evaluator abstraction. The only query the interpolation engine
//! makes is `f(a_0 z^{D_0}, ..., a_{n-1} z^{D_{n-1}}) mod (z^p - 1)` over
//! Z/qZ, and every box form answers it the same way.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::{ToPrimitive, Zero};

use crate::cyclic::CyclicPoly;
use crate::error::{Error, Result};
use crate::sparse::{SparsePoly, Term};
use crate::zq::Modulus;

/// Upper bound on the number of terms `expand` will materialize.
pub const EXPAND_LIMIT: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Instr {
    Input(usize),
    Const(BigInt),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
}

/// A division-free straight-line program; the last instruction is the output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StraightLineProgram {
    instrs: Vec<Instr>,
}

impl StraightLineProgram {
    pub fn new(instrs: Vec<Instr>, nvars: usize) -> Result<Self> {
        if instrs.is_empty() {
            return Err(Error::EmptyCircuit);
        }
        for (index, ins) in instrs.iter().enumerate() {
            let refs: &[usize] = match ins {
                Instr::Input(var) => {
                    if *var >= nvars {
                        return Err(Error::CircuitVariable {
                            index,
                            var: *var,
                            nvars,
                        });
                    }
                    &[]
                }
                Instr::Const(_) => &[],
                Instr::Add(i, k) | Instr::Sub(i, k) | Instr::Mul(i, k) => &[*i, *k],
            };
            if let Some(&reference) = refs.iter().find(|&&r| r >= index) {
                return Err(Error::CircuitReference { index, reference });
            }
        }
        Ok(StraightLineProgram { instrs })
    }

    pub fn instrs(&self) -> &[Instr] {
        &self.instrs
    }

    /// One instruction per line: `in j`, `const c`, `add i k`, `sub i k`,
    /// `mul i k`, with 0-based instruction indices.
    pub fn parse(text: &str, nvars: usize) -> Result<Self> {
        let mut instrs = Vec::new();
        let mut lines = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: &str| Error::Parse {
                line: idx + 1,
                msg: msg.to_string(),
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let index = |s: &str| s.parse::<usize>().map_err(|_| err("bad index"));
            let ins = match fields.as_slice() {
                ["in", j] => Instr::Input(index(j)?),
                ["const", c] => Instr::Const(c.parse().map_err(|_| err("bad constant"))?),
                ["add", i, k] => Instr::Add(index(i)?, index(k)?),
                ["sub", i, k] => Instr::Sub(index(i)?, index(k)?),
                ["mul", i, k] => Instr::Mul(index(i)?, index(k)?),
                _ => return Err(err("expected `in j`, `const c`, or `add|sub|mul i k`")),
            };
            instrs.push(ins);
            lines.push(idx + 1);
        }
        Self::new(instrs, nvars).map_err(|e| match e {
            Error::CircuitReference { index, .. } | Error::CircuitVariable { index, .. } => {
                Error::Parse {
                    line: lines[index],
                    msg: e.to_string(),
                }
            }
            other => other,
        })
    }
}

impl fmt::Display for StraightLineProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for ins in &self.instrs {
            match ins {
                Instr::Input(j) => writeln!(f, "in {j}")?,
                Instr::Const(c) => writeln!(f, "const {c}")?,
                Instr::Add(i, k) => writeln!(f, "add {i} {k}")?,
                Instr::Sub(i, k) => writeln!(f, "sub {i} {k}")?,
                Instr::Mul(i, k) => writeln!(f, "mul {i} {k}")?,
            }
        }
        Ok(())
    }
}

/// The substitution `x_j -> alpha_j z^{D_j}` into (Z/qZ)[z]/(z^p - 1).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubstitutionSpec {
    pub modulus: Modulus,
    pub p: usize,
    pub alpha_powers: Vec<u64>,
    pub d_powers: Vec<u64>,
}

impl SubstitutionSpec {
    /// Kronecker substitution diversified by `alpha`: `alpha_j = alpha^(D^j)`
    /// and `D_j = D^j mod p`.
    pub fn kronecker(modulus: Modulus, p: usize, alpha: u64, degree: &BigUint, nvars: usize) -> Result<Self> {
        let alpha_powers = kronecker_alpha_powers(modulus, alpha, degree, nvars);
        Self::new(modulus, p, alpha_powers, kronecker_d_powers(degree, nvars, p))
    }

    pub fn new(modulus: Modulus, p: usize, alpha_powers: Vec<u64>, d_powers: Vec<u64>) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidParams("ring degree must be positive".into()));
        }
        if alpha_powers.len() != d_powers.len() {
            return Err(Error::DimensionMismatch {
                expected: alpha_powers.len(),
                found: d_powers.len(),
            });
        }
        if alpha_powers.first().is_some_and(|&a| modulus.reduce(a) == 0) {
            return Err(Error::InvalidParams("alpha must be a unit".into()));
        }
        if d_powers.iter().any(|&d| d >= p as u64) {
            return Err(Error::InvalidParams("substitution degrees must be reduced mod p".into()));
        }
        let alpha_powers = alpha_powers.into_iter().map(|a| modulus.reduce(a)).collect();
        Ok(SubstitutionSpec {
            modulus,
            p,
            alpha_powers,
            d_powers,
        })
    }

    pub fn nvars(&self) -> usize {
        self.alpha_powers.len()
    }
}

/// `(alpha, alpha^D, ..., alpha^(D^(n-1))) mod q`, exponents at full precision.
pub fn kronecker_alpha_powers(modulus: Modulus, alpha: u64, degree: &BigUint, nvars: usize) -> Vec<u64> {
    let mut exp = BigUint::from(1u32);
    (0..nvars)
        .map(|_| {
            let a = modulus.pow_big(alpha, &exp);
            exp *= degree;
            a
        })
        .collect()
}

/// `(1, D mod p, ..., D^(n-1) mod p)`.
pub fn kronecker_d_powers(degree: &BigUint, nvars: usize, p: usize) -> Vec<u64> {
    let p = p as u64;
    let d = (degree % p).to_u64().unwrap();
    let mut cur = 1 % p;
    (0..nvars)
        .map(|_| {
            let out = cur;
            cur = ((cur as u128 * d as u128) % p as u128) as u64;
            out
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoxKind {
    Explicit(SparsePoly),
    Product(Vec<SparsePoly>),
    Circuit(StraightLineProgram),
}

/// An unknown polynomial in `nvars` variables with partial degrees below
/// `degree`. The box trusts callers on the bounds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlackBox {
    kind: BoxKind,
    nvars: usize,
    degree: BigUint,
}

impl BlackBox {
    pub fn explicit(poly: SparsePoly) -> Self {
        BlackBox {
            nvars: poly.nvars(),
            degree: poly.degree().clone(),
            kind: BoxKind::Explicit(poly),
        }
    }

    /// Product of sparse factors; `degree` bounds the expanded product.
    pub fn product(factors: Vec<SparsePoly>, degree: BigUint) -> Result<Self> {
        let nvars = factors
            .first()
            .ok_or_else(|| Error::InvalidParams("a product needs at least one factor".into()))?
            .nvars();
        if let Some(bad) = factors.iter().find(|f| f.nvars() != nvars) {
            return Err(Error::DimensionMismatch {
                expected: nvars,
                found: bad.nvars(),
            });
        }
        Ok(BlackBox {
            kind: BoxKind::Product(factors),
            nvars,
            degree,
        })
    }

    pub fn circuit(slp: StraightLineProgram, nvars: usize, degree: BigUint) -> Result<Self> {
        // revalidate in case the program was built for more variables
        let slp = StraightLineProgram::new(slp.instrs, nvars)?;
        Ok(BlackBox {
            kind: BoxKind::Circuit(slp),
            nvars,
            degree,
        })
    }

    pub fn kind(&self) -> &BoxKind {
        &self.kind
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn degree(&self) -> &BigUint {
        &self.degree
    }

    /// The one black-box query: image of f under `spec` in
    /// (Z/qZ)[z]/(z^p - 1).
    pub fn evaluate_mod(&self, spec: &SubstitutionSpec) -> Result<CyclicPoly> {
        if spec.nvars() != self.nvars {
            return Err(Error::DimensionMismatch {
                expected: self.nvars,
                found: spec.nvars(),
            });
        }
        match &self.kind {
            BoxKind::Explicit(f) => Ok(evaluate_sparse(f, spec)),
            BoxKind::Product(factors) => {
                let mut acc = evaluate_sparse(&factors[0], spec);
                for f in &factors[1..] {
                    acc = acc.mul(&evaluate_sparse(f, spec))?;
                }
                Ok(acc)
            }
            BoxKind::Circuit(slp) => evaluate_circuit(slp, spec),
        }
    }

    /// Exact expansion over the integers. Intended for ground truth at
    /// desk scale; refuses to grow past [`EXPAND_LIMIT`] terms.
    pub fn expand(&self) -> Result<SparsePoly> {
        self.expand_with_limit(EXPAND_LIMIT)
    }

    pub fn expand_with_limit(&self, limit: usize) -> Result<SparsePoly> {
        let map = match &self.kind {
            BoxKind::Explicit(f) => return f.with_degree(self.degree.clone()),
            BoxKind::Product(factors) => {
                let mut acc = to_map(&factors[0]);
                for f in &factors[1..] {
                    acc = map_mul(&acc, &to_map(f), limit)?;
                }
                acc
            }
            BoxKind::Circuit(slp) => {
                let mut values: Vec<TermMap> = Vec::with_capacity(slp.instrs.len());
                for ins in &slp.instrs {
                    let v = match ins {
                        Instr::Input(j) => {
                            let mut exps = vec![BigUint::zero(); self.nvars];
                            exps[*j] = BigUint::from(1u32);
                            TermMap::from([(exps, BigInt::from(1))])
                        }
                        Instr::Const(c) => {
                            let mut m = TermMap::new();
                            if !c.is_zero() {
                                m.insert(vec![BigUint::zero(); self.nvars], c.clone());
                            }
                            m
                        }
                        Instr::Add(i, k) => map_add(&values[*i], &values[*k], false, limit)?,
                        Instr::Sub(i, k) => map_add(&values[*i], &values[*k], true, limit)?,
                        Instr::Mul(i, k) => map_mul(&values[*i], &values[*k], limit)?,
                    };
                    values.push(v);
                }
                values.pop().unwrap()
            }
        };
        let terms = map
            .into_iter()
            .map(|(exps, coeff)| Term { coeff, exps })
            .collect();
        SparsePoly::canonicalize(self.nvars, self.degree.clone(), terms)
    }

    /// Reads a product file: sparse polynomial blocks separated by `---`.
    pub fn parse_product_factors(text: &str) -> Result<Vec<SparsePoly>> {
        let mut factors = Vec::new();
        let mut block = String::new();
        let mut block_start = 0;
        let lines: Vec<&str> = text.lines().collect();
        for (idx, line) in lines.iter().enumerate() {
            let sep = line.trim() == "---";
            if !sep {
                block.push_str(line);
                block.push('\n');
            }
            if sep || idx + 1 == lines.len() {
                let f = SparsePoly::parse(&block).map_err(|e| match e {
                    Error::Parse { line, msg } => Error::Parse {
                        line: line + block_start,
                        msg,
                    },
                    other => other,
                })?;
                if let Some(first) = factors.first().map(SparsePoly::nvars) {
                    if f.nvars() != first {
                        return Err(Error::Parse {
                            line: block_start + 1,
                            msg: format!("factor has {} variables, expected {first}", f.nvars()),
                        });
                    }
                }
                factors.push(f);
                block.clear();
                block_start = idx + 1;
            }
        }
        if factors.is_empty() {
            return Err(Error::Parse {
                line: 1,
                msg: "empty product".into(),
            });
        }
        Ok(factors)
    }

    /// Degree bound valid for any product of the given factors:
    /// `sum(D_i - 1) + 1`.
    pub fn product_degree_bound(factors: &[SparsePoly]) -> BigUint {
        factors
            .iter()
            .fold(BigUint::from(1u32), |acc, f| acc + f.degree() - 1u32)
    }
}

fn evaluate_sparse(f: &SparsePoly, spec: &SubstitutionSpec) -> CyclicPoly {
    let q = spec.modulus;
    let p = spec.p as u64;
    let mut out = CyclicPoly::zero(spec.p, q);
    for t in f.terms() {
        let mut c = q.reduce_bigint(&t.coeff);
        let mut idx = 0u64;
        for ((e, &a), &d) in t.exps.iter().zip(&spec.alpha_powers).zip(&spec.d_powers) {
            c = q.mul(c, q.pow_big(a, e));
            let e_mod = (e % p).to_u64().unwrap();
            idx = ((idx as u128 + e_mod as u128 * d as u128) % p as u128) as u64;
        }
        out.add_at(idx as usize, c);
    }
    out
}

fn evaluate_circuit(slp: &StraightLineProgram, spec: &SubstitutionSpec) -> Result<CyclicPoly> {
    let q = spec.modulus;
    let mut values: Vec<CyclicPoly> = Vec::with_capacity(slp.instrs.len());
    for ins in &slp.instrs {
        let v = match ins {
            Instr::Input(j) => CyclicPoly::monomial(
                spec.alpha_powers[*j],
                spec.d_powers[*j] as usize,
                spec.p,
                q,
            ),
            Instr::Const(c) => CyclicPoly::constant(q.reduce_bigint(c), spec.p, q),
            Instr::Add(i, k) => values[*i].add(&values[*k])?,
            Instr::Sub(i, k) => values[*i].sub(&values[*k])?,
            Instr::Mul(i, k) => values[*i].mul(&values[*k])?,
        };
        values.push(v);
    }
    Ok(values.pop().unwrap())
}

type TermMap = BTreeMap<Vec<BigUint>, BigInt>;

fn to_map(f: &SparsePoly) -> TermMap {
    f.terms()
        .iter()
        .map(|t| (t.exps.clone(), t.coeff.clone()))
        .collect()
}

fn map_add(a: &TermMap, b: &TermMap, subtract: bool, limit: usize) -> Result<TermMap> {
    let mut out = a.clone();
    for (exps, c) in b {
        let slot = out.entry(exps.clone()).or_insert_with(BigInt::zero);
        if subtract {
            *slot -= c;
        } else {
            *slot += c;
        }
        if slot.is_zero() {
            out.remove(exps);
        }
    }
    if out.len() > limit {
        return Err(Error::Oversize { limit });
    }
    Ok(out)
}

fn map_mul(a: &TermMap, b: &TermMap, limit: usize) -> Result<TermMap> {
    let mut out = TermMap::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            let exps: Vec<BigUint> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
            let slot = out.entry(exps).or_insert_with(BigInt::zero);
            *slot += ca * cb;
        }
        if out.len() > limit {
            return Err(Error::Oversize { limit });
        }
    }
    out.retain(|_, c| !c.is_zero());
    Ok(out)
}
