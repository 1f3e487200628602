//! End-to-end small-primes interpolation.
//!
//! Every random draw (q, alpha, the small primes, verification points)
//! happens on the calling thread from one seeded sampler before work fans
//! out, so the output depends only on the seed and never on the number of
//! workers.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;

use crate::blackbox::{kronecker_alpha_powers, kronecker_d_powers, BlackBox, SubstitutionSpec};
use crate::error::{Error, Result};
use crate::primes::{distinct_primes, random_prime, PrimeSampler};
use crate::recovery::{group_sorted, harvest, Recovery, RecoveryContext, TermImage};
use crate::sparse::SparsePoly;
use crate::zq::{Modulus, MODULUS_LIMIT};

/// Smallest coefficient-prime bound used in heuristic mode. Diversified
/// coefficients of distinct terms must not coincide mod q, and with
/// thousands of terms a birthday bound calls for q far above T^2.
pub const HEURISTIC_Q_FLOOR: u64 = 1 << 60;

/// Fewest small primes used in heuristic mode. With only two or three
/// primes a single collision can already push a term below threshold.
pub const HEURISTIC_MIN_PRIMES: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Parameters large enough for the success-probability-1/2 guarantee.
    Provable,
    /// Empirically tuned constants.
    Heuristic,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "provable" => Ok(Mode::Provable),
            "heuristic" => Ok(Mode::Heuristic),
            other => Err(Error::InvalidParams(format!("unknown mode `{other}`"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Provable => "provable",
            Mode::Heuristic => "heuristic",
        })
    }
}

/// Testing hooks: values used verbatim instead of being drawn.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Overrides {
    pub q: Option<u64>,
    pub alpha: Option<u64>,
    pub primes: Option<Vec<u64>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterpParams {
    pub nvars: usize,
    /// Bound T on the number of nonzero terms.
    pub terms: usize,
    /// Partial degrees are below this.
    pub degree: BigUint,
    /// Bound H on absolute coefficient values.
    pub height: BigUint,
    pub mode: Mode,
    /// Prime-size multiplier; `None` picks the mode default.
    pub k: Option<u64>,
    /// Prime-count multiplier; `None` picks the mode default.
    pub ell: Option<u64>,
    /// Coefficient primes come from `[Q, 2Q]`; `None` picks the mode default.
    pub q_bound: Option<u64>,
    pub seed: u64,
    pub workers: usize,
    /// Verified reruns after the first attempt; 0 disables verification.
    pub retries: u32,
    pub overrides: Overrides,
}

impl InterpParams {
    pub fn new(nvars: usize, terms: usize, degree: BigUint, height: BigUint) -> Self {
        InterpParams {
            nvars,
            terms,
            degree,
            height,
            mode: Mode::Heuristic,
            k: None,
            ell: None,
            q_bound: None,
            seed: 0,
            workers: 1,
            retries: 2,
            overrides: Overrides::default(),
        }
    }
}

/// The tunables k, ell and Q.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamChoice {
    pub k: u64,
    pub ell: u64,
    pub q_bound: u64,
}

fn lg(x: &BigUint) -> f64 {
    x.to_f64().map(f64::log2).unwrap_or(f64::INFINITY)
}

fn check_q_bound(q_bound: f64) -> Result<u64> {
    // 2Q must stay below 2^62
    if !(q_bound.is_finite() && 2.0 * q_bound < MODULUS_LIMIT as f64) {
        return Err(Error::UnsupportedHeight(format!("{q_bound:.0}")));
    }
    Ok(q_bound as u64)
}

fn two_h(height: &BigUint) -> f64 {
    (height << 1u32).to_f64().unwrap_or(f64::INFINITY)
}

/// `max(2H, HEURISTIC_Q_FLOOR)`.
pub fn heuristic_q_bound(height: &BigUint) -> Result<u64> {
    let q_bound = (height << 1u32).max(BigUint::from(HEURISTIC_Q_FLOOR));
    match q_bound.to_u64() {
        Some(q) if q < MODULUS_LIMIT / 2 => Ok(q),
        _ => Err(Error::UnsupportedHeight(q_bound.to_string())),
    }
}

/// `max(21, ceil(20 n ln D))`.
pub fn provable_k(nvars: usize, degree: &BigUint) -> u64 {
    let ln_d = lg(degree) * std::f64::consts::LN_2;
    21u64.max((20.0 * nvars as f64 * ln_d).ceil() as u64)
}

/// `max(2H, ceil((ell n T lg D)^2 D / 4))`.
pub fn provable_q_bound(nvars: usize, terms: usize, degree: &BigUint, height: &BigUint, ell: u64) -> Result<u64> {
    let base = ell as f64 * nvars as f64 * terms as f64 * lg(degree);
    let d = degree.to_f64().unwrap_or(f64::INFINITY);
    check_q_bound(two_h(height).max((base * base / 4.0 * d).ceil()))
}

/// Heuristic k: 38 for large T, raised when T is small so that [lambda, 2lambda]
/// holds enough primes.
pub fn heuristic_k(terms: usize) -> u64 {
    let t = terms as u64;
    if t >= 1000 {
        38
    } else if t >= 100 {
        50
    } else {
        50u64.max(10_000u64.div_ceil(t.max(1)))
    }
}

pub fn select_params(mode: Mode, nvars: usize, terms: usize, degree: &BigUint, height: &BigUint) -> Result<ParamChoice> {
    let ell = 2;
    match mode {
        Mode::Provable => Ok(ParamChoice {
            k: provable_k(nvars, degree),
            ell,
            q_bound: provable_q_bound(nvars, terms, degree, height, ell)?,
        }),
        Mode::Heuristic => Ok(ParamChoice {
            k: heuristic_k(terms),
            ell,
            q_bound: heuristic_q_bound(height)?,
        }),
    }
}

/// `ceil(ell n lg D / lg lambda)`, computed exactly as the least `m` with
/// `lambda^m >= D^(ell n)`.
pub fn prime_count(ell: u64, nvars: usize, degree: &BigUint, lambda: u64) -> usize {
    assert!(lambda >= 2, "lambda must be at least 2");
    let target = num_traits::pow(degree.clone(), ell as usize * nvars);
    let mut power = BigUint::one();
    let mut m = 0;
    while power < target {
        power *= lambda;
        m += 1;
    }
    m
}

fn resolve(params: &InterpParams) -> Result<ParamChoice> {
    if params.nvars == 0 || params.terms == 0 || params.workers == 0 {
        return Err(Error::InvalidParams("nvars, terms and workers must be positive".into()));
    }
    if params.degree < BigUint::one() || params.height < BigUint::one() {
        return Err(Error::InvalidParams("degree and height bounds must be positive".into()));
    }
    let defaults = select_params(params.mode, params.nvars, params.terms, &params.degree, &params.height)?;
    let choice = ParamChoice {
        k: params.k.unwrap_or(defaults.k),
        ell: params.ell.unwrap_or(defaults.ell),
        q_bound: params.q_bound.unwrap_or(defaults.q_bound),
    };
    if choice.k == 0 || choice.ell == 0 {
        return Err(Error::InvalidParams("k and ell must be positive".into()));
    }
    check_q_bound(choice.q_bound as f64)?;
    if params.mode == Mode::Provable
        && (choice.k < defaults.k || choice.ell < 2 || choice.q_bound < defaults.q_bound)
    {
        return Err(Error::InvalidParams(format!(
            "provable mode needs k >= {}, ell >= 2, Q >= {}",
            defaults.k, defaults.q_bound
        )));
    }
    Ok(choice)
}

/// All random choices of one attempt.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunSetup {
    pub choice: ParamChoice,
    pub lambda: u64,
    /// `ceil(ell n lg D / lg lambda)` before any mode floor.
    pub mu_formula: usize,
    pub mu: usize,
    pub q: Modulus,
    pub alpha: u64,
    pub alpha_powers: Vec<u64>,
    pub primes: Vec<u64>,
    pub lambda_escalations: u32,
}

/// Draws q, alpha and the small primes, in that order.
pub fn derive_run(params: &InterpParams, sampler: &mut PrimeSampler) -> Result<RunSetup> {
    let choice = resolve(params)?;
    let q = match params.overrides.q {
        Some(q) => Modulus::new(q)?,
        None => Modulus::new(random_prime(choice.q_bound, 2 * choice.q_bound, sampler)?)?,
    };
    let alpha = match params.overrides.alpha {
        Some(a) if q.reduce(a) == 0 => {
            return Err(Error::InvalidParams("alpha must be nonzero mod q".into()))
        }
        Some(a) => q.reduce(a),
        None => sampler.uniform(1, q.value() - 1),
    };
    let alpha_powers = kronecker_alpha_powers(q, alpha, &params.degree, params.nvars);

    let mut lambda = choice
        .k
        .checked_mul(params.terms as u64)
        .filter(|&l| l < (1 << 61))
        .ok_or_else(|| Error::InvalidParams("lambda = kT overflows".into()))?;
    if lambda < 2 {
        return Err(Error::InvalidParams("lambda = kT must be at least 2".into()));
    }
    let mut escalations = 0;
    let floor = match params.mode {
        Mode::Heuristic => HEURISTIC_MIN_PRIMES,
        Mode::Provable => 1,
    };
    let (mu_formula, mu, primes) = match &params.overrides.primes {
        Some(primes) => {
            let mut sorted = primes.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if primes.is_empty() || sorted.len() != primes.len() || primes.iter().any(|&p| !crate::primes::is_prime_u64(p)) {
                return Err(Error::InvalidParams("forced primes must be distinct primes".into()));
            }
            let formula = prime_count(choice.ell, params.nvars, &params.degree, lambda);
            (formula, primes.len(), primes.clone())
        }
        None => loop {
            let formula = prime_count(choice.ell, params.nvars, &params.degree, lambda);
            let mu = formula.max(floor);
            match distinct_primes(lambda, 2 * lambda, mu, sampler) {
                Ok(primes) => break (formula, mu, primes),
                Err(Error::InsufficientPrimes { .. }) if lambda < (1 << 60) => {
                    lambda *= 2;
                    escalations += 1;
                }
                Err(e) => return Err(e),
            }
        },
    };
    Ok(RunSetup {
        choice,
        lambda,
        mu_formula,
        mu,
        q,
        alpha,
        alpha_powers,
        primes,
        lambda_escalations: escalations,
    })
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunStats {
    pub k: u64,
    pub ell: u64,
    pub q_bound: u64,
    pub lambda: u64,
    pub mu_formula: usize,
    pub mu: usize,
    pub q: u64,
    pub alpha: u64,
    pub primes: Vec<u64>,
    pub lambda_escalations: u32,
    /// Black-box queries in the final attempt.
    pub queries: usize,
    /// Size of the accumulated triple list.
    pub triples: usize,
    pub groups: usize,
    pub groups_accepted: usize,
    pub groups_below_threshold: usize,
    pub groups_rejected: usize,
    pub output_terms: usize,
    pub attempts: u32,
    /// `None` when verification is disabled.
    pub verified: Option<bool>,
    pub eval_time: Duration,
    pub sort_time: Duration,
    pub recovery_time: Duration,
    pub verify_time: Duration,
}

impl RunStats {
    /// False only when verification ran and every attempt failed it.
    pub fn succeeded(&self) -> bool {
        self.verified != Some(false)
    }

    pub fn retries_used(&self) -> u32 {
        self.attempts.saturating_sub(1)
    }
}

impl fmt::Display for RunStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let primes: Vec<String> = self.primes.iter().map(u64::to_string).collect();
        let verified = match self.verified {
            None => "skipped",
            Some(true) => "pass",
            Some(false) => "fail",
        };
        writeln!(f, "k={}", self.k)?;
        writeln!(f, "ell={}", self.ell)?;
        writeln!(f, "Q={}", self.q_bound)?;
        writeln!(f, "lambda={}", self.lambda)?;
        writeln!(f, "mu_formula={}", self.mu_formula)?;
        writeln!(f, "mu={}", self.mu)?;
        writeln!(f, "q={}", self.q)?;
        writeln!(f, "alpha={}", self.alpha)?;
        writeln!(f, "primes={}", primes.join(","))?;
        writeln!(f, "lambda_escalations={}", self.lambda_escalations)?;
        writeln!(f, "queries={}", self.queries)?;
        writeln!(f, "triples={}", self.triples)?;
        writeln!(f, "groups={}", self.groups)?;
        writeln!(f, "groups_accepted={}", self.groups_accepted)?;
        writeln!(f, "groups_below_threshold={}", self.groups_below_threshold)?;
        writeln!(f, "groups_rejected={}", self.groups_rejected)?;
        writeln!(f, "output_terms={}", self.output_terms)?;
        writeln!(f, "attempts={}", self.attempts)?;
        writeln!(f, "retries_used={}", self.retries_used())?;
        writeln!(f, "verified={verified}")?;
        writeln!(f, "eval_seconds={:.6}", self.eval_time.as_secs_f64())?;
        writeln!(f, "sort_seconds={:.6}", self.sort_time.as_secs_f64())?;
        writeln!(f, "recovery_seconds={:.6}", self.recovery_time.as_secs_f64())?;
        writeln!(f, "verify_seconds={:.6}", self.verify_time.as_secs_f64())
    }
}

fn build_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParams(format!("cannot start worker pool: {e}")))
}

/// Evaluates the box modulo `z^p - 1` for every prime of the run, one task
/// per prime, and returns the concatenated triples in prime order.
pub fn evaluate_images(bb: &BlackBox, setup: &RunSetup, pool: &rayon::ThreadPool) -> Result<Vec<TermImage>> {
    let per_prime: Vec<Vec<TermImage>> = pool.install(|| {
        setup
            .primes
            .par_iter()
            .map(|&p| {
                let d_powers = kronecker_d_powers(bb.degree(), bb.nvars(), p as usize);
                let spec = SubstitutionSpec::new(setup.q, p as usize, setup.alpha_powers.clone(), d_powers)?;
                Ok(harvest(&bb.evaluate_mod(&spec)?, p))
            })
            .collect::<Result<_>>()
    })?;
    Ok(per_prime.concat())
}

/// Runs the full interpolation. A probabilistic failure is reported through
/// `RunStats::verified`, not as an error.
pub fn sparse_interp(bb: &BlackBox, params: &InterpParams) -> Result<(SparsePoly, RunStats)> {
    if bb.nvars() != params.nvars {
        return Err(Error::DimensionMismatch {
            expected: params.nvars,
            found: bb.nvars(),
        });
    }
    if bb.degree() != &params.degree {
        return Err(Error::InvalidParams(format!(
            "black box degree bound {} differs from {}",
            bb.degree(),
            params.degree
        )));
    }
    let pool = build_pool(params.workers)?;
    let mut sampler = PrimeSampler::new(params.seed);
    let mut attempt = 0;
    loop {
        attempt += 1;
        let setup = derive_run(params, &mut sampler)?;
        let mut stats = RunStats {
            k: setup.choice.k,
            ell: setup.choice.ell,
            q_bound: setup.choice.q_bound,
            lambda: setup.lambda,
            mu_formula: setup.mu_formula,
            mu: setup.mu,
            q: setup.q.value(),
            alpha: setup.alpha,
            primes: setup.primes.clone(),
            lambda_escalations: setup.lambda_escalations,
            queries: setup.primes.len(),
            attempts: attempt,
            ..RunStats::default()
        };

        let start = Instant::now();
        let mut images = evaluate_images(bb, &setup, &pool)?;
        stats.eval_time = start.elapsed();
        stats.triples = images.len();

        let start = Instant::now();
        pool.install(|| images.par_sort_unstable());
        let groups = group_sorted(&images);
        stats.sort_time = start.elapsed();
        stats.groups = groups.len();

        let start = Instant::now();
        let ctx = RecoveryContext::new(setup.mu, params.degree.clone(), params.nvars, setup.q, setup.alpha)?;
        let outcomes: Vec<_> = pool.install(|| groups.par_iter().map(|g| ctx.recover_group(g)).collect());
        let recovery = Recovery::from_outcomes(outcomes);
        stats.groups_accepted = recovery.accepted;
        stats.groups_below_threshold = recovery.below_threshold;
        stats.groups_rejected = recovery.rejected;
        let candidate = SparsePoly::canonicalize(params.nvars, params.degree.clone(), recovery.terms)?;
        stats.recovery_time = start.elapsed();
        stats.output_terms = candidate.len();

        if params.retries == 0 {
            return Ok((candidate, stats));
        }
        let start = Instant::now();
        let ok = verify_candidate(bb, &candidate, &mut sampler, setup.lambda, setup.choice.q_bound, &setup.primes)?;
        stats.verify_time = start.elapsed();
        stats.verified = Some(ok);
        if ok || attempt > params.retries {
            return Ok((candidate, stats));
        }
    }
}

/// Compares the box against `candidate` on one fresh ring: a new small prime
/// from `[lambda, 2 lambda]` outside `exclude`, a new coefficient prime from
/// `[q_bound, 2 q_bound]`, and no diversification.
pub fn verify_candidate(
    bb: &BlackBox,
    candidate: &SparsePoly,
    sampler: &mut PrimeSampler,
    lambda: u64,
    q_bound: u64,
    exclude: &[u64],
) -> Result<bool> {
    let p = fresh_prime(lambda, exclude, sampler)?;
    let q = Modulus::new(random_prime(q_bound, 2 * q_bound, sampler)?)?;
    let spec = SubstitutionSpec::kronecker(q, p as usize, 1, bb.degree(), bb.nvars())?;
    let cand = BlackBox::explicit(candidate.with_degree(bb.degree().clone())?);
    Ok(bb.evaluate_mod(&spec)? == cand.evaluate_mod(&spec)?)
}

fn fresh_prime(lambda: u64, exclude: &[u64], sampler: &mut PrimeSampler) -> Result<u64> {
    let mut lo = lambda;
    loop {
        for _ in 0..64 {
            let p = random_prime(lo, 2 * lo, sampler)?;
            if !exclude.contains(&p) {
                return Ok(p);
            }
        }
        let pool = distinct_primes(lo, 2 * lo, exclude.len() + 1, sampler);
        match pool {
            Ok(ps) => return Ok(*ps.iter().find(|p| !exclude.contains(p)).unwrap()),
            Err(Error::InsufficientPrimes { .. }) => lo *= 2,
            Err(e) => return Err(e),
        }
    }
}
