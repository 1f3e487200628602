//! Acceptance suite. Runs every criterion, prints one status line each and
//! exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::time::Instant;

use num_bigint::{BigInt, BigUint};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spinterp_core::engine::{prime_count, provable_k};
use spinterp_core::primes::{distinct_primes, is_prime_u64, random_prime};
use spinterp_core::recovery::{collision_census, harvest, TermImage};
use spinterp_core::*;

enum Status {
    Pass(String),
    Fail(String),
    Skipped(String),
}

fn big(x: u64) -> BigUint {
    BigUint::from(x)
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn check(ok: bool, detail: String) -> Status {
    if ok {
        Status::Pass(detail)
    } else {
        Status::Fail(detail)
    }
}

fn worked_poly() -> SparsePoly {
    SparsePoly::canonicalize(
        2,
        big(10),
        vec![Term::small(3, &[0, 2]), Term::small(2, &[3, 4]), Term::small(7, &[9, 5])],
    )
    .unwrap()
}

/// Dense coefficient vector of length `p` from `(exponent, coeff)` pairs.
fn dense(p: usize, terms: &[(usize, u64)]) -> Vec<u64> {
    let mut v = vec![0; p];
    for &(e, c) in terms {
        v[e] = c;
    }
    v
}

/// Least nonnegative x below the product of the moduli with the given
/// residues, by exhaustive search.
fn crt_search(pairs: &[(u64, u64)]) -> Option<u64> {
    let prod: u64 = pairs.iter().map(|&(_, m)| m).product();
    (0..prod).find(|x| pairs.iter().all(|&(r, m)| x % m == r))
}

fn criterion_1() -> Status {
    let start = Instant::now();
    let f = worked_poly();
    let bb = BlackBox::explicit(f.clone());
    let q = Modulus::new(101).unwrap();
    let expected: [(usize, Vec<u64>); 3] = [
        (7, dense(7, &[(6, 3), (3, 7), (1, 2)])),
        (13, dense(13, &[(7, 10), (4, 2)])),
        (17, dense(17, &[(9, 2), (8, 7), (3, 3)])),
    ];
    let mut images: Vec<TermImage> = Vec::new();
    for (p, want) in &expected {
        let spec = SubstitutionSpec::kronecker(q, *p, 1, &big(10), 2).unwrap();
        let got = bb.evaluate_mod(&spec).unwrap();
        if got.coeffs() != want.as_slice() {
            return Status::Fail(format!("image mod z^{p}-1 is {:?}", got.coeffs()));
        }
        images.extend(harvest(&got, *p as u64));
    }
    // exponent recovery for the coefficients 2 and 7, which appear in all
    // three images
    let mut codes = Vec::new();
    for c in [2u64, 7] {
        let pairs: Vec<(u64, u64)> = images.iter().filter(|t| t.coeff == c).map(|t| (t.expo, t.prime)).collect();
        codes.push(crt_search(&pairs).unwrap());
    }
    // coefficient 3 survives only modulo 7 and 17
    let pairs: Vec<(u64, u64)> = images.iter().filter(|t| t.coeff == 3).map(|t| (t.expo, t.prime)).collect();
    codes.push(crt_search(&pairs).unwrap());
    codes.sort_unstable();
    if codes != [20, 43, 59] {
        return Status::Fail(format!("recovered codes {codes:?}"));
    }

    let mut params = InterpParams::new(2, 3, big(10), big(10));
    params.retries = 0;
    params.overrides = Overrides {
        q: Some(101),
        alpha: Some(1),
        primes: Some(vec![7, 13, 17]),
    };
    let (out, stats) = sparse_interp(&bb, &params).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    check(
        out == f && stats.mu == 3 && out.to_text() == f.to_text() && elapsed < 1.0,
        format!("output `{}` in {elapsed:.3}s", out.to_text().lines().skip(2).collect::<Vec<_>>().join("; ")),
    )
}

fn criterion_2() -> Status {
    let mu = prime_count(2, 20, &big(40), 50_000);
    let formula = ((2.0 * 20.0 * 40f64.log2()) / 50_000f64.log2()).ceil() as usize;

    // product of one random 20-variate factor with 3 terms, degree 40,
    // coefficients up to 2^30
    let mut r = rng(2);
    let factor = SparsePoly::random(20, 3, &big(40), &big(1 << 30), &mut r).unwrap();
    let bb = BlackBox::product(vec![factor.clone()], big(40)).unwrap();
    let mut params = InterpParams::new(20, 3, big(40), big(1 << 30));
    params.seed = 1;
    let (out, stats) = sparse_interp(&bb, &params).unwrap();
    check(
        mu == 14 && formula == 14 && out == factor && stats.verified == Some(true),
        format!("mu={mu} (float formula {formula}); row-1 shape recovered, lambda={} mu={}", stats.lambda, stats.mu),
    )
}

fn random_shape(r: &mut ChaCha8Rng, n: usize, t: usize) -> (BigUint, BigUint) {
    // smallest D with D^n >= 2T keeps the instance feasible
    let mut lo_bits: u32 = 2;
    while (1u128 << ((lo_bits as usize - 1) * n)) < 2 * t as u128 {
        lo_bits += 1;
    }
    let bits = r.gen_range(lo_bits..=20u32.max(lo_bits));
    let degree = big(r.gen_range((1u64 << (bits - 1)) + 1..=1u64 << bits));
    let height = big(r.gen_range(1..=1u64 << 15));
    (degree, height)
}

fn criterion_3() -> Status {
    let mut r = rng(3);
    let mut runs = 0;
    let mut exact_no_retry = 0;
    let mut exact_retry = 0;
    for rep in 0..16u64 {
        for &n in &[1usize, 2, 4, 8] {
            for &t in &[1usize, 10, 100, 1000] {
                let (degree, height) = random_shape(&mut r, n, t);
                let f = SparsePoly::random(n, t, &degree, &height, &mut r).unwrap();
                let bb = BlackBox::explicit(f.clone());
                let mut params = InterpParams::new(n, t, degree, height);
                params.seed = rep << 32 | (n as u64) << 16 | t as u64;
                params.retries = 0;
                let (out, _) = sparse_interp(&bb, &params).unwrap();
                exact_no_retry += usize::from(out == f);
                params.retries = 2;
                let (out, stats) = sparse_interp(&bb, &params).unwrap();
                exact_retry += usize::from(out == f && stats.verified == Some(true));
                runs += 1;
            }
        }
    }
    let rate = exact_no_retry as f64 / runs as f64;
    check(
        rate >= 0.95 && exact_retry == runs,
        format!("retries=0: {exact_no_retry}/{runs} ({:.1}%); retries=2: {exact_retry}/{runs}", 100.0 * rate),
    )
}

fn criterion_4() -> Status {
    let mut r = rng(4);
    let runs = 60;
    let mut ok = 0;
    for i in 0..runs {
        let n = r.gen_range(1..=4usize);
        let t = r.gen_range(1..=50usize);
        let (degree, height) = loop {
            let bits = r.gen_range(2..=12u32);
            let d = big(r.gen_range((1u64 << (bits - 1)) + 1..=1u64 << bits));
            if spinterp_core::sparse::kronecker_bound(&d, n) >= big(2 * t as u64) {
                break (d, big(r.gen_range(1..=1u64 << 15)));
            }
        };
        let f = SparsePoly::random(n, t, &degree, &height, &mut r).unwrap();
        let mut params = InterpParams::new(n, t, degree, height);
        params.mode = Mode::Provable;
        params.retries = 0;
        params.seed = i;
        let (out, _) = sparse_interp(&BlackBox::explicit(f.clone()), &params).unwrap();
        ok += usize::from(out == f);
    }
    let rate = ok as f64 / runs as f64;
    check(rate >= 0.5, format!("{ok}/{runs} ({:.1}%)", 100.0 * rate))
}

fn brute_cyclic(a: &[u64], b: &[u64], q: u64) -> Vec<u64> {
    let p = a.len();
    let mut out = vec![0u64; p];
    for i in 0..p {
        for j in 0..p {
            out[(i + j) % p] = (out[(i + j) % p] + a[i] * b[j]) % q;
        }
    }
    out
}

fn criterion_5() -> Status {
    let start = Instant::now();
    let mut r = rng(5);
    let small_primes: Vec<u64> = (3..=97).filter(|&x| is_prime_u64(x)).collect();
    for _ in 0..1000 {
        let p = r.gen_range(1..=32usize);
        let q = *small_primes.choose(&mut r).unwrap();
        let modulus = Modulus::new(q).unwrap();
        let a: Vec<u64> = (0..p).map(|_| r.gen_range(0..q)).collect();
        let b: Vec<u64> = (0..p).map(|_| r.gen_range(0..q)).collect();
        let got = CyclicPoly::from_coeffs(a.clone(), modulus)
            .mul(&CyclicPoly::from_coeffs(b.clone(), modulus))
            .unwrap();
        if got.coeffs() != brute_cyclic(&a, &b, q).as_slice() {
            return Status::Fail(format!("mismatch at p={p}, q={q}"));
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    check(elapsed < 10.0, format!("1000 pairs in {elapsed:.3}s"))
}

fn random_circuit(r: &mut ChaCha8Rng, n: usize) -> (StraightLineProgram, BigUint) {
    let mut instrs = Vec::new();
    // per-variable degree bound of every intermediate value
    let mut degs: Vec<Vec<u64>> = Vec::new();
    for j in 0..n {
        instrs.push(Instr::Input(j));
        let mut d = vec![0; n];
        d[j] = 1;
        degs.push(d);
    }
    instrs.push(Instr::Const(BigInt::from(r.gen_range(-20i64..=20))));
    degs.push(vec![0; n]);
    let steps = r.gen_range(3..=9);
    let mut muls = 0;
    for _ in 0..steps {
        let len = instrs.len();
        let (i, k) = (r.gen_range(0..len), r.gen_range(0..len));
        let op = r.gen_range(0..3);
        let d: Vec<u64> = if op == 2 && muls < 3 {
            muls += 1;
            instrs.push(Instr::Mul(i, k));
            degs[i].iter().zip(&degs[k]).map(|(a, b)| a + b).collect()
        } else {
            instrs.push(if op == 0 { Instr::Add(i, k) } else { Instr::Sub(i, k) });
            degs[i].iter().zip(&degs[k]).map(|(a, b)| *a.max(b)).collect()
        };
        degs.push(d);
    }
    let degree = big(degs.last().unwrap().iter().copied().max().unwrap() + 1);
    (StraightLineProgram::new(instrs, n).unwrap(), degree)
}

fn random_product(r: &mut ChaCha8Rng, n: usize) -> BlackBox {
    let count = r.gen_range(1..=4);
    let factors: Vec<SparsePoly> = (0..count)
        .map(|_| {
            let d = r.gen_range(2..=6u64);
            let t = r.gen_range(1..=4usize.min(d.pow(n as u32) as usize));
            let d = big(d);
            SparsePoly::random(n, t, &d, &big(50), r).unwrap()
        })
        .collect();
    let degree = BlackBox::product_degree_bound(&factors);
    BlackBox::product(factors, degree).unwrap()
}

fn criterion_6() -> Status {
    let mut r = rng(6);
    let mut sampler = PrimeSampler::new(6);
    let mut checks = 0;
    for i in 0..100 {
        let n = r.gen_range(1..=3usize);
        let bb = if i % 2 == 0 {
            random_product(&mut r, n)
        } else {
            let (slp, degree) = random_circuit(&mut r, n);
            BlackBox::circuit(slp, n, degree).unwrap()
        };
        let oracle = BlackBox::explicit(bb.expand().unwrap());
        for _ in 0..5 {
            let p = random_prime(2, 200, &mut sampler).unwrap() as usize;
            let q = Modulus::new(random_prime(3, 1 << 61, &mut sampler).unwrap()).unwrap();
            let alpha = sampler.uniform(1, q.value() - 1);
            let spec = SubstitutionSpec::kronecker(q, p, alpha, bb.degree(), n).unwrap();
            if bb.evaluate_mod(&spec).unwrap() != oracle.evaluate_mod(&spec).unwrap() {
                return Status::Fail(format!("box {i} differs at p={p}, q={q}"));
            }
            checks += 1;
        }
    }
    Status::Pass(format!("{checks} (box, spec) pairs agree"))
}

fn criterion_7() -> Status {
    let mut r = rng(7);
    let mut sampler = PrimeSampler::new(7);
    let mut samples = 0;
    let mut exceed = 0;
    for _ in 0..50 {
        let n = r.gen_range(1..=4usize);
        let t = r.gen_range(10..=60usize);
        let degree = big(r.gen_range(64..=1u64 << 12));
        let f = SparsePoly::random(n, t, &degree, &big(1), &mut r).unwrap();
        let lambda = provable_k(n, &degree) * t as u64;
        let primes = distinct_primes(lambda, 2 * lambda, 5, &mut sampler).unwrap();
        for colliding in collision_census(&f, &primes) {
            samples += 1;
            exceed += usize::from(3 * colliding > t);
        }
    }
    let frac = exceed as f64 / samples as f64;
    check(frac <= 0.30, format!("{exceed}/{samples} samples exceed T/3 ({frac:.3})"))
}

fn criterion_8() -> Status {
    let mut r = rng(8);
    for i in 0..20u64 {
        let n = r.gen_range(1..=4usize);
        let t = r.gen_range(1..=200usize);
        let (degree, height) = random_shape(&mut r, n, t);
        let f = SparsePoly::random(n, t, &degree, &height, &mut r).unwrap();
        let bb = BlackBox::explicit(f);
        let mut params = InterpParams::new(n, t, degree, height);
        params.seed = 1000 + i;
        let mut reference = None;
        for workers in [1, 2, 4, 8] {
            params.workers = workers;
            let (out, stats) = sparse_interp(&bb, &params).unwrap();
            let key = (out.to_text(), stats.q, stats.alpha, stats.primes.clone(), stats.attempts);
            match &reference {
                None => reference = Some(key),
                Some(k) if *k != key => return Status::Fail(format!("instance {i} differs at {workers} workers")),
                Some(_) => {}
            }
        }
    }
    Status::Pass("20 instances identical for 1, 2, 4, 8 workers".into())
}

fn criterion_9() -> Status {
    let mut r = rng(9);
    let n = 8;
    let factors: Vec<SparsePoly> = (0..2)
        .map(|_| SparsePoly::random(n, 32, &big(1 << 29), &big(1000), &mut r).unwrap())
        .collect();
    let degree = BlackBox::product_degree_bound(&factors);
    let bb = BlackBox::product(factors, degree.clone()).unwrap();
    let mut params = InterpParams::new(n, 1024, degree, big(32 * 1000 * 1000));
    params.k = Some(100);
    params.retries = 0;
    let mut times = BTreeMap::new();
    let mut outputs = Vec::new();
    for workers in [1, 4] {
        params.workers = workers;
        let (out, stats) = sparse_interp(&bb, &params).unwrap();
        if stats.mu < 16 || stats.lambda < 100_000 {
            return Status::Fail(format!("instance too small: mu={} lambda={}", stats.mu, stats.lambda));
        }
        times.insert(workers, stats.eval_time.as_secs_f64());
        outputs.push(out);
    }
    let ratio = times[&4] / times[&1];
    let cores = std::thread::available_parallelism().map(|c| c.get()).unwrap_or(1);
    let detail = format!(
        "eval 1 worker {:.3}s, 4 workers {:.3}s, ratio {ratio:.2} on {cores} core(s)",
        times[&1], times[&4]
    );
    if outputs[0] != outputs[1] {
        return Status::Fail(format!("outputs differ; {detail}"));
    }
    if cores < 4 {
        return Status::Skipped(format!("needs >= 4 cores; {detail}"));
    }
    check(ratio <= 0.6, detail)
}

fn main() {
    type Criterion = (&'static str, fn() -> Status);
    let criteria: [Criterion; 9] = [
        ("worked example", criterion_1),
        ("prime count vs benchmark row", criterion_2),
        ("heuristic round trip", criterion_3),
        ("provable success rate", criterion_4),
        ("cyclic product oracle", criterion_5),
        ("black-box homomorphism", criterion_6),
        ("collision statistic", criterion_7),
        ("determinism under parallelism", criterion_8),
        ("parallel speedup", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let status = run();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match status {
            Status::Pass(d) => ("PASS", d),
            Status::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Status::Skipped(d) => ("SKIPPED", d),
        };
        println!("criterion {} [{name}]: {tag} ({detail}) [{secs:.2}s]", i + 1);
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
