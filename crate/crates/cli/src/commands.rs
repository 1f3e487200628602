use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use num_bigint::BigUint;
use spinterp_core::{
    sparse_interp, BlackBox, InterpParams, Overrides, PrimeSampler, RunStats, SparsePoly, StraightLineProgram,
};
use thiserror::Error;

use crate::{BenchArgs, GenArgs, InterpArgs, Kind, RunArgs, VerifyArgs};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Input { path: PathBuf, source: spinterp_core::Error },
    #[error(transparent)]
    Core(#[from] spinterp_core::Error),
    #[error("{0}")]
    Usage(String),
}

type Result<T> = std::result::Result<T, CliError>;

/// Exit statuses other than usage errors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    Failure,
}

impl From<Outcome> for std::process::ExitCode {
    fn from(o: Outcome) -> Self {
        match o {
            Outcome::Success => 0.into(),
            Outcome::Failure => 1.into(),
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|source| CliError::Io {
            path: p.to_owned(),
            source,
        }),
        None => io::stdout().write_all(text.as_bytes()).map_err(|source| CliError::Io {
            path: "<stdout>".into(),
            source,
        }),
    }
}

fn parse_poly(path: &Path) -> Result<SparsePoly> {
    SparsePoly::parse(&read(path)?).map_err(|source| CliError::Input {
        path: path.to_owned(),
        source,
    })
}

pub fn gen(args: GenArgs) -> Result<Outcome> {
    let mut sampler = PrimeSampler::new(args.seed);
    let f = SparsePoly::random(args.nvars, args.terms, &args.degree, &args.height, sampler.rng())?;
    write_out(args.output.as_deref(), &f.to_text())?;
    Ok(Outcome::Success)
}

fn params(nvars: usize, terms: usize, degree: BigUint, height: BigUint, run: &RunArgs) -> InterpParams {
    let mut params = InterpParams::new(nvars, terms, degree, height);
    params.mode = run.mode.into();
    params.seed = run.seed;
    params.workers = run.threads;
    params.retries = run.retries;
    params.overrides = Overrides {
        q: run.force_q,
        alpha: run.force_alpha,
        primes: run.force_primes.clone(),
    };
    params
}

fn load_box(args: &InterpArgs) -> Result<BlackBox> {
    let text = read(&args.input)?;
    let input_err = |source| CliError::Input {
        path: args.input.clone(),
        source,
    };
    let bb = match args.kind {
        Kind::Explicit => {
            let f = SparsePoly::parse(&text).map_err(input_err)?;
            let f = match &args.degree {
                Some(d) => f.with_degree(d.clone())?,
                None => f,
            };
            BlackBox::explicit(f)
        }
        Kind::Product => {
            let factors = BlackBox::parse_product_factors(&text).map_err(input_err)?;
            let degree = args
                .degree
                .clone()
                .unwrap_or_else(|| BlackBox::product_degree_bound(&factors));
            BlackBox::product(factors, degree)?
        }
        Kind::Circuit => {
            let (Some(nvars), Some(degree)) = (args.nvars, args.degree.clone()) else {
                return Err(CliError::Usage("circuit input needs --nvars and --degree".into()));
            };
            let slp = StraightLineProgram::parse(&text, nvars).map_err(input_err)?;
            BlackBox::circuit(slp, nvars, degree)?
        }
    };
    if let Some(n) = args.nvars {
        if n != bb.nvars() {
            return Err(CliError::Usage(format!("--nvars {n} but the input has {} variables", bb.nvars())));
        }
    }
    Ok(bb)
}

pub fn interp(args: InterpArgs) -> Result<Outcome> {
    let bb = load_box(&args)?;
    let params = params(bb.nvars(), args.terms, bb.degree().clone(), args.height.clone(), &args.run);
    let (poly, stats) = sparse_interp(&bb, &params)?;
    write_out(args.output.as_deref(), &poly.to_text())?;
    eprint!("{stats}");
    Ok(if stats.succeeded() {
        Outcome::Success
    } else {
        Outcome::Failure
    })
}

const BENCH_HEADER: &str =
    "run\tfactors\tnvars\tterms\tdegree\tmu\tlambda\tq\tthreads\teval_s\tsort_s\trecovery_s\tverify_s\ttotal_s\toutput_terms\tverified";

fn secs(d: Duration) -> String {
    format!("{:.6}", d.as_secs_f64())
}

fn verified_label(stats: &RunStats) -> &'static str {
    match stats.verified {
        None => "skipped",
        Some(true) => "pass",
        Some(false) => "fail",
    }
}

fn total(stats: &RunStats) -> Duration {
    stats.eval_time + stats.sort_time + stats.recovery_time + stats.verify_time
}

fn median(mut xs: Vec<Duration>) -> Duration {
    xs.sort_unstable();
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2
    }
}

pub fn bench(args: BenchArgs) -> Result<Outcome> {
    if args.factors == 0 || args.repeat == 0 || args.terms == 0 {
        return Err(CliError::Usage("--factors, --terms and --repeat must be positive".into()));
    }
    if args.degree < BigUint::from(1u32) {
        return Err(CliError::Usage("--degree must be positive".into()));
    }
    let mut sampler = PrimeSampler::new(args.run.seed);
    let factors = (0..args.factors)
        .map(|_| SparsePoly::random(args.nvars, args.terms, &args.degree, &args.height, sampler.rng()))
        .collect::<spinterp_core::Result<Vec<_>>>()?;
    let degree = BlackBox::product_degree_bound(&factors);
    // a product of m factors with t terms each has at most t^m terms, and
    // each coefficient is a sum of at most t^(m-1) products of m coefficients
    let m = args.factors as u32;
    let t_big = BigUint::from(args.terms);
    let mut terms = t_big.pow(m);
    let space = spinterp_core::sparse::kronecker_bound(&degree, args.nvars);
    if terms > space {
        terms = space;
    }
    let terms: usize = terms
        .try_into()
        .map_err(|_| CliError::Usage("product term bound does not fit in memory".into()))?;
    let height = t_big.pow(m - 1) * args.height.pow(m);
    let bb = BlackBox::product(factors, degree.clone())?;
    let params = params(args.nvars, terms, degree.clone(), height, &args.run);

    let mut out = io::stdout().lock();
    let io_err = |source| CliError::Io {
        path: "<stdout>".into(),
        source,
    };
    writeln!(out, "{BENCH_HEADER}").map_err(io_err)?;
    let mut runs = Vec::new();
    let mut all_ok = true;
    let mut reference: Option<SparsePoly> = None;
    for run in 1..=args.repeat {
        let (poly, stats) = sparse_interp(&bb, &params)?;
        if reference.as_ref().is_some_and(|r| *r != poly) {
            return Err(CliError::Usage("repeated runs disagree".into()));
        }
        reference = Some(poly);
        all_ok &= stats.succeeded();
        writeln!(
            out,
            "{run}\t{}\t{}\t{terms}\t{degree}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            args.factors,
            args.nvars,
            stats.mu,
            stats.lambda,
            stats.q,
            args.run.threads,
            secs(stats.eval_time),
            secs(stats.sort_time),
            secs(stats.recovery_time),
            secs(stats.verify_time),
            secs(total(&stats)),
            stats.output_terms,
            verified_label(&stats),
        )
        .map_err(io_err)?;
        eprintln!("# run {run}");
        eprint!("{stats}");
        runs.push(stats);
    }
    let med = |f: fn(&RunStats) -> Duration| secs(median(runs.iter().map(f).collect()));
    let last = runs.last().expect("at least one run");
    writeln!(
        out,
        "median\t{}\t{}\t{terms}\t{degree}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
        args.factors,
        args.nvars,
        last.mu,
        last.lambda,
        last.q,
        args.run.threads,
        med(|s| s.eval_time),
        med(|s| s.sort_time),
        med(|s| s.recovery_time),
        med(|s| s.verify_time),
        med(total),
        last.output_terms,
        if all_ok { verified_label(last) } else { "fail" },
    )
    .map_err(io_err)?;
    Ok(if all_ok { Outcome::Success } else { Outcome::Failure })
}

pub fn verify(args: VerifyArgs) -> Result<Outcome> {
    let a = parse_poly(&args.a)?;
    let b = parse_poly(&args.b)?;
    match first_difference(&a, &b) {
        None => {
            println!("identical");
            Ok(Outcome::Success)
        }
        Some(msg) => {
            println!("{msg}");
            Ok(Outcome::Failure)
        }
    }
}

fn exps_text(exps: &[BigUint]) -> String {
    exps.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

/// Describes the first point where two canonical polynomials disagree.
pub fn first_difference(a: &SparsePoly, b: &SparsePoly) -> Option<String> {
    if a.nvars() != b.nvars() {
        return Some(format!("nvars differ: {} vs {}", a.nvars(), b.nvars()));
    }
    if a.degree() != b.degree() {
        return Some(format!("degree bounds differ: {} vs {}", a.degree(), b.degree()));
    }
    // both term lists share one canonical order, so walk them in lockstep
    let lookup = |p: &SparsePoly, exps: &[BigUint]| {
        p.terms().iter().find(|t| t.exps == exps).map(|t| t.coeff.to_string())
    };
    for (ta, tb) in a.terms().iter().zip(b.terms()) {
        if ta != tb {
            let first = if lookup(b, &ta.exps).is_none() || ta.exps == tb.exps { ta } else { tb };
            let ca = lookup(a, &first.exps).unwrap_or_else(|| "absent".into());
            let cb = lookup(b, &first.exps).unwrap_or_else(|| "absent".into());
            return Some(format!("term {}: {ca} vs {cb}", exps_text(&first.exps)));
        }
    }
    let (longer, a_longer) = if a.len() > b.len() { (a, true) } else { (b, false) };
    longer.terms().get(a.len().min(b.len())).map(|t| {
        let (ca, cb) = if a_longer {
            (t.coeff.to_string(), "absent".to_string())
        } else {
            ("absent".to_string(), t.coeff.to_string())
        };
        format!("term {}: {ca} vs {cb}", exps_text(&t.exps))
    })
}
