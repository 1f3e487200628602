//! Interpolation of supersparse multivariate integer polynomials from
//! black-box evaluations by the small-primes method.
//!
//! The unknown polynomial is reduced modulo `z^p - 1` over a random
//! word-size prime field for many small primes `p`. A random
//! diversification makes each term's coefficient distinctive across those
//! images, so the images of one term can be matched up by coefficient and
//! its exponent recovered by Chinese remaindering.

pub mod blackbox;
pub mod cyclic;
pub mod engine;
pub mod error;
pub mod primes;
pub mod recovery;
pub mod sparse;
pub mod zq;

pub use blackbox::{BlackBox, BoxKind, Instr, StraightLineProgram, SubstitutionSpec};
pub use cyclic::CyclicPoly;
pub use engine::{select_params, sparse_interp, verify_candidate, InterpParams, Mode, Overrides, ParamChoice, RunStats};
pub use error::{Error, Result};
pub use primes::PrimeSampler;
pub use recovery::{CoeffGroup, TermImage};
pub use sparse::{SparsePoly, Term};
pub use zq::Modulus;
