//! Error type shared by all modules.

use thiserror::Error;

/// Errors raised by tower construction, arithmetic and the verification routines.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("invalid tower parameters: {0}")]
    InvalidTower(String),
    #[error("l^m = {order} does not divide p^f - 1 = {group}; zeta_(l^m) is not in W_f")]
    NotEisensteinCompatible { order: u64, group: u64 },
    #[error("precision K = {0} is below the minimum of 2")]
    PrecisionTooLow(u32),
    #[error("modulus p^K overflows 62 bits (p = {p}, K = {k})")]
    PrecisionOverflow { p: u64, k: u32 },
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("element is not divisible by pi")]
    NotDivisible,
    #[error("element is not a unit")]
    NotUnit,
    #[error("division by an element that vanishes at the working precision")]
    DivisionByZero,
    #[error("word of length {len} exceeds the jet order {max}")]
    OrderOverflow { len: usize, max: usize },
    #[error("the empty word is not allowed here")]
    EmptyWord,
    #[error("required class {0} is missing")]
    MissingClass(String),
    #[error("symbols come from different Frobenius families")]
    FamilyMismatch,
    #[error("the series is zero at the working precision")]
    ZeroSeries,
    #[error("letter {letter} is out of range 1..={n}")]
    BadLetter { letter: u8, n: usize },
    #[error("incompatible dimensions: {0}")]
    Dimension(String),
    #[error("valuation of beta must exceed 1/(p-1)")]
    BetaTooLarge,
    #[error("point must satisfy v(a) > 0 for the series to converge")]
    NotTopologicallyNilpotent,
    #[error("curve has bad reduction at p")]
    BadReduction,
    #[error("curve is supersingular at p")]
    NotOrdinary,
    #[error("relation {0} is not homogeneous in c")]
    NotHomogeneous(String),
    #[error("integrality violated: {0}")]
    IntegralityViolation(String),
    #[error("the two words must be distinct")]
    DistinctWordsRequired,
    #[error("unknown form {0}")]
    UnknownForm(String),
    #[error("series too short: need {need} coefficients, have {have}")]
    SeriesTooShort { need: usize, have: usize },
    #[error("logarithm argument is not topologically nilpotent")]
    LogDivergence,
    #[error("precision budget exceeded: {0}")]
    PrecisionBudgetExceeded(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
