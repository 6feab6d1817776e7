use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("p^N overflows the 62-bit modulus (p = {p}, N = {prec})")]
    PrecisionTooLarge { p: u64, prec: u32 },

    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),

    #[error("precision instability: invariants changed from {at_n:?} to {at_n2:?} under the N+2 recheck")]
    PrecisionUnstable { at_n: Vec<u32>, at_n2: Vec<u32> },

    #[error("size cap exceeded: {what} needs {needed}, cap is {cap}")]
    CapExceeded { what: &'static str, needed: usize, cap: usize },

    #[error("group table is not associative at ({0}, {1}, {2})")]
    NotAssociative(usize, usize, usize),

    #[error("group axiom violated: {0}")]
    GroupAxiom(String),

    #[error("group action axiom violated: {0}")]
    ActionAxiom(String),

    #[error("order {0} is not a prime power")]
    NotPGroup(usize),

    #[error("action is not uniserial: {0}")]
    NotUniserial(String),

    #[error("not a cocycle: {0}")]
    NotCocycle(String),

    #[error("hypothesis not met: {0}")]
    Hypothesis(String),

    #[error("internal consistency failure: {0}")]
    Consistency(String),

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
