//! Language-theoretic kernels: NFAs with inclusion and product checks,
//! pushdown automata with emptiness and Parikh extraction, semilinear
//! sets, and a Presburger arithmetic decision procedure.

pub mod cfg;
pub mod dot;
pub mod nfa;
pub mod pda;
pub mod presburger;
pub mod semilinear;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LangError {
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("resource cap exceeded: {0}")]
    Resource(String),
    #[error("unsupported input: {0}")]
    Unsupported(String),
    #[error("internal error: {0}")]
    Internal(String),
}
