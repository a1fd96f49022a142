//! Semantics of constant-product AMMs and construction of the miner's
//! optimal transaction bundle against a pool of user transactions.
//!
//! * [`amm`]: wallets, AMMs and the step relation.
//! * [`pricing`]: minted-token prices, net worth and gain.
//! * [`solver`]: the layered sandwich and a classic baseline.
//! * [`oracle`]: brute-force search used to check the solver.

// errors carry the rejected transaction; `!(x > 0.0)` also rejects NaN
#![allow(clippy::result_large_err, clippy::neg_cmp_op_on_partial_ord)]

pub mod amm;
pub mod oracle;
pub mod pricing;
pub mod solver;

pub use amm::{
    apply_sequence, Amm, Balance, Direction, MintedPair, Mode, Replay, State, StepError, StepErrorKind, Token, TokenId,
    Tolerance, Transaction, TxKind, UserId,
};
pub use pricing::{gain, PriceOracle, PricingError};
pub use solver::{classic_sandwich, solve, DagwoodSolution, GameInput, Layer, LayerKind, SolveError, Solver};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/amm-semantics.md")]
    mod amm_semantics {}
    #[doc = include_str!("../../../book/src/pricing.md")]
    mod pricing {}
    #[doc = include_str!("../../../book/src/price-minimization.md")]
    mod price_minimization {}
    #[doc = include_str!("../../../book/src/inner-layers.md")]
    mod inner_layers {}
    #[doc = include_str!("../../../book/src/solving.md")]
    mod solving {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
