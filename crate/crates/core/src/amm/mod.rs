//! Wallets, constant-product AMMs and the transition rules between states.

mod engine;
mod state;
mod token;
mod tx;

pub use engine::{
    apply_sequence, deposit, redeem, resolve_swap, swap, swap_output, Mode, Replay, ResolvedSwap, Rule, StepError,
    StepErrorKind, StepOutcome, Tolerance,
};
pub use state::{Amm, Balance, State, StateError};
pub use token::{IdError, MintedPair, Token, TokenId, UserId};
pub use tx::{Direction, Transaction, TxKind};

pub(crate) use state::close;
