//! Construction of the optimal miner move: the multi-layer ("Dagwood")
//! sandwich.
//!
//! Every exploitable user transaction gets an *inner layer*: the user
//! transaction, possibly preceded by a miner swap that moves the AMM to the
//! reserves at which the user gets the worst admissible terms. A *final
//! layer* of at most one miner swap per AMM then moves every pair to the
//! reserve ratio `P(t1)/P(t0)`, where its minted token is cheapest. Because
//! a user's loss in an inner layer only depends on the transaction's own
//! parameters, layers can be built one at a time in any order.

mod canonical;
mod classic;
mod inner;
mod solve;

use std::fmt;

use thiserror::Error;

use crate::amm::{MintedPair, StepError, Tolerance, Transaction, UserId};
use crate::pricing::PricingError;

pub use canonical::canonical_swap_values;
pub use inner::{deposit_front_run_reserves, swap_front_run_reserves};
pub use solve::{DagwoodSolution, GameInput};

/// Canonical swap amounts at or below this are treated as "no swap needed".
pub const CANONICAL_DEAD_BAND: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("no AMM for {0}")]
    PairMissing(MintedPair),
    #[error("no consistent front-run for `{tx}`: {detail}")]
    Infeasible { tx: Transaction, detail: String },
    #[error("user {user} cannot fund `{tx}` even after front-running")]
    UnfundedUser {
        user: UserId,
        tx: Transaction,
        #[source]
        source: StepError,
    },
    #[error(transparent)]
    Step(#[from] StepError),
    #[error(transparent)]
    Pricing(#[from] PricingError),
    #[error("invalid game: {0}")]
    InvalidGame(String),
    #[error("no feasible same-direction sandwich")]
    NoFeasibleBundle,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LayerKind {
    /// Price-minimization swap on one pair.
    FinalSwap {
        pair: MintedPair,
    },
    SwapInner {
        user_tx: Transaction,
    },
    DepositInner {
        user_tx: Transaction,
    },
    /// User redeems are never worth including.
    RedeemDropped {
        user_tx: Transaction,
    },
}

/// One layer of the sandwich: miner front-run first, user transaction last.
/// A layer whose user transaction was dropped has no transactions.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub kind: LayerKind,
    pub txs: Vec<Transaction>,
}

impl Layer {
    pub fn label(&self) -> &'static str {
        match self.kind {
            LayerKind::FinalSwap { .. } => "final-swap",
            LayerKind::SwapInner { .. } => "swap-inner",
            LayerKind::DepositInner { .. } => "deposit-inner",
            LayerKind::RedeemDropped { .. } => "redeem-dropped",
        }
    }

    /// The user transaction this layer was built for, if any.
    pub fn user_tx(&self) -> Option<&Transaction> {
        match &self.kind {
            LayerKind::FinalSwap { .. } => None,
            LayerKind::SwapInner { user_tx }
            | LayerKind::DepositInner { user_tx }
            | LayerKind::RedeemDropped { user_tx } => Some(user_tx),
        }
    }

    /// True when the layer executes its user transaction.
    pub fn includes_user_tx(&self) -> bool {
        self.user_tx().is_some_and(|u| self.txs.last() == Some(u))
    }

    pub fn is_empty(&self) -> bool {
        self.txs.is_empty()
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = f.precision().unwrap_or(4);
        write!(f, "{}", self.label())?;
        if let LayerKind::FinalSwap { pair } = &self.kind {
            write!(f, " {pair}")?;
        }
        if self.txs.is_empty() {
            return f.write_str(": (empty)");
        }
        f.write_str(":")?;
        for tx in &self.txs {
            write!(f, " {tx:.p$}")?;
        }
        Ok(())
    }
}

/// Builds sandwich layers on behalf of one miner.
#[derive(Debug, Clone)]
pub struct Solver {
    miner: UserId,
    tol: Tolerance,
}

impl Solver {
    pub fn new(miner: UserId) -> Self {
        Self { miner, tol: Tolerance::default() }
    }

    pub fn with_tolerance(mut self, tol: Tolerance) -> Self {
        self.tol = tol;
        self
    }

    pub fn miner(&self) -> &UserId {
        &self.miner
    }

    pub fn tolerance(&self) -> &Tolerance {
        &self.tol
    }
}

/// Solves `game` with the default tolerance.
pub fn solve(game: &GameInput) -> Result<DagwoodSolution, SolveError> {
    Solver::new(game.miner().clone()).solve(game)
}

/// Best same-direction front-run/back-run bundle around a single user swap,
/// found by a one-dimensional search. Used as a baseline only.
pub fn classic_sandwich(game: &GameInput) -> Result<DagwoodSolution, SolveError> {
    Solver::new(game.miner().clone()).classic_sandwich(game)
}
