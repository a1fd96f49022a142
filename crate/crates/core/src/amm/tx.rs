use std::fmt;

use super::token::{MintedPair, Token, TokenId, UserId};

/// Swap direction. `Left` (0) sends token 0 to the AMM, `Right` (1) sends
/// token 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Left,
    Right,
}

impl Direction {
    /// Index of the token the swapper deposits.
    pub fn index(self) -> usize {
        match self {
            Direction::Left => 0,
            Direction::Right => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(Direction::Left),
            1 => Some(Direction::Right),
            _ => None,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TxKind {
    /// Deposit `v0:t0` and `v1:t1`, receiving minted tokens of the pair.
    /// Creates the AMM when it does not exist yet.
    Deposit { v0: f64, t0: Token, v1: f64, t1: Token },
    /// Send `v[dir]` of `t[dir]` and receive at least `v[1-dir]` of
    /// `t[1-dir]`.
    Swap { dir: Direction, v0: f64, t0: TokenId, v1: f64, t1: TokenId },
    /// Burn `v` minted tokens for a pro-rata share of the reserves.
    Redeem { v: f64, pair: MintedPair },
}

/// A transaction issued by `user`. Amounts are validated when the
/// transaction is applied, not when it is built.
#[derive(Clone, Debug, PartialEq)]
pub struct Transaction {
    pub user: UserId,
    pub kind: TxKind,
}

impl Transaction {
    pub fn deposit(user: UserId, v0: f64, t0: TokenId, v1: f64, t1: TokenId) -> Self {
        Self { user, kind: TxKind::Deposit { v0, t0: t0.into(), v1, t1: t1.into() } }
    }

    pub fn swap(user: UserId, dir: Direction, v0: f64, t0: TokenId, v1: f64, t1: TokenId) -> Self {
        Self { user, kind: TxKind::Swap { dir, v0, t0, v1, t1 } }
    }

    pub fn redeem(user: UserId, v: f64, pair: MintedPair) -> Self {
        Self { user, kind: TxKind::Redeem { v, pair } }
    }

    pub fn is_swap(&self) -> bool {
        matches!(self.kind, TxKind::Swap { .. })
    }

    /// Short tag: `dep`, `swap` or `rdm`.
    pub fn type_name(&self) -> &'static str {
        match self.kind {
            TxKind::Deposit { .. } => "dep",
            TxKind::Swap { .. } => "swap",
            TxKind::Redeem { .. } => "rdm",
        }
    }

    /// Amounts the issuer must hold for this transaction to be enabled.
    pub fn inputs(&self) -> Vec<(Token, f64)> {
        match &self.kind {
            TxKind::Deposit { v0, t0, v1, t1 } => vec![(t0.clone(), *v0), (t1.clone(), *v1)],
            TxKind::Swap { dir, v0, t0, v1, t1 } => match dir {
                Direction::Left => vec![(Token::Atomic(t0.clone()), *v0)],
                Direction::Right => vec![(Token::Atomic(t1.clone()), *v1)],
            },
            TxKind::Redeem { v, pair } => vec![(Token::Minted(pair.clone()), *v)],
        }
    }
}

impl fmt::Display for Transaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = f.precision().unwrap_or(4);
        match &self.kind {
            TxKind::Deposit { v0, t0, v1, t1 } => {
                write!(f, "{}:dep({v0:.p$}:{t0}, {v1:.p$}:{t1})", self.user)
            }
            TxKind::Swap { dir, v0, t0, v1, t1 } => {
                write!(f, "{}:swap{}({v0:.p$}:{t0}, {v1:.p$}:{t1})", self.user, dir.index())
            }
            TxKind::Redeem { v, pair } => write!(f, "{}:rdm({v:.p$}:{pair})", self.user),
        }
    }
}
