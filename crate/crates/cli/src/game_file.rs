//! JSON encoding of games and transactions.
//!
//! Minted tokens use the key `LP(T0,T1)`, normalized to lexicographic
//! order on load. Numbers are written in shortest round-trip form, so a
//! value read back is bit-identical to the one written.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use dagwood::amm::{Amm, Balance, Direction, MintedPair, State, Token, TokenId, Transaction, TxKind, UserId};
use dagwood::pricing::PriceOracle;
use dagwood::solver::{GameInput, SolveError};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    pub prices: BTreeMap<String, f64>,
    #[serde(default)]
    pub wallets: BTreeMap<String, BTreeMap<String, f64>>,
    #[serde(default)]
    pub amms: Vec<AmmRecord>,
    #[serde(default)]
    pub txpool: Vec<TxRecord>,
    pub miner: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmmRecord {
    pub t0: String,
    pub t1: String,
    pub r0: f64,
    pub r1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dir {
    /// Send `t0`, receive `t1`.
    L,
    /// Send `t1`, receive `t0`.
    R,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum TxRecord {
    #[serde(rename = "dep")]
    Dep { user: String, v0: f64, t0: String, v1: f64, t1: String },
    #[serde(rename = "swap")]
    Swap { user: String, dir: Dir, v0: f64, t0: String, v1: f64, t1: String },
    #[serde(rename = "rdm")]
    Rdm { user: String, v: f64, t0: String, t1: String },
}

/// Wallet contents keyed by token key.
pub type BalanceRecord = BTreeMap<String, f64>;

/// Normalized `LP(T0,T1)` key, or the input unchanged for atomic symbols.
pub fn normalize_key(key: &str) -> String {
    match MintedPair::parse_key(key) {
        Ok(p) => pair_key(&p),
        Err(_) => key.to_owned(),
    }
}

pub fn pair_key(p: &MintedPair) -> String {
    let n = p.normalized();
    format!("LP({},{})", n.t0(), n.t1())
}

pub fn token_key(t: &Token) -> String {
    match t {
        Token::Atomic(t) => t.to_string(),
        Token::Minted(p) => pair_key(p),
    }
}

pub fn balance_record(b: &Balance) -> BalanceRecord {
    b.iter().map(|(t, v)| (token_key(t), *v)).collect()
}

impl TxRecord {
    pub fn from_tx(tx: &Transaction) -> Self {
        let user = tx.user.to_string();
        match &tx.kind {
            TxKind::Deposit { v0, t0, v1, t1 } => {
                TxRecord::Dep { user, v0: *v0, t0: token_key(t0), v1: *v1, t1: token_key(t1) }
            }
            TxKind::Swap { dir, v0, t0, v1, t1 } => TxRecord::Swap {
                user,
                dir: match dir {
                    Direction::Left => Dir::L,
                    Direction::Right => Dir::R,
                },
                v0: *v0,
                t0: t0.to_string(),
                v1: *v1,
                t1: t1.to_string(),
            },
            TxKind::Redeem { v, pair } => {
                TxRecord::Rdm { user, v: *v, t0: pair.t0().to_string(), t1: pair.t1().to_string() }
            }
        }
    }

    /// Builds the transaction; errors name the offending field.
    pub fn to_tx(&self) -> Result<Transaction, (&'static str, String)> {
        let id = |field: &'static str, s: &str| TokenId::new(s).map_err(|e| (field, e.to_string()));
        let user = |s: &str| UserId::new(s).map_err(|e| ("user", e.to_string()));
        Ok(match self {
            TxRecord::Dep { user: u, v0, t0, v1, t1 } => {
                let key = |field: &'static str, s: &str| Token::parse_key(s).map_err(|e| (field, e.to_string()));
                Transaction {
                    user: user(u)?,
                    kind: TxKind::Deposit { v0: *v0, t0: key("t0", t0)?, v1: *v1, t1: key("t1", t1)? },
                }
            }
            TxRecord::Swap { user: u, dir, v0, t0, v1, t1 } => {
                let dir = match dir {
                    Dir::L => Direction::Left,
                    Dir::R => Direction::Right,
                };
                Transaction::swap(user(u)?, dir, *v0, id("t0", t0)?, *v1, id("t1", t1)?)
            }
            TxRecord::Rdm { user: u, v, t0, t1 } => {
                let pair = MintedPair::new(id("t0", t0)?, id("t1", t1)?).map_err(|e| ("t1", e.to_string()))?;
                Transaction::redeem(user(u)?, *v, pair)
            }
        })
    }

    fn normalize(&mut self) {
        if let TxRecord::Dep { t0, t1, .. } = self {
            *t0 = normalize_key(t0);
            *t1 = normalize_key(t1);
        }
    }

    fn symbols(&self) -> Vec<(&'static str, &str)> {
        match self {
            TxRecord::Dep { t0, t1, .. } | TxRecord::Swap { t0, t1, .. } | TxRecord::Rdm { t0, t1, .. } => {
                vec![("t0", t0.as_str()), ("t1", t1.as_str())]
            }
        }
    }
}

/// Parses a JSON list of transaction records.
pub fn parse_txs(text: &str, path: &Path) -> Result<Vec<Transaction>, CliError> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum TxList {
        Bare(Vec<TxRecord>),
        /// A solve report, whose `txs` field is replayed.
        Report {
            txs: Vec<TxRecord>,
        },
    }
    let records = match serde_json::from_str::<TxList>(text) {
        Ok(TxList::Bare(r) | TxList::Report { txs: r }) => r,
        // untagged errors carry no position; reparse for a precise one
        Err(_) => serde_json::from_str::<Vec<TxRecord>>(text).map_err(|e| CliError::parse(path, e))?,
    };
    records
        .iter()
        .enumerate()
        .map(|(i, r)| r.to_tx().map_err(|(f, m)| CliError::invalid(path, format!("[{i}].{f}"), m)))
        .collect()
}

impl GameFile {
    /// Parses and normalizes minted-token keys.
    pub fn from_json(text: &str, path: &Path) -> Result<Self, CliError> {
        let mut g: GameFile = serde_json::from_str(text).map_err(|e| CliError::parse(path, e))?;
        for (user, wallet) in &mut g.wallets {
            let mut normalized = BTreeMap::new();
            for (key, v) in std::mem::take(wallet) {
                if normalized.insert(normalize_key(&key), v).is_some() {
                    return Err(CliError::invalid(path, format!("wallets.{user}"), format!("`{key}` listed twice")));
                }
            }
            *wallet = normalized;
        }
        for tx in &mut g.txpool {
            tx.normalize();
        }
        Ok(g)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })?;
        Self::from_json(&text, path)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("maps with string keys serialize")
    }

    pub fn from_game(game: &GameInput) -> Self {
        let state = game.state();
        Self {
            prices: game.oracle().iter().map(|(t, p)| (t.to_string(), p)).collect(),
            wallets: state.wallets().map(|(u, b)| (u.to_string(), balance_record(b))).collect(),
            amms: state.amms().iter().map(amm_record).collect(),
            txpool: game.txpool().iter().map(TxRecord::from_tx).collect(),
            miner: game.miner().to_string(),
        }
    }

    /// Initial state and oracle. Checks that every symbol is priced and
    /// that every AMM has outstanding minted tokens.
    pub fn state(&self, path: &Path) -> Result<(State, PriceOracle), CliError> {
        let invalid = |at: String, m: String| CliError::invalid(path, at, m);
        let mut prices = Vec::new();
        for (symbol, p) in &self.prices {
            let t = TokenId::new(symbol).map_err(|e| invalid(format!("prices.{symbol}"), e.to_string()))?;
            prices.push((t, *p));
        }
        let oracle = PriceOracle::new(prices).map_err(|e| invalid("prices".into(), e.to_string()))?;
        let priced: BTreeSet<&str> = self.prices.keys().map(String::as_str).collect();
        let check = |at: String, symbol: &str| {
            if priced.contains(symbol) {
                Ok(())
            } else {
                Err(invalid(at, format!("token `{symbol}` has no price")))
            }
        };

        let mut state = State::new();
        for (user, wallet) in &self.wallets {
            let at = format!("wallets.{user}");
            let id = UserId::new(user).map_err(|e| invalid(at.clone(), e.to_string()))?;
            let mut balance = Balance::new();
            for (key, v) in wallet {
                let token = Token::parse_key(key).map_err(|e| invalid(format!("{at}.{key}"), e.to_string()))?;
                match &token {
                    Token::Atomic(t) => check(format!("{at}.{key}"), t.as_str())?,
                    Token::Minted(p) => {
                        check(format!("{at}.{key}"), p.t0().as_str())?;
                        check(format!("{at}.{key}"), p.t1().as_str())?;
                    }
                }
                if !(v.is_finite() && *v >= 0.0) {
                    return Err(invalid(format!("{at}.{key}"), format!("balance {v} is not a non-negative number")));
                }
                balance = balance.with(token, *v);
            }
            state.insert_wallet(id, balance).map_err(|e| invalid(at, e.to_string()))?;
        }
        for (i, a) in self.amms.iter().enumerate() {
            let at = format!("amms[{i}]");
            check(format!("{at}.t0"), &a.t0)?;
            check(format!("{at}.t1"), &a.t1)?;
            let ids = TokenId::new(&a.t0).and_then(|t0| Ok((t0, TokenId::new(&a.t1)?)));
            let pair =
                ids.and_then(|(t0, t1)| MintedPair::new(t0, t1)).map_err(|e| invalid(at.clone(), e.to_string()))?;
            let amm = Amm::new(pair, a.r0, a.r1).map_err(|e| invalid(at.clone(), e.to_string()))?;
            state.insert_amm(amm).map_err(|e| invalid(at, e.to_string()))?;
        }
        for (i, a) in state.amms().iter().enumerate() {
            if state.minted_supply(a.pair()) <= 0.0 {
                return Err(invalid(format!("amms[{i}]"), format!("no wallet holds {}", pair_key(a.pair()))));
            }
        }
        for (i, tx) in self.txpool.iter().enumerate() {
            for (field, symbol) in tx.symbols() {
                let at = format!("txpool[{i}].{field}");
                match MintedPair::parse_key(symbol) {
                    Ok(p) => {
                        check(at.clone(), p.t0().as_str())?;
                        check(at, p.t1().as_str())?;
                    }
                    Err(_) => check(at, symbol)?,
                }
            }
        }
        Ok((state, oracle))
    }

    pub fn txpool(&self, path: &Path) -> Result<Vec<Transaction>, CliError> {
        self.txpool
            .iter()
            .enumerate()
            .map(|(i, r)| r.to_tx().map_err(|(f, m)| CliError::invalid(path, format!("txpool[{i}].{f}"), m)))
            .collect()
    }

    /// The validated game, optionally with users topped up to the inputs
    /// of their own transactions.
    pub fn game(&self, path: &Path, auto_fund_users: bool) -> Result<GameInput, CliError> {
        let (state, oracle) = self.state(path)?;
        let txpool = self.txpool(path)?;
        let miner = UserId::new(&self.miner).map_err(|e| CliError::invalid(path, "miner", e))?;
        let game = GameInput::new(state, txpool, oracle, miner).map_err(|e| match e {
            SolveError::InvalidGame(m) => CliError::invalid(path, "game", m),
            other => CliError::invalid(path, "game", other),
        })?;
        Ok(if auto_fund_users { game.with_funded_users() } else { game })
    }
}

pub fn amm_record(a: &Amm) -> AmmRecord {
    AmmRecord { t0: a.pair().t0().to_string(), t1: a.pair().t1().to_string(), r0: a.r0(), r1: a.r1() }
}
