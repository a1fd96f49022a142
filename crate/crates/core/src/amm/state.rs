use std::collections::btree_map;
use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use super::token::{MintedPair, Token, TokenId, UserId};

/// Errors raised while assembling a state by hand.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateError {
    #[error("user {0} already has a wallet")]
    DuplicateUser(UserId),
    #[error("an AMM for {0} already exists")]
    PairAlreadyExists(MintedPair),
    #[error("AMM {pair} must hold positive reserves, got ({r0}, {r1})")]
    NonPositiveReserve { pair: MintedPair, r0: f64, r1: f64 },
    #[error("amount {amount} of {token} is negative or not finite")]
    InvalidAmount { token: Token, amount: f64 },
}

/// Token holdings of one wallet. Absent tokens count as zero.
#[derive(Clone, Default, PartialEq)]
pub struct Balance {
    amounts: BTreeMap<Token, f64>,
}

impl Balance {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builder-style insert.
    ///
    /// # Panics
    ///
    /// If `amount` is negative or not finite.
    pub fn with(mut self, token: impl Into<Token>, amount: f64) -> Self {
        let token = token.into();
        assert!(amount.is_finite() && amount >= 0.0, "invalid amount {amount} for {token}");
        self.amounts.insert(token, amount);
        self
    }

    pub fn try_from_amounts(amounts: impl IntoIterator<Item = (Token, f64)>) -> Result<Self, StateError> {
        let mut out = Balance::new();
        for (token, amount) in amounts {
            if !(amount.is_finite() && amount >= 0.0) {
                return Err(StateError::InvalidAmount { token, amount });
            }
            *out.amounts.entry(token).or_insert(0.0) += amount;
        }
        Ok(out)
    }

    pub fn get(&self, token: &Token) -> f64 {
        self.amounts.get(token).copied().unwrap_or(0.0)
    }

    pub fn atomic(&self, token: &TokenId) -> f64 {
        self.get(&Token::Atomic(token.clone()))
    }

    pub fn iter(&self) -> btree_map::Iter<'_, Token, f64> {
        self.amounts.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.amounts.values().all(|v| *v == 0.0)
    }

    pub fn has_minted(&self) -> bool {
        self.amounts.iter().any(|(t, v)| t.is_minted() && *v > 0.0)
    }

    /// Adds `amount` (must be non-negative).
    pub fn credit(&mut self, token: Token, amount: f64) {
        debug_assert!(amount >= 0.0);
        *self.amounts.entry(token).or_insert(0.0) += amount;
    }

    /// Adds every entry of `other`.
    pub fn merge(&mut self, other: &Balance) {
        for (t, v) in other.iter() {
            self.credit(t.clone(), *v);
        }
    }

    /// Sets the holding of `token` to at least `amount`.
    pub fn top_up(&mut self, token: Token, amount: f64) {
        let e = self.amounts.entry(token).or_insert(0.0);
        if *e < amount {
            *e = amount;
        }
    }

    /// Removes `amount`, accepting a shortfall of at most `eps` relative.
    /// Returns `false` (and leaves the balance untouched) when the holding
    /// is insufficient.
    pub(crate) fn debit(&mut self, token: &Token, amount: f64, eps: f64) -> bool {
        let have = self.get(token);
        if have < amount - eps * amount.max(have) {
            return false;
        }
        self.amounts.insert(token.clone(), (have - amount).max(0.0));
        true
    }

    /// Equality with absent keys read as zero; amounts are compared with
    /// tolerance `eps`, relative above magnitude 1 and absolute below.
    pub fn approx_eq(&self, other: &Balance, eps: f64) -> bool {
        let keys = self.amounts.keys().chain(other.amounts.keys());
        keys.into_iter().all(|k| {
            let (a, b) = (self.get(k), other.get(k));
            (a - b).abs() <= eps * a.abs().max(b.abs()).max(1.0)
        })
    }
}

impl fmt::Debug for Balance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.amounts.iter()).finish()
    }
}

impl fmt::Display for Balance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = f.precision().unwrap_or(4);
        f.write_str("{")?;
        for (i, (t, v)) in self.amounts.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v:.p$}:{t}")?;
        }
        f.write_str("}")
    }
}

/// A constant-product AMM holding reserves of the two tokens of `pair`, in
/// the pair's stored order.
#[derive(Clone, PartialEq)]
pub struct Amm {
    pair: MintedPair,
    reserves: [f64; 2],
}

impl Amm {
    pub fn new(pair: MintedPair, r0: f64, r1: f64) -> Result<Self, StateError> {
        if !(r0.is_finite() && r1.is_finite() && r0 > 0.0 && r1 > 0.0) {
            return Err(StateError::NonPositiveReserve { pair, r0, r1 });
        }
        Ok(Self { pair, reserves: [r0, r1] })
    }

    pub fn pair(&self) -> &MintedPair {
        &self.pair
    }

    pub fn reserve(&self, i: usize) -> f64 {
        self.reserves[i]
    }

    pub fn r0(&self) -> f64 {
        self.reserves[0]
    }

    pub fn r1(&self) -> f64 {
        self.reserves[1]
    }

    pub fn reserves(&self) -> (f64, f64) {
        (self.reserves[0], self.reserves[1])
    }

    /// `r0 / r1`.
    pub fn ratio(&self) -> f64 {
        self.reserves[0] / self.reserves[1]
    }

    pub fn product(&self) -> f64 {
        self.reserves[0] * self.reserves[1]
    }

    pub(crate) fn set_reserves(&mut self, r0: f64, r1: f64) {
        self.reserves = [r0, r1];
    }
}

impl fmt::Debug for Amm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}:{}, {}:{})", self.reserves[0], self.pair.t0(), self.reserves[1], self.pair.t1())
    }
}

impl fmt::Display for Amm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = f.precision().unwrap_or(4);
        write!(f, "({:.p$}:{}, {:.p$}:{})", self.reserves[0], self.pair.t0(), self.reserves[1], self.pair.t1())
    }
}

/// Wallets plus AMMs.
///
/// User ids are distinct, and at most one AMM exists per unordered token
/// pair. AMMs only hold atomic tokens, so the supply of a minted token is the
/// sum of its wallet holdings.
///
/// `PartialEq` is exact (bitwise on amounts); use [`State::approx_eq`] for
/// equivalence up to a tolerance.
#[derive(Clone, Default, PartialEq)]
pub struct State {
    wallets: BTreeMap<UserId, Balance>,
    amms: Vec<Amm>,
}

impl State {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert_wallet(&mut self, user: UserId, balance: Balance) -> Result<(), StateError> {
        if self.wallets.contains_key(&user) {
            return Err(StateError::DuplicateUser(user));
        }
        self.wallets.insert(user, balance);
        Ok(())
    }

    pub fn insert_amm(&mut self, amm: Amm) -> Result<(), StateError> {
        if self.amm(amm.pair()).is_some() {
            return Err(StateError::PairAlreadyExists(amm.pair().clone()));
        }
        self.amms.push(amm);
        Ok(())
    }

    /// Builder-style [`State::insert_wallet`].
    ///
    /// # Panics
    ///
    /// If the user already has a wallet.
    pub fn with_wallet(mut self, user: UserId, balance: Balance) -> Self {
        self.insert_wallet(user, balance).expect("duplicate wallet");
        self
    }

    /// Builder-style [`State::insert_amm`].
    ///
    /// # Panics
    ///
    /// If the pair already exists.
    pub fn with_amm(mut self, amm: Amm) -> Self {
        self.insert_amm(amm).expect("duplicate AMM");
        self
    }

    pub fn wallet(&self, user: &UserId) -> Option<&Balance> {
        self.wallets.get(user)
    }

    pub fn wallets(&self) -> btree_map::Iter<'_, UserId, Balance> {
        self.wallets.iter()
    }

    pub fn users(&self) -> impl Iterator<Item = &UserId> {
        self.wallets.keys()
    }

    pub fn amms(&self) -> &[Amm] {
        &self.amms
    }

    /// Looks up the AMM for `pair` regardless of token order.
    pub fn amm(&self, pair: &MintedPair) -> Option<&Amm> {
        self.amms.iter().find(|a| a.pair() == pair)
    }

    pub(crate) fn amm_index(&self, pair: &MintedPair) -> Option<usize> {
        self.amms.iter().position(|a| a.pair() == pair)
    }

    pub(crate) fn amm_mut(&mut self, index: usize) -> &mut Amm {
        &mut self.amms[index]
    }

    pub(crate) fn push_amm(&mut self, amm: Amm) {
        self.amms.push(amm);
    }

    pub(crate) fn wallet_mut(&mut self, user: &UserId) -> &mut Balance {
        self.wallets.entry(user.clone()).or_default()
    }

    /// Credits `amount` of `token` to `user`, creating the wallet if needed.
    pub fn credit(&mut self, user: &UserId, token: Token, amount: f64) {
        self.wallet_mut(user).credit(token, amount);
    }

    /// Credits a whole balance to `user`, creating the wallet if needed.
    pub fn credit_balance(&mut self, user: &UserId, balance: &Balance) {
        self.wallet_mut(user).merge(balance);
    }

    /// Raises `user`'s holding of `token` to at least `amount`.
    pub fn top_up(&mut self, user: &UserId, token: Token, amount: f64) {
        self.wallet_mut(user).top_up(token, amount);
    }

    /// Total amount of `token`: wallet holdings plus, for atomic tokens, AMM
    /// reserves.
    pub fn supply(&self, token: &Token) -> f64 {
        let in_wallets: f64 = self.wallets.values().map(|b| b.get(token)).sum();
        let in_amms: f64 = match token {
            Token::Atomic(t) => self.amms.iter().filter_map(|a| a.pair().index_of(t).map(|i| a.reserve(i))).sum(),
            Token::Minted(_) => 0.0,
        };
        in_wallets + in_amms
    }

    pub fn minted_supply(&self, pair: &MintedPair) -> f64 {
        self.supply(&Token::Minted(pair.clone()))
    }

    /// Every atomic token mentioned by a wallet or an AMM.
    pub fn atomic_tokens(&self) -> Vec<TokenId> {
        let mut out: Vec<TokenId> = self
            .wallets
            .values()
            .flat_map(|b| b.iter().filter_map(|(t, _)| t.as_atomic().cloned()))
            .chain(self.amms.iter().flat_map(|a| [a.pair().t0().clone(), a.pair().t1().clone()]))
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// State equivalence: same users and pairs, amounts equal within `eps`
    /// relative (absolute below magnitude 1).
    pub fn approx_eq(&self, other: &State, eps: f64) -> bool {
        if self.amms.len() != other.amms.len() {
            return false;
        }
        let amms_match = self.amms.iter().all(|a| {
            other.amm(a.pair()).is_some_and(|b| {
                let (b0, b1) = if a.pair().same_order(b.pair()) { (b.r0(), b.r1()) } else { (b.r1(), b.r0()) };
                close(a.r0(), b0, eps) && close(a.r1(), b1, eps)
            })
        });
        if !amms_match {
            return false;
        }
        let empty = Balance::new();
        let users = self.wallets.keys().chain(other.wallets.keys());
        users.into_iter().all(|u| {
            let a = self.wallets.get(u).unwrap_or(&empty);
            let b = other.wallets.get(u).unwrap_or(&empty);
            a.approx_eq(b, eps)
        })
    }

    /// True when no wallet holds a negative or non-finite amount and every
    /// reserve is positive.
    pub fn is_well_formed(&self) -> bool {
        self.wallets.values().all(|b| b.iter().all(|(_, v)| v.is_finite() && *v >= 0.0))
            && self.amms.iter().all(|a| a.r0() > 0.0 && a.r1() > 0.0)
    }
}

pub(crate) fn close(a: f64, b: f64, eps: f64) -> bool {
    (a - b).abs() <= eps * a.abs().max(b.abs()).max(1.0)
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("State").field("wallets", &self.wallets).field("amms", &self.amms).finish()
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = f.precision().unwrap_or(4);
        let mut first = true;
        for (u, b) in &self.wallets {
            if !first {
                f.write_str(" | ")?;
            }
            first = false;
            write!(f, "{u}[{b:.p$}]")?;
        }
        for a in &self.amms {
            if !first {
                f.write_str(" | ")?;
            }
            first = false;
            write!(f, "{a:.p$}")?;
        }
        Ok(())
    }
}
