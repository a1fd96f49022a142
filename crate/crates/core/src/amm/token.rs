use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

/// Rejected identifier.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdError {
    #[error("identifier must not be empty")]
    Empty,
    #[error("identifier `{0}` contains a reserved character (one of `(`, `)`, `,` or whitespace)")]
    ReservedCharacter(String),
    #[error("a minted pair needs two distinct tokens, got `{0}` twice")]
    SameToken(String),
    #[error("malformed minted token key `{0}`, expected `LP(T0,T1)`")]
    MalformedPairKey(String),
}

fn check_symbol(s: &str) -> Result<(), IdError> {
    if s.is_empty() {
        return Err(IdError::Empty);
    }
    if s.chars().any(|c| c == '(' || c == ')' || c == ',' || c.is_whitespace()) {
        return Err(IdError::ReservedCharacter(s.to_owned()));
    }
    Ok(())
}

/// Symbol of an atomic token such as `ETH` or `t0`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TokenId(Arc<str>);

impl TokenId {
    pub fn new(symbol: &str) -> Result<Self, IdError> {
        check_symbol(symbol)?;
        Ok(Self(Arc::from(symbol)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl FromStr for TokenId {
    type Err = IdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(s)
    }
}

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

/// Wallet owner.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UserId(Arc<str>);

impl UserId {
    pub fn new(name: &str) -> Result<Self, IdError> {
        check_symbol(name)?;
        Ok(Self(Arc::from(name)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl FromStr for UserId {
    type Err = IdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(s)
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

/// The minted (liquidity) token of an AMM, identified by two distinct atomic
/// tokens.
///
/// Identity is unordered: `LP(a,b)` and `LP(b,a)` compare, hash and sort as
/// the same pair. The order given at construction is kept for rendering and
/// is the order an AMM stores its reserves in.
#[derive(Clone)]
pub struct MintedPair {
    t0: TokenId,
    t1: TokenId,
}

impl MintedPair {
    pub fn new(t0: TokenId, t1: TokenId) -> Result<Self, IdError> {
        if t0 == t1 {
            return Err(IdError::SameToken(t0.to_string()));
        }
        Ok(Self { t0, t1 })
    }

    pub fn t0(&self) -> &TokenId {
        &self.t0
    }

    pub fn t1(&self) -> &TokenId {
        &self.t1
    }

    /// Token at position `i` (0 or 1) in stored order.
    pub fn token(&self, i: usize) -> &TokenId {
        match i {
            0 => &self.t0,
            1 => &self.t1,
            _ => panic!("pair index out of range: {i}"),
        }
    }

    /// Position of `token` in stored order.
    pub fn index_of(&self, token: &TokenId) -> Option<usize> {
        if *token == self.t0 {
            Some(0)
        } else if *token == self.t1 {
            Some(1)
        } else {
            None
        }
    }

    /// True when both pairs list their tokens in the same order.
    pub fn same_order(&self, other: &MintedPair) -> bool {
        self.t0 == other.t0 && self.t1 == other.t1
    }

    /// The same pair with its tokens in lexicographic order.
    pub fn normalized(&self) -> MintedPair {
        let (a, b) = self.sorted();
        MintedPair { t0: a.clone(), t1: b.clone() }
    }

    fn sorted(&self) -> (&TokenId, &TokenId) {
        if self.t0 <= self.t1 {
            (&self.t0, &self.t1)
        } else {
            (&self.t1, &self.t0)
        }
    }

    /// Parses the `LP(T0,T1)` key syntax, keeping the written order.
    pub fn parse_key(key: &str) -> Result<Self, IdError> {
        let inner = key
            .strip_prefix("LP(")
            .and_then(|s| s.strip_suffix(')'))
            .ok_or_else(|| IdError::MalformedPairKey(key.to_owned()))?;
        let (a, b) = inner.split_once(',').ok_or_else(|| IdError::MalformedPairKey(key.to_owned()))?;
        Self::new(TokenId::new(a.trim())?, TokenId::new(b.trim())?)
    }
}

impl PartialEq for MintedPair {
    fn eq(&self, other: &Self) -> bool {
        self.sorted() == other.sorted()
    }
}

impl Eq for MintedPair {}

impl Hash for MintedPair {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.sorted().hash(state);
    }
}

impl PartialOrd for MintedPair {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MintedPair {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sorted().cmp(&other.sorted())
    }
}

impl fmt::Display for MintedPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LP({},{})", self.t0, self.t1)
    }
}

impl fmt::Debug for MintedPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Anything a wallet can hold.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Token {
    Atomic(TokenId),
    Minted(MintedPair),
}

impl Token {
    pub fn as_atomic(&self) -> Option<&TokenId> {
        match self {
            Token::Atomic(t) => Some(t),
            Token::Minted(_) => None,
        }
    }

    pub fn is_minted(&self) -> bool {
        matches!(self, Token::Minted(_))
    }

    /// Parses either an atomic symbol or an `LP(T0,T1)` key.
    pub fn parse_key(key: &str) -> Result<Self, IdError> {
        if key.starts_with("LP(") {
            MintedPair::parse_key(key).map(Token::Minted)
        } else {
            TokenId::new(key).map(Token::Atomic)
        }
    }
}

impl From<TokenId> for Token {
    fn from(t: TokenId) -> Self {
        Token::Atomic(t)
    }
}

impl From<MintedPair> for Token {
    fn from(p: MintedPair) -> Self {
        Token::Minted(p)
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Atomic(t) => t.fmt(f),
            Token::Minted(p) => p.fmt(f),
        }
    }
}

impl fmt::Debug for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
