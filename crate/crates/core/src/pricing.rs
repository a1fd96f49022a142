//! Token prices, net worth and gain.
//!
//! Atomic tokens are priced by a fixed [`PriceOracle`]. A minted token is
//! worth its pro-rata claim on the AMM reserves:
//!
//! ```text
//! P(t0,t1) = (r0 * P(t0) + r1 * P(t1)) / supply(t0,t1)
//! ```
//!
//! Swaps keep `r0 * r1` and the supply fixed; deposits and redeems scale the
//! reserves and the supply by the same factor. So for a fixed reserve ratio
//! `R` the *projected* price
//!
//! ```text
//! P^R = (sqrt(r0*r1*R) * P(t0) + sqrt(r0*r1/R) * P(t1)) / supply
//! ```
//!
//! is constant along every execution, and its minimum over `R`, reached at
//! `R = P(t1)/P(t0)`, is a floor for the minted price in every reachable
//! state.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::amm::{apply_sequence, MintedPair, Mode, State, StepError, Token, TokenId, Tolerance, Transaction, UserId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PricingError {
    #[error("no AMM for {0}")]
    PairMissing(MintedPair),
    #[error("minted token {0} has zero supply")]
    ZeroSupply(MintedPair),
    #[error("reserve ratio must be positive, got {0}")]
    NonPositiveRatio(f64),
    #[error("unknown user {0}")]
    UnknownUser(UserId),
    #[error("no price for token {0}")]
    UnknownToken(TokenId),
    #[error("price of {token} must be positive and finite, got {price}")]
    NonPositivePrice { token: TokenId, price: f64 },
}

/// Fixed prices of atomic tokens in a reference currency.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PriceOracle {
    prices: BTreeMap<TokenId, f64>,
}

impl PriceOracle {
    pub fn new(prices: impl IntoIterator<Item = (TokenId, f64)>) -> Result<Self, PricingError> {
        let mut map = BTreeMap::new();
        for (token, price) in prices {
            if !(price.is_finite() && price > 0.0) {
                return Err(PricingError::NonPositivePrice { token, price });
            }
            map.insert(token, price);
        }
        Ok(Self { prices: map })
    }

    pub fn price(&self, token: &TokenId) -> Result<f64, PricingError> {
        self.prices.get(token).copied().ok_or_else(|| PricingError::UnknownToken(token.clone()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TokenId, f64)> {
        self.prices.iter().map(|(t, p)| (t, *p))
    }

    pub fn contains(&self, token: &TokenId) -> bool {
        self.prices.contains_key(token)
    }
}

/// Net worth split into atomic and minted holdings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WealthBreakdown {
    pub atomic: f64,
    pub minted: f64,
    pub total: f64,
}

struct PairView {
    r0: f64,
    r1: f64,
    p0: f64,
    p1: f64,
    supply: f64,
}

fn pair_view(state: &State, pair: &MintedPair, oracle: &PriceOracle) -> Result<PairView, PricingError> {
    let amm = state.amm(pair).ok_or_else(|| PricingError::PairMissing(pair.clone()))?;
    let supply = state.minted_supply(pair);
    if !(supply > 0.0) {
        return Err(PricingError::ZeroSupply(pair.clone()));
    }
    let (r0, r1) = amm.reserves();
    Ok(PairView { r0, r1, p0: oracle.price(amm.pair().t0())?, p1: oracle.price(amm.pair().t1())?, supply })
}

/// Price of one unit of the minted token of `pair`.
pub fn minted_price(state: &State, pair: &MintedPair, oracle: &PriceOracle) -> Result<f64, PricingError> {
    let v = pair_view(state, pair, oracle)?;
    Ok((v.r0 * v.p0 + v.r1 * v.p1) / v.supply)
}

/// Minted price the pair would have after a swap moving its reserve ratio
/// `r0/r1` to `ratio`.
pub fn projected_minted_price(
    state: &State,
    pair: &MintedPair,
    oracle: &PriceOracle,
    ratio: f64,
) -> Result<f64, PricingError> {
    if !(ratio.is_finite() && ratio > 0.0) {
        return Err(PricingError::NonPositiveRatio(ratio));
    }
    let v = pair_view(state, pair, oracle)?;
    let k = v.r0 * v.r1;
    Ok(((k * ratio).sqrt() * v.p0 + (k / ratio).sqrt() * v.p1) / v.supply)
}

/// Lowest minted price reachable from `state`: the projected price at
/// `R = P(t1)/P(t0)`, which equals `2 * sqrt(r0*r1*P(t0)*P(t1)) / supply`.
pub fn min_minted_price(state: &State, pair: &MintedPair, oracle: &PriceOracle) -> Result<f64, PricingError> {
    let v = pair_view(state, pair, oracle)?;
    projected_minted_price(state, pair, oracle, v.p1 / v.p0)
}

/// Price of any token in `state`.
pub fn token_price(state: &State, token: &Token, oracle: &PriceOracle) -> Result<f64, PricingError> {
    match token {
        Token::Atomic(t) => oracle.price(t),
        Token::Minted(p) => minted_price(state, p, oracle),
    }
}

pub fn net_worth(state: &State, user: &UserId, oracle: &PriceOracle) -> Result<WealthBreakdown, PricingError> {
    let wallet = state.wallet(user).ok_or_else(|| PricingError::UnknownUser(user.clone()))?;
    let mut atomic = 0.0;
    let mut minted = 0.0;
    for (token, amount) in wallet.iter() {
        if *amount == 0.0 {
            continue;
        }
        match token {
            Token::Atomic(t) => atomic += amount * oracle.price(t)?,
            Token::Minted(p) => minted += amount * minted_price(state, p, oracle)?,
        }
    }
    Ok(WealthBreakdown { atomic, minted, total: atomic + minted })
}

/// Net worth, reading a missing wallet as empty.
pub fn net_worth_or_zero(state: &State, user: &UserId, oracle: &PriceOracle) -> Result<f64, PricingError> {
    match net_worth(state, user, oracle) {
        Ok(w) => Ok(w.total),
        Err(PricingError::UnknownUser(_)) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// Sum of every user's net worth.
pub fn total_wealth(state: &State, oracle: &PriceOracle) -> Result<f64, PricingError> {
    state.users().map(|u| net_worth(state, u, oracle).map(|w| w.total)).sum()
}

/// Gain of a transaction sequence, keeping the reason when it is disabled.
#[derive(Debug, Clone, PartialEq)]
pub enum GainOutcome {
    Enabled { gain: f64, final_state: State },
    Disabled(StepError),
}

impl GainOutcome {
    /// The gain, with a disabled sequence counting as zero.
    pub fn gain(&self) -> f64 {
        match self {
            GainOutcome::Enabled { gain, .. } => *gain,
            GainOutcome::Disabled(_) => 0.0,
        }
    }
}

pub fn gain_audit(
    state: &State,
    user: &UserId,
    txs: &[Transaction],
    oracle: &PriceOracle,
    tol: &Tolerance,
) -> Result<GainOutcome, PricingError> {
    let replay = match apply_sequence(state, txs, Mode::Strict, tol) {
        Ok(r) => r,
        Err(e) => return Ok(GainOutcome::Disabled(e)),
    };
    let final_state = replay.final_state().clone();
    let gain = net_worth_or_zero(&final_state, user, oracle)? - net_worth_or_zero(state, user, oracle)?;
    Ok(GainOutcome::Enabled { gain, final_state })
}

/// Change in `user`'s net worth after `txs`; exactly `0.0` when the
/// sequence is not enabled from `state`. Uses the default tolerance.
pub fn gain(state: &State, user: &UserId, txs: &[Transaction], oracle: &PriceOracle) -> Result<f64, PricingError> {
    gain_audit(state, user, txs, oracle, &Tolerance::default()).map(|g| g.gain())
}

/// Per-user net-worth change between two states of the same execution.
pub fn gains_between(
    before: &State,
    after: &State,
    oracle: &PriceOracle,
) -> Result<BTreeMap<UserId, f64>, PricingError> {
    let mut out = BTreeMap::new();
    for u in before.users().chain(after.users()) {
        if out.contains_key(u) {
            continue;
        }
        let g = net_worth_or_zero(after, u, oracle)? - net_worth_or_zero(before, u, oracle)?;
        out.insert(u.clone(), g);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amm::{Amm, Balance, Direction};
    use approx::assert_relative_eq;

    fn tok(s: &str) -> TokenId {
        TokenId::new(s).unwrap()
    }
    fn user(s: &str) -> UserId {
        UserId::new(s).unwrap()
    }
    fn pair() -> MintedPair {
        MintedPair::new(tok("t0"), tok("t1")).unwrap()
    }
    fn oracle(p0: f64, p1: f64) -> PriceOracle {
        PriceOracle::new([(tok("t0"), p0), (tok("t1"), p1)]).unwrap()
    }
    fn pool(r0: f64, r1: f64, supply: f64) -> State {
        State::new()
            .with_wallet(user("LP"), Balance::new().with(pair(), supply))
            .with_amm(Amm::new(pair(), r0, r1).unwrap())
    }

    #[test]
    fn minted_price_examples() {
        let o = oracle(1000.0, 1000.0);
        assert_eq!(minted_price(&pool(100.0, 100.0, 100.0), &pair(), &o).unwrap(), 2000.0);
        assert_relative_eq!(
            minted_price(&pool(128.8, 77.7, 100.0), &pair(), &o).unwrap(),
            2065.0,
            max_relative = 1e-12
        );
        assert_eq!(minted_price(&pool(1.0, 1.0, 0.0), &pair(), &o), Err(PricingError::ZeroSupply(pair())));
    }

    #[test]
    fn net_worth_splits_atomic_and_minted() {
        let o = oracle(1000.0, 1000.0);
        let s = pool(100.0, 100.0, 90.0)
            .with_wallet(user("A"), Balance::new().with(tok("t0"), 40.0))
            .with_wallet(user("B"), Balance::new().with(pair(), 10.0));
        let a = net_worth(&s, &user("A"), &o).unwrap();
        assert_eq!((a.atomic, a.minted, a.total), (40_000.0, 0.0, 40_000.0));
        let b = net_worth(&s, &user("B"), &o).unwrap();
        assert_eq!((b.atomic, b.minted), (0.0, 20_000.0));
        assert_eq!(net_worth(&s, &user("Z"), &o), Err(PricingError::UnknownUser(user("Z"))));
    }

    #[test]
    fn projected_price_examples() {
        let o = oracle(1000.0, 1000.0);
        let s = pool(128.8, 77.7, 100.0);
        assert_relative_eq!(
            projected_minted_price(&s, &pair(), &o, 128.8 / 77.7).unwrap(),
            minted_price(&s, &pair(), &o).unwrap(),
            max_relative = 1e-12
        );
        let s = pool(100.0, 100.0, 100.0);
        assert_relative_eq!(projected_minted_price(&s, &pair(), &o, 4.0).unwrap(), 2500.0, max_relative = 1e-12);
        assert_eq!(projected_minted_price(&s, &pair(), &o, 0.0), Err(PricingError::NonPositiveRatio(0.0)));
    }

    #[test]
    fn min_price_matches_closed_form_and_grid_sweep() {
        let o = oracle(1000.0, 1000.0);
        assert_relative_eq!(min_minted_price(&pool(100.0, 100.0, 100.0), &pair(), &o).unwrap(), 2000.0);
        let s = pool(128.8, 77.7, 100.0);
        let pmin = min_minted_price(&s, &pair(), &o).unwrap();
        let closed = 2.0 * (128.8f64 * 77.7 * 1e6).sqrt() / 100.0;
        assert_relative_eq!(pmin, closed, max_relative = 1e-12);
        assert_relative_eq!(pmin, 2000.7758, max_relative = 1e-6);
        // sweep log R on a fine grid: nothing undercuts the closed form
        let best = (0..=20_000)
            .map(|i| 10f64.powf(-2.0 + 4.0 * i as f64 / 20_000.0))
            .map(|r| projected_minted_price(&s, &pair(), &o, r).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!(best >= pmin * (1.0 - 1e-12));
        assert_relative_eq!(best, pmin, max_relative = 1e-6);
    }

    #[test]
    fn gain_examples() {
        let o = oracle(1000.0, 1000.0);
        let m = user("M");
        let a = user("A");
        let s = pool(100.0, 100.0, 100.0)
            .with_wallet(m.clone(), Balance::new().with(tok("t1"), 35.0))
            .with_wallet(a.clone(), Balance::new().with(tok("t0"), 40.0));
        assert_eq!(gain(&s, &m, &[], &o).unwrap(), 0.0);

        // the single-swap sandwich built from exact values
        let k: f64 = 10_000.0;
        let p = 40.0 * 35.0;
        let r0 = (((p * p) + 4.0 * p * k).sqrt() - p) / (2.0 * 35.0);
        let r1 = k / r0;
        let front = Transaction::swap(m.clone(), Direction::Right, 100.0 - r0, tok("t0"), r1 - 100.0, tok("t1"));
        let user_swap = Transaction::swap(a.clone(), Direction::Left, 40.0, tok("t0"), 35.0, tok("t1"));
        let back = Transaction::swap(
            m.clone(),
            Direction::Right,
            40.0 - (100.0 - r0),
            tok("t0"),
            35.0 - (r1 - 100.0),
            tok("t1"),
        );
        let txs = [front, user_swap, back];
        let gm = gain(&s, &m, &txs, &o).unwrap();
        let ga = gain(&s, &a, &txs, &o).unwrap();
        assert_relative_eq!(gm, 5000.0, max_relative = 1e-6);
        assert_relative_eq!(ga, -5000.0, max_relative = 1e-6);
    }

    #[test]
    fn disabled_sequence_has_zero_gain_and_audit_says_why() {
        let o = oracle(1000.0, 1000.0);
        let a = user("A");
        let s = pool(100.0, 100.0, 100.0).with_wallet(a.clone(), Balance::new().with(tok("t0"), 40.0));
        let tx = Transaction::swap(a.clone(), Direction::Left, 40.0, tok("t0"), 35.0, tok("t1"));
        assert_eq!(gain(&s, &a, std::slice::from_ref(&tx), &o).unwrap(), 0.0);
        let audit = gain_audit(&s, &a, &[tx], &o, &Tolerance::default()).unwrap();
        assert!(matches!(audit, GainOutcome::Disabled(_)));
    }
}
