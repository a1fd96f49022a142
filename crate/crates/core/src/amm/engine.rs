//! The single-step transition relation and its left fold over sequences.
//!
//! Each rule checks its premises in a fixed order and rejects with exactly
//! one [`StepErrorKind`]. Successful steps return a fresh [`State`]; the
//! input state is never modified.

use std::fmt;

use thiserror::Error;

use super::state::{Amm, State};
use super::token::{MintedPair, Token, TokenId};
use super::tx::{Direction, Transaction, TxKind};

/// Numeric tolerances shared by the engine, pricing and the solver.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    /// Relative tolerance for invariant checks, slippage bounds and balance
    /// sufficiency.
    pub num: f64,
    /// Relative tolerance for the deposit ratio premise `r1*v0 = r0*v1`.
    pub ratio: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { num: 1e-9, ratio: 1e-9 }
    }
}

impl Tolerance {
    /// Same value for both tolerances.
    pub fn uniform(eps: f64) -> Self {
        Self { num: eps, ratio: eps }
    }
}

/// Transition rule a transaction is checked against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    /// Deposit creating a new AMM.
    Dep0,
    /// Deposit into an existing AMM.
    Dep,
    Swap,
    Rdm,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::Dep0 => "[Dep0]",
            Rule::Dep => "[Dep]",
            Rule::Swap => "[Swap]",
            Rule::Rdm => "[Rdm]",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StepErrorKind {
    NonPositiveAmount,
    InsufficientBalance,
    SameToken,
    MintedTokenInDeposit,
    /// A deposit names an existing pair in the opposite token order, so
    /// neither deposit rule matches.
    PairAlreadyExists,
    PairMissing,
    RatioMismatch,
    SlippageExceeded,
    ReserveDrained,
}

impl fmt::Display for StepErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A rejected transition.
#[derive(Clone, Debug, PartialEq, Error)]
#[error("{rule} rejected `{tx}`: {kind} ({context})")]
pub struct StepError {
    pub kind: StepErrorKind,
    pub rule: Rule,
    pub tx: Transaction,
    /// Human-readable summary of the relevant part of the state.
    pub context: String,
}

/// How [`apply_sequence`] reacts to a rejected step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mode {
    /// Stop at the first error and return it.
    #[default]
    Strict,
    /// Record the error, freeze the state and mark the remaining
    /// transactions as skipped.
    Audit,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StepOutcome {
    Applied,
    Rejected(StepError),
    Skipped,
}

/// Result of folding a transaction sequence.
#[derive(Clone, Debug)]
pub struct Replay {
    /// Initial state followed by the state after every applied step.
    pub trace: Vec<State>,
    /// One outcome per input transaction.
    pub outcomes: Vec<StepOutcome>,
}

impl Replay {
    pub fn final_state(&self) -> &State {
        self.trace.last().expect("trace holds at least the initial state")
    }

    pub fn is_enabled(&self) -> bool {
        self.outcomes.iter().all(|o| *o == StepOutcome::Applied)
    }

    pub fn first_error(&self) -> Option<&StepError> {
        self.outcomes.iter().find_map(|o| match o {
            StepOutcome::Rejected(e) => Some(e),
            _ => None,
        })
    }
}

fn reject(kind: StepErrorKind, rule: Rule, tx: &Transaction, context: String) -> StepError {
    StepError { kind, rule, tx: tx.clone(), context }
}

fn positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

impl State {
    /// Applies one transaction with the default tolerance.
    pub fn step(&self, tx: &Transaction) -> Result<State, StepError> {
        self.step_with(tx, &Tolerance::default())
    }

    pub fn step_with(&self, tx: &Transaction, tol: &Tolerance) -> Result<State, StepError> {
        match tx.kind {
            TxKind::Deposit { .. } => deposit(self, tx, tol),
            TxKind::Swap { .. } => swap(self, tx, tol),
            TxKind::Redeem { .. } => redeem(self, tx, tol),
        }
    }

    /// Strict fold with the default tolerance; returns the final state.
    pub fn apply_all(&self, txs: &[Transaction]) -> Result<State, StepError> {
        apply_sequence(self, txs, Mode::Strict, &Tolerance::default()).map(|r| r.final_state().clone())
    }
}

/// Deposit: rule `[Dep0]` when no AMM holds the pair, `[Dep]` otherwise.
pub fn deposit(state: &State, tx: &Transaction, tol: &Tolerance) -> Result<State, StepError> {
    let TxKind::Deposit { v0, t0, v1, t1 } = &tx.kind else {
        panic!("deposit called with a {} transaction", tx.type_name());
    };
    let (v0, v1) = (*v0, *v1);
    let pair_guess = match (t0, t1) {
        (Token::Atomic(a), Token::Atomic(b)) => MintedPair::new(a.clone(), b.clone()).ok(),
        _ => None,
    };
    let rule = match &pair_guess {
        Some(p) if state.amm(p).is_some() => Rule::Dep,
        _ => Rule::Dep0,
    };
    if !positive(v0) || !positive(v1) {
        return Err(reject(StepErrorKind::NonPositiveAmount, rule, tx, format!("v0={v0}, v1={v1}")));
    }
    if t0 == t1 {
        return Err(reject(StepErrorKind::SameToken, rule, tx, format!("both tokens are {t0}")));
    }
    let (Token::Atomic(a0), Token::Atomic(a1)) = (t0, t1) else {
        return Err(reject(StepErrorKind::MintedTokenInDeposit, rule, tx, "AMMs only hold atomic tokens".into()));
    };
    let pair = MintedPair::new(a0.clone(), a1.clone()).expect("distinct tokens");
    let existing = state.amm_index(&pair);

    if let Some(i) = existing {
        if !state.amms()[i].pair().same_order(&pair) {
            return Err(reject(
                StepErrorKind::PairAlreadyExists,
                Rule::Dep0,
                tx,
                format!("AMM stored as {}", state.amms()[i].pair()),
            ));
        }
    }

    let mut next = state.clone();
    {
        let wallet = next.wallet_mut(&tx.user);
        let have0 = wallet.get(t0);
        let have1 = wallet.get(t1);
        if !wallet.debit(t0, v0, tol.num) || !wallet.debit(t1, v1, tol.num) {
            return Err(reject(
                StepErrorKind::InsufficientBalance,
                rule,
                tx,
                format!("{} holds {have0}:{t0}, {have1}:{t1}", tx.user),
            ));
        }
    }

    match existing {
        None => {
            let amm = Amm::new(pair.clone(), v0, v1).expect("positive amounts");
            next.push_amm(amm);
            next.credit(&tx.user, Token::Minted(pair), v0);
        }
        Some(i) => {
            let (r0, r1) = state.amms()[i].reserves();
            let lhs = r1 * v0;
            let rhs = r0 * v1;
            if (lhs - rhs).abs() > tol.ratio * lhs.abs().max(rhs.abs()) {
                return Err(reject(
                    StepErrorKind::RatioMismatch,
                    rule,
                    tx,
                    format!("reserves ({r0}, {r1}) have ratio {}, deposit has {}", r0 / r1, v0 / v1),
                ));
            }
            let minted = v0 / r0 * state.minted_supply(&pair);
            next.amm_mut(i).set_reserves(r0 + v0, r1 + v1);
            next.credit(&tx.user, Token::Minted(pair), minted);
        }
    }
    Ok(next)
}

/// A swap resolved against the stored token order of its AMM.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedSwap {
    pub amm_index: usize,
    /// Direction relative to the stored order.
    pub dir: Direction,
    /// Amounts in stored order: `amounts[dir]` is sent, `amounts[1-dir]` is
    /// the minimum received.
    pub amounts: [f64; 2],
}

impl ResolvedSwap {
    pub fn sent(&self) -> f64 {
        self.amounts[self.dir.index()]
    }

    pub fn min_received(&self) -> f64 {
        self.amounts[1 - self.dir.index()]
    }
}

/// Locates the AMM of a swap. When the transaction lists the pair in the
/// opposite order the direction and amounts are flipped so that they refer
/// to the stored order.
pub fn resolve_swap(state: &State, tx: &Transaction) -> Option<ResolvedSwap> {
    let TxKind::Swap { dir, v0, t0, v1, t1 } = &tx.kind else {
        return None;
    };
    let pair = MintedPair::new(t0.clone(), t1.clone()).ok()?;
    let amm_index = state.amm_index(&pair)?;
    if state.amms()[amm_index].pair().same_order(&pair) {
        Some(ResolvedSwap { amm_index, dir: *dir, amounts: [*v0, *v1] })
    } else {
        Some(ResolvedSwap { amm_index, dir: dir.flip(), amounts: [*v1, *v0] })
    }
}

/// Output of a constant-product swap sending `sent` into reserve `r_in`.
pub fn swap_output(r_in: f64, r_out: f64, sent: f64) -> f64 {
    r_out * sent / (r_in + sent)
}

pub fn swap(state: &State, tx: &Transaction, tol: &Tolerance) -> Result<State, StepError> {
    let TxKind::Swap { v0, t0, v1, t1, .. } = &tx.kind else {
        panic!("swap called with a {} transaction", tx.type_name());
    };
    if !positive(*v0) || !positive(*v1) {
        return Err(reject(StepErrorKind::NonPositiveAmount, Rule::Swap, tx, format!("v0={v0}, v1={v1}")));
    }
    let Some(rs) = resolve_swap(state, tx) else {
        return Err(reject(StepErrorKind::PairMissing, Rule::Swap, tx, format!("no AMM for ({t0}, {t1})")));
    };
    let amm = &state.amms()[rs.amm_index];
    let d = rs.dir.index();
    let t_in: Token = amm.pair().token(d).clone().into();
    let t_out: Token = amm.pair().token(1 - d).clone().into();
    let (r_in, r_out) = (amm.reserve(d), amm.reserve(1 - d));
    let sent = rs.sent();

    let mut next = state.clone();
    let have = next.wallet(&tx.user).map(|b| b.get(&t_in)).unwrap_or(0.0);
    if !next.wallet_mut(&tx.user).debit(&t_in, sent, tol.num) {
        return Err(reject(
            StepErrorKind::InsufficientBalance,
            Rule::Swap,
            tx,
            format!("{} holds {have}:{t_in}", tx.user),
        ));
    }
    let out = swap_output(r_in, r_out, sent);
    if !(out < r_out) || r_out - out <= 0.0 {
        return Err(reject(
            StepErrorKind::ReserveDrained,
            Rule::Swap,
            tx,
            format!("output {out} would exhaust reserve {r_out}:{t_out}"),
        ));
    }
    let min = rs.min_received();
    if out < min * (1.0 - tol.num) {
        return Err(reject(
            StepErrorKind::SlippageExceeded,
            Rule::Swap,
            tx,
            format!("reserves {amm} pay {out}:{t_out}, minimum is {min}"),
        ));
    }
    let mut reserves = [0.0; 2];
    reserves[d] = r_in + sent;
    reserves[1 - d] = r_out - out;
    next.amm_mut(rs.amm_index).set_reserves(reserves[0], reserves[1]);
    next.credit(&tx.user, t_out, out);
    Ok(next)
}

pub fn redeem(state: &State, tx: &Transaction, tol: &Tolerance) -> Result<State, StepError> {
    let TxKind::Redeem { v, pair } = &tx.kind else {
        panic!("redeem called with a {} transaction", tx.type_name());
    };
    let v = *v;
    if !positive(v) {
        return Err(reject(StepErrorKind::NonPositiveAmount, Rule::Rdm, tx, format!("v={v}")));
    }
    let Some(i) = state.amm_index(pair) else {
        return Err(reject(StepErrorKind::PairMissing, Rule::Rdm, tx, format!("no AMM for {pair}")));
    };
    let amm = &state.amms()[i];
    let minted = Token::Minted(amm.pair().clone());
    let supply = state.minted_supply(pair);
    let have = state.wallet(&tx.user).map(|b| b.get(&minted)).unwrap_or(0.0);

    let mut next = state.clone();
    if !next.wallet_mut(&tx.user).debit(&minted, v, tol.num) {
        return Err(reject(
            StepErrorKind::InsufficientBalance,
            Rule::Rdm,
            tx,
            format!("{} holds {have}:{minted}", tx.user),
        ));
    }
    if v >= supply {
        return Err(reject(
            StepErrorKind::ReserveDrained,
            Rule::Rdm,
            tx,
            format!("redeeming {v} of total supply {supply} would empty {amm}"),
        ));
    }
    let (r0, r1) = amm.reserves();
    let out0 = v * r0 / supply;
    let out1 = v * r1 / supply;
    let (t0, t1): (TokenId, TokenId) = (amm.pair().t0().clone(), amm.pair().t1().clone());
    next.amm_mut(i).set_reserves(r0 - out0, r1 - out1);
    next.credit(&tx.user, t0.into(), out0);
    next.credit(&tx.user, t1.into(), out1);
    Ok(next)
}

/// Folds the step relation over `txs` from `state`.
///
/// In [`Mode::Strict`] the first rejection is returned as `Err`. In
/// [`Mode::Audit`] this never fails: the rejection is recorded in the
/// outcomes, later transactions are [`StepOutcome::Skipped`] and the trace
/// ends at the last good state.
pub fn apply_sequence(state: &State, txs: &[Transaction], mode: Mode, tol: &Tolerance) -> Result<Replay, StepError> {
    let mut trace = Vec::with_capacity(txs.len() + 1);
    trace.push(state.clone());
    let mut outcomes = Vec::with_capacity(txs.len());
    let mut frozen = false;
    for tx in txs {
        if frozen {
            outcomes.push(StepOutcome::Skipped);
            continue;
        }
        let current = trace.last().expect("non-empty trace");
        match current.step_with(tx, tol) {
            Ok(next) => {
                trace.push(next);
                outcomes.push(StepOutcome::Applied);
            }
            Err(e) => match mode {
                Mode::Strict => return Err(e),
                Mode::Audit => {
                    outcomes.push(StepOutcome::Rejected(e));
                    frozen = true;
                }
            },
        }
    }
    Ok(Replay { trace, outcomes })
}
