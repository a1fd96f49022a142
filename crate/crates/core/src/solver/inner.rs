use crate::amm::{close, resolve_swap, Balance, Direction, State, Token, TokenId, Transaction, TxKind};
use crate::pricing::PriceOracle;

use super::canonical::deposited_balance;
use super::{Layer, LayerKind, SolveError, Solver};

/// Reserves, in stored order, at which `user_swap` receives exactly its
/// minimum output while the constant product is preserved.
pub fn swap_front_run_reserves(state: &State, user_swap: &Transaction) -> Result<(f64, f64), SolveError> {
    let rs = resolve_swap(state, user_swap).ok_or_else(|| missing_pair(user_swap))?;
    let amm = &state.amms()[rs.amm_index];
    let d = rs.dir.index();
    let k = amm.product();
    let p = rs.amounts[0] * rs.amounts[1];
    // 2 v_d k / (sqrt(p^2 + 4pk) + p) avoids cancellation when p << k.
    let disc = (p * p + 4.0 * p * k).sqrt();
    let mut r = [0.0; 2];
    r[d] = 2.0 * rs.amounts[d] * k / (disc + p);
    r[1 - d] = k / r[d];
    Ok((r[0], r[1]))
}

/// Reserves, in stored order, whose ratio matches `user_deposit` while the
/// constant product is preserved.
pub fn deposit_front_run_reserves(state: &State, user_deposit: &Transaction) -> Result<(f64, f64), SolveError> {
    let (v0, v1, _, _) = atomic_deposit(user_deposit)?;
    let amm = deposit_amm(state, user_deposit)?;
    let k = amm.product();
    Ok(((v0 / v1 * k).sqrt(), (v1 / v0 * k).sqrt()))
}

impl Solver {
    /// Miner swap that moves the AMM of `user_swap` to its front-run
    /// reserves; `None` when the AMM is already there.
    pub fn swap_front_run_tx(&self, state: &State, user_swap: &Transaction) -> Result<Option<Transaction>, SolveError> {
        let rs = resolve_swap(state, user_swap).ok_or_else(|| missing_pair(user_swap))?;
        let target = swap_front_run_reserves(state, user_swap)?;
        self.move_to(state, rs.amm_index, target, rs.dir, user_swap)
    }

    /// Front-run plus `user_swap` when the swap loses the user value at
    /// oracle prices; an empty layer otherwise.
    pub fn swap_inner_layer(
        &self,
        state: &State,
        user_swap: &Transaction,
        oracle: &PriceOracle,
    ) -> Result<(Balance, Layer), SolveError> {
        let rs = resolve_swap(state, user_swap).ok_or_else(|| missing_pair(user_swap))?;
        let pair = state.amms()[rs.amm_index].pair();
        let d = rs.dir.index();
        let delta =
            -rs.amounts[d] * oracle.price(pair.token(d))? + rs.amounts[1 - d] * oracle.price(pair.token(1 - d))?;
        let kind = LayerKind::SwapInner { user_tx: user_swap.clone() };
        if delta >= 0.0 {
            return Ok((Balance::new(), Layer { kind, txs: Vec::new() }));
        }
        let front = self.swap_front_run_tx(state, user_swap)?;
        Ok(self.layer_with_front(kind, front, user_swap))
    }

    /// Front-run plus `user_deposit` when the deposit is not value-neutral
    /// at oracle prices; an empty layer otherwise.
    pub fn deposit_inner_layer(
        &self,
        state: &State,
        user_deposit: &Transaction,
        oracle: &PriceOracle,
    ) -> Result<(Balance, Layer), SolveError> {
        let (v0, v1, t0, t1) = atomic_deposit(user_deposit)?;
        let kind = LayerKind::DepositInner { user_tx: user_deposit.clone() };
        if close(v0 * oracle.price(t0)?, v1 * oracle.price(t1)?, self.tol.ratio) {
            return Ok((Balance::new(), Layer { kind, txs: Vec::new() }));
        }
        let amm = deposit_amm(state, user_deposit)?;
        let index = state.amms().iter().position(|a| a.pair() == amm.pair()).expect("AMM exists");
        let target = deposit_front_run_reserves(state, user_deposit)?;
        // Either direction may be needed; `move_to` picks the one that works.
        let front = self.move_to(state, index, target, Direction::Left, user_deposit)?;
        Ok(self.layer_with_front(kind, front, user_deposit))
    }

    /// Redeems are value-neutral for the issuer and can only raise the
    /// minted price later, so they are always dropped.
    pub fn redeem_inner_layer(&self, user_redeem: &Transaction) -> (Balance, Layer) {
        let layer = Layer { kind: LayerKind::RedeemDropped { user_tx: user_redeem.clone() }, txs: Vec::new() };
        (Balance::new(), layer)
    }

    fn layer_with_front(&self, kind: LayerKind, front: Option<Transaction>, user_tx: &Transaction) -> (Balance, Layer) {
        let balance = front.as_ref().map(deposited_balance).unwrap_or_default();
        let mut txs: Vec<Transaction> = front.into_iter().collect();
        txs.push(user_tx.clone());
        (balance, Layer { kind, txs })
    }

    /// Miner swap taking AMM `index` from its reserves to `target`. The
    /// direction `preferred` is tried first.
    fn move_to(
        &self,
        state: &State,
        index: usize,
        target: (f64, f64),
        preferred: Direction,
        user_tx: &Transaction,
    ) -> Result<Option<Transaction>, SolveError> {
        let amm = &state.amms()[index];
        let target = [target.0, target.1];
        let current = [amm.r0(), amm.r1()];
        if close(target[0], current[0], self.tol.num) && close(target[1], current[1], self.tol.num) {
            return Ok(None);
        }
        for dir in [preferred, preferred.flip()] {
            let d = dir.index();
            let sent = target[d] - current[d];
            let received = current[1 - d] - target[1 - d];
            if sent > 0.0 && received > 0.0 {
                let mut v = [0.0; 2];
                v[d] = sent;
                v[1 - d] = received;
                let (t0, t1) = (amm.pair().t0().clone(), amm.pair().t1().clone());
                return Ok(Some(Transaction::swap(self.miner.clone(), dir, v[0], t0, v[1], t1)));
            }
        }
        Err(SolveError::Infeasible {
            tx: user_tx.clone(),
            detail: format!(
                "target reserves ({}, {}) are not reachable by one swap from ({}, {})",
                target[0], target[1], current[0], current[1]
            ),
        })
    }
}

fn missing_pair(tx: &Transaction) -> SolveError {
    match &tx.kind {
        TxKind::Swap { t0, t1, .. } => match crate::amm::MintedPair::new(t0.clone(), t1.clone()) {
            Ok(p) => SolveError::PairMissing(p),
            Err(e) => SolveError::InvalidGame(format!("`{tx}`: {e}")),
        },
        _ => SolveError::InvalidGame(format!("`{tx}` is not a swap")),
    }
}

fn atomic_deposit(tx: &Transaction) -> Result<(f64, f64, &TokenId, &TokenId), SolveError> {
    match &tx.kind {
        TxKind::Deposit { v0, t0: Token::Atomic(t0), v1, t1: Token::Atomic(t1) } => Ok((*v0, *v1, t0, t1)),
        _ => Err(SolveError::InvalidGame(format!("`{tx}` is not a deposit of atomic tokens"))),
    }
}

fn deposit_amm<'a>(state: &'a State, tx: &Transaction) -> Result<&'a crate::amm::Amm, SolveError> {
    let (_, _, t0, t1) = atomic_deposit(tx)?;
    let pair = crate::amm::MintedPair::new(t0.clone(), t1.clone())
        .map_err(|e| SolveError::InvalidGame(format!("`{tx}`: {e}")))?;
    let amm = state.amm(&pair).ok_or_else(|| SolveError::PairMissing(pair.clone()))?;
    if !amm.pair().same_order(&pair) {
        return Err(SolveError::InvalidGame(format!("`{tx}` lists {} in reverse order", amm.pair())));
    }
    Ok(amm)
}
