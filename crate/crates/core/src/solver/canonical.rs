use crate::amm::{Balance, Direction, MintedPair, State, Token, Transaction};
use crate::pricing::PriceOracle;

use super::{Layer, LayerKind, SolveError, Solver, CANONICAL_DEAD_BAND};

/// Swap amounts that move `pair` to the reserve ratio `P(t1)/P(t0)` with a
/// swap in direction `dir` (stored order).
///
/// Returns `(deposited, received)`, that is `(x_d, x_{1-d})`. A non-positive
/// `deposited` means the price cannot be lowered by swapping that way.
pub fn canonical_swap_values(
    state: &State,
    pair: &MintedPair,
    oracle: &PriceOracle,
    dir: Direction,
) -> Result<(f64, f64), SolveError> {
    let amm = state.amm(pair).ok_or_else(|| SolveError::PairMissing(pair.clone()))?;
    let d = dir.index();
    let p_in = oracle.price(amm.pair().token(d))?;
    let p_out = oracle.price(amm.pair().token(1 - d))?;
    let (r_in, r_out) = (amm.reserve(d), amm.reserve(1 - d));
    let deposited = (p_out / p_in * amm.product()).sqrt() - r_in;
    let received = r_out * deposited / (r_in + deposited);
    Ok((deposited, received))
}

impl Solver {
    /// The miner swap that minimizes the minted price of `pair`, or `None`
    /// when the pair already sits at its minimum.
    pub fn price_minimization_tx(
        &self,
        state: &State,
        pair: &MintedPair,
        oracle: &PriceOracle,
    ) -> Result<Option<Transaction>, SolveError> {
        let amm = state.amm(pair).ok_or_else(|| SolveError::PairMissing(pair.clone()))?;
        for dir in [Direction::Left, Direction::Right] {
            let (deposited, received) = canonical_swap_values(state, pair, oracle, dir)?;
            if deposited > CANONICAL_DEAD_BAND && received > 0.0 {
                let mut v = [0.0; 2];
                v[dir.index()] = deposited;
                v[1 - dir.index()] = received;
                let (t0, t1) = (amm.pair().t0().clone(), amm.pair().t1().clone());
                return Ok(Some(Transaction::swap(self.miner.clone(), dir, v[0], t0, v[1], t1)));
            }
        }
        Ok(None)
    }

    /// One `FinalSwap` layer per AMM, in state order, and the miner balance
    /// the swaps consume.
    pub fn final_layer(&self, state: &State, oracle: &PriceOracle) -> Result<(Balance, Vec<Layer>), SolveError> {
        let mut balance = Balance::new();
        let mut layers = Vec::with_capacity(state.amms().len());
        for amm in state.amms() {
            let pair = amm.pair().clone();
            let tx = self.price_minimization_tx(state, &pair, oracle)?;
            if let Some(tx) = &tx {
                for (token, amount) in tx.inputs() {
                    balance.credit(token, amount);
                }
            }
            layers.push(Layer { kind: LayerKind::FinalSwap { pair }, txs: tx.into_iter().collect() });
        }
        Ok((balance, layers))
    }
}

pub(super) fn deposited_balance(tx: &Transaction) -> Balance {
    let mut b = Balance::new();
    for (token, amount) in tx.inputs() {
        debug_assert!(matches!(token, Token::Atomic(_)));
        b.credit(token, amount);
    }
    b
}
