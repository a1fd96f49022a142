use std::collections::{BTreeMap, BTreeSet};

use crate::amm::{
    apply_sequence, resolve_swap, Balance, Mode, State, StepError, StepErrorKind, Token, Transaction, TxKind, UserId,
};
use crate::pricing::{gain_audit, gains_between, GainOutcome, PriceOracle};

use super::{Layer, SolveError, Solver};

/// A validated MEV game: initial state, user transaction pool, prices and
/// the miner's identity.
#[derive(Debug, Clone)]
pub struct GameInput {
    state: State,
    txpool: Vec<Transaction>,
    oracle: PriceOracle,
    miner: UserId,
}

impl GameInput {
    /// Checks that every pool transaction refers to an existing AMM with
    /// positive amounts, that every user in the pool has a wallet, that the
    /// miner starts without one, and that every atomic token is priced.
    pub fn new(state: State, txpool: Vec<Transaction>, oracle: PriceOracle, miner: UserId) -> Result<Self, SolveError> {
        let invalid = |m: String| Err(SolveError::InvalidGame(m));
        if state.wallet(&miner).is_some() {
            return invalid(format!("miner {miner} must start without a wallet"));
        }
        for amm in state.amms() {
            if state.minted_supply(amm.pair()) <= 0.0 {
                return invalid(format!("{} has no minted supply", amm.pair()));
            }
        }
        for token in state.atomic_tokens() {
            if !oracle.contains(&token) {
                return invalid(format!("no price for {token}"));
            }
        }
        for tx in &txpool {
            if tx.user == miner {
                return invalid(format!("`{tx}` is issued by the miner"));
            }
            if state.wallet(&tx.user).is_none() {
                return invalid(format!("`{tx}`: user {} has no wallet", tx.user));
            }
            if tx.inputs().iter().any(|(_, v)| !(v.is_finite() && *v > 0.0)) {
                return invalid(format!("`{tx}` has a non-positive amount"));
            }
            match &tx.kind {
                TxKind::Swap { .. } => {
                    if resolve_swap(&state, tx).is_none() {
                        return invalid(format!("`{tx}` refers to a missing AMM"));
                    }
                }
                TxKind::Deposit { v1, .. } => {
                    if !(v1.is_finite() && *v1 > 0.0) {
                        return invalid(format!("`{tx}` has a non-positive amount"));
                    }
                    // reuses the checks the deposit layer needs
                    super::inner::deposit_front_run_reserves(&state, tx)
                        .map_err(|e| SolveError::InvalidGame(e.to_string()))?;
                }
                TxKind::Redeem { pair, .. } => {
                    if state.amm(pair).is_none() {
                        return invalid(format!("`{tx}` refers to a missing AMM"));
                    }
                }
            }
        }
        Ok(Self { state, txpool, oracle, miner })
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn txpool(&self) -> &[Transaction] {
        &self.txpool
    }

    pub fn oracle(&self) -> &PriceOracle {
        &self.oracle
    }

    pub fn miner(&self) -> &UserId {
        &self.miner
    }

    /// Tops up every pool user's wallet to the total their transactions
    /// send of each token.
    pub fn with_funded_users(mut self) -> Self {
        let mut needed: BTreeMap<(UserId, Token), f64> = BTreeMap::new();
        for tx in &self.txpool {
            for (token, v) in tx.inputs() {
                *needed.entry((tx.user.clone(), token)).or_insert(0.0) += v;
            }
        }
        for ((user, token), v) in needed {
            self.state.top_up(&user, token, v);
        }
        self
    }
}

/// The miner's bundle together with its funding and replay.
#[derive(Debug, Clone, PartialEq)]
pub struct DagwoodSolution {
    pub miner: UserId,
    /// Inner layers in pool order, then one final layer per AMM.
    pub layers: Vec<Layer>,
    /// Concatenation of the layers' transactions.
    pub txs: Vec<Transaction>,
    /// Sum of every amount the miner sends.
    pub miner_balance_naive: Balance,
    /// Smallest starting balance that keeps every miner step funded.
    pub miner_balance_minimal: Balance,
    /// Miner gain of `txs` from the initial state funded with the naive
    /// balance.
    pub predicted_gain: f64,
    /// States before and after every transaction.
    pub trace: Vec<State>,
}

impl DagwoodSolution {
    pub fn initial_state(&self) -> &State {
        &self.trace[0]
    }

    pub fn final_state(&self) -> &State {
        self.trace.last().expect("trace holds the initial state")
    }

    /// Net-worth change of every participant over the bundle.
    pub fn user_gains(&self, oracle: &PriceOracle) -> Result<BTreeMap<UserId, f64>, SolveError> {
        Ok(gains_between(self.initial_state(), self.final_state(), oracle)?)
    }
}

impl Solver {
    pub fn solve(&self, game: &GameInput) -> Result<DagwoodSolution, SolveError> {
        let oracle = game.oracle();
        let mut state = game.state().clone();
        let mut naive = Balance::new();
        let mut layers = Vec::with_capacity(game.txpool().len() + state.amms().len());
        for tx in game.txpool() {
            let (balance, layer) = match tx.kind {
                TxKind::Swap { .. } => self.swap_inner_layer(&state, tx, oracle)?,
                TxKind::Deposit { .. } => self.deposit_inner_layer(&state, tx, oracle)?,
                TxKind::Redeem { .. } => self.redeem_inner_layer(tx),
            };
            state = self.run_layer(state, &balance, &layer)?;
            naive.merge(&balance);
            layers.push(layer);
        }
        let (balance, finals) = self.final_layer(&state, oracle)?;
        state.credit_balance(&self.miner, &balance);
        for layer in &finals {
            state = self.run_layer(state, &Balance::new(), layer)?;
        }
        naive.merge(&balance);
        layers.extend(finals);
        self.assemble(game, layers, naive)
    }

    fn run_layer(&self, mut state: State, funding: &Balance, layer: &Layer) -> Result<State, SolveError> {
        state.credit_balance(&self.miner, funding);
        for tx in &layer.txs {
            state = state.step_with(tx, &self.tol).map_err(|e| self.classify(e))?;
        }
        Ok(state)
    }

    fn classify(&self, e: StepError) -> SolveError {
        if e.kind == StepErrorKind::InsufficientBalance && e.tx.user != self.miner {
            SolveError::UnfundedUser { user: e.tx.user.clone(), tx: e.tx.clone(), source: e }
        } else {
            SolveError::Step(e)
        }
    }

    /// Replays `layers` from the game state with the miner holding `naive`
    /// and fills in the derived fields.
    pub(super) fn assemble(
        &self,
        game: &GameInput,
        layers: Vec<Layer>,
        naive: Balance,
    ) -> Result<DagwoodSolution, SolveError> {
        let txs: Vec<Transaction> = layers.iter().flat_map(|l| l.txs.iter().cloned()).collect();
        let mut initial = game.state().clone();
        initial.credit_balance(&self.miner, &naive);
        let replay = apply_sequence(&initial, &txs, Mode::Strict, &self.tol).map_err(|e| self.classify(e))?;
        let predicted_gain = match gain_audit(&initial, &self.miner, &txs, game.oracle(), &self.tol)? {
            GainOutcome::Enabled { gain, .. } => gain,
            GainOutcome::Disabled(e) => return Err(self.classify(e)),
        };
        let minimal = running_deficit(&replay.trace, &self.miner, &naive);
        Ok(DagwoodSolution {
            miner: self.miner.clone(),
            layers,
            txs,
            miner_balance_naive: naive,
            miner_balance_minimal: minimal,
            predicted_gain,
            trace: replay.trace,
        })
    }
}

/// Largest shortfall of `user`, per token, over a trace that starts with
/// `user` holding `funding`.
fn running_deficit(trace: &[State], user: &UserId, funding: &Balance) -> Balance {
    let empty = Balance::new();
    let tokens: BTreeSet<Token> =
        trace.iter().flat_map(|s| s.wallet(user).unwrap_or(&empty).iter().map(|(t, _)| t.clone())).collect();
    let mut out = Balance::new();
    for token in tokens {
        let worst = trace
            .iter()
            .map(|s| s.wallet(user).map_or(0.0, |w| w.get(&token)) - funding.get(&token))
            .fold(0.0f64, f64::min);
        if worst < 0.0 {
            out.credit(token, -worst);
        }
    }
    out
}
