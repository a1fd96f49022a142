use crate::amm::{resolve_swap, swap_output, Balance, State, Transaction, TxKind};

use super::canonical::deposited_balance;
use super::{DagwoodSolution, GameInput, Layer, LayerKind, SolveError, Solver};

const GRID_POINTS: usize = 200;
const BISECTION_STEPS: usize = 100;

impl Solver {
    /// Same-direction front-run of size `x`, the user swap, then the
    /// price-minimizing back-run. The pool must hold exactly one swap.
    pub fn classic_sandwich(&self, game: &GameInput) -> Result<DagwoodSolution, SolveError> {
        let [user_tx] = game.txpool() else {
            return Err(SolveError::InvalidGame("the classic sandwich needs exactly one transaction".into()));
        };
        if !matches!(user_tx.kind, TxKind::Swap { .. }) {
            return Err(SolveError::InvalidGame(format!("`{user_tx}` is not a swap")));
        }
        let rs = resolve_swap(game.state(), user_tx).expect("validated game");
        let r_in = game.state().amms()[rs.amm_index].reserve(rs.dir.index());

        let feasible = |x: f64| self.bundle(game, user_tx, x).is_ok();
        if !feasible(0.0) {
            return Err(SolveError::NoFeasibleBundle);
        }
        // larger front-runs only worsen the user's rate, so feasibility is
        // monotone in x
        let upper = 3.0 * r_in;
        let grid: Vec<f64> = (0..=GRID_POINTS).map(|i| upper * i as f64 / GRID_POINTS as f64).collect();
        let last = grid.iter().rposition(|&x| feasible(x)).expect("x = 0 is feasible");
        let mut candidates = grid[..=last].to_vec();
        if let Some(&hi) = grid.get(last + 1) {
            let (mut lo, mut hi) = (grid[last], hi);
            for _ in 0..BISECTION_STEPS {
                let mid = 0.5 * (lo + hi);
                if feasible(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            candidates.push(lo);
        }

        let mut best: Option<DagwoodSolution> = None;
        for x in candidates {
            let (layers, naive) = self.bundle(game, user_tx, x)?;
            let sol = self.assemble(game, layers, naive)?;
            if best.as_ref().is_none_or(|b| sol.predicted_gain > b.predicted_gain) {
                best = Some(sol);
            }
        }
        Ok(best.expect("at least one candidate"))
    }

    fn bundle(&self, game: &GameInput, user_tx: &Transaction, x: f64) -> Result<(Vec<Layer>, Balance), SolveError> {
        let oracle = game.oracle();
        let rs = resolve_swap(game.state(), user_tx).expect("validated game");
        let amm = &game.state().amms()[rs.amm_index];
        let d = rs.dir.index();
        let mut txs = Vec::with_capacity(2);
        if x > 0.0 {
            let mut v = [0.0; 2];
            v[d] = x;
            v[1 - d] = swap_output(amm.reserve(d), amm.reserve(1 - d), x);
            let (t0, t1) = (amm.pair().t0().clone(), amm.pair().t1().clone());
            txs.push(Transaction::swap(self.miner.clone(), rs.dir, v[0], t0, v[1], t1));
        }
        txs.push(user_tx.clone());
        let mut naive = Balance::new();
        let mut state: State = game.state().clone();
        for tx in &txs {
            if tx.user == self.miner {
                let need = deposited_balance(tx);
                state.credit_balance(&self.miner, &need);
                naive.merge(&need);
            }
            state = state.step_with(tx, &self.tol)?;
        }
        let inner = Layer { kind: LayerKind::SwapInner { user_tx: user_tx.clone() }, txs };
        let pair = amm.pair().clone();
        let back = self.price_minimization_tx(&state, &pair, oracle)?;
        if let Some(tx) = &back {
            naive.merge(&deposited_balance(tx));
        }
        let last = Layer { kind: LayerKind::FinalSwap { pair }, txs: back.into_iter().collect() };
        Ok((vec![inner, last], naive))
    }
}
