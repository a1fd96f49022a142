use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::amm::{resolve_swap, Direction, State, Token, Tolerance, Transaction, TxKind, UserId};
use crate::pricing::{net_worth_or_zero, PriceOracle};
use crate::solver::GameInput;

use super::{OracleError, SearchConfig};

/// Miner wallets hold this multiple of each token's supply, so funding
/// never limits a candidate.
const FUNDING_MULTIPLE: f64 = 1e3;
const MAX_SWEEPS: usize = 8;
const PROBE_STEPS: [f64; 8] = [1e-3, -1e-3, 5e-4, -5e-4, 2e-4, -2e-4, 1e-4, -1e-4];

/// Target log reserve ratio `ln(r0/r1)` of one miner swap; `None` skips it.
type Choice = Option<f64>;

pub(super) struct Best {
    pub gain: f64,
    pub sequence: Vec<Transaction>,
    pub evaluations: u64,
}

/// One searchable miner swap: a gap index and an AMM.
struct Dim {
    slot: usize,
    amm: usize,
    lo: f64,
    hi: f64,
    /// Ratio matching the user deposit that follows the gap, if any.
    snap: Option<f64>,
}

pub(super) struct Problem<'a> {
    txpool: &'a [Transaction],
    oracle: &'a PriceOracle,
    miner: UserId,
    funded: State,
    base_worth: f64,
    tol: Tolerance,
    per_slot: usize,
}

impl<'a> Problem<'a> {
    pub fn new(game: &'a GameInput, cfg: &SearchConfig) -> Result<Self, OracleError> {
        let mut funded = game.state().clone();
        let miner = game.miner().clone();
        for token in game.state().atomic_tokens() {
            let amount = FUNDING_MULTIPLE * funded.supply(&Token::Atomic(token.clone()));
            funded.credit(&miner, Token::Atomic(token), amount);
        }
        let base_worth = net_worth_or_zero(&funded, &miner, game.oracle())?;
        Ok(Self {
            txpool: game.txpool(),
            oracle: game.oracle(),
            miner,
            funded,
            base_worth,
            tol: Tolerance::default(),
            per_slot: cfg.max_miner_swaps.min(game.state().amms().len()),
        })
    }

    /// Best bundle over all orderings, reduced deterministically.
    pub fn search(&self, cfg: &SearchConfig) -> Best {
        let orderings = orderings(self.txpool.len());
        let results: Vec<(f64, Vec<Choice>, u64)> =
            orderings.par_iter().map(|ord| self.search_ordering(ord, cfg)).collect();
        let mut best_index = 0;
        for (i, r) in results.iter().enumerate() {
            // strict improvement keeps the earliest (shortest, then
            // lexicographically smallest) ordering on ties
            if r.0 > results[best_index].0 {
                best_index = i;
            }
        }
        let (gain, choices, _) = &results[best_index];
        let dims = self.dims(&orderings[best_index], cfg);
        let (_, sequence) = self.run(&orderings[best_index], &dims, choices, true);
        Best { gain: *gain, sequence, evaluations: results.iter().map(|r| r.2).sum() }
    }

    fn search_ordering(&self, ordering: &[usize], cfg: &SearchConfig) -> (f64, Vec<Choice>, u64) {
        let dims = self.dims(ordering, cfg);
        let mut evals = 0u64;
        let mut score = |c: &[Choice]| {
            evals += 1;
            self.run(ordering, &dims, c, false).0
        };

        // coarse joint grid
        let levels = coarse_levels(dims.len(), cfg);
        let axes: Vec<Vec<Choice>> = dims.iter().map(|d| candidates(d, d.lo, d.hi, levels)).collect();
        let mut best_choices: Vec<Choice> = vec![None; dims.len()];
        let mut best_gain = score(&best_choices);
        let mut counter = vec![0usize; dims.len()];
        'grid: loop {
            let c: Vec<Choice> = counter.iter().zip(&axes).map(|(&i, a)| a[i]).collect();
            let g = score(&c);
            if g > best_gain {
                best_gain = g;
                best_choices = c;
            }
            for (k, a) in axes.iter().enumerate() {
                counter[k] += 1;
                if counter[k] < a.len() {
                    continue 'grid;
                }
                counter[k] = 0;
            }
            break;
        }

        // coordinate sweeps, then sweeps over windows shrinking 10x per round
        let points = cfg.grid_points_per_dimension;
        for round in 0..=cfg.refinement_rounds {
            let shrink = 10f64.powi(round as i32);
            for _ in 0..MAX_SWEEPS {
                let mut improved = false;
                for (k, dim) in dims.iter().enumerate() {
                    let half = 0.5 * (dim.hi - dim.lo) / shrink;
                    // no swap is a swap to the ratio the AMM already has
                    let center = match best_choices[k] {
                        Some(x) => Some(x),
                        None => self.ratio_before(ordering, &dims, &best_choices, k),
                    };
                    let (lo, hi) = match center {
                        Some(x) if round > 0 => (x - half, x + half),
                        _ => (dim.lo, dim.hi),
                    };
                    let mut trial = best_choices.clone();
                    for cand in candidates(dim, lo, hi, points) {
                        trial[k] = cand;
                        let g = score(&trial);
                        if g > best_gain {
                            best_gain = g;
                            best_choices[k] = cand;
                            improved = true;
                        }
                    }
                }
                if !improved {
                    break;
                }
            }
        }
        (best_gain, best_choices, evals)
    }

    fn dims(&self, ordering: &[usize], cfg: &SearchConfig) -> Vec<Dim> {
        let widen = 2.0 * (1.0 + cfg.amount_upper_bound).ln();
        let amms = self.funded.amms();
        let mut dims = Vec::new();
        for slot in 0..=ordering.len() {
            for (a, amm) in amms.iter().enumerate() {
                let start = (amm.r0() / amm.r1()).ln();
                let p0 = self.oracle.price(amm.pair().t0()).expect("validated game");
                let p1 = self.oracle.price(amm.pair().t1()).expect("validated game");
                let fair = (p1 / p0).ln();
                let snap = ordering.get(slot).and_then(|&u| match &self.txpool[u].kind {
                    TxKind::Deposit { v0, t0, v1, t1 }
                        if Token::from(amm.pair().t0().clone()) == *t0
                            && Token::from(amm.pair().t1().clone()) == *t1 =>
                    {
                        Some((v0 / v1).ln())
                    }
                    _ => None,
                });
                dims.push(Dim { slot, amm: a, lo: start.min(fair) - widen, hi: start.max(fair) + widen, snap });
            }
        }
        dims
    }

    /// Replays one candidate; disabled candidates score zero.
    fn run(&self, ordering: &[usize], dims: &[Dim], choices: &[Choice], record: bool) -> (f64, Vec<Transaction>) {
        let mut seq = Vec::new();
        match self.replay(ordering, dims, choices, record.then_some(&mut seq)) {
            Some(state) => (self.worth(&state) - self.base_worth, seq),
            None => (0.0, Vec::new()),
        }
    }

    /// Final state of a candidate, `None` when some step is rejected.
    fn replay(
        &self,
        ordering: &[usize],
        dims: &[Dim],
        choices: &[Choice],
        mut record: Option<&mut Vec<Transaction>>,
    ) -> Option<State> {
        let mut state = self.funded.clone();
        let n = self.funded.amms().len();
        for slot in 0..=ordering.len() {
            let gap = &choices[slot * n..(slot + 1) * n];
            if gap.iter().filter(|c| c.is_some()).count() > self.per_slot {
                return None;
            }
            for (dim, choice) in dims[slot * n..(slot + 1) * n].iter().zip(gap) {
                debug_assert_eq!(dim.slot, slot);
                let Some(target) = choice else { continue };
                if let Some(tx) = self.miner_swap(&state, dim.amm, *target) {
                    state = state.step_with(&tx, &self.tol).ok()?;
                    if let Some(seq) = record.as_deref_mut() {
                        seq.push(tx);
                    }
                }
            }
            if let Some(&u) = ordering.get(slot) {
                let tx = &self.txpool[u];
                state = state.step_with(tx, &self.tol).ok()?;
                if let Some(seq) = record.as_deref_mut() {
                    seq.push(tx.clone());
                }
            }
        }
        Some(state)
    }

    /// Log reserve ratio of the AMM of `dims[k]` just before its slot's
    /// miner swaps, or `None` when the candidate is disabled earlier.
    fn ratio_before(&self, ordering: &[usize], dims: &[Dim], choices: &[Choice], k: usize) -> Option<f64> {
        let n = self.funded.amms().len();
        let slot = dims[k].slot;
        let mut prefix = choices[..slot * n].to_vec();
        prefix.extend(std::iter::repeat_n(None, (ordering.len() + 1 - slot) * n));
        let state = self.replay(&ordering[..slot], dims, &prefix, None)?;
        let a = &state.amms()[dims[k].amm];
        Some((a.r0() / a.r1()).ln())
    }

    /// Swap moving AMM `amm` to log ratio `target` while keeping its
    /// product; the engine decides what the miner actually receives.
    fn miner_swap(&self, state: &State, amm: usize, target: f64) -> Option<Transaction> {
        let a = &state.amms()[amm];
        let k = a.product();
        let r0 = (k * target.exp()).sqrt();
        let r1 = k / r0;
        let (t0, t1) = (a.pair().t0().clone(), a.pair().t1().clone());
        let tiny = f64::MIN_POSITIVE;
        if r0 > a.r0() {
            Some(Transaction::swap(self.miner.clone(), Direction::Left, r0 - a.r0(), t0, tiny, t1))
        } else if r1 > a.r1() {
            Some(Transaction::swap(self.miner.clone(), Direction::Right, tiny, t0, r1 - a.r1(), t1))
        } else {
            None
        }
    }

    fn worth(&self, state: &State) -> f64 {
        net_worth_or_zero(state, &self.miner, self.oracle).expect("validated game")
    }

    fn score_sequence(&self, txs: &[Transaction]) -> f64 {
        let mut state = self.funded.clone();
        for tx in txs {
            match state.step_with(tx, &self.tol) {
                Ok(next) => state = next,
                Err(_) => return 0.0,
            }
        }
        self.worth(&state) - self.base_worth
    }

    /// Best gain among perturbations of the miner swaps in `txs`: each swap
    /// alone over a local grid of relative steps, then all swaps jointly
    /// by seeded random steps.
    pub fn probe(&self, txs: &[Transaction], cfg: &SearchConfig) -> (f64, Vec<Transaction>, u64) {
        let miner_swaps: Vec<usize> =
            txs.iter().enumerate().filter(|(_, t)| t.user == self.miner && t.is_swap()).map(|(i, _)| i).collect();
        let mut best = (self.score_sequence(txs), txs.to_vec());
        let mut evals = 1u64;
        let mut consider = |seq: Vec<Transaction>, best: &mut (f64, Vec<Transaction>)| {
            let g = self.score_sequence(&seq);
            evals += 1;
            if g > best.0 {
                *best = (g, seq);
            }
        };
        for &i in &miner_swaps {
            for step in PROBE_STEPS {
                let mut seq = txs.to_vec();
                seq[i] = self.scaled(&seq[i], 1.0 + step);
                consider(seq, &mut best);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for _ in 0..cfg.random_probes {
            let mut seq = txs.to_vec();
            for &i in &miner_swaps {
                let step: f64 = rng.gen_range(-1e-3..=1e-3);
                seq[i] = self.scaled(&seq[i], 1.0 + step);
            }
            consider(seq, &mut best);
        }
        (best.0, best.1, evals)
    }

    /// `tx` sending `factor` times as much, with no output floor.
    fn scaled(&self, tx: &Transaction, factor: f64) -> Transaction {
        let rs = resolve_swap(&self.funded, tx).expect("miner swap on an existing AMM");
        let mut v = [f64::MIN_POSITIVE; 2];
        v[rs.dir.index()] = rs.sent() * factor;
        let pair = self.funded.amms()[rs.amm_index].pair();
        Transaction::swap(tx.user.clone(), rs.dir, v[0], pair.t0().clone(), v[1], pair.t1().clone())
    }
}

/// Values tried for one dimension: skip, the deposit snap, and `points`
/// evenly spaced ratios over `[lo, hi]`.
fn candidates(dim: &Dim, lo: f64, hi: f64, points: usize) -> Vec<Choice> {
    let mut out = Vec::with_capacity(points + 2);
    out.push(None);
    if let Some(s) = dim.snap {
        out.push(Some(s));
    }
    let points = points.max(2);
    out.extend((0..points).map(|i| Some(lo + (hi - lo) * i as f64 / (points - 1) as f64)));
    out
}

/// Ratio points per dimension so that the joint grid stays near the budget.
fn coarse_levels(dims: usize, cfg: &SearchConfig) -> usize {
    if dims == 0 {
        return 2;
    }
    let fits = |l: usize| l.checked_pow(dims as u32).is_some_and(|total| total <= cfg.coarse_budget);
    let per_dim = (1..).take_while(|&l| fits(l)).last().unwrap_or(1);
    per_dim.saturating_sub(1).clamp(2, cfg.grid_points_per_dimension)
}

/// Every ordered subset of `0..n`, shortest first, then lexicographic.
fn orderings(n: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::new();
        for prefix in &frontier {
            for i in 0..n {
                if !prefix.contains(&i) {
                    let mut p: Vec<usize> = prefix.clone();
                    p.push(i);
                    next.push(p);
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out.sort_by(|a, b| match a.len().cmp(&b.len()) {
        Ordering::Equal => a.cmp(b),
        o => o,
    });
    out
}
