//! Brute-force cross-check of the solver on small games.
//!
//! The search never uses the solver's closed forms. It enumerates every
//! subset and ordering of the user pool, places a parametric miner swap per
//! AMM in every gap between user transactions, and sweeps the swaps'
//! target reserve ratios over a grid that is refined around the incumbent.
//! Every candidate is replayed through the engine; a disabled candidate
//! scores zero.

mod random;
mod search;

use thiserror::Error;

use crate::amm::{Transaction, TxKind};
use crate::pricing::PricingError;
use crate::solver::{self, DagwoodSolution, GameInput, SolveError};

pub use random::random_small_game;

pub const MAX_AMMS: usize = 2;
pub const MAX_TXPOOL: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub grid_points_per_dimension: usize,
    /// Miner swaps allowed in one gap between user transactions. At most
    /// one per AMM is used, since two swaps on one AMM compose into one.
    pub max_miner_swaps: usize,
    /// Largest miner swap, as a multiple of the AMM's reserve.
    pub amount_upper_bound: f64,
    /// Each round narrows the search window 10x around the incumbent.
    pub refinement_rounds: usize,
    /// Candidates for the initial joint grid of one ordering.
    pub coarse_budget: usize,
    /// Seed for the random perturbations of [`verify_solution`].
    pub seed: u64,
    pub random_probes: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            grid_points_per_dimension: 200,
            max_miner_swaps: 2,
            amount_upper_bound: 3.0,
            refinement_rounds: 3,
            coarse_budget: 4096,
            seed: 0,
            random_probes: 32,
        }
    }
}

impl SearchConfig {
    fn validate(&self) -> Result<(), OracleError> {
        if self.grid_points_per_dimension < 2
            || self.max_miner_swaps == 0
            || !(self.amount_upper_bound.is_finite() && self.amount_upper_bound > 0.0)
            || self.coarse_budget == 0
        {
            return Err(OracleError::InvalidConfig(format!("{self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub best_gain: f64,
    pub best_sequence: Vec<Transaction>,
    pub solver_gain: f64,
    /// `(best_gain - solver_gain) / max(1, |best_gain|)`.
    pub relative_gap: f64,
    pub evaluations: u64,
    /// Best gain among perturbations of the solver's bundle, when probed.
    pub probe_gain: Option<f64>,
    pub seed: u64,
}

impl OracleReport {
    fn new(best_gain: f64, best_sequence: Vec<Transaction>, solver_gain: f64, evaluations: u64, seed: u64) -> Self {
        let relative_gap = relative_gap(best_gain, solver_gain);
        Self { best_gain, best_sequence, solver_gain, relative_gap, evaluations, probe_gain: None, seed }
    }
}

fn relative_gap(best_gain: f64, solver_gain: f64) -> f64 {
    (best_gain - solver_gain) / best_gain.abs().max(1.0)
}

#[derive(Debug, Clone, PartialEq, Error)]
#[allow(clippy::large_enum_variant)]
pub enum OracleError {
    #[error(
        "instance too large for the oracle: {amms} AMMs, {txs} pool transactions (limit {MAX_AMMS}, {MAX_TXPOOL})"
    )]
    InstanceTooLarge { amms: usize, txs: usize },
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Pricing(#[from] PricingError),
}

/// Grid search for the miner's best bundle, compared against [`solver::solve`].
pub fn grid_search_mev(game: &GameInput, cfg: &SearchConfig) -> Result<OracleReport, OracleError> {
    let solution = solver::solve(game)?;
    search_only(game, cfg, solution.predicted_gain)
}

/// Grid search plus a local probe that perturbs every miner swap of `sol`.
pub fn verify_solution(
    game: &GameInput,
    sol: &DagwoodSolution,
    cfg: &SearchConfig,
) -> Result<OracleReport, OracleError> {
    let mut report = search_only(game, cfg, sol.predicted_gain)?;
    let problem = search::Problem::new(game, cfg)?;
    let (probe_gain, probe_seq, probe_evals) = problem.probe(&sol.txs, cfg);
    report.evaluations += probe_evals;
    report.probe_gain = Some(probe_gain);
    if probe_gain > report.best_gain {
        report.best_gain = probe_gain;
        report.best_sequence = probe_seq;
        report.relative_gap = relative_gap(probe_gain, sol.predicted_gain);
    }
    Ok(report)
}

fn search_only(game: &GameInput, cfg: &SearchConfig, solver_gain: f64) -> Result<OracleReport, OracleError> {
    cfg.validate()?;
    let (amms, txs) = (game.state().amms().len(), game.txpool().len());
    if amms > MAX_AMMS || txs > MAX_TXPOOL {
        return Err(OracleError::InstanceTooLarge { amms, txs });
    }
    let problem = search::Problem::new(game, cfg)?;
    let best = problem.search(cfg);
    Ok(OracleReport::new(best.gain, best.sequence, solver_gain, best.evaluations, cfg.seed))
}

/// True when `seq` executes the user transaction `tx`.
pub fn includes(seq: &[Transaction], tx: &Transaction) -> bool {
    seq.iter().any(|t| t == tx)
}

/// Number of redeems in `seq`.
pub fn redeem_count(seq: &[Transaction]) -> usize {
    seq.iter().filter(|t| matches!(t.kind, TxKind::Redeem { .. })).count()
}
