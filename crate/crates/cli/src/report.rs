use std::collections::BTreeMap;
use std::fmt::Write as _;

use dagwood::amm::{Amm, Balance, MintedPair, State, Token, TokenId, UserId};
use dagwood::oracle::OracleReport;
use dagwood::pricing::PriceOracle;
use dagwood::solver::{DagwoodSolution, LayerKind, SolveError};
use serde::{Deserialize, Serialize};

use crate::game_file::{amm_record, balance_record, pair_key, AmmRecord, BalanceRecord, TxRecord};

/// Machine-readable result of `solve`. Replaying `txs` from `trace[0]`
/// reproduces the rest of `trace`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionReport {
    pub miner: String,
    pub predicted_gain: f64,
    pub layers: Vec<LayerRecord>,
    pub txs: Vec<TxRecord>,
    pub miner_balance_naive: BalanceRecord,
    pub miner_balance_minimal: BalanceRecord,
    pub user_gains: BTreeMap<String, f64>,
    pub trace: Vec<StateRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub label: String,
    /// The user transaction the layer is built around.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_tx: Option<TxRecord>,
    /// The AMM a final layer moves.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<String>,
    pub txs: Vec<TxRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateRecord {
    pub amms: Vec<AmmRecord>,
    pub wallets: BTreeMap<String, BalanceRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRecord {
    pub best_gain: f64,
    pub solver_gain: f64,
    pub relative_gap: f64,
    pub evaluations: u64,
    pub probe_gain: Option<f64>,
    pub seed: u64,
    pub best_sequence: Vec<TxRecord>,
}

impl StateRecord {
    pub fn from_state(s: &State) -> Self {
        Self {
            amms: s.amms().iter().map(amm_record).collect(),
            wallets: s.wallets().map(|(u, b)| (u.to_string(), balance_record(b))).collect(),
        }
    }

    pub fn to_state(&self) -> Result<State, String> {
        fn msg(e: impl ToString) -> String {
            e.to_string()
        }
        let mut state = State::new();
        for (user, wallet) in &self.wallets {
            let mut b = Balance::new();
            for (key, v) in wallet {
                b = b.with(Token::parse_key(key).map_err(msg)?, *v);
            }
            state.insert_wallet(UserId::new(user).map_err(msg)?, b).map_err(msg)?;
        }
        for a in &self.amms {
            let pair =
                MintedPair::new(TokenId::new(&a.t0).map_err(msg)?, TokenId::new(&a.t1).map_err(msg)?).map_err(msg)?;
            state.insert_amm(Amm::new(pair, a.r0, a.r1).map_err(msg)?).map_err(msg)?;
        }
        Ok(state)
    }
}

impl From<&OracleReport> for OracleRecord {
    fn from(r: &OracleReport) -> Self {
        Self {
            best_gain: r.best_gain,
            solver_gain: r.solver_gain,
            relative_gap: r.relative_gap,
            evaluations: r.evaluations,
            probe_gain: r.probe_gain,
            seed: r.seed,
            best_sequence: r.best_sequence.iter().map(TxRecord::from_tx).collect(),
        }
    }
}

impl SolutionReport {
    pub fn new(sol: &DagwoodSolution, oracle: &PriceOracle, check: Option<&OracleReport>) -> Result<Self, SolveError> {
        let layers = sol
            .layers
            .iter()
            .map(|l| LayerRecord {
                label: l.label().to_owned(),
                user_tx: l.user_tx().map(TxRecord::from_tx),
                pair: match &l.kind {
                    LayerKind::FinalSwap { pair } => Some(pair_key(pair)),
                    _ => None,
                },
                txs: l.txs.iter().map(TxRecord::from_tx).collect(),
            })
            .collect();
        Ok(Self {
            miner: sol.miner.to_string(),
            predicted_gain: sol.predicted_gain,
            layers,
            txs: sol.txs.iter().map(TxRecord::from_tx).collect(),
            miner_balance_naive: balance_record(&sol.miner_balance_naive),
            miner_balance_minimal: balance_record(&sol.miner_balance_minimal),
            user_gains: sol.user_gains(oracle)?.into_iter().map(|(u, g)| (u.to_string(), g)).collect(),
            trace: sol.trace.iter().map(StateRecord::from_state).collect(),
            oracle: check.map(OracleRecord::from),
        })
    }
}

/// Human-readable summary of a solution.
pub fn render_text(sol: &DagwoodSolution, report: &SolutionReport, precision: usize) -> String {
    let p = precision;
    let mut out = String::new();
    let _ = writeln!(out, "miner {} gains {:.p$}", report.miner, report.predicted_gain);
    let _ = writeln!(out, "layers:");
    for layer in &sol.layers {
        let _ = writeln!(out, "  {layer:.p$}");
    }
    let _ = writeln!(out, "bundle ({} transactions):", sol.txs.len());
    for (i, tx) in sol.txs.iter().enumerate() {
        let _ = writeln!(out, "  {:>2}. {tx:.p$}", i + 1);
    }
    let _ = writeln!(out, "miner balance, naive: {}", balance_text(&report.miner_balance_naive, p));
    let _ = writeln!(out, "miner balance, minimal: {}", balance_text(&report.miner_balance_minimal, p));
    let _ = writeln!(out, "gains:");
    for (user, g) in &report.user_gains {
        let _ = writeln!(out, "  {user}: {g:.p$}");
    }
    if let Some(o) = &report.oracle {
        let _ = writeln!(
            out,
            "oracle: best {:.p$}, solver {:.p$}, relative gap {:.3e}, {} evaluations, seed {}",
            o.best_gain, o.solver_gain, o.relative_gap, o.evaluations, o.seed
        );
        if let Some(probe) = o.probe_gain {
            let _ = writeln!(out, "oracle: best perturbation of the bundle gains {probe:.p$}");
        }
    }
    out
}

pub fn balance_text(b: &BalanceRecord, precision: usize) -> String {
    if b.is_empty() {
        return "{}".into();
    }
    let items: Vec<String> = b.iter().map(|(k, v)| format!("{v:.precision$}:{k}")).collect();
    format!("{{{}}}", items.join(", "))
}
