use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use dagwood::amm::{apply_sequence, MintedPair, Mode, State, StepOutcome, Tolerance, Transaction};
use dagwood::oracle::{verify_solution, SearchConfig};
use dagwood::pricing::{gains_between, minted_price, PriceOracle};
use dagwood::solver::Solver;

use crate::error::CliError;
use crate::game_file::{pair_key, parse_txs, GameFile};
use crate::report::{render_text, SolutionReport};

#[derive(Debug, Parser)]
#[command(name = "dagwood", version, about = "Optimal sandwich bundles on constant-product AMMs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the miner's bundle for a game file.
    Solve(SolveArgs),
    /// Replay a transaction list step by step.
    Trace(TraceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Game file.
    pub game: PathBuf,
    /// Top up every user to the total their own transactions send.
    #[arg(long)]
    pub auto_fund_users: bool,
    /// Relative tolerance for invariant and slippage checks.
    #[arg(long, default_value_t = 1e-9)]
    pub eps: f64,
    /// Decimals in text output.
    #[arg(long, default_value_t = 4)]
    pub precision: usize,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    /// Cross-check the bundle with the grid-search oracle.
    #[arg(long)]
    pub verify: bool,
    /// Seed for the oracle's random perturbations.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Format of standard output.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Also write the JSON report to this file.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[command(flatten)]
    pub common: Common,
    /// JSON list of transactions, or a solve report whose bundle is
    /// replayed. Defaults to the game's own pool.
    #[arg(long)]
    pub txs: Option<PathBuf>,
    /// Emit a CSV table of reserves, minted prices and gains per step.
    #[arg(long)]
    pub csv: bool,
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(args) => solve(&args, out),
        Command::Trace(args) => trace(&args, out),
    }
}

fn tolerance(common: &Common) -> Result<Tolerance, CliError> {
    if !(common.eps.is_finite() && common.eps >= 0.0) {
        return Err(CliError::invalid(&common.game, "--eps", format!("{} is not a non-negative number", common.eps)));
    }
    Ok(Tolerance { num: common.eps, ..Tolerance::default() })
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(|e| CliError::Output(e.to_string()))
}

pub fn solve(args: &SolveArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let path = args.common.game.as_path();
    let game = GameFile::load(path)?.game(path, args.common.auto_fund_users)?;
    let solver = Solver::new(game.miner().clone()).with_tolerance(tolerance(&args.common)?);
    let sol = solver.solve(&game).map_err(|source| CliError::Solve { path: path.to_owned(), source })?;
    let check = if args.verify {
        let cfg = SearchConfig { seed: args.seed, ..SearchConfig::default() };
        Some(verify_solution(&game, &sol, &cfg).map_err(|source| CliError::Oracle { path: path.to_owned(), source })?)
    } else {
        None
    };
    let report = SolutionReport::new(&sol, game.oracle(), check.as_ref())
        .map_err(|source| CliError::Solve { path: path.to_owned(), source })?;
    let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    if let Some(file) = &args.output {
        std::fs::write(file, &json).map_err(|source| CliError::Io { path: file.clone(), source })?;
    }
    match args.format {
        Format::Json => emit(out, &json),
        Format::Text => emit(out, &render_text(&sol, &report, args.common.precision)),
    }
}

pub fn trace(args: &TraceArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let path = args.common.game.as_path();
    let file = GameFile::load(path)?;
    let (mut state, oracle) = file.state(path)?;
    let txs = match &args.txs {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| CliError::Io { path: p.clone(), source })?;
            parse_txs(&text, p)?
        }
        None => file.txpool(path)?,
    };
    if args.common.auto_fund_users {
        for tx in &txs {
            for (token, v) in tx.inputs() {
                state.credit(&tx.user, token, v);
            }
        }
    }
    let replay = apply_sequence(&state, &txs, Mode::Audit, &tolerance(&args.common)?).expect("audit mode never fails");
    let table = Table::new(&replay.trace, &txs, &oracle);
    let rendered = if args.csv { table.csv()? } else { table.text(args.common.precision) };
    emit(out, &rendered)?;
    let failed = replay.outcomes.iter().position(|o| matches!(o, StepOutcome::Rejected(_)));
    match (failed, replay.first_error()) {
        (Some(i), Some(e)) => Err(CliError::Step { path: path.to_owned(), step: i + 1, source: e.clone() }),
        _ => Ok(()),
    }
}

/// One row per state of a replay.
struct Table<'a> {
    trace: &'a [State],
    txs: &'a [Transaction],
    oracle: &'a PriceOracle,
    pairs: Vec<MintedPair>,
    users: Vec<String>,
}

impl<'a> Table<'a> {
    fn new(trace: &'a [State], txs: &'a [Transaction], oracle: &'a PriceOracle) -> Self {
        let pairs: BTreeSet<MintedPair> =
            trace.iter().flat_map(|s| s.amms().iter().map(|a| a.pair().clone())).collect();
        let users: BTreeSet<String> = trace.iter().flat_map(|s| s.users().map(|u| u.to_string())).collect();
        Self { trace, txs, oracle, pairs: pairs.into_iter().collect(), users: users.into_iter().collect() }
    }

    fn label(&self, step: usize) -> String {
        if step == 0 {
            "initial".into()
        } else {
            format!("{:.4}", self.txs[step - 1])
        }
    }

    /// Reserves in stored order and the minted price, when the AMM exists.
    fn amm(&self, step: usize, pair: &MintedPair) -> Option<(f64, f64, Option<f64>)> {
        let s = &self.trace[step];
        s.amm(pair).map(|a| (a.r0(), a.r1(), minted_price(s, pair, self.oracle).ok()))
    }

    fn gains(&self, step: usize) -> Vec<Option<f64>> {
        let g = gains_between(&self.trace[0], &self.trace[step], self.oracle).ok();
        self.users
            .iter()
            .map(|u| g.as_ref().and_then(|g| g.iter().find(|(k, _)| k.as_str() == u).map(|(_, v)| *v)))
            .collect()
    }

    fn text(&self, p: usize) -> String {
        let mut out = String::new();
        for step in 0..self.trace.len() {
            out += &format!("step {step}: {}\n", self.label(step));
            for pair in &self.pairs {
                if let Some((r0, r1, price)) = self.amm(step, pair) {
                    let stored = self.trace[step].amm(pair).expect("present").pair().clone();
                    let price = price.map_or("n/a".into(), |v| format!("{v:.p$}"));
                    out += &format!("  {stored}: reserves ({r0:.p$}, {r1:.p$}), minted price {price}\n");
                }
            }
            let gains: Vec<String> = self
                .users
                .iter()
                .zip(self.gains(step))
                .filter_map(|(u, g)| g.map(|g| format!("{u} {g:+.p$}")))
                .collect();
            out += &format!("  gains: {}\n", gains.join(", "));
        }
        out
    }

    fn csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["step".to_owned(), "tx".to_owned()];
        for pair in &self.pairs {
            let key = pair_key(pair);
            header.extend([format!("{key}.r0"), format!("{key}.r1"), format!("{key}.price")]);
        }
        header.extend(self.users.iter().map(|u| format!("{u}.gain")));
        let fail = |e: csv::Error| CliError::Output(e.to_string());
        w.write_record(&header).map_err(fail)?;
        let cell = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
        for step in 0..self.trace.len() {
            let mut row = vec![step.to_string(), self.label(step)];
            for pair in &self.pairs {
                // columns follow the normalized key order
                let amm = self.amm(step, pair).map(|(r0, r1, price)| {
                    let stored = self.trace[step].amm(pair).expect("present").pair();
                    if stored.same_order(&pair.normalized()) {
                        (r0, r1, price)
                    } else {
                        (r1, r0, price)
                    }
                });
                row.push(cell(amm.map(|a| a.0)));
                row.push(cell(amm.map(|a| a.1)));
                row.push(cell(amm.and_then(|a| a.2)));
            }
            row.extend(self.gains(step).into_iter().map(cell));
            w.write_record(&row).map_err(fail)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Reads the game at `path`, for tests and tooling.
pub fn load_game(path: &Path, auto_fund_users: bool) -> Result<dagwood::solver::GameInput, CliError> {
    GameFile::load(path)?.game(path, auto_fund_users)
}
