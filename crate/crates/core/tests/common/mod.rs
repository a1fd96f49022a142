//! Generators shared by the integration tests.
#![allow(dead_code)]

pub mod checks;

use dagwood::amm::{swap_output, Amm, Balance, Direction, MintedPair, State, Token, TokenId, Transaction, UserId};
use dagwood::pricing::PriceOracle;
use dagwood::solver::GameInput;
use proptest::prelude::*;

pub fn tok(s: &str) -> TokenId {
    TokenId::new(s).unwrap()
}

pub fn user(s: &str) -> UserId {
    UserId::new(s).unwrap()
}

pub fn pair(a: &str, b: &str) -> MintedPair {
    MintedPair::new(tok(a), tok(b)).unwrap()
}

pub const TOKENS: [&str; 3] = ["a", "b", "c"];
pub const USERS: [&str; 3] = ["U0", "U1", "U2"];

/// A state with one or two AMMs over three tokens, three funded users who
/// share the minted supply, and an oracle.
#[derive(Debug, Clone)]
pub struct World {
    pub state: State,
    pub oracle: PriceOracle,
    pub users: Vec<UserId>,
}

pub fn world() -> impl Strategy<Value = World> {
    (
        prop::array::uniform4(1.0f64..1000.0),
        any::<bool>(),
        prop::array::uniform3(0.1f64..1000.0),
        prop::array::uniform9(0.0f64..2000.0),
        prop::array::uniform6(0.05f64..1.0),
    )
        .prop_map(|(reserves, two_amms, prices, holdings, shares)| {
            let users: Vec<UserId> = USERS.iter().map(|u| user(u)).collect();
            let mut pairs = vec![(pair("a", "b"), reserves[0], reserves[1])];
            if two_amms {
                pairs.push((pair("b", "c"), reserves[2], reserves[3]));
            }
            let mut wallets: Vec<Balance> = (0..3)
                .map(|i| {
                    let mut b = Balance::new();
                    for (j, t) in TOKENS.iter().enumerate() {
                        b = b.with(tok(t), holdings[3 * i + j]);
                    }
                    b
                })
                .collect();
            let mut state = State::new();
            for (k, (p, r0, r1)) in pairs.into_iter().enumerate() {
                let supply = (r0 * r1).sqrt();
                let w = &shares[3 * k..3 * k + 3];
                let total: f64 = w.iter().sum();
                for (i, wallet) in wallets.iter_mut().enumerate() {
                    wallet.credit(Token::Minted(p.clone()), supply * w[i] / total);
                }
                state = state.with_amm(Amm::new(p, r0, r1).unwrap());
            }
            for (u, w) in users.iter().zip(wallets) {
                state = state.with_wallet(u.clone(), w);
            }
            let oracle = PriceOracle::new(TOKENS.iter().zip(prices).map(|(t, p)| (tok(t), p))).unwrap();
            World { state, oracle, users }
        })
}

/// Abstract transaction, turned into a concrete one against the state it
/// will be applied to so that a useful share of them are enabled.
#[derive(Debug, Clone, Copy)]
pub struct TxSpec {
    pub kind: u8,
    pub user: usize,
    pub amm: usize,
    pub dir: bool,
    pub frac: f64,
    pub slack: f64,
}

pub fn tx_spec() -> impl Strategy<Value = TxSpec> {
    (0u8..6, 0usize..3, 0usize..2, any::<bool>(), 0.001f64..1.2, 0.5f64..1.1)
        .prop_map(|(kind, user, amm, dir, frac, slack)| TxSpec { kind, user, amm, dir, frac, slack })
}

pub fn tx_specs(n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<TxSpec>> {
    prop::collection::vec(tx_spec(), n)
}

/// Builds the transaction `spec` describes, sized against `state`.
///
/// Kinds 0-2 are swaps asking for `slack` times the current output, 3 is a
/// deposit at the current ratio (off by `slack` when it exceeds 1.05), 4 a
/// redeem and 5 a deposit on the pair `(a, c)`, which creates it first.
pub fn realize(state: &State, users: &[UserId], spec: &TxSpec) -> Transaction {
    let u = users[spec.user % users.len()].clone();
    let empty = Balance::new();
    let wallet = state.wallet(&u).unwrap_or(&empty);
    let have = |t: &TokenId| wallet.atomic(t).max(1e-3);
    let amm = &state.amms()[spec.amm % state.amms().len()];
    let (t0, t1) = (amm.pair().t0().clone(), amm.pair().t1().clone());
    match spec.kind {
        0..=2 => {
            let dir = if spec.dir { Direction::Right } else { Direction::Left };
            let d = dir.index();
            let sent = spec.frac * have(amm.pair().token(d));
            let out = swap_output(amm.reserve(d), amm.reserve(1 - d), sent) * spec.slack;
            let mut v = [0.0; 2];
            v[d] = sent;
            v[1 - d] = out;
            Transaction::swap(u, dir, v[0], t0, v[1], t1)
        }
        3 => {
            let v0 = spec.frac * have(&t0);
            let mut v1 = v0 * amm.r1() / amm.r0();
            if spec.slack > 1.05 {
                v1 *= spec.slack;
            }
            Transaction::deposit(u, v0, t0, v1, t1)
        }
        4 => {
            let lp = wallet.get(&Token::Minted(amm.pair().clone()));
            let v = if lp > 0.0 { spec.frac * lp } else { spec.frac };
            Transaction::redeem(u, v, amm.pair().clone())
        }
        _ => {
            let p = pair("a", "c");
            let (v0, v1) = match state.amm(&p) {
                Some(existing) => {
                    let v0 = spec.frac * have(&tok("a"));
                    (v0, v0 * existing.r1() / existing.r0())
                }
                None => (spec.frac * have(&tok("a")), spec.slack * have(&tok("c")) * 0.5),
            };
            Transaction::deposit(u, v0, tok("a"), v1, tok("c"))
        }
    }
}

/// Applies the realized specs in turn, skipping rejected ones. Returns the
/// applied transactions and the trace of states.
pub fn random_trace(start: &State, users: &[UserId], specs: &[TxSpec]) -> (Vec<Transaction>, Vec<State>) {
    let mut txs = Vec::new();
    let mut trace = vec![start.clone()];
    for spec in specs {
        let current = trace.last().unwrap();
        let tx = realize(current, users, spec);
        if let Ok(next) = current.step(&tx) {
            txs.push(tx);
            trace.push(next);
        }
    }
    (txs, trace)
}

/// Example 1 and 2 setting: AMM `(t0, t1)` at `(100, 100)` with prices
/// 1000 and users A (swap), B (deposit), C (redeem).
pub fn example_state() -> State {
    let lp = pair("t0", "t1");
    State::new()
        .with_wallet(user("A"), Balance::new().with(tok("t0"), 40.0))
        .with_wallet(user("B"), Balance::new().with(tok("t0"), 30.0).with(tok("t1"), 40.0))
        .with_wallet(user("C"), Balance::new().with(lp.clone(), 10.0))
        .with_wallet(user("LP"), Balance::new().with(lp.clone(), 90.0))
        .with_amm(Amm::new(lp, 100.0, 100.0).unwrap())
}

pub fn example_oracle() -> PriceOracle {
    PriceOracle::new([(tok("t0"), 1000.0), (tok("t1"), 1000.0)]).unwrap()
}

pub fn example_swap() -> Transaction {
    Transaction::swap(user("A"), Direction::Left, 40.0, tok("t0"), 35.0, tok("t1"))
}

pub fn example_deposit() -> Transaction {
    Transaction::deposit(user("B"), 30.0, tok("t0"), 40.0, tok("t1"))
}

pub fn example_redeem() -> Transaction {
    Transaction::redeem(user("C"), 10.0, pair("t0", "t1"))
}

pub fn example_game(txpool: Vec<Transaction>) -> GameInput {
    GameInput::new(example_state(), txpool, example_oracle(), user("M")).unwrap()
}

pub fn example_1() -> GameInput {
    example_game(vec![example_swap()])
}

pub fn example_2() -> GameInput {
    example_game(vec![example_swap(), example_deposit(), example_redeem()])
}

/// Single-swap game from the classic sandwich scenario: 20:t0 for at
/// least 15:t1 on `(100, 100)`.
pub fn classic_game() -> GameInput {
    let lp = pair("t0", "t1");
    let state = State::new()
        .with_wallet(user("A"), Balance::new().with(tok("t0"), 20.0))
        .with_wallet(user("LP"), Balance::new().with(lp.clone(), 100.0))
        .with_amm(Amm::new(lp, 100.0, 100.0).unwrap());
    let tx = Transaction::swap(user("A"), Direction::Left, 20.0, tok("t0"), 15.0, tok("t1"));
    GameInput::new(state, vec![tx], example_oracle(), user("M")).unwrap()
}

/// Every permutation of `items`.
pub fn permutations<T: Clone>(items: &[T]) -> Vec<Vec<T>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head.clone());
            out.push(tail);
        }
    }
    out
}

/// Funds `miner` and swaps AMM `p` to reserve ratio `ratio` (r0/r1 in
/// stored order), keeping its product.
pub fn move_to_ratio(state: &State, p: &MintedPair, ratio: f64, miner: &UserId) -> State {
    let amm = state.amm(p).unwrap();
    let k = amm.product();
    let r0 = (k * ratio).sqrt();
    let r1 = k / r0;
    let (t0, t1) = (amm.pair().t0().clone(), amm.pair().t1().clone());
    let tiny = f64::MIN_POSITIVE;
    let tx = if r0 > amm.r0() {
        Transaction::swap(miner.clone(), Direction::Left, r0 - amm.r0(), t0.clone(), tiny, t1)
    } else if r1 > amm.r1() {
        Transaction::swap(miner.clone(), Direction::Right, tiny, t0.clone(), r1 - amm.r1(), t1.clone())
    } else {
        return state.clone();
    };
    let mut funded = state.clone();
    for (t, v) in tx.inputs() {
        funded.credit(miner, t, v);
    }
    funded.step(&tx).unwrap()
}

/// A solvable game on a generated world: up to `max_txs` user transactions
/// sized against the initial state, users funded for them.
pub fn game(max_txs: usize) -> impl Strategy<Value = GameInput> {
    (world(), tx_specs(0..max_txs + 1)).prop_map(|(w, specs)| {
        let txpool = specs
            .iter()
            .map(|s| {
                // pool transactions must use existing pairs
                let s = if s.kind == 5 { TxSpec { kind: 0, ..*s } } else { *s };
                realize(&w.state, &w.users, &s)
            })
            .collect();
        GameInput::new(w.state, txpool, w.oracle, user("M")).unwrap().with_funded_users()
    })
}

/// Single-swap game on a generated world.
pub fn single_swap_game() -> impl Strategy<Value = GameInput> {
    (world(), tx_spec()).prop_map(|(w, s)| {
        let tx = realize(&w.state, &w.users, &TxSpec { kind: 0, ..s });
        GameInput::new(w.state, vec![tx], w.oracle, user("M")).unwrap().with_funded_users()
    })
}
