//! Property bodies shared by the property tests and the acceptance run.

use dagwood::amm::{apply_sequence, Balance, MintedPair, Mode, State, Token, Tolerance, TxKind};
use dagwood::pricing::{
    gains_between, min_minted_price, minted_price, net_worth_or_zero, projected_minted_price, total_wealth, PriceOracle,
};
use dagwood::solver::Solver;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use super::{move_to_ratio, random_trace, user, TxSpec, World, TOKENS};

pub const EPS: f64 = 1e-9;

pub type Check = Result<(), TestCaseError>;

pub fn close(a: f64, b: f64, eps: f64) -> bool {
    (a - b).abs() <= eps * a.abs().max(b.abs()).max(1.0)
}

fn pairs(s: &State) -> Vec<MintedPair> {
    s.amms().iter().map(|a| a.pair().clone()).collect()
}

/// Applies the final layer on behalf of `M`.
fn minimize(state: &State, oracle: &PriceOracle) -> State {
    let solver = Solver::new(user("M"));
    let (balance, layers) = solver.final_layer(state, oracle).unwrap();
    let mut s = state.clone();
    s.credit_balance(&user("M"), &balance);
    for tx in layers.iter().flat_map(|l| &l.txs) {
        s = s.step(tx).unwrap();
    }
    s
}

pub fn zero_sum(w: &World, specs: &[TxSpec]) -> Check {
    let (_, trace) = random_trace(&w.state, &w.users, specs);
    let wealth = total_wealth(&trace[0], &w.oracle).unwrap();
    let gains = gains_between(&trace[0], trace.last().unwrap(), &w.oracle).unwrap();
    let sum: f64 = gains.values().sum();
    prop_assert!(sum.abs() <= 1e-6 * wealth, "sum {}, wealth {}", sum, wealth);
    Ok(())
}

pub fn issuer_neutrality(w: &World, specs: &[TxSpec]) -> Check {
    let (txs, trace) = random_trace(&w.state, &w.users, specs);
    for (i, tx) in txs.iter().enumerate() {
        if tx.is_swap() {
            continue;
        }
        let before = net_worth_or_zero(&trace[i], &tx.user, &w.oracle).unwrap();
        let after = net_worth_or_zero(&trace[i + 1], &tx.user, &w.oracle).unwrap();
        prop_assert!((after - before).abs() <= EPS * before.max(after).max(1.0), "{}: {} -> {}", tx, before, after);
    }
    Ok(())
}

/// Moves the last state of a trace back to the ratio of an earlier one and
/// compares minted prices.
pub fn equal_ratio_equal_price(w: &World, specs: &[TxSpec], pick: usize) -> Check {
    let (_, trace) = random_trace(&w.state, &w.users, specs);
    let earlier = &trace[pick % trace.len()];
    let last = trace.last().unwrap();
    for p in pairs(earlier) {
        let target = earlier.amm(&p).unwrap().ratio();
        let moved = move_to_ratio(last, &p, target, &user("M"));
        prop_assert!(close(moved.amm(&p).unwrap().ratio(), target, EPS));
        let a = minted_price(earlier, &p, &w.oracle).unwrap();
        let b = minted_price(&moved, &p, &w.oracle).unwrap();
        prop_assert!(close(a, b, EPS), "{} vs {}", a, b);
    }
    Ok(())
}

/// Ratio equality and price equality agree between the ends of a trace.
pub fn ratio_price_agree(w: &World, specs: &[TxSpec]) -> Check {
    let (_, trace) = random_trace(&w.state, &w.users, specs);
    let (first, last) = (&trace[0], trace.last().unwrap());
    for p in pairs(first) {
        let (ra, rb) = (first.amm(&p).unwrap().ratio(), last.amm(&p).unwrap().ratio());
        let pa = minted_price(first, &p, &w.oracle).unwrap();
        let pb = minted_price(last, &p, &w.oracle).unwrap();
        prop_assert_eq!(close(ra, rb, EPS), close(pa, pb, EPS), "ratios {} {}, prices {} {}", ra, rb, pa, pb);
    }
    Ok(())
}

pub fn projected_price_invariant(w: &World, specs: &[TxSpec], ratio: f64) -> Check {
    let (_, trace) = random_trace(&w.state, &w.users, specs);
    for p in pairs(&trace[0]) {
        let p0 = projected_minted_price(&trace[0], &p, &w.oracle, ratio).unwrap();
        for s in &trace[1..] {
            let pk = projected_minted_price(s, &p, &w.oracle, ratio).unwrap();
            prop_assert!(close(p0, pk, EPS), "{} vs {}", p0, pk);
        }
    }
    Ok(())
}

pub fn min_price_floor_attained(w: &World, specs: &[TxSpec]) -> Check {
    let (_, trace) = random_trace(&w.state, &w.users, specs);
    for p in pairs(&trace[0]) {
        let floor = min_minted_price(&trace[0], &p, &w.oracle).unwrap();
        for s in &trace {
            prop_assert!(minted_price(s, &p, &w.oracle).unwrap() >= floor * (1.0 - EPS));
        }
        let bottom = minimize(trace.last().unwrap(), &w.oracle);
        let reached = minted_price(&bottom, &p, &w.oracle).unwrap();
        prop_assert!(close(reached, floor, EPS), "{} vs {}", reached, floor);
    }
    Ok(())
}

/// Constant product, atomic conservation, well-formedness and replay
/// determinism over one random trace. Returns the number of transactions
/// attempted.
pub fn engine_invariants(w: &World, specs: &[TxSpec]) -> Result<usize, TestCaseError> {
    let (txs, trace) = random_trace(&w.state, &w.users, specs);
    for (i, tx) in txs.iter().enumerate() {
        if let TxKind::Swap { .. } = tx.kind {
            for amm in trace[i].amms() {
                let after = trace[i + 1].amm(amm.pair()).unwrap();
                let (k0, k1) = (amm.product(), after.product());
                prop_assert!((k0 - k1).abs() <= EPS * k0, "{} -> {} after {}", k0, k1, tx);
            }
        }
    }
    for t in TOKENS {
        let token = Token::Atomic(super::tok(t));
        let s0 = trace[0].supply(&token);
        for s in &trace[1..] {
            let s1 = s.supply(&token);
            prop_assert!((s0 - s1).abs() <= EPS * s0.max(1.0), "{}: {} -> {}", t, s0, s1);
        }
    }
    for s in &trace {
        prop_assert!(s.is_well_formed(), "{}", s);
        prop_assert!(s.wallets().all(|(_, b): (_, &Balance)| b.iter().all(|(_, v)| *v >= 0.0)));
    }
    let a = apply_sequence(&w.state, &txs, Mode::Strict, &Tolerance::default()).unwrap();
    let b = apply_sequence(&w.state, &txs, Mode::Strict, &Tolerance::default()).unwrap();
    prop_assert!(a.trace == b.trace && a.trace == trace, "replay differs");
    Ok(specs.len())
}
