use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::amm::{Amm, Balance, Direction, MintedPair, State, TokenId, Transaction, UserId};
use crate::pricing::PriceOracle;
use crate::solver::GameInput;

/// A reproducible single-AMM game with up to two user transactions.
///
/// Reserves are drawn from `[50, 500]` and prices from `[1, 2000]`. Swaps
/// send 5-50% of the input reserve and ask for 50-120% of the fair output
/// at oracle prices. Deposits are off the pool ratio by a log-uniform
/// factor in `[0.3, 3]`. Redeems return 5-30% of the user's minted tokens.
/// Every user is funded for its own transactions.
pub fn random_small_game(seed: u64) -> GameInput {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t0 = TokenId::new("t0").expect("valid id");
    let t1 = TokenId::new("t1").expect("valid id");
    let pair = MintedPair::new(t0.clone(), t1.clone()).expect("distinct tokens");
    let r: [f64; 2] = [rng.gen_range(50.0..=500.0), rng.gen_range(50.0..=500.0)];
    let p = [rng.gen_range(1.0..=2000.0), rng.gen_range(1.0..=2000.0)];
    let supply = (r[0] * r[1]).sqrt();

    let mut state = State::new().with_amm(Amm::new(pair.clone(), r[0], r[1]).expect("positive reserves"));
    let mut lp_left = supply;
    let mut txpool = Vec::new();
    for i in 0..rng.gen_range(0..=2) {
        let user = UserId::new(&format!("U{i}")).expect("valid id");
        let mut wallet = Balance::new();
        let roll: f64 = rng.gen();
        let tx = if roll < 0.6 {
            let dir = if rng.gen_bool(0.5) { Direction::Left } else { Direction::Right };
            let d = dir.index();
            let mut v = [0.0; 2];
            v[d] = rng.gen_range(0.05..=0.5) * r[d];
            v[1 - d] = v[d] * p[d] / p[1 - d] * rng.gen_range(0.5..=1.2);
            Transaction::swap(user.clone(), dir, v[0], t0.clone(), v[1], t1.clone())
        } else if roll < 0.85 {
            let w = rng.gen_range(0.3f64.ln()..=3f64.ln()).exp();
            let v0 = rng.gen_range(0.05..=0.5) * r[0];
            let v1 = v0 * r[1] / r[0] * w;
            Transaction::deposit(user.clone(), v0, t0.clone(), v1, t1.clone())
        } else {
            let held = 0.2 * supply;
            lp_left -= held;
            wallet = wallet.with(pair.clone(), held);
            Transaction::redeem(user.clone(), held * rng.gen_range(0.05..=0.3), pair.clone())
        };
        state.insert_wallet(user, wallet).expect("fresh user");
        txpool.push(tx);
    }
    state.insert_wallet(UserId::new("LP").expect("valid id"), Balance::new().with(pair, lp_left)).expect("fresh user");
    let oracle = PriceOracle::new([(t0, p[0]), (t1, p[1])]).expect("positive prices");
    GameInput::new(state, txpool, oracle, UserId::new("M").expect("valid id"))
        .expect("generated games are valid")
        .with_funded_users()
}
